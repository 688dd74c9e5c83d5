#pragma once

#include "csl/logic.hpp"
#include "csl/resolve.hpp"

#include <string>
#include <vector>

namespace csl {

enum class ObligationKind {
    CalleePrecondition,
    Postcondition,
    TypeConstraint,
    RecordInvariant,
    DivByZero,
};

const char* obligation_kind_name(ObligationKind kind);

/// One proof obligation. `formula` is the closed implication
/// `hypotheses ==> goal`; the pieces are kept separate so the SMT layer can
/// assert hypotheses and refute the goal without re-splitting.
struct Obligation {
    std::string id; // "<function>.<kind>.<ordinal>", ordinal per kind in site order
    std::string function;
    ObligationKind kind;
    std::vector<LRef> hypotheses;
    LRef goal;
    LRef formula;
    SourceSpan span;
    std::string description;
};

/// All proof obligations of `fn`, in program order. Record values are
/// represented as one symbol per scalar leaf ("casino.wager.value"); calls
/// are summarized modularly (assert requires, havoc results, assume ensures
/// and result validity).
std::vector<Obligation> generate_obligations(const ResolvedModule& module,
                                             const FunctionDecl& fn);

/// Whole module, functions in declaration order.
std::vector<Obligation> generate_obligations(const ResolvedModule& module);

/// Weakest precondition of one statement of `fn` (or a block of them)
/// against `post`, under the same symbol naming as generate_obligations.
/// `stmt` must belong to `fn`'s body. A `return` maps every post to true:
/// obligations at returns are generated as their own sites, so no path
/// continues past one. Exposed for tests and debugging.
LRef wp(const ResolvedModule& module, const FunctionDecl& fn, const Stmt& stmt,
        LRef post);
LRef wp_block(const ResolvedModule& module, const FunctionDecl& fn,
              const std::vector<Stmt>& stmts, LRef post);

} // namespace csl
