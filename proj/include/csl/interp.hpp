#pragma once

#include "csl/resolve.hpp"
#include "csl/vcgen.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace csl {

// ---------------------------------------------------------------------------
// Runtime values
// ---------------------------------------------------------------------------

struct ValueField;

/// Concrete runtime value: exact integer, boolean, record, or tuple.
/// Records keep their fields in declaration order.
struct Value {
    enum class Kind { Int, Bool, Record, Tuple };

    Kind kind = Kind::Int;
    BigInt int_value;
    bool bool_value = false;
    std::vector<ValueField> fields; // Record
    std::vector<Value> elems;       // Tuple

    static Value of_int(BigInt v);
    static Value of_bool(bool v);
    static Value record(std::vector<ValueField> fields);
    static Value tuple(std::vector<Value> elems);

    const Value& field(const std::string& name) const;
    Value& field(const std::string& name);

    bool operator==(const Value& o) const;
    bool operator!=(const Value& o) const { return !(*this == o); }
};

struct ValueField {
    std::string name;
    Value value;
};

/// Literal syntax, re-parseable by parse_value_text:
/// `42`, `true`, `{pot: 7, wager: {value: 0, guess: false}}`, `(1, 2)`.
std::string value_str(const Value& v);

/// Parses the literal syntax above. Field order is as written; use
/// conform_value to put a record in declaration order. Returns nullopt and
/// sets `error` on malformed input.
std::optional<Value> parse_value_text(const std::string& text, std::string& error);

/// Structurally matches `v` against a declared type: checks scalar kinds and
/// record field sets (recursively), reorders record fields to declaration
/// order. Constraints are NOT checked here. nullopt + `error` on mismatch.
std::optional<Value> conform_value(const Value& v, const std::string& type_name,
                                   const ResolvedModule& m, std::string& error);

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

/// Why a call reverted. The last five mirror ObligationKind one to one;
/// Precondition is interpreter-only: the *entry* requires of the called
/// function failed, which is the caller's fault and not a defect of the
/// function itself (verification checks it at call sites instead).
enum class ViolationKind {
    Precondition,
    CalleePrecondition,
    Postcondition,
    TypeConstraint,
    RecordInvariant,
    DivByZero,
};

const char* violation_kind_name(ViolationKind kind);

/// The violation kind a refuted obligation of this kind predicts.
ViolationKind violation_of(ObligationKind kind);

/// A failed runtime check. kind/span pairs (other than Precondition) land on
/// the same spots vcgen places obligations, so refutations can be replayed.
struct RuntimeViolation {
    ViolationKind kind = ViolationKind::TypeConstraint;
    SourceSpan span;
    std::string message;
    std::vector<Value> offending;
};

/// Result of a call: returned values, or a revert. Reverting leaves every
/// caller-held value untouched (arguments are passed by value).
struct CallOutcome {
    bool reverted = false;
    std::vector<Value> values;
    RuntimeViolation violation; // meaningful iff reverted

    static CallOutcome returned(std::vector<Value> values);
    static CallOutcome revert(RuntimeViolation v);
};

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Runs `fn` on `args` with full contract checking, in order: argument type
/// constraints and record invariants, each requires clause, the body (divisor
/// checks, callee requires at calls — callees run concretely —, constrained
/// writes after each statement), and at return every return-type constraint
/// and ensures clause. The first failed check reverts.
///
/// `args` must match the parameter types structurally (conform_value);
/// anything else throws std::invalid_argument.
CallOutcome eval_function(const ResolvedModule& m, const std::string& fn,
                          const std::vector<Value>& args);

/// As eval_function, but trusts the arguments to be in declaration order and
/// to satisfy their parameter types already, skipping the conform pass and
/// the entry validity checks. InputEnumerator outputs qualify by
/// construction; anything else should go through eval_function.
CallOutcome eval_function_prevalidated(const ResolvedModule& m,
                                       const std::string& fn,
                                       const std::vector<Value>& args);

/// True iff `v` satisfies every where clause of `t`, recursively over record
/// fields. `v` must structurally match `t`.
bool check_type_invariant(const Value& v, const TypeExpr& t, const ResolvedModule& m);
bool check_type_invariant(const Value& v, const std::string& type_name,
                          const ResolvedModule& m);

// ---------------------------------------------------------------------------
// Exhaustive input enumeration (the small-scope oracle)
// ---------------------------------------------------------------------------

/// Streams every type-valid input tuple for a function whose parameters are
/// finitely enumerable (bounded integers, booleans, records thereof), each
/// exactly once, in a fixed order (leaves count up, low to high). Inputs
/// violating a type constraint or record invariant are pruned; requires
/// clauses are NOT applied — callers decide what to do with reverts.
class InputEnumerator {
public:
    /// `max_domain` caps the raw (pre-pruning) domain size; above it the
    /// enumerator refuses to start rather than run forever.
    InputEnumerator(const ResolvedModule& m, const FunctionDecl& fn,
                    BigInt max_domain = BigInt(1) << 32);

    /// Empty when enumerable; otherwise says which parameter is the problem.
    const std::string& error() const { return error_; }
    bool ok() const { return error_.empty(); }

    /// Raw domain size: the product of all leaf domain sizes before pruning.
    const BigInt& domain_size() const { return domain_size_; }

    /// Next valid input tuple, or nullopt when exhausted (or not ok()).
    std::optional<std::vector<Value>> next();

private:
    struct Leaf {
        size_t param = 0;
        std::vector<std::string> path;
        std::string type_name;
        bool is_bool = false;
        BigInt lo, hi; // bools: 0..1
        BigInt cur;
        Value* slot = nullptr; // this leaf's position inside proto_
    };
    /// One pruning clause with its evaluation environment prebuilt: `binds`
    /// copies the current candidate values out of proto_ into the fixed env
    /// slots, so a check evaluation allocates nothing once warmed up.
    struct Check {
        const Expr* clause = nullptr;
        std::map<std::string, Value> env;
        std::vector<std::pair<Value*, const Value*>> binds; // env slot <- proto
    };

    bool place(size_t level, bool fresh);
    void sync_slot(Leaf& leaf);
    bool checks_pass(size_t level);
    bool seek();
    std::vector<size_t> leaves_under(size_t param,
                                     const std::vector<std::string>& path) const;
    Value skeleton(const std::string& type_name) const;
    Value* slot_at(size_t param, const std::vector<std::string>& path);

    const ResolvedModule& m_;
    const FunctionDecl& fn_;
    std::string error_;
    BigInt domain_size_ = 1;
    std::vector<Leaf> leaves_;
    // one prototype value per parameter; place() writes leaves in place and
    // next() hands out whole copies
    std::vector<Value> proto_;
    std::vector<std::vector<Check>> checks_at_; // keyed by last mentioned leaf
    size_t level_ = 0;
    bool started_ = false;
    bool done_ = false;
};

} // namespace csl
