#pragma once

#include "csl/ast.hpp"
#include "csl/number.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace csl {

// ---------------------------------------------------------------------------
// Quantifier-free formulas over integer and boolean symbols. Obligations are
// expressed here, independent of the surface syntax: record values have been
// flattened to one symbol per scalar leaf ("casino.wager.value"), and there
// is no exponentiation. Nodes are immutable and shared.
// ---------------------------------------------------------------------------

struct LExpr;
using LRef = std::shared_ptr<const LExpr>;

enum class LKind { IntConst, BoolConst, Sym, Unary, Binary, Ite };

struct LExpr {
    LKind kind;
    BigInt int_value;       // IntConst
    bool bool_value = false; // BoolConst
    std::string name;       // Sym
    bool sym_is_bool = false; // Sym sort
    UnaryOp uop{};          // Unary
    BinaryOp bop{};         // Binary
    LRef a, b, c;           // operands: a=operand/lhs/cond, b=rhs/then, c=else
};

// Constructors perform light constant folding (neutral elements, literal
// arithmetic, double negation); they never change satisfiability.
LRef mk_int(BigInt v);
LRef mk_bool(bool v);
LRef mk_sym(std::string name, bool is_bool);
LRef mk_neg(LRef e);
LRef mk_not(LRef e);
LRef mk_binary(BinaryOp op, LRef lhs, LRef rhs); // op != Pow
LRef mk_ite(LRef cond, LRef then_e, LRef else_e);

inline LRef mk_add(LRef l, LRef r) { return mk_binary(BinaryOp::Add, std::move(l), std::move(r)); }
inline LRef mk_sub(LRef l, LRef r) { return mk_binary(BinaryOp::Sub, std::move(l), std::move(r)); }
inline LRef mk_mul(LRef l, LRef r) { return mk_binary(BinaryOp::Mul, std::move(l), std::move(r)); }
inline LRef mk_div(LRef l, LRef r) { return mk_binary(BinaryOp::Div, std::move(l), std::move(r)); }
inline LRef mk_mod(LRef l, LRef r) { return mk_binary(BinaryOp::Mod, std::move(l), std::move(r)); }
inline LRef mk_eq(LRef l, LRef r) { return mk_binary(BinaryOp::Eq, std::move(l), std::move(r)); }
inline LRef mk_ne(LRef l, LRef r) { return mk_binary(BinaryOp::Ne, std::move(l), std::move(r)); }
inline LRef mk_lt(LRef l, LRef r) { return mk_binary(BinaryOp::Lt, std::move(l), std::move(r)); }
inline LRef mk_le(LRef l, LRef r) { return mk_binary(BinaryOp::Le, std::move(l), std::move(r)); }
inline LRef mk_gt(LRef l, LRef r) { return mk_binary(BinaryOp::Gt, std::move(l), std::move(r)); }
inline LRef mk_ge(LRef l, LRef r) { return mk_binary(BinaryOp::Ge, std::move(l), std::move(r)); }
inline LRef mk_and(LRef l, LRef r) { return mk_binary(BinaryOp::And, std::move(l), std::move(r)); }
inline LRef mk_or(LRef l, LRef r) { return mk_binary(BinaryOp::Or, std::move(l), std::move(r)); }
inline LRef mk_implies(LRef l, LRef r) {
    return mk_binary(BinaryOp::Implies, std::move(l), std::move(r));
}

/// Right-nested conjunction; mk_bool(true) for an empty list.
LRef mk_and_all(const std::vector<LRef>& conjuncts);

bool is_true(const LRef& e);
bool is_false(const LRef& e);

bool lexpr_equal(const LRef& a, const LRef& b);

/// Simultaneous capture-free substitution of symbols by formulas.
LRef subst(const LRef& e, const std::map<std::string, LRef>& replacements);

/// All symbols in `e`, name -> is_bool. Merges into `out`.
void collect_syms(const LRef& e, std::map<std::string, bool>& out);

std::string to_string(const LRef& e);

// ---------------------------------------------------------------------------
// Concrete evaluation, used to replay solver models and to cross-check the
// generator against the interpreter.
// ---------------------------------------------------------------------------

struct LogicValue {
    bool is_bool = false;
    BigInt int_value;
    bool bool_value = false;

    static LogicValue of_int(BigInt v) { return {false, std::move(v), false}; }
    static LogicValue of_bool(bool v) { return {true, 0, v}; }

    bool operator==(const LogicValue& o) const {
        if (is_bool != o.is_bool) return false;
        return is_bool ? bool_value == o.bool_value : int_value == o.int_value;
    }
};

using LEnv = std::map<std::string, LogicValue>;

/// Evaluates with truncating `/` and `%` and short-circuit logical operators
/// (including `==>`); nullopt on an unbound symbol, a sort mismatch, or an
/// unguarded division by zero.
std::optional<LogicValue> eval_lexpr(const LRef& e, const LEnv& env);

} // namespace csl
