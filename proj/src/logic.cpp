#include "csl/logic.hpp"

#include <cassert>

namespace csl {

namespace {

LRef make(LExpr node) { return std::make_shared<const LExpr>(std::move(node)); }

const LRef& true_ref() {
    static const LRef t = make({LKind::BoolConst, 0, true, "", false});
    return t;
}

const LRef& false_ref() {
    static const LRef f = make({LKind::BoolConst, 0, false, "", false});
    return f;
}

bool int_const(const LRef& e, const BigInt** out) {
    if (e->kind != LKind::IntConst) return false;
    *out = &e->int_value;
    return true;
}

} // namespace

LRef mk_int(BigInt v) {
    LExpr node{LKind::IntConst, std::move(v), false, "", false};
    return make(std::move(node));
}

LRef mk_bool(bool v) { return v ? true_ref() : false_ref(); }

LRef mk_sym(std::string name, bool is_bool) {
    LExpr node{LKind::Sym, 0, false, std::move(name), is_bool};
    return make(std::move(node));
}

bool is_true(const LRef& e) { return e->kind == LKind::BoolConst && e->bool_value; }
bool is_false(const LRef& e) { return e->kind == LKind::BoolConst && !e->bool_value; }

LRef mk_neg(LRef e) {
    if (e->kind == LKind::IntConst) return mk_int(-e->int_value);
    LExpr node{LKind::Unary};
    node.uop = UnaryOp::Neg;
    node.a = std::move(e);
    return make(std::move(node));
}

LRef mk_not(LRef e) {
    if (e->kind == LKind::BoolConst) return mk_bool(!e->bool_value);
    if (e->kind == LKind::Unary && e->uop == UnaryOp::Not) return e->a;
    LExpr node{LKind::Unary};
    node.uop = UnaryOp::Not;
    node.a = std::move(e);
    return make(std::move(node));
}

LRef mk_binary(BinaryOp op, LRef lhs, LRef rhs) {
    assert(op != BinaryOp::Pow && "exponentiation is folded away before logic");
    const BigInt* l = nullptr;
    const BigInt* r = nullptr;
    switch (op) {
    case BinaryOp::Add:
    case BinaryOp::Sub:
    case BinaryOp::Mul:
        if (int_const(lhs, &l) && int_const(rhs, &r)) {
            if (op == BinaryOp::Add) return mk_int(*l + *r);
            if (op == BinaryOp::Sub) return mk_int(*l - *r);
            return mk_int(*l * *r);
        }
        break;
    case BinaryOp::Div:
    case BinaryOp::Mod:
        if (int_const(lhs, &l) && int_const(rhs, &r) && *r != 0)
            return mk_int(op == BinaryOp::Div ? big_div_trunc(*l, *r)
                                              : big_mod_trunc(*l, *r));
        break;
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
        if (int_const(lhs, &l) && int_const(rhs, &r)) {
            bool v = op == BinaryOp::Lt   ? *l < *r
                     : op == BinaryOp::Le ? *l <= *r
                     : op == BinaryOp::Gt ? *l > *r
                                          : *l >= *r;
            return mk_bool(v);
        }
        break;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
        if (int_const(lhs, &l) && int_const(rhs, &r))
            return mk_bool(op == BinaryOp::Eq ? *l == *r : *l != *r);
        if (lhs->kind == LKind::BoolConst && rhs->kind == LKind::BoolConst)
            return mk_bool((lhs->bool_value == rhs->bool_value) ==
                           (op == BinaryOp::Eq));
        if (lhs == rhs) return mk_bool(op == BinaryOp::Eq);
        break;
    case BinaryOp::And:
        if (is_true(lhs)) return rhs;
        if (is_true(rhs)) return lhs;
        if (is_false(lhs) || is_false(rhs)) return false_ref();
        break;
    case BinaryOp::Or:
        if (is_false(lhs)) return rhs;
        if (is_false(rhs)) return lhs;
        if (is_true(lhs) || is_true(rhs)) return true_ref();
        break;
    case BinaryOp::Implies:
        if (is_true(lhs)) return rhs;
        if (is_false(lhs) || is_true(rhs)) return true_ref();
        if (is_false(rhs)) return mk_not(std::move(lhs));
        break;
    case BinaryOp::Pow:
        break;
    }
    LExpr node{LKind::Binary};
    node.bop = op;
    node.a = std::move(lhs);
    node.b = std::move(rhs);
    return make(std::move(node));
}

LRef mk_ite(LRef cond, LRef then_e, LRef else_e) {
    if (is_true(cond)) return then_e;
    if (is_false(cond)) return else_e;
    if (then_e == else_e) return then_e;
    LExpr node{LKind::Ite};
    node.a = std::move(cond);
    node.b = std::move(then_e);
    node.c = std::move(else_e);
    return make(std::move(node));
}

LRef mk_and_all(const std::vector<LRef>& conjuncts) {
    LRef out = true_ref();
    for (auto it = conjuncts.rbegin(); it != conjuncts.rend(); ++it)
        out = mk_and(*it, std::move(out));
    return out;
}

bool lexpr_equal(const LRef& a, const LRef& b) {
    if (a == b) return true;
    if (!a || !b || a->kind != b->kind) return false;
    switch (a->kind) {
    case LKind::IntConst: return a->int_value == b->int_value;
    case LKind::BoolConst: return a->bool_value == b->bool_value;
    case LKind::Sym: return a->name == b->name && a->sym_is_bool == b->sym_is_bool;
    case LKind::Unary: return a->uop == b->uop && lexpr_equal(a->a, b->a);
    case LKind::Binary:
        return a->bop == b->bop && lexpr_equal(a->a, b->a) && lexpr_equal(a->b, b->b);
    case LKind::Ite:
        return lexpr_equal(a->a, b->a) && lexpr_equal(a->b, b->b) &&
               lexpr_equal(a->c, b->c);
    }
    return false;
}

LRef subst(const LRef& e, const std::map<std::string, LRef>& replacements) {
    switch (e->kind) {
    case LKind::IntConst:
    case LKind::BoolConst:
        return e;
    case LKind::Sym: {
        auto it = replacements.find(e->name);
        return it == replacements.end() ? e : it->second;
    }
    case LKind::Unary: {
        LRef a = subst(e->a, replacements);
        if (a == e->a) return e;
        return e->uop == UnaryOp::Not ? mk_not(std::move(a)) : mk_neg(std::move(a));
    }
    case LKind::Binary: {
        LRef a = subst(e->a, replacements);
        LRef b = subst(e->b, replacements);
        if (a == e->a && b == e->b) return e;
        return mk_binary(e->bop, std::move(a), std::move(b));
    }
    case LKind::Ite: {
        LRef a = subst(e->a, replacements);
        LRef b = subst(e->b, replacements);
        LRef c = subst(e->c, replacements);
        if (a == e->a && b == e->b && c == e->c) return e;
        return mk_ite(std::move(a), std::move(b), std::move(c));
    }
    }
    return e;
}

void collect_syms(const LRef& e, std::map<std::string, bool>& out) {
    switch (e->kind) {
    case LKind::IntConst:
    case LKind::BoolConst:
        return;
    case LKind::Sym:
        out[e->name] = e->sym_is_bool;
        return;
    case LKind::Unary:
        collect_syms(e->a, out);
        return;
    case LKind::Binary:
        collect_syms(e->a, out);
        collect_syms(e->b, out);
        return;
    case LKind::Ite:
        collect_syms(e->a, out);
        collect_syms(e->b, out);
        collect_syms(e->c, out);
        return;
    }
}

// ---------------------------------------------------------------------------
// Printing, with the surface language's precedence.
// ---------------------------------------------------------------------------

namespace {

int prec_of(BinaryOp op) {
    switch (op) {
    case BinaryOp::Implies: return 1;
    case BinaryOp::Or: return 2;
    case BinaryOp::And: return 3;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
        return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub:
        return 5;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod:
        return 6;
    case BinaryOp::Pow:
        return 7;
    }
    return 0;
}

void print(const LRef& e, int parent_prec, std::string& out) {
    switch (e->kind) {
    case LKind::IntConst:
        if (e->int_value < 0) {
            // Negative literals bind like a unary minus.
            if (parent_prec > 7) out += "(" + big_str(e->int_value) + ")";
            else out += big_str(e->int_value);
        } else {
            out += big_str(e->int_value);
        }
        return;
    case LKind::BoolConst:
        out += e->bool_value ? "true" : "false";
        return;
    case LKind::Sym:
        out += e->name;
        return;
    case LKind::Unary:
        out += unary_op_text(e->uop);
        print(e->a, 8, out);
        return;
    case LKind::Binary: {
        int prec = prec_of(e->bop);
        bool parens = prec < parent_prec;
        bool right_assoc = e->bop == BinaryOp::Implies;
        if (parens) out += "(";
        print(e->a, right_assoc ? prec + 1 : prec, out);
        out += " ";
        out += binary_op_text(e->bop);
        out += " ";
        print(e->b, right_assoc ? prec : prec + 1, out);
        if (parens) out += ")";
        return;
    }
    case LKind::Ite:
        out += "ite(";
        print(e->a, 0, out);
        out += ", ";
        print(e->b, 0, out);
        out += ", ";
        print(e->c, 0, out);
        out += ")";
        return;
    }
}

} // namespace

std::string to_string(const LRef& e) {
    std::string out;
    print(e, 0, out);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

std::optional<LogicValue> eval_lexpr(const LRef& e, const LEnv& env) {
    auto as_int = [&](const LRef& x) -> std::optional<BigInt> {
        std::optional<LogicValue> v = eval_lexpr(x, env);
        if (!v || v->is_bool) return std::nullopt;
        return v->int_value;
    };
    auto as_bool = [&](const LRef& x) -> std::optional<bool> {
        std::optional<LogicValue> v = eval_lexpr(x, env);
        if (!v || !v->is_bool) return std::nullopt;
        return v->bool_value;
    };
    switch (e->kind) {
    case LKind::IntConst: return LogicValue::of_int(e->int_value);
    case LKind::BoolConst: return LogicValue::of_bool(e->bool_value);
    case LKind::Sym: {
        auto it = env.find(e->name);
        if (it == env.end() || it->second.is_bool != e->sym_is_bool)
            return std::nullopt;
        return it->second;
    }
    case LKind::Unary: {
        if (e->uop == UnaryOp::Neg) {
            std::optional<BigInt> v = as_int(e->a);
            if (!v) return std::nullopt;
            return LogicValue::of_int(-*v);
        }
        std::optional<bool> v = as_bool(e->a);
        if (!v) return std::nullopt;
        return LogicValue::of_bool(!*v);
    }
    case LKind::Binary: {
        switch (e->bop) {
        case BinaryOp::And: {
            std::optional<bool> l = as_bool(e->a);
            if (!l) return std::nullopt;
            if (!*l) return LogicValue::of_bool(false);
            std::optional<bool> r = as_bool(e->b);
            if (!r) return std::nullopt;
            return LogicValue::of_bool(*r);
        }
        case BinaryOp::Or: {
            std::optional<bool> l = as_bool(e->a);
            if (!l) return std::nullopt;
            if (*l) return LogicValue::of_bool(true);
            std::optional<bool> r = as_bool(e->b);
            if (!r) return std::nullopt;
            return LogicValue::of_bool(*r);
        }
        case BinaryOp::Implies: {
            std::optional<bool> l = as_bool(e->a);
            if (!l) return std::nullopt;
            if (!*l) return LogicValue::of_bool(true);
            std::optional<bool> r = as_bool(e->b);
            if (!r) return std::nullopt;
            return LogicValue::of_bool(*r);
        }
        case BinaryOp::Eq:
        case BinaryOp::Ne: {
            std::optional<LogicValue> l = eval_lexpr(e->a, env);
            std::optional<LogicValue> r = eval_lexpr(e->b, env);
            if (!l || !r || l->is_bool != r->is_bool) return std::nullopt;
            return LogicValue::of_bool((*l == *r) == (e->bop == BinaryOp::Eq));
        }
        default: {
            std::optional<BigInt> l = as_int(e->a);
            std::optional<BigInt> r = as_int(e->b);
            if (!l || !r) return std::nullopt;
            switch (e->bop) {
            case BinaryOp::Add: return LogicValue::of_int(*l + *r);
            case BinaryOp::Sub: return LogicValue::of_int(*l - *r);
            case BinaryOp::Mul: return LogicValue::of_int(*l * *r);
            case BinaryOp::Div:
                if (*r == 0) return std::nullopt;
                return LogicValue::of_int(big_div_trunc(*l, *r));
            case BinaryOp::Mod:
                if (*r == 0) return std::nullopt;
                return LogicValue::of_int(big_mod_trunc(*l, *r));
            case BinaryOp::Lt: return LogicValue::of_bool(*l < *r);
            case BinaryOp::Le: return LogicValue::of_bool(*l <= *r);
            case BinaryOp::Gt: return LogicValue::of_bool(*l > *r);
            case BinaryOp::Ge: return LogicValue::of_bool(*l >= *r);
            default: return std::nullopt;
            }
        }
        }
    }
    case LKind::Ite: {
        std::optional<bool> c = as_bool(e->a);
        if (!c) return std::nullopt;
        return eval_lexpr(*c ? e->b : e->c, env);
    }
    }
    return std::nullopt;
}

} // namespace csl
