#include "csl/interp.hpp"

#include <cassert>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace csl {

// ---------------------------------------------------------------------------
// Value
// ---------------------------------------------------------------------------

Value Value::of_int(BigInt v) {
    Value out;
    out.kind = Kind::Int;
    out.int_value = std::move(v);
    return out;
}

Value Value::of_bool(bool v) {
    Value out;
    out.kind = Kind::Bool;
    out.bool_value = v;
    return out;
}

Value Value::record(std::vector<ValueField> fields) {
    Value out;
    out.kind = Kind::Record;
    out.fields = std::move(fields);
    return out;
}

Value Value::tuple(std::vector<Value> elems) {
    Value out;
    out.kind = Kind::Tuple;
    out.elems = std::move(elems);
    return out;
}

const Value& Value::field(const std::string& name) const {
    for (const ValueField& f : fields)
        if (f.name == name) return f.value;
    assert(false && "field resolved by typecheck");
    return *this;
}

Value& Value::field(const std::string& name) {
    for (ValueField& f : fields)
        if (f.name == name) return f.value;
    assert(false && "field resolved by typecheck");
    return *this;
}

bool Value::operator==(const Value& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
    case Kind::Int: return int_value == o.int_value;
    case Kind::Bool: return bool_value == o.bool_value;
    case Kind::Record: {
        if (fields.size() != o.fields.size()) return false;
        for (size_t i = 0; i < fields.size(); ++i)
            if (fields[i].name != o.fields[i].name ||
                !(fields[i].value == o.fields[i].value))
                return false;
        return true;
    }
    case Kind::Tuple: {
        if (elems.size() != o.elems.size()) return false;
        for (size_t i = 0; i < elems.size(); ++i)
            if (!(elems[i] == o.elems[i])) return false;
        return true;
    }
    }
    return false;
}

std::string value_str(const Value& v) {
    switch (v.kind) {
    case Value::Kind::Int: return big_str(v.int_value);
    case Value::Kind::Bool: return v.bool_value ? "true" : "false";
    case Value::Kind::Record: {
        std::string out = "{";
        for (size_t i = 0; i < v.fields.size(); ++i) {
            if (i) out += ", ";
            out += v.fields[i].name + ": " + value_str(v.fields[i].value);
        }
        return out + "}";
    }
    case Value::Kind::Tuple: {
        std::string out = "(";
        for (size_t i = 0; i < v.elems.size(); ++i) {
            if (i) out += ", ";
            out += value_str(v.elems[i]);
        }
        return out + ")";
    }
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Value literal parsing
// ---------------------------------------------------------------------------

namespace {

struct ValueParser {
    const std::string& text;
    size_t pos = 0;
    std::string error;

    explicit ValueParser(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos])))
            ++pos;
    }

    bool fail(const std::string& msg) {
        if (error.empty())
            error = msg + " at offset " + std::to_string(pos);
        return false;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return fail(std::string("expected '") + c + "'");
    }

    std::optional<Value> parse_value() {
        skip_ws();
        if (pos >= text.size()) {
            fail("expected a value");
            return std::nullopt;
        }
        char c = text[pos];
        if (c == '{') return parse_record();
        if (c == '(') return parse_tuple();
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) return parse_int();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::string word = parse_ident();
            if (word == "true") return Value::of_bool(true);
            if (word == "false") return Value::of_bool(false);
            fail("unknown literal '" + word + "'");
            return std::nullopt;
        }
        fail("expected a value");
        return std::nullopt;
    }

    std::string parse_ident() {
        skip_ws();
        size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        return text.substr(start, pos - start);
    }

    std::optional<Value> parse_int() {
        size_t start = pos;
        if (text[pos] == '-') ++pos;
        size_t digits = pos;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])))
            ++pos;
        if (pos == digits) {
            fail("expected digits");
            return std::nullopt;
        }
        return Value::of_int(BigInt(text.substr(start, pos - start)));
    }

    std::optional<Value> parse_record() {
        ++pos; // '{'
        std::vector<ValueField> fields;
        skip_ws();
        while (true) {
            std::string name = parse_ident();
            if (name.empty()) {
                fail("expected a field name");
                return std::nullopt;
            }
            if (!eat(':')) return std::nullopt;
            auto v = parse_value();
            if (!v) return std::nullopt;
            fields.push_back({std::move(name), std::move(*v)});
            skip_ws();
            if (pos < text.size() && text[pos] == ',') {
                ++pos;
                continue;
            }
            break;
        }
        if (!eat('}')) return std::nullopt;
        return Value::record(std::move(fields));
    }

    std::optional<Value> parse_tuple() {
        ++pos; // '('
        std::vector<Value> elems;
        while (true) {
            auto v = parse_value();
            if (!v) return std::nullopt;
            elems.push_back(std::move(*v));
            skip_ws();
            if (pos < text.size() && text[pos] == ',') {
                ++pos;
                continue;
            }
            break;
        }
        if (!eat(')')) return std::nullopt;
        return Value::tuple(std::move(elems));
    }
};

} // namespace

std::optional<Value> parse_value_text(const std::string& text, std::string& error) {
    ValueParser p(text);
    auto v = p.parse_value();
    if (v) {
        p.skip_ws();
        if (p.pos != text.size()) {
            p.fail("trailing input");
            v.reset();
        }
    }
    if (!v) error = p.error;
    return v;
}

std::optional<Value> conform_value(const Value& v, const std::string& type_name,
                                   const ResolvedModule& m, std::string& error) {
    Type shape = m.shape_of(type_name);
    if (shape.kind == TypeKind::Int) {
        if (v.kind != Value::Kind::Int) {
            error = "expected an integer for '" + type_name + "', got " + value_str(v);
            return std::nullopt;
        }
        return v;
    }
    if (shape.kind == TypeKind::Bool) {
        if (v.kind != Value::Kind::Bool) {
            error = "expected a boolean for '" + type_name + "', got " + value_str(v);
            return std::nullopt;
        }
        return v;
    }
    assert(shape.kind == TypeKind::Record);
    if (v.kind != Value::Kind::Record) {
        error = "expected a record for '" + type_name + "', got " + value_str(v);
        return std::nullopt;
    }
    const TypeDecl* decl = m.find_type(shape.record_name);
    if (v.fields.size() != decl->fields.size()) {
        error = "'" + decl->name + "' has " + std::to_string(decl->fields.size()) +
                " field(s), value has " + std::to_string(v.fields.size());
        return std::nullopt;
    }
    std::vector<ValueField> out;
    for (const auto& f : decl->fields) {
        const ValueField* found = nullptr;
        for (const ValueField& vf : v.fields)
            if (vf.name == f.name) {
                found = &vf;
                break;
            }
        if (!found) {
            error = "missing field '" + f.name + "' of '" + decl->name + "'";
            return std::nullopt;
        }
        auto sub = conform_value(found->value, f.type.name, m, error);
        if (!sub) return std::nullopt;
        out.push_back({f.name, std::move(*sub)});
    }
    return Value::record(std::move(out));
}

// ---------------------------------------------------------------------------
// Outcomes
// ---------------------------------------------------------------------------

const char* violation_kind_name(ViolationKind kind) {
    switch (kind) {
    case ViolationKind::Precondition: return "Precondition";
    case ViolationKind::CalleePrecondition: return "CalleePrecondition";
    case ViolationKind::Postcondition: return "Postcondition";
    case ViolationKind::TypeConstraint: return "TypeConstraint";
    case ViolationKind::RecordInvariant: return "RecordInvariant";
    case ViolationKind::DivByZero: return "DivByZero";
    }
    return "?";
}

ViolationKind violation_of(ObligationKind kind) {
    switch (kind) {
    case ObligationKind::CalleePrecondition: return ViolationKind::CalleePrecondition;
    case ObligationKind::Postcondition: return ViolationKind::Postcondition;
    case ObligationKind::TypeConstraint: return ViolationKind::TypeConstraint;
    case ObligationKind::RecordInvariant: return ViolationKind::RecordInvariant;
    case ObligationKind::DivByZero: return ViolationKind::DivByZero;
    }
    return ViolationKind::TypeConstraint;
}

CallOutcome CallOutcome::returned(std::vector<Value> values) {
    CallOutcome out;
    out.values = std::move(values);
    return out;
}

CallOutcome CallOutcome::revert(RuntimeViolation v) {
    CallOutcome out;
    out.reverted = true;
    out.violation = std::move(v);
    return out;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

namespace {

struct ViolationError {
    RuntimeViolation v;
};

[[noreturn]] void violate(ViolationKind kind, const SourceSpan& span,
                          std::string message, std::vector<Value> offending = {}) {
    throw ViolationError{{kind, span, std::move(message), std::move(offending)}};
}

using Env = std::map<std::string, Value>;
using VarTypes = std::map<std::string, std::string>;

std::string join_path(const std::string& prefix, const std::string& rest) {
    if (prefix.empty()) return rest;
    if (rest.empty()) return prefix;
    return prefix + "." + rest;
}

std::string path_str(const std::vector<std::string>& path) {
    std::string out;
    for (const std::string& p : path) out = join_path(out, p);
    return out;
}

Value eval_expr(const ResolvedModule& m, const Expr& e, const Env& env);

bool truth(const ResolvedModule& m, const Expr& e, const Env& env) {
    Value v = eval_expr(m, e, env);
    assert(v.kind == Value::Kind::Bool);
    return v.bool_value;
}

/// Resolves a var.field.field... chain to a pointer into `env` without
/// copying the records along the way. Null when the root is not an
/// environment variable (a constant, a call result) — callers fall back to
/// full evaluation.
const Value* eval_path_ref(const Expr& e, const Env& env) {
    if (e.is<VarRef>()) {
        auto it = env.find(e.as<VarRef>().name);
        return it == env.end() ? nullptr : &it->second;
    }
    if (e.is<FieldAccess>()) {
        const auto& fa = e.as<FieldAccess>();
        const Value* base = eval_path_ref(*fa.base, env);
        if (!base || base->kind != Value::Kind::Record) return nullptr;
        for (const ValueField& f : base->fields)
            if (f.name == fa.field) return &f.value;
        return nullptr;
    }
    return nullptr;
}

Value eval_expr(const ResolvedModule& m, const Expr& e, const Env& env) {
    if (e.is<IntLit>()) return Value::of_int(e.as<IntLit>().value);
    if (e.is<BoolLit>()) return Value::of_bool(e.as<BoolLit>().value);
    if (e.is<VarRef>()) {
        const std::string& n = e.as<VarRef>().name;
        auto it = env.find(n);
        if (it != env.end()) return it->second;
        const ConstValue* c = m.find_const(n);
        if (!c) throw std::logic_error("unbound name in evaluation: " + n);
        return c->type.kind == TypeKind::Bool ? Value::of_bool(c->bool_value)
                                              : Value::of_int(c->int_value);
    }
    if (e.is<FieldAccess>()) {
        if (const Value* p = eval_path_ref(e, env)) return *p;
        const auto& fa = e.as<FieldAccess>();
        Value base = eval_expr(m, *fa.base, env);
        return base.field(fa.field);
    }
    if (e.is<UnaryExpr>()) {
        const auto& u = e.as<UnaryExpr>();
        Value v = eval_expr(m, *u.operand, env);
        if (u.op == UnaryOp::Neg) return Value::of_int(-v.int_value);
        return Value::of_bool(!v.bool_value);
    }
    if (e.is<BinaryExpr>()) {
        const auto& b = e.as<BinaryExpr>();
        // short-circuit forms first: their right side may be guarded
        if (b.op == BinaryOp::And)
            return Value::of_bool(truth(m, *b.lhs, env) && truth(m, *b.rhs, env));
        if (b.op == BinaryOp::Or)
            return Value::of_bool(truth(m, *b.lhs, env) || truth(m, *b.rhs, env));
        if (b.op == BinaryOp::Implies)
            return Value::of_bool(!truth(m, *b.lhs, env) || truth(m, *b.rhs, env));
        Value l = eval_expr(m, *b.lhs, env);
        Value r = eval_expr(m, *b.rhs, env);
        switch (b.op) {
        case BinaryOp::Add: return Value::of_int(l.int_value + r.int_value);
        case BinaryOp::Sub: return Value::of_int(l.int_value - r.int_value);
        case BinaryOp::Mul: return Value::of_int(l.int_value * r.int_value);
        case BinaryOp::Div:
        case BinaryOp::Mod:
            if (r.int_value == 0)
                violate(ViolationKind::DivByZero, e.span,
                        std::string("divisor of '") + binary_op_text(b.op) +
                            "' evaluated to zero",
                        {l});
            return Value::of_int(b.op == BinaryOp::Div
                                     ? big_div_trunc(l.int_value, r.int_value)
                                     : big_mod_trunc(l.int_value, r.int_value));
        case BinaryOp::Lt: return Value::of_bool(l.int_value < r.int_value);
        case BinaryOp::Le: return Value::of_bool(l.int_value <= r.int_value);
        case BinaryOp::Gt: return Value::of_bool(l.int_value > r.int_value);
        case BinaryOp::Ge: return Value::of_bool(l.int_value >= r.int_value);
        case BinaryOp::Eq: return Value::of_bool(l == r);
        case BinaryOp::Ne: return Value::of_bool(!(l == r));
        default:
            assert(false && "`**` lives only in const initializers");
            return {};
        }
    }
    if (e.is<CallExpr>()) {
        const auto& c = e.as<CallExpr>();
        const PropertyDecl* prop = m.find_property(c.callee);
        assert(prop && "function calls are handled at statement level");
        Env penv;
        for (size_t i = 0; i < c.args.size(); ++i)
            penv[prop->params[i].name] = eval_expr(m, *c.args[i], env);
        return eval_expr(m, prop->body, penv);
    }
    if (e.is<RecordLit>()) {
        assert(e.type.kind == TypeKind::Record);
        const TypeDecl* decl = m.find_type(e.type.record_name);
        const auto& lit = e.as<RecordLit>();
        // evaluate in written order, store in declaration order
        std::map<std::string, Value> vals;
        for (const auto& f : lit.fields) vals.emplace(f.name, eval_expr(m, *f.value, env));
        std::vector<ValueField> fields;
        for (const auto& f : decl->fields)
            fields.push_back({f.name, std::move(vals.at(f.name))});
        return Value::record(std::move(fields));
    }
    assert(false && "tuples are handled at statement level");
    return {};
}

const Value& value_at(const Value& v, const std::vector<std::string>& path) {
    const Value* cur = &v;
    for (const std::string& p : path) cur = &cur->field(p);
    return *cur;
}

/// First failed check wins: TypeConstraint per constrained leaf in
/// declaration order, then RecordInvariant per segment, root first — the
/// exact order vcgen emits the matching obligations.
void check_value_validity(const ResolvedModule& m, const Value& v,
                          const std::string& type_name, const SourceSpan& span,
                          const std::string& role) {
    for (const LeafField& leaf : m.leaf_fields(type_name)) {
        const Value& lv = value_at(v, leaf.path);
        for (const ScalarConstraint& c : m.scalar_constraints(leaf.type_name)) {
            Env env;
            env[c.binder] = lv;
            if (!truth(m, *c.clause, env)) {
                std::string where =
                    leaf.path.empty() ? role
                                      : "field '" + path_str(leaf.path) + "' of " + role;
                violate(ViolationKind::TypeConstraint, span,
                        where + " is not a valid '" + leaf.type_name + "' (value " +
                            value_str(lv) + ")",
                        {lv});
            }
        }
    }
    for (const RecordSegment& seg : m.record_segments(type_name)) {
        if (seg.decl->wheres.empty()) continue;
        const Value& sv = value_at(v, seg.path);
        Env env;
        for (const auto& f : seg.decl->fields) env[f.name] = sv.field(f.name);
        for (const Expr& w : seg.decl->wheres)
            if (!truth(m, w, env)) {
                std::string where =
                    seg.path.empty() ? role
                                     : "field '" + path_str(seg.path) + "' of " + role;
                violate(ViolationKind::RecordInvariant, span,
                        where + " violates the invariant of '" + seg.decl->name + "'",
                        {sv});
            }
    }
}

class Interp {
public:
    explicit Interp(const ResolvedModule& m) : m_(m) {}

    /// Body + return protocol; `env` holds exactly the parameters, already
    /// checked valid and requires-satisfying by the caller.
    std::vector<Value> run_body(const FunctionDecl& fn, Env env) {
        Env entry = env;
        VarTypes vt;
        for (const Param& p : fn.params) vt[p.name] = p.type.name;
        std::vector<Value> out;
        if (!exec_block(fn, fn.body, env, vt, entry, out))
            check_ensures(fn, entry, {}); // fell off the end: no return values
        return out;
    }

private:
    // ---- shared shape queries (same rules vcgen applies) ----

    const CallExpr* fn_call(const Expr& e) const {
        if (!e.is<CallExpr>()) return nullptr;
        const auto& c = e.as<CallExpr>();
        return m_.find_function(c.callee) ? &c : nullptr;
    }

    static bool collect_bare_path(const Expr& e, std::vector<std::string>& out) {
        if (e.is<VarRef>()) {
            out.push_back(e.as<VarRef>().name);
            return true;
        }
        if (e.is<FieldAccess>()) {
            const auto& fa = e.as<FieldAccess>();
            if (!collect_bare_path(*fa.base, out)) return false;
            out.push_back(fa.field);
            return true;
        }
        return false;
    }

    const std::string& field_type(const std::string& record_type,
                                  const std::string& field) const {
        const Type& shape = m_.shape_of(record_type);
        const TypeDecl* decl = m_.find_type(shape.record_name);
        for (const auto& f : decl->fields)
            if (f.name == field) return f.type.name;
        assert(false && "field resolved by typecheck");
        static const std::string none;
        return none;
    }

    const std::string& type_at_path(const std::vector<std::string>& path,
                                    const VarTypes& vt) const {
        const std::string* cur = &vt.at(path[0]);
        for (size_t i = 1; i < path.size(); ++i) cur = &field_type(*cur, path[i]);
        return *cur;
    }

    const std::string* declared_type_of(const Expr& e, const VarTypes& vt) const {
        std::vector<std::string> path;
        if (!collect_bare_path(e, path)) return nullptr;
        if (!vt.count(path[0])) return nullptr;
        return &type_at_path(path, vt);
    }

    // ---- execution ----

    Value eval(const Expr& e, const Env& env) const { return eval_expr(m_, e, env); }

    static const Value& read_path(const Env& env, const std::vector<std::string>& path) {
        const Value* cur = &env.at(path[0]);
        for (size_t i = 1; i < path.size(); ++i) cur = &cur->field(path[i]);
        return *cur;
    }

    static void write_path(Env& env, const std::vector<std::string>& path, Value v) {
        Value* cur = &env[path[0]];
        for (size_t i = 1; i < path.size(); ++i) cur = &cur->field(path[i]);
        *cur = std::move(v);
    }

    struct Wt {
        std::vector<std::string> path;
        std::string type_name;
        const Expr* rhs = nullptr; // null when the value is a call result
        std::string rhs_type;
    };

    bool write_is_same_type(const Wt& t, const VarTypes& vt) const {
        if (!t.rhs) return t.rhs_type == t.type_name;
        const std::string* dt = declared_type_of(*t.rhs, vt);
        return dt && *dt == t.type_name;
    }

    bool exec_block(const FunctionDecl& fn, const std::vector<Stmt>& stmts, Env& env,
                    VarTypes vt, const Env& entry, std::vector<Value>& out) {
        for (const Stmt& stmt : stmts)
            if (exec_stmt(fn, stmt, env, vt, entry, out)) return true;
        return false;
    }

    bool exec_stmt(const FunctionDecl& fn, const Stmt& stmt, Env& env, VarTypes& vt,
                   const Env& entry, std::vector<Value>& out) {
        if (stmt.is<VarDeclStmt>()) {
            const auto& d = stmt.as<VarDeclStmt>();
            std::vector<Wt> wts;
            if (const CallExpr* call = fn_call(d.init)) {
                std::vector<Value> rets = do_call(*call, d.init.span, env, vt);
                const FunctionDecl* callee = m_.find_function(call->callee);
                for (size_t i = 0; i < d.vars.size(); ++i) {
                    wts.push_back({{d.vars[i].name},
                                   d.vars[i].type.name,
                                   nullptr,
                                   callee->returns[i].type.name});
                    env[d.vars[i].name] = std::move(rets[i]);
                }
            } else {
                env[d.vars[0].name] = eval(d.init, env);
                wts.push_back({{d.vars[0].name}, d.vars[0].type.name, &d.init, ""});
            }
            for (const auto& b : d.vars) vt[b.name] = b.type.name;
            statement_effects(wts, env, vt, stmt.span);
            return false;
        }
        if (stmt.is<AssignStmt>()) {
            const auto& a = stmt.as<AssignStmt>();
            std::vector<Value> vals;
            std::vector<Wt> wts;
            if (const CallExpr* call = fn_call(a.value)) {
                vals = do_call(*call, a.value.span, env, vt);
                const FunctionDecl* callee = m_.find_function(call->callee);
                for (size_t i = 0; i < a.targets.size(); ++i)
                    wts.push_back({a.targets[i].path,
                                   type_at_path(a.targets[i].path, vt),
                                   nullptr,
                                   callee->returns[i].type.name});
            } else if (a.value.is<TupleExpr>()) {
                const auto& tup = a.value.as<TupleExpr>();
                for (size_t i = 0; i < a.targets.size(); ++i) {
                    vals.push_back(eval(*tup.elems[i], env));
                    wts.push_back({a.targets[i].path,
                                   type_at_path(a.targets[i].path, vt),
                                   tup.elems[i].get(),
                                   ""});
                }
            } else {
                vals.push_back(eval(a.value, env));
                wts.push_back({a.targets[0].path,
                               type_at_path(a.targets[0].path, vt),
                               &a.value,
                               ""});
            }
            // every right side is evaluated before any target is written:
            // a tuple assignment is one atomic step
            for (size_t i = 0; i < a.targets.size(); ++i)
                write_path(env, a.targets[i].path, std::move(vals[i]));
            statement_effects(wts, env, vt, stmt.span);
            return false;
        }
        if (stmt.is<ReturnStmt>()) {
            const auto& r = stmt.as<ReturnStmt>();
            const CallExpr* call = r.values.size() == 1 ? fn_call(r.values[0]) : nullptr;
            std::vector<Value> vals;
            if (call) {
                vals = do_call(*call, r.values[0].span, env, vt);
                forwarded_return_checks(fn, vals, r.values[0].span);
            } else {
                for (const Expr& v : r.values) vals.push_back(eval(v, env));
                return_checks(fn, r, vals, vt);
            }
            check_ensures(fn, entry, vals);
            out = std::move(vals);
            return true;
        }
        const auto& s = stmt.as<IfStmt>();
        if (truth(m_, s.cond, env))
            return exec_block(fn, s.then_body, env, vt, entry, out);
        return exec_block(fn, s.else_body, env, vt, entry, out);
    }

    std::vector<Value> do_call(const CallExpr& call, const SourceSpan& call_span,
                               const Env& env, const VarTypes& vt) {
        const FunctionDecl* callee = m_.find_function(call.callee);
        std::vector<Value> args;
        for (const ExprPtr& a : call.args) args.push_back(eval(*a, env));
        for (size_t i = 0; i < call.args.size(); ++i) {
            const std::string& pt = callee->params[i].type.name;
            const std::string* dt = declared_type_of(*call.args[i], vt);
            if (dt && *dt == pt)
                continue; // read out of a same-typed location: already valid
            check_value_validity(m_, args[i], pt, call.args[i]->span,
                                 "argument " + std::to_string(i + 1) + " of '" +
                                     call.callee + "'");
        }
        Env cenv;
        for (size_t i = 0; i < call.args.size(); ++i)
            cenv[callee->params[i].name] = std::move(args[i]);
        for (size_t i = 0; i < callee->requires_clauses.size(); ++i)
            if (!truth(m_, callee->requires_clauses[i], cenv))
                violate(ViolationKind::CalleePrecondition, call_span,
                        "requires clause " + std::to_string(i + 1) + " of '" +
                            call.callee + "' violated at this call");
        return run_body(*callee, std::move(cenv));
    }

    /// Post-state checks of one (possibly tuple) write; mirrors the
    /// obligation sites vcgen emits for the same statement, in the same
    /// order, so a refuted obligation replays to the violation here.
    void statement_effects(const std::vector<Wt>& wts, const Env& env,
                           const VarTypes& vt, const SourceSpan& span) {
        for (const Wt& t : wts) {
            if (write_is_same_type(t, vt)) continue;
            for (const LeafField& leaf : m_.leaf_fields(t.type_name)) {
                auto chain = m_.scalar_constraints(leaf.type_name);
                if (chain.empty()) continue;
                std::vector<std::string> full = t.path;
                full.insert(full.end(), leaf.path.begin(), leaf.path.end());
                const Value& lv = read_path(env, full);
                for (const ScalarConstraint& c : chain) {
                    Env benv;
                    benv[c.binder] = lv;
                    if (!truth(m_, *c.clause, benv))
                        violate(ViolationKind::TypeConstraint, span,
                                "'" + path_str(full) + "' is no longer a valid '" +
                                    leaf.type_name + "' (value " + value_str(lv) + ")",
                                {lv});
                }
            }
        }
        std::set<std::string> seen;
        for (const Wt& t : wts) {
            for (size_t k = 1; k < t.path.size(); ++k) {
                std::vector<std::string> prefix(t.path.begin(), t.path.begin() + k);
                const std::string& pt = type_at_path(prefix, vt);
                const Type& shape = m_.shape_of(pt);
                assert(shape.kind == TypeKind::Record);
                segment_effect(prefix, m_.find_type(shape.record_name), seen, env, span);
            }
            if (write_is_same_type(t, vt)) continue;
            for (const RecordSegment& seg : m_.record_segments(t.type_name)) {
                std::vector<std::string> full = t.path;
                full.insert(full.end(), seg.path.begin(), seg.path.end());
                segment_effect(full, seg.decl, seen, env, span);
            }
        }
    }

    void segment_effect(const std::vector<std::string>& seg_path, const TypeDecl* decl,
                        std::set<std::string>& seen, const Env& env,
                        const SourceSpan& span) {
        if (decl->wheres.empty()) return;
        std::string key = path_str(seg_path);
        if (!seen.insert(key).second) return;
        const Value& rv = read_path(env, seg_path);
        Env fenv;
        for (const auto& f : decl->fields) fenv[f.name] = rv.field(f.name);
        for (const Expr& w : decl->wheres)
            if (!truth(m_, w, fenv))
                violate(ViolationKind::RecordInvariant, span,
                        "invariant of '" + decl->name + "' on '" + key +
                            "' violated after this statement",
                        {rv});
    }

    void return_checks(const FunctionDecl& fn, const ReturnStmt& r,
                       const std::vector<Value>& vals, const VarTypes& vt) {
        for (size_t i = 0; i < r.values.size(); ++i) {
            const Expr& v = r.values[i];
            const std::string& rt = fn.returns[i].type.name;
            std::string role = "returned value " + std::to_string(i + 1);
            const Type& shape = m_.shape_of(rt);
            if (shape.kind != TypeKind::Record) {
                check_scalar_chain(rt, vals[i], v.span, role);
                continue;
            }
            if (declared_type_of(v, vt)) {
                // whole stored value: nested parts never went invalid, only
                // the outermost invariant is worth re-checking
                check_top_wheres(rt, vals[i], v.span, role);
            } else {
                check_value_validity(m_, vals[i], rt, v.span, role);
            }
        }
    }

    void forwarded_return_checks(const FunctionDecl& fn, const std::vector<Value>& vals,
                                 const SourceSpan& span) {
        for (size_t i = 0; i < fn.returns.size(); ++i) {
            const std::string& rt = fn.returns[i].type.name;
            std::string role = "returned value " + std::to_string(i + 1);
            if (m_.shape_of(rt).kind != TypeKind::Record)
                check_scalar_chain(rt, vals[i], span, role);
            else
                check_top_wheres(rt, vals[i], span, role);
        }
    }

    void check_scalar_chain(const std::string& type_name, const Value& v,
                            const SourceSpan& span, const std::string& role) {
        for (const ScalarConstraint& c : m_.scalar_constraints(type_name)) {
            Env env;
            env[c.binder] = v;
            if (!truth(m_, *c.clause, env))
                violate(ViolationKind::TypeConstraint, span,
                        role + " is not a valid '" + type_name + "' (value " +
                            value_str(v) + ")",
                        {v});
        }
    }

    void check_top_wheres(const std::string& type_name, const Value& v,
                          const SourceSpan& span, const std::string& role) {
        const TypeDecl* decl = m_.find_type(m_.shape_of(type_name).record_name);
        if (decl->wheres.empty()) return;
        Env env;
        for (const auto& f : decl->fields) env[f.name] = v.field(f.name);
        for (const Expr& w : decl->wheres)
            if (!truth(m_, w, env))
                violate(ViolationKind::RecordInvariant, span,
                        role + " violates the invariant of '" + decl->name + "'", {v});
    }

    void check_ensures(const FunctionDecl& fn, const Env& entry,
                       const std::vector<Value>& vals) {
        if (fn.ensures_clauses.empty()) return;
        Env env = entry; // parameters mean their entry values here
        for (size_t i = 0; i < vals.size(); ++i) env[fn.returns[i].name] = vals[i];
        for (size_t i = 0; i < fn.ensures_clauses.size(); ++i)
            if (!truth(m_, fn.ensures_clauses[i], env))
                violate(ViolationKind::Postcondition, fn.ensures_clauses[i].span,
                        "ensures clause " + std::to_string(i + 1) + " of '" + fn.name +
                            "' violated",
                        vals);
    }

    const ResolvedModule& m_;
};

} // namespace

namespace {

/// Shared tail of the two entry points: args are structurally conformed and
/// known to satisfy their types already.
CallOutcome eval_call(const ResolvedModule& m, const FunctionDecl& fn,
                      const std::vector<Value>& args) {
    try {
        Env env;
        for (size_t i = 0; i < args.size(); ++i) env[fn.params[i].name] = args[i];
        for (size_t i = 0; i < fn.requires_clauses.size(); ++i)
            if (!truth(m, fn.requires_clauses[i], env))
                violate(ViolationKind::Precondition, fn.requires_clauses[i].span,
                        "requires clause " + std::to_string(i + 1) + " of '" + fn.name +
                            "' not satisfied",
                        args);
        return CallOutcome::returned(Interp(m).run_body(fn, std::move(env)));
    } catch (ViolationError& ve) {
        return CallOutcome::revert(std::move(ve.v));
    }
}

} // namespace

CallOutcome eval_function(const ResolvedModule& m, const std::string& fn_name,
                          const std::vector<Value>& args) {
    const FunctionDecl* fn = m.find_function(fn_name);
    if (!fn) throw std::invalid_argument("no function named '" + fn_name + "'");
    if (args.size() != fn->params.size())
        throw std::invalid_argument("'" + fn_name + "' expects " +
                                    std::to_string(fn->params.size()) +
                                    " argument(s), got " + std::to_string(args.size()));
    std::vector<Value> conformed;
    for (size_t i = 0; i < args.size(); ++i) {
        std::string err;
        auto c = conform_value(args[i], fn->params[i].type.name, m, err);
        if (!c)
            throw std::invalid_argument("argument " + std::to_string(i + 1) + " of '" +
                                        fn_name + "': " + err);
        conformed.push_back(std::move(*c));
    }
    try {
        for (size_t i = 0; i < conformed.size(); ++i)
            check_value_validity(m, conformed[i], fn->params[i].type.name,
                                 fn->params[i].span,
                                 "argument '" + fn->params[i].name + "'");
    } catch (ViolationError& ve) {
        return CallOutcome::revert(std::move(ve.v));
    }
    return eval_call(m, *fn, conformed);
}

CallOutcome eval_function_prevalidated(const ResolvedModule& m,
                                       const std::string& fn_name,
                                       const std::vector<Value>& args) {
    const FunctionDecl* fn = m.find_function(fn_name);
    if (!fn) throw std::invalid_argument("no function named '" + fn_name + "'");
    if (args.size() != fn->params.size())
        throw std::invalid_argument("'" + fn_name + "' expects " +
                                    std::to_string(fn->params.size()) +
                                    " argument(s), got " + std::to_string(args.size()));
    return eval_call(m, *fn, args);
}

bool check_type_invariant(const Value& v, const std::string& type_name,
                          const ResolvedModule& m) {
    try {
        for (const LeafField& leaf : m.leaf_fields(type_name)) {
            const Value& lv = value_at(v, leaf.path);
            for (const ScalarConstraint& c : m.scalar_constraints(leaf.type_name)) {
                Env env;
                env[c.binder] = lv;
                if (!truth(m, *c.clause, env)) return false;
            }
        }
        for (const RecordSegment& seg : m.record_segments(type_name)) {
            if (seg.decl->wheres.empty()) continue;
            const Value& sv = value_at(v, seg.path);
            Env env;
            for (const auto& f : seg.decl->fields) env[f.name] = sv.field(f.name);
            for (const Expr& w : seg.decl->wheres)
                if (!truth(m, w, env)) return false;
        }
        return true;
    } catch (const ViolationError&) {
        return false; // a where clause divided by zero: not satisfied
    }
}

bool check_type_invariant(const Value& v, const TypeExpr& t, const ResolvedModule& m) {
    return check_type_invariant(v, t.name, m);
}

// ---------------------------------------------------------------------------
// InputEnumerator
// ---------------------------------------------------------------------------

namespace {

bool bare_path_of(const Expr& e, std::vector<std::string>& out) {
    if (e.is<VarRef>()) {
        out.push_back(e.as<VarRef>().name);
        return true;
    }
    if (e.is<FieldAccess>()) {
        const auto& fa = e.as<FieldAccess>();
        if (!bare_path_of(*fa.base, out)) return false;
        out.push_back(fa.field);
        return true;
    }
    return false;
}

bool is_field_of(const TypeDecl& decl, const std::string& name) {
    for (const auto& f : decl.fields)
        if (f.name == name) return true;
    return false;
}

void push_children(const Expr& e, std::vector<const Expr*>& stack) {
    if (e.is<FieldAccess>()) stack.push_back(e.as<FieldAccess>().base.get());
    else if (e.is<UnaryExpr>()) stack.push_back(e.as<UnaryExpr>().operand.get());
    else if (e.is<BinaryExpr>()) {
        stack.push_back(e.as<BinaryExpr>().lhs.get());
        stack.push_back(e.as<BinaryExpr>().rhs.get());
    } else if (e.is<CallExpr>()) {
        for (const ExprPtr& a : e.as<CallExpr>().args) stack.push_back(a.get());
    } else if (e.is<RecordLit>()) {
        for (const auto& f : e.as<RecordLit>().fields) stack.push_back(f.value.get());
    }
}

} // namespace

InputEnumerator::InputEnumerator(const ResolvedModule& m, const FunctionDecl& fn,
                                 BigInt max_domain)
    : m_(m), fn_(fn) {
    for (size_t pi = 0; pi < fn.params.size(); ++pi) {
        const Param& p = fn.params[pi];
        for (const LeafField& lf : m.leaf_fields(p.type.name)) {
            Leaf leaf;
            leaf.param = pi;
            leaf.path = lf.path;
            leaf.type_name = lf.type_name;
            if (lf.shape.kind == TypeKind::Bool) {
                leaf.is_bool = true;
                leaf.lo = 0;
                leaf.hi = 1;
            } else {
                // intersect every recognized bound along the constraint chain
                bool have = false;
                std::set<std::string> names{lf.type_name};
                for (const ScalarConstraint& c : m.scalar_constraints(lf.type_name))
                    names.insert(c.type_name);
                for (const std::string& tn : names) {
                    auto it = m.bounds.find(tn);
                    if (it == m.bounds.end()) continue;
                    if (!have) {
                        leaf.lo = it->second.lo;
                        leaf.hi = it->second.hi;
                        have = true;
                    } else {
                        if (it->second.lo > leaf.lo) leaf.lo = it->second.lo;
                        if (it->second.hi < leaf.hi) leaf.hi = it->second.hi;
                    }
                }
                if (!have) {
                    error_ = "parameter '" + p.name + "' of '" + fn.name +
                             "' is not finitely enumerable: component '" +
                             join_path(p.name, path_str(lf.path)) +
                             "' has unbounded type '" + lf.type_name + "'";
                    return;
                }
            }
            leaves_.push_back(std::move(leaf));
            checks_at_.emplace_back();
        }
    }
    for (const Leaf& leaf : leaves_) {
        BigInt span = leaf.hi - leaf.lo + 1;
        domain_size_ *= span > 0 ? span : 0;
    }
    if (domain_size_ > max_domain) {
        error_ = "input domain of '" + fn.name + "' has " + big_str(domain_size_) +
                 " raw points, above the cap of " + big_str(max_domain);
        return;
    }
    // the prototype must be complete before any slot pointer is taken: the
    // outer vector still reallocates while parameters are appended
    for (const Param& p : fn.params) proto_.push_back(skeleton(p.type.name));
    for (size_t li = 0; li < leaves_.size(); ++li) {
        Leaf& leaf = leaves_[li];
        leaf.slot = slot_at(leaf.param, leaf.path);
        for (const ScalarConstraint& c : m.scalar_constraints(leaf.type_name)) {
            Check ck;
            ck.clause = c.clause;
            ck.binds.emplace_back(&ck.env[c.binder], leaf.slot);
            checks_at_[li].push_back(std::move(ck));
        }
    }
    // record invariants, keyed at the last leaf each clause mentions
    for (size_t pi = 0; pi < fn.params.size(); ++pi) {
        for (const RecordSegment& seg : m.record_segments(fn.params[pi].type.name)) {
            if (seg.decl->wheres.empty()) continue;
            for (const Expr& w : seg.decl->wheres) {
                Check ck;
                ck.clause = &w;
                size_t key = 0;
                std::vector<const Expr*> stack{&w};
                while (!stack.empty()) {
                    const Expr* e = stack.back();
                    stack.pop_back();
                    std::vector<std::string> bare;
                    if (bare_path_of(*e, bare) && is_field_of(*seg.decl, bare[0])) {
                        // The check env binds whole top-level fields, so the
                        // clause can only run once every leaf under each
                        // mentioned field is placed — not just the leaves the
                        // clause names.
                        std::vector<std::string> full = seg.path;
                        full.push_back(bare[0]);
                        for (size_t li : leaves_under(pi, full))
                            if (li > key) key = li;
                        continue;
                    }
                    push_children(*e, stack);
                }
                // bind every field whose leaves are all placed by the key
                // level; the clause never reads the others
                for (const auto& f : seg.decl->fields) {
                    std::vector<std::string> full = seg.path;
                    full.push_back(f.name);
                    bool filled = true;
                    for (size_t li : leaves_under(pi, full))
                        if (li > key) {
                            filled = false;
                            break;
                        }
                    if (filled)
                        ck.binds.emplace_back(&ck.env[f.name], slot_at(pi, full));
                }
                checks_at_[key].push_back(std::move(ck));
            }
        }
    }
}

std::vector<size_t>
InputEnumerator::leaves_under(size_t param, const std::vector<std::string>& path) const {
    std::vector<size_t> out;
    for (size_t i = 0; i < leaves_.size(); ++i) {
        if (leaves_[i].param != param) continue;
        if (leaves_[i].path.size() < path.size()) continue;
        bool prefix = true;
        for (size_t k = 0; k < path.size(); ++k)
            if (leaves_[i].path[k] != path[k]) {
                prefix = false;
                break;
            }
        if (prefix) out.push_back(i);
    }
    return out;
}

bool InputEnumerator::place(size_t level, bool fresh) {
    Leaf& leaf = leaves_[level];
    if (fresh) {
        if (leaf.lo > leaf.hi) return false;
        leaf.cur = leaf.lo;
    } else {
        if (leaf.cur >= leaf.hi) return false;
        leaf.cur += 1;
    }
    sync_slot(leaf);
    while (!checks_pass(level)) {
        if (leaf.cur >= leaf.hi) return false;
        leaf.cur += 1;
        sync_slot(leaf);
    }
    return true;
}

void InputEnumerator::sync_slot(Leaf& leaf) {
    if (leaf.is_bool)
        leaf.slot->bool_value = leaf.cur != 0;
    else
        leaf.slot->int_value = leaf.cur;
}

bool InputEnumerator::checks_pass(size_t level) {
    for (Check& ck : checks_at_[level]) {
        for (auto& [dst, src] : ck.binds) *dst = *src;
        try {
            if (!truth(m_, *ck.clause, ck.env)) return false;
        } catch (const ViolationError&) {
            return false; // clause divides by zero on this prefix
        }
    }
    return true;
}

Value InputEnumerator::skeleton(const std::string& type_name) const {
    const Type& shape = m_.shape_of(type_name);
    if (shape.kind == TypeKind::Bool) return Value::of_bool(false);
    if (shape.kind != TypeKind::Record) return Value::of_int(0);
    const TypeDecl* decl = m_.find_type(shape.record_name);
    std::vector<ValueField> fields;
    for (const auto& f : decl->fields) fields.push_back({f.name, skeleton(f.type.name)});
    return Value::record(std::move(fields));
}

Value* InputEnumerator::slot_at(size_t param, const std::vector<std::string>& path) {
    Value* cur = &proto_[param];
    for (const std::string& p : path) cur = &cur->field(p);
    return cur;
}

bool InputEnumerator::seek() {
    while (level_ < leaves_.size()) {
        bool ok = place(level_, true);
        while (!ok) {
            if (level_ == 0) return false;
            --level_;
            ok = place(level_, false);
        }
        ++level_;
    }
    return true;
}

std::optional<std::vector<Value>> InputEnumerator::next() {
    if (done_ || !ok()) return std::nullopt;
    if (!started_) {
        started_ = true;
        level_ = 0;
        if (!seek()) {
            done_ = true;
            return std::nullopt;
        }
    } else {
        if (leaves_.empty()) { // a zero-leaf domain has exactly one point
            done_ = true;
            return std::nullopt;
        }
        level_ = leaves_.size() - 1;
        bool ok2 = place(level_, false);
        while (!ok2) {
            if (level_ == 0) {
                done_ = true;
                return std::nullopt;
            }
            --level_;
            ok2 = place(level_, false);
        }
        ++level_;
        if (!seek()) {
            done_ = true;
            return std::nullopt;
        }
    }
    return proto_;
}

} // namespace csl
