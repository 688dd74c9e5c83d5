#include "csl/resolve.hpp"

#include <algorithm>
#include <cassert>
#include <functional>
#include <set>

namespace csl {

namespace {

bool is_builtin_type(const std::string& name) {
    return name == "int" || name == "bool";
}

/// Size cutoff for ** exponents during const evaluation.
const unsigned long kMaxExponent = 1u << 20;

} // namespace

// ---------------------------------------------------------------------------
// ResolvedModule queries
// ---------------------------------------------------------------------------

const TypeDecl* ResolvedModule::find_type(const std::string& name) const {
    auto it = types.find(name);
    return it == types.end() ? nullptr : it->second;
}

const PropertyDecl* ResolvedModule::find_property(const std::string& name) const {
    auto it = properties.find(name);
    return it == properties.end() ? nullptr : it->second;
}

const FunctionDecl* ResolvedModule::find_function(const std::string& name) const {
    auto it = functions.find(name);
    return it == functions.end() ? nullptr : it->second;
}

const ConstValue* ResolvedModule::find_const(const std::string& name) const {
    auto it = consts.find(name);
    return it == consts.end() ? nullptr : &it->second;
}

namespace {

Type compute_shape(const ResolvedModule& m, const std::string& type_name) {
    if (type_name == "int") return Type::intt();
    if (type_name == "bool") return Type::boolt();
    const TypeDecl* decl = m.find_type(type_name);
    assert(decl && "shape_of on unresolved type name");
    if (decl->is_record) return Type::record(decl->name);
    return compute_shape(m, decl->base->name);
}

std::vector<ScalarConstraint> compute_scalar_constraints(const ResolvedModule& m,
                                                         const std::string& type_name) {
    std::vector<ScalarConstraint> out;
    const TypeDecl* decl = m.find_type(type_name);
    while (decl && !decl->is_record) {
        for (const Expr& w : decl->wheres)
            out.push_back({decl->binder, &w, decl->name});
        decl = m.find_type(decl->base->name);
    }
    return out;
}

std::vector<LeafField> compute_leaf_fields(const ResolvedModule& m,
                                           const std::string& type_name) {
    std::vector<LeafField> out;
    std::function<void(const std::string&, std::vector<std::string>&)> walk =
        [&](const std::string& name, std::vector<std::string>& path) {
            Type shape = compute_shape(m, name);
            if (shape.kind != TypeKind::Record) {
                out.push_back({path, name, shape});
                return;
            }
            const TypeDecl* decl = m.find_type(shape.record_name);
            for (const TypeDecl::Field& f : decl->fields) {
                path.push_back(f.name);
                walk(f.type.name, path);
                path.pop_back();
            }
        };
    std::vector<std::string> path;
    walk(type_name, path);
    return out;
}

std::vector<RecordSegment> compute_record_segments(const ResolvedModule& m,
                                                   const std::string& type_name) {
    std::vector<RecordSegment> out;
    std::function<void(const std::string&, std::vector<std::string>&)> walk =
        [&](const std::string& name, std::vector<std::string>& path) {
            Type shape = compute_shape(m, name);
            if (shape.kind != TypeKind::Record) return;
            const TypeDecl* decl = m.find_type(shape.record_name);
            out.push_back({path, decl});
            for (const TypeDecl::Field& f : decl->fields) {
                path.push_back(f.name);
                walk(f.type.name, path);
                path.pop_back();
            }
        };
    std::vector<std::string> path;
    walk(type_name, path);
    return out;
}

void build_type_memos(ResolvedModule& m) {
    std::vector<std::string> names{"int", "bool"};
    for (const auto& [name, decl] : m.types) names.push_back(name);
    for (const std::string& n : names) {
        m.shape_memo[n] = compute_shape(m, n);
        m.scalar_constraint_memo[n] = compute_scalar_constraints(m, n);
        m.leaf_field_memo[n] = compute_leaf_fields(m, n);
        m.record_segment_memo[n] = compute_record_segments(m, n);
    }
}

template <typename T>
const T& memo_get(const std::map<std::string, T>& memo, const std::string& name,
                  const char* what) {
    auto it = memo.find(name);
    if (it == memo.end())
        throw std::logic_error(std::string(what) + " queried for unknown type '" +
                               name + "'");
    return it->second;
}

} // namespace

const Type& ResolvedModule::shape_of(const std::string& type_name) const {
    return memo_get(shape_memo, type_name, "shape_of");
}

const std::vector<ScalarConstraint>&
ResolvedModule::scalar_constraints(const std::string& type_name) const {
    return memo_get(scalar_constraint_memo, type_name, "scalar_constraints");
}

const std::vector<LeafField>&
ResolvedModule::leaf_fields(const std::string& type_name) const {
    return memo_get(leaf_field_memo, type_name, "leaf_fields");
}

const std::vector<RecordSegment>&
ResolvedModule::record_segments(const std::string& type_name) const {
    return memo_get(record_segment_memo, type_name, "record_segments");
}

// ---------------------------------------------------------------------------
// Typechecker
// ---------------------------------------------------------------------------

namespace {

enum class ExprCtx { Body, Spec };

struct VarInfo {
    std::string type_name;
    Type shape;
};

/// Lexical scope chain; one frame per block.
struct Scope {
    const Scope* parent = nullptr;
    std::map<std::string, VarInfo> vars;

    const VarInfo* lookup(const std::string& name) const {
        for (const Scope* s = this; s; s = s->parent) {
            auto it = s->vars.find(name);
            if (it != s->vars.end()) return &it->second;
        }
        return nullptr;
    }
};

class Checker {
public:
    explicit Checker(ModuleAst ast) { module_.ast = std::move(ast); }

    ResolveResult run() {
        collect_names();
        if (!has_errors(diagnostics_)) {
            evaluate_consts();
            check_type_decls();
            // Later passes walk the type graph (shape_of, scalar_constraints)
            // and require it to be acyclic and fully resolved.
            if (!has_errors(diagnostics_)) {
                build_type_memos(module_);
                recognize_bounds();
                check_properties();
                check_functions();
            }
        }
        ResolveResult result;
        result.diagnostics = std::move(diagnostics_);
        if (!has_errors(result.diagnostics)) result.module = std::move(module_);
        return result;
    }

private:
    void error(std::string msg, const SourceSpan& span) {
        diagnostics_.push_back({Severity::Error, std::move(msg), span});
    }

    // ---- pass 1: names and constants ----

    void collect_names() {
        for (Decl& d : module_.ast.decls) {
            const std::string& name = d.name();
            if (is_builtin_type(name)) {
                error("cannot redeclare builtin type '" + name + "'", d.span());
                continue;
            }
            if (!declared_.insert(name).second) {
                error("duplicate declaration of '" + name + "'", d.span());
                continue;
            }
            if (d.is<TypeDecl>()) module_.types[name] = &d.as<TypeDecl>();
            else if (d.is<PropertyDecl>()) module_.properties[name] = &d.as<PropertyDecl>();
            else if (d.is<FunctionDecl>()) module_.functions[name] = &d.as<FunctionDecl>();
            // consts are registered by evaluate_consts, in declaration order
        }
    }

    void evaluate_consts() {
        for (Decl& d : module_.ast.decls) {
            if (!d.is<ConstDecl>()) continue;
            ConstDecl& c = d.as<ConstDecl>();
            if (module_.consts.count(c.name)) continue; // duplicate, reported
            std::optional<ConstValue> v = eval_const_expr(c.init, true);
            if (v) module_.consts[c.name] = *v;
        }
    }

    /// Evaluates a constant initializer. With report=false, failures return
    /// nullopt silently (used by bounds recognition on arbitrary exprs).
    std::optional<ConstValue> eval_const_expr(Expr& e, bool report) {
        auto fail = [&](const std::string& msg) -> std::optional<ConstValue> {
            if (report) error(msg, e.span);
            return std::nullopt;
        };
        if (e.is<IntLit>()) {
            e.type = Type::intt();
            return ConstValue{Type::intt(), e.as<IntLit>().value, false};
        }
        if (e.is<BoolLit>()) {
            e.type = Type::boolt();
            return ConstValue{Type::boolt(), 0, e.as<BoolLit>().value};
        }
        if (e.is<VarRef>()) {
            const ConstValue* c = module_.find_const(e.as<VarRef>().name);
            if (!c) return fail("unknown constant '" + e.as<VarRef>().name +
                                "' in constant expression (constants must be "
                                "declared before use)");
            e.type = c->type;
            return *c;
        }
        if (e.is<UnaryExpr>()) {
            auto& u = e.as<UnaryExpr>();
            std::optional<ConstValue> v = eval_const_expr(*u.operand, report);
            if (!v) return std::nullopt;
            if (u.op == UnaryOp::Neg) {
                if (v->type.kind != TypeKind::Int) return fail("operator '-' needs an integer");
                e.type = Type::intt();
                return ConstValue{Type::intt(), -v->int_value, false};
            }
            if (v->type.kind != TypeKind::Bool) return fail("operator '!' needs a boolean");
            e.type = Type::boolt();
            return ConstValue{Type::boolt(), 0, !v->bool_value};
        }
        if (e.is<BinaryExpr>()) {
            auto& b = e.as<BinaryExpr>();
            std::optional<ConstValue> l = eval_const_expr(*b.lhs, report);
            std::optional<ConstValue> r = eval_const_expr(*b.rhs, report);
            if (!l || !r) return std::nullopt;
            return eval_const_binary(e, b.op, *l, *r, report);
        }
        return fail("expression not allowed in a constant initializer");
    }

    std::optional<ConstValue> eval_const_binary(Expr& e, BinaryOp op,
                                                const ConstValue& l,
                                                const ConstValue& r, bool report) {
        auto fail = [&](const std::string& msg) -> std::optional<ConstValue> {
            if (report) error(msg, e.span);
            return std::nullopt;
        };
        auto ints = [&] {
            return l.type.kind == TypeKind::Int && r.type.kind == TypeKind::Int;
        };
        auto bools = [&] {
            return l.type.kind == TypeKind::Bool && r.type.kind == TypeKind::Bool;
        };
        auto int_result = [&](BigInt v) {
            e.type = Type::intt();
            return ConstValue{Type::intt(), std::move(v), false};
        };
        auto bool_result = [&](bool v) {
            e.type = Type::boolt();
            return ConstValue{Type::boolt(), 0, v};
        };
        switch (op) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
        case BinaryOp::Mul:
        case BinaryOp::Div:
        case BinaryOp::Mod:
        case BinaryOp::Pow: {
            if (!ints()) return fail("arithmetic needs integer operands");
            const BigInt& a = l.int_value;
            const BigInt& b = r.int_value;
            switch (op) {
            case BinaryOp::Add: return int_result(a + b);
            case BinaryOp::Sub: return int_result(a - b);
            case BinaryOp::Mul: return int_result(a * b);
            case BinaryOp::Div:
                if (b == 0) return fail("division by zero in constant expression");
                return int_result(big_div_trunc(a, b));
            case BinaryOp::Mod:
                if (b == 0) return fail("division by zero in constant expression");
                return int_result(big_mod_trunc(a, b));
            default:
                if (b < 0 || b > kMaxExponent)
                    return fail("exponent out of range in constant expression");
                return int_result(big_pow(a, b.get_ui()));
            }
        }
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: {
            if (!ints()) return fail("comparison needs integer operands");
            const BigInt& a = l.int_value;
            const BigInt& b = r.int_value;
            bool v = op == BinaryOp::Lt   ? a < b
                     : op == BinaryOp::Le ? a <= b
                     : op == BinaryOp::Gt ? a > b
                                          : a >= b;
            return bool_result(v);
        }
        case BinaryOp::Eq:
        case BinaryOp::Ne: {
            bool v;
            if (ints()) v = l.int_value == r.int_value;
            else if (bools()) v = l.bool_value == r.bool_value;
            else return fail("'==' needs operands of the same type");
            return bool_result(op == BinaryOp::Eq ? v : !v);
        }
        case BinaryOp::And:
        case BinaryOp::Or:
        case BinaryOp::Implies: {
            if (!bools()) return fail("logical operator needs boolean operands");
            bool v = op == BinaryOp::And  ? (l.bool_value && r.bool_value)
                     : op == BinaryOp::Or ? (l.bool_value || r.bool_value)
                                          : (!l.bool_value || r.bool_value);
            return bool_result(v);
        }
        }
        return std::nullopt;
    }

    // ---- pass 2a: type declarations ----

    const TypeDecl* resolve_type_name(const TypeExpr& t) {
        if (is_builtin_type(t.name)) return nullptr; // valid, no decl
        const TypeDecl* decl = module_.find_type(t.name);
        if (!decl) {
            if (declared_.count(t.name))
                error("'" + t.name + "' is not a type", t.span);
            else
                error("unknown type '" + t.name + "'", t.span);
        }
        return decl;
    }

    bool type_name_valid(const TypeExpr& t) {
        return is_builtin_type(t.name) || module_.find_type(t.name) != nullptr;
    }

    void check_type_decls() {
        // Existence of referenced type names + local well-formedness.
        for (Decl& d : module_.ast.decls) {
            if (!d.is<TypeDecl>()) continue;
            TypeDecl& decl = d.as<TypeDecl>();
            if (decl.is_record) {
                std::set<std::string> seen;
                for (const TypeDecl::Field& f : decl.fields) {
                    if (!seen.insert(f.name).second)
                        error("duplicate field '" + f.name + "' in record '" +
                                  decl.name + "'",
                              f.span);
                    resolve_type_name(f.type);
                }
            } else {
                const TypeDecl* base = resolve_type_name(*decl.base);
                if (base && base->is_record)
                    error("constrained type base must be a scalar type, but '" +
                              base->name + "' is a record",
                          decl.base->span);
            }
        }
        if (has_errors(diagnostics_)) return;

        // Recursion over the type reference graph.
        std::set<std::string> done, in_progress;
        std::function<void(const TypeDecl*)> visit = [&](const TypeDecl* d) {
            if (done.count(d->name)) return;
            if (!in_progress.insert(d->name).second) {
                error("recursive type definition '" + d->name + "'", d->span);
                done.insert(d->name);
                return;
            }
            auto follow = [&](const TypeExpr& t) {
                if (const TypeDecl* n = module_.find_type(t.name)) visit(n);
            };
            if (d->is_record)
                for (const TypeDecl::Field& f : d->fields) follow(f.type);
            else
                follow(*d->base);
            in_progress.erase(d->name);
            done.insert(d->name);
        };
        for (auto& [name, decl] : module_.types) visit(decl);
        if (has_errors(diagnostics_)) return;

        // Where clauses, typed in the scope of the binder / the fields.
        for (Decl& d : module_.ast.decls) {
            if (!d.is<TypeDecl>()) continue;
            TypeDecl& decl = d.as<TypeDecl>();
            Scope scope;
            if (decl.is_record) {
                for (const TypeDecl::Field& f : decl.fields)
                    scope.vars[f.name] = {f.type.name,
                                          compute_shape(module_, f.type.name)};
            } else {
                scope.vars[decl.binder] = {decl.base->name,
                                           compute_shape(module_, decl.base->name)};
            }
            for (Expr& w : decl.wheres) {
                Type t = check_expr(w, scope, ExprCtx::Spec, nullptr);
                if (t.kind != TypeKind::Bool && t.kind != TypeKind::Unknown)
                    error("where clause must be boolean", w.span);
            }
        }
    }

    // ---- bounds recognition for scalar types ----

    void recognize_bounds() {
        for (auto& [name, decl] : module_.types) {
            if (decl->is_record) continue;
            std::optional<BigInt> lo, hi;
            for (const ScalarConstraint& c : module_.scalar_constraints(name))
                scan_bound(*c.clause, c.binder, lo, hi);
            if (lo && hi && *lo <= *hi) module_.bounds[name] = {*lo, *hi};
        }
    }

    void scan_bound(const Expr& e, const std::string& binder,
                    std::optional<BigInt>& lo, std::optional<BigInt>& hi) {
        if (!e.is<BinaryExpr>()) return;
        const auto& b = e.as<BinaryExpr>();
        if (b.op == BinaryOp::And) {
            scan_bound(*b.lhs, binder, lo, hi);
            scan_bound(*b.rhs, binder, lo, hi);
            return;
        }
        auto as_binder = [&](const Expr& x) {
            return x.is<VarRef>() && x.as<VarRef>().name == binder;
        };
        auto as_const = [&](const Expr& x) -> std::optional<BigInt> {
            std::optional<ConstValue> v =
                eval_const_expr(const_cast<Expr&>(x), false);
            if (v && v->type.kind == TypeKind::Int) return v->int_value;
            return std::nullopt;
        };
        auto raise_lo = [&](const BigInt& k) { if (!lo || k > *lo) lo = k; };
        auto lower_hi = [&](const BigInt& k) { if (!hi || k < *hi) hi = k; };
        std::optional<BigInt> k;
        if (as_binder(*b.lhs) && (k = as_const(*b.rhs))) {
            switch (b.op) {
            case BinaryOp::Ge: raise_lo(*k); break;
            case BinaryOp::Gt: raise_lo(*k + 1); break;
            case BinaryOp::Le: lower_hi(*k); break;
            case BinaryOp::Lt: lower_hi(*k - 1); break;
            case BinaryOp::Eq: raise_lo(*k); lower_hi(*k); break;
            default: break;
            }
        } else if (as_binder(*b.rhs) && (k = as_const(*b.lhs))) {
            switch (b.op) {
            case BinaryOp::Le: raise_lo(*k); break;
            case BinaryOp::Lt: raise_lo(*k + 1); break;
            case BinaryOp::Ge: lower_hi(*k); break;
            case BinaryOp::Gt: lower_hi(*k - 1); break;
            case BinaryOp::Eq: raise_lo(*k); lower_hi(*k); break;
            default: break;
            }
        }
    }

    // ---- pass 2b: properties ----

    void check_properties() {
        for (Decl& d : module_.ast.decls) {
            if (!d.is<PropertyDecl>()) continue;
            PropertyDecl& decl = d.as<PropertyDecl>();
            Scope scope;
            declare_params(decl.params, scope);
            Type t = check_expr(decl.body, scope, ExprCtx::Spec, nullptr);
            if (t.kind != TypeKind::Bool && t.kind != TypeKind::Unknown)
                error("property body must be boolean", decl.body.span);
        }
        // Recursive property chains.
        std::set<std::string> done, in_progress;
        std::function<void(const PropertyDecl*)> visit = [&](const PropertyDecl* p) {
            if (done.count(p->name)) return;
            if (!in_progress.insert(p->name).second) {
                error("recursive property definition '" + p->name + "'", p->span);
                done.insert(p->name);
                return;
            }
            for (const std::string& callee : property_calls(p->body))
                if (const PropertyDecl* q = module_.find_property(callee)) visit(q);
            in_progress.erase(p->name);
            done.insert(p->name);
        };
        for (auto& [name, decl] : module_.properties) visit(decl);
    }

    std::vector<std::string> property_calls(const Expr& e) {
        std::vector<std::string> out;
        std::function<void(const Expr&)> walk = [&](const Expr& x) {
            if (x.is<CallExpr>()) {
                out.push_back(x.as<CallExpr>().callee);
                for (const auto& a : x.as<CallExpr>().args) walk(*a);
            } else if (x.is<FieldAccess>()) walk(*x.as<FieldAccess>().base);
            else if (x.is<UnaryExpr>()) walk(*x.as<UnaryExpr>().operand);
            else if (x.is<BinaryExpr>()) {
                walk(*x.as<BinaryExpr>().lhs);
                walk(*x.as<BinaryExpr>().rhs);
            } else if (x.is<RecordLit>()) {
                for (const auto& f : x.as<RecordLit>().fields) walk(*f.value);
            } else if (x.is<TupleExpr>()) {
                for (const auto& el : x.as<TupleExpr>().elems) walk(*el);
            }
        };
        walk(e);
        return out;
    }

    void declare_params(const std::vector<Param>& params, Scope& scope) {
        for (const Param& p : params) {
            if (!type_name_valid(p.type)) {
                resolve_type_name(p.type);
                continue;
            }
            if (scope.lookup(p.name) || declared_.count(p.name)) {
                error("name '" + p.name + "' already declared", p.span);
                continue;
            }
            scope.vars[p.name] = {p.type.name, module_.shape_of(p.type.name)};
        }
    }

    // ---- pass 2c: functions ----

    void check_functions() {
        for (Decl& d : module_.ast.decls) {
            if (!d.is<FunctionDecl>()) continue;
            FunctionDecl& decl = d.as<FunctionDecl>();
            current_fn_ = decl.name;

            Scope params;
            declare_params(decl.params, params);
            for (Expr& r : decl.requires_clauses) {
                Type t = check_expr(r, params, ExprCtx::Spec, nullptr);
                if (t.kind != TypeKind::Bool && t.kind != TypeKind::Unknown)
                    error("requires clause must be boolean", r.span);
            }

            Scope with_returns;
            with_returns.parent = &params;
            declare_params(decl.returns, with_returns);
            for (Expr& en : decl.ensures_clauses) {
                Type t = check_expr(en, with_returns, ExprCtx::Spec, nullptr);
                if (t.kind != TypeKind::Bool && t.kind != TypeKind::Unknown)
                    error("ensures clause must be boolean", en.span);
            }

            current_returns_ = &decl.returns;
            Scope body;
            body.parent = &params;
            bool always = check_block(decl.body, body);
            if (!decl.returns.empty() && !always)
                error("function '" + decl.name +
                          "' may exit without returning a value",
                      decl.span);
            current_returns_ = nullptr;
        }
        check_function_recursion();
    }

    void check_function_recursion() {
        std::set<std::string> done, in_progress;
        std::function<void(const FunctionDecl*)> visit = [&](const FunctionDecl* f) {
            if (done.count(f->name)) return;
            if (!in_progress.insert(f->name).second) {
                error("recursive call chain involving '" + f->name +
                          "' (recursion is not supported)",
                      f->span);
                done.insert(f->name);
                return;
            }
            auto range = call_edges_.equal_range(f->name);
            for (auto it = range.first; it != range.second; ++it)
                if (const FunctionDecl* g = module_.find_function(it->second))
                    visit(g);
            in_progress.erase(f->name);
            done.insert(f->name);
        };
        for (auto& [name, decl] : module_.functions) visit(decl);
    }

    /// Returns true when the block definitely returns on every path.
    bool check_block(std::vector<Stmt>& stmts, Scope& scope) {
        bool always = false;
        for (size_t i = 0; i < stmts.size(); ++i) {
            if (always) {
                error("unreachable code after return", stmts[i].span);
                return true;
            }
            always = check_stmt(stmts[i], scope);
        }
        return always;
    }

    bool check_stmt(Stmt& stmt, Scope& scope) {
        if (stmt.is<VarDeclStmt>()) {
            check_var_decl(stmt.as<VarDeclStmt>(), scope);
            return false;
        }
        if (stmt.is<AssignStmt>()) {
            check_assign(stmt.as<AssignStmt>(), scope);
            return false;
        }
        if (stmt.is<ReturnStmt>()) {
            check_return(stmt.as<ReturnStmt>(), stmt.span, scope);
            return true;
        }
        IfStmt& node = stmt.as<IfStmt>();
        Type t = check_expr(node.cond, scope, ExprCtx::Body, nullptr);
        if (t.kind != TypeKind::Bool && t.kind != TypeKind::Unknown)
            error("if condition must be boolean", node.cond.span);
        Scope then_scope;
        then_scope.parent = &scope;
        bool then_ret = check_block(node.then_body, then_scope);
        Scope else_scope;
        else_scope.parent = &scope;
        bool else_ret = check_block(node.else_body, else_scope);
        return then_ret && !node.else_body.empty() && else_ret;
    }

    void check_var_decl(VarDeclStmt& node, Scope& scope) {
        std::vector<Type> shapes;
        for (const VarDeclStmt::Binding& b : node.vars) {
            if (type_name_valid(b.type)) shapes.push_back(module_.shape_of(b.type.name));
            else {
                resolve_type_name(b.type);
                shapes.push_back(Type{});
            }
        }

        const CallExpr* call = node.init.is<CallExpr>() ? &node.init.as<CallExpr>() : nullptr;
        if (call && module_.find_function(call->callee)) {
            check_call_rhs(node.init, shapes, scope);
        } else if (node.vars.size() > 1) {
            if (!call)
                error("a multi-variable declaration needs a function call "
                      "initializer",
                      node.init.span);
            // A call to a non-function reports its own diagnostic here.
            check_expr(node.init, scope, ExprCtx::Body, nullptr);
        } else {
            Type t = check_expr(node.init, scope, ExprCtx::Body,
                                shapes[0].kind == TypeKind::Unknown ? nullptr : &shapes[0]);
            if (t.kind != TypeKind::Unknown && shapes[0].kind != TypeKind::Unknown &&
                t != shapes[0])
                error("type mismatch: cannot initialize '" + node.vars[0].name +
                          "' (" + shapes[0].to_string() + ") from " + t.to_string(),
                      node.init.span);
        }

        for (size_t i = 0; i < node.vars.size(); ++i) {
            const VarDeclStmt::Binding& b = node.vars[i];
            if (scope.lookup(b.name) || declared_.count(b.name)) {
                error("name '" + b.name + "' already declared", b.span);
                continue;
            }
            if (shapes[i].kind != TypeKind::Unknown)
                scope.vars[b.name] = {b.type.name, shapes[i]};
        }
    }

    /// Typechecks a call used as the whole right-hand side of a declaration,
    /// assignment, or return; `expected` carries one shape per target.
    void check_call_rhs(Expr& e, const std::vector<Type>& expected, Scope& scope) {
        CallExpr& call = e.as<CallExpr>();
        const FunctionDecl* fn = module_.find_function(call.callee);
        assert(fn);
        call_edges_.insert({current_fn_, call.callee});
        check_call_args(call, fn->params, e.span, scope);
        if (fn->returns.size() != expected.size()) {
            error("function '" + call.callee + "' returns " +
                      std::to_string(fn->returns.size()) + " value(s), but " +
                      std::to_string(expected.size()) + " are expected",
                  e.span);
            return;
        }
        std::vector<Type> rets;
        for (const Param& r : fn->returns) {
            if (!type_name_valid(r.type)) return;
            rets.push_back(module_.shape_of(r.type.name));
        }
        for (size_t i = 0; i < rets.size(); ++i)
            if (expected[i].kind != TypeKind::Unknown && rets[i] != expected[i])
                error("type mismatch: result " + std::to_string(i + 1) + " of '" +
                          call.callee + "' is " + rets[i].to_string() +
                          ", expected " + expected[i].to_string(),
                      e.span);
        e.type = rets.size() == 1 ? rets[0] : Type::tuple(rets);
    }

    void check_call_args(CallExpr& call, const std::vector<Param>& params,
                         const SourceSpan& span, Scope& scope) {
        if (call.args.size() != params.size()) {
            error("'" + call.callee + "' expects " + std::to_string(params.size()) +
                      " argument(s), got " + std::to_string(call.args.size()),
                  span);
            // Still type the arguments for downstream diagnostics.
            for (auto& a : call.args) check_expr(*a, scope, ExprCtx::Body, nullptr);
            return;
        }
        for (size_t i = 0; i < params.size(); ++i) {
            if (!type_name_valid(params[i].type)) continue;
            Type want = module_.shape_of(params[i].type.name);
            Type got = check_expr(*call.args[i], scope, ExprCtx::Body, &want);
            if (got.kind != TypeKind::Unknown && got != want)
                error("type mismatch: argument " + std::to_string(i + 1) + " of '" +
                          call.callee + "' must be " + want.to_string() + ", found " +
                          got.to_string(),
                      call.args[i]->span);
        }
    }

    void check_assign(AssignStmt& node, Scope& scope) {
        std::vector<Type> shapes;
        for (const LValue& lv : node.targets) shapes.push_back(check_lvalue(lv, scope));

        for (size_t i = 0; i < node.targets.size(); ++i)
            for (size_t j = 0; j < node.targets.size(); ++j) {
                if (i == j) continue;
                const auto& a = node.targets[i].path;
                const auto& b = node.targets[j].path;
                if (a.size() <= b.size() && std::equal(a.begin(), a.end(), b.begin())) {
                    error("overlapping assignment targets '" +
                              node.targets[i].to_string() + "' and '" +
                              node.targets[j].to_string() + "'",
                          node.targets[j].span);
                    return;
                }
            }

        const CallExpr* call = node.value.is<CallExpr>() ? &node.value.as<CallExpr>() : nullptr;
        if (call && module_.find_function(call->callee)) {
            check_call_rhs(node.value, shapes, scope);
            return;
        }
        if (call) {
            // A call to a non-function reports its own diagnostic.
            check_expr(node.value, scope, ExprCtx::Body,
                       node.targets.size() == 1 ? &shapes[0] : nullptr);
            return;
        }
        if (node.targets.size() > 1) {
            if (!node.value.is<TupleExpr>()) {
                error("a tuple assignment needs a parenthesized value list or a "
                      "function call",
                      node.value.span);
                return;
            }
            TupleExpr& tup = node.value.as<TupleExpr>();
            if (tup.elems.size() != node.targets.size()) {
                error("tuple assignment arity mismatch: " +
                          std::to_string(node.targets.size()) + " target(s), " +
                          std::to_string(tup.elems.size()) + " value(s)",
                      node.value.span);
                return;
            }
            std::vector<Type> elem_types;
            for (size_t i = 0; i < tup.elems.size(); ++i) {
                const Type* want =
                    shapes[i].kind == TypeKind::Unknown ? nullptr : &shapes[i];
                Type got = check_expr(*tup.elems[i], scope, ExprCtx::Body, want);
                elem_types.push_back(got);
                if (got.kind != TypeKind::Unknown && want && got != *want)
                    error("type mismatch: cannot assign " + got.to_string() +
                              " to '" + node.targets[i].to_string() + "' (" +
                              want->to_string() + ")",
                          tup.elems[i]->span);
            }
            node.value.type = Type::tuple(elem_types);
            return;
        }
        const Type* want = shapes[0].kind == TypeKind::Unknown ? nullptr : &shapes[0];
        Type got = check_expr(node.value, scope, ExprCtx::Body, want);
        if (got.kind != TypeKind::Unknown && want && got != *want)
            error("type mismatch: cannot assign " + got.to_string() + " to '" +
                      node.targets[0].to_string() + "' (" + want->to_string() + ")",
                  node.value.span);
    }

    Type check_lvalue(const LValue& lv, Scope& scope) {
        const VarInfo* info = scope.lookup(lv.path[0]);
        if (!info) {
            if (module_.find_const(lv.path[0]))
                error("cannot assign to constant '" + lv.path[0] + "'", lv.span);
            else
                error("unknown identifier '" + lv.path[0] + "'", lv.span);
            return Type{};
        }
        Type t = info->shape;
        for (size_t i = 1; i < lv.path.size(); ++i) {
            if (t.kind != TypeKind::Record) {
                error("field access on non-record in '" + lv.to_string() + "'",
                      lv.span);
                return Type{};
            }
            const TypeDecl* decl = module_.find_type(t.record_name);
            const TypeDecl::Field* field = nullptr;
            for (const TypeDecl::Field& f : decl->fields)
                if (f.name == lv.path[i]) field = &f;
            if (!field) {
                error("record '" + decl->name + "' has no field '" + lv.path[i] + "'",
                      lv.span);
                return Type{};
            }
            t = module_.shape_of(field->type.name);
        }
        return t;
    }

    void check_return(ReturnStmt& node, const SourceSpan& span, Scope& scope) {
        // `return (a, b)` is the same statement as `return a, b`.
        if (node.values.size() == 1 && node.values[0].is<TupleExpr>()) {
            TupleExpr tup = std::move(node.values[0].as<TupleExpr>());
            node.values.clear();
            for (auto& el : tup.elems) node.values.push_back(std::move(*el));
        }
        const std::vector<Param>& rets = *current_returns_;
        std::vector<Type> shapes;
        for (const Param& r : rets) {
            if (!type_name_valid(r.type)) return;
            shapes.push_back(module_.shape_of(r.type.name));
        }

        // `return f(..)` forwarding all results.
        if (node.values.size() == 1 && node.values[0].is<CallExpr>() &&
            module_.find_function(node.values[0].as<CallExpr>().callee)) {
            check_call_rhs(node.values[0], shapes, scope);
            return;
        }
        if (node.values.size() != rets.size()) {
            error("return arity mismatch: function declares " +
                      std::to_string(rets.size()) + " result(s), return has " +
                      std::to_string(node.values.size()),
                  span);
            return;
        }
        for (size_t i = 0; i < node.values.size(); ++i) {
            Type got = check_expr(node.values[i], scope, ExprCtx::Body, &shapes[i]);
            if (got.kind != TypeKind::Unknown && got != shapes[i])
                error("type mismatch: returned value " + std::to_string(i + 1) +
                          " is " + got.to_string() + ", expected " +
                          shapes[i].to_string(),
                      node.values[i].span);
        }
    }

    // ---- expressions ----

    Type set_type(Expr& e, Type t) {
        e.type = t;
        return t;
    }

    Type check_expr(Expr& e, Scope& scope, ExprCtx ctx, const Type* expected) {
        if (e.is<IntLit>()) return set_type(e, Type::intt());
        if (e.is<BoolLit>()) return set_type(e, Type::boolt());
        if (e.is<VarRef>()) {
            const std::string& name = e.as<VarRef>().name;
            if (const VarInfo* info = scope.lookup(name)) return set_type(e, info->shape);
            if (const ConstValue* c = module_.find_const(name)) return set_type(e, c->type);
            if (declared_.count(name))
                error("'" + name + "' is not a value", e.span);
            else
                error("unknown identifier '" + name + "'", e.span);
            return Type{};
        }
        if (e.is<FieldAccess>()) {
            FieldAccess& fa = e.as<FieldAccess>();
            Type base = check_expr(*fa.base, scope, ctx, nullptr);
            if (base.kind == TypeKind::Unknown) return Type{};
            if (base.kind != TypeKind::Record) {
                error("field access on non-record value", e.span);
                return Type{};
            }
            const TypeDecl* decl = module_.find_type(base.record_name);
            for (const TypeDecl::Field& f : decl->fields)
                if (f.name == fa.field) return set_type(e, module_.shape_of(f.type.name));
            error("record '" + decl->name + "' has no field '" + fa.field + "'",
                  e.span);
            return Type{};
        }
        if (e.is<UnaryExpr>()) {
            UnaryExpr& u = e.as<UnaryExpr>();
            Type t = check_expr(*u.operand, scope, ctx, nullptr);
            if (t.kind == TypeKind::Unknown) return Type{};
            if (u.op == UnaryOp::Neg) {
                if (t.kind != TypeKind::Int) {
                    error("operator '-' needs an integer operand", e.span);
                    return Type{};
                }
                return set_type(e, Type::intt());
            }
            if (t.kind != TypeKind::Bool) {
                error("operator '!' needs a boolean operand", e.span);
                return Type{};
            }
            return set_type(e, Type::boolt());
        }
        if (e.is<BinaryExpr>()) return check_binary(e, scope, ctx);
        if (e.is<CallExpr>()) {
            CallExpr& call = e.as<CallExpr>();
            if (const PropertyDecl* prop = module_.find_property(call.callee)) {
                if (ctx != ExprCtx::Spec) {
                    error("property '" + call.callee +
                              "' may only be used in specifications",
                          e.span);
                    return Type{};
                }
                check_property_args(call, *prop, e.span, scope, ctx);
                return set_type(e, Type::boolt());
            }
            if (module_.find_function(call.callee)) {
                if (ctx == ExprCtx::Spec)
                    error("functions may not be called in specifications", e.span);
                else
                    error("a function call may only be the whole right-hand "
                          "side of a statement or a return value",
                          e.span);
                return Type{};
            }
            if (declared_.count(call.callee))
                error("'" + call.callee + "' is not callable", e.span);
            else
                error("unknown property or function '" + call.callee + "'", e.span);
            return Type{};
        }
        if (e.is<RecordLit>()) return check_record_lit(e, scope, ctx, expected);
        // TupleExpr: only legal where the statement checker consumed it.
        error("a parenthesized value list is only allowed as a tuple "
              "assignment's right-hand side",
              e.span);
        return Type{};
    }

    void check_property_args(CallExpr& call, const PropertyDecl& prop,
                             const SourceSpan& span, Scope& scope, ExprCtx ctx) {
        if (call.args.size() != prop.params.size()) {
            error("'" + call.callee + "' expects " +
                      std::to_string(prop.params.size()) + " argument(s), got " +
                      std::to_string(call.args.size()),
                  span);
            for (auto& a : call.args) check_expr(*a, scope, ctx, nullptr);
            return;
        }
        for (size_t i = 0; i < prop.params.size(); ++i) {
            if (!type_name_valid(prop.params[i].type)) continue;
            Type want = module_.shape_of(prop.params[i].type.name);
            Type got = check_expr(*call.args[i], scope, ctx, &want);
            if (got.kind != TypeKind::Unknown && got != want)
                error("type mismatch: argument " + std::to_string(i + 1) + " of '" +
                          call.callee + "' must be " + want.to_string() + ", found " +
                          got.to_string(),
                      call.args[i]->span);
        }
    }

    Type check_binary(Expr& e, Scope& scope, ExprCtx ctx) {
        BinaryExpr& b = e.as<BinaryExpr>();
        switch (b.op) {
        case BinaryOp::Add:
        case BinaryOp::Sub:
        case BinaryOp::Mul:
        case BinaryOp::Div:
        case BinaryOp::Mod:
        case BinaryOp::Pow: {
            Type l = check_expr(*b.lhs, scope, ctx, nullptr);
            Type r = check_expr(*b.rhs, scope, ctx, nullptr);
            if (l.kind == TypeKind::Unknown || r.kind == TypeKind::Unknown) return Type{};
            if (l.kind != TypeKind::Int || r.kind != TypeKind::Int) {
                error("arithmetic needs integer operands", e.span);
                return Type{};
            }
            return set_type(e, Type::intt());
        }
        case BinaryOp::Lt:
        case BinaryOp::Le:
        case BinaryOp::Gt:
        case BinaryOp::Ge: {
            Type l = check_expr(*b.lhs, scope, ctx, nullptr);
            Type r = check_expr(*b.rhs, scope, ctx, nullptr);
            if (l.kind == TypeKind::Unknown || r.kind == TypeKind::Unknown) return Type{};
            if (l.kind != TypeKind::Int || r.kind != TypeKind::Int) {
                error("comparison needs integer operands", e.span);
                return Type{};
            }
            return set_type(e, Type::boolt());
        }
        case BinaryOp::Eq:
        case BinaryOp::Ne: {
            // A record literal operand borrows the other side's type.
            Type l, r;
            if (b.lhs->is<RecordLit>() && !b.rhs->is<RecordLit>()) {
                r = check_expr(*b.rhs, scope, ctx, nullptr);
                const Type* want = r.kind == TypeKind::Record ? &r : nullptr;
                l = check_expr(*b.lhs, scope, ctx, want);
            } else {
                l = check_expr(*b.lhs, scope, ctx, nullptr);
                const Type* want = l.kind == TypeKind::Record ? &l : nullptr;
                r = check_expr(*b.rhs, scope, ctx, want);
            }
            if (l.kind == TypeKind::Unknown || r.kind == TypeKind::Unknown) return Type{};
            if (l.kind == TypeKind::Tuple || r.kind == TypeKind::Tuple) {
                error("tuples cannot be compared", e.span);
                return Type{};
            }
            if (l != r) {
                error("'" + std::string(binary_op_text(b.op)) +
                          "' needs operands of the same type, found " +
                          l.to_string() + " and " + r.to_string(),
                      e.span);
                return Type{};
            }
            return set_type(e, Type::boolt());
        }
        case BinaryOp::And:
        case BinaryOp::Or:
        case BinaryOp::Implies: {
            Type l = check_expr(*b.lhs, scope, ctx, nullptr);
            Type r = check_expr(*b.rhs, scope, ctx, nullptr);
            if (l.kind == TypeKind::Unknown || r.kind == TypeKind::Unknown) return Type{};
            if (l.kind != TypeKind::Bool || r.kind != TypeKind::Bool) {
                error("logical operator needs boolean operands", e.span);
                return Type{};
            }
            return set_type(e, Type::boolt());
        }
        }
        return Type{};
    }

    Type check_record_lit(Expr& e, Scope& scope, ExprCtx ctx, const Type* expected) {
        RecordLit& lit = e.as<RecordLit>();
        if (!expected || expected->kind != TypeKind::Record) {
            error("a record literal needs a record-typed context "
                  "(declaration, assignment, argument, or return)",
                  e.span);
            for (auto& f : lit.fields) check_expr(*f.value, scope, ctx, nullptr);
            return Type{};
        }
        const TypeDecl* decl = module_.find_type(expected->record_name);
        std::set<std::string> provided;
        for (RecordLit::Field& f : lit.fields) {
            const TypeDecl::Field* field = nullptr;
            for (const TypeDecl::Field& df : decl->fields)
                if (df.name == f.name) field = &df;
            if (!field) {
                error("record '" + decl->name + "' has no field '" + f.name + "'",
                      f.value->span);
                check_expr(*f.value, scope, ctx, nullptr);
                continue;
            }
            if (!provided.insert(f.name).second) {
                error("duplicate field '" + f.name + "' in record literal",
                      f.value->span);
                continue;
            }
            if (!type_name_valid(field->type)) continue;
            Type want = module_.shape_of(field->type.name);
            Type got = check_expr(*f.value, scope, ctx, &want);
            if (got.kind != TypeKind::Unknown && got != want)
                error("type mismatch: field '" + f.name + "' of '" + decl->name +
                          "' is " + want.to_string() + ", found " + got.to_string(),
                      f.value->span);
        }
        for (const TypeDecl::Field& df : decl->fields)
            if (!provided.count(df.name))
                error("record literal for '" + decl->name + "' is missing field '" +
                          df.name + "'",
                      e.span);
        return set_type(e, *expected);
    }

    ResolvedModule module_;
    Diagnostics diagnostics_;
    std::set<std::string> declared_;
    std::multimap<std::string, std::string> call_edges_;
    std::string current_fn_;
    const std::vector<Param>* current_returns_ = nullptr;
};

} // namespace

ResolveResult typecheck(ModuleAst ast) {
    return Checker(std::move(ast)).run();
}

Expr inline_properties(const Expr& e, const ResolvedModule& module) {
    if (e.is<CallExpr>()) {
        const CallExpr& call = e.as<CallExpr>();
        if (const PropertyDecl* prop = module.find_property(call.callee)) {
            std::map<std::string, const Expr*> args;
            std::vector<Expr> inlined_args;
            inlined_args.reserve(call.args.size());
            for (const auto& a : call.args)
                inlined_args.push_back(inline_properties(*a, module));
            for (size_t i = 0; i < prop->params.size(); ++i)
                args[prop->params[i].name] = &inlined_args[i];
            Expr body = inline_properties(prop->body, module);
            return subst_vars(body, args);
        }
    }
    Expr out = clone_expr(e);
    std::visit(
        [&](auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, FieldAccess>) {
                *n.base = inline_properties(*n.base, module);
            } else if constexpr (std::is_same_v<T, UnaryExpr>) {
                *n.operand = inline_properties(*n.operand, module);
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                *n.lhs = inline_properties(*n.lhs, module);
                *n.rhs = inline_properties(*n.rhs, module);
            } else if constexpr (std::is_same_v<T, CallExpr>) {
                for (auto& a : n.args) *a = inline_properties(*a, module);
            } else if constexpr (std::is_same_v<T, RecordLit>) {
                for (auto& f : n.fields) *f.value = inline_properties(*f.value, module);
            } else if constexpr (std::is_same_v<T, TupleExpr>) {
                for (auto& el : n.elems) *el = inline_properties(*el, module);
            }
        },
        out.node);
    return out;
}

} // namespace csl
