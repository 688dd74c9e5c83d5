#include "csl/ast.hpp"

#include <sstream>

namespace csl {

SourceSpan SourceSpan::join(const SourceSpan& a, const SourceSpan& b) {
    SourceSpan out = a;
    if (b.start_line < out.start_line ||
        (b.start_line == out.start_line && b.start_col < out.start_col)) {
        out.start_line = b.start_line;
        out.start_col = b.start_col;
    }
    if (b.end_line > out.end_line ||
        (b.end_line == out.end_line && b.end_col > out.end_col)) {
        out.end_line = b.end_line;
        out.end_col = b.end_col;
    }
    return out;
}

std::string SourceSpan::to_string() const {
    std::ostringstream os;
    os << file << ":" << start_line << ":" << start_col;
    return os.str();
}

std::string Diagnostic::to_string() const {
    std::ostringstream os;
    os << span.to_string() << ": "
       << (severity == Severity::Error ? "error" : "warning") << ": " << message;
    return os.str();
}

std::string Type::to_string() const {
    switch (kind) {
    case TypeKind::Unknown: return "?";
    case TypeKind::Int: return "int";
    case TypeKind::Bool: return "bool";
    case TypeKind::Record: return record_name;
    case TypeKind::Tuple: {
        std::string s = "(";
        for (size_t i = 0; i < elems.size(); ++i) {
            if (i) s += ", ";
            s += elems[i].to_string();
        }
        return s + ")";
    }
    }
    return "?";
}

const char* unary_op_text(UnaryOp op) {
    switch (op) {
    case UnaryOp::Neg: return "-";
    case UnaryOp::Not: return "!";
    }
    return "?";
}

const char* binary_op_text(BinaryOp op) {
    switch (op) {
    case BinaryOp::Add: return "+";
    case BinaryOp::Sub: return "-";
    case BinaryOp::Mul: return "*";
    case BinaryOp::Div: return "/";
    case BinaryOp::Mod: return "%";
    case BinaryOp::Pow: return "**";
    case BinaryOp::Lt: return "<";
    case BinaryOp::Le: return "<=";
    case BinaryOp::Gt: return ">";
    case BinaryOp::Ge: return ">=";
    case BinaryOp::Eq: return "==";
    case BinaryOp::Ne: return "!=";
    case BinaryOp::And: return "&&";
    case BinaryOp::Or: return "||";
    case BinaryOp::Implies: return "==>";
    }
    return "?";
}

std::string LValue::to_string() const {
    std::string s;
    for (size_t i = 0; i < path.size(); ++i) {
        if (i) s += ".";
        s += path[i];
    }
    return s;
}

static ExprPtr clone_ptr(const ExprPtr& p) {
    return p ? std::make_unique<Expr>(clone_expr(*p)) : nullptr;
}

Expr clone_expr(const Expr& e) {
    Expr out;
    out.span = e.span;
    out.type = e.type;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, IntLit> || std::is_same_v<T, BoolLit> ||
                          std::is_same_v<T, VarRef>) {
                out.node = n;
            } else if constexpr (std::is_same_v<T, FieldAccess>) {
                out.node = FieldAccess{clone_ptr(n.base), n.field};
            } else if constexpr (std::is_same_v<T, UnaryExpr>) {
                out.node = UnaryExpr{n.op, clone_ptr(n.operand)};
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                out.node = BinaryExpr{n.op, clone_ptr(n.lhs), clone_ptr(n.rhs)};
            } else if constexpr (std::is_same_v<T, CallExpr>) {
                CallExpr c{n.callee, {}};
                c.args.reserve(n.args.size());
                for (const auto& a : n.args) c.args.push_back(clone_ptr(a));
                out.node = std::move(c);
            } else if constexpr (std::is_same_v<T, RecordLit>) {
                RecordLit r;
                r.fields.reserve(n.fields.size());
                for (const auto& f : n.fields)
                    r.fields.push_back({f.name, clone_ptr(f.value)});
                out.node = std::move(r);
            } else if constexpr (std::is_same_v<T, TupleExpr>) {
                TupleExpr t;
                t.elems.reserve(n.elems.size());
                for (const auto& el : n.elems) t.elems.push_back(clone_ptr(el));
                out.node = std::move(t);
            }
        },
        e.node);
    return out;
}

Expr subst_vars(const Expr& e, const std::map<std::string, const Expr*>& replacements) {
    if (e.is<VarRef>()) {
        auto it = replacements.find(e.as<VarRef>().name);
        if (it != replacements.end()) return clone_expr(*it->second);
        return clone_expr(e);
    }
    Expr out = clone_expr(e);
    std::visit(
        [&](auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, FieldAccess>) {
                *n.base = subst_vars(*n.base, replacements);
            } else if constexpr (std::is_same_v<T, UnaryExpr>) {
                *n.operand = subst_vars(*n.operand, replacements);
            } else if constexpr (std::is_same_v<T, BinaryExpr>) {
                *n.lhs = subst_vars(*n.lhs, replacements);
                *n.rhs = subst_vars(*n.rhs, replacements);
            } else if constexpr (std::is_same_v<T, CallExpr>) {
                for (auto& a : n.args) *a = subst_vars(*a, replacements);
            } else if constexpr (std::is_same_v<T, RecordLit>) {
                for (auto& f : n.fields) *f.value = subst_vars(*f.value, replacements);
            } else if constexpr (std::is_same_v<T, TupleExpr>) {
                for (auto& el : n.elems) *el = subst_vars(*el, replacements);
            }
        },
        out.node);
    return out;
}

bool expr_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    if (a.is<IntLit>()) return a.as<IntLit>().value == b.as<IntLit>().value;
    if (a.is<BoolLit>()) return a.as<BoolLit>().value == b.as<BoolLit>().value;
    if (a.is<VarRef>()) return a.as<VarRef>().name == b.as<VarRef>().name;
    if (a.is<FieldAccess>()) {
        const auto& x = a.as<FieldAccess>();
        const auto& y = b.as<FieldAccess>();
        return x.field == y.field && expr_equal(*x.base, *y.base);
    }
    if (a.is<UnaryExpr>()) {
        const auto& x = a.as<UnaryExpr>();
        const auto& y = b.as<UnaryExpr>();
        return x.op == y.op && expr_equal(*x.operand, *y.operand);
    }
    if (a.is<BinaryExpr>()) {
        const auto& x = a.as<BinaryExpr>();
        const auto& y = b.as<BinaryExpr>();
        return x.op == y.op && expr_equal(*x.lhs, *y.lhs) && expr_equal(*x.rhs, *y.rhs);
    }
    if (a.is<CallExpr>()) {
        const auto& x = a.as<CallExpr>();
        const auto& y = b.as<CallExpr>();
        if (x.callee != y.callee || x.args.size() != y.args.size()) return false;
        for (size_t i = 0; i < x.args.size(); ++i)
            if (!expr_equal(*x.args[i], *y.args[i])) return false;
        return true;
    }
    if (a.is<RecordLit>()) {
        const auto& x = a.as<RecordLit>();
        const auto& y = b.as<RecordLit>();
        if (x.fields.size() != y.fields.size()) return false;
        for (size_t i = 0; i < x.fields.size(); ++i)
            if (x.fields[i].name != y.fields[i].name ||
                !expr_equal(*x.fields[i].value, *y.fields[i].value))
                return false;
        return true;
    }
    const auto& x = a.as<TupleExpr>();
    const auto& y = b.as<TupleExpr>();
    if (x.elems.size() != y.elems.size()) return false;
    for (size_t i = 0; i < x.elems.size(); ++i)
        if (!expr_equal(*x.elems[i], *y.elems[i])) return false;
    return true;
}

Stmt clone_stmt(const Stmt& s) {
    Stmt out;
    out.span = s.span;
    std::visit(
        [&](const auto& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, VarDeclStmt>) {
                out.node = VarDeclStmt{n.vars, clone_expr(n.init)};
            } else if constexpr (std::is_same_v<T, AssignStmt>) {
                out.node = AssignStmt{n.targets, clone_expr(n.value)};
            } else if constexpr (std::is_same_v<T, ReturnStmt>) {
                ReturnStmt r;
                for (const auto& v : n.values) r.values.push_back(clone_expr(v));
                out.node = std::move(r);
            } else {
                IfStmt i;
                i.cond = clone_expr(n.cond);
                for (const auto& t : n.then_body) i.then_body.push_back(clone_stmt(t));
                for (const auto& e : n.else_body) i.else_body.push_back(clone_stmt(e));
                out.node = std::move(i);
            }
        },
        s.node);
    return out;
}

static bool stmts_equal(const std::vector<Stmt>& a, const std::vector<Stmt>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!stmt_equal(a[i], b[i])) return false;
    return true;
}

bool stmt_equal(const Stmt& a, const Stmt& b) {
    if (a.node.index() != b.node.index()) return false;
    if (a.is<VarDeclStmt>()) {
        const auto& x = a.as<VarDeclStmt>();
        const auto& y = b.as<VarDeclStmt>();
        if (x.vars.size() != y.vars.size()) return false;
        for (size_t i = 0; i < x.vars.size(); ++i)
            if (x.vars[i].name != y.vars[i].name ||
                x.vars[i].type.name != y.vars[i].type.name)
                return false;
        return expr_equal(x.init, y.init);
    }
    if (a.is<AssignStmt>()) {
        const auto& x = a.as<AssignStmt>();
        const auto& y = b.as<AssignStmt>();
        if (x.targets.size() != y.targets.size()) return false;
        for (size_t i = 0; i < x.targets.size(); ++i)
            if (x.targets[i].path != y.targets[i].path) return false;
        return expr_equal(x.value, y.value);
    }
    if (a.is<ReturnStmt>()) {
        const auto& x = a.as<ReturnStmt>();
        const auto& y = b.as<ReturnStmt>();
        if (x.values.size() != y.values.size()) return false;
        for (size_t i = 0; i < x.values.size(); ++i)
            if (!expr_equal(x.values[i], y.values[i])) return false;
        return true;
    }
    const auto& x = a.as<IfStmt>();
    const auto& y = b.as<IfStmt>();
    return expr_equal(x.cond, y.cond) && stmts_equal(x.then_body, y.then_body) &&
           stmts_equal(x.else_body, y.else_body);
}

const std::string& Decl::name() const {
    return std::visit([](const auto& d) -> const std::string& { return d.name; }, node);
}

const SourceSpan& Decl::span() const {
    return std::visit([](const auto& d) -> const SourceSpan& { return d.span; }, node);
}

static bool exprs_equal(const std::vector<Expr>& a, const std::vector<Expr>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!expr_equal(a[i], b[i])) return false;
    return true;
}

static bool params_equal(const std::vector<Param>& a, const std::vector<Param>& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (a[i].name != b[i].name || a[i].type.name != b[i].type.name) return false;
    return true;
}

bool module_equal(const ModuleAst& a, const ModuleAst& b) {
    if (a.decls.size() != b.decls.size()) return false;
    for (size_t i = 0; i < a.decls.size(); ++i) {
        const Decl& x = a.decls[i];
        const Decl& y = b.decls[i];
        if (x.node.index() != y.node.index()) return false;
        if (x.is<TypeDecl>()) {
            const auto& t = x.as<TypeDecl>();
            const auto& u = y.as<TypeDecl>();
            if (t.name != u.name || t.is_record != u.is_record) return false;
            if (t.fields.size() != u.fields.size()) return false;
            for (size_t j = 0; j < t.fields.size(); ++j)
                if (t.fields[j].name != u.fields[j].name ||
                    t.fields[j].type.name != u.fields[j].type.name)
                    return false;
            if (t.base.has_value() != u.base.has_value()) return false;
            if (t.base && (t.base->name != u.base->name || t.binder != u.binder))
                return false;
            if (!exprs_equal(t.wheres, u.wheres)) return false;
        } else if (x.is<ConstDecl>()) {
            const auto& c = x.as<ConstDecl>();
            const auto& d = y.as<ConstDecl>();
            if (c.name != d.name || !expr_equal(c.init, d.init)) return false;
        } else if (x.is<PropertyDecl>()) {
            const auto& p = x.as<PropertyDecl>();
            const auto& q = y.as<PropertyDecl>();
            if (p.name != q.name || !params_equal(p.params, q.params) ||
                !expr_equal(p.body, q.body))
                return false;
        } else {
            const auto& f = x.as<FunctionDecl>();
            const auto& g = y.as<FunctionDecl>();
            if (f.name != g.name || !params_equal(f.params, g.params) ||
                !params_equal(f.returns, g.returns) ||
                !exprs_equal(f.requires_clauses, g.requires_clauses) ||
                !exprs_equal(f.ensures_clauses, g.ensures_clauses) ||
                !stmts_equal(f.body, g.body))
                return false;
        }
    }
    return true;
}

Expr make_int(BigInt v) {
    Expr e;
    e.node = IntLit{std::move(v)};
    e.type = Type::intt();
    return e;
}

Expr make_bool(bool v) {
    Expr e;
    e.node = BoolLit{v};
    e.type = Type::boolt();
    return e;
}

Expr make_var(std::string name) {
    Expr e;
    e.node = VarRef{std::move(name)};
    return e;
}

Expr make_field(Expr base, std::string field) {
    Expr e;
    e.span = base.span;
    e.node = FieldAccess{std::make_unique<Expr>(std::move(base)), std::move(field)};
    return e;
}

Expr make_unary(UnaryOp op, Expr operand) {
    Expr e;
    e.span = operand.span;
    e.node = UnaryExpr{op, std::make_unique<Expr>(std::move(operand))};
    return e;
}

Expr make_binary(BinaryOp op, Expr lhs, Expr rhs) {
    Expr e;
    e.span = SourceSpan::join(lhs.span, rhs.span);
    e.node = BinaryExpr{op, std::make_unique<Expr>(std::move(lhs)),
                        std::make_unique<Expr>(std::move(rhs))};
    return e;
}

} // namespace csl
