#include "csl/parser.hpp"

#include <sstream>

namespace csl {

namespace {

// Binding strength, loosest first. Matches the parser's ladder.
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
    case BinaryOp::Ge: return 4;
    case BinaryOp::Add:
    case BinaryOp::Sub: return 5;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod: return 6;
    case BinaryOp::Pow: return 7;
    }
    return 0;
}

void print_expr(std::ostream& os, const Expr& e, int parent_prec);

void print_expr_list(std::ostream& os, const std::vector<ExprPtr>& list) {
    for (size_t i = 0; i < list.size(); ++i) {
        if (i) os << ", ";
        print_expr(os, *list[i], 0);
    }
}

void print_expr(std::ostream& os, const Expr& e, int parent_prec) {
    if (e.is<IntLit>()) {
        os << big_str(e.as<IntLit>().value);
    } else if (e.is<BoolLit>()) {
        os << (e.as<BoolLit>().value ? "true" : "false");
    } else if (e.is<VarRef>()) {
        os << e.as<VarRef>().name;
    } else if (e.is<FieldAccess>()) {
        const auto& fa = e.as<FieldAccess>();
        print_expr(os, *fa.base, 8);
        os << "." << fa.field;
    } else if (e.is<UnaryExpr>()) {
        const auto& u = e.as<UnaryExpr>();
        os << unary_op_text(u.op);
        print_expr(os, *u.operand, 8);
    } else if (e.is<BinaryExpr>()) {
        const auto& b = e.as<BinaryExpr>();
        int prec = prec_of(b.op);
        bool parens = prec < parent_prec;
        // Right-associative operators need parens around a same-precedence
        // left child; left-associative ones around a same-precedence right
        // child.
        bool right_assoc = b.op == BinaryOp::Implies || b.op == BinaryOp::Pow;
        if (parens) os << "(";
        print_expr(os, *b.lhs, right_assoc ? prec + 1 : prec);
        os << " " << binary_op_text(b.op) << " ";
        print_expr(os, *b.rhs, right_assoc ? prec : prec + 1);
        if (parens) os << ")";
    } else if (e.is<CallExpr>()) {
        const auto& c = e.as<CallExpr>();
        os << c.callee << "(";
        print_expr_list(os, c.args);
        os << ")";
    } else if (e.is<RecordLit>()) {
        const auto& r = e.as<RecordLit>();
        os << "{";
        for (size_t i = 0; i < r.fields.size(); ++i) {
            if (i) os << ", ";
            os << r.fields[i].name << ": ";
            print_expr(os, *r.fields[i].value, 0);
        }
        os << "}";
    } else {
        const auto& t = e.as<TupleExpr>();
        os << "(";
        print_expr_list(os, t.elems);
        os << ")";
    }
}

void indent_to(std::ostream& os, int depth) {
    for (int i = 0; i < depth; ++i) os << "    ";
}

void print_stmts(std::ostream& os, const std::vector<Stmt>& stmts, int depth);

void print_stmt(std::ostream& os, const Stmt& s, int depth) {
    indent_to(os, depth);
    if (s.is<VarDeclStmt>()) {
        const auto& v = s.as<VarDeclStmt>();
        if (v.vars.size() == 1) {
            os << v.vars[0].type.name << " " << v.vars[0].name << " = ";
        } else {
            os << "(";
            for (size_t i = 0; i < v.vars.size(); ++i) {
                if (i) os << ", ";
                os << v.vars[i].type.name << " " << v.vars[i].name;
            }
            os << ") = ";
        }
        print_expr(os, v.init, 0);
        os << "\n";
    } else if (s.is<AssignStmt>()) {
        const auto& a = s.as<AssignStmt>();
        if (a.targets.size() == 1) {
            os << a.targets[0].to_string() << " = ";
        } else {
            os << "(";
            for (size_t i = 0; i < a.targets.size(); ++i) {
                if (i) os << ", ";
                os << a.targets[i].to_string();
            }
            os << ") = ";
        }
        print_expr(os, a.value, 0);
        os << "\n";
    } else if (s.is<ReturnStmt>()) {
        const auto& r = s.as<ReturnStmt>();
        os << "return";
        for (size_t i = 0; i < r.values.size(); ++i) {
            os << (i ? ", " : " ");
            print_expr(os, r.values[i], 0);
        }
        os << "\n";
    } else {
        const auto& i = s.as<IfStmt>();
        os << "if ";
        print_expr(os, i.cond, 0);
        os << ":\n";
        print_stmts(os, i.then_body, depth + 1);
        if (!i.else_body.empty()) {
            indent_to(os, depth);
            os << "else:\n";
            print_stmts(os, i.else_body, depth + 1);
        }
    }
}

void print_stmts(std::ostream& os, const std::vector<Stmt>& stmts, int depth) {
    for (const Stmt& s : stmts) print_stmt(os, s, depth);
}

void print_params(std::ostream& os, const std::vector<Param>& params) {
    for (size_t i = 0; i < params.size(); ++i) {
        if (i) os << ", ";
        os << params[i].type.name << " " << params[i].name;
    }
}

} // namespace

std::string pretty_print(const Expr& expr) {
    std::ostringstream os;
    print_expr(os, expr, 0);
    return os.str();
}

std::string pretty_print(const ModuleAst& module) {
    std::ostringstream os;
    bool first = true;
    for (const Decl& decl : module.decls) {
        if (!first) os << "\n";
        first = false;
        if (decl.is<TypeDecl>()) {
            const auto& t = decl.as<TypeDecl>();
            os << "type " << t.name << " is ";
            if (t.is_record) {
                os << "{\n";
                for (size_t i = 0; i < t.fields.size(); ++i) {
                    indent_to(os, 1);
                    os << t.fields[i].type.name << " " << t.fields[i].name
                       << (i + 1 < t.fields.size() ? "," : "") << "\n";
                }
                os << "}\n";
            } else {
                os << "(" << t.base->name << " " << t.binder << ")\n";
            }
            for (const Expr& w : t.wheres) {
                os << "where ";
                print_expr(os, w, 0);
                os << "\n";
            }
        } else if (decl.is<ConstDecl>()) {
            const auto& c = decl.as<ConstDecl>();
            os << "const " << c.name << " = ";
            print_expr(os, c.init, 0);
            os << "\n";
        } else if (decl.is<PropertyDecl>()) {
            const auto& p = decl.as<PropertyDecl>();
            os << "property " << p.name << "(";
            print_params(os, p.params);
            os << ") => ";
            print_expr(os, p.body, 0);
            os << "\n";
        } else {
            const auto& f = decl.as<FunctionDecl>();
            os << "function " << f.name << "(";
            print_params(os, f.params);
            os << ")";
            if (!f.returns.empty()) {
                os << " -> (";
                print_params(os, f.returns);
                os << ")";
            }
            bool any_clause =
                !f.requires_clauses.empty() || !f.ensures_clauses.empty();
            if (!any_clause) {
                os << ":\n";
            } else {
                os << "\n";
                size_t total =
                    f.requires_clauses.size() + f.ensures_clauses.size();
                size_t seen = 0;
                for (const Expr& r : f.requires_clauses) {
                    os << "requires ";
                    print_expr(os, r, 0);
                    os << (++seen == total ? ":\n" : "\n");
                }
                for (const Expr& e : f.ensures_clauses) {
                    os << "ensures ";
                    print_expr(os, e, 0);
                    os << (++seen == total ? ":\n" : "\n");
                }
            }
            print_stmts(os, f.body, 1);
        }
    }
    return os.str();
}

} // namespace csl
