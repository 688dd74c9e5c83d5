#pragma once

#include "csl/diagnostics.hpp"
#include "csl/number.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace csl {

// ---------------------------------------------------------------------------
// Resolved types (filled in by the typechecker; TypeKind::Unknown before).
// Constrained named types are transparent for typing: `uint256` types as Int.
// ---------------------------------------------------------------------------

enum class TypeKind { Unknown, Int, Bool, Record, Tuple };

struct Type {
    TypeKind kind = TypeKind::Unknown;
    std::string record_name;       // kind == Record
    std::vector<Type> elems;       // kind == Tuple

    static Type intt() { return {TypeKind::Int, {}, {}}; }
    static Type boolt() { return {TypeKind::Bool, {}, {}}; }
    static Type record(std::string name) { return {TypeKind::Record, std::move(name), {}}; }
    static Type tuple(std::vector<Type> elems) { return {TypeKind::Tuple, {}, std::move(elems)}; }

    bool operator==(const Type& o) const {
        return kind == o.kind && record_name == o.record_name && elems == o.elems;
    }
    bool operator!=(const Type& o) const { return !(*this == o); }

    std::string to_string() const;
};

// ---------------------------------------------------------------------------
// Expressions
// ---------------------------------------------------------------------------

enum class UnaryOp { Neg, Not };
enum class BinaryOp {
    Add, Sub, Mul, Div, Mod, Pow,
    Lt, Le, Gt, Ge, Eq, Ne,
    And, Or, Implies,
};

const char* unary_op_text(UnaryOp op);
const char* binary_op_text(BinaryOp op);

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct IntLit { BigInt value; };
struct BoolLit { bool value = false; };
struct VarRef { std::string name; };
struct FieldAccess { ExprPtr base; std::string field; };
struct UnaryExpr { UnaryOp op; ExprPtr operand; };
struct BinaryExpr { BinaryOp op; ExprPtr lhs, rhs; };
struct CallExpr { std::string callee; std::vector<ExprPtr> args; };
struct RecordLit {
    struct Field { std::string name; ExprPtr value; };
    std::vector<Field> fields;
};
/// Parenthesised comma list; only legal as a tuple-assignment RHS or a
/// multi-value return argument.
struct TupleExpr { std::vector<ExprPtr> elems; };

struct Expr {
    std::variant<IntLit, BoolLit, VarRef, FieldAccess, UnaryExpr, BinaryExpr,
                 CallExpr, RecordLit, TupleExpr> node;
    SourceSpan span;
    Type type; // set by typecheck

    template <typename T> bool is() const { return std::holds_alternative<T>(node); }
    template <typename T> T& as() { return std::get<T>(node); }
    template <typename T> const T& as() const { return std::get<T>(node); }
};

Expr clone_expr(const Expr& e);
bool expr_equal(const Expr& a, const Expr& b); // ignores spans and types

/// Clone with every VarRef found in `replacements` swapped for a clone of its
/// mapped expression. Simultaneous; there are no binders in the language, so
/// plain substitution is capture-free.
Expr subst_vars(const Expr& e, const std::map<std::string, const Expr*>& replacements);

// ---------------------------------------------------------------------------
// Statements
// ---------------------------------------------------------------------------

/// Syntactic type reference: `int`, `bool`, or a declared type name.
struct TypeExpr {
    std::string name;
    SourceSpan span;
};

/// `var` or `var.field.field`, always rooted at a variable.
struct LValue {
    std::vector<std::string> path;
    SourceSpan span;

    std::string to_string() const;
};

struct Stmt;

struct VarDeclStmt {
    struct Binding { TypeExpr type; std::string name; SourceSpan span; };
    std::vector<Binding> vars; // one for `int x = e`, several for `(T a, T b) = f(..)`
    Expr init;
};

struct AssignStmt {
    std::vector<LValue> targets; // simultaneous when more than one
    Expr value;
};

struct ReturnStmt {
    std::vector<Expr> values;
};

struct IfStmt {
    Expr cond;
    std::vector<Stmt> then_body;
    std::vector<Stmt> else_body;
};

struct Stmt {
    std::variant<VarDeclStmt, AssignStmt, ReturnStmt, IfStmt> node;
    SourceSpan span;

    template <typename T> bool is() const { return std::holds_alternative<T>(node); }
    template <typename T> T& as() { return std::get<T>(node); }
    template <typename T> const T& as() const { return std::get<T>(node); }
};

Stmt clone_stmt(const Stmt& s);
bool stmt_equal(const Stmt& a, const Stmt& b);

// ---------------------------------------------------------------------------
// Declarations
// ---------------------------------------------------------------------------

struct TypeDecl {
    struct Field { std::string name; TypeExpr type; SourceSpan span; };

    std::string name;
    bool is_record = false;
    std::vector<Field> fields;     // record form
    std::optional<TypeExpr> base;  // constrained form
    std::string binder;            // constrained form
    std::vector<Expr> wheres;
    SourceSpan span;
};

struct ConstDecl {
    std::string name;
    Expr init;
    SourceSpan span;
};

struct Param {
    std::string name;
    TypeExpr type;
    SourceSpan span;
};

struct PropertyDecl {
    std::string name;
    std::vector<Param> params;
    Expr body;
    SourceSpan span;
};

struct FunctionDecl {
    std::string name;
    std::vector<Param> params;
    std::vector<Param> returns;
    std::vector<Expr> requires_clauses;
    std::vector<Expr> ensures_clauses;
    std::vector<Stmt> body;
    SourceSpan span;
};

struct Decl {
    std::variant<TypeDecl, ConstDecl, PropertyDecl, FunctionDecl> node;

    template <typename T> bool is() const { return std::holds_alternative<T>(node); }
    template <typename T> T& as() { return std::get<T>(node); }
    template <typename T> const T& as() const { return std::get<T>(node); }

    const std::string& name() const;
    const SourceSpan& span() const;
};

struct ModuleAst {
    std::string file;
    std::vector<Decl> decls; // source order
};

bool module_equal(const ModuleAst& a, const ModuleAst& b);

// Convenience builders used by tests and the desugaring passes.
Expr make_int(BigInt v);
Expr make_bool(bool v);
Expr make_var(std::string name);
Expr make_field(Expr base, std::string field);
Expr make_unary(UnaryOp op, Expr operand);
Expr make_binary(BinaryOp op, Expr lhs, Expr rhs);

} // namespace csl
