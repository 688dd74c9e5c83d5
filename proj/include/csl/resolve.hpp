#pragma once

#include "csl/ast.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace csl {

/// Eagerly evaluated `const` declaration.
struct ConstValue {
    Type type; // Int or Bool
    BigInt int_value;
    bool bool_value = false;
};

/// Inclusive integer range recognized from a scalar type's where clauses.
/// Present only when both bounds could be extracted; extra constraints beyond
/// the bounds are fine (consumers re-filter with the full clauses).
struct ScalarBounds {
    BigInt lo;
    BigInt hi;
};

/// One where clause applying to a value of a (possibly chained) scalar type,
/// expressed over `binder`.
struct ScalarConstraint {
    std::string binder;
    const Expr* clause = nullptr;
    std::string type_name; // the declaring type
};

/// A scalar component of a (possibly record) type, addressed by field path.
/// For scalar types the path is empty.
struct LeafField {
    std::vector<std::string> path;
    std::string type_name; // declared name at the leaf ("int", "uint256", ...)
    Type shape;            // Int or Bool
};

/// A record-typed component of a type, addressed by field path; includes the
/// root itself (empty path) when the type is a record.
struct RecordSegment {
    std::vector<std::string> path;
    const TypeDecl* decl = nullptr;
};

/// Typechecked module: name-indexed declarations, evaluated constants, and
/// every expression annotated with its resolved type. Immutable once built;
/// safe to share across threads.
struct ResolvedModule {
    ModuleAst ast;

    std::map<std::string, const TypeDecl*> types;
    std::map<std::string, const PropertyDecl*> properties;
    std::map<std::string, const FunctionDecl*> functions;
    std::map<std::string, ConstValue> consts;
    std::map<std::string, ScalarBounds> bounds;

    const TypeDecl* find_type(const std::string& name) const;
    const PropertyDecl* find_property(const std::string& name) const;
    const FunctionDecl* find_function(const std::string& name) const;
    const ConstValue* find_const(const std::string& name) const;

    /// Shape of a type reference: Int, Bool, or Record(name); transparent
    /// through scalar constraint chains. `name` must be valid.
    const Type& shape_of(const std::string& type_name) const;

    /// Where clauses for a scalar type, innermost declaration first.
    const std::vector<ScalarConstraint>&
    scalar_constraints(const std::string& type_name) const;

    /// Scalar components of a type, in declaration order.
    const std::vector<LeafField>& leaf_fields(const std::string& type_name) const;

    /// Record-typed components of a type (root first), declaration order.
    const std::vector<RecordSegment>&
    record_segments(const std::string& type_name) const;

    // The four queries above sit on interpreter hot paths; typecheck
    // precomputes them for every declared type name plus int/bool. Querying
    // a name outside the memo throws.
    std::map<std::string, Type> shape_memo;
    std::map<std::string, std::vector<ScalarConstraint>> scalar_constraint_memo;
    std::map<std::string, std::vector<LeafField>> leaf_field_memo;
    std::map<std::string, std::vector<RecordSegment>> record_segment_memo;
};

struct ResolveResult {
    std::optional<ResolvedModule> module;
    Diagnostics diagnostics;

    bool ok() const { return module.has_value() && !has_errors(diagnostics); }
};

/// Name resolution, typechecking, const evaluation, definite-return and
/// reachability analysis. On any error the module is absent.
ResolveResult typecheck(ModuleAst ast);

/// Expands property calls in a specification expression by argument
/// substitution until none remain. Properties are non-recursive (enforced by
/// typecheck), so this terminates.
Expr inline_properties(const Expr& e, const ResolvedModule& module);

} // namespace csl
