#include "doctest.h"

#include "test_support.hpp"

#include "csl/parser.hpp"
#include "csl/resolve.hpp"

#include <string>

using namespace csl;
using namespace csl::test;

namespace {

Diagnostics check_errors(const std::string& src) {
    ResolveResult r = typecheck(parse_ok(src));
    REQUIRE(has_errors(r.diagnostics));
    CHECK(!r.module.has_value());
    return r.diagnostics;
}

bool any_error_contains(const Diagnostics& ds, const std::string& needle) {
    for (const Diagnostic& d : ds)
        if (d.severity == Severity::Error &&
            d.message.find(needle) != std::string::npos)
            return true;
    return false;
}

std::string joined(const Diagnostics& ds) {
    std::string out;
    for (const Diagnostic& d : ds) out += d.to_string() + "\n";
    return out;
}

} // namespace

TEST_CASE("casino module typechecks cleanly") {
    ResolvedModule m = check_ok(kCasino);
    CHECK(m.types.size() == 9);
    CHECK(m.properties.size() == 1);
    CHECK(m.functions.size() == 2);
    CHECK(m.consts.size() == 4);
    REQUIRE(m.find_function("playerWins") != nullptr);
    REQUIRE(m.find_property("inState") != nullptr);
    REQUIRE(m.find_type("Casino") != nullptr);

    // Clause expressions come back annotated.
    const FunctionDecl* pw = m.find_function("playerWins");
    for (const Expr& e : pw->requires_clauses) CHECK(e.type.kind == TypeKind::Bool);
    for (const Expr& e : pw->ensures_clauses) CHECK(e.type.kind == TypeKind::Bool);
}

TEST_CASE("constants evaluate eagerly and in order") {
    ResolvedModule m = check_ok(kCasino);
    REQUIRE(m.find_const("IDLE") != nullptr);
    CHECK(m.find_const("IDLE")->int_value == 0);
    CHECK(m.find_const("GAME_AVAILABLE")->int_value == 1);
    CHECK(m.find_const("BET_PLACED")->int_value == 2);
    REQUIRE(m.find_const("MAX_U256") != nullptr);
    CHECK(big_str(m.find_const("MAX_U256")->int_value) == kMaxU256);
}

TEST_CASE("constant arithmetic: truncating division, logic, comparisons") {
    ResolvedModule m = check_ok(R"(const A = -7 / 2
const B = -7 % 2
const C = 7 / 2
const D = true && false || true
const E = 3 < 5
const F = 2**3**2
)");
    CHECK(m.find_const("A")->int_value == -3);
    CHECK(m.find_const("B")->int_value == -1);
    CHECK(m.find_const("C")->int_value == 3);
    CHECK(m.find_const("D")->bool_value == true);
    CHECK(m.find_const("E")->bool_value == true);
    CHECK(m.find_const("F")->int_value == 512); // ** is right-associative
}

TEST_CASE("constant errors: division by zero, bad exponent, forward reference") {
    CHECK(any_error_contains(check_errors("const X = 1 / 0\n"),
                             "division by zero in constant expression"));
    CHECK(any_error_contains(check_errors("const X = 1 % 0\n"),
                             "division by zero in constant expression"));
    CHECK(any_error_contains(check_errors("const X = 2 ** -1\n"),
                             "exponent out of range"));
    CHECK(any_error_contains(check_errors("const A = B + 1\nconst B = 2\n"),
                             "unknown constant 'B'"));
    CHECK(any_error_contains(check_errors("const X = 1 + true\n"),
                             "arithmetic needs integer operands"));
}

TEST_CASE("scalar bounds are recognized from where clauses") {
    ResolvedModule m = check_ok(kCasino);
    REQUIRE(m.bounds.count("uint256"));
    CHECK(m.bounds.at("uint256").lo == 0);
    CHECK(big_str(m.bounds.at("uint256").hi) == kMaxU256);
    REQUIRE(m.bounds.count("State"));
    CHECK(m.bounds.at("State").lo == 0);
    CHECK(m.bounds.at("State").hi == 2);
    REQUIRE(m.bounds.count("Coin"));
    CHECK(m.bounds.at("Coin").lo == 0);
    CHECK(m.bounds.at("Coin").hi == 1);
}

TEST_CASE("bounds recognition: mirrored, strict, equality, chained, residual") {
    ResolvedModule m = check_ok(R"(type A is (int v) where 0 <= v && v < 16
type B is (int v) where v > -3 && 10 > v
type C is (int v) where v == 7
type D is (A v) where v <= 7
type E is (int v) where v >= 0 && v <= 15 && v != 7
type F is (int v) where v >= 0
type G is (int v) where v * v <= 25
)");
    CHECK(m.bounds.at("A").lo == 0);
    CHECK(m.bounds.at("A").hi == 15);
    CHECK(m.bounds.at("B").lo == -2);
    CHECK(m.bounds.at("B").hi == 9);
    CHECK(m.bounds.at("C").lo == 7);
    CHECK(m.bounds.at("C").hi == 7);
    // D inherits A's lower bound through the chain and tightens the upper.
    CHECK(m.bounds.at("D").lo == 0);
    CHECK(m.bounds.at("D").hi == 7);
    // The != clause is extra filtering, not a bound.
    CHECK(m.bounds.at("E").lo == 0);
    CHECK(m.bounds.at("E").hi == 15);
    // One-sided or non-linear constraints yield no bounds entry.
    CHECK(!m.bounds.count("F"));
    CHECK(!m.bounds.count("G"));
}

TEST_CASE("shape_of sees through constrained scalars") {
    ResolvedModule m = check_ok(kCasino);
    CHECK(m.shape_of("int") == Type::intt());
    CHECK(m.shape_of("bool") == Type::boolt());
    CHECK(m.shape_of("uint256") == Type::intt());
    CHECK(m.shape_of("State") == Type::intt());
    CHECK(m.shape_of("Casino") == Type::record("Casino"));
}

TEST_CASE("leaf_fields flattens records in declaration order") {
    ResolvedModule m = check_ok(kCasino);
    std::vector<LeafField> leaves = m.leaf_fields("Casino");
    REQUIRE(leaves.size() == 20);
    CHECK(leaves[0].path == std::vector<std::string>{"address", "address"});
    CHECK(leaves[0].type_name == "int");
    CHECK(leaves[1].path == std::vector<std::string>{"address", "balance"});
    CHECK(leaves[1].type_name == "uint256");
    CHECK(leaves[2].path == std::vector<std::string>{"state"});
    CHECK(leaves[19].path == std::vector<std::string>{"destroyed"});
    CHECK(leaves[19].shape == Type::boolt());

    // A scalar type flattens to a single unnamed leaf.
    std::vector<LeafField> scalar = m.leaf_fields("uint256");
    REQUIRE(scalar.size() == 1);
    CHECK(scalar[0].path.empty());
    CHECK(scalar[0].type_name == "uint256");
}

TEST_CASE("record_segments lists nested records root-first") {
    ResolvedModule m = check_ok(kCasino);
    std::vector<RecordSegment> segs = m.record_segments("Casino");
    REQUIRE(segs.size() == 11);
    CHECK(segs[0].path.empty());
    CHECK(segs[0].decl->name == "Casino");
    CHECK(segs[1].path == std::vector<std::string>{"address"});
    CHECK(segs[1].decl->name == "Address");
    CHECK(segs[6].path == (std::vector<std::string>{"msg", "sender"}));
    CHECK(segs[6].decl->name == "Address");
    CHECK(segs[10].path == (std::vector<std::string>{"tx", "origin"}));

    CHECK(m.record_segments("uint256").empty());
}

TEST_CASE("scalar_constraints walks the declaration chain innermost-first") {
    ResolvedModule m = check_ok(kCasino);
    std::vector<ScalarConstraint> cs = m.scalar_constraints("uint256");
    REQUIRE(cs.size() == 2);
    CHECK(cs[0].binder == "b");
    CHECK(cs[0].type_name == "uint256");

    ResolvedModule chain = check_ok(R"(type A is (int v) where v >= 0 && v <= 15
type D is (A w) where w <= 7
)");
    std::vector<ScalarConstraint> dcs = chain.scalar_constraints("D");
    REQUIRE(dcs.size() == 2);
    CHECK(dcs[0].type_name == "D");
    CHECK(dcs[0].binder == "w");
    CHECK(dcs[1].type_name == "A");
    CHECK(dcs[1].binder == "v");
}

TEST_CASE("unknown identifiers and fields are reported") {
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int y):
    return x + z
)"),
                             "unknown identifier 'z'"));
    CHECK(any_error_contains(check_errors(R"(type P is {int x}

function f(P p) -> (int y):
    return p.q
)"),
                             "record 'P' has no field 'q'"));
    CHECK(any_error_contains(check_errors(R"(function f(Q q) -> (int y):
    return 0
)"),
                             "unknown type 'Q'"));
}

TEST_CASE("multi-binding declarations must match the callee arity") {
    Diagnostics ds = check_errors(R"(function three() -> (int a, int b, int c):
    return 1, 2, 3

function g() -> (int r):
    (int a, int b) = three()
    return a
)");
    CHECK(any_error_contains(ds, "returns 3 value(s), but 2 are expected"));
}

TEST_CASE("record literals must provide every field exactly once") {
    CHECK(any_error_contains(check_errors(R"(type P is {int x, int y}

function mk() -> (P p):
    return {x: 1}
)"),
                             "missing field 'y'"));
    CHECK(any_error_contains(check_errors(R"(type P is {int x}

function mk() -> (P p):
    return {x: 1, x: 2}
)"),
                             "duplicate field 'x'"));
    CHECK(any_error_contains(check_errors(R"(type P is {int x}

function mk() -> (P p):
    return {x: 1, y: 2}
)"),
                             "record 'P' has no field 'y'"));
    // No context to type the literal against.
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (bool r):
    return {x: 1} == {x: 1}
)"),
                             "record literal needs a record-typed context"));
}

TEST_CASE("record literals take their type from the expected side of ==") {
    ResolvedModule m = check_ok(R"(type P is {int x, int y}

function f(P p) -> (bool r):
    bool b = p == {x: 1, y: 2}
    bool c = {x: 1, y: 2} == p
    return b && c
)");
    CHECK(m.find_function("f") != nullptr);
}

TEST_CASE("properties are spec-only") {
    Diagnostics ds = check_errors(R"(property pos(int v) => v > 0

function f(int x) -> (bool r):
    bool b = pos(x)
    return b
)");
    CHECK(any_error_contains(ds, "property 'pos' may only be used in specifications"));
}

TEST_CASE("functions cannot be called from specs or nested expressions") {
    CHECK(any_error_contains(check_errors(R"(function inc(int x) -> (int r):
    return x + 1

function f(int x) -> (int r)
requires inc(x) > 0:
    return x
)"),
                             "functions may not be called in specifications"));
    CHECK(any_error_contains(check_errors(R"(function inc(int x) -> (int r):
    return x + 1

function f(int x) -> (int r):
    int y = inc(x) + 1
    return y
)"),
                             "whole right-hand side"));
}

TEST_CASE("recursion is rejected for types, properties, and functions") {
    CHECK(any_error_contains(check_errors(R"(type A is {B b}

type B is {A a}
)"),
                             "recursive type definition"));
    CHECK(any_error_contains(check_errors("type S is (S x) where x >= 0\n"),
                             "recursive type definition"));
    CHECK(any_error_contains(check_errors(R"(property a(int x) => b(x)

property b(int x) => a(x)
)"),
                             "recursive property definition"));
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int r):
    int y = g(x)
    return y

function g(int x) -> (int r):
    int y = f(x)
    return y
)"),
                             "recursive call chain"));
}

TEST_CASE("definite return analysis") {
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int r):
    if x > 0:
        return 1
)"),
                             "may exit without returning"));
    ResolvedModule ok = check_ok(R"(function g(int x) -> (int r):
    if x > 0:
        return 1
    else:
        return 0
)");
    CHECK(ok.find_function("g") != nullptr);
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int r):
    return 1
    return 2
)"),
                             "unreachable code after return"));
}

TEST_CASE("shadowing and duplicate names are rejected") {
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int r):
    int x = 1
    return x
)"),
                             "name 'x' already declared"));
    CHECK(any_error_contains(check_errors(R"(function h(int x) -> (int r):
    int y = 1
    if x > 0:
        int y = 2
        return y
    else:
        return y
)"),
                             "name 'y' already declared"));
    // Sibling blocks do not share scope.
    ResolvedModule ok = check_ok(R"(function g(int x) -> (int r):
    if x > 0:
        int y = 1
        return y
    else:
        int y = 2
        return y
)");
    CHECK(ok.find_function("g") != nullptr);
    CHECK(any_error_contains(check_errors("const A = 1\nconst A = 2\n"),
                             "duplicate declaration of 'A'"));
    CHECK(any_error_contains(check_errors(R"(type A is (int x) where x >= 0

const A = 1
)"),
                             "duplicate declaration of 'A'"));
    CHECK(any_error_contains(check_errors("type int is (int b) where b >= 0\n"),
                             "cannot redeclare builtin type 'int'"));
    CHECK(any_error_contains(check_errors(R"(function f(int x, int x) -> (int r):
    return x
)"),
                             "name 'x' already declared"));
}

TEST_CASE("assignment rules: unknown target, constants, overlap") {
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int r):
    y = 1
    return x
)"),
                             "unknown identifier 'y'"));
    CHECK(any_error_contains(check_errors(R"(const C = 1

function f(int x) -> (int r):
    C = 2
    return x
)"),
                             "cannot assign to constant 'C'"));
    CHECK(any_error_contains(check_errors(R"(type P is {int x, int y}

function f(P p) -> (P r):
    (p, p.x) = (p, 1)
    return p
)"),
                             "overlapping assignment targets"));
    CHECK(any_error_contains(check_errors(R"(function f(int a, int b) -> (int r):
    (a, b) = (1, 2, 3)
    return a
)"),
                             "arity mismatch"));
}

TEST_CASE("type mismatches carry both types") {
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int r):
    int y = true
    return y
)"),
                             "cannot initialize 'y' (int) from bool"));
    // Records are nominal.
    Diagnostics ds = check_errors(R"(type P is {int x}

type Q is {int x}

function f(P p) -> (Q q):
    return p
)");
    CHECK(any_error_contains(ds, "is P, expected Q"));
    CHECK(any_error_contains(check_errors(R"(type P is {int x}

function id(P p) -> (P r):
    return p

function f(int x) -> (int r):
    P q = id(x)
    return q.x
)"),
                             "argument 1 of 'id' must be P, found int"));
}

TEST_CASE("constrained scalars are transparent in arithmetic") {
    ResolvedModule m = check_ok(R"(type uint4 is (int b) where b >= 0 && b <= 15

function f(uint4 a) -> (int r):
    int x = a + 1
    return x
)");
    CHECK(m.find_function("f") != nullptr);
}

TEST_CASE("spec scoping: return names only in ensures") {
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int y)
requires y > 0:
    return x
)"),
                             "unknown identifier 'y'"));
    CHECK(any_error_contains(check_errors(R"(function g(int x) -> (int y):
    return y
)"),
                             "unknown identifier 'y'"));
    ResolvedModule ok = check_ok(R"(function h(int x) -> (int y)
ensures y == x:
    return x
)");
    CHECK(ok.find_function("h") != nullptr);
}

TEST_CASE("boolean positions are enforced") {
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int r):
    if x:
        return 1
    else:
        return 0
)"),
                             "if condition must be boolean"));
    CHECK(any_error_contains(check_errors("type T is (int b) where b + 1\n"),
                             "where clause must be boolean"));
    CHECK(any_error_contains(check_errors(R"(function f(int x) -> (int r)
ensures r + 1:
    return x
)"),
                             "ensures clause must be boolean"));
}

TEST_CASE("parenthesized return values splice into the value list") {
    ResolvedModule m = check_ok(R"(function divmod(int a, int b) -> (int q, int r)
requires b > 0:
    return (a / b, a % b)
)");
    const FunctionDecl* f = m.find_function("divmod");
    REQUIRE(f != nullptr);
    REQUIRE(f->body.size() == 1);
    REQUIRE(f->body[0].is<ReturnStmt>());
    CHECK(f->body[0].as<ReturnStmt>().values.size() == 2);
}

TEST_CASE("inline_properties expands transitively and substitutes arguments") {
    ResolvedModule m = check_ok(R"(property pos(int v) => v > 0

property both(int a, int b) => pos(a) && pos(b)

function f(int x, int y) -> (int r)
requires both(x + 1, y):
    return x
)");
    const FunctionDecl* f = m.find_function("f");
    REQUIRE(f != nullptr);
    Expr inlined = inline_properties(f->requires_clauses[0], m);
    CHECK(pretty_print(inlined) == "x + 1 > 0 && y > 0");
}

TEST_CASE("inline_properties is capture-free under colliding names") {
    ResolvedModule m = check_ok(R"(property shifted(int x) => x + 1 > 0

function f(int x) -> (int r)
requires shifted(x * 2):
    return x
)");
    Expr inlined = inline_properties(m.find_function("f")->requires_clauses[0], m);
    CHECK(pretty_print(inlined) == "x * 2 + 1 > 0");
}

TEST_CASE("diagnostics are deterministic and in source order") {
    const char* src = R"(function f(int x) -> (int r):
    return q

function g(int x) -> (int r):
    return w
)";
    Diagnostics first = check_errors(src);
    Diagnostics second = check_errors(src);
    REQUIRE(first.size() == second.size());
    for (size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].message == second[i].message);
        CHECK(first[i].span.start_line == second[i].span.start_line);
    }
    CAPTURE(joined(first));
    REQUIRE(first.size() == 2);
    CHECK(first[0].message.find("'q'") != std::string::npos);
    CHECK(first[0].span.start_line == 2);
    CHECK(first[1].message.find("'w'") != std::string::npos);
    CHECK(first[1].span.start_line == 5);
}
