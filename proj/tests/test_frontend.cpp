#include "doctest.h"

#include "csl/lexer.hpp"
#include "csl/parser.hpp"

using namespace csl;

namespace {

// Casino state record, as in the contract model sources.
const char* kCasinoType = R"(public type Casino is {
    Address address,           State state,
    Address operator,         uint256 pot,
    uint256 timeout,          uint256 secretNumber,
    Address player,           Wager wager,
    Message msg,             Block block,
    Transaction tx,          bool destroyed
}
where state == BET_PLACED ==> pot + wager.value == address.balance
where state != BET_PLACED ==> pot == address.balance
where operator.address != address.address
where player.address != address.address
where msg.sender.address != address.address
where block.coinbase.address != address.address
where tx.origin.address != address.address
)";

const char* kPlayerWins = R"(function playerWins(Casino casino) -> (Casino out)
requires inState(casino, BET_PLACED)
requires casino.wager.value * 2 <= casino.address.balance
requires casino.wager.value * 2 + casino.player.balance < MAX256
ensures out.pot == casino.pot - casino.wager.value
ensures out.player.balance == casino.player.balance + casino.wager.value * 2
ensures out.wager.value == 0
ensures out.address.balance == casino.address.balance - casino.wager.value * 2:
    (Address a1, Address a2) = transfer(casino.player, casino.address, casino.wager.value * 2)
    (casino.player, casino.address, casino.pot, casino.wager.value) =
        (a1, a2, casino.pot - casino.wager.value, 0)
    return casino
)";

ModuleAst parse_ok(const std::string& src) {
    ParseResult r = parse(src, "test.csl");
    for (const Diagnostic& d : r.diagnostics) {
        CAPTURE(d.to_string());
        CHECK(d.severity != Severity::Error);
    }
    REQUIRE(r.module.has_value());
    return std::move(*r.module);
}

bool any_error_contains(const Diagnostics& ds, const std::string& needle) {
    for (const Diagnostic& d : ds)
        if (d.severity == Severity::Error &&
            d.message.find(needle) != std::string::npos)
            return true;
    return false;
}

} // namespace

TEST_CASE("lexer: token stream of a const declaration") {
    LexResult r = lex("const MAX = 2 ** 8\n", "t");
    REQUIRE(r.ok());
    std::vector<TokenKind> kinds;
    for (const Token& t : r.tokens) kinds.push_back(t.kind);
    CHECK(kinds == std::vector<TokenKind>{
                       TokenKind::KwConst, TokenKind::Identifier,
                       TokenKind::Assign, TokenKind::IntLiteral,
                       TokenKind::StarStar, TokenKind::IntLiteral,
                       TokenKind::Newline, TokenKind::EndOfFile});
    CHECK(r.tokens[1].text == "MAX");
    CHECK(r.tokens[3].int_value == 2);
    CHECK(r.tokens[5].int_value == 8);
}

TEST_CASE("lexer: tabs are rejected") {
    LexResult r = lex("\tint x = 1\n", "t");
    CHECK(!r.ok());
    CHECK(any_error_contains(r.diagnostics, "tab"));
    // Exactly one diagnostic for the one tab.
    CHECK(r.diagnostics.size() == 1);
}

TEST_CASE("lexer: maximal munch for ==> vs == vs =>") {
    LexResult r = lex("a ==> b == c => d\n", "t");
    REQUIRE(r.ok());
    CHECK(r.tokens[1].kind == TokenKind::Implies);
    CHECK(r.tokens[3].kind == TokenKind::EqEq);
    CHECK(r.tokens[5].kind == TokenKind::FatArrow);
}

TEST_CASE("lexer: big integer literals are exact") {
    // 2^256 - 1 written in decimal.
    const char* dec =
        "11579208923731619542357098500868790785326998466564056403945758400791"
        "3129639935";
    LexResult r = lex(std::string(dec) + "\n", "t");
    REQUIRE(r.ok());
    BigInt expected = big_pow(2, 256) - 1;
    CHECK(r.tokens[0].int_value == expected);
}

TEST_CASE("lexer: logical line continuation") {
    SUBCASE("after a trailing operator") {
        LexResult r = lex("const A = 1 +\n    2\n", "t");
        REQUIRE(r.ok());
        // No Indent token: the second physical line continues the first.
        for (const Token& t : r.tokens) CHECK(t.kind != TokenKind::Indent);
    }
    SUBCASE("after a trailing =") {
        LexResult r = lex("const A =\n    7\n", "t");
        REQUIRE(r.ok());
        for (const Token& t : r.tokens) CHECK(t.kind != TokenKind::Indent);
    }
    SUBCASE("inside brackets") {
        LexResult r = lex("property p(int a,\n        int b) => true\n", "t");
        REQUIRE(r.ok());
        int newlines = 0;
        for (const Token& t : r.tokens)
            if (t.kind == TokenKind::Newline) ++newlines;
        CHECK(newlines == 1);
    }
}

TEST_CASE("lexer: indentation mismatch is an error") {
    // Dedent to a level never pushed: 4 then 2.
    LexResult r = lex("function f() -> (int r):\n    int x = 1\n  return x\n", "t");
    CHECK(any_error_contains(r.diagnostics, "indent"));
}

TEST_CASE("parser: empty and comment-only modules") {
    ModuleAst empty = parse_ok("");
    CHECK(empty.decls.empty());
    ModuleAst comments = parse_ok("// casino model\n\n// nothing else\n");
    CHECK(comments.decls.empty());
}

TEST_CASE("parser: Casino record declaration") {
    ModuleAst m = parse_ok(kCasinoType);
    REQUIRE(m.decls.size() == 1);
    REQUIRE(m.decls[0].is<TypeDecl>());
    const TypeDecl& t = m.decls[0].as<TypeDecl>();
    CHECK(t.name == "Casino");
    CHECK(t.is_record);
    REQUIRE(t.fields.size() == 12);
    CHECK(t.fields[0].name == "address");
    CHECK(t.fields[0].type.name == "Address");
    CHECK(t.fields[7].name == "wager");
    CHECK(t.fields[7].type.name == "Wager");
    CHECK(t.fields[11].name == "destroyed");
    CHECK(t.fields[11].type.name == "bool");
    REQUIRE(t.wheres.size() == 7);

    // where state == BET_PLACED ==> pot + wager.value == address.balance
    const Expr& w0 = t.wheres[0];
    REQUIRE(w0.is<BinaryExpr>());
    CHECK(w0.as<BinaryExpr>().op == BinaryOp::Implies);
    const Expr& rhs = *w0.as<BinaryExpr>().rhs;
    REQUIRE(rhs.is<BinaryExpr>());
    CHECK(rhs.as<BinaryExpr>().op == BinaryOp::Eq);
    const Expr& sum = *rhs.as<BinaryExpr>().lhs;
    REQUIRE(sum.is<BinaryExpr>());
    CHECK(sum.as<BinaryExpr>().op == BinaryOp::Add);
    CHECK(sum.as<BinaryExpr>().rhs->is<FieldAccess>());
}

TEST_CASE("parser: playerWins function declaration") {
    ModuleAst m = parse_ok(kPlayerWins);
    REQUIRE(m.decls.size() == 1);
    REQUIRE(m.decls[0].is<FunctionDecl>());
    const FunctionDecl& f = m.decls[0].as<FunctionDecl>();
    CHECK(f.name == "playerWins");
    REQUIRE(f.params.size() == 1);
    CHECK(f.params[0].type.name == "Casino");
    CHECK(f.params[0].name == "casino");
    REQUIRE(f.returns.size() == 1);
    CHECK(f.returns[0].name == "out");
    CHECK(f.requires_clauses.size() == 3);
    CHECK(f.ensures_clauses.size() == 4);
    REQUIRE(f.body.size() == 3);

    // (Address a1, Address a2) = transfer(...)
    REQUIRE(f.body[0].is<VarDeclStmt>());
    const VarDeclStmt& decl = f.body[0].as<VarDeclStmt>();
    REQUIRE(decl.vars.size() == 2);
    CHECK(decl.vars[0].name == "a1");
    CHECK(decl.vars[1].name == "a2");
    REQUIRE(decl.init.is<CallExpr>());
    CHECK(decl.init.as<CallExpr>().callee == "transfer");
    CHECK(decl.init.as<CallExpr>().args.size() == 3);

    // Four-target tuple assignment, split over two physical lines.
    REQUIRE(f.body[1].is<AssignStmt>());
    const AssignStmt& assign = f.body[1].as<AssignStmt>();
    REQUIRE(assign.targets.size() == 4);
    CHECK(assign.targets[0].to_string() == "casino.player");
    CHECK(assign.targets[3].to_string() == "casino.wager.value");
    REQUIRE(assign.value.is<TupleExpr>());
    CHECK(assign.value.as<TupleExpr>().elems.size() == 4);

    REQUIRE(f.body[2].is<ReturnStmt>());
    const ReturnStmt& ret = f.body[2].as<ReturnStmt>();
    REQUIRE(ret.values.size() == 1);
    CHECK(ret.values[0].is<VarRef>());
}

TEST_CASE("parser: requires clauses refer into nested records") {
    ModuleAst m = parse_ok(kPlayerWins);
    const FunctionDecl& f = m.decls[0].as<FunctionDecl>();
    // requires casino.wager.value * 2 <= casino.address.balance
    const Expr& r1 = f.requires_clauses[1];
    REQUIRE(r1.is<BinaryExpr>());
    CHECK(r1.as<BinaryExpr>().op == BinaryOp::Le);
    const Expr& mul = *r1.as<BinaryExpr>().lhs;
    REQUIRE(mul.is<BinaryExpr>());
    CHECK(mul.as<BinaryExpr>().op == BinaryOp::Mul);
    const Expr& path = *mul.as<BinaryExpr>().lhs;
    REQUIRE(path.is<FieldAccess>());
    CHECK(path.as<FieldAccess>().field == "value");
    REQUIRE(path.as<FieldAccess>().base->is<FieldAccess>());
    CHECK(path.as<FieldAccess>().base->as<FieldAccess>().field == "wager");
}

TEST_CASE("parser: constrained type declaration") {
    ModuleAst m = parse_ok("type nat is (int x) where x >= 0\n");
    const TypeDecl& t = m.decls[0].as<TypeDecl>();
    CHECK(!t.is_record);
    REQUIRE(t.base.has_value());
    CHECK(t.base->name == "int");
    CHECK(t.binder == "x");
    REQUIRE(t.wheres.size() == 1);
}

TEST_CASE("parser: constrained type with following where lines") {
    ModuleAst m = parse_ok(
        "type State is (int s)\nwhere s >= 0\nwhere s <= 2\n");
    const TypeDecl& t = m.decls[0].as<TypeDecl>();
    CHECK(t.wheres.size() == 2);
}

TEST_CASE("parser: loop keywords are rejected with a dedicated message") {
    const char* sources[] = {
        "function f() -> (int r):\n    while true:\n        return 0\n",
        "function f() -> (int r):\n    for x:\n        return 0\n",
        "function f() -> (int r):\n    do:\n        return 0\n",
    };
    for (const char* src : sources) {
        ParseResult r = parse(src, "t");
        CAPTURE(src);
        CHECK(!r.ok());
        CHECK(any_error_contains(r.diagnostics, "loops unsupported"));
    }
}

TEST_CASE("parser: ** is restricted to const initializers") {
    ParseResult bad = parse(
        "function f() -> (int r):\n    int x = 2 ** 3\n    return x\n", "t");
    CHECK(!bad.ok());
    CHECK(any_error_contains(bad.diagnostics, "constant"));

    ModuleAst ok = parse_ok("const MAX = 2 ** 256 - 1\n");
    const ConstDecl& c = ok.decls[0].as<ConstDecl>();
    // Binds tighter than -: (2 ** 256) - 1.
    REQUIRE(c.init.is<BinaryExpr>());
    CHECK(c.init.as<BinaryExpr>().op == BinaryOp::Sub);
    CHECK(c.init.as<BinaryExpr>().lhs->as<BinaryExpr>().op == BinaryOp::Pow);
}

TEST_CASE("parser: ** is right-associative") {
    ModuleAst m = parse_ok("const C = 2 ** 3 ** 2\n");
    const Expr& e = m.decls[0].as<ConstDecl>().init;
    // 2 ** (3 ** 2)
    REQUIRE(e.is<BinaryExpr>());
    CHECK(e.as<BinaryExpr>().lhs->as<IntLit>().value == 2);
    const Expr& inner = *e.as<BinaryExpr>().rhs;
    REQUIRE(inner.is<BinaryExpr>());
    CHECK(inner.as<BinaryExpr>().op == BinaryOp::Pow);
}

TEST_CASE("parser: ==> is right-associative and binds loosest") {
    ModuleAst m = parse_ok("property p(bool a, bool b, bool c) => a ==> b ==> c\n");
    const Expr& e = m.decls[0].as<PropertyDecl>().body;
    REQUIRE(e.is<BinaryExpr>());
    CHECK(e.as<BinaryExpr>().op == BinaryOp::Implies);
    CHECK(e.as<BinaryExpr>().lhs->is<VarRef>());
    const Expr& rhs = *e.as<BinaryExpr>().rhs;
    REQUIRE(rhs.is<BinaryExpr>());
    CHECK(rhs.as<BinaryExpr>().op == BinaryOp::Implies);

    ModuleAst m2 = parse_ok("property q(bool a, bool b, bool c) => a || b ==> c\n");
    const Expr& e2 = m2.decls[0].as<PropertyDecl>().body;
    CHECK(e2.as<BinaryExpr>().op == BinaryOp::Implies);
    CHECK(e2.as<BinaryExpr>().lhs->as<BinaryExpr>().op == BinaryOp::Or);
}

TEST_CASE("parser: arithmetic precedence and unary minus") {
    ModuleAst m = parse_ok("property p(int a, int b) => a + b * 2 == -a - 1\n");
    const Expr& e = m.decls[0].as<PropertyDecl>().body;
    REQUIRE(e.is<BinaryExpr>());
    CHECK(e.as<BinaryExpr>().op == BinaryOp::Eq);
    const Expr& lhs = *e.as<BinaryExpr>().lhs;
    CHECK(lhs.as<BinaryExpr>().op == BinaryOp::Add);
    CHECK(lhs.as<BinaryExpr>().rhs->as<BinaryExpr>().op == BinaryOp::Mul);
    const Expr& rhs = *e.as<BinaryExpr>().rhs;
    CHECK(rhs.as<BinaryExpr>().op == BinaryOp::Sub);
    CHECK(rhs.as<BinaryExpr>().lhs->is<UnaryExpr>());
}

TEST_CASE("parser: record literals") {
    ModuleAst m = parse_ok(
        "function f() -> (Coinflip c):\n"
        "    return {heads: 0, tails: 1}\n");
    const FunctionDecl& f = m.decls[0].as<FunctionDecl>();
    const ReturnStmt& ret = f.body[0].as<ReturnStmt>();
    REQUIRE(ret.values[0].is<RecordLit>());
    const RecordLit& lit = ret.values[0].as<RecordLit>();
    REQUIRE(lit.fields.size() == 2);
    CHECK(lit.fields[0].name == "heads");
    CHECK(lit.fields[1].name == "tails");
}

TEST_CASE("parser: if/else blocks") {
    ModuleAst m = parse_ok(
        "function sign(int x) -> (int s):\n"
        "    if x < 0:\n"
        "        return -1\n"
        "    else:\n"
        "        if x == 0:\n"
        "            return 0\n"
        "        return 1\n");
    const FunctionDecl& f = m.decls[0].as<FunctionDecl>();
    REQUIRE(f.body.size() == 1);
    const IfStmt& outer = f.body[0].as<IfStmt>();
    CHECK(outer.then_body.size() == 1);
    REQUIRE(outer.else_body.size() == 2);
    CHECK(outer.else_body[0].is<IfStmt>());
    CHECK(outer.else_body[1].is<ReturnStmt>());
}

TEST_CASE("parser: function without contract clauses") {
    ModuleAst m = parse_ok(
        "function choose(bool c, int a, int b) -> (int r):\n"
        "    if c:\n"
        "        return a\n"
        "    return b\n");
    const FunctionDecl& f = m.decls[0].as<FunctionDecl>();
    CHECK(f.requires_clauses.empty());
    CHECK(f.ensures_clauses.empty());
    CHECK(f.body.size() == 2);
}

TEST_CASE("parser: multiple return values") {
    ModuleAst m = parse_ok(
        "function divmod(int a, int b) -> (int q, int r)\n"
        "requires b != 0:\n"
        "    return a / b, a % b\n");
    const FunctionDecl& f = m.decls[0].as<FunctionDecl>();
    REQUIRE(f.returns.size() == 2);
    const ReturnStmt& ret = f.body[0].as<ReturnStmt>();
    REQUIRE(ret.values.size() == 2);
    CHECK(ret.values[0].as<BinaryExpr>().op == BinaryOp::Div);
    CHECK(ret.values[1].as<BinaryExpr>().op == BinaryOp::Mod);
}

TEST_CASE("parser: missing body colon is an error") {
    ParseResult r = parse(
        "function f(int a) -> (int r)\nrequires a > 0\n    return a\n", "t");
    CHECK(!r.ok());
    CHECK(any_error_contains(r.diagnostics, "':'"));
}

TEST_CASE("parser: error recovery reports multiple diagnostics") {
    ParseResult r = parse(
        "type T is\n"
        "const C = )\n", "t");
    CHECK(!r.ok());
    int errors = 0;
    for (const Diagnostic& d : r.diagnostics)
        if (d.severity == Severity::Error) ++errors;
    CHECK(errors >= 2);
    CHECK(!r.module.has_value());
}

TEST_CASE("parser: diagnostics carry line and column positions") {
    ParseResult r = parse("const C = 1\nconst D = ?\n", "t");
    REQUIRE(!r.ok());
    bool found = false;
    for (const Diagnostic& d : r.diagnostics)
        if (d.severity == Severity::Error && d.span.start_line == 2) found = true;
    CHECK(found);
}

TEST_CASE("printer: round-trips the casino sources") {
    std::string source = std::string(kCasinoType) + "\n" + kPlayerWins;
    ModuleAst m = parse_ok(source);
    std::string printed = pretty_print(m);
    ModuleAst reparsed = parse_ok(printed);
    CHECK(module_equal(m, reparsed));
    // Printing is a fixed point after one round.
    CHECK(pretty_print(reparsed) == printed);
}

TEST_CASE("printer: parenthesizes only where precedence demands") {
    ModuleAst m = parse_ok("property p(int a, int b, int c) => (a + b) * c == a\n");
    std::string printed = pretty_print(m);
    CHECK(printed.find("(a + b) * c") != std::string::npos);

    ModuleAst m2 = parse_ok("property q(int a, int b, int c) => a + b * c == a\n");
    std::string printed2 = pretty_print(m2);
    CHECK(printed2.find("a + b * c") != std::string::npos);
}

TEST_CASE("printer: empty module prints as empty text") {
    ModuleAst m = parse_ok("");
    CHECK(pretty_print(m).empty());
}
