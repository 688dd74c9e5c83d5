#include "doctest.h"

#include "test_support.hpp"

#include "csl/interp.hpp"
#include "csl/number.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

using namespace csl;
using namespace csl::test;

namespace {

int line_of(const std::string& src, const std::string& needle) {
    size_t pos = src.find(needle);
    REQUIRE(pos != std::string::npos);
    return 1 + static_cast<int>(std::count(src.begin(), src.begin() + pos, '\n'));
}

Value addr(long id, BigInt bal) {
    return Value::record(
        {{"address", Value::of_int(id)}, {"balance", Value::of_int(std::move(bal))}});
}

// A type-valid Casino: distinct participant addresses, and the Fig. 2 pot
// accounting chosen to match `state`.
Value casino_value(BigInt pot, BigInt wager, BigInt addr_bal, BigInt player_bal,
                   long state = 2) {
    return Value::record({
        {"address", addr(1, std::move(addr_bal))},
        {"state", Value::of_int(state)},
        {"operator", addr(2, 0)},
        {"pot", Value::of_int(std::move(pot))},
        {"timeout", Value::of_int(0)},
        {"secretNumber", Value::of_int(0)},
        {"player", addr(3, std::move(player_bal))},
        {"wager", Value::record({{"value", Value::of_int(std::move(wager))},
                                 {"guess", Value::of_int(0)}})},
        {"msg", Value::record({{"sender", addr(4, 0)}, {"value", Value::of_int(0)}})},
        {"block", Value::record({{"coinbase", addr(5, 0)}})},
        {"tx", Value::record({{"origin", addr(6, 0)}})},
        {"destroyed", Value::of_bool(false)},
    });
}

std::vector<std::vector<Value>> drain(InputEnumerator& en) {
    std::vector<std::vector<Value>> out;
    while (auto in = en.next()) out.push_back(std::move(*in));
    return out;
}

} // namespace

TEST_CASE("value literals print and parse back") {
    std::string err;
    auto v = parse_value_text("{pot: 7, wager: {value: 0, guess: 1}}", err);
    REQUIRE(v.has_value());
    CHECK(value_str(*v) == "{pot: 7, wager: {value: 0, guess: 1}}");
    CHECK(v->field("wager").field("guess") == Value::of_int(1));

    CHECK(*parse_value_text("-42", err) == Value::of_int(-42));
    CHECK(*parse_value_text("true", err) == Value::of_bool(true));
    CHECK(*parse_value_text(" ( 1 , 2 ) ", err) ==
          Value::tuple({Value::of_int(1), Value::of_int(2)}));

    CHECK(!parse_value_text("{pot 7}", err).has_value());
    CHECK(!err.empty());
    err.clear();
    CHECK(!parse_value_text("12 x", err).has_value());
    err.clear();
    CHECK(!parse_value_text("", err).has_value());
}

TEST_CASE("conform_value puts record fields in declaration order") {
    ResolvedModule m = check_ok(kCasino);
    std::string err;
    Value written = *parse_value_text("{guess: 1, value: 3}", err);
    auto c = conform_value(written, "Wager", m, err);
    REQUIRE(c.has_value());
    REQUIRE(c->fields.size() == 2);
    CHECK(c->fields[0].name == "value");
    CHECK(c->fields[1].name == "guess");

    CHECK(!conform_value(*parse_value_text("{value: 3}", err), "Wager", m, err));
    CHECK(err.find("field") != std::string::npos);
    err.clear();
    CHECK(!conform_value(*parse_value_text("{value: true, guess: 0}", err), "Wager", m,
                         err));
    CHECK(err.find("integer") != std::string::npos);
}

TEST_CASE("check_type_invariant is exact at the uint256 boundary") {
    ResolvedModule m = check_ok(kCasino);
    BigInt max = big_pow(2, 256) - 1;
    CHECK(check_type_invariant(Value::of_int(max), "uint256", m));
    CHECK(!check_type_invariant(Value::of_int(max + 1), "uint256", m));
    CHECK(!check_type_invariant(Value::of_int(-1), "uint256", m));
    TypeExpr te{"uint256", {}};
    CHECK(check_type_invariant(Value::of_int(0), te, m));
}

TEST_CASE("check_type_invariant sees through nested records") {
    ResolvedModule m = check_ok(kCasino);
    CHECK(check_type_invariant(casino_value(100, 30, 130, 50), "Casino", m));
    // pot + wager.value != address.balance while a bet is placed
    CHECK(!check_type_invariant(casino_value(5, 5, 11, 50), "Casino", m));
    // same accounting is fine when no bet is placed (clause is an implication)
    Value idle = casino_value(11, 0, 11, 50, 0);
    CHECK(check_type_invariant(idle, "Casino", m));
    // ... but a nested leaf can still break it
    idle.field("wager").field("value") = Value::of_int(-3);
    CHECK(!check_type_invariant(idle, "Casino", m));
}

TEST_CASE("playerWins pays out 2x the wager from the operator's funds") {
    ResolvedModule m = check_ok(kCasino);
    std::vector<Value> args = {casino_value(100, 30, 130, 50)};
    std::vector<Value> snapshot = args;

    CallOutcome out = eval_function(m, "playerWins", args);
    REQUIRE(!out.reverted);
    REQUIRE(out.values.size() == 1);
    CHECK(out.values[0] == casino_value(70, 0, 70, 110));
    CHECK(args == snapshot); // arguments are value-passed: caller state intact
}

TEST_CASE("playerWins reverts when the operator cannot cover the payout") {
    ResolvedModule m = check_ok(kCasino);
    // type-valid (pot + wager == balance) but wager * 2 > balance
    std::vector<Value> args = {casino_value(10, 30, 40, 50)};
    std::vector<Value> snapshot = args;

    CallOutcome out = eval_function(m, "playerWins", args);
    REQUIRE(out.reverted);
    CHECK(out.violation.kind == ViolationKind::Precondition);
    CHECK(out.violation.span.start_line ==
          line_of(kCasino, "requires casino.wager.value * 2 <= casino.address.balance"));
    CHECK(args == snapshot);
}

TEST_CASE("transfer moves funds and a zero transfer is the identity") {
    ResolvedModule m = check_ok(kCasino);
    CallOutcome moved = eval_function(m, "transfer", {addr(1, 10), addr(2, 60),
                                                      Value::of_int(25)});
    REQUIRE(!moved.reverted);
    REQUIRE(moved.values.size() == 2);
    CHECK(moved.values[0] == addr(1, 35));
    CHECK(moved.values[1] == addr(2, 35));

    CallOutcome zero = eval_function(m, "transfer", {addr(1, 10), addr(2, 60),
                                                     Value::of_int(0)});
    REQUIRE(!zero.reverted);
    CHECK(zero.values[0] == addr(1, 10));
    CHECK(zero.values[1] == addr(2, 60));
}

TEST_CASE("arithmetic is exact past 2^256") {
    const char* src = R"(const MAX_U256 = 2**256 - 1
type uint256 is (int b)
where b >= 0
where b <= MAX_U256

function bump(uint256 x) -> (int y):
    return x + 1

function clamp(uint256 x) -> (uint256 y):
    uint256 z = x + 1
    return z
)";
    ResolvedModule m = check_ok(src);
    BigInt max = big_pow(2, 256) - 1;

    // (2^256 - 1) + 1 is exactly 2^256: no wrap, no rounding
    CallOutcome grown = eval_function(m, "bump", {Value::of_int(max)});
    REQUIRE(!grown.reverted);
    CHECK(grown.values[0] == Value::of_int(big_pow(2, 256)));

    // storing it back into a uint256 is a type violation at the declaration
    CallOutcome over = eval_function(m, "clamp", {Value::of_int(max)});
    REQUIRE(over.reverted);
    CHECK(over.violation.kind == ViolationKind::TypeConstraint);
    CHECK(over.violation.span.start_line == line_of(src, "uint256 z = x + 1"));
    CHECK(over.violation.message.find("'z'") != std::string::npos);

    CallOutcome fits = eval_function(m, "clamp", {Value::of_int(max - 1)});
    REQUIRE(!fits.reverted);
    CHECK(fits.values[0] == Value::of_int(max));
}

TEST_CASE("division truncates toward zero and zero divisors revert") {
    const char* src = R"(function quot(int a, int b) -> (int q):
    return a / b

function rem(int a, int b) -> (int r):
    return a % b

function guarded(int a, int b) -> (bool ok):
    bool big = b != 0 && a / b > 2
    return big
)";
    ResolvedModule m = check_ok(src);
    auto run1 = [&](const char* fn, long a, long b) {
        CallOutcome out = eval_function(m, fn, {Value::of_int(a), Value::of_int(b)});
        REQUIRE(!out.reverted);
        return out.values[0].int_value;
    };
    CHECK(run1("quot", -7, 2) == -3);
    CHECK(run1("quot", 7, -2) == -3);
    CHECK(run1("quot", -7, -2) == 3);
    CHECK(run1("rem", -7, 2) == -1);
    CHECK(run1("rem", 7, -2) == 1);
    CHECK(run1("rem", -7, -2) == -1);

    CallOutcome div0 = eval_function(m, "quot", {Value::of_int(7), Value::of_int(0)});
    REQUIRE(div0.reverted);
    CHECK(div0.violation.kind == ViolationKind::DivByZero);
    CHECK(div0.violation.span.start_line == line_of(src, "return a / b"));
    CHECK(div0.violation.message.find("'/'") != std::string::npos);

    CallOutcome mod0 = eval_function(m, "rem", {Value::of_int(7), Value::of_int(0)});
    REQUIRE(mod0.reverted);
    CHECK(mod0.violation.kind == ViolationKind::DivByZero);
    CHECK(mod0.violation.message.find("'%'") != std::string::npos);

    // the short-circuit guard makes the division unreachable
    CallOutcome safe = eval_function(m, "guarded", {Value::of_int(9), Value::of_int(0)});
    REQUIRE(!safe.reverted);
    CHECK(safe.values[0] == Value::of_bool(false));
}

TEST_CASE("a violated callee requires blames the call site") {
    const char* src = R"(function pos(int x) -> (int y)
requires x > 0:
    return x

function callZero() -> (int y):
    return pos(0)
)";
    ResolvedModule m = check_ok(src);
    CallOutcome out = eval_function(m, "callZero", {});
    REQUIRE(out.reverted);
    CHECK(out.violation.kind == ViolationKind::CalleePrecondition);
    CHECK(out.violation.span.start_line == line_of(src, "return pos(0)"));
    CHECK(out.violation.message.find("'pos'") != std::string::npos);

    // the same clause violated from the outside is the caller's problem
    CallOutcome direct = eval_function(m, "pos", {Value::of_int(0)});
    REQUIRE(direct.reverted);
    CHECK(direct.violation.kind == ViolationKind::Precondition);
}

TEST_CASE("a broken ensures reverts at the clause") {
    const char* src = R"(function bad(int x) -> (int y)
ensures y == x + 1:
    return x
)";
    ResolvedModule m = check_ok(src);
    CallOutcome out = eval_function(m, "bad", {Value::of_int(3)});
    REQUIRE(out.reverted);
    CHECK(out.violation.kind == ViolationKind::Postcondition);
    CHECK(out.violation.span.start_line == line_of(src, "ensures y == x + 1"));
}

TEST_CASE("ensures clauses read parameters at their entry values") {
    const char* src = R"(function inc(int x) -> (int y)
ensures y == x + 1:
    x = x + 1
    return x
)";
    ResolvedModule m = check_ok(src);
    // if ensures saw the mutated x, y == x + 1 would be false (4 != 5)
    CallOutcome out = eval_function(m, "inc", {Value::of_int(3)});
    REQUIRE(!out.reverted);
    CHECK(out.values[0] == Value::of_int(4));
}

TEST_CASE("writing through a field re-checks the enclosing invariant") {
    const char* src = R"(type Box is {int lo, int hi} where lo <= hi

function setLo(Box box, int v) -> (Box out):
    box.lo = v
    return box
)";
    ResolvedModule m = check_ok(src);
    Value box = Value::record({{"lo", Value::of_int(1)}, {"hi", Value::of_int(5)}});

    CallOutcome ok = eval_function(m, "setLo", {box, Value::of_int(3)});
    REQUIRE(!ok.reverted);
    CHECK(ok.values[0].field("lo") == Value::of_int(3));

    CallOutcome broken = eval_function(m, "setLo", {box, Value::of_int(7)});
    REQUIRE(broken.reverted);
    CHECK(broken.violation.kind == ViolationKind::RecordInvariant);
    CHECK(broken.violation.span.start_line == line_of(src, "box.lo = v"));
    CHECK(broken.violation.message.find("'Box'") != std::string::npos);
}

TEST_CASE("tuple assignment is atomic where sequential updates are not") {
    const char* src = R"(type Ten is (int b) where b >= 0 && b <= 10
type Pair is {Ten a, Ten b} where a + b == 10

function swapAtomic(Pair p) -> (Pair out):
    (p.a, p.b) = (p.b, p.a)
    return p

function swapSeq(Pair p) -> (Pair out):
    Ten t = p.a
    p.a = p.b
    p.b = t
    return p
)";
    ResolvedModule m = check_ok(src);
    const FunctionDecl* fn = m.find_function("swapAtomic");
    InputEnumerator en(m, *fn);
    REQUIRE(en.ok());
    std::vector<std::vector<Value>> inputs = drain(en);
    CHECK(inputs.size() == 11); // a = 0..10 forces b = 10 - a

    int atomic_ok = 0, seq_ok = 0, seq_invariant = 0;
    for (const auto& in : inputs) {
        CallOutcome a = eval_function(m, "swapAtomic", in);
        if (!a.reverted) {
            ++atomic_ok;
            CHECK(a.values[0].field("a") == in[0].field("b"));
            CHECK(a.values[0].field("b") == in[0].field("a"));
        }
        CallOutcome s = eval_function(m, "swapSeq", in);
        if (!s.reverted) ++seq_ok;
        else if (s.violation.kind == ViolationKind::RecordInvariant &&
                 s.violation.span.start_line == line_of(src, "p.a = p.b"))
            ++seq_invariant;
    }
    CHECK(atomic_ok == 11);     // the simultaneous update never leaves the invariant
    CHECK(seq_ok == 1);         // only a == b == 5 survives the intermediate state
    CHECK(seq_invariant == 10); // every other input dies at the first half-step
}

TEST_CASE("records compare by value") {
    const char* src = R"(type P is {int x, int y}

function same(P a, P b) -> (bool r):
    bool eq = a == b
    return eq
)";
    ResolvedModule m = check_ok(src);
    Value p = Value::record({{"x", Value::of_int(1)}, {"y", Value::of_int(2)}});
    Value q = Value::record({{"x", Value::of_int(1)}, {"y", Value::of_int(3)}});
    CHECK(eval_function(m, "same", {p, p}).values[0] == Value::of_bool(true));
    CHECK(eval_function(m, "same", {p, q}).values[0] == Value::of_bool(false));
}

TEST_CASE("eval_function rejects structurally wrong inputs outright") {
    ResolvedModule m = check_ok(kCasino);
    CHECK_THROWS_AS(eval_function(m, "nosuch", {}), std::invalid_argument);
    CHECK_THROWS_AS(eval_function(m, "transfer", {Value::of_int(1)}),
                    std::invalid_argument);
    CHECK_THROWS_AS(eval_function(m, "transfer",
                                  {Value::of_int(1), Value::of_int(2), Value::of_int(3)}),
                    std::invalid_argument);
}

TEST_CASE("evaluation is deterministic") {
    ResolvedModule m = check_ok(kCasino);
    std::vector<Value> args = {casino_value(100, 30, 130, 50)};
    CallOutcome a = eval_function(m, "playerWins", args);
    CallOutcome b = eval_function(m, "playerWins", args);
    REQUIRE(!a.reverted);
    REQUIRE(!b.reverted);
    CHECK(a.values[0] == b.values[0]);
}

// ---------------------------------------------------------------------------
// Input enumeration
// ---------------------------------------------------------------------------

TEST_CASE("enumeration counts low to high, last leaf fastest") {
    const char* src = R"(type small is (int b) where b >= 0 && b <= 3
type Flags is {bool f, bool g}

function one(small x) -> (int y):
    return x

function flags(Flags x) -> (int y):
    return 0
)";
    ResolvedModule m = check_ok(src);

    InputEnumerator one(m, *m.find_function("one"));
    REQUIRE(one.ok());
    CHECK(one.domain_size() == 4);
    auto xs = drain(one);
    REQUIRE(xs.size() == 4);
    for (long i = 0; i < 4; ++i) CHECK(xs[i][0] == Value::of_int(i));

    InputEnumerator fl(m, *m.find_function("flags"));
    REQUIRE(fl.ok());
    auto fs = drain(fl);
    REQUIRE(fs.size() == 4);
    auto flag = [](bool f, bool g) {
        return Value::record({{"f", Value::of_bool(f)}, {"g", Value::of_bool(g)}});
    };
    CHECK(fs[0][0] == flag(false, false));
    CHECK(fs[1][0] == flag(false, true));
    CHECK(fs[2][0] == flag(true, false));
    CHECK(fs[3][0] == flag(true, true));
}

TEST_CASE("enumeration yields exactly the invariant-satisfying inputs") {
    const char* src = R"(type small is (int b) where b >= 0 && b <= 3
type SameFlags is {bool f, bool g} where f == g
type Sum is {small x, small y} where x + y == 3
type Imp is {small x, small y} where x != 2 ==> y == 0

function same(SameFlags v) -> (int r):
    return 0

function sum(Sum v) -> (int r):
    return 0

function imp(Imp v) -> (int r):
    return 0
)";
    ResolvedModule m = check_ok(src);

    InputEnumerator sm(m, *m.find_function("same"));
    auto sms = drain(sm);
    REQUIRE(sms.size() == 2);
    CHECK(sms[0][0].field("f") == Value::of_bool(false));
    CHECK(sms[0][0].field("g") == Value::of_bool(false));
    CHECK(sms[1][0].field("f") == Value::of_bool(true));

    InputEnumerator su(m, *m.find_function("sum"));
    auto sus = drain(su);
    REQUIRE(sus.size() == 4);
    for (long x = 0; x < 4; ++x) {
        CHECK(sus[x][0].field("x") == Value::of_int(x));
        CHECK(sus[x][0].field("y") == Value::of_int(3 - x));
    }

    InputEnumerator im(m, *m.find_function("imp"));
    auto ims = drain(im);
    // x in {0,1,3} forces y == 0; x == 2 leaves y free
    REQUIRE(ims.size() == 7);
    CHECK(ims[0][0].field("x") == Value::of_int(0));
    CHECK(ims[2][0].field("x") == Value::of_int(2));
    CHECK(ims[5][0].field("y") == Value::of_int(3));
    CHECK(ims[6][0].field("x") == Value::of_int(3));
    CHECK(ims[6][0].field("y") == Value::of_int(0));
}

TEST_CASE("enumeration refuses unbounded and oversized domains") {
    const char* src = R"(type small is (int b) where b >= 0 && b <= 3

function unb(int x) -> (int y):
    return x

function grid(small x, small y) -> (int z):
    return 0
)";
    ResolvedModule m = check_ok(src);

    InputEnumerator u(m, *m.find_function("unb"));
    CHECK(!u.ok());
    CHECK(u.error().find("'x'") != std::string::npos);
    CHECK(u.error().find("int") != std::string::npos);
    CHECK(!u.next().has_value());

    InputEnumerator g(m, *m.find_function("grid"), BigInt(10));
    CHECK(!g.ok());
    CHECK(g.error().find("raw points") != std::string::npos);

    InputEnumerator fine(m, *m.find_function("grid"), BigInt(16));
    REQUIRE(fine.ok());
    CHECK(drain(fine).size() == 16);
}

TEST_CASE("a zero-parameter function has exactly one input") {
    const char* src = R"(function nil() -> (int y):
    return 7
)";
    ResolvedModule m = check_ok(src);
    InputEnumerator en(m, *m.find_function("nil"));
    REQUIRE(en.ok());
    auto first = en.next();
    REQUIRE(first.has_value());
    CHECK(first->empty());
    CHECK(!en.next().has_value());
}

TEST_CASE("violation kinds map onto obligation kinds") {
    CHECK(violation_of(ObligationKind::CalleePrecondition) ==
          ViolationKind::CalleePrecondition);
    CHECK(violation_of(ObligationKind::Postcondition) == ViolationKind::Postcondition);
    CHECK(violation_of(ObligationKind::TypeConstraint) == ViolationKind::TypeConstraint);
    CHECK(violation_of(ObligationKind::RecordInvariant) ==
          ViolationKind::RecordInvariant);
    CHECK(violation_of(ObligationKind::DivByZero) == ViolationKind::DivByZero);
    CHECK(std::string(violation_kind_name(ViolationKind::Precondition)) ==
          "Precondition");
}
