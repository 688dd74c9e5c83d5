#include "doctest.h"

#include "test_support.hpp"

#include "csl/logic.hpp"
#include "csl/number.hpp"
#include "csl/smt.hpp"
#include "csl/vcgen.hpp"

#include <cstdlib>
#include <cstring>
#include <map>
#include <string>
#include <vector>

#include <unistd.h>

using namespace csl;
using namespace csl::test;

namespace {

Obligation make_ob(std::vector<LRef> hyps, LRef goal) {
    Obligation o;
    o.id = "t.TypeConstraint.0";
    o.function = "t";
    o.kind = ObligationKind::TypeConstraint;
    o.hypotheses = std::move(hyps);
    o.goal = std::move(goal);
    o.formula = mk_implies(mk_and_all(o.hypotheses), o.goal);
    o.description = "test obligation";
    return o;
}

SolverConfig default_config() {
    auto path = resolve_solver("");
    REQUIRE(path.has_value());
    return SolverConfig{*path, 30.0};
}

// the solver may omit symbols it never needed; complete the assignment
LEnv complete_model(const Obligation& o, LEnv env) {
    std::map<std::string, bool> syms;
    collect_syms(o.formula, syms);
    for (const auto& [name, is_bool] : syms)
        if (!env.count(name))
            env[name] = is_bool ? LogicValue::of_bool(false) : LogicValue::of_int(0);
    return env;
}

} // namespace

TEST_CASE("encoding declares symbols and negates the goal") {
    LRef x = mk_sym("x", false);
    LRef ok = mk_sym("casino.destroyed", true);
    Obligation o = make_ob({mk_ge(x, mk_int(0))},
                           mk_or(mk_gt(mk_add(x, mk_int(1)), mk_int(0)), ok));
    std::string script = encode_obligation(o);
    CHECK(script.find("(set-logic ALL)") != std::string::npos);
    CHECK(script.find("(declare-const x Int)") != std::string::npos);
    CHECK(script.find("(declare-const casino.destroyed Bool)") != std::string::npos);
    CHECK(script.find("(assert (>= x 0))") != std::string::npos);
    CHECK(script.find("(assert (not (or (> (+ x 1) 0) casino.destroyed)))") !=
          std::string::npos);
    CHECK(script.find("(check-sat)") != std::string::npos);
    // pure integer reasoning: no width-bounded encodings anywhere
    CHECK(script.find("BitVec") == std::string::npos);
    CHECK(script.find("bv") == std::string::npos);
}

TEST_CASE("encoded obligations carry full-width decimal constants") {
    ResolvedModule m = check_ok(kCasino);
    std::vector<Obligation> obs =
        generate_obligations(m, *m.find_function("playerWins"));
    std::string script = encode_obligation(obs[0]);
    CHECK(script.find(kMaxU256) != std::string::npos);
    CHECK(script.find("BitVec") == std::string::npos);
}

TEST_CASE("trivial goals round-trip through the solver") {
    SolverConfig cfg = default_config();
    CHECK(solve_obligation(make_ob({}, mk_bool(true)), cfg).verdict ==
          Verdict::Proved);
    SmtResult r = solve_obligation(make_ob({}, mk_bool(false)), cfg);
    CHECK(r.verdict == Verdict::Refuted);
}

TEST_CASE("refutation produces a model that replays") {
    SolverConfig cfg = default_config();
    LRef x = mk_sym("x", false);
    Obligation o = make_ob({mk_gt(x, mk_int(3))}, mk_gt(x, mk_int(5)));
    SmtResult r = solve_obligation(o, cfg);
    REQUIRE(r.verdict == Verdict::Refuted);
    LEnv env = complete_model(o, r.model);
    REQUIRE(env.count("x") == 1);
    CHECK(env["x"].int_value > 3);
    CHECK(env["x"].int_value <= 5);
    CHECK(eval_lexpr(o.goal, env) == LogicValue::of_bool(false));
}

TEST_CASE("truncating division encoding matches exact integer arithmetic") {
    SolverConfig cfg = default_config();
    LRef a = mk_sym("a", false);
    LRef b = mk_sym("b", false);
    for (long av : {-7L, -2L, 0L, 5L, 9L}) {
        for (long bv : {-3L, -2L, 2L, 3L}) {
            BigInt A(av), B(bv);
            BigInt q = big_div_trunc(A, B);
            BigInt r = big_mod_trunc(A, B);
            std::vector<LRef> hyps = {mk_eq(a, mk_int(A)), mk_eq(b, mk_int(B))};
            LRef good = mk_and(mk_eq(mk_div(a, b), mk_int(q)),
                               mk_eq(mk_mod(a, b), mk_int(r)));
            LRef off = mk_eq(mk_div(a, b), mk_int(q + 1));
            CAPTURE(av);
            CAPTURE(bv);
            CHECK(solve_obligation(make_ob(hyps, good), cfg).verdict ==
                  Verdict::Proved);
            CHECK(solve_obligation(make_ob(hyps, off), cfg).verdict ==
                  Verdict::Refuted);
        }
    }
}

TEST_CASE("the uint256 ceiling is exact, not approximated") {
    SolverConfig cfg = default_config();
    BigInt max = big_pow(2, 256) - 1;
    LRef x = mk_sym("x", false);
    LRef in_range = mk_and(mk_ge(x, mk_int(0)), mk_le(x, mk_int(max)));
    CHECK(solve_obligation(make_ob({mk_eq(x, mk_int(max))}, in_range), cfg)
              .verdict == Verdict::Proved);
    CHECK(solve_obligation(make_ob({mk_eq(x, mk_int(max + 1))}, in_range), cfg)
              .verdict == Verdict::Refuted);
}

TEST_CASE("every obligation of the casino fixture proves") {
    ResolvedModule m = check_ok(kCasino);
    SolverConfig cfg = default_config();
    for (const Obligation& o : generate_obligations(m)) {
        SmtResult r = solve_obligation(o, cfg);
        CAPTURE(o.id);
        CAPTURE(r.reason);
        CHECK(r.verdict == Verdict::Proved);
    }
}

TEST_CASE("a transfer checking the wrong balance is refuted at leaf grain") {
    std::string src(kCasino);
    const char* good_req = "requires amount <= from.balance";
    size_t pos = src.find(good_req);
    REQUIRE(pos != std::string::npos);
    src.replace(pos, std::strlen(good_req), "requires amount <= to.balance  ");
    ResolvedModule m = check_ok(src);
    std::vector<Obligation> obs =
        generate_obligations(m, *m.find_function("transfer"));

    const Obligation* target = nullptr;
    for (const Obligation& o : obs)
        if (o.id == "transfer.TypeConstraint.1") target = &o;
    REQUIRE(target != nullptr);

    SolverConfig cfg = default_config();
    SmtResult r = solve_obligation(*target, cfg);
    REQUIRE(r.verdict == Verdict::Refuted);
    // replay: the model satisfies every hypothesis and breaks the goal —
    // a sender whose balance is smaller than the amount
    LEnv env = complete_model(*target, r.model);
    for (const LRef& h : target->hypotheses)
        CHECK(eval_lexpr(h, env) == LogicValue::of_bool(true));
    CHECK(eval_lexpr(target->goal, env) == LogicValue::of_bool(false));
    CHECK(env["amount"].int_value > env["from.balance"].int_value);
}

TEST_CASE("wall clock overrun reports a timeout") {
    SolverConfig cfg = default_config();
    cfg.timeout_seconds = 0.0005; // below any solver's startup time
    LRef x = mk_sym("x", false);
    SmtResult r =
        solve_obligation(make_ob({}, mk_gt(mk_mul(x, x), mk_int(-1))), cfg);
    CHECK(r.verdict == Verdict::Timeout);
}

TEST_CASE("an unrunnable solver reports an error, not a verdict") {
    SolverConfig cfg{"/nonexistent/solver-binary", 5.0};
    SmtResult r = solve_obligation(make_ob({}, mk_bool(true)), cfg);
    CHECK(r.verdict == Verdict::Error);
    CHECK(r.reason.find("cannot run solver") != std::string::npos);
}

TEST_CASE("model decoding handles the common solver output shapes") {
    SUBCASE("bare paren block, dotted names, negatives") {
        LEnv env = decode_model("(\n"
                                "  (define-fun casino.pot () Int 42)\n"
                                "  (define-fun x () Int (- 7))\n"
                                "  (define-fun ok () Bool false)\n"
                                ")\n");
        REQUIRE(env.size() == 3);
        CHECK(env["casino.pot"] == LogicValue::of_int(42));
        CHECK(env["x"] == LogicValue::of_int(-7));
        CHECK(env["ok"] == LogicValue::of_bool(false));
    }
    SUBCASE("legacy model wrapper and multi-line entries") {
        LEnv env = decode_model("(model\n"
                                "  (define-fun transfer!0.newTo.balance\n"
                                "    ()\n"
                                "    Int\n"
                                "    115792089237316195423570985008687907853269984665640564039457584007913129639935)\n"
                                ")\n");
        REQUIRE(env.size() == 1);
        CHECK(big_str(env["transfer!0.newTo.balance"].int_value) ==
              std::string(kMaxU256));
    }
    SUBCASE("non-constant and non-integer definitions are skipped") {
        LEnv env = decode_model("((define-fun f ((a Int)) Int 0)\n"
                                "  (define-fun r () Real 0.5)\n"
                                "  (define-fun y () Int 3))");
        REQUIRE(env.size() == 1);
        CHECK(env["y"] == LogicValue::of_int(3));
    }
    SUBCASE("error chatter after unsat decodes to nothing") {
        LEnv env = decode_model("(error \"model is not available\")");
        CHECK(env.empty());
    }
}

TEST_CASE("solver resolution prefers explicit, then environment, then PATH") {
    const char* saved = std::getenv("CSL_SOLVER");
    std::string saved_value = saved ? saved : "";

    CHECK(resolve_solver("/explicit/z3") ==
          std::optional<std::string>("/explicit/z3"));
    setenv("CSL_SOLVER", "/env/solver", 1);
    CHECK(resolve_solver("") == std::optional<std::string>("/env/solver"));
    CHECK(resolve_solver("/explicit/z3") ==
          std::optional<std::string>("/explicit/z3"));
    unsetenv("CSL_SOLVER");
    auto found = resolve_solver("");
    REQUIRE(found.has_value()); // PATH z3 or the bundled fallback
    CHECK(access(found->c_str(), X_OK) == 0);

    if (saved) setenv("CSL_SOLVER", saved_value.c_str(), 1);
}
