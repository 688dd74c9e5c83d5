#pragma once

#include "csl/logic.hpp"
#include "csl/vcgen.hpp"

#include <optional>
#include <string>

namespace csl {

enum class Verdict { Proved, Refuted, Unknown, Timeout, Error };

const char* verdict_name(Verdict v);

struct SolverConfig {
    std::string path; // solver binary, run as `path -in` over stdin/stdout
    double timeout_seconds = 10.0;
};

struct SmtResult {
    Verdict verdict = Verdict::Error;
    LEnv model;         // assignment refuting the goal, when Refuted
    std::string reason; // solver chatter, for Unknown and Error
    double seconds = 0.0;
};

/// Full SMT-LIB2 script for one obligation: symbol declarations, asserted
/// hypotheses, the negated goal, one check-sat, one get-model. `unsat`
/// means the obligation holds.
std::string encode_obligation(const Obligation& o);

/// One formula as an SMT-LIB term. `/` and `%` truncate toward zero in the
/// language but SMT-LIB's div/mod are Euclidean; the translation rebases
/// them, so terms stay exact for every sign combination.
std::string smt_term(const LRef& e);

/// Encode, run the solver in a fresh process, classify the answer. Wall
/// clock overruns kill the process and report Timeout; a solver that cannot
/// be spawned or answers gibberish reports Error with a reason.
SmtResult solve_obligation(const Obligation& o, const SolverConfig& config);

/// Pull symbol values out of a solver model. Tolerates the `(model ...)`
/// wrapper, a bare paren block, multi-line define-funs, and `(- 7)`
/// literals; ignores anything that is not a 0-ary Int/Bool definition.
LEnv decode_model(const std::string& text);

/// Pick the solver binary: explicit setting, then $CSL_SOLVER, then `z3` on
/// PATH, then the bundled fallback baked in at build time.
std::optional<std::string> resolve_solver(const std::string& flag);

} // namespace csl
