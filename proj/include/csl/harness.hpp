#pragma once

#include "csl/interp.hpp"
#include "csl/smt.hpp"
#include "csl/vcgen.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace csl {

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

/// A module read from disk (or given as text), parsed and typechecked.
/// On failure `module` is absent and `diagnostics` says why.
struct LoadedModule {
    std::string path;
    std::string source;
    std::optional<ResolvedModule> module;
    Diagnostics diagnostics;

    bool ok() const { return module.has_value(); }
};

LoadedModule load_module_file(const std::string& path);
LoadedModule load_module_text(std::string source, std::string name);

// ---------------------------------------------------------------------------
// Corpus statistics
// ---------------------------------------------------------------------------

/// Line counts follow the usual convention for contract languages: a
/// specification line is one occupied by a property declaration or by a
/// requires/ensures clause; code lines are all non-blank, non-comment lines
/// (so spec lines are a subset of code lines).
struct CorpusStats {
    int types = 0;
    int properties = 0;
    int functions = 0;
    int consts = 0;
    int spec_lines = 0;
    int code_lines = 0;

    double spec_ratio() const {
        return code_lines ? double(spec_lines) / double(code_lines) : 0.0;
    }
};

CorpusStats corpus_stats(const LoadedModule& mod);

// ---------------------------------------------------------------------------
// Verification (vcgen + smt over a whole module)
// ---------------------------------------------------------------------------

struct VerifyOptions {
    SolverConfig solver;
    int jobs = 0;                // <=0: one per logical CPU, capped at #obligations
    std::string only_function;   // empty: all functions
    std::string emit_smt_dir;    // empty: don't dump .smt2 files
};

struct ObligationOutcome {
    Obligation obligation;
    Verdict verdict = Verdict::Error;
    std::string reason;          // diagnostic for Unknown/Timeout/Error
    LEnv model;                  // counterexample when Refuted
    double seconds = 0.0;
};

struct FunctionReport {
    std::string name;
    std::vector<ObligationOutcome> obligations; // ordered by obligation id

    bool all_proved() const;
};

struct VerificationReport {
    std::string path;
    std::vector<FunctionReport> functions; // declaration order
    CorpusStats stats;
    double seconds = 0.0;

    bool all_proved() const;
    int total() const;
    int count(Verdict v) const;
};

VerificationReport verify_module(const LoadedModule& mod, const VerifyOptions& opts);

/// JSON form: {module, functions: [{name, obligations: [{id, kind, verdict,
/// ms}]}], stats}. Stable field order, obligations ordered by id.
std::string report_json(const VerificationReport& report);

// ---------------------------------------------------------------------------
// Small-scope crosscheck (exhaustive interpretation vs. verifier verdicts)
// ---------------------------------------------------------------------------

struct CrosscheckOptions {
    SolverConfig solver;
    int jobs = 0;
    std::string only_function;
    BigInt max_domain = BigInt(1) << 32; // raw per-function input cap
};

struct FunctionCrosscheck {
    std::string name;
    bool enumerable = false;
    std::string skip_reason;     // when !enumerable

    bool verifier_all_proved = false;
    bool verifier_unresolved = false; // some verdict neither Proved nor Refuted
    std::vector<std::string> refuted_ids;

    long long enumerated = 0;    // type-valid inputs
    long long admitted = 0;      // also passed the requires clauses
    long long violations = 0;    // admitted inputs that reverted past entry
    bool vacuous = false;        // no admitted inputs at all
    std::string first_violation; // sample, for reports

    /// Both sides agree: a fully proved function has no concrete violation;
    /// a refuted one has at least one. Skipped or unresolved functions are
    /// never counted as disagreement.
    bool consistent = false;
};

struct CrosscheckReport {
    std::string path;
    std::vector<FunctionCrosscheck> functions;
    double seconds = 0.0;

    bool ok() const; // every function consistent
};

CrosscheckReport smallscope_crosscheck(const LoadedModule& mod,
                                       const CrosscheckOptions& opts);

// ---------------------------------------------------------------------------
// Counterexample replay
// ---------------------------------------------------------------------------

/// Builds concrete arguments for the refuted obligation's function from the
/// solver model (model symbols are the dotted parameter leaves; leaves the
/// solver left out fall back to the low bound of their type) and runs the
/// interpreter on them. Agreement means the run reverts with the violation
/// kind the obligation predicts, at the same source span.
struct ReplayResult {
    std::string obligation_id;
    std::vector<Value> args;
    bool reverted = false;
    RuntimeViolation violation;  // meaningful iff reverted
    bool agreed = false;
    std::string detail;          // explanation when !agreed
};

ReplayResult replay_refutation(const ResolvedModule& m, const Obligation& o,
                               const LEnv& model);

// ---------------------------------------------------------------------------
// Scenario simulation (randomized trace testing over the small corpus)
// ---------------------------------------------------------------------------

struct ScenarioCall {
    std::string op;              // function name in the module
    std::vector<BigInt> args;    // scalar arguments after the threaded state
};

struct ScenarioStep {
    ScenarioCall call;
    bool reverted = false;
    std::string violation;       // violation kind name when reverted
};

struct ScenarioTrace {
    std::vector<ScenarioStep> steps;
    std::optional<Value> state;  // final contract state
    bool ok = true;              // trace rules held after every step
    std::string failure;         // first broken rule
};

/// Threads a contract state value through the calls: the first call must
/// return the state record (init), later calls taking the record as first
/// parameter receive the current state. Reverted calls leave the state
/// untouched. After every step two trace rules are checked: every `balance`
/// leaf is non-negative, and while a bet is placed the contract balance
/// equals pot + wager.value.
ScenarioTrace run_scenario(const ResolvedModule& m,
                           const std::vector<ScenarioCall>& calls);

/// Deterministic random call sequence against the small casino: init with
/// random player funds, then `length - 1` random operations with random
/// in-range arguments. Same seed, same scenario.
std::vector<ScenarioCall> random_scenario(std::uint64_t seed, int length = 12);

// ---------------------------------------------------------------------------
// Bug regression suite
// ---------------------------------------------------------------------------

struct BugExpectation {
    std::string file;            // file name under the corpus directory
    std::string function;        // where the refutation must land
    std::vector<ObligationKind> kinds; // acceptable obligation kinds there
    std::string label;
};

/// The three seeded-bug variants of the casino and what they must refute.
const std::vector<BugExpectation>& bug_expectations();

struct RegressionOutcome {
    BugExpectation expected;
    bool detected = false;       // >=1 refutation with expected function+kind
    std::vector<std::string> refuted_ids;  // all refutations in the file
    std::vector<std::string> stray_ids;    // refutations outside the expected function
    std::string detail;          // load/verify problems
};

struct RegressionReport {
    std::vector<RegressionOutcome> bugs;
    bool fixed_all_proved = false; // corpus/casino.csl is fully proved
    int fixed_refuted = 0;         // refutations there (false positives)
    double seconds = 0.0;

    bool ok() const; // fixed corpus clean and every bug detected
};

RegressionReport run_bug_regressions(const std::string& corpus_dir,
                                     const SolverConfig& solver, int jobs = 0);

} // namespace csl
