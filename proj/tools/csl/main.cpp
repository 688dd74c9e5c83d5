#include "csl/harness.hpp"

#include "CLI11.hpp"

#include <unistd.h>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1; // verification / crosscheck / regression failed
constexpr int kExitUsage = 2;
constexpr int kExitInfra = 3;   // solver missing or broken

struct SolverFlags {
    std::string solver;
    double timeout = 10.0;
    int jobs = 0;
};

void add_solver_flags(CLI::App* cmd, SolverFlags& f) {
    cmd->add_option("--solver", f.solver,
                    "SMT solver binary (default: $CSL_SOLVER, then z3 on PATH, "
                    "then the bundled solver)");
    cmd->add_option("--timeout", f.timeout, "per-obligation timeout in seconds")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--jobs", f.jobs,
                    "parallel solver processes (default: logical CPUs, capped "
                    "at the obligation count)");
}

/// Resolves and validates the solver; prints to stderr and returns nullopt
/// when none is usable (infrastructure error).
std::optional<csl::SolverConfig> make_solver(const SolverFlags& f) {
    std::optional<std::string> path = csl::resolve_solver(f.solver);
    if (!path) {
        std::cerr << "error: no SMT solver found (install z3, set CSL_SOLVER, "
                     "or pass --solver)\n";
        return std::nullopt;
    }
    if (access(path->c_str(), X_OK) != 0) {
        std::cerr << "error: solver is not executable: " << *path << "\n";
        return std::nullopt;
    }
    csl::SolverConfig cfg;
    cfg.path = *path;
    cfg.timeout_seconds = f.timeout;
    return cfg;
}

std::optional<csl::LoadedModule> load_or_complain(const std::string& file) {
    csl::LoadedModule mod = csl::load_module_file(file);
    if (!mod.ok()) {
        for (const csl::Diagnostic& d : mod.diagnostics)
            std::cerr << d.to_string() << "\n";
        return std::nullopt;
    }
    return mod;
}

std::string format_ms(double seconds) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f ms", seconds * 1000.0);
    return buf;
}

void print_model(const csl::LEnv& model, std::ostream& os) {
    if (model.empty()) return;
    os << "    model:";
    for (const auto& [name, v] : model) {
        os << " " << name << "=";
        if (v.is_bool)
            os << (v.bool_value ? "true" : "false");
        else
            os << v.int_value.get_str();
    }
    os << "\n";
}

int cmd_verify(const std::string& file, const SolverFlags& flags,
               const std::string& only_function, const std::string& emit_smt,
               bool json) {
    auto solver = make_solver(flags);
    if (!solver) return kExitInfra;
    auto mod = load_or_complain(file);
    if (!mod) return kExitUsage;

    csl::VerifyOptions opts;
    opts.solver = *solver;
    opts.jobs = flags.jobs;
    opts.only_function = only_function;
    opts.emit_smt_dir = emit_smt;
    csl::VerificationReport rep = csl::verify_module(*mod, opts);

    if (rep.total() == 0 && !only_function.empty()) {
        std::cerr << "error: no function named '" << only_function << "' in "
                  << file << "\n";
        return kExitUsage;
    }

    if (json) {
        std::cout << csl::report_json(rep) << "\n";
    } else {
        for (const csl::FunctionReport& f : rep.functions) {
            std::cout << f.name << "\n";
            for (const csl::ObligationOutcome& o : f.obligations) {
                std::cout << "  " << csl::verdict_name(o.verdict) << "  "
                          << o.obligation.id << "  ("
                          << format_ms(o.seconds) << ")\n";
                if (o.verdict == csl::Verdict::Proved) continue;
                std::cout << "    at " << o.obligation.span.to_string() << ": "
                          << o.obligation.description << "\n";
                if (!o.reason.empty())
                    std::cout << "    " << o.reason << "\n";
                if (o.verdict == csl::Verdict::Refuted)
                    print_model(o.model, std::cout);
            }
        }
        std::printf("%d obligations: %d proved, %d refuted, %d unresolved "
                    "(%.1f s)\n",
                    rep.total(), rep.count(csl::Verdict::Proved),
                    rep.count(csl::Verdict::Refuted),
                    rep.total() - rep.count(csl::Verdict::Proved) -
                        rep.count(csl::Verdict::Refuted),
                    rep.seconds);
    }

    if (rep.count(csl::Verdict::Error) > 0) return kExitInfra;
    return rep.all_proved() ? kExitOk : kExitFailure;
}

int cmd_run(const std::string& file, const std::string& function,
            const std::vector<std::string>& literals) {
    auto mod = load_or_complain(file);
    if (!mod) return kExitUsage;
    const csl::ResolvedModule& m = *mod->module;

    const csl::FunctionDecl* fn = m.find_function(function);
    if (!fn) {
        std::cerr << "error: no function named '" << function << "' in "
                  << file << "\n";
        return kExitUsage;
    }
    if (literals.size() != fn->params.size()) {
        std::cerr << "error: " << function << " takes " << fn->params.size()
                  << " arguments, got " << literals.size() << "\n";
        return kExitUsage;
    }

    std::vector<csl::Value> args;
    for (size_t i = 0; i < literals.size(); ++i) {
        std::string error;
        auto v = csl::parse_value_text(literals[i], error);
        if (!v) {
            std::cerr << "error: argument " << i + 1 << ": " << error << "\n";
            return kExitUsage;
        }
        auto c = csl::conform_value(*v, fn->params[i].type.name, m, error);
        if (!c) {
            std::cerr << "error: argument " << i + 1 << " ('"
                      << fn->params[i].name << "'): " << error << "\n";
            return kExitUsage;
        }
        args.push_back(std::move(*c));
    }

    csl::CallOutcome out = csl::eval_function(m, function, args);
    if (out.reverted) {
        std::cout << "reverted: "
                  << csl::violation_kind_name(out.violation.kind) << " at "
                  << out.violation.span.to_string() << ": "
                  << out.violation.message << "\n";
        return kExitFailure;
    }
    for (size_t i = 0; i < out.values.size(); ++i) {
        if (i < fn->returns.size() && !fn->returns[i].name.empty())
            std::cout << fn->returns[i].name << " = ";
        std::cout << csl::value_str(out.values[i]) << "\n";
    }
    return kExitOk;
}

int cmd_crosscheck(const std::string& file, const SolverFlags& flags,
                   const std::string& only_function) {
    auto solver = make_solver(flags);
    if (!solver) return kExitInfra;
    auto mod = load_or_complain(file);
    if (!mod) return kExitUsage;

    csl::CrosscheckOptions opts;
    opts.solver = *solver;
    opts.jobs = flags.jobs;
    opts.only_function = only_function;
    csl::CrosscheckReport rep = csl::smallscope_crosscheck(*mod, opts);

    int disagreements = 0;
    for (const csl::FunctionCrosscheck& f : rep.functions) {
        if (!f.enumerable) {
            std::cout << f.name << ": skipped (" << f.skip_reason << ")\n";
            continue;
        }
        std::cout << f.name << ": "
                  << (f.verifier_all_proved
                          ? "all proved"
                          : std::to_string(f.refuted_ids.size()) + " refuted")
                  << ", " << f.enumerated << " inputs, " << f.admitted
                  << " admitted, " << f.violations << " violations -> "
                  << (f.consistent ? "agree" : "DISAGREE") << "\n";
        if (f.vacuous)
            std::cout << "  note: no input satisfies the requires clauses\n";
        if (!f.first_violation.empty())
            std::cout << "  " << f.first_violation << "\n";
        if (!f.consistent) ++disagreements;
    }
    std::printf("%zu functions, %d disagreements (%.1f s)\n",
                rep.functions.size(), disagreements, rep.seconds);
    return rep.ok() ? kExitOk : kExitFailure;
}

int cmd_regress(const std::string& corpus_dir, const SolverFlags& flags) {
    auto solver = make_solver(flags);
    if (!solver) return kExitInfra;

    csl::RegressionReport rep =
        csl::run_bug_regressions(corpus_dir, *solver, flags.jobs);

    std::cout << "fixed corpus: "
              << (rep.fixed_all_proved ? "all proved" : "NOT fully proved")
              << ", " << rep.fixed_refuted << " false positives\n";
    for (const csl::RegressionOutcome& b : rep.bugs) {
        std::cout << b.expected.file << ": "
                  << (b.detected ? "detected" : "MISSED") << " ("
                  << b.expected.label << ")\n";
        if (!b.detail.empty()) std::cout << "  " << b.detail << "\n";
        for (const std::string& id : b.refuted_ids)
            std::cout << "  refuted: " << id << "\n";
    }
    size_t detected = 0;
    for (const csl::RegressionOutcome& b : rep.bugs)
        if (b.detected) ++detected;
    std::printf("%zu/%zu bugs detected (%.1f s)\n", detected, rep.bugs.size(),
                rep.seconds);
    return rep.ok() ? kExitOk : kExitFailure;
}

int cmd_stats(const std::string& file, bool json) {
    auto mod = load_or_complain(file);
    if (!mod) return kExitUsage;
    csl::CorpusStats st = csl::corpus_stats(*mod);
    if (json) {
        std::printf("{\"module\": \"%s\", \"types\": %d, \"properties\": %d, "
                    "\"functions\": %d, \"consts\": %d, \"spec_lines\": %d, "
                    "\"code_lines\": %d, \"spec_ratio\": %.4f}\n",
                    file.c_str(), st.types, st.properties, st.functions,
                    st.consts, st.spec_lines, st.code_lines, st.spec_ratio());
    } else {
        std::cout << file << "\n";
        std::printf("  types       %4d\n", st.types);
        std::printf("  properties  %4d\n", st.properties);
        std::printf("  functions   %4d\n", st.functions);
        std::printf("  consts      %4d\n", st.consts);
        std::printf("  spec lines  %4d\n", st.spec_lines);
        std::printf("  code lines  %4d\n", st.code_lines);
        std::printf("  spec ratio  %5.1f%%\n", st.spec_ratio() * 100.0);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"CSL contract verifier"};
    app.require_subcommand(1);

    std::string file, function, emit_smt, corpus_dir = "corpus";
    std::vector<std::string> run_args;
    bool json = false;
    SolverFlags flags;

    CLI::App* verify = app.add_subcommand(
        "verify", "generate obligations and prove them with the SMT solver");
    verify->add_option("file", file, "module to verify")->required();
    verify->add_option("--function", function, "verify only this function");
    add_solver_flags(verify, flags);
    verify->add_option("--emit-smt", emit_smt,
                       "dump one .smt2 file per obligation into this directory");
    verify->add_flag("--json", json, "machine-readable report");

    CLI::App* run = app.add_subcommand(
        "run", "execute one function on literal arguments in the interpreter");
    run->add_option("file", file, "module to load")->required();
    run->add_option("--function", function, "function to call")->required();
    run->add_option("--args", run_args,
                    "one literal per parameter, e.g. 7 true '{pot: 3, ...}'");

    CLI::App* crosscheck = app.add_subcommand(
        "crosscheck",
        "exhaustively interpret every admissible input and compare against "
        "the verifier's verdicts");
    crosscheck->add_option("file", file, "module to crosscheck")->required();
    crosscheck->add_option("--function", function,
                           "crosscheck only this function");
    add_solver_flags(crosscheck, flags);

    CLI::App* regress = app.add_subcommand(
        "regress", "verify the seeded-bug corpus and the fixed corpus");
    regress->add_option("--corpus", corpus_dir,
                        "corpus directory (default: corpus)");
    add_solver_flags(regress, flags);

    CLI::App* stats = app.add_subcommand(
        "stats", "count declarations and specification lines");
    stats->add_option("file", file, "module to measure")->required();
    stats->add_flag("--json", json, "machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (verify->parsed())
            return cmd_verify(file, flags, function, emit_smt, json);
        if (run->parsed()) return cmd_run(file, function, run_args);
        if (crosscheck->parsed()) return cmd_crosscheck(file, flags, function);
        if (regress->parsed()) return cmd_regress(corpus_dir, flags);
        if (stats->parsed()) return cmd_stats(file, json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfra;
    }
    return kExitUsage;
}
