#include "csl/harness.hpp"

#include "csl/parser.hpp"

#include "json.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace csl {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

int effective_jobs(int requested, int work_items) {
    int jobs = requested > 0 ? requested
                             : int(std::thread::hardware_concurrency());
    if (jobs < 1) jobs = 1;
    return std::min(jobs, std::max(1, work_items));
}

} // namespace

// ---------------------------------------------------------------------------
// Loading
// ---------------------------------------------------------------------------

LoadedModule load_module_text(std::string source, std::string name) {
    LoadedModule out;
    out.path = name;
    out.source = std::move(source);
    ParseResult pr = parse(out.source, std::move(name));
    if (!pr.ok()) {
        out.diagnostics = std::move(pr.diagnostics);
        return out;
    }
    ResolveResult rr = typecheck(std::move(*pr.module));
    out.diagnostics = std::move(rr.diagnostics);
    if (rr.module) out.module.emplace(std::move(*rr.module));
    return out;
}

LoadedModule load_module_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        LoadedModule out;
        out.path = path;
        Diagnostic d;
        d.message = "cannot open " + path;
        d.span.file = path;
        out.diagnostics.push_back(std::move(d));
        return out;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_module_text(buf.str(), path);
}

// ---------------------------------------------------------------------------
// Corpus statistics
// ---------------------------------------------------------------------------

CorpusStats corpus_stats(const LoadedModule& mod) {
    CorpusStats st;

    // Non-blank, non-comment source lines.
    std::istringstream lines(mod.source);
    std::string line;
    while (std::getline(lines, line)) {
        size_t i = line.find_first_not_of(" \t\r");
        if (i == std::string::npos) continue;
        if (line.compare(i, 2, "//") == 0) continue;
        ++st.code_lines;
    }
    if (!mod.ok()) return st;

    std::set<int> spec;
    auto mark = [&spec](const SourceSpan& s) {
        for (int l = s.start_line; l <= s.end_line; ++l) spec.insert(l);
    };
    for (const Decl& d : mod.module->ast.decls) {
        if (d.is<TypeDecl>()) {
            ++st.types;
        } else if (d.is<ConstDecl>()) {
            ++st.consts;
        } else if (d.is<PropertyDecl>()) {
            ++st.properties;
            mark(d.as<PropertyDecl>().span);
        } else {
            ++st.functions;
            const auto& fn = d.as<FunctionDecl>();
            for (const Expr& e : fn.requires_clauses) mark(e.span);
            for (const Expr& e : fn.ensures_clauses) mark(e.span);
        }
    }
    st.spec_lines = int(spec.size());
    return st;
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

bool FunctionReport::all_proved() const {
    for (const ObligationOutcome& o : obligations)
        if (o.verdict != Verdict::Proved) return false;
    return true;
}

bool VerificationReport::all_proved() const {
    for (const FunctionReport& f : functions)
        if (!f.all_proved()) return false;
    return true;
}

int VerificationReport::total() const {
    int n = 0;
    for (const FunctionReport& f : functions) n += int(f.obligations.size());
    return n;
}

int VerificationReport::count(Verdict v) const {
    int n = 0;
    for (const FunctionReport& f : functions)
        for (const ObligationOutcome& o : f.obligations)
            if (o.verdict == v) ++n;
    return n;
}

namespace {

// "fn.Kind.3" -> 3; ids are vcgen-generated so the tail is always numeric.
int id_ordinal(const std::string& id) {
    size_t p = id.rfind('.');
    return p == std::string::npos ? 0 : std::atoi(id.c_str() + p + 1);
}

void sort_by_id(std::vector<ObligationOutcome>& obs) {
    std::sort(obs.begin(), obs.end(),
              [](const ObligationOutcome& a, const ObligationOutcome& b) {
                  int k = std::strcmp(obligation_kind_name(a.obligation.kind),
                                      obligation_kind_name(b.obligation.kind));
                  if (k != 0) return k < 0;
                  return id_ordinal(a.obligation.id) < id_ordinal(b.obligation.id);
              });
}

} // namespace

VerificationReport verify_module(const LoadedModule& mod,
                                 const VerifyOptions& opts) {
    VerificationReport rep;
    rep.path = mod.path;
    rep.stats = corpus_stats(mod);
    if (!mod.ok()) return rep;
    const ResolvedModule& m = *mod.module;

    std::vector<const FunctionDecl*> fns;
    for (const Decl& d : m.ast.decls)
        if (d.is<FunctionDecl>()) {
            const auto& f = d.as<FunctionDecl>();
            if (opts.only_function.empty() || f.name == opts.only_function)
                fns.push_back(&f);
        }

    struct Slot {
        size_t fn = 0;
        ObligationOutcome out;
    };
    std::vector<Slot> slots;
    for (size_t i = 0; i < fns.size(); ++i)
        for (Obligation& o : generate_obligations(m, *fns[i])) {
            Slot s;
            s.fn = i;
            s.out.obligation = std::move(o);
            slots.push_back(std::move(s));
        }

    if (!opts.emit_smt_dir.empty()) {
        std::filesystem::create_directories(opts.emit_smt_dir);
        for (const Slot& s : slots) {
            std::ofstream out(opts.emit_smt_dir + "/" + s.out.obligation.id +
                              ".smt2");
            out << encode_obligation(s.out.obligation);
        }
    }

    auto t0 = std::chrono::steady_clock::now();
    int n = int(slots.size());
    int jobs = effective_jobs(opts.jobs, n);
#pragma omp parallel for num_threads(jobs) schedule(dynamic)
    for (int i = 0; i < n; ++i) {
        SmtResult r = solve_obligation(slots[i].out.obligation, opts.solver);
        slots[i].out.verdict = r.verdict;
        slots[i].out.reason = std::move(r.reason);
        slots[i].out.model = std::move(r.model);
        slots[i].out.seconds = r.seconds;
    }
    rep.seconds = seconds_since(t0);

    rep.functions.resize(fns.size());
    for (size_t i = 0; i < fns.size(); ++i) rep.functions[i].name = fns[i]->name;
    for (Slot& s : slots)
        rep.functions[s.fn].obligations.push_back(std::move(s.out));
    for (FunctionReport& f : rep.functions) sort_by_id(f.obligations);
    return rep;
}

std::string report_json(const VerificationReport& report) {
    nlohmann::ordered_json j;
    j["module"] = report.path;
    j["functions"] = nlohmann::ordered_json::array();
    for (const FunctionReport& f : report.functions) {
        nlohmann::ordered_json jf;
        jf["name"] = f.name;
        jf["obligations"] = nlohmann::ordered_json::array();
        for (const ObligationOutcome& o : f.obligations) {
            nlohmann::ordered_json jo;
            jo["id"] = o.obligation.id;
            jo["kind"] = obligation_kind_name(o.obligation.kind);
            jo["verdict"] = verdict_name(o.verdict);
            jo["ms"] = o.seconds * 1000.0;
            jf["obligations"].push_back(std::move(jo));
        }
        j["functions"].push_back(std::move(jf));
    }
    nlohmann::ordered_json js;
    js["types"] = report.stats.types;
    js["properties"] = report.stats.properties;
    js["functions"] = report.stats.functions;
    js["consts"] = report.stats.consts;
    js["spec_lines"] = report.stats.spec_lines;
    js["code_lines"] = report.stats.code_lines;
    js["spec_ratio"] = report.stats.spec_ratio();
    js["obligations"] = report.total();
    js["proved"] = report.count(Verdict::Proved);
    js["refuted"] = report.count(Verdict::Refuted);
    js["unknown"] = report.count(Verdict::Unknown);
    js["timeout"] = report.count(Verdict::Timeout);
    js["error"] = report.count(Verdict::Error);
    js["seconds"] = report.seconds;
    j["stats"] = std::move(js);
    return j.dump(2);
}

// ---------------------------------------------------------------------------
// Small-scope crosscheck
// ---------------------------------------------------------------------------

bool CrosscheckReport::ok() const {
    for (const FunctionCrosscheck& f : functions)
        if (!f.consistent) return false;
    return true;
}

namespace {

std::string describe_violation(const RuntimeViolation& v,
                               const std::vector<Value>& args) {
    std::ostringstream os;
    os << violation_kind_name(v.kind) << " at " << v.span.to_string() << ": "
       << v.message << " on (";
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) os << ", ";
        os << value_str(args[i]);
    }
    os << ")";
    std::string s = os.str();
    if (s.size() > 300) s = s.substr(0, 297) + "...";
    return s;
}

} // namespace

CrosscheckReport smallscope_crosscheck(const LoadedModule& mod,
                                       const CrosscheckOptions& opts) {
    CrosscheckReport rep;
    rep.path = mod.path;
    if (!mod.ok()) return rep;
    const ResolvedModule& m = *mod.module;
    auto t0 = std::chrono::steady_clock::now();

    for (const Decl& d : m.ast.decls) {
        if (!d.is<FunctionDecl>()) continue;
        const FunctionDecl& fn = d.as<FunctionDecl>();
        if (!opts.only_function.empty() && fn.name != opts.only_function)
            continue;

        FunctionCrosscheck fc;
        fc.name = fn.name;

        std::vector<Obligation> obs = generate_obligations(m, fn);
        std::vector<Verdict> verdicts(obs.size(), Verdict::Error);
        int n = int(obs.size());
        int jobs = effective_jobs(opts.jobs, n);
#pragma omp parallel for num_threads(jobs) schedule(dynamic)
        for (int i = 0; i < n; ++i)
            verdicts[i] = solve_obligation(obs[i], opts.solver).verdict;

        fc.verifier_all_proved = true;
        for (int i = 0; i < n; ++i) {
            if (verdicts[i] == Verdict::Refuted)
                fc.refuted_ids.push_back(obs[i].id);
            if (verdicts[i] != Verdict::Proved) fc.verifier_all_proved = false;
            if (verdicts[i] != Verdict::Proved && verdicts[i] != Verdict::Refuted)
                fc.verifier_unresolved = true;
        }

        InputEnumerator en(m, fn, opts.max_domain);
        if (!en.ok()) {
            fc.enumerable = false;
            fc.skip_reason = en.error();
            fc.consistent = true; // skipped, not disagreeing
            rep.functions.push_back(std::move(fc));
            continue;
        }
        fc.enumerable = true;

        while (auto input = en.next()) {
            ++fc.enumerated;
            CallOutcome out = eval_function_prevalidated(m, fn.name, *input);
            if (out.reverted &&
                out.violation.kind == ViolationKind::Precondition)
                continue; // requires filtered this input out
            ++fc.admitted;
            if (out.reverted) {
                ++fc.violations;
                if (fc.first_violation.empty())
                    fc.first_violation = describe_violation(out.violation, *input);
            }
        }
        fc.vacuous = fc.admitted == 0;

        if (fc.verifier_all_proved)
            fc.consistent = fc.violations == 0;
        else if (!fc.refuted_ids.empty())
            fc.consistent = fc.violations > 0;
        else
            fc.consistent = true; // only unresolved verdicts: no claim to check
        rep.functions.push_back(std::move(fc));
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

// ---------------------------------------------------------------------------
// Counterexample replay
// ---------------------------------------------------------------------------

namespace {

/// Reconstructs the concrete value of `root` (a parameter) from model
/// symbols named by dotted leaf path. Leaves the solver left unconstrained
/// are absent from the model; they default to the type's low bound, which is
/// safe because such leaves appear in no hypothesis.
Value value_from_model(const ResolvedModule& m, const LEnv& env,
                       const std::string& root, const std::string& type_name) {
    Type shape = m.shape_of(type_name);
    if (shape.kind == TypeKind::Bool) {
        auto it = env.find(root);
        bool v = it != env.end() && it->second.is_bool && it->second.bool_value;
        return Value::of_bool(v);
    }
    if (shape.kind == TypeKind::Int) {
        auto it = env.find(root);
        if (it != env.end() && !it->second.is_bool)
            return Value::of_int(it->second.int_value);
        auto b = m.bounds.find(type_name);
        return Value::of_int(b != m.bounds.end() ? b->second.lo : BigInt(0));
    }
    const TypeDecl* td = m.find_type(shape.record_name);
    std::vector<ValueField> fields;
    for (const TypeDecl::Field& f : td->fields)
        fields.push_back(
            {f.name, value_from_model(m, env, root + "." + f.name, f.type.name)});
    return Value::record(std::move(fields));
}

bool same_span(const SourceSpan& a, const SourceSpan& b) {
    return a.start_line == b.start_line && a.start_col == b.start_col &&
           a.end_line == b.end_line && a.end_col == b.end_col;
}

} // namespace

ReplayResult replay_refutation(const ResolvedModule& m, const Obligation& o,
                               const LEnv& model) {
    ReplayResult rr;
    rr.obligation_id = o.id;
    const FunctionDecl* fn = m.find_function(o.function);
    if (!fn) {
        rr.detail = "unknown function " + o.function;
        return rr;
    }
    for (const Param& p : fn->params)
        rr.args.push_back(value_from_model(m, model, p.name, p.type.name));

    CallOutcome out = eval_function(m, o.function, rr.args);
    rr.reverted = out.reverted;
    if (!out.reverted) {
        rr.detail = "model did not produce a violation";
        return rr;
    }
    rr.violation = out.violation;
    ViolationKind want = violation_of(o.kind);
    if (out.violation.kind != want) {
        rr.detail = std::string("violation kind ") +
                    violation_kind_name(out.violation.kind) + ", expected " +
                    violation_kind_name(want);
        return rr;
    }
    if (!same_span(out.violation.span, o.span)) {
        rr.detail = "violation at " + out.violation.span.to_string() +
                    ", obligation at " + o.span.to_string();
        return rr;
    }
    rr.agreed = true;
    return rr;
}

// ---------------------------------------------------------------------------
// Scenario simulation
// ---------------------------------------------------------------------------

namespace {

const Value* find_field(const Value& v, const std::string& name) {
    if (v.kind != Value::Kind::Record) return nullptr;
    for (const ValueField& f : v.fields)
        if (f.name == name) return &f.value;
    return nullptr;
}

void collect_balances(const Value& v, const std::string& path,
                      std::vector<std::pair<std::string, BigInt>>& out) {
    if (v.kind != Value::Kind::Record) return;
    for (const ValueField& f : v.fields) {
        std::string p = path.empty() ? f.name : path + "." + f.name;
        if (f.name == "balance" && f.value.kind == Value::Kind::Int)
            out.push_back({p, f.value.int_value});
        else
            collect_balances(f.value, p, out);
    }
}

/// Empty string when the state satisfies both trace rules.
std::string trace_rule_violation(const ResolvedModule& m, const Value& state) {
    std::vector<std::pair<std::string, BigInt>> balances;
    collect_balances(state, "", balances);
    for (const auto& [path, v] : balances)
        if (v < 0) return path + " is negative (" + v.get_str() + ")";

    const ConstValue* bp = m.find_const("BET_PLACED");
    const Value* st = find_field(state, "state");
    const Value* pot = find_field(state, "pot");
    const Value* wager = find_field(state, "wager");
    const Value* addr = find_field(state, "address");
    if (bp && st && pot && wager && addr) {
        const Value* wv = find_field(*wager, "value");
        const Value* bal = find_field(*addr, "balance");
        if (wv && bal && st->int_value == bp->int_value &&
            pot->int_value + wv->int_value != bal->int_value)
            return "bet placed but pot (" + pot->int_value.get_str() +
                   ") + wager (" + wv->int_value.get_str() +
                   ") != balance (" + bal->int_value.get_str() + ")";
    }
    return "";
}

} // namespace

ScenarioTrace run_scenario(const ResolvedModule& m,
                           const std::vector<ScenarioCall>& calls) {
    ScenarioTrace tr;
    for (const ScenarioCall& c : calls) {
        const FunctionDecl* fn = m.find_function(c.op);
        if (!fn) throw std::invalid_argument("scenario: unknown function " + c.op);

        ScenarioStep step;
        step.call = c;

        std::vector<Value> args;
        size_t next = 0;
        if (!fn->params.empty() &&
            m.shape_of(fn->params[0].type.name).kind == TypeKind::Record) {
            if (!tr.state) {
                tr.ok = false;
                tr.failure = c.op + " called before the state exists";
                tr.steps.push_back(std::move(step));
                return tr;
            }
            args.push_back(*tr.state);
            next = 1;
        }
        size_t scalars = fn->params.size() - next;
        if (scalars != c.args.size())
            throw std::invalid_argument("scenario: " + c.op + " takes " +
                                        std::to_string(scalars) +
                                        " scalar arguments, got " +
                                        std::to_string(c.args.size()));
        for (size_t i = 0; i < scalars; ++i) {
            const Param& p = fn->params[next + i];
            if (m.shape_of(p.type.name).kind == TypeKind::Bool)
                args.push_back(Value::of_bool(c.args[i] != 0));
            else
                args.push_back(Value::of_int(c.args[i]));
        }

        Value before = tr.state ? *tr.state : Value::of_int(0);
        CallOutcome out = eval_function(m, c.op, args);
        if (out.reverted) {
            step.reverted = true;
            step.violation = violation_kind_name(out.violation.kind);
            if (tr.state && *tr.state != before) {
                tr.ok = false;
                tr.failure = c.op + " reverted but changed the state";
            }
        } else if (!out.values.empty() &&
                   out.values[0].kind == Value::Kind::Record) {
            tr.state = out.values[0];
        }

        if (tr.ok && tr.state) {
            std::string broken = trace_rule_violation(m, *tr.state);
            if (!broken.empty()) {
                tr.ok = false;
                tr.failure = "after " + c.op + ": " + broken;
            }
        }
        tr.steps.push_back(std::move(step));
        if (!tr.ok) return tr;
    }
    return tr;
}

std::vector<ScenarioCall> random_scenario(std::uint64_t seed, int length) {
    std::mt19937_64 gen(seed);
    auto pick = [&gen](unsigned long n) {
        return BigInt((unsigned long)(gen() % n));
    };
    std::vector<ScenarioCall> calls;
    calls.push_back({"initS", {BigInt(1), BigInt(2), BigInt(3), pick(16)}});
    for (int i = 1; i < length; ++i) {
        switch (gen() % 5) {
        case 0: calls.push_back({"createGameS", {}}); break;
        case 1: calls.push_back({"placeBetS", {pick(16), pick(2)}}); break;
        case 2: calls.push_back({"decideBetS", {pick(2)}}); break;
        case 3: calls.push_back({"addToPotS", {pick(16)}}); break;
        default: calls.push_back({"removeFromPotS", {pick(16)}}); break;
        }
    }
    return calls;
}

// ---------------------------------------------------------------------------
// Bug regression suite
// ---------------------------------------------------------------------------

const std::vector<BugExpectation>& bug_expectations() {
    static const std::vector<BugExpectation> expectations = {
        {"casino_bug_decidebet.csl",
         "decideBet",
         {ObligationKind::Postcondition},
         "issue 1: payout credits 1x instead of 2x the wager"},
        {"casino_bug_removefrompot.csl",
         "removeFromPot",
         {ObligationKind::Postcondition, ObligationKind::RecordInvariant},
         "issue 2: removeFromPot is payable and books the incoming value"},
        {"casino_bug_transfer.csl",
         "transfer",
         {ObligationKind::TypeConstraint},
         "issue 3: funds checks test the receiver, sender can underflow"},
    };
    return expectations;
}

bool RegressionReport::ok() const {
    if (!fixed_all_proved || fixed_refuted != 0) return false;
    for (const RegressionOutcome& b : bugs)
        if (!b.detected) return false;
    return true;
}

RegressionReport run_bug_regressions(const std::string& corpus_dir,
                                     const SolverConfig& solver, int jobs) {
    RegressionReport rep;
    auto t0 = std::chrono::steady_clock::now();
    VerifyOptions vo;
    vo.solver = solver;
    vo.jobs = jobs;

    LoadedModule fixed = load_module_file(corpus_dir + "/casino.csl");
    if (fixed.ok()) {
        VerificationReport fr = verify_module(fixed, vo);
        rep.fixed_all_proved = fr.all_proved() && fr.total() > 0;
        rep.fixed_refuted = fr.count(Verdict::Refuted);
    }

    for (const BugExpectation& e : bug_expectations()) {
        RegressionOutcome out;
        out.expected = e;
        LoadedModule bug = load_module_file(corpus_dir + "/" + e.file);
        if (!bug.ok()) {
            out.detail = "failed to load " + e.file;
            rep.bugs.push_back(std::move(out));
            continue;
        }
        VerificationReport br = verify_module(bug, vo);
        for (const FunctionReport& f : br.functions)
            for (const ObligationOutcome& o : f.obligations) {
                if (o.verdict != Verdict::Refuted) continue;
                out.refuted_ids.push_back(o.obligation.id);
                if (f.name == e.function) {
                    for (ObligationKind k : e.kinds)
                        if (o.obligation.kind == k) out.detected = true;
                } else {
                    out.stray_ids.push_back(o.obligation.id);
                }
            }
        rep.bugs.push_back(std::move(out));
    }
    rep.seconds = seconds_since(t0);
    return rep;
}

} // namespace csl
