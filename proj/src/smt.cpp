#include "csl/smt.hpp"

#include <algorithm>
#include <cassert>
#include <cctype>
#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <fcntl.h>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

extern char** environ;

namespace csl {

const char* verdict_name(Verdict v) {
    switch (v) {
    case Verdict::Proved: return "proved";
    case Verdict::Refuted: return "refuted";
    case Verdict::Unknown: return "unknown";
    case Verdict::Timeout: return "timeout";
    case Verdict::Error: return "error";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

namespace {

class TermWriter {
public:
    std::string write(const LRef& e) {
        std::string out;
        emit(e, out);
        return out;
    }

private:
    int lets_ = 0;

    void emit(const LRef& e, std::string& out) {
        switch (e->kind) {
        case LKind::IntConst:
            if (e->int_value < 0) {
                out += "(- ";
                out += big_str(-e->int_value);
                out += ")";
            } else {
                out += big_str(e->int_value);
            }
            return;
        case LKind::BoolConst:
            out += e->bool_value ? "true" : "false";
            return;
        case LKind::Sym:
            // '.', '!' are legal in SMT-LIB simple symbols; names pass through
            out += e->name;
            return;
        case LKind::Unary:
            out += e->uop == UnaryOp::Neg ? "(- " : "(not ";
            emit(e->a, out);
            out += ")";
            return;
        case LKind::Ite:
            out += "(ite ";
            emit(e->a, out);
            out += " ";
            emit(e->b, out);
            out += " ";
            emit(e->c, out);
            out += ")";
            return;
        case LKind::Binary:
            emit_binary(e, out);
            return;
        }
    }

    void emit_binary(const LRef& e, std::string& out) {
        const char* op = nullptr;
        switch (e->bop) {
        case BinaryOp::Add: op = "+"; break;
        case BinaryOp::Sub: op = "-"; break;
        case BinaryOp::Mul: op = "*"; break;
        case BinaryOp::Lt: op = "<"; break;
        case BinaryOp::Le: op = "<="; break;
        case BinaryOp::Gt: op = ">"; break;
        case BinaryOp::Ge: op = ">="; break;
        case BinaryOp::Eq: op = "="; break;
        case BinaryOp::Ne: op = "distinct"; break;
        case BinaryOp::And: op = "and"; break;
        case BinaryOp::Or: op = "or"; break;
        case BinaryOp::Implies: op = "=>"; break;
        case BinaryOp::Div:
        case BinaryOp::Mod:
            emit_division(e, out);
            return;
        case BinaryOp::Pow:
            assert(false && "`**` never reaches the encoder");
            return;
        }
        out += "(";
        out += op;
        out += " ";
        emit(e->a, out);
        out += " ";
        emit(e->b, out);
        out += ")";
    }

    // SMT-LIB div/mod are Euclidean (0 <= mod < |b|); the language truncates
    // toward zero. Exact divisions and nonnegative dividends agree; otherwise
    // the Euclidean quotient is one step further from zero.
    void emit_division(const LRef& e, std::string& out) {
        std::string a = "a!" + std::to_string(lets_);
        std::string b = "b!" + std::to_string(lets_);
        ++lets_;
        out += "(let ((" + a + " ";
        emit(e->a, out);
        out += ") (" + b + " ";
        emit(e->b, out);
        out += ")) ";
        std::string agree = "(or (>= " + a + " 0) (= (mod " + a + " " + b + ") 0))";
        if (e->bop == BinaryOp::Div) {
            std::string q = "(div " + a + " " + b + ")";
            out += "(ite " + agree + " " + q + " (ite (> " + b + " 0) (+ " + q +
                   " 1) (- " + q + " 1)))";
        } else {
            std::string r = "(mod " + a + " " + b + ")";
            out += "(ite " + agree + " " + r + " (- " + r + " (ite (> " + b +
                   " 0) " + b + " (- " + b + "))))";
        }
        out += ")";
    }
};

} // namespace

std::string smt_term(const LRef& e) { return TermWriter().write(e); }

std::string encode_obligation(const Obligation& o) {
    std::map<std::string, bool> syms;
    for (const LRef& h : o.hypotheses) collect_syms(h, syms);
    collect_syms(o.goal, syms);
    std::ostringstream out;
    out << "; " << o.id << ": " << o.description << "\n";
    out << "(set-option :produce-models true)\n";
    out << "(set-logic ALL)\n";
    for (const auto& [name, is_bool] : syms)
        out << "(declare-const " << name << (is_bool ? " Bool" : " Int") << ")\n";
    for (const LRef& h : o.hypotheses)
        out << "(assert " << smt_term(h) << ")\n";
    out << "(assert (not " << smt_term(o.goal) << "))\n";
    out << "(check-sat)\n";
    out << "(get-model)\n"; // after unsat this errors; the error is ignored
    return out.str();
}

// ---------------------------------------------------------------------------
// Model decoding
// ---------------------------------------------------------------------------

namespace {

struct SNode {
    bool leaf = false;
    std::string atom;
    std::vector<SNode> kids;
};

std::vector<std::string> tokenize_sexpr(const std::string& s) {
    std::vector<std::string> toks;
    size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '(' || c == ')') {
            toks.emplace_back(1, c);
            ++i;
        } else if (c == ';') {
            while (i < s.size() && s[i] != '\n') ++i;
        } else if (c == '"') { // string literal, e.g. inside (error "...")
            size_t j = i + 1;
            while (j < s.size() && s[j] != '"') ++j;
            toks.push_back(s.substr(i, j + 1 - i));
            i = j + 1;
        } else if (c == '|') { // quoted symbol
            size_t j = i + 1;
            while (j < s.size() && s[j] != '|') ++j;
            toks.push_back(s.substr(i + 1, j - i - 1));
            i = j + 1;
        } else {
            size_t j = i;
            while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j])) &&
                   s[j] != '(' && s[j] != ')')
                ++j;
            toks.push_back(s.substr(i, j - i));
            i = j;
        }
    }
    return toks;
}

SNode parse_sexpr(const std::vector<std::string>& toks, size_t& pos) {
    SNode n;
    if (pos >= toks.size()) return n;
    if (toks[pos] == "(") {
        ++pos;
        while (pos < toks.size() && toks[pos] != ")")
            n.kids.push_back(parse_sexpr(toks, pos));
        if (pos < toks.size()) ++pos; // consume ')'
        return n;
    }
    n.leaf = true;
    n.atom = toks[pos++];
    return n;
}

void harvest_model(const SNode& n, LEnv& env) {
    if (n.leaf) return;
    if (n.kids.size() >= 5 && n.kids[0].leaf && n.kids[0].atom == "define-fun" &&
        n.kids[1].leaf && !n.kids[2].leaf && n.kids[2].kids.empty() &&
        n.kids[3].leaf) {
        const std::string& name = n.kids[1].atom;
        const std::string& sort = n.kids[3].atom;
        const SNode& v = n.kids[4];
        try {
            if (sort == "Bool" && v.leaf) {
                env[name] = LogicValue::of_bool(v.atom == "true");
            } else if (sort == "Int") {
                if (v.leaf)
                    env[name] = LogicValue::of_int(BigInt(v.atom));
                else if (v.kids.size() == 2 && v.kids[0].leaf &&
                         v.kids[0].atom == "-" && v.kids[1].leaf)
                    env[name] = LogicValue::of_int(-BigInt(v.kids[1].atom));
            }
        } catch (const std::invalid_argument&) {
            // non-numeral value: leave the symbol out
        }
        return;
    }
    for (const SNode& k : n.kids) harvest_model(k, env);
}

} // namespace

LEnv decode_model(const std::string& text) {
    std::vector<std::string> toks = tokenize_sexpr(text);
    LEnv env;
    size_t pos = 0;
    while (pos < toks.size()) harvest_model(parse_sexpr(toks, pos), env);
    return env;
}

// ---------------------------------------------------------------------------
// Process driver
// ---------------------------------------------------------------------------

namespace {

struct RunOutcome {
    bool spawn_failed = false;
    bool timed_out = false;
    int exit_code = 0;
    std::string output; // stdout and stderr, merged
    std::string error;  // spawn failure detail
};

// A solver exiting mid-write must not kill the verifier.
struct SigPipeGuard {
    SigPipeGuard() { std::signal(SIGPIPE, SIG_IGN); }
};

/// Spawn `path -in`, feed `input`, collect merged output. Enforces the
/// deadline with poll() and a SIGKILL; safe to call from OpenMP workers
/// (posix_spawn, no fork+malloc in the child).
RunOutcome run_solver_process(const std::string& path, const std::string& input,
                              double timeout_seconds) {
    static SigPipeGuard sigpipe_guard;
    RunOutcome res;

    int in_pipe[2] = {-1, -1};
    int out_pipe[2] = {-1, -1};
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0) {
        res.spawn_failed = true;
        res.error = std::strerror(errno);
        for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]})
            if (fd >= 0) close(fd);
        return res;
    }

    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, in_pipe[0], 0);
    posix_spawn_file_actions_adddup2(&fa, out_pipe[1], 1);
    posix_spawn_file_actions_adddup2(&fa, out_pipe[1], 2);
    posix_spawn_file_actions_addclose(&fa, in_pipe[1]);
    posix_spawn_file_actions_addclose(&fa, out_pipe[0]);

    std::string arg0 = path;
    std::string arg1 = "-in";
    char* argv[] = {arg0.data(), arg1.data(), nullptr};
    pid_t pid = -1;
    int rc = posix_spawnp(&pid, path.c_str(), &fa, nullptr, argv, environ);
    posix_spawn_file_actions_destroy(&fa);
    close(in_pipe[0]);
    close(out_pipe[1]);
    if (rc != 0) {
        res.spawn_failed = true;
        res.error = std::strerror(rc);
        close(in_pipe[1]);
        close(out_pipe[0]);
        return res;
    }

    fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
    fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);

    using clock = std::chrono::steady_clock;
    const auto deadline =
        clock::now() + std::chrono::duration_cast<clock::duration>(
                           std::chrono::duration<double>(timeout_seconds));
    size_t written = 0;
    bool write_open = true;
    bool read_open = true;

    while (read_open || write_open) {
        auto now = clock::now();
        if (now >= deadline) {
            res.timed_out = true;
            kill(pid, SIGKILL);
            break;
        }
        struct pollfd fds[2];
        int n = 0;
        int ri = -1, wi = -1;
        if (read_open) {
            fds[n] = {out_pipe[0], POLLIN, 0};
            ri = n++;
        }
        if (write_open) {
            fds[n] = {in_pipe[1], POLLOUT, 0};
            wi = n++;
        }
        int wait_ms = static_cast<int>(
            std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now)
                .count() +
            1);
        int pr = poll(fds, static_cast<nfds_t>(n), wait_ms);
        if (pr < 0) {
            if (errno == EINTR) continue;
            break;
        }
        if (pr == 0) continue; // deadline re-checked at the top
        if (wi >= 0 && fds[wi].revents != 0) {
            ssize_t w = write(in_pipe[1], input.data() + written,
                              std::min<size_t>(input.size() - written, 1 << 16));
            if (w > 0) written += static_cast<size_t>(w);
            bool failed = w < 0 && errno != EAGAIN && errno != EINTR;
            if (failed || written == input.size()) {
                close(in_pipe[1]);
                write_open = false;
            }
        }
        if (ri >= 0 && fds[ri].revents != 0) {
            char buf[1 << 16];
            ssize_t r = read(out_pipe[0], buf, sizeof buf);
            if (r > 0) {
                res.output.append(buf, static_cast<size_t>(r));
            } else if (r == 0 || (errno != EAGAIN && errno != EINTR)) {
                close(out_pipe[0]);
                read_open = false;
            }
        }
    }
    if (write_open) close(in_pipe[1]);
    if (read_open) close(out_pipe[0]);

    // Reap. After EOF the solver should be gone; if it lingers past the
    // deadline it is killed like a timeout.
    int status = 0;
    for (;;) {
        pid_t done = waitpid(pid, &status, WNOHANG);
        if (done == pid) break;
        if (done < 0 && errno != EINTR) break;
        if (clock::now() >= deadline) {
            res.timed_out = true;
            kill(pid, SIGKILL);
            waitpid(pid, &status, 0);
            break;
        }
        usleep(2000);
    }
    res.exit_code =
        WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    return res;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

} // namespace

SmtResult solve_obligation(const Obligation& o, const SolverConfig& config) {
    SmtResult res;
    const auto t0 = std::chrono::steady_clock::now();
    RunOutcome run =
        run_solver_process(config.path, encode_obligation(o), config.timeout_seconds);
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                      .count();
    if (run.spawn_failed) {
        res.verdict = Verdict::Error;
        res.reason = "cannot run solver '" + config.path + "': " + run.error;
        return res;
    }
    if (run.timed_out) {
        res.verdict = Verdict::Timeout;
        return res;
    }

    // first sat/unsat/unknown line decides; anything before it is chatter
    std::istringstream lines(run.output);
    std::string line;
    size_t after_verdict = std::string::npos;
    while (std::getline(lines, line)) {
        std::string_view t = trim(line);
        if (t == "unsat") {
            res.verdict = Verdict::Proved;
            return res;
        }
        if (t == "sat") {
            res.verdict = Verdict::Refuted;
            after_verdict = static_cast<size_t>(lines.tellg());
            if (after_verdict != std::string::npos)
                res.model = decode_model(run.output.substr(after_verdict));
            return res;
        }
        if (t == "unknown") {
            res.verdict = Verdict::Unknown;
            res.reason = std::string(trim(run.output));
            return res;
        }
    }
    res.verdict = Verdict::Error;
    std::string out = std::string(trim(run.output));
    res.reason = "solver produced no verdict (exit " +
                 std::to_string(run.exit_code) + ")" +
                 (out.empty() ? "" : ": " + out);
    return res;
}

std::optional<std::string> resolve_solver(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv("CSL_SOLVER"); env && *env)
        return std::string(env);
    if (const char* path = std::getenv("PATH")) {
        std::string p(path);
        size_t start = 0;
        while (start <= p.size()) {
            size_t end = p.find(':', start);
            size_t len = (end == std::string::npos ? p.size() : end) - start;
            std::string dir = p.substr(start, len);
            if (!dir.empty()) {
                std::string cand = dir + "/z3";
                if (access(cand.c_str(), X_OK) == 0) return cand;
            }
            if (end == std::string::npos) break;
            start = end + 1;
        }
    }
#ifdef CSL_BUNDLED_SOLVER
    if (access(CSL_BUNDLED_SOLVER, X_OK) == 0)
        return std::string(CSL_BUNDLED_SOLVER);
#endif
    return std::nullopt;
}

} // namespace csl
