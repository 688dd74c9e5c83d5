#include "csl/vcgen.hpp"

#include <cassert>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace csl {

const char* obligation_kind_name(ObligationKind kind) {
    switch (kind) {
    case ObligationKind::CalleePrecondition: return "CalleePrecondition";
    case ObligationKind::Postcondition: return "Postcondition";
    case ObligationKind::TypeConstraint: return "TypeConstraint";
    case ObligationKind::RecordInvariant: return "RecordInvariant";
    case ObligationKind::DivByZero: return "DivByZero";
    }
    return "?";
}

namespace {

// A value shaped like its type: one logic term per scalar leaf, field order
// as declared. Record operations never touch a record term as a whole; they
// act on this tree.
struct LTree {
    LRef scalar; // set iff the value is a scalar
    std::vector<std::pair<std::string, LTree>> fields;
};

LTree scalar_tree(LRef v) { return LTree{std::move(v), {}}; }

std::string join_path(const std::string& prefix, const std::string& rest) {
    if (prefix.empty()) return rest;
    if (rest.empty()) return prefix;
    return prefix + "." + rest;
}

std::string path_str(const std::vector<std::string>& path) {
    std::string out;
    for (const std::string& p : path) out = join_path(out, p);
    return out;
}

const LTree& tree_field(const LTree& t, const std::string& name) {
    for (const auto& [n, sub] : t.fields)
        if (n == name) return sub;
    assert(false && "field not in tree");
    return t;
}

const LTree& tree_at(const LTree& t, const std::vector<std::string>& path) {
    const LTree* cur = &t;
    for (const std::string& p : path) cur = &tree_field(*cur, p);
    return *cur;
}

void tree_leaves(const LTree& t, std::vector<LRef>& out) {
    if (t.scalar) {
        out.push_back(t.scalar);
        return;
    }
    for (const auto& [n, sub] : t.fields) tree_leaves(sub, out);
}

/// Overrides for name lowering; anything absent falls back to the symbol
/// tree of the expression's annotated type (or the constant's value).
using LowerEnv = std::map<std::string, LTree>;

enum class BranchSide { Then, Else };

/// One level of the statement nesting around a site. Innermost frame: the
/// statement the site belongs to. Outer frames: an IfStmt at `index` with
/// `branch` saying which arm the site is under.
struct Frame {
    const std::vector<Stmt>* block = nullptr;
    size_t index = 0;
    std::optional<BranchSide> branch;
};

/// A check discovered in program order. `pre` sites state their goal over
/// the machine state before the statement runs; effect checks (`pre` false)
/// state it over the state after, and the statement's own wp folds it back.
struct Site {
    std::vector<Frame> frames;
    bool pre = true;
    ObligationKind kind = ObligationKind::TypeConstraint;
    LRef goal;
    SourceSpan span;
    std::string description;
};

class Gen {
public:
    Gen(const ResolvedModule& m, const FunctionDecl& fn) : m_(m), fn_(fn) {
        for (const Param& p : fn_.params)
            for (const LeafField& leaf : m_.leaf_fields(p.type.name)) {
                std::string sym = join_path(p.name, path_str(leaf.path));
                marker_renames_["@" + sym] =
                    mk_sym(sym, leaf.shape.kind == TypeKind::Bool);
            }
        std::map<std::string, std::string> var_types;
        for (const Param& p : fn_.params) var_types[p.name] = p.type.name;
        std::vector<Frame> frames;
        walk_block(fn_.body, frames, var_types);
        // Functions that return no values may fall off the end; their ensures
        // clauses still have to hold there.
        if (!fn_.ensures_clauses.empty() && !block_returns(fn_.body)) {
            frames.push_back({&fn_.body, fn_.body.size(), std::nullopt});
            emit_postconditions({}, frames, fn_.span);
            frames.pop_back();
        }
    }

    std::vector<Obligation> obligations() const {
        std::vector<LRef> hyps = hypotheses();
        LRef hyp_conj = mk_and_all(hyps);
        std::map<ObligationKind, int> counters;
        std::vector<Obligation> out;
        out.reserve(sites_.size());
        for (const Site& s : sites_) {
            Obligation o;
            o.function = fn_.name;
            o.kind = s.kind;
            o.id = fn_.name + "." + obligation_kind_name(s.kind) + "." +
                   std::to_string(counters[s.kind]++);
            o.hypotheses = hyps;
            o.goal = subst(wp_path(s), marker_renames_);
            o.formula = mk_implies(hyp_conj, o.goal);
            o.span = s.span;
            o.description = s.description;
            out.push_back(std::move(o));
        }
        return out;
    }

    LRef wp_one(const Stmt& stmt, LRef post) const { return wp_stmt(stmt, post); }

    LRef wp_many(const std::vector<Stmt>& stmts, LRef post) const {
        for (size_t i = stmts.size(); i-- > 0;) post = wp_stmt(stmts[i], post);
        return post;
    }

private:
    // ---- symbol trees and lowering ----

    LTree symbol_tree(const std::string& prefix, const std::string& type_name) const {
        Type shape = m_.shape_of(type_name);
        if (shape.kind != TypeKind::Record)
            return scalar_tree(mk_sym(prefix, shape.kind == TypeKind::Bool));
        const TypeDecl* decl = m_.find_type(shape.record_name);
        LTree t;
        for (const auto& f : decl->fields)
            t.fields.emplace_back(f.name,
                                  symbol_tree(join_path(prefix, f.name), f.type.name));
        return t;
    }

    LRef lower(const Expr& e, const LowerEnv& env) const {
        LTree t = lower_tree(e, env);
        assert(t.scalar && "record value in scalar position");
        return t.scalar;
    }

    LTree lower_tree(const Expr& e, const LowerEnv& env) const {
        if (e.is<IntLit>()) return scalar_tree(mk_int(e.as<IntLit>().value));
        if (e.is<BoolLit>()) return scalar_tree(mk_bool(e.as<BoolLit>().value));
        if (e.is<VarRef>()) {
            const std::string& n = e.as<VarRef>().name;
            auto it = env.find(n);
            if (it != env.end()) return it->second;
            if (const ConstValue* c = m_.find_const(n))
                return scalar_tree(c->type.kind == TypeKind::Bool
                                       ? mk_bool(c->bool_value)
                                       : mk_int(c->int_value));
            if (e.type.kind == TypeKind::Record)
                return symbol_tree(n, e.type.record_name);
            return scalar_tree(mk_sym(n, e.type.kind == TypeKind::Bool));
        }
        if (e.is<FieldAccess>()) {
            const auto& fa = e.as<FieldAccess>();
            LTree base = lower_tree(*fa.base, env);
            return tree_field(base, fa.field);
        }
        if (e.is<UnaryExpr>()) {
            const auto& u = e.as<UnaryExpr>();
            LRef v = lower(*u.operand, env);
            return scalar_tree(u.op == UnaryOp::Neg ? mk_neg(std::move(v))
                                                    : mk_not(std::move(v)));
        }
        if (e.is<BinaryExpr>()) {
            const auto& b = e.as<BinaryExpr>();
            assert(b.op != BinaryOp::Pow && "`**` lives only in const initializers");
            if (b.op == BinaryOp::Eq || b.op == BinaryOp::Ne) {
                LTree l = lower_tree(*b.lhs, env);
                LTree r = lower_tree(*b.rhs, env);
                if (!l.scalar) { // record comparison: leafwise conjunction
                    std::vector<LRef> ll, rl;
                    tree_leaves(l, ll);
                    tree_leaves(r, rl);
                    assert(ll.size() == rl.size());
                    std::vector<LRef> eqs;
                    for (size_t i = 0; i < ll.size(); ++i)
                        eqs.push_back(mk_eq(ll[i], rl[i]));
                    LRef conj = mk_and_all(eqs);
                    return scalar_tree(b.op == BinaryOp::Eq ? conj
                                                            : mk_not(std::move(conj)));
                }
                return scalar_tree(mk_binary(b.op, l.scalar, r.scalar));
            }
            return scalar_tree(mk_binary(b.op, lower(*b.lhs, env), lower(*b.rhs, env)));
        }
        if (e.is<RecordLit>()) {
            assert(e.type.kind == TypeKind::Record);
            const TypeDecl* decl = m_.find_type(e.type.record_name);
            const auto& lit = e.as<RecordLit>();
            LTree t;
            for (const auto& f : decl->fields) // normalize to declaration order
                for (const auto& lf : lit.fields)
                    if (lf.name == f.name) {
                        t.fields.emplace_back(f.name, lower_tree(*lf.value, env));
                        break;
                    }
            return t;
        }
        assert(false && "calls and tuples are never lowered as values");
        return {};
    }

    // ---- validity formulas ----

    void leaf_constraints(const std::string& type_name, const LRef& value,
                          std::vector<LRef>& out) const {
        for (const ScalarConstraint& c : m_.scalar_constraints(type_name)) {
            Expr inlined = inline_properties(*c.clause, m_);
            LowerEnv env;
            env[c.binder] = scalar_tree(value);
            out.push_back(lower(inlined, env));
        }
    }

    void segment_wheres(const TypeDecl& decl, const LTree& value,
                        std::vector<LRef>& out) const {
        if (decl.wheres.empty()) return;
        LowerEnv env;
        for (const auto& f : decl.fields) env[f.name] = tree_field(value, f.name);
        for (const Expr& w : decl.wheres)
            out.push_back(lower(inline_properties(w, m_), env));
    }

    /// Everything `value : type_name` promises: each constrained leaf's
    /// where chain, then each record segment's invariant, root first.
    void full_validity(const std::string& type_name, const LTree& value,
                       std::vector<LRef>& out) const {
        for (const LeafField& leaf : m_.leaf_fields(type_name))
            leaf_constraints(leaf.type_name, tree_at(value, leaf.path).scalar, out);
        for (const RecordSegment& seg : m_.record_segments(type_name))
            segment_wheres(*seg.decl, tree_at(value, seg.path), out);
    }

    std::vector<LRef> hypotheses() const {
        std::vector<LRef> hyps;
        for (const Param& p : fn_.params)
            full_validity(p.type.name, symbol_tree(p.name, p.type.name), hyps);
        for (const Expr& r : fn_.requires_clauses)
            hyps.push_back(lower(inline_properties(r, m_), {}));
        return hyps;
    }

    // ---- shared shape queries ----

    const CallExpr* fn_call(const Expr& e) const {
        if (!e.is<CallExpr>()) return nullptr;
        const auto& c = e.as<CallExpr>();
        return m_.find_function(c.callee) ? &c : nullptr;
    }

    static bool collect_bare_path(const Expr& e, std::vector<std::string>& out) {
        if (e.is<VarRef>()) {
            out.push_back(e.as<VarRef>().name);
            return true;
        }
        if (e.is<FieldAccess>()) {
            const auto& fa = e.as<FieldAccess>();
            if (!collect_bare_path(*fa.base, out)) return false;
            out.push_back(fa.field);
            return true;
        }
        return false;
    }

    std::string field_type(const std::string& record_type, const std::string& field) const {
        Type shape = m_.shape_of(record_type);
        const TypeDecl* decl = m_.find_type(shape.record_name);
        for (const auto& f : decl->fields)
            if (f.name == field) return f.type.name;
        assert(false && "field resolved by typecheck");
        return {};
    }

    std::string type_at_path(const std::vector<std::string>& path,
                             const std::map<std::string, std::string>& var_types) const {
        std::string cur = var_types.at(path[0]);
        for (size_t i = 1; i < path.size(); ++i) cur = field_type(cur, path[i]);
        return cur;
    }

    /// Declared type name of a bare variable/field path, if `e` is one.
    std::optional<std::string>
    declared_type_of(const Expr& e,
                     const std::map<std::string, std::string>& var_types) const {
        std::vector<std::string> path;
        if (!collect_bare_path(e, path)) return std::nullopt;
        if (!var_types.count(path[0])) return std::nullopt; // constant root
        return type_at_path(path, var_types);
    }

    static bool block_returns(const std::vector<Stmt>& stmts) {
        for (const Stmt& s : stmts) {
            if (s.is<ReturnStmt>()) return true;
            if (s.is<IfStmt>()) {
                const auto& i = s.as<IfStmt>();
                if (block_returns(i.then_body) && block_returns(i.else_body))
                    return true;
            }
        }
        return false;
    }

    // ---- pass 1: walk the body, collect sites in program order ----

    void add_site(const std::vector<Frame>& frames, bool pre, ObligationKind kind,
                  LRef goal, const SourceSpan& span, std::string description) {
        sites_.push_back({frames, pre, kind, std::move(goal), span,
                          std::move(description)});
    }

    void walk_block(const std::vector<Stmt>& stmts, std::vector<Frame>& frames,
                    std::map<std::string, std::string> var_types) {
        for (size_t i = 0; i < stmts.size(); ++i) {
            frames.push_back({&stmts, i, std::nullopt});
            walk_stmt(stmts[i], frames, var_types);
            frames.pop_back();
        }
    }

    struct WriteTarget {
        std::vector<std::string> path;
        std::string type_name;      // declared type at the written path
        const Expr* rhs = nullptr;  // null when the value is a call result
        std::string rhs_type;       // callee's return type name when rhs == null
    };

    void walk_stmt(const Stmt& stmt, std::vector<Frame>& frames,
                   std::map<std::string, std::string>& var_types) {
        if (stmt.is<VarDeclStmt>()) {
            const auto& d = stmt.as<VarDeclStmt>();
            scan_divisions(d.init, true_guard(), frames);
            std::vector<WriteTarget> wts;
            if (const CallExpr* call = fn_call(d.init)) {
                emit_call_prechecks(*call, d.init.span, frames, var_types);
                call_ordinals_[&stmt] = next_call_++;
                const FunctionDecl* callee = m_.find_function(call->callee);
                for (size_t i = 0; i < d.vars.size(); ++i)
                    wts.push_back({{d.vars[i].name},
                                   d.vars[i].type.name,
                                   nullptr,
                                   callee->returns[i].type.name});
            } else {
                wts.push_back({{d.vars[0].name}, d.vars[0].type.name, &d.init, ""});
            }
            for (const auto& b : d.vars) var_types[b.name] = b.type.name;
            emit_statement_effects(wts, frames, var_types, stmt.span);
            return;
        }
        if (stmt.is<AssignStmt>()) {
            const auto& a = stmt.as<AssignStmt>();
            scan_divisions(a.value, true_guard(), frames);
            std::vector<std::string>& roots = assign_root_types_[&stmt];
            for (const LValue& t : a.targets) roots.push_back(var_types.at(t.path[0]));
            std::vector<WriteTarget> wts;
            if (const CallExpr* call = fn_call(a.value)) {
                emit_call_prechecks(*call, a.value.span, frames, var_types);
                call_ordinals_[&stmt] = next_call_++;
                const FunctionDecl* callee = m_.find_function(call->callee);
                for (size_t i = 0; i < a.targets.size(); ++i)
                    wts.push_back({a.targets[i].path,
                                   type_at_path(a.targets[i].path, var_types),
                                   nullptr,
                                   callee->returns[i].type.name});
            } else if (a.value.is<TupleExpr>()) {
                const auto& tup = a.value.as<TupleExpr>();
                for (size_t i = 0; i < a.targets.size(); ++i)
                    wts.push_back({a.targets[i].path,
                                   type_at_path(a.targets[i].path, var_types),
                                   tup.elems[i].get(),
                                   ""});
            } else {
                wts.push_back({a.targets[0].path,
                               type_at_path(a.targets[0].path, var_types),
                               &a.value,
                               ""});
            }
            emit_statement_effects(wts, frames, var_types, stmt.span);
            return;
        }
        if (stmt.is<ReturnStmt>()) {
            const auto& r = stmt.as<ReturnStmt>();
            for (const Expr& v : r.values) scan_divisions(v, true_guard(), frames);
            const CallExpr* call =
                r.values.size() == 1 ? fn_call(r.values[0]) : nullptr;
            if (call) {
                emit_call_prechecks(*call, r.values[0].span, frames, var_types);
                call_ordinals_[&stmt] = next_call_++;
                emit_forwarded_return(stmt, *call, r.values[0].span, frames);
            } else {
                emit_return_checks(r, frames, var_types);
            }
            return;
        }
        const auto& s = stmt.as<IfStmt>();
        scan_divisions(s.cond, true_guard(), frames);
        frames.back().branch = BranchSide::Then;
        walk_block(s.then_body, frames, var_types);
        frames.back().branch = BranchSide::Else;
        walk_block(s.else_body, frames, var_types);
        frames.back().branch = std::nullopt;
    }

    static LRef true_guard() { return mk_bool(true); }

    /// Division and modulo need nonzero divisors; short-circuit context
    /// guards the check the same way evaluation guards the operation.
    void scan_divisions(const Expr& e, const LRef& guard, std::vector<Frame>& frames) {
        if (e.is<FieldAccess>()) {
            scan_divisions(*e.as<FieldAccess>().base, guard, frames);
            return;
        }
        if (e.is<UnaryExpr>()) {
            scan_divisions(*e.as<UnaryExpr>().operand, guard, frames);
            return;
        }
        if (e.is<BinaryExpr>()) {
            const auto& b = e.as<BinaryExpr>();
            if (b.op == BinaryOp::And || b.op == BinaryOp::Implies) {
                scan_divisions(*b.lhs, guard, frames);
                scan_divisions(*b.rhs, mk_and(guard, lower(*b.lhs, {})), frames);
                return;
            }
            if (b.op == BinaryOp::Or) {
                scan_divisions(*b.lhs, guard, frames);
                scan_divisions(*b.rhs, mk_and(guard, mk_not(lower(*b.lhs, {}))), frames);
                return;
            }
            scan_divisions(*b.lhs, guard, frames);
            scan_divisions(*b.rhs, guard, frames);
            if (b.op == BinaryOp::Div || b.op == BinaryOp::Mod)
                add_site(frames, true, ObligationKind::DivByZero,
                         mk_implies(guard, mk_ne(lower(*b.rhs, {}), mk_int(0))),
                         e.span,
                         std::string("divisor of '") + binary_op_text(b.op) +
                             "' is nonzero");
            return;
        }
        if (e.is<CallExpr>()) {
            for (const ExprPtr& a : e.as<CallExpr>().args)
                scan_divisions(*a, guard, frames);
            return;
        }
        if (e.is<RecordLit>()) {
            for (const auto& f : e.as<RecordLit>().fields)
                scan_divisions(*f.value, guard, frames);
            return;
        }
        if (e.is<TupleExpr>()) {
            for (const ExprPtr& el : e.as<TupleExpr>().elems)
                scan_divisions(*el, guard, frames);
        }
    }

    /// Checks that `value` forms a valid inhabitant of `type_name`:
    /// TypeConstraint per constrained scalar leaf, RecordInvariant per record
    /// segment that declares invariants. Pre-state sites over lowered values.
    void emit_value_checks(const Expr& value, const std::string& type_name,
                           std::vector<Frame>& frames, const std::string& role) {
        LTree tree = lower_tree(value, {});
        for (const LeafField& leaf : m_.leaf_fields(type_name)) {
            std::vector<LRef> chain;
            leaf_constraints(leaf.type_name, tree_at(tree, leaf.path).scalar, chain);
            if (chain.empty()) continue;
            std::string where = leaf.path.empty()
                                    ? role
                                    : "field '" + path_str(leaf.path) + "' of " + role;
            add_site(frames, true, ObligationKind::TypeConstraint, mk_and_all(chain),
                     value.span, where + " is a valid '" + leaf.type_name + "'");
        }
        for (const RecordSegment& seg : m_.record_segments(type_name)) {
            if (seg.decl->wheres.empty()) continue;
            std::vector<LRef> ws;
            segment_wheres(*seg.decl, tree_at(tree, seg.path), ws);
            std::string where = seg.path.empty()
                                    ? role
                                    : "field '" + path_str(seg.path) + "' of " + role;
            add_site(frames, true, ObligationKind::RecordInvariant, mk_and_all(ws),
                     value.span,
                     where + " satisfies the invariant of '" + seg.decl->name + "'");
        }
    }

    void emit_call_prechecks(const CallExpr& call, const SourceSpan& call_span,
                             std::vector<Frame>& frames,
                             const std::map<std::string, std::string>& var_types) {
        const FunctionDecl* callee = m_.find_function(call.callee);
        for (size_t i = 0; i < call.args.size(); ++i) {
            const Expr& arg = *call.args[i];
            const std::string& pt = callee->params[i].type.name;
            // a value read out of a location declared with the same type
            // name is already known valid
            if (declared_type_of(arg, var_types) == std::optional<std::string>(pt))
                continue;
            emit_value_checks(arg, pt, frames,
                              "argument " + std::to_string(i + 1) + " of '" +
                                  call.callee + "'");
        }
        LowerEnv env;
        for (size_t i = 0; i < call.args.size(); ++i)
            env[callee->params[i].name] = lower_tree(*call.args[i], {});
        for (size_t i = 0; i < callee->requires_clauses.size(); ++i)
            add_site(frames, true, ObligationKind::CalleePrecondition,
                     lower(inline_properties(callee->requires_clauses[i], m_), env),
                     call_span,
                     "requires clause " + std::to_string(i + 1) + " of '" +
                         call.callee + "' holds at this call");
    }

    bool write_is_same_type(const WriteTarget& t,
                            const std::map<std::string, std::string>& var_types) const {
        if (!t.rhs) return t.rhs_type == t.type_name;
        return declared_type_of(*t.rhs, var_types) ==
               std::optional<std::string>(t.type_name);
    }

    /// Post-state checks of one (possibly tuple) write. The whole statement
    /// executes first — a tuple assignment is atomic — then every written
    /// constrained leaf must fit its type and every record invariant the
    /// write could disturb must still hold.
    void emit_statement_effects(const std::vector<WriteTarget>& wts,
                                std::vector<Frame>& frames,
                                const std::map<std::string, std::string>& var_types,
                                const SourceSpan& stmt_span) {
        for (const WriteTarget& t : wts) {
            if (write_is_same_type(t, var_types)) continue;
            for (const LeafField& leaf : m_.leaf_fields(t.type_name)) {
                std::string sym = join_path(path_str(t.path), path_str(leaf.path));
                std::vector<LRef> chain;
                leaf_constraints(leaf.type_name,
                                 mk_sym(sym, leaf.shape.kind == TypeKind::Bool), chain);
                if (chain.empty()) continue;
                add_site(frames, false, ObligationKind::TypeConstraint,
                         mk_and_all(chain), stmt_span,
                         "'" + sym + "' remains a valid '" + leaf.type_name + "'");
            }
        }
        std::set<std::string> seen;
        for (const WriteTarget& t : wts) {
            // records enclosing the written location
            for (size_t k = 1; k < t.path.size(); ++k) {
                std::vector<std::string> prefix(t.path.begin(), t.path.begin() + k);
                std::string pt = type_at_path(prefix, var_types);
                Type shape = m_.shape_of(pt);
                assert(shape.kind == TypeKind::Record);
                emit_segment_site(prefix, m_.find_type(shape.record_name), seen,
                                  frames, stmt_span);
            }
            // the written value itself, unless it arrived whole and same-typed
            if (write_is_same_type(t, var_types)) continue;
            for (const RecordSegment& seg : m_.record_segments(t.type_name)) {
                std::vector<std::string> full = t.path;
                full.insert(full.end(), seg.path.begin(), seg.path.end());
                emit_segment_site(full, seg.decl, seen, frames, stmt_span);
            }
        }
    }

    void emit_segment_site(const std::vector<std::string>& seg_path,
                           const TypeDecl* decl, std::set<std::string>& seen,
                           std::vector<Frame>& frames, const SourceSpan& span) {
        if (decl->wheres.empty()) return;
        std::string key = path_str(seg_path);
        if (!seen.insert(key).second) return;
        std::vector<LRef> ws;
        segment_wheres(*decl, symbol_tree(key, decl->name), ws);
        add_site(frames, false, ObligationKind::RecordInvariant, mk_and_all(ws), span,
                 "invariant of '" + decl->name + "' on '" + key +
                     "' holds after this statement");
    }

    void emit_return_checks(const ReturnStmt& r, std::vector<Frame>& frames,
                            const std::map<std::string, std::string>& var_types) {
        for (size_t i = 0; i < r.values.size(); ++i) {
            const Expr& v = r.values[i];
            const std::string& rt = fn_.returns[i].type.name;
            std::string role = "returned value " + std::to_string(i + 1);
            Type shape = m_.shape_of(rt);
            if (shape.kind != TypeKind::Record) {
                std::vector<LRef> chain;
                leaf_constraints(rt, lower(v, {}), chain);
                if (!chain.empty())
                    add_site(frames, true, ObligationKind::TypeConstraint,
                             mk_and_all(chain), v.span,
                             role + " is a valid '" + rt + "'");
                continue;
            }
            if (declared_type_of(v, var_types).has_value()) {
                // whole stored value: nested parts never went invalid, only
                // the outermost invariant is worth restating
                const TypeDecl* decl = m_.find_type(shape.record_name);
                if (decl->wheres.empty()) continue;
                std::vector<LRef> ws;
                segment_wheres(*decl, lower_tree(v, {}), ws);
                add_site(frames, true, ObligationKind::RecordInvariant,
                         mk_and_all(ws), v.span,
                         role + " satisfies the invariant of '" + decl->name + "'");
            } else {
                emit_value_checks(v, rt, frames, role);
            }
        }
        std::vector<LTree> returned;
        for (const Expr& v : r.values) returned.push_back(lower_tree(v, {}));
        emit_postconditions(returned, frames, SourceSpan{});
    }

    /// `return f(..)`: flow and ensures goals range over the callee's fresh
    /// results, guarded by everything the call summary grants about them.
    void emit_forwarded_return(const Stmt& stmt, const CallExpr& call,
                               const SourceSpan& span, std::vector<Frame>& frames) {
        std::vector<LTree> frees;
        LRef summary = call_summary(stmt, call, frees);
        for (size_t i = 0; i < fn_.returns.size(); ++i) {
            const std::string& rt = fn_.returns[i].type.name;
            std::string role = "returned value " + std::to_string(i + 1);
            Type shape = m_.shape_of(rt);
            if (shape.kind != TypeKind::Record) {
                std::vector<LRef> chain;
                leaf_constraints(rt, frees[i].scalar, chain);
                if (!chain.empty())
                    add_site(frames, true, ObligationKind::TypeConstraint,
                             mk_implies(summary, mk_and_all(chain)), span,
                             role + " is a valid '" + rt + "'");
                continue;
            }
            const TypeDecl* decl = m_.find_type(shape.record_name);
            if (decl->wheres.empty()) continue;
            std::vector<LRef> ws;
            segment_wheres(*decl, frees[i], ws);
            add_site(frames, true, ObligationKind::RecordInvariant,
                     mk_implies(summary, mk_and_all(ws)), span,
                     role + " satisfies the invariant of '" + decl->name + "'");
        }
        LowerEnv env = marker_env();
        for (size_t i = 0; i < fn_.returns.size(); ++i)
            env[fn_.returns[i].name] = frees[i];
        for (size_t i = 0; i < fn_.ensures_clauses.size(); ++i)
            add_site(frames, true, ObligationKind::Postcondition,
                     mk_implies(summary,
                                lower(inline_properties(fn_.ensures_clauses[i], m_), env)),
                     fn_.ensures_clauses[i].span,
                     "ensures clause " + std::to_string(i + 1) + " of '" + fn_.name + "'");
    }

    /// Parameter occurrences in ensures clauses mean entry values. They are
    /// lowered to marker symbols so the wp pass leaves them alone, then
    /// renamed to the plain entry symbols in the finished goal.
    LowerEnv marker_env() const {
        LowerEnv env;
        for (const Param& p : fn_.params)
            env[p.name] = symbol_tree("@" + p.name, p.type.name);
        return env;
    }

    void emit_postconditions(const std::vector<LTree>& returned,
                             std::vector<Frame>& frames, const SourceSpan&) {
        LowerEnv env = marker_env();
        for (size_t i = 0; i < returned.size(); ++i)
            env[fn_.returns[i].name] = returned[i];
        for (size_t i = 0; i < fn_.ensures_clauses.size(); ++i)
            add_site(frames, true, ObligationKind::Postcondition,
                     lower(inline_properties(fn_.ensures_clauses[i], m_), env),
                     fn_.ensures_clauses[i].span,
                     "ensures clause " + std::to_string(i + 1) + " of '" + fn_.name + "'");
    }

    // ---- pass 2: weakest preconditions ----

    LRef wp_path(const Site& s) const {
        LRef g = s.goal;
        for (size_t fi = s.frames.size(); fi-- > 0;) {
            const Frame& f = s.frames[fi];
            const std::vector<Stmt>& block = *f.block;
            if (fi + 1 == s.frames.size()) {
                if (f.index < block.size() && !s.pre) g = wp_stmt(block[f.index], g);
            } else {
                LRef cond = lower(block[f.index].as<IfStmt>().cond, {});
                g = mk_implies(*f.branch == BranchSide::Then ? cond
                                                             : mk_not(std::move(cond)),
                               std::move(g));
            }
            for (size_t j = f.index; j-- > 0;) g = wp_stmt(block[j], g);
        }
        return g;
    }

    void bind_leaves(const LTree& syms, const LTree& vals,
                     std::map<std::string, LRef>& out) const {
        if (syms.scalar) {
            out[syms.scalar->name] = vals.scalar;
            return;
        }
        assert(syms.fields.size() == vals.fields.size());
        for (size_t i = 0; i < syms.fields.size(); ++i)
            bind_leaves(syms.fields[i].second, vals.fields[i].second, out);
    }

    LTree lvalue_tree(const LValue& lv, const std::string& root_type) const {
        std::string cur = root_type;
        for (size_t i = 1; i < lv.path.size(); ++i) cur = field_type(cur, lv.path[i]);
        return symbol_tree(path_str(lv.path), cur);
    }

    /// typevalid(results) ∧ ensures(args, results) over fresh result symbols.
    LRef call_summary(const Stmt& stmt, const CallExpr& call,
                      std::vector<LTree>& frees) const {
        const FunctionDecl* callee = m_.find_function(call.callee);
        int k = call_ordinals_.at(&stmt);
        std::vector<LRef> granted;
        for (const Param& r : callee->returns) {
            frees.push_back(symbol_tree(
                call.callee + "!" + std::to_string(k) + "." + r.name, r.type.name));
            full_validity(r.type.name, frees.back(), granted);
        }
        LowerEnv env;
        for (size_t i = 0; i < call.args.size(); ++i)
            env[callee->params[i].name] = lower_tree(*call.args[i], {});
        for (size_t i = 0; i < callee->returns.size(); ++i)
            env[callee->returns[i].name] = frees[i];
        for (const Expr& ens : callee->ensures_clauses)
            granted.push_back(lower(inline_properties(ens, m_), env));
        return mk_and_all(granted);
    }

    LRef wp_call(const Stmt& stmt, const CallExpr& call,
                 const std::vector<LTree>& targets, LRef post) const {
        std::vector<LTree> frees;
        LRef summary = call_summary(stmt, call, frees);
        std::map<std::string, LRef> map;
        for (size_t i = 0; i < targets.size(); ++i)
            bind_leaves(targets[i], frees[i], map);
        return mk_implies(std::move(summary), subst(post, map));
    }

    LRef wp_stmt(const Stmt& stmt, LRef post) const {
        if (stmt.is<ReturnStmt>()) return mk_bool(true); // no path continues
        if (stmt.is<IfStmt>()) {
            const auto& s = stmt.as<IfStmt>();
            LRef cond = lower(s.cond, {});
            return mk_and(mk_implies(cond, wp_many(s.then_body, post)),
                          mk_implies(mk_not(cond), wp_many(s.else_body, post)));
        }
        if (stmt.is<VarDeclStmt>()) {
            const auto& d = stmt.as<VarDeclStmt>();
            std::vector<LTree> targets;
            for (const auto& b : d.vars)
                targets.push_back(symbol_tree(b.name, b.type.name));
            if (const CallExpr* call = fn_call(d.init))
                return wp_call(stmt, *call, targets, std::move(post));
            std::map<std::string, LRef> map;
            bind_leaves(targets[0], lower_tree(d.init, {}), map);
            return subst(post, map);
        }
        const auto& a = stmt.as<AssignStmt>();
        const std::vector<std::string>& roots = assign_root_types_.at(&stmt);
        std::vector<LTree> targets;
        for (size_t i = 0; i < a.targets.size(); ++i)
            targets.push_back(lvalue_tree(a.targets[i], roots[i]));
        if (const CallExpr* call = fn_call(a.value))
            return wp_call(stmt, *call, targets, std::move(post));
        std::map<std::string, LRef> map; // one map: simultaneous assignment
        if (a.value.is<TupleExpr>()) {
            const auto& tup = a.value.as<TupleExpr>();
            for (size_t i = 0; i < targets.size(); ++i)
                bind_leaves(targets[i], lower_tree(*tup.elems[i], {}), map);
        } else {
            bind_leaves(targets[0], lower_tree(a.value, {}), map);
        }
        return subst(post, map);
    }

    const ResolvedModule& m_;
    const FunctionDecl& fn_;
    std::vector<Site> sites_;
    std::map<const Stmt*, std::vector<std::string>> assign_root_types_;
    std::map<const Stmt*, int> call_ordinals_;
    std::map<std::string, LRef> marker_renames_;
    int next_call_ = 0;
};

} // namespace

std::vector<Obligation> generate_obligations(const ResolvedModule& module,
                                             const FunctionDecl& fn) {
    return Gen(module, fn).obligations();
}

std::vector<Obligation> generate_obligations(const ResolvedModule& module) {
    std::vector<Obligation> out;
    for (const Decl& d : module.ast.decls)
        if (std::holds_alternative<FunctionDecl>(d.node)) {
            std::vector<Obligation> one =
                generate_obligations(module, std::get<FunctionDecl>(d.node));
            for (Obligation& o : one) out.push_back(std::move(o));
        }
    return out;
}

LRef wp(const ResolvedModule& module, const FunctionDecl& fn, const Stmt& stmt,
        LRef post) {
    return Gen(module, fn).wp_one(stmt, std::move(post));
}

LRef wp_block(const ResolvedModule& module, const FunctionDecl& fn,
              const std::vector<Stmt>& stmts, LRef post) {
    return Gen(module, fn).wp_many(stmts, std::move(post));
}

} // namespace csl
