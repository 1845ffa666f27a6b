#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "redtile/decompose.hpp"
#include "redtile/program.hpp"
#include "redtile/schedule.hpp"

namespace redtile {

struct ConstraintError : std::runtime_error {
    explicit ConstraintError(const std::string& what) : std::runtime_error(what) {}
};

/// Unknown affine time function for one variable. Unknown slots are laid out
/// dimension-major: per time dimension, index coefficients, then parameter
/// coefficients, then the constant.
struct ScheduleTemplate {
    std::string var;
    int time_dims = 1;
    int n_idx = 0;
    int n_par = 0;
    int first_unknown = 0;
    std::vector<IntVec> points;  // concrete domain points, for the objective

    int unknowns_per_dim() const { return n_idx + n_par + 1; }
    int total_unknowns() const { return time_dims * unknowns_per_dim(); }
    int last_unknown() const { return first_unknown + total_unknowns() - 1; }
};

struct TemplateSet {
    IntVec param_values;
    int time_dims = 1;
    std::vector<ScheduleTemplate> templates;
    int total_unknowns = 0;

    ScheduleTemplate& add(const std::string& var, int n_idx, std::vector<IntVec> points) {
        ScheduleTemplate t;
        t.var = var;
        t.time_dims = time_dims;
        t.n_idx = n_idx;
        t.n_par = static_cast<int>(param_values.size());
        t.first_unknown = total_unknowns;
        t.points = std::move(points);
        total_unknowns += t.total_unknowns();
        templates.push_back(std::move(t));
        return templates.back();
    }

    const ScheduleTemplate* find(const std::string& var) const {
        for (const auto& t : templates)
            if (t.var == var) return &t;
        return nullptr;
    }
};

/// Linear expression over template unknowns: sum of coeff*unknown plus a constant.
struct LinExprU {
    std::vector<std::pair<int, i64>> terms;
    i64 constant = 0;

    static LinExprU constant_of(i64 c) { return LinExprU{{}, c}; }

    LinExprU& add_term(int unknown, i64 coeff) {
        if (coeff != 0) terms.emplace_back(unknown, coeff);
        return *this;
    }

    i64 eval(const std::vector<i64>& assignment) const {
        i64 acc = constant;
        for (auto& [u, c] : terms) acc = checked_add(acc, checked_mul(c, assignment[u]));
        return acc;
    }

    int max_unknown() const {
        int m = -1;
        for (auto& [u, c] : terms) m = std::max(m, u);
        return m;
    }
};

enum class ConstraintKind {
    LexGe,    // lhs lexicographically >= rhs
    SlackGe,  // lhs - rhs, as a slack vector, must satisfy the slack rule with `bound`
};

struct Constraint {
    std::string origin;    // constraint family id ("eq3", "eq7", ...)
    std::string instance;  // the concrete point it was generated for
    ConstraintKind kind = ConstraintKind::LexGe;
    std::vector<LinExprU> lhs, rhs;
    i64 bound = 0;  // SlackGe only

    int max_unknown() const {
        int m = -1;
        for (auto& e : lhs) m = std::max(m, e.max_unknown());
        for (auto& e : rhs) m = std::max(m, e.max_unknown());
        return m;
    }
};

/// The slack rule: a truly multidimensional (lexicographically positive
/// prefix) slack satisfies any size; otherwise the innermost component must
/// reach the size.
inline bool slack_rule_satisfied(const IntVec& slack, i64 size) {
    if (slack.empty()) throw ConstraintError("empty slack vector");
    for (size_t k = 0; k + 1 < slack.size(); ++k) {
        if (slack[k] > 0) return true;
        if (slack[k] < 0) return false;
    }
    return slack.back() >= size;
}

inline bool constraint_satisfied(const Constraint& c, const std::vector<i64>& assignment) {
    IntVec l(c.lhs.size()), r(c.rhs.size());
    for (size_t k = 0; k < c.lhs.size(); ++k) l[k] = c.lhs[k].eval(assignment);
    for (size_t k = 0; k < c.rhs.size(); ++k) r[k] = c.rhs[k].eval(assignment);
    if (c.kind == ConstraintKind::LexGe) return !lex_less(l, r);
    return slack_rule_satisfied(vec_sub(l, r), c.bound);
}

struct ConstraintSystem {
    TemplateSet templates;
    std::vector<Constraint> constraints;
    std::vector<std::pair<std::string, IntVec>> empty_reductions;  // flagged vacuous points

    void append(std::vector<Constraint> more) {
        for (auto& c : more) constraints.push_back(std::move(c));
    }

    ConstraintSystem filtered(const std::set<std::string>& origins) const {
        ConstraintSystem out;
        out.templates = templates;
        out.empty_reductions = empty_reductions;
        for (const auto& c : constraints)
            if (origins.count(c.origin)) out.constraints.push_back(c);
        return out;
    }
};

/// Expression environment: variables either carry an unknown template or a
/// pinned concrete schedule (body schedules, earlier solve stages, inputs).
struct EmitContext {
    const TemplateSet* ts = nullptr;
    std::map<std::string, AffineFunction> pinned;
    int time_dims = 1;

    const IntVec& params() const { return ts->param_values; }

    bool known(const std::string& var) const {
        return ts->find(var) != nullptr || pinned.count(var) > 0;
    }

    /// λ_var(point) as a vector of expressions over unknowns (or constants).
    std::vector<LinExprU> sched_expr(const std::string& var, const IntVec& point) const {
        const ScheduleTemplate* t = ts->find(var);
        if (t) {
            if (static_cast<int>(point.size()) != t->n_idx)
                throw ConstraintError("point dimensionality mismatch for " + var);
            std::vector<LinExprU> out(t->time_dims);
            for (int d = 0; d < t->time_dims; ++d) {
                int base = t->first_unknown + d * t->unknowns_per_dim();
                LinExprU e;
                for (int k = 0; k < t->n_idx; ++k) e.add_term(base + k, point[k]);
                for (int k = 0; k < t->n_par; ++k)
                    e.add_term(base + t->n_idx + k, ts->param_values[k]);
                e.add_term(base + t->n_idx + t->n_par, 1);
                out[d] = std::move(e);
            }
            return out;
        }
        auto it = pinned.find(var);
        if (it == pinned.end()) throw ConstraintError("no template or schedule for " + var);
        IntVec v = it->second.eval(point, ts->param_values);
        std::vector<LinExprU> out;
        for (i64 c : v) out.push_back(LinExprU::constant_of(c));
        return out;
    }
};

namespace detail {

inline std::vector<LinExprU> const_time(const IntVec& t) {
    std::vector<LinExprU> out;
    for (i64 c : t) out.push_back(LinExprU::constant_of(c));
    return out;
}

/// Lifts a slice time into a wider time space by prefixing zero dimensions.
inline std::vector<LinExprU> const_time_padded(const IntVec& t, int dims) {
    if (static_cast<int>(t.size()) > dims)
        throw ConstraintError("slice time has more dimensions than the schedule space");
    std::vector<LinExprU> out(dims - t.size(), LinExprU::constant_of(0));
    for (i64 c : t) out.push_back(LinExprU::constant_of(c));
    return out;
}

inline std::vector<LinExprU> plus_inner_expr(std::vector<LinExprU> v, i64 d) {
    if (v.empty()) throw ConstraintError("empty time expression");
    v.back().constant = checked_add(v.back().constant, d);
    return v;
}

inline std::string instance_str(const std::string& var, const IntVec& z) {
    return var + vec_str(z);
}

}  // namespace detail

/// One causality constraint per consumer/producer point pair of the reduction
/// under a one-step unbounded fan-in combine.
inline std::vector<Constraint> pram_constraints(const Program& program, const ReduceEquation& eq,
                                                const EmitContext& ctx,
                                                std::vector<std::pair<std::string, IntVec>>* flags) {
    std::vector<Constraint> out;
    const Variable& result = program.var(eq.target);
    const Variable& body = program.var(eq.body);
    for (const auto& z : enumerate_domain(result.domain, ctx.params())) {
        Domain fiber = preimage(eq.projection, z, body.domain, ctx.params());
        auto pts = enumerate_domain(fiber, ctx.params());
        if (pts.empty()) {
            if (flags) flags->emplace_back(eq.target, z);
            continue;
        }
        for (const auto& p : pts) {
            Constraint c;
            c.origin = "eq3";
            c.instance = detail::instance_str(eq.target, z) + " <- " +
                         detail::instance_str(eq.body, p);
            c.kind = ConstraintKind::LexGe;
            c.lhs = ctx.sched_expr(eq.target, z);
            c.rhs = detail::plus_inner_expr(ctx.sched_expr(eq.body, p), 1);
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// Slice availability bound: the partial for (z_X, t) cannot complete before
/// the slice is linearly accumulated.
inline std::vector<Constraint> emit_slice_bounds(const SliceDecomposition& dec,
                                                 const EmitContext& ctx) {
    std::vector<Constraint> out;
    for (const auto& sl : dec.slices) {
        Constraint c;
        c.origin = "eq7";
        c.instance = detail::instance_str(dec.temp_var, concat(sl.owner, sl.t));
        c.kind = ConstraintKind::LexGe;
        c.lhs = ctx.sched_expr(dec.temp_var, concat(sl.owner, sl.t));
        c.rhs = detail::plus_inner_expr(detail::const_time_padded(sl.t, ctx.time_dims), sl.size);
        out.push_back(std::move(c));
    }
    return out;
}

/// Result completion must not precede any slice partial.
inline std::vector<Constraint> emit_partial_order(const SliceDecomposition& dec,
                                                  const EmitContext& ctx) {
    std::vector<Constraint> out;
    for (const auto& sl : dec.slices) {
        Constraint c;
        c.origin = "eq8";
        c.instance = detail::instance_str(dec.result_var, sl.owner) + " >= " +
                     detail::instance_str(dec.temp_var, concat(sl.owner, sl.t));
        c.kind = ConstraintKind::LexGe;
        c.lhs = ctx.sched_expr(dec.result_var, sl.owner);
        c.rhs = ctx.sched_expr(dec.temp_var, concat(sl.owner, sl.t));
        out.push_back(std::move(c));
    }
    return out;
}

/// Per-slice slack constraint under the slack rule.
inline std::vector<Constraint> emit_slack(const SliceDecomposition& dec, const EmitContext& ctx) {
    std::vector<Constraint> out;
    for (const auto& sl : dec.slices) {
        Constraint c;
        c.origin = "eq10";
        c.instance = detail::instance_str(dec.result_var, sl.owner) + " t=" + vec_str(sl.t);
        c.kind = ConstraintKind::SlackGe;
        c.lhs = ctx.sched_expr(dec.result_var, sl.owner);
        c.rhs = detail::const_time_padded(sl.t, ctx.time_dims);
        c.bound = sl.size;
        out.push_back(std::move(c));
    }
    return out;
}

/// The slice-level causality family: availability bounds, partial ordering,
/// and the reduced slack form.
inline std::vector<Constraint> gupta_constraints(const SliceDecomposition& dec,
                                                 const EmitContext& ctx) {
    std::vector<Constraint> out = emit_slice_bounds(dec, ctx);
    for (auto& c : emit_partial_order(dec, ctx)) out.push_back(std::move(c));
    for (auto& c : emit_slack(dec, ctx)) out.push_back(std::move(c));
    return out;
}

/// Exclusive-write correction: the result needs at least one step per slice
/// partial folded into it (innermost time dimension).
inline std::vector<Constraint> exclusive_write_fix(const SliceDecomposition& dec,
                                                   const EmitContext& ctx) {
    std::vector<Constraint> out;
    for (const auto& o : dec.owners) {
        Constraint c;
        c.origin = "eq15";
        c.instance = detail::instance_str(dec.result_var, o.z);
        c.kind = ConstraintKind::LexGe;
        auto lhs = ctx.sched_expr(dec.result_var, o.z);
        c.lhs = {lhs.back()};  // innermost dimension only
        c.rhs = {LinExprU::constant_of(o.size_prime)};
        out.push_back(std::move(c));
    }
    return out;
}

/// Tile-level causality: per-tile availability (actual size for partial
/// tiles, the hypercubic bound for full tiles), tile-to-partial ordering, and
/// the per-slice and per-result completion bounds.
inline std::vector<Constraint> tiled_constraints(const TileDecomposition& tdec,
                                                 const EmitContext& ctx,
                                                 const std::set<std::string>& families = {
                                                     "eq19", "eq20", "eq21", "eq22", "eq23",
                                                     "eq24"}) {
    const SliceDecomposition& dec = tdec.dec;
    std::vector<Constraint> out;
    auto want = [&](const char* f) { return families.count(f) > 0; };
    for (size_t si = 0; si < dec.slices.size(); ++si) {
        const Slice& sl = dec.slices[si];
        i64 tau = tdec.tile_count(si);
        i64 full_size = checked_mul(static_cast<i64>(sl.dims), tdec.tile_size);
        for (const Tile& tile : tdec.tiles[si]) {
            IntVec tp = concat(concat(sl.owner, sl.t), IntVec{tile.id});
            if (want("eq19")) {
                Constraint c;
                c.origin = "eq19";
                c.instance = detail::instance_str(tdec.tile_var, tp);
                c.kind = ConstraintKind::LexGe;
                c.lhs = ctx.sched_expr(tdec.tile_var, tp);
                c.rhs = detail::plus_inner_expr(detail::const_time_padded(sl.t, ctx.time_dims), tile.size_budget);
                out.push_back(std::move(c));
            }
            if (tile.full && want("eq21")) {
                Constraint c;
                c.origin = "eq21";
                c.instance = detail::instance_str(tdec.tile_var, tp);
                c.kind = ConstraintKind::LexGe;
                c.lhs = ctx.sched_expr(tdec.tile_var, tp);
                c.rhs = detail::plus_inner_expr(detail::const_time_padded(sl.t, ctx.time_dims), full_size);
                out.push_back(std::move(c));
            }
            if (want("eq20")) {
                Constraint c;
                c.origin = "eq20";
                c.instance = detail::instance_str(dec.temp_var, concat(sl.owner, sl.t)) + " >= " +
                             detail::instance_str(tdec.tile_var, tp);
                c.kind = ConstraintKind::LexGe;
                c.lhs = ctx.sched_expr(dec.temp_var, concat(sl.owner, sl.t));
                c.rhs = detail::plus_inner_expr(ctx.sched_expr(tdec.tile_var, tp), tau);
                out.push_back(std::move(c));
            }
        }
        if (want("eq22")) {
            Constraint c;
            c.origin = "eq22";
            c.instance = detail::instance_str(dec.temp_var, concat(sl.owner, sl.t));
            c.kind = ConstraintKind::LexGe;
            c.lhs = ctx.sched_expr(dec.temp_var, concat(sl.owner, sl.t));
            c.rhs = detail::plus_inner_expr(detail::const_time_padded(sl.t, ctx.time_dims), checked_add(tau, full_size));
            out.push_back(std::move(c));
        }
        if (want("eq23")) {
            Constraint c;
            c.origin = "eq23";
            c.instance = detail::instance_str(dec.result_var, sl.owner) + " t=" + vec_str(sl.t);
            c.kind = ConstraintKind::LexGe;
            c.lhs = ctx.sched_expr(dec.result_var, sl.owner);
            c.rhs = detail::plus_inner_expr(detail::const_time_padded(sl.t, ctx.time_dims), checked_add(tau, full_size));
            out.push_back(std::move(c));
        }
    }
    if (want("eq24")) {
        for (const auto& o : dec.owners) {
            Constraint c;
            c.origin = "eq24";
            c.instance = detail::instance_str(dec.result_var, o.z);
            c.kind = ConstraintKind::LexGe;
            auto lhs = ctx.sched_expr(dec.result_var, o.z);
            c.lhs = {lhs.back()};
            c.rhs = {LinExprU::constant_of(o.size_prime)};
            out.push_back(std::move(c));
        }
    }
    return out;
}

/// Pointwise causality: every access must be produced at least the equation
/// latency before its consumer.
inline std::vector<Constraint> pointwise_constraints(const Program& program,
                                                     const EmitContext& ctx) {
    std::vector<Constraint> out;
    for (const auto& eq : program.equations) {
        if (!std::holds_alternative<PointwiseEquation>(eq)) continue;
        const auto& pw = std::get<PointwiseEquation>(eq);
        std::vector<std::pair<std::string, AffineFunction>> accesses;
        detail::collect_accesses(pw.rhs.node, accesses);
        const Variable& target = program.var(pw.target);
        for (const auto& z : enumerate_domain(target.domain, ctx.params())) {
            for (const auto& [w, map] : accesses) {
                IntVec p = map.eval(z, ctx.params());
                Constraint c;
                c.origin = "eq2";
                c.instance = detail::instance_str(pw.target, z) + " <- " +
                             detail::instance_str(w, p);
                c.kind = ConstraintKind::LexGe;
                c.lhs = ctx.sched_expr(pw.target, z);
                if (program.is_input(w) && !ctx.known(w)) {
                    IntVec zero(ctx.time_dims, 0);
                    c.rhs = detail::plus_inner_expr(detail::const_time(zero), pw.latency);
                } else {
                    c.rhs = detail::plus_inner_expr(ctx.sched_expr(w, p), pw.latency);
                }
                out.push_back(std::move(c));
            }
        }
    }
    return out;
}

// --- reports -----------------------------------------------------------

struct SlackEntry {
    IntVec owner;
    IntVec t;
    IntVec slack;
    i64 size = 0;
    bool satisfied = false;
};

inline std::vector<SlackEntry> slack_report(const SliceDecomposition& dec,
                                            const Schedule& schedule, const IntVec& params) {
    std::vector<SlackEntry> out;
    for (const auto& sl : dec.slices) {
        SlackEntry e;
        e.owner = sl.owner;
        e.t = sl.t;
        IntVec lam = schedule.eval(dec.result_var, sl.owner, params);
        IntVec t = sl.t;
        if (t.size() < lam.size()) t.insert(t.begin(), lam.size() - t.size(), 0);
        e.slack = vec_sub(lam, t);
        e.size = sl.size;
        e.satisfied = slack_rule_satisfied(e.slack, e.size);
        out.push_back(std::move(e));
    }
    return out;
}

/// Per-result report of the two span conditions: enough steps between first
/// and last availability, and enough partials, for a linear accumulation.
struct ConditionEntry {
    IntVec z;
    i64 span = 0;         // T
    i64 slice_count = 0;  // E
    i64 size_prime = 0;
    bool span_sufficient = false;   // T + 1 > size'
    bool count_sufficient = false;  // E + 1 > size'
};

inline std::vector<ConditionEntry> check_conditions(const SliceDecomposition& dec) {
    std::vector<ConditionEntry> out;
    for (const auto& o : dec.owners) {
        ConditionEntry e;
        e.z = o.z;
        e.span = o.span;
        e.slice_count = o.slice_count;
        e.size_prime = o.size_prime;
        e.span_sufficient = o.span + 1 > o.size_prime;
        e.count_sufficient = o.slice_count + 1 > o.size_prime;
        out.push_back(std::move(e));
    }
    return out;
}

// --- tiling legality ----------------------------------------------------

struct LegalityResult {
    bool legal = true;
    std::vector<std::pair<IntVec, IntVec>> witnesses;  // (consumer point, producer point)
};

/// A tiling pair (theta_X, theta_Y) is legal when every non-reduction
/// dependence instance crosses the hyperplanes non-negatively.
inline LegalityResult tiling_legality(const Program& program, const AffineFunction& theta_x,
                                      const AffineFunction& theta_y,
                                      const std::vector<Dependence>& deps,
                                      const IntVec& param_values) {
    LegalityResult res;
    for (const auto& dep : deps) {
        if (dep.is_reduction) continue;  // accumulation order is free
        const Variable& consumer = program.var(dep.consumer);
        for (const auto& z : enumerate_domain(consumer.domain, param_values)) {
            IntVec p = dep.map.eval(z, param_values);
            i64 lhs = theta_x.eval(z, param_values).at(0);
            i64 rhs = theta_y.eval(p, param_values).at(0);
            if (lhs - rhs < 0) {
                res.legal = false;
                res.witnesses.emplace_back(z, p);
            }
        }
    }
    return res;
}

}  // namespace redtile
