#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "redtile/constraints.hpp"
#include "redtile/schedule.hpp"

namespace redtile {

struct SolveError : std::runtime_error {
    explicit SolveError(const std::string& what) : std::runtime_error(what) {}
};

/// Lexicographic objective: completion makespan over every scheduled point,
/// then coefficient 1-norm, then per-dimension completion sums, then the raw
/// coefficient tuple. The trailing components exist purely for determinism.
struct SolveObjective {
    IntVec makespan;
    i64 norm = 0;
    IntVec sum;
    std::vector<i64> coeffs;
};

inline bool objective_less(const SolveObjective& a, const SolveObjective& b) {
    if (a.makespan != b.makespan) return lex_less(a.makespan, b.makespan);
    if (a.norm != b.norm) return a.norm < b.norm;
    if (a.sum != b.sum) return lex_less(a.sum, b.sum);
    return a.coeffs < b.coeffs;
}

enum class SolveStatus { Feasible, InfeasibleWithinBound, ProvablyInfeasible };

struct SolveResult {
    SolveStatus status = SolveStatus::InfeasibleWithinBound;
    Schedule schedule;
    SolveObjective objective;
    std::string note;
};

namespace detail {

class BranchAndBound {
  public:
    BranchAndBound(const ConstraintSystem& sys, i64 bound) : sys_(sys), bound_(bound) {
        n_ = sys.templates.total_unknowns;
        dims_ = sys.templates.time_dims;
        if (dims_ < 1 || dims_ > 8) throw SolveError("unsupported time dimensionality");
        touch_bucket_.assign(std::max(n_, 1), {});
        for (size_t i = 0; i < sys.constraints.size(); ++i) {
            std::set<int> touched;
            for (const auto& e : sys.constraints[i].lhs)
                for (const auto& [u, c] : e.terms) touched.insert(u);
            for (const auto& e : sys.constraints[i].rhs)
                for (const auto& [u, c] : e.terms) touched.insert(u);
            if (touched.empty())
                const_constraints_.push_back(static_cast<int>(i));
            else
                for (int u : touched) touch_bucket_[u].push_back(static_cast<int>(i));
        }
        template_bucket_.assign(std::max(n_, 1), {});
        for (size_t t = 0; t < sys.templates.templates.size(); ++t) {
            const auto& tpl = sys.templates.templates[t];
            if (tpl.total_unknowns() > 0)
                template_bucket_[tpl.last_unknown()].push_back(static_cast<int>(t));
        }
    }

    SolveResult run() {
        for (int ci : const_constraints_) {
            if (!constraint_satisfied(sys_.constraints[ci], {})) {
                SolveResult r;
                r.status = SolveStatus::ProvablyInfeasible;
                r.note = "constant constraint violated: " + sys_.constraints[ci].origin + " " +
                         sys_.constraints[ci].instance;
                return r;
            }
        }
        assignment_.assign(n_, 0);
        makespan_.assign(dims_, 0);
        sum_.assign(dims_, 0);
        have_makespan_ = false;
        norm_ = 0;
        recurse(0);
        SolveResult r;
        if (!best_) {
            r.status = SolveStatus::InfeasibleWithinBound;
            r.note = "no assignment within coefficient bound " + std::to_string(bound_);
            return r;
        }
        r.status = SolveStatus::Feasible;
        r.objective = *best_;
        r.schedule = extract_schedule(best_->coeffs);
        return r;
    }

  private:
    // Hot path: interval reasoning over the yet-unassigned suffix, exact on
    // fully grounded constraints. Coefficients and point coordinates are
    // desk-scale, far from the 64-bit range.
    void bound_expr(const LinExprU& e, int assigned, i64& lo, i64& hi) const {
        lo = hi = e.constant;
        for (const auto& [u, k] : e.terms) {
            if (u < assigned) {
                i64 v = k * assignment_[u];
                lo += v;
                hi += v;
            } else {
                i64 m = (k < 0 ? -k : k) * bound_;
                lo -= m;
                hi += m;
            }
        }
    }

    /// Can the constraint still hold with unknowns >= `assigned` free?
    bool possibly_satisfied(const Constraint& c, int assigned) const {
        const size_t dims = c.lhs.size();
        for (size_t d = 0; d < dims; ++d) {
            i64 llo, lhi, rlo, rhi;
            bound_expr(c.lhs[d], assigned, llo, lhi);
            bound_expr(c.rhs[d], assigned, rlo, rhi);
            i64 dlo = llo - rhi;
            i64 dhi = lhi - rlo;
            if (d + 1 == dims) {
                i64 need = c.kind == ConstraintKind::SlackGe ? c.bound : 0;
                return dhi >= need;
            }
            if (dlo > 0) return true;   // certainly positive prefix dimension
            if (dhi < 0) return false;  // certainly negative prefix dimension
            if (dlo != 0 || dhi != 0) return true;  // undecided prefix
        }
        return true;
    }

    bool worse_than_incumbent() const {
        if (!best_ || !have_makespan_) return false;
        if (lex_less(best_->makespan, makespan_)) return true;
        return makespan_ == best_->makespan && norm_ > best_->norm;
    }

    void recurse(int d) {
        if (worse_than_incumbent()) return;
        if (d == n_) {
            SolveObjective obj;
            obj.makespan = makespan_;
            obj.norm = norm_;
            obj.sum = sum_;
            obj.coeffs = assignment_;
            if (!best_ || objective_less(obj, *best_)) best_ = std::move(obj);
            return;
        }
        IntVec saved_makespan, saved_sum;
        for (i64 v = 0; v <= 2 * bound_; ++v) {
            // 0, 1, -1, 2, -2, ...
            i64 val = (v % 2 == 1) ? (v + 1) / 2 : -(v / 2);
            assignment_[d] = val;
            bool ok = true;
            for (int ci : touch_bucket_[d]) {
                if (!possibly_satisfied(sys_.constraints[ci], d + 1)) {
                    ok = false;
                    break;
                }
            }
            if (!ok) continue;
            bool saved_have = have_makespan_;
            if (!template_bucket_[d].empty()) {
                saved_makespan = makespan_;
                saved_sum = sum_;
                for (int ti : template_bucket_[d]) update_completions(ti);
            }
            norm_ += val < 0 ? -val : val;
            recurse(d + 1);
            norm_ -= val < 0 ? -val : val;
            if (!template_bucket_[d].empty()) {
                makespan_ = saved_makespan;
                sum_ = saved_sum;
                have_makespan_ = saved_have;
            }
        }
        assignment_[d] = 0;
    }

    void update_completions(int ti) {
        const auto& tpl = sys_.templates.templates[ti];
        i64 t[8];
        for (const auto& p : tpl.points) {
            for (int dim = 0; dim < tpl.time_dims; ++dim) {
                int base = tpl.first_unknown + dim * tpl.unknowns_per_dim();
                i64 acc = assignment_[base + tpl.n_idx + tpl.n_par];
                for (int k = 0; k < tpl.n_idx; ++k) acc += assignment_[base + k] * p[k];
                for (int k = 0; k < tpl.n_par; ++k)
                    acc += assignment_[base + tpl.n_idx + k] * sys_.templates.param_values[k];
                t[dim] = acc;
                sum_[dim] += acc;
            }
            bool greater = !have_makespan_;
            for (int dim = 0; dim < tpl.time_dims && !greater; ++dim) {
                if (t[dim] != makespan_[dim]) greater = t[dim] > makespan_[dim];
            }
            if (greater) {
                for (int dim = 0; dim < tpl.time_dims; ++dim) makespan_[dim] = t[dim];
                have_makespan_ = true;
            }
        }
    }

    Schedule extract_schedule(const std::vector<i64>& coeffs) const {
        Schedule sched;
        sched.time_dims = dims_;
        for (const auto& tpl : sys_.templates.templates) {
            std::vector<IntVec> rows(tpl.time_dims, IntVec(tpl.n_idx + tpl.n_par, 0));
            IntVec consts(tpl.time_dims, 0);
            for (int dim = 0; dim < tpl.time_dims; ++dim) {
                int base = tpl.first_unknown + dim * tpl.unknowns_per_dim();
                for (int k = 0; k < tpl.n_idx + tpl.n_par; ++k) rows[dim][k] = coeffs[base + k];
                consts[dim] = coeffs[base + tpl.n_idx + tpl.n_par];
            }
            sched.set(tpl.var, AffineFunction(tpl.n_idx, tpl.n_par, std::move(rows),
                                              std::move(consts)));
        }
        return sched;
    }

    const ConstraintSystem& sys_;
    i64 bound_;
    int n_ = 0, dims_ = 1;
    std::vector<i64> assignment_;
    IntVec makespan_, sum_;
    bool have_makespan_ = false;
    i64 norm_ = 0;
    std::vector<std::vector<int>> touch_bucket_, template_bucket_;
    std::vector<int> const_constraints_;
    std::optional<SolveObjective> best_;
};

}  // namespace detail

/// Exact branch-and-bound over integer coefficients in [-bound, bound].
inline SolveResult solve(const ConstraintSystem& sys, i64 bound) {
    if (bound < 1) throw SolveError("coefficient bound must be at least 1");
    return detail::BranchAndBound(sys, bound).run();
}

struct VerifyResult {
    bool ok = true;
    int first_violated = -1;

    const Constraint* violated(const ConstraintSystem& sys) const {
        return first_violated < 0 ? nullptr : &sys.constraints[first_violated];
    }
};

/// Substitutes a concrete schedule into every constraint and checks exactly.
inline VerifyResult verify(const Schedule& schedule, const ConstraintSystem& sys) {
    std::vector<i64> coeffs(sys.templates.total_unknowns, 0);
    for (const auto& tpl : sys.templates.templates) {
        const AffineFunction& fn = schedule.fn(tpl.var);
        if (fn.out_dims() != tpl.time_dims || fn.n_in != tpl.n_idx || fn.n_par != tpl.n_par)
            throw SolveError("schedule for " + tpl.var + " does not match its template shape");
        for (int dim = 0; dim < tpl.time_dims; ++dim) {
            int base = tpl.first_unknown + dim * tpl.unknowns_per_dim();
            for (int k = 0; k < tpl.n_idx + tpl.n_par; ++k) coeffs[base + k] = fn.rows[dim][k];
            coeffs[base + tpl.n_idx + tpl.n_par] = fn.constant[dim];
        }
    }
    for (size_t i = 0; i < sys.constraints.size(); ++i) {
        if (!constraint_satisfied(sys.constraints[i], coeffs))
            return VerifyResult{false, static_cast<int>(i)};
    }
    return VerifyResult{};
}

struct TileSizeChoice {
    i64 s = 1;
    i64 omega = 0;                               // max |d·s - τ| at the chosen size
    std::vector<std::pair<i64, i64>> evaluated;  // (s, omega) over the whole range
};

/// Picks the tile edge minimizing the worst |d·s - τ| over the slices that
/// have at least one tiled dimension; ties break toward the smaller size.
inline TileSizeChoice optimize_tile_size(const SliceDecomposition& dec, i64 max_s) {
    if (max_s < 1) throw SolveError("tile size range must contain at least s=1");
    bool any = false;
    for (const auto& sl : dec.slices) any = any || sl.dims >= 1;
    if (!any)
        throw SolveError(
            "all slices are zero-dimensional; tile size optimization does not apply");
    TileSizeChoice choice;
    bool first = true;
    for (i64 s = 1; s <= max_s; ++s) {
        TileDecomposition tdec = tile_slices(dec, s);
        i64 omega = 0;
        for (size_t si = 0; si < dec.slices.size(); ++si) {
            if (dec.slices[si].dims < 1) continue;
            i64 w = checked_sub(checked_mul(static_cast<i64>(dec.slices[si].dims), s),
                                tdec.tile_count(si));
            omega = std::max(omega, w < 0 ? -w : w);
        }
        choice.evaluated.emplace_back(s, omega);
        if (first || omega < choice.omega) {
            choice.s = s;
            choice.omega = omega;
            first = false;
        }
    }
    return choice;
}

}  // namespace redtile
