#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "redtile/affine.hpp"
#include "redtile/ints.hpp"

namespace redtile {

struct DomainError : std::runtime_error {
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

struct UnboundedDomainError : DomainError {
    explicit UnboundedDomainError(const std::string& what) : DomainError(what) {}
};

/// One affine inequality coeffs·(z p) + constant >= 0.
struct LinIneq {
    IntVec coeffs;  // index columns then parameter columns
    i64 constant = 0;

    bool operator==(const LinIneq& o) const { return coeffs == o.coeffs && constant == o.constant; }
};

struct BoundingBox {
    IntVec lo, hi;

    int dims() const { return static_cast<int>(lo.size()); }

    i64 extent(int d) const { return hi[d] - lo[d]; }

    /// 1-norm of the principal diagonal.
    i64 diag_norm1() const {
        i64 s = 0;
        for (int d = 0; d < dims(); ++d) s = checked_add(s, extent(d));
        return s;
    }

    /// Number of dimensions with more than one point.
    int positive_dims() const {
        int n = 0;
        for (int d = 0; d < dims(); ++d)
            if (extent(d) > 0) ++n;
        return n;
    }

    bool operator==(const BoundingBox& o) const { return lo == o.lo && hi == o.hi; }
};

inline BoundingBox bounding_box(const std::vector<IntVec>& points) {
    if (points.empty()) throw DomainError("bounding box of an empty point set");
    BoundingBox box{points.front(), points.front()};
    for (const auto& p : points) {
        if (p.size() != box.lo.size()) throw DomainError("mixed dimensionality point set");
        for (size_t d = 0; d < p.size(); ++d) {
            box.lo[d] = std::min(box.lo[d], p[d]);
            box.hi[d] = std::max(box.hi[d], p[d]);
        }
    }
    return box;
}

/// Conjunction of affine inequalities over index coordinates and named size
/// parameters. A domain may instead carry an explicit finite point set; the
/// rewrite stages use that form for derived variables whose exact shape is
/// not expressible as a single conjunction.
struct Domain {
    int n_idx = 0;
    std::vector<std::string> params;
    std::vector<LinIneq> rows;
    bool explicit_points = false;
    std::vector<IntVec> points;  // sorted lexicographically when explicit

    static constexpr size_t kMaxEnumeration = 2'000'000;

    Domain() = default;
    Domain(int n_idx_, std::vector<std::string> params_, std::vector<LinIneq> rows_)
        : n_idx(n_idx_), params(std::move(params_)), rows(std::move(rows_)) {
        for (const auto& r : rows)
            if (static_cast<int>(r.coeffs.size()) != n_idx + static_cast<int>(params.size()))
                throw DomainError("inequality width must equal index dims + parameter dims");
    }

    static Domain explicit_set(int n_idx, std::vector<std::string> params,
                               std::vector<IntVec> pts) {
        Domain d;
        d.n_idx = n_idx;
        d.params = std::move(params);
        d.explicit_points = true;
        std::sort(pts.begin(), pts.end());
        pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
        for (const auto& p : pts)
            if (static_cast<int>(p.size()) != n_idx) throw DomainError("point dimension mismatch");
        d.points = std::move(pts);
        return d;
    }

    int n_par() const { return static_cast<int>(params.size()); }

    bool contains(const IntVec& point, const IntVec& param_values) const {
        if (static_cast<int>(point.size()) != n_idx) return false;
        if (explicit_points) return std::binary_search(points.begin(), points.end(), point);
        if (static_cast<int>(param_values.size()) != n_par())
            throw DomainError("unbound parameter in membership test");
        for (const auto& r : rows) {
            i64 acc = r.constant;
            for (int k = 0; k < n_idx; ++k) acc = checked_add(acc, checked_mul(r.coeffs[k], point[k]));
            for (int k = 0; k < n_par(); ++k)
                acc = checked_add(acc, checked_mul(r.coeffs[n_idx + k], param_values[k]));
            if (acc < 0) return false;
        }
        return true;
    }

    bool operator==(const Domain& o) const {
        return n_idx == o.n_idx && params == o.params && rows == o.rows &&
               explicit_points == o.explicit_points && points == o.points;
    }
};

namespace detail {

/// Eliminates dimension d by combining every positive-coefficient row with
/// every negative-coefficient row (exact integer combination).
inline std::vector<LinIneq> fm_eliminate(const std::vector<LinIneq>& rows, int d) {
    std::vector<LinIneq> keep, pos, neg;
    for (const auto& r : rows) {
        if (r.coeffs[d] > 0)
            pos.push_back(r);
        else if (r.coeffs[d] < 0)
            neg.push_back(r);
        else
            keep.push_back(r);
    }
    for (const auto& p : pos) {
        for (const auto& n : neg) {
            // |n_d|·p + p_d·n cancels dimension d.
            i64 a = -n.coeffs[d];
            i64 b = p.coeffs[d];
            LinIneq row;
            row.coeffs.resize(p.coeffs.size());
            for (size_t k = 0; k < p.coeffs.size(); ++k)
                row.coeffs[k] = checked_add(checked_mul(a, p.coeffs[k]), checked_mul(b, n.coeffs[k]));
            row.constant = checked_add(checked_mul(a, p.constant), checked_mul(b, n.constant));
            keep.push_back(std::move(row));
            if (keep.size() > 20000) throw DomainError("projection blow-up during enumeration");
        }
    }
    return keep;
}

}  // namespace detail

/// Enumerates every integer point of the domain under a concrete parameter
/// binding, in lexicographic order. Reports unboundedness as an error.
inline std::vector<IntVec> enumerate_domain(const Domain& dom, const IntVec& param_values) {
    if (dom.explicit_points) return dom.points;
    if (static_cast<int>(param_values.size()) != dom.n_par())
        throw DomainError("unbound parameter in enumeration");
    if (dom.n_idx == 0) {
        // Zero-dimensional: the single empty point, if the constraints hold.
        if (dom.contains(IntVec{}, param_values)) return {IntVec{}};
        return {};
    }

    // Per-level constraint sets: level k holds rows free of dimensions > k.
    std::vector<std::vector<LinIneq>> level(dom.n_idx);
    level[dom.n_idx - 1] = dom.rows;
    for (int k = dom.n_idx - 2; k >= 0; --k)
        level[k] = detail::fm_eliminate(level[k + 1], k + 1);

    std::vector<IntVec> out;
    IntVec prefix(dom.n_idx, 0);

    // Evaluates a row given the first `depth` coordinates plus all parameters;
    // only valid for rows whose later-dimension coefficients are zero.
    auto eval_row = [&](const LinIneq& r, int depth) {
        i64 acc = r.constant;
        for (int k = 0; k < depth; ++k) acc = checked_add(acc, checked_mul(r.coeffs[k], prefix[k]));
        for (int k = 0; k < dom.n_par(); ++k)
            acc = checked_add(acc, checked_mul(r.coeffs[dom.n_idx + k], param_values[k]));
        return acc;
    };

    std::function<void(int)> rec = [&](int d) {
        bool has_lo = false, has_hi = false;
        i64 lo = 0, hi = 0;
        for (const auto& r : level[d]) {
            i64 a = r.coeffs[d];
            i64 rest = eval_row(r, d);
            if (a == 0) {
                if (rest < 0) return;  // prefix already infeasible
                continue;
            }
            if (a > 0) {
                i64 b = ceil_div(-rest, a);
                if (!has_lo || b > lo) lo = b, has_lo = true;
            } else {
                i64 b = floor_div(rest, -a);
                if (!has_hi || b < hi) hi = b, has_hi = true;
            }
        }
        if (!has_lo || !has_hi)
            throw UnboundedDomainError("domain is unbounded in dimension " + std::to_string(d) +
                                       " under the given parameter binding");
        for (i64 v = lo; v <= hi; ++v) {
            prefix[d] = v;
            if (d + 1 == dom.n_idx) {
                IntVec p(prefix.begin(), prefix.begin() + dom.n_idx);
                if (dom.contains(p, param_values)) {
                    out.push_back(std::move(p));
                    if (out.size() > Domain::kMaxEnumeration)
                        throw DomainError("domain enumeration exceeds the point limit");
                }
            } else {
                rec(d + 1);
            }
        }
    };
    rec(0);
    return out;
}

/// Domain of points z with fn(z) = target, intersected with dom.
inline Domain preimage(const AffineFunction& fn, const IntVec& target, const Domain& dom,
                       const IntVec& param_values) {
    if (fn.out_dims() != static_cast<int>(target.size()))
        throw DomainError("preimage target length must equal function output dims");
    if (fn.n_in != dom.n_idx) throw DomainError("preimage function input dims mismatch");
    if (dom.explicit_points) {
        std::vector<IntVec> pts;
        for (const auto& p : dom.points)
            if (fn.eval(p, param_values) == target) pts.push_back(p);
        return Domain::explicit_set(dom.n_idx, dom.params, std::move(pts));
    }
    Domain out = dom;
    for (int r = 0; r < fn.out_dims(); ++r) {
        LinIneq ge, le;
        ge.coeffs.assign(dom.n_idx + dom.n_par(), 0);
        for (int k = 0; k < fn.n_in; ++k) ge.coeffs[k] = fn.rows[r][k];
        for (int k = 0; k < fn.n_par; ++k) ge.coeffs[dom.n_idx + k] = fn.rows[r][fn.n_in + k];
        ge.constant = checked_sub(fn.constant[r], target[r]);
        le.coeffs.resize(ge.coeffs.size());
        for (size_t k = 0; k < ge.coeffs.size(); ++k) le.coeffs[k] = -ge.coeffs[k];
        le.constant = -ge.constant;
        out.rows.push_back(std::move(ge));
        out.rows.push_back(std::move(le));
    }
    return out;
}

}  // namespace redtile
