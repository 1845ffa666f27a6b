#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "redtile/ints.hpp"

namespace redtile {

struct AffineError : std::runtime_error {
    explicit AffineError(const std::string& what) : std::runtime_error(what) {}
};

/// Integer affine map (z, p) -> A (z p)^T + c where z are index coordinates
/// and p are size parameters. Rows are laid out index columns first, then
/// parameter columns. Evaluation is exact; overflow raises instead of wrapping.
struct AffineFunction {
    int n_in = 0;
    int n_par = 0;
    std::vector<IntVec> rows;  // each of length n_in + n_par
    IntVec constant;           // length == rows.size()

    AffineFunction() = default;
    AffineFunction(int n_in_, int n_par_, std::vector<IntVec> rows_, IntVec constant_)
        : n_in(n_in_), n_par(n_par_), rows(std::move(rows_)), constant(std::move(constant_)) {
        if (rows.size() != constant.size())
            throw AffineError("row count must equal constant vector length");
        for (const auto& r : rows)
            if (static_cast<int>(r.size()) != n_in + n_par)
                throw AffineError("row width must equal index dims + parameter dims");
    }

    int out_dims() const { return static_cast<int>(rows.size()); }

    static AffineFunction identity(int n, int n_par = 0) {
        std::vector<IntVec> rows(n, IntVec(n + n_par, 0));
        for (int i = 0; i < n; ++i) rows[i][i] = 1;
        return AffineFunction(n, n_par, std::move(rows), IntVec(n, 0));
    }

    static AffineFunction constant_fn(int n_in, int n_par, IntVec values) {
        std::vector<IntVec> rows(values.size(), IntVec(n_in + n_par, 0));
        return AffineFunction(n_in, n_par, std::move(rows), std::move(values));
    }

    IntVec eval(const IntVec& point, const IntVec& params) const {
        if (static_cast<int>(point.size()) != n_in)
            throw AffineError("point has " + std::to_string(point.size()) +
                              " coordinates, function expects " + std::to_string(n_in));
        if (static_cast<int>(params.size()) != n_par)
            throw AffineError("unbound parameter: expected " + std::to_string(n_par) +
                              " parameter values, got " + std::to_string(params.size()));
        IntVec out(rows.size());
        for (size_t r = 0; r < rows.size(); ++r) {
            i64 acc = constant[r];
            for (int k = 0; k < n_in; ++k) acc = checked_add(acc, checked_mul(rows[r][k], point[k]));
            for (int k = 0; k < n_par; ++k)
                acc = checked_add(acc, checked_mul(rows[r][n_in + k], params[k]));
            out[r] = acc;
        }
        return out;
    }

    /// this ∘ g: parameters pass through both maps unchanged.
    AffineFunction compose(const AffineFunction& g) const {
        if (g.out_dims() != n_in) throw AffineError("composition dimension mismatch");
        if (g.n_par != n_par) throw AffineError("composition parameter mismatch");
        std::vector<IntVec> out_rows(rows.size(), IntVec(g.n_in + n_par, 0));
        IntVec out_const = constant;
        for (size_t r = 0; r < rows.size(); ++r) {
            for (int k = 0; k < n_in; ++k) {
                i64 a = rows[r][k];
                if (a == 0) continue;
                for (int j = 0; j < g.n_in + n_par; ++j)
                    out_rows[r][j] = checked_add(out_rows[r][j], checked_mul(a, g.rows[k][j]));
                out_const[r] = checked_add(out_const[r], checked_mul(a, g.constant[k]));
            }
            for (int k = 0; k < n_par; ++k)
                out_rows[r][g.n_in + k] = checked_add(out_rows[r][g.n_in + k], rows[r][n_in + k]);
        }
        return AffineFunction(g.n_in, n_par, std::move(out_rows), std::move(out_const));
    }

    AffineFunction plus_const(const IntVec& d) const {
        AffineFunction f = *this;
        f.constant = vec_add(f.constant, d);
        return f;
    }

    AffineFunction plus_inner_const(i64 d) const {
        AffineFunction f = *this;
        if (f.constant.empty()) throw AffineError("no innermost dimension");
        f.constant.back() = checked_add(f.constant.back(), d);
        return f;
    }

    /// Multiplies the innermost output row by k.
    AffineFunction scale_inner(i64 k) const {
        AffineFunction f = *this;
        if (f.rows.empty()) throw AffineError("no innermost dimension");
        for (auto& c : f.rows.back()) c = checked_mul(c, k);
        f.constant.back() = checked_mul(f.constant.back(), k);
        return f;
    }

    /// Stacks g's output rows below this function's rows (same input space).
    AffineFunction stack(const AffineFunction& g) const {
        if (g.n_in != n_in || g.n_par != n_par) throw AffineError("stack dimension mismatch");
        AffineFunction f = *this;
        f.rows.insert(f.rows.end(), g.rows.begin(), g.rows.end());
        f.constant.insert(f.constant.end(), g.constant.begin(), g.constant.end());
        return f;
    }

    bool operator==(const AffineFunction& o) const {
        return n_in == o.n_in && n_par == o.n_par && rows == o.rows && constant == o.constant;
    }
};

/// Drops the last k input coordinates of the identity: (z, t) -> z.
inline AffineFunction drop_last_inputs(int n_in, int n_par, int k) {
    std::vector<IntVec> rows(n_in - k, IntVec(n_in + n_par, 0));
    for (int i = 0; i < n_in - k; ++i) rows[i][i] = 1;
    return AffineFunction(n_in, n_par, std::move(rows), IntVec(n_in - k, 0));
}

}  // namespace redtile
