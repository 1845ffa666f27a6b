#pragma once

#include <map>
#include <set>
#include <string>

#include "redtile/affine.hpp"

namespace redtile {

/// Per-variable multidimensional affine time functions. Input variables may
/// carry a pinned availability function (the body schedule of a reduction);
/// inputs without one become available at time zero.
struct Schedule {
    int time_dims = 1;
    std::map<std::string, AffineFunction> fns;
    std::set<std::string> pinned_inputs;

    bool has(const std::string& var) const { return fns.count(var) > 0; }

    const AffineFunction& fn(const std::string& var) const {
        auto it = fns.find(var);
        if (it == fns.end()) throw AffineError("no schedule for variable " + var);
        return it->second;
    }

    IntVec eval(const std::string& var, const IntVec& point, const IntVec& params) const {
        return fn(var).eval(point, params);
    }

    void set(const std::string& var, AffineFunction f, bool pinned_input = false) {
        if (f.out_dims() != time_dims) throw AffineError("schedule dimensionality mismatch");
        fns[var] = std::move(f);
        if (pinned_input) pinned_inputs.insert(var);
    }
};

/// Multiplies the innermost time dimension of every schedule by two; the
/// classical constant-factor remedy, kept as a comparison baseline.
inline Schedule slowdown_x2(const Schedule& schedule) {
    Schedule out = schedule;
    for (auto& [name, fn] : out.fns) fn = fn.scale_inner(2);
    return out;
}

}  // namespace redtile
