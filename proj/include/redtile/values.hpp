#pragma once

#include <map>
#include <string>

#include "redtile/program.hpp"

namespace redtile {

/// Concrete values for every point of one variable.
using PointValues = std::map<IntVec, i64>;
using InputValues = std::map<std::string, PointValues>;

/// Deterministic small value for (seed, variable, point); range [-9, 9].
inline i64 seeded_value(uint64_t seed, const std::string& var, const IntVec& point) {
    uint64_t h = hash_combine(seed, hash_string(var));
    for (i64 c : point) h = hash_combine(h, static_cast<uint64_t>(c) * 0x9e3779b97f4a7c15ULL + 13);
    return static_cast<i64>(h % 19) - 9;
}

/// Materializes every input variable: explicit literals in lexicographic
/// point order when the program carries them, seeded values otherwise.
inline InputValues materialize_inputs(const Program& program, const IntVec& param_values,
                                      uint64_t seed) {
    InputValues values;
    for (const auto& v : program.variables) {
        auto it = program.inputs.find(v.name);
        if (it == program.inputs.end()) continue;
        auto points = enumerate_domain(v.domain, param_values);
        PointValues pv;
        if (it->second.has_literals) {
            if (it->second.literals.size() != points.size())
                throw ModelError("input " + v.name + " lists " +
                                 std::to_string(it->second.literals.size()) + " literals but has " +
                                 std::to_string(points.size()) + " points");
            for (size_t k = 0; k < points.size(); ++k) pv[points[k]] = it->second.literals[k];
        } else {
            for (const auto& p : points) pv[p] = seeded_value(seed, v.name, p);
        }
        values[v.name] = std::move(pv);
    }
    return values;
}

}  // namespace redtile
