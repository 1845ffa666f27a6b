#pragma once

#include <optional>
#include <string>

#include "redtile/json_io.hpp"
#include "redtile/parser.hpp"
#include "redtile/pipeline.hpp"
#include "redtile/solver.hpp"

namespace testutil {

using namespace redtile;

inline Program load_fixture(const std::string& name) {
    return parse_program(read_text_file(std::string(FIXTURE_DIR) + "/" + name));
}

inline AffineFunction map1(const std::string& text, const std::vector<std::string>& params) {
    return parse_affine_map(text, params);
}

inline IntVec v(std::initializer_list<i64> xs) { return IntVec(xs); }

/// Reference optimizer: full odometer over [-B, B]^n with the same objective
/// definition, written independently of the branch-and-bound search.
inline std::optional<SolveObjective> exhaustive_solve(const ConstraintSystem& sys, i64 bound) {
    const int n = sys.templates.total_unknowns;
    std::vector<i64> a(n, -bound);
    std::optional<SolveObjective> best;
    while (true) {
        bool ok = true;
        for (const auto& c : sys.constraints)
            if (!constraint_satisfied(c, a)) {
                ok = false;
                break;
            }
        if (ok) {
            SolveObjective obj;
            obj.norm = 0;
            for (i64 x : a) obj.norm += x < 0 ? -x : x;
            obj.sum.assign(sys.templates.time_dims, 0);
            bool any = false;
            IntVec mk(sys.templates.time_dims, 0);
            for (const auto& tpl : sys.templates.templates) {
                for (const auto& p : tpl.points) {
                    IntVec t(tpl.time_dims);
                    for (int dim = 0; dim < tpl.time_dims; ++dim) {
                        int base = tpl.first_unknown + dim * tpl.unknowns_per_dim();
                        i64 acc = a[base + tpl.n_idx + tpl.n_par];
                        for (int k = 0; k < tpl.n_idx; ++k) acc += a[base + k] * p[k];
                        for (int k = 0; k < tpl.n_par; ++k)
                            acc += a[base + tpl.n_idx + k] * sys.templates.param_values[k];
                        t[dim] = acc;
                        obj.sum[dim] += acc;
                    }
                    if (!any || lex_less(mk, t)) mk = t, any = true;
                }
            }
            obj.makespan = mk;
            obj.coeffs = a;
            if (!best || objective_less(obj, *best)) best = obj;
        }
        int k = n - 1;
        while (k >= 0 && a[k] == bound) a[k--] = -bound;
        if (k < 0) break;
        ++a[k];
    }
    return best;
}

/// Deterministic random program source; domains stay at or under ~300 points.
struct RandomProgram {
    std::string text;
    std::map<std::string, i64> params;
};

inline RandomProgram random_program(uint64_t seed) {
    uint64_t s = seed * 2654435769ULL + 97;
    auto pick = [&](uint64_t n) { return splitmix64(s) % n; };

    struct Shape {
        const char* body_domain;
        const char* projection;
        const char* result_domain;
    };
    static const Shape shapes[] = {
        {"{i,j | 0<=j and j<=i and i<=N}", "(i,j -> i)", "{i | 0<=i and i<=N}"},
        {"{i,j | 0<=j and j<=i and i<=N}", "(i,j -> j)", "{j | 0<=j and j<=N}"},
        {"{i,j | 0<=j and j<=i and i<=N}", "(i,j -> )", "{}"},
        {"{i,j | 0<=i and i<=N and 0<=j and j<=N}", "(i,j -> i)", "{i | 0<=i and i<=N}"},
        {"{i,j | 0<=i and i<=N and 0<=j and j<=N}", "(i,j -> i+j)",
         "{k | 0<=k and k<=2*N}"},
        {"{i | 0<=i and i<=N}", "(i -> )", "{}"},
        {"{i,j | 0<=i and i<=N and 0<=j and j<=N}", "(i,j -> )", "{}"},
    };
    static const char* ops[] = {"+", "max", "min"};

    RandomProgram out;
    i64 n_value = 2 + static_cast<i64>(pick(6));  // N in 2..7
    out.params["N"] = n_value;

    struct Result {
        std::string name, index, domain;
    };
    std::string text = "param N;\n";
    int n_reduces = 1 + static_cast<int>(pick(2));
    std::vector<Result> results;
    for (int r = 0; r < n_reduces; ++r) {
        const Shape& sh = shapes[pick(std::size(shapes))];
        std::string body = "R" + std::to_string(r);
        std::string result = "X" + std::to_string(r);
        std::string ridx =
            sh.result_domain == std::string("{}") ? "" : std::string(1, sh.result_domain[1]);
        text += "input " + body + " " + sh.body_domain + ";\n";
        text += "var " + result + " " + sh.result_domain + ";\n";
        std::string op = ops[pick(3)];
        std::string idx = std::string(sh.projection).find(',') != std::string::npos ? "i,j" : "i";
        text += result + "(" + ridx + ") = reduce(" + op + ", " + sh.projection + ", " + body +
                "(" + idx + "));\n";
        results.push_back(Result{result, ridx, sh.result_domain});
    }
    if (pick(2) == 0) {
        // pointwise chain over the first reduction's domain
        const Result& res = results[0];
        i64 c1 = 1 + static_cast<i64>(pick(3));
        i64 c2 = static_cast<i64>(pick(5)) - 2;
        i64 lat = 1 + static_cast<i64>(pick(2));
        text += "var A " + res.domain + ";\n";
        text += "A(" + res.index + ") = " + std::to_string(c1) + "*" + res.name + "(" + res.index +
                ") + " + std::to_string(c2) + " @latency " + std::to_string(lat) + ";\n";
    }
    out.text = text;
    return out;
}

}  // namespace testutil
