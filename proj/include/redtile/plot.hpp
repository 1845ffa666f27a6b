#pragma once

#include <algorithm>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "redtile/decompose.hpp"
#include "redtile/program.hpp"
#include "redtile/schedule.hpp"

namespace redtile {

/// Iteration-space view of one two-dimensional variable: points colored by
/// scheduled time, slice bands when a decomposition is given, tile outlines
/// when a tiling is given. Output is deterministic byte-for-byte.
struct PlotRequest {
    const Program* program = nullptr;
    const Schedule* schedule = nullptr;  // optional; grey points without it
    const SliceDecomposition* dec = nullptr;
    const TileDecomposition* tdec = nullptr;
    std::string var;
    IntVec params;
};

namespace detail {

inline std::string hue_color(double fraction) {
    int hue = static_cast<int>(240.0 - 240.0 * fraction);  // blue -> red
    return "hsl(" + std::to_string(hue) + ",70%,50%)";
}

}  // namespace detail

inline std::string render_svg(const PlotRequest& req) {
    const Variable& var = req.program->var(req.var);
    if (var.domain.n_idx != 2)
        throw ModelError("plotting requires a two-dimensional variable, " + req.var + " has " +
                         std::to_string(var.domain.n_idx));
    auto points = enumerate_domain(var.domain, req.params);
    if (points.empty()) throw ModelError(req.var + " has no points under this binding");
    BoundingBox box = bounding_box(points);

    const int cell = 28, margin = 40, r = 9;
    auto px = [&](i64 i) { return margin + static_cast<int>(i - box.lo[0]) * cell; };
    auto py = [&](i64 j) {
        return margin + static_cast<int>(box.hi[1] - j) * cell;  // j grows upward
    };
    int width = 2 * margin + static_cast<int>(box.extent(0)) * cell;
    int height = 2 * margin + static_cast<int>(box.extent(1)) * cell;

    std::map<IntVec, IntVec> times;
    IntVec tmin, tmax;
    if (req.schedule && req.schedule->has(req.var)) {
        for (const auto& p : points) {
            IntVec t = req.schedule->eval(req.var, p, req.params);
            if (times.empty() || lex_less(t, tmin)) tmin = t;
            if (times.empty() || lex_less(tmax, t)) tmax = t;
            times[p] = std::move(t);
        }
    }

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    os << "<!-- redtile iteration-space plot -->\n";
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
       << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    os << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

    // Slice bands: one outline per equitemporal hyperplane of this variable.
    if (req.dec && req.dec->body_var == req.var) {
        for (const auto& sl : req.dec->slices) {
            os << "<rect class=\"slice-band\" x=\"" << px(sl.box.lo[0]) - cell / 2 << "\" y=\""
               << py(sl.box.hi[1]) - cell / 2 << "\" width=\""
               << static_cast<int>(sl.box.extent(0)) * cell + cell << "\" height=\""
               << static_cast<int>(sl.box.extent(1)) * cell + cell
               << "\" fill=\"none\" stroke=\"#bbbbbb\" stroke-width=\"2\" rx=\"8\"/>\n";
        }
    }
    if (req.tdec && req.tdec->dec.body_var == req.var) {
        for (size_t si = 0; si < req.tdec->dec.slices.size(); ++si) {
            for (const Tile& tile : req.tdec->tiles[si]) {
                os << "<rect class=\"tile-outline\" x=\"" << px(tile.box.lo[0]) - cell / 2
                   << "\" y=\"" << py(tile.box.hi[1]) - cell / 2 << "\" width=\""
                   << static_cast<int>(tile.box.extent(0)) * cell + cell << "\" height=\""
                   << static_cast<int>(tile.box.extent(1)) * cell + cell
                   << "\" fill=\"none\" stroke=\"#e08030\" stroke-width=\"1\" "
                      "stroke-dasharray=\"4,3\"/>\n";
            }
        }
    }

    for (const auto& p : points) {
        std::string color = "#888888";
        std::string title;
        auto it = times.find(p);
        if (it != times.end()) {
            double f = 0.0;
            if (tmax != tmin) {
                // normalize on the innermost dimension for the color ramp
                double lo = static_cast<double>(tmin.back());
                double hi = static_cast<double>(tmax.back());
                if (hi > lo) f = (static_cast<double>(it->second.back()) - lo) / (hi - lo);
            }
            color = detail::hue_color(f);
            title = "t=" + vec_str(it->second);
        }
        os << "<circle class=\"pt\" cx=\"" << px(p[0]) << "\" cy=\"" << py(p[1]) << "\" r=\"" << r
           << "\" fill=\"" << color << "\">";
        os << "<title>" << req.var << vec_str(p);
        if (!title.empty()) os << " " << title;
        os << "</title></circle>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace redtile
