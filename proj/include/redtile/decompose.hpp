#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "redtile/program.hpp"

namespace redtile {

/// One equitemporal hyperplane: the body points of P(z_X) whose body schedule
/// equals t. size is the linear-accumulation step count of the slice's box
/// (1-norm of the principal diagonal, floored at 1 for nonempty slices).
struct Slice {
    IntVec owner;  // z_X
    IntVec t;
    std::vector<IntVec> points;
    BoundingBox box;
    i64 size = 0;
    int dims = 0;  // box dimensions with extent > 0
};

struct OwnerInfo {
    IntVec z;
    IntVec first_t, last_t;  // lexicographic min/max over nonempty slices
    i64 slice_count = 0;     // E
    i64 span = 0;            // innermost steps strictly between first and last
    i64 size_prime = 0;      // linear accumulation steps over the slice partials
    i64 body_count = 0;      // |P(z_X)|
};

struct SliceDecomposition {
    std::string result_var;
    std::string body_var;
    std::string temp_var;
    ReduceOp op = ReduceOp::Add;
    AffineFunction projection;
    AffineFunction lambda_r;
    int z_dims = 0;
    int t_dims = 0;
    std::vector<Slice> slices;      // sorted by (owner, t)
    std::vector<OwnerInfo> owners;  // sorted by owner

    const OwnerInfo& owner(const IntVec& z) const {
        for (const auto& o : owners)
            if (o.z == z) return o;
        throw ModelError("no slices for point " + vec_str(z));
    }
};

struct Tile {
    i64 id = 0;  // 1-based within its slice, lexicographic by tile coordinates
    std::vector<IntVec> points;
    BoundingBox box;
    bool full = true;
    i64 size_budget = 0;  // point extent summed over the slice's tiled dimensions
};

struct TileDecomposition {
    SliceDecomposition dec;
    i64 tile_size = 1;
    std::string tile_var;
    std::vector<std::vector<Tile>> tiles;  // parallel to dec.slices

    i64 tile_count(size_t slice_index) const { return static_cast<i64>(tiles[slice_index].size()); }
};

namespace detail {
inline std::string fresh_name(const Program& program, std::string base) {
    while (program.find_var(base)) base = "_" + base;
    return base;
}
}  // namespace detail

/// Splits every P(z_X) into equitemporal hyperplanes of the body schedule.
inline SliceDecomposition slice(const Program& program, const ReduceEquation& eq,
                                const AffineFunction& lambda_r, const IntVec& param_values) {
    if (eq.finite_groups) throw ModelError("cannot slice a grouped accumulation equation");
    const Variable& body = program.var(eq.body);
    const Variable& result = program.var(eq.target);
    if (lambda_r.n_in != body.domain.n_idx)
        throw ModelError("body schedule expects " + std::to_string(lambda_r.n_in) +
                         " dims, Dom(" + eq.body + ") has " + std::to_string(body.domain.n_idx));
    if (lambda_r.n_par != static_cast<int>(program.params.size()))
        throw ModelError("body schedule parameter count mismatch");
    if (lambda_r.out_dims() < 1) throw ModelError("body schedule must have at least one dimension");

    SliceDecomposition dec;
    dec.result_var = eq.target;
    dec.body_var = eq.body;
    dec.temp_var = detail::fresh_name(program, "Temp" + eq.target);
    dec.op = eq.op;
    dec.projection = eq.projection;
    dec.lambda_r = lambda_r;
    dec.z_dims = result.domain.n_idx;
    dec.t_dims = lambda_r.out_dims();

    for (const auto& z : enumerate_domain(result.domain, param_values)) {
        Domain fiber = preimage(eq.projection, z, body.domain, param_values);
        auto pts = enumerate_domain(fiber, param_values);
        if (pts.empty())
            throw EmptyReductionDomainError("reduction over an empty domain at " + eq.target +
                                            vec_str(z));
        std::map<IntVec, std::vector<IntVec>> by_t;
        for (const auto& p : pts) by_t[lambda_r.eval(p, param_values)].push_back(p);

        OwnerInfo info;
        info.z = z;
        info.body_count = static_cast<i64>(pts.size());
        info.slice_count = static_cast<i64>(by_t.size());
        info.first_t = by_t.begin()->first;
        info.last_t = by_t.rbegin()->first;
        info.span = checked_sub(info.last_t.back(), info.first_t.back());
        info.size_prime = info.slice_count;
        dec.owners.push_back(info);

        for (auto& [t, slice_pts] : by_t) {
            Slice s;
            s.owner = z;
            s.t = t;
            s.box = bounding_box(slice_pts);
            s.size = std::max<i64>(1, s.box.diag_norm1());
            s.dims = s.box.positive_dims();
            s.points = std::move(slice_pts);
            dec.slices.push_back(std::move(s));
        }
    }
    return dec;
}

/// Orthogonal tiling of every slice with hypercubic tiles of edge s, aligned
/// at the slice's bounding-box lower corner. Only dimensions where the slice
/// has more than one point are tiled.
inline TileDecomposition tile_slices(const SliceDecomposition& dec, i64 s) {
    if (s < 1) throw ModelError("tile size must be at least 1");
    TileDecomposition tdec;
    tdec.dec = dec;
    tdec.tile_size = s;
    tdec.tile_var = "Tile_" + dec.temp_var;
    tdec.tiles.reserve(dec.slices.size());
    for (const auto& sl : dec.slices) {
        std::vector<int> tiled_dims;
        for (int d = 0; d < sl.box.dims(); ++d)
            if (sl.box.extent(d) > 0) tiled_dims.push_back(d);

        std::map<IntVec, std::vector<IntVec>> by_tile;
        for (const auto& p : sl.points) {
            IntVec key(tiled_dims.size());
            for (size_t k = 0; k < tiled_dims.size(); ++k)
                key[k] = floor_div(p[tiled_dims[k]] - sl.box.lo[tiled_dims[k]], s);
            by_tile[key].push_back(p);
        }
        std::vector<Tile> tiles;
        i64 id = 1;
        for (auto& [key, pts] : by_tile) {
            Tile tile;
            tile.id = id++;
            tile.box = bounding_box(pts);
            tile.full = true;
            tile.size_budget = 0;
            for (int d : tiled_dims) {
                i64 extent_pts = tile.box.extent(d) + 1;
                tile.size_budget = checked_add(tile.size_budget, extent_pts);
                if (extent_pts != s) tile.full = false;
            }
            tile.points = std::move(pts);
            tiles.push_back(std::move(tile));
        }
        tdec.tiles.push_back(std::move(tiles));
    }
    return tdec;
}

namespace detail {

inline size_t find_equation_index(const Program& program, const std::string& target) {
    for (size_t i = 0; i < program.equations.size(); ++i)
        if (equation_target(program.equations[i]) == target) return i;
    throw ModelError("no equation for " + target);
}

inline size_t find_variable_index(const Program& program, const std::string& name) {
    for (size_t i = 0; i < program.variables.size(); ++i)
        if (program.variables[i].name == name) return i;
    throw ModelError("unknown variable " + name);
}

}  // namespace detail

/// Replaces the reduce equation with the two-level chain through the slice
/// partials: TempX folds each slice, the result folds the partials.
inline Program rewrite_sliced(const Program& program, const SliceDecomposition& dec) {
    Program out = program;
    const int n_par = static_cast<int>(program.params.size());

    std::vector<IntVec> temp_points;
    for (const auto& sl : dec.slices) temp_points.push_back(concat(sl.owner, sl.t));
    Variable temp_var{dec.temp_var,
                      Domain::explicit_set(dec.z_dims + dec.t_dims, program.params, temp_points)};

    size_t var_pos = detail::find_variable_index(out, dec.result_var);
    out.variables.insert(out.variables.begin() + var_pos, temp_var);

    ReduceEquation temp_eq;
    temp_eq.target = dec.temp_var;
    temp_eq.op = dec.op;
    temp_eq.projection = dec.projection.stack(dec.lambda_r);
    temp_eq.body = dec.body_var;

    ReduceEquation result_eq;
    result_eq.target = dec.result_var;
    result_eq.op = dec.op;
    result_eq.projection = drop_last_inputs(dec.z_dims + dec.t_dims, n_par, dec.t_dims);
    result_eq.body = dec.temp_var;

    size_t eq_pos = detail::find_equation_index(out, dec.result_var);
    out.equations[eq_pos] = result_eq;
    out.equations.insert(out.equations.begin() + eq_pos, temp_eq);
    return out;
}

/// Three-level chain: tiles fold body points, slice partials fold tiles, the
/// result folds the partials. The per-slice tile grouping is integer division
/// from the slice origin, so the tile equation carries explicit groups.
inline Program rewrite_tiled(const Program& program, const TileDecomposition& tdec) {
    const SliceDecomposition& dec = tdec.dec;
    Program out = program;
    const int n_par = static_cast<int>(program.params.size());

    std::vector<IntVec> temp_points, tile_points;
    ReduceEquation tile_eq;
    tile_eq.target = tdec.tile_var;
    tile_eq.op = dec.op;
    tile_eq.body = dec.body_var;
    tile_eq.finite_groups = true;
    for (size_t si = 0; si < dec.slices.size(); ++si) {
        const Slice& sl = dec.slices[si];
        temp_points.push_back(concat(sl.owner, sl.t));
        for (const Tile& tile : tdec.tiles[si]) {
            IntVec key = concat(concat(sl.owner, sl.t), IntVec{tile.id});
            tile_points.push_back(key);
            tile_eq.groups[key] = tile.points;
        }
    }

    Variable tile_var{
        tdec.tile_var,
        Domain::explicit_set(dec.z_dims + dec.t_dims + 1, program.params, tile_points)};
    Variable temp_var{dec.temp_var,
                      Domain::explicit_set(dec.z_dims + dec.t_dims, program.params, temp_points)};

    size_t var_pos = detail::find_variable_index(out, dec.result_var);
    out.variables.insert(out.variables.begin() + var_pos, temp_var);
    out.variables.insert(out.variables.begin() + var_pos, tile_var);

    ReduceEquation temp_eq;
    temp_eq.target = dec.temp_var;
    temp_eq.op = dec.op;
    temp_eq.projection = drop_last_inputs(dec.z_dims + dec.t_dims + 1, n_par, 1);
    temp_eq.body = tdec.tile_var;

    ReduceEquation result_eq;
    result_eq.target = dec.result_var;
    result_eq.op = dec.op;
    result_eq.projection = drop_last_inputs(dec.z_dims + dec.t_dims, n_par, dec.t_dims);
    result_eq.body = dec.temp_var;

    size_t eq_pos = detail::find_equation_index(out, dec.result_var);
    out.equations[eq_pos] = result_eq;
    out.equations.insert(out.equations.begin() + eq_pos, temp_eq);
    out.equations.insert(out.equations.begin() + eq_pos, tile_eq);
    return out;
}

}  // namespace redtile
