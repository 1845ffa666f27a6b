#include <catch2/catch_amalgamated.hpp>

#include "redtile/decompose.hpp"
#include "redtile/parser.hpp"
#include "redtile/simulate.hpp"

#include "support/helpers.hpp"

using namespace redtile;
using testutil::v;

namespace {

const ReduceEquation& first_reduce(const Program& p) {
    for (const auto& eq : p.equations)
        if (std::holds_alternative<ReduceEquation>(eq)) return std::get<ReduceEquation>(eq);
    throw std::runtime_error("no reduce equation");
}

/// 1-D body of `n` points folded into a scalar, sliced as a single slice.
Program line_program(int n) {
    std::string text = "input R {j | 0<=j and j<=" + std::to_string(n - 1) +
                       "};\nvar X {};\nX() = reduce(+, (j -> ), R(j));\n";
    return parse_program(text);
}

}  // namespace

TEST_CASE("triangle slices by column have growing sizes", "[decompose]") {
    Program p = testutil::load_fixture("triangle_sum.sare");
    AffineFunction lam = parse_affine_map("(i,j -> i)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, v({3}));
    REQUIRE(dec.slices.size() == 4);
    IntVec sizes;
    for (const auto& sl : dec.slices) sizes.push_back(sl.size);
    CHECK(sizes == v({1, 1, 2, 3}));  // slice t holds t+1 points, diagonal t, floored at 1
    for (i64 t = 0; t <= 3; ++t) {
        CHECK(dec.slices[t].t == v({t}));
        CHECK(static_cast<i64>(dec.slices[t].points.size()) == t + 1);
    }
    REQUIRE(dec.owners.size() == 1);
    CHECK(dec.owners[0].slice_count == 4);
    CHECK(dec.owners[0].size_prime == 4);
    CHECK(dec.owners[0].first_t == v({0}));
    CHECK(dec.owners[0].last_t == v({3}));
    CHECK(dec.owners[0].span == 3);
}

TEST_CASE("row fiber slices are singletons", "[decompose]") {
    Program p = testutil::load_fixture("row_sums.sare");
    AffineFunction lam = parse_affine_map("(i,j -> j)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, v({3}));
    const OwnerInfo& o3 = dec.owner(v({3}));
    CHECK(o3.slice_count == 4);
    CHECK(o3.size_prime == 4);
    int singles = 0;
    for (const auto& sl : dec.slices)
        if (sl.owner == v({3})) {
            CHECK(sl.size == 1);
            CHECK(sl.dims == 0);
            CHECK(sl.points.size() == 1);
            ++singles;
        }
    CHECK(singles == 4);
}

TEST_CASE("a constant body schedule collapses to one slice", "[decompose]") {
    Program p = testutil::load_fixture("row_sums.sare");
    AffineFunction lam = parse_affine_map("(i,j -> 0)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, v({3}));
    for (const auto& o : dec.owners) {
        CHECK(o.slice_count == 1);
        CHECK(o.first_t == v({0}));
        CHECK(o.last_t == v({0}));
        CHECK(o.span == 0);
    }
    CHECK(dec.owner(v({3})).body_count == 4);
    // box diagonal of the full fiber, floored at 1 for the one-point fiber
    CHECK(dec.slices[0].size == 1);   // owner (0)
    CHECK(dec.slices[3].size == 3);   // owner (3)
}

TEST_CASE("slices partition the reduction domain", "[decompose][property]") {
    Program p = testutil::load_fixture("triangle_sum.sare");
    for (const char* lam_text : {"(i,j -> i)", "(i,j -> j)", "(i,j -> i-j)", "(i,j -> i+j)"}) {
        AffineFunction lam = parse_affine_map(lam_text, p.params);
        SliceDecomposition dec = slice(p, first_reduce(p), lam, v({5}));
        std::set<IntVec> seen;
        size_t total = 0;
        for (const auto& sl : dec.slices) {
            for (const auto& pt : sl.points) CHECK(lam.eval(pt, v({5})) == sl.t);
            total += sl.points.size();
            for (const auto& pt : sl.points) CHECK(seen.insert(pt).second);
        }
        CHECK(total == 21u);
    }
}

TEST_CASE("nine-point slice tiles into three full tiles at s=3", "[tile]") {
    Program p = line_program(9);
    AffineFunction lam = parse_affine_map("(j -> 0)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, {});
    TileDecomposition tdec = tile_slices(dec, 3);
    REQUIRE(tdec.tiles.size() == 1);
    CHECK(tdec.tile_count(0) == 3);
    for (const Tile& t : tdec.tiles[0]) {
        CHECK(t.full);
        CHECK(t.points.size() == 3);
        CHECK(t.size_budget == 3);
    }
}

TEST_CASE("unit tiles are singletons", "[tile]") {
    Program p = line_program(9);
    AffineFunction lam = parse_affine_map("(j -> 0)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, {});
    TileDecomposition tdec = tile_slices(dec, 1);
    CHECK(tdec.tile_count(0) == 9);
    for (const Tile& t : tdec.tiles[0]) CHECK(t.points.size() == 1);
}

TEST_CASE("a dangling partial tile keeps its actual extent", "[tile]") {
    Program p = line_program(7);
    AffineFunction lam = parse_affine_map("(j -> 0)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, {});
    TileDecomposition tdec = tile_slices(dec, 3);
    REQUIRE(tdec.tile_count(0) == 3);
    std::vector<size_t> sizes;
    for (const Tile& t : tdec.tiles[0]) sizes.push_back(t.points.size());
    CHECK(sizes == std::vector<size_t>{3, 3, 1});
    CHECK_FALSE(tdec.tiles[0][2].full);
    CHECK(tdec.tiles[0][2].size_budget == 1);
    CHECK(tdec.tiles[0][2].id == 3);
}

TEST_CASE("tiles partition every slice", "[tile][property]") {
    Program p = testutil::load_fixture("square_sum.sare");
    AffineFunction lam = parse_affine_map("(i,j -> i)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, v({9}));
    for (i64 s : {1, 2, 3, 4, 9, 20}) {
        TileDecomposition tdec = tile_slices(dec, s);
        for (size_t si = 0; si < dec.slices.size(); ++si) {
            std::set<IntVec> seen;
            size_t total = 0;
            for (const Tile& t : tdec.tiles[si]) {
                total += t.points.size();
                for (const auto& pt : t.points) CHECK(seen.insert(pt).second);
            }
            CHECK(total == dec.slices[si].points.size());
            if (s == 1) CHECK(tdec.tile_count(si) == static_cast<i64>(dec.slices[si].points.size()));
            if (s >= 9) CHECK(tdec.tile_count(si) == 1);
        }
    }
}

TEST_CASE("sliced rewrite builds the two-level chain", "[rewrite]") {
    Program p = testutil::load_fixture("triangle_sum.sare");
    AffineFunction lam = parse_affine_map("(i,j -> i)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, v({3}));
    Program q = rewrite_sliced(p, dec);
    REQUIRE(q.find_var("TempX") != nullptr);
    REQUIRE(q.equations.size() == 2);
    const auto& temp_eq = std::get<ReduceEquation>(q.equations[0]);
    const auto& result_eq = std::get<ReduceEquation>(q.equations[1]);
    CHECK(temp_eq.target == "TempX");
    CHECK(temp_eq.body == "R");
    CHECK(result_eq.target == "X");
    CHECK(result_eq.body == "TempX");
    // the stacked projection carries both the fiber map and the slice time
    CHECK(temp_eq.projection.eval(v({2, 1}), v({3})) == v({2}));
    CHECK(enumerate_domain(q.var("TempX").domain, v({3})).size() == 4);
}

TEST_CASE("rewrites preserve values exactly", "[rewrite][property]") {
    int checked = 0;
    for (uint64_t seed = 1; checked < 100; ++seed) {
        auto rp = testutil::random_program(seed);
        Program p = parse_program(rp.text);
        IntVec params = p.bind_params(rp.params);
        InputValues inputs = materialize_inputs(p, params, seed);
        auto expected = oracle(p, params, inputs);
        for (const auto& eq : p.equations) {
            if (!std::holds_alternative<ReduceEquation>(eq)) continue;
            const auto& red = std::get<ReduceEquation>(eq);
            auto cands = redtile::detail::lambda_candidates(
                p.var(red.body).domain, static_cast<int>(p.params.size()), params);
            AffineFunction lam = cands[seed % cands.size()];
            SliceDecomposition dec = slice(p, red, lam, params);
            Program q = rewrite_sliced(p, dec);
            auto got = oracle(q, params, inputs);
            for (const auto& [var, pv] : expected) {
                INFO(rp.text << " reduce " << red.target);
                CHECK(got.at(var) == pv);
            }
            TileDecomposition tdec = tile_slices(dec, 1 + seed % 4);
            Program qt = rewrite_tiled(p, tdec);
            auto got_t = oracle(qt, params, inputs);
            for (const auto& [var, pv] : expected) CHECK(got_t.at(var) == pv);
            ++checked;
        }
    }
}

TEST_CASE("degenerate chain with one slice and one tile stays correct", "[rewrite]") {
    Program p = line_program(5);
    AffineFunction lam = parse_affine_map("(j -> 0)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, {});
    CHECK(dec.owners[0].slice_count == 1);
    TileDecomposition tdec = tile_slices(dec, 16);  // one tile covering the slice
    CHECK(tdec.tile_count(0) == 1);
    Program q = rewrite_tiled(p, tdec);
    InputValues inputs = materialize_inputs(p, {}, 3);
    CHECK(oracle(q, {}, inputs).at("X") == oracle(p, {}, inputs).at("X"));
}

TEST_CASE("tiled rewrite keeps singleton-slice programs intact", "[rewrite]") {
    Program p = testutil::load_fixture("row_sums.sare");
    AffineFunction lam = parse_affine_map("(i,j -> j)", p.params);
    SliceDecomposition dec = slice(p, first_reduce(p), lam, v({4}));
    TileDecomposition tdec = tile_slices(dec, 1);
    for (size_t si = 0; si < dec.slices.size(); ++si) CHECK(tdec.tile_count(si) == 1);
    Program q = rewrite_tiled(p, tdec);
    InputValues inputs = materialize_inputs(p, v({4}), 11);
    CHECK(oracle(q, v({4}), inputs).at("X") == oracle(p, v({4}), inputs).at("X"));
}
