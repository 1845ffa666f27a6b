#include <catch2/catch_amalgamated.hpp>

#include "redtile/parser.hpp"
#include "redtile/pipeline.hpp"
#include "redtile/plot.hpp"

#include "support/helpers.hpp"

using namespace redtile;
using testutil::v;

namespace {

size_t count_occurrences(const std::string& text, const std::string& needle) {
    size_t n = 0, pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        ++n;
        pos += needle.size();
    }
    return n;
}

}  // namespace

TEST_CASE("triangle plot shows every point and one band per slice", "[plot]") {
    Program p = testutil::load_fixture("triangle_sum.sare");
    RunConfig config;
    config.param_bindings = {{"N", 9}};
    config.regime = Regime::Fixed;
    config.lambda_r_text = "(i,j -> i)";
    ScheduleRun run = run_schedule(p, config);
    REQUIRE(run.feasible());

    PlotRequest req;
    req.program = &run.executed;
    req.schedule = &run.schedule;
    req.dec = &run.reduces[0].dec;
    req.var = "R";
    req.params = run.param_values;
    std::string svg = render_svg(req);
    CHECK(count_occurrences(svg, "class=\"pt\"") == 55);
    CHECK(count_occurrences(svg, "class=\"slice-band\"") == 10);
    CHECK(svg.rfind("<?xml", 0) == 0);
}

TEST_CASE("tiled plot outlines every tile", "[plot]") {
    Program p = testutil::load_fixture("square_sum.sare");
    RunConfig config;
    config.param_bindings = {{"N", 9}};
    config.regime = Regime::Tiled;
    config.lambda_r_text = "(i,j -> i)";
    config.tile_size = 3;
    ScheduleRun run = run_schedule(p, config);
    REQUIRE(run.feasible());

    PlotRequest req;
    req.program = &run.executed;
    req.schedule = &run.schedule;
    req.dec = &run.reduces[0].dec;
    req.tdec = &*run.reduces[0].tdec;
    req.var = "R";
    req.params = run.param_values;
    std::string svg = render_svg(req);
    CHECK(count_occurrences(svg, "class=\"pt\"") == 90);
    CHECK(count_occurrences(svg, "class=\"tile-outline\"") == 30);  // 10 slices x 3 tiles
}

TEST_CASE("plotting is deterministic", "[plot]") {
    Program p = testutil::load_fixture("triangle_sum.sare");
    RunConfig config;
    config.param_bindings = {{"N", 5}};
    config.regime = Regime::Fixed;
    config.lambda_r_text = "(i,j -> i)";
    ScheduleRun run = run_schedule(p, config);
    REQUIRE(run.feasible());
    PlotRequest req;
    req.program = &run.executed;
    req.schedule = &run.schedule;
    req.var = "R";
    req.params = run.param_values;
    CHECK(render_svg(req) == render_svg(req));
}

TEST_CASE("non-planar variables are rejected by the renderer", "[plot]") {
    Program p = parse_program(R"(
input R {i,j,k | 0<=i and i<=1 and 0<=j and j<=1 and 0<=k and k<=1};
var X {};
X() = reduce(+, (i,j,k -> ), R(i,j,k));
)");
    PlotRequest req;
    req.program = &p;
    req.var = "R";
    req.params = {};
    CHECK_THROWS_AS(render_svg(req), ModelError);
}
