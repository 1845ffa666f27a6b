#include <filesystem>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "redtile/json_io.hpp"
#include "redtile/pipeline.hpp"
#include "redtile/plot.hpp"

namespace fs = std::filesystem;
using namespace redtile;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 1;
constexpr int kInfeasible = 2;
constexpr int kVerificationFailure = 3;

struct CommonArgs {
    std::string input;
    std::vector<std::string> params;
    std::string out_dir = "out";
    uint64_t seed = 42;
};

std::map<std::string, i64> parse_param_args(const std::vector<std::string>& args) {
    std::map<std::string, i64> binding;
    for (const auto& arg : args) {
        std::stringstream ss(arg);
        std::string item;
        while (std::getline(ss, item, ',')) {
            auto eq = item.find('=');
            if (eq == std::string::npos)
                throw PipelineError("--params expects name=value, got '" + item + "'");
            std::string name = item.substr(0, eq);
            i64 value = 0;
            try {
                value = std::stoll(item.substr(eq + 1));
            } catch (const std::exception&) {
                throw PipelineError("--params value for " + name + " is not an integer");
            }
            if (binding.count(name))
                throw PipelineError("parameter " + name + " bound more than once");
            binding[name] = value;
        }
    }
    return binding;
}

Program load_program(const std::string& path) {
    return parse_program(read_text_file(path));
}

json affine_to_json(const AffineFunction& fn) {
    return json{{"index_dims", fn.n_in}, {"matrix", fn.rows}, {"constant", fn.constant}};
}

AffineFunction affine_from_json(const json& j, int n_par) {
    return AffineFunction(j.at("index_dims").get<int>(), n_par,
                          j.at("matrix").get<std::vector<IntVec>>(),
                          j.at("constant").get<IntVec>());
}

json run_to_schedule_json(const ScheduleRun& run) {
    json j;
    j["schedule"] = schedule_to_json(run.schedule, run.original.params, run.param_values);
    j["regime"] = regime_name(run.regime);
    json lr = json::object();
    for (const auto& info : run.reduces) lr[info.body] = affine_to_json(info.lambda_r);
    j["lambda_r"] = std::move(lr);
    json ts = json::object();
    for (const auto& info : run.reduces)
        if (info.tdec) ts[info.target] = info.tdec->tile_size;
    j["tile_sizes"] = std::move(ts);
    return j;
}

json run_to_report_json(const ScheduleRun& run) {
    json j;
    j["regime"] = regime_name(run.regime);
    json params = json::object();
    for (size_t k = 0; k < run.original.params.size(); ++k)
        params[run.original.params[k]] = run.param_values[k];
    j["params"] = std::move(params);
    j["feasible"] = run.feasible();
    j["status"] = run.status == SolveStatus::Feasible              ? "feasible"
                  : run.status == SolveStatus::InfeasibleWithinBound ? "infeasible_within_bound"
                                                                     : "provably_infeasible";
    j["note"] = run.note;
    if (run.feasible()) {
        j["makespan"] = run.makespan;
        json scheds = json::object();
        for (const auto& [name, fn] : run.schedule.fns) scheds[name] = affine_to_json(fn);
        j["schedules"] = std::move(scheds);
    }
    json lr = json::object();
    for (const auto& info : run.reduces) lr[info.body] = affine_to_json(info.lambda_r);
    j["lambda_r"] = std::move(lr);
    json tiles = json::array();
    for (const auto& info : run.reduces) {
        if (!info.tdec) continue;
        json t;
        t["target"] = info.target;
        t["s"] = info.tdec->tile_size;
        if (info.tile_choice) {
            t["omega"] = info.tile_choice->omega;
            t["evaluated"] = info.tile_choice->evaluated;
        }
        tiles.push_back(std::move(t));
    }
    j["tile"] = std::move(tiles);
    json slack = json::array();
    for (const auto& e : run.slack) {
        slack.push_back(json{{"owner", e.owner},
                             {"t", e.t},
                             {"slack", e.slack},
                             {"size", e.size},
                             {"satisfied", e.satisfied}});
    }
    j["slack_report"] = std::move(slack);
    json conds = json::array();
    for (const auto& e : run.conditions) {
        conds.push_back(json{{"z", e.z},
                             {"span", e.span},
                             {"slice_count", e.slice_count},
                             {"size_prime", e.size_prime},
                             {"span_sufficient", e.span_sufficient},
                             {"count_sufficient", e.count_sufficient}});
    }
    j["span_conditions"] = std::move(conds);
    json flags = json::array();
    for (const auto& [var, z] : run.system.empty_reductions) flags.push_back(json::array({var, z}));
    j["empty_reductions"] = std::move(flags);
    return j;
}

std::string report_text(const ScheduleRun& run) {
    std::ostringstream os;
    os << "regime: " << regime_name(run.regime) << "\n";
    os << "status: " << (run.feasible() ? "feasible" : ("infeasible (" + run.note + ")")) << "\n";
    if (run.feasible()) {
        os << "makespan: " << vec_str(run.makespan) << "\n";
        for (const auto& [name, fn] : run.schedule.fns) {
            os << "  lambda_" << name << ": matrix=";
            for (const auto& row : fn.rows) os << vec_str(row);
            os << " const=" << vec_str(fn.constant) << "\n";
        }
    }
    for (const auto& info : run.reduces) {
        if (info.tdec)
            os << "tile size for " << info.target << ": " << info.tdec->tile_size
               << (info.tile_choice ? " (auto, omega=" + std::to_string(info.tile_choice->omega) +
                                          ")"
                                    : "")
               << "\n";
    }
    size_t sat = 0;
    for (const auto& e : run.slack) sat += e.satisfied ? 1 : 0;
    if (!run.slack.empty())
        os << "slack rule: " << sat << "/" << run.slack.size() << " slices satisfied\n";
    return os.str();
}

struct LoadedRun {
    Program program;
    Program executed;
    std::vector<ReduceInfo> reduces;
    Schedule schedule;
    IntVec param_values;
    Regime regime = Regime::Fixed;
};

LoadedRun load_run(const std::string& program_path, const std::string& schedule_path) {
    LoadedRun out;
    out.program = load_program(program_path);
    json j = load_json_file(schedule_path);
    LoadedSchedule ls;
    try {
        ls = schedule_from_json(j.at("schedule"));
        out.regime = parse_regime(j.at("regime").get<std::string>());
        if (ls.params != out.program.params)
            throw IoError("schedule/program mismatch: different parameter lists");
        std::map<std::string, AffineFunction> lambdas;
        for (auto it = j.at("lambda_r").begin(); it != j.at("lambda_r").end(); ++it)
            lambdas[it.key()] =
                affine_from_json(it.value(), static_cast<int>(out.program.params.size()));
        std::map<std::string, i64> tile_sizes;
        for (auto it = j.at("tile_sizes").begin(); it != j.at("tile_sizes").end(); ++it)
            tile_sizes[it.key()] = it.value().get<i64>();
        out.param_values = ls.param_values;
        ExecutedProgram ex = rebuild_executed(out.program, out.regime, lambdas, tile_sizes,
                                              out.param_values);
        out.executed = std::move(ex.executed);
        out.reduces = std::move(ex.reduces);
        out.schedule = ls.schedule;
    } catch (const json::exception& e) {
        throw IoError("malformed schedule file: " + std::string(e.what()));
    }
    for (const auto& v : out.executed.variables)
        if (!out.executed.is_input(v.name) && !out.schedule.has(v.name))
            throw IoError("schedule/program mismatch: no schedule for " + v.name);
    return out;
}

int write_plots(const Program& program, const Schedule* schedule,
                const std::vector<ReduceInfo>& reduces, const IntVec& params,
                const std::string& out_dir) {
    for (const auto& v : program.variables) {
        if (v.domain.n_idx != 2) {
            if (v.domain.n_idx > 2)
                std::cout << "plot: skipping " << v.name << " (" << v.domain.n_idx
                          << " index dimensions)\n";
            continue;
        }
        PlotRequest req;
        req.program = &program;
        req.schedule = schedule;
        req.var = v.name;
        req.params = params;
        for (const auto& info : reduces) {
            if (info.body == v.name) {
                req.dec = &info.dec;
                if (info.tdec) req.tdec = &*info.tdec;
            }
        }
        std::string path = out_dir + "/plot_" + v.name + ".svg";
        write_text_file(path, render_svg(req));
        std::cout << "wrote " << path << "\n";
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"redtile: schedules, tiles, and simulates reduction programs"};
    app.require_subcommand(1);

    CommonArgs sched_args, sim_args, plot_args;
    std::string regime_str = "fixed";
    std::string lambda_r_text, tile_size_str;
    i64 coeff_bound = 8;
    bool with_plot = false;

    auto* cmd_schedule = app.add_subcommand("schedule", "decompose, constrain, and solve");
    cmd_schedule->add_option("input", sched_args.input, "SARE program file")->required();
    cmd_schedule->add_option("--params", sched_args.params, "parameter binding name=value");
    cmd_schedule->add_option("--regime", regime_str, "pram | gupta | fixed | tiled");
    cmd_schedule->add_option("--lambda-r", lambda_r_text, "body schedule, e.g. \"(i,j -> i)\"");
    cmd_schedule->add_option("--tile-size", tile_size_str, "tile edge length or 'auto'");
    cmd_schedule->add_option("--coeff-bound", coeff_bound, "schedule coefficient bound");
    cmd_schedule->add_option("--seed", sched_args.seed, "input value seed");
    cmd_schedule->add_option("--out", sched_args.out_dir, "output directory");
    cmd_schedule->add_flag("--plot", with_plot, "also write SVG iteration-space plots");

    std::string schedule_path;
    auto* cmd_simulate = app.add_subcommand("simulate", "execute a schedule and check the trace");
    cmd_simulate->add_option("input", sim_args.input, "SARE program file")->required();
    cmd_simulate->add_option("--schedule", schedule_path, "schedule JSON (default <out>/schedule.json)");
    cmd_simulate->add_option("--seed", sim_args.seed, "input value seed");
    cmd_simulate->add_option("--out", sim_args.out_dir, "output directory");

    std::string plot_schedule_path;
    auto* cmd_plot = app.add_subcommand("plot", "write SVG iteration-space plots");
    cmd_plot->add_option("input", plot_args.input, "SARE program file")->required();
    cmd_plot->add_option("--schedule", plot_schedule_path, "schedule JSON (default <out>/schedule.json)");
    cmd_plot->add_option("--out", plot_args.out_dir, "output directory");

    std::string explain_path, explain_schedule;
    auto* cmd_explain = app.add_subcommand("explain", "print a constraint system");
    cmd_explain->add_option("constraints", explain_path, "constraints JSON file")->required();
    cmd_explain->add_option("--schedule", explain_schedule, "evaluate against a schedule JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(cmd_schedule)) {
            Program program = load_program(sched_args.input);
            RunConfig config;
            config.param_bindings = parse_param_args(sched_args.params);
            config.regime = parse_regime(regime_str);
            if (!lambda_r_text.empty()) config.lambda_r_text = lambda_r_text;
            if (!tile_size_str.empty()) {
                if (tile_size_str == "auto") {
                    config.tile_auto = true;
                } else {
                    try {
                        config.tile_size = std::stoll(tile_size_str);
                    } catch (const std::exception&) {
                        throw PipelineError("--tile-size expects an integer or 'auto'");
                    }
                }
            }
            config.coeff_bound = coeff_bound;
            config.seed = sched_args.seed;

            ScheduleRun run = run_schedule(program, config);
            fs::create_directories(sched_args.out_dir);
            write_text_file(sched_args.out_dir + "/report.json", run_to_report_json(run).dump(2) + "\n");
            write_text_file(sched_args.out_dir + "/report.txt", report_text(run));
            if (!run.feasible()) {
                std::cerr << "infeasible: " << run.note << "\n";
                return kInfeasible;
            }
            write_text_file(sched_args.out_dir + "/schedule.json",
                            run_to_schedule_json(run).dump(2) + "\n");
            write_text_file(sched_args.out_dir + "/constraints.json",
                            system_to_json(run.system, program.params).dump(2) + "\n");
            std::cout << report_text(run);
            if (with_plot)
                write_plots(run.executed, &run.schedule, run.reduces, run.param_values,
                            sched_args.out_dir);
            return kOk;
        }

        if (app.got_subcommand(cmd_simulate)) {
            std::string spath =
                schedule_path.empty() ? sim_args.out_dir + "/schedule.json" : schedule_path;
            LoadedRun lr = load_run(sim_args.input, spath);
            InputValues inputs = materialize_inputs(lr.program, lr.param_values, sim_args.seed);
            SimulateOutcome outcome =
                simulate_and_check(lr.executed, lr.program, lr.schedule, lr.param_values, inputs);
            fs::create_directories(sim_args.out_dir);
            write_text_file(sim_args.out_dir + "/trace.jsonl", trace_to_jsonl(outcome.trace));
            write_text_file(sim_args.out_dir + "/violations.json",
                            violations_to_json(outcome.violations).dump(2) + "\n");
            json verdict;
            verdict["violations"] = outcome.violations.size();
            verdict["values_match"] = outcome.values_match;
            verdict["mismatch"] = outcome.mismatch;
            write_text_file(sim_args.out_dir + "/simulate_report.json", verdict.dump(2) + "\n");
            std::cout << "events: " << outcome.trace.events.size()
                      << "  violations: " << outcome.violations.size()
                      << "  values: " << (outcome.values_match ? "match" : "MISMATCH") << "\n";
            if (!outcome.violations.empty() || !outcome.values_match) return kVerificationFailure;
            return kOk;
        }

        if (app.got_subcommand(cmd_plot)) {
            std::string spath =
                plot_schedule_path.empty() ? plot_args.out_dir + "/schedule.json" : plot_schedule_path;
            LoadedRun lr = load_run(plot_args.input, spath);
            fs::create_directories(plot_args.out_dir);
            return write_plots(lr.executed, &lr.schedule, lr.reduces, lr.param_values,
                               plot_args.out_dir);
        }

        if (app.got_subcommand(cmd_explain)) {
            json j = load_json_file(explain_path);
            ConstraintSystem sys = system_from_json(j);
            std::optional<VerifyResult> vr;
            Schedule sched;
            if (!explain_schedule.empty()) {
                json sj = load_json_file(explain_schedule);
                sched = schedule_from_json(sj.at("schedule")).schedule;
                vr = verify(sched, sys);
            }
            std::vector<i64> coeffs;
            if (vr) {
                coeffs.assign(sys.templates.total_unknowns, 0);
                for (const auto& tpl : sys.templates.templates) {
                    const AffineFunction& fn = sched.fn(tpl.var);
                    for (int dim = 0; dim < tpl.time_dims; ++dim) {
                        int base = tpl.first_unknown + dim * tpl.unknowns_per_dim();
                        for (int k = 0; k < tpl.n_idx + tpl.n_par; ++k)
                            coeffs[base + k] = fn.rows[dim][k];
                        coeffs[base + tpl.n_idx + tpl.n_par] = fn.constant[dim];
                    }
                }
            }
            for (const auto& c : sys.constraints) {
                std::cout << c.origin << "  " << c.instance;
                if (vr) {
                    bool ok = constraint_satisfied(c, coeffs);
                    std::cout << (ok ? "  [satisfied]" : "  [VIOLATED]");
                }
                std::cout << "\n";
            }
            if (vr) std::cout << (vr->ok ? "schedule satisfies the system\n" : "schedule violates the system\n");
            return kOk;
        }
    } catch (const OverflowError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::runtime_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kInputError;
    }
    return kInputError;
}
