#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "redtile/constraints.hpp"
#include "redtile/decompose.hpp"
#include "redtile/parser.hpp"
#include "redtile/program.hpp"
#include "redtile/schedule.hpp"
#include "redtile/simulate.hpp"
#include "redtile/solver.hpp"
#include "redtile/values.hpp"

namespace redtile {

struct PipelineError : std::runtime_error {
    explicit PipelineError(const std::string& what) : std::runtime_error(what) {}
};

enum class Regime { Pram, Gupta, Fixed, Tiled };

inline std::string regime_name(Regime r) {
    switch (r) {
        case Regime::Pram: return "pram";
        case Regime::Gupta: return "gupta";
        case Regime::Fixed: return "fixed";
        case Regime::Tiled: return "tiled";
    }
    return "?";
}

inline Regime parse_regime(const std::string& s) {
    if (s == "pram") return Regime::Pram;
    if (s == "gupta") return Regime::Gupta;
    if (s == "fixed") return Regime::Fixed;
    if (s == "tiled") return Regime::Tiled;
    throw PipelineError("unknown regime '" + s + "' (pram | gupta | fixed | tiled)");
}

struct RunConfig {
    std::map<std::string, i64> param_bindings;
    Regime regime = Regime::Fixed;
    std::optional<std::string> lambda_r_text;
    std::optional<i64> tile_size;
    bool tile_auto = false;
    i64 coeff_bound = 8;
    uint64_t seed = 42;
    int time_dims = 1;
};

struct ReduceInfo {
    std::string target;
    std::string body;
    AffineFunction lambda_r;                 // as used for slicing (t dims may be < time dims)
    SliceDecomposition dec;
    std::optional<TileDecomposition> tdec;   // tiled regime
    std::optional<TileSizeChoice> tile_choice;
};

struct ScheduleRun {
    Program original;
    Program executed;
    IntVec param_values;
    Regime regime = Regime::Fixed;
    SolveStatus status = SolveStatus::InfeasibleWithinBound;
    std::string note;
    Schedule schedule;
    ConstraintSystem system;  // the verified regime system over all scheduled variables
    std::vector<ReduceInfo> reduces;
    std::vector<SlackEntry> slack;
    std::vector<ConditionEntry> conditions;
    IntVec makespan;

    bool feasible() const { return status == SolveStatus::Feasible; }
};

namespace detail {

/// Prefixes zero output dimensions so the function lives in `dims` time dims.
inline AffineFunction pad_front_dims(const AffineFunction& fn, int dims) {
    if (fn.out_dims() > dims) throw PipelineError("schedule has too many time dimensions");
    if (fn.out_dims() == dims) return fn;
    AffineFunction zero = AffineFunction::constant_fn(fn.n_in, fn.n_par,
                                                      IntVec(dims - fn.out_dims(), 0));
    return zero.stack(fn);
}

/// Candidate slicing normals with entries in {-1, 0, 1}, per-dimension order
/// 1, 0, -1, zero vector skipped; each shifted so availability starts at 0.
inline std::vector<AffineFunction> lambda_candidates(const Domain& body_dom, int n_par,
                                                     const IntVec& params) {
    auto points = enumerate_domain(body_dom, params);
    std::vector<AffineFunction> out;
    const int d = body_dom.n_idx;
    std::vector<int> digits(d, 0);
    static const i64 order[3] = {1, 0, -1};
    bool done = d == 0;
    while (!done) {
        IntVec v(d);
        bool zero = true;
        for (int k = 0; k < d; ++k) {
            v[k] = order[digits[k]];
            zero = zero && v[k] == 0;
        }
        if (!zero && !points.empty()) {
            i64 lo = 0;
            bool first = true;
            for (const auto& p : points) {
                i64 acc = 0;
                for (int k = 0; k < d; ++k) acc = checked_add(acc, checked_mul(v[k], p[k]));
                if (first || acc < lo) lo = acc, first = false;
            }
            IntVec row(d + n_par, 0);
            for (int k = 0; k < d; ++k) row[k] = v[k];
            out.push_back(AffineFunction(d, n_par, {row}, {-lo}));
        }
        int k = d - 1;
        while (k >= 0) {
            if (++digits[k] < 3) break;
            digits[k] = 0;
            --k;
        }
        done = k < 0;
    }
    return out;
}

struct StagePlan {
    std::vector<std::vector<std::string>> groups;  // producers-first variable groups
};

/// Strongly connected components of the variable dependence graph, emitted
/// producers first.
inline StagePlan stage_plan(const Program& program, const std::set<std::string>& scheduled) {
    std::vector<std::string> vars;
    for (const auto& v : program.variables)
        if (scheduled.count(v.name)) vars.push_back(v.name);
    std::map<std::string, int> index;
    for (size_t i = 0; i < vars.size(); ++i) index[vars[i]] = static_cast<int>(i);

    std::vector<std::vector<int>> adj(vars.size());  // consumer -> producer
    for (const auto& dep : dependences(program)) {
        auto c = index.find(dep.consumer);
        auto p = index.find(dep.producer);
        if (c != index.end() && p != index.end()) adj[c->second].push_back(p->second);
    }

    // Tarjan; components pop producers-first given consumer->producer edges.
    StagePlan plan;
    std::vector<int> disc(vars.size(), -1), low(vars.size(), 0);
    std::vector<bool> on_stack(vars.size(), false);
    std::vector<int> stack;
    int timer = 0;
    std::function<void(int)> dfs = [&](int u) {
        disc[u] = low[u] = timer++;
        stack.push_back(u);
        on_stack[u] = true;
        for (int w : adj[u]) {
            if (disc[w] < 0) {
                dfs(w);
                low[u] = std::min(low[u], low[w]);
            } else if (on_stack[w]) {
                low[u] = std::min(low[u], disc[w]);
            }
        }
        if (low[u] == disc[u]) {
            std::vector<std::string> comp;
            while (true) {
                int w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp.push_back(vars[w]);
                if (w == u) break;
            }
            std::sort(comp.begin(), comp.end());
            plan.groups.push_back(std::move(comp));
        }
    };
    for (size_t i = 0; i < vars.size(); ++i)
        if (disc[i] < 0) dfs(static_cast<int>(i));
    return plan;
}

inline std::vector<const ReduceEquation*> affine_reduces(const Program& program) {
    std::vector<const ReduceEquation*> out;
    for (const auto& eq : program.equations)
        if (std::holds_alternative<ReduceEquation>(eq) &&
            !std::get<ReduceEquation>(eq).finite_groups)
            out.push_back(&std::get<ReduceEquation>(eq));
    return out;
}

}  // namespace detail

/// Builds and solves the regime pipeline for one body-schedule choice.
/// Throws only on structural errors; infeasibility comes back in the result.
/// With score_only the run stops after the result-stage solve: enough to rank
/// slicing candidates by makespan without paying for the rewrite, the
/// partial-schedule stages, or the reports.
inline ScheduleRun run_schedule_with_lambdas(const Program& program, const RunConfig& config,
                                             const std::map<std::string, AffineFunction>& lambdas,
                                             bool score_only = false) {
    ScheduleRun run;
    run.original = program;
    run.regime = config.regime;
    run.param_values = program.bind_params(config.param_bindings);
    const IntVec& params = run.param_values;
    validate_program(program, params);

    auto reduces = detail::affine_reduces(program);
    for (const auto* red : reduces) {
        if (program.defining_equation(red->body) &&
            std::holds_alternative<ReduceEquation>(*program.defining_equation(red->body)))
            throw PipelineError("reduce body " + red->body +
                                " is itself a reduction result; not supported");
    }

    // Decompose each reduction under its body schedule.
    for (const auto* red : reduces) {
        auto it = lambdas.find(red->body);
        if (it == lambdas.end()) throw PipelineError("no body schedule for " + red->body);
        ReduceInfo info;
        info.target = red->target;
        info.body = red->body;
        info.lambda_r = it->second;
        info.dec = slice(program, *red, it->second, params);
        run.reduces.push_back(std::move(info));
    }

    // Tiled regime: pick a tile edge per reduction and tile the slices.
    if (config.regime == Regime::Tiled) {
        for (auto& info : run.reduces) {
            i64 s;
            if (config.tile_auto) {
                i64 max_extent = 1;
                for (const auto& sl : info.dec.slices)
                    for (int d = 0; d < sl.box.dims(); ++d)
                        max_extent = std::max(max_extent, sl.box.extent(d) + 1);
                info.tile_choice = optimize_tile_size(info.dec, max_extent);
                s = info.tile_choice->s;
            } else if (config.tile_size) {
                s = *config.tile_size;
                if (s < 1) throw PipelineError("tile size must be at least 1");
            } else {
                throw PipelineError("tiled regime requires --tile-size <k> or auto");
            }
            info.tdec = tile_slices(info.dec, s);
        }
    }

    // The executed program: rewritten through the partial-accumulation chain
    // for the decomposed regimes, unchanged for the one-step machine model.
    run.executed = program;
    if (!score_only) {
        if (config.regime == Regime::Gupta || config.regime == Regime::Fixed) {
            for (const auto& info : run.reduces)
                run.executed = rewrite_sliced(run.executed, info.dec);
        } else if (config.regime == Regime::Tiled) {
            for (const auto& info : run.reduces)
                run.executed = rewrite_tiled(run.executed, *info.tdec);
        }
    }

    // Pinned schedules: reduce bodies carry their body schedule.
    std::map<std::string, AffineFunction> pinned;
    Schedule schedule;
    schedule.time_dims = config.time_dims;
    for (const auto& info : run.reduces) {
        AffineFunction lifted = detail::pad_front_dims(info.lambda_r, config.time_dims);
        pinned[info.body] = lifted;
        schedule.set(info.body, lifted, program.is_input(info.body));
    }

    // Stage 1: the original program's variables, producers first.
    std::set<std::string> stage1_vars;
    for (const auto& v : program.variables)
        if (!program.is_input(v.name) && !pinned.count(v.name)) stage1_vars.insert(v.name);
    detail::StagePlan plan = detail::stage_plan(program, stage1_vars);

    auto make_system = [&](const std::vector<std::string>& group_vars) {
        ConstraintSystem sys;
        sys.templates.param_values = params;
        sys.templates.time_dims = config.time_dims;
        for (const auto& name : group_vars)
            sys.templates.add(name, program.var(name).domain.n_idx,
                              enumerate_domain(program.var(name).domain, params));
        return sys;
    };

    auto emit_regime = [&](ConstraintSystem& sys, const EmitContext& ctx,
                           const std::set<std::string>& targets) {
        for (size_t k = 0; k < run.reduces.size(); ++k) {
            const auto& info = run.reduces[k];
            if (!targets.count(info.target)) continue;
            const ReduceEquation* red = reduces[k];
            switch (config.regime) {
                case Regime::Pram:
                    sys.append(pram_constraints(program, *red, ctx, &sys.empty_reductions));
                    break;
                case Regime::Gupta: sys.append(emit_slack(info.dec, ctx)); break;
                case Regime::Fixed:
                    sys.append(emit_slack(info.dec, ctx));
                    sys.append(exclusive_write_fix(info.dec, ctx));
                    break;
                case Regime::Tiled:
                    sys.append(tiled_constraints(*info.tdec, ctx, {"eq23", "eq24"}));
                    break;
            }
        }
    };

    std::map<std::string, AffineFunction> solved = pinned;
    for (const auto& group : plan.groups) {
        ConstraintSystem sys = make_system(group);
        EmitContext ctx{&sys.templates, solved, config.time_dims};
        std::set<std::string> targets(group.begin(), group.end());
        emit_regime(sys, ctx, targets);

        // Pointwise causality restricted to equations defining this group.
        Program sub = program;
        sub.equations.clear();
        for (const auto& eq : program.equations)
            if (targets.count(equation_target(eq)) &&
                std::holds_alternative<PointwiseEquation>(eq))
                sub.equations.push_back(eq);
        sys.append(pointwise_constraints(sub, ctx));

        SolveResult res = solve(sys, config.coeff_bound);
        if (res.status != SolveStatus::Feasible) {
            run.status = res.status;
            run.note = res.note;
            return run;
        }
        for (const auto& name : group) {
            solved[name] = res.schedule.fn(name);
            schedule.set(name, res.schedule.fn(name));
        }
    }

    if (score_only) {
        run.status = SolveStatus::Feasible;
        bool first = true;
        for (const auto& [name, fn] : solved) {
            if (pinned.count(name)) continue;
            for (const auto& z : enumerate_domain(program.var(name).domain, params)) {
                IntVec t = fn.eval(z, params);
                if (first || lex_less(run.makespan, t)) run.makespan = t, first = false;
            }
        }
        return run;
    }

    // Pointwise equations whose target is a pinned reduce body: their
    // causality constraints become constant checks against the pinned times.
    {
        ConstraintSystem sys;
        sys.templates.param_values = params;
        sys.templates.time_dims = config.time_dims;
        EmitContext ctx{&sys.templates, solved, config.time_dims};
        Program sub = program;
        sub.equations.clear();
        for (const auto& eq : program.equations)
            if (pinned.count(equation_target(eq)) && std::holds_alternative<PointwiseEquation>(eq))
                sub.equations.push_back(eq);
        sys.append(pointwise_constraints(sub, ctx));
        SolveResult res = solve(sys, config.coeff_bound);
        if (res.status != SolveStatus::Feasible) {
            run.status = SolveStatus::ProvablyInfeasible;
            run.note = "pinned body schedule violates causality: " + res.note;
            return run;
        }
    }

    // Stage 2/3: schedules of the partial-accumulation variables.
    for (const auto& info : run.reduces) {
        const std::string& temp = info.dec.temp_var;
        if (config.regime == Regime::Pram) break;
        if (config.regime == Regime::Gupta) {
            // Every slice partial lands one step before its result combines.
            AffineFunction proj =
                drop_last_inputs(info.dec.z_dims + info.dec.t_dims,
                                 static_cast<int>(program.params.size()), info.dec.t_dims);
            AffineFunction derived = solved.at(info.target).compose(proj).plus_inner_const(-1);
            schedule.set(temp, derived);
            solved[temp] = derived;
            continue;
        }
        // Fixed and tiled: earliest schedules under the availability bounds,
        // capped by the already-solved result times.
        ConstraintSystem sys;
        sys.templates.param_values = params;
        sys.templates.time_dims = config.time_dims;
        sys.templates.add(temp, info.dec.z_dims + info.dec.t_dims,
                          enumerate_domain(run.executed.var(temp).domain, params));
        EmitContext ctx{&sys.templates, solved, config.time_dims};
        if (config.regime == Regime::Fixed) {
            sys.append(emit_slice_bounds(info.dec, ctx));
            sys.append(emit_partial_order(info.dec, ctx));
        } else {
            sys.append(tiled_constraints(*info.tdec, ctx, {"eq22"}));
            sys.append(emit_partial_order(info.dec, ctx));
        }
        SolveResult res = solve(sys, config.coeff_bound);
        if (res.status != SolveStatus::Feasible) {
            run.status = res.status;
            run.note = "partial schedule for " + temp + ": " + res.note;
            return run;
        }
        schedule.set(temp, res.schedule.fn(temp));
        solved[temp] = res.schedule.fn(temp);

        if (config.regime == Regime::Tiled) {
            const std::string& tile = info.tdec->tile_var;
            ConstraintSystem tsys;
            tsys.templates.param_values = params;
            tsys.templates.time_dims = config.time_dims;
            tsys.templates.add(tile, info.dec.z_dims + info.dec.t_dims + 1,
                               enumerate_domain(run.executed.var(tile).domain, params));
            EmitContext tctx{&tsys.templates, solved, config.time_dims};
            tsys.append(tiled_constraints(*info.tdec, tctx, {"eq19", "eq20", "eq21"}));
            SolveResult tres = solve(tsys, config.coeff_bound);
            if (tres.status != SolveStatus::Feasible) {
                run.status = tres.status;
                run.note = "tile schedule for " + tile + ": " + tres.note;
                return run;
            }
            schedule.set(tile, tres.schedule.fn(tile));
            solved[tile] = tres.schedule.fn(tile);
        }
    }

    // Combined system over every solved variable, for verification and export.
    {
        ConstraintSystem sys;
        sys.templates.param_values = params;
        sys.templates.time_dims = config.time_dims;
        for (const auto& v : run.executed.variables) {
            if (run.executed.is_input(v.name) || pinned.count(v.name)) continue;
            if (config.regime == Regime::Gupta) {
                bool is_temp = false;
                for (const auto& info : run.reduces) is_temp = is_temp || info.dec.temp_var == v.name;
                if (is_temp) continue;  // the derived partials are not constrained
            }
            sys.templates.add(v.name, v.domain.n_idx, enumerate_domain(v.domain, params));
        }
        EmitContext ctx{&sys.templates, pinned, config.time_dims};
        std::set<std::string> all_targets;
        for (const auto& info : run.reduces) all_targets.insert(info.target);
        emit_regime(sys, ctx, all_targets);
        if (config.regime == Regime::Fixed) {
            for (const auto& info : run.reduces) {
                sys.append(emit_slice_bounds(info.dec, ctx));
                sys.append(emit_partial_order(info.dec, ctx));
            }
        } else if (config.regime == Regime::Tiled) {
            for (const auto& info : run.reduces) {
                sys.append(tiled_constraints(*info.tdec, ctx, {"eq19", "eq20", "eq21", "eq22"}));
                sys.append(emit_partial_order(info.dec, ctx));
            }
        }
        Program sub = program;
        sub.equations.clear();
        for (const auto& eq : program.equations)
            if (std::holds_alternative<PointwiseEquation>(eq)) sub.equations.push_back(eq);
        sys.append(pointwise_constraints(sub, ctx));
        run.system = std::move(sys);
    }

    VerifyResult vr = verify(schedule, run.system);
    if (!vr.ok) {
        const Constraint* c = vr.violated(run.system);
        throw PipelineError("internal: solved schedule violates " + c->origin + " " + c->instance);
    }

    run.schedule = schedule;
    run.status = SolveStatus::Feasible;
    for (const auto& info : run.reduces) {
        auto sl = slack_report(info.dec, schedule, params);
        run.slack.insert(run.slack.end(), sl.begin(), sl.end());
        auto cond = check_conditions(info.dec);
        run.conditions.insert(run.conditions.end(), cond.begin(), cond.end());
    }

    // Makespan over every scheduled point of the executed program.
    bool first = true;
    for (const auto& v : run.executed.variables) {
        if (run.executed.is_input(v.name)) continue;
        for (const auto& z : enumerate_domain(v.domain, params)) {
            IntVec t = schedule.eval(v.name, z, params);
            if (first || lex_less(run.makespan, t)) run.makespan = t, first = false;
        }
    }
    return run;
}

/// Full pipeline entry: resolves the body schedules (explicit text or search
/// over the candidate normals), then builds and solves the chosen regime.
inline ScheduleRun run_schedule(const Program& program, const RunConfig& config) {
    if (config.time_dims < 1 || config.time_dims > 2)
        throw PipelineError("time dimensionality is capped at 2");
    IntVec params = program.bind_params(config.param_bindings);
    auto reduces = detail::affine_reduces(program);

    std::vector<std::string> bodies;  // distinct, in program order
    for (const auto* red : reduces)
        if (std::find(bodies.begin(), bodies.end(), red->body) == bodies.end())
            bodies.push_back(red->body);

    if (reduces.empty()) {
        if (config.lambda_r_text) throw PipelineError("--lambda-r given but no reduction exists");
        return run_schedule_with_lambdas(program, config, {});
    }

    if (config.lambda_r_text) {
        std::map<std::string, AffineFunction> lambdas;
        AffineFunction fn = parse_affine_map(*config.lambda_r_text, program.params);
        if (fn.out_dims() < 1 || fn.out_dims() > config.time_dims)
            throw PipelineError("body schedule must have between 1 and " +
                                std::to_string(config.time_dims) + " time dimensions");
        for (const auto& body : bodies) {
            if (fn.n_in != program.var(body).domain.n_idx)
                throw PipelineError("body schedule binds " + std::to_string(fn.n_in) +
                                    " indices but Dom(" + body + ") has " +
                                    std::to_string(program.var(body).domain.n_idx));
            lambdas[body] = fn;
        }
        return run_schedule_with_lambdas(program, config, lambdas);
    }

    // Search: per-body candidate lists ranked by a result-stage-only solve,
    // then the full pipeline on the best ranks until one goes through.
    std::vector<std::vector<AffineFunction>> cands;
    for (const auto& body : bodies) {
        auto c = detail::lambda_candidates(program.var(body).domain,
                                           static_cast<int>(program.params.size()), params);
        if (c.empty()) throw PipelineError("no slicing candidates for " + body);
        cands.push_back(std::move(c));
    }
    size_t total = 1;
    for (const auto& c : cands) {
        total *= c.size();
        if (total > 256) throw PipelineError("slicing candidate space too large");
    }

    auto lambdas_for = [&](size_t index) {
        std::map<std::string, AffineFunction> lambdas;
        for (size_t k = bodies.size(); k-- > 0;) {
            lambdas[bodies[k]] = cands[k][index % cands[k].size()];
            index /= cands[k].size();
        }
        return lambdas;
    };

    struct Ranked {
        bool feasible;
        IntVec makespan;
        size_t index;
    };
    std::vector<Ranked> ranking;
    ranking.reserve(total);
    for (size_t index = 0; index < total; ++index) {
        ScheduleRun probe = run_schedule_with_lambdas(program, config, lambdas_for(index), true);
        ranking.push_back(Ranked{probe.feasible(), probe.makespan, index});
    }
    std::stable_sort(ranking.begin(), ranking.end(), [](const Ranked& a, const Ranked& b) {
        if (a.feasible != b.feasible) return a.feasible;
        if (a.feasible && a.makespan != b.makespan) return lex_less(a.makespan, b.makespan);
        return a.index < b.index;
    });

    std::optional<ScheduleRun> last;
    for (const auto& r : ranking) {
        if (!r.feasible) break;
        ScheduleRun run = run_schedule_with_lambdas(program, config, lambdas_for(r.index));
        if (run.feasible()) return run;
        if (!last) last = std::move(run);
    }
    if (last) return *last;
    return run_schedule_with_lambdas(program, config, lambdas_for(0));
}

struct ExecutedProgram {
    Program executed;
    std::vector<ReduceInfo> reduces;
};

/// Reconstructs the executed (rewritten) program from the choices a schedule
/// run recorded: regime, per-body slicing schedules, per-target tile sizes.
inline ExecutedProgram rebuild_executed(const Program& program, Regime regime,
                                        const std::map<std::string, AffineFunction>& lambdas,
                                        const std::map<std::string, i64>& tile_sizes,
                                        const IntVec& params) {
    ExecutedProgram out;
    out.executed = program;
    for (const auto* red : detail::affine_reduces(program)) {
        auto it = lambdas.find(red->body);
        if (it == lambdas.end())
            throw PipelineError("schedule file lacks a body schedule for " + red->body);
        ReduceInfo info;
        info.target = red->target;
        info.body = red->body;
        info.lambda_r = it->second;
        info.dec = slice(program, *red, it->second, params);
        if (regime == Regime::Tiled) {
            auto ts = tile_sizes.find(red->target);
            if (ts == tile_sizes.end())
                throw PipelineError("schedule file lacks a tile size for " + red->target);
            info.tdec = tile_slices(info.dec, ts->second);
        }
        out.reduces.push_back(std::move(info));
    }
    if (regime == Regime::Gupta || regime == Regime::Fixed) {
        for (const auto& info : out.reduces)
            out.executed = rewrite_sliced(out.executed, info.dec);
    } else if (regime == Regime::Tiled) {
        for (const auto& info : out.reduces)
            out.executed = rewrite_tiled(out.executed, *info.tdec);
    }
    return out;
}

struct SimulateOutcome {
    MachineTrace trace;
    std::vector<Violation> violations;
    bool values_match = true;
    std::string mismatch;
};

/// Executes the scheduled program and checks the trace: exclusive writes,
/// causality, fan-in, and exact value agreement with the reference evaluator
/// on both the executed and the original program.
inline SimulateOutcome simulate_and_check(const Program& executed, const Program& original,
                                          const Schedule& schedule, const IntVec& params,
                                          const InputValues& inputs) {
    SimulateOutcome out;
    out.trace = simulate(executed, schedule, params, inputs);
    for (auto& v : check_exclusive_writes(out.trace)) out.violations.push_back(std::move(v));
    for (auto& v : check_causality(out.trace, schedule, executed, params))
        out.violations.push_back(std::move(v));
    for (auto& v : check_fan_in(out.trace)) out.violations.push_back(std::move(v));

    auto check_against = [&](const Program& ref) {
        auto expected = oracle(ref, params, inputs);
        for (const auto& [var, pv] : expected) {
            auto it = out.trace.values.find(var);
            if (it == out.trace.values.end() || it->second != pv) {
                out.values_match = false;
                out.mismatch = "values of " + var + " differ from the reference evaluation";
                return;
            }
        }
    };
    check_against(executed);
    if (out.values_match && !(original == executed)) check_against(original);
    return out;
}

}  // namespace redtile
