#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "redtile/program.hpp"
#include "redtile/schedule.hpp"
#include "redtile/values.hpp"

namespace redtile {

struct SimulationError : std::runtime_error {
    explicit SimulationError(const std::string& what) : std::runtime_error(what) {}
};

enum class EventKind { Compute, Accumulate };

/// One machine step at one target cell. Compute events install a value (a
/// pointwise evaluation or the first operand of an accumulation); accumulate
/// events apply exactly one binary fold of the running accumulator with one
/// operand.
struct Event {
    IntVec time;
    EventKind kind = EventKind::Compute;
    std::string var;
    IntVec point;
    std::vector<std::pair<std::string, IntVec>> sources;
    int ops = 0;
};

enum class ViolationKind { ConcurrentWrite, Causality, FanIn };

inline std::string violation_kind_name(ViolationKind k) {
    switch (k) {
        case ViolationKind::ConcurrentWrite: return "concurrent-write";
        case ViolationKind::Causality: return "causality";
        case ViolationKind::FanIn: return "fan-in";
    }
    return "?";
}

struct Violation {
    ViolationKind kind;
    IntVec time;
    std::string var;
    IntVec point;
    std::vector<size_t> events;
    std::string detail;
};

struct MachineTrace {
    std::vector<Event> events;  // sorted by (time, var, point, emission order)
    std::map<std::string, PointValues> values;
};

namespace detail {

inline std::vector<IntVec> reduce_operands(const Program& program, const ReduceEquation& eq,
                                           const IntVec& z, const IntVec& params) {
    if (eq.finite_groups) {
        auto it = eq.groups.find(z);
        return it == eq.groups.end() ? std::vector<IntVec>{} : it->second;
    }
    Domain fiber = preimage(eq.projection, z, program.var(eq.body).domain, params);
    return enumerate_domain(fiber, params);
}

}  // namespace detail

/// Exact reference evaluation: equations in dependence order, reductions
/// folded in lexicographic point order (any order is equivalent since the
/// operators commute and associate).
inline std::map<std::string, PointValues> oracle(const Program& program, const IntVec& params,
                                                 const InputValues& inputs) {
    std::map<std::string, PointValues> values;
    for (const auto& [name, pv] : inputs) values[name] = pv;

    std::map<std::pair<std::string, IntVec>, int> state;
    std::function<i64(const std::string&, const IntVec&)> value =
        [&](const std::string& var, const IntVec& z) -> i64 {
        auto vit = values.find(var);
        if (vit != values.end()) {
            auto pit = vit->second.find(z);
            if (pit != vit->second.end()) return pit->second;
        }
        if (program.is_input(var))
            throw SimulationError("no value for input " + var + vec_str(z));
        auto key = std::make_pair(var, z);
        auto sit = state.find(key);
        if (sit != state.end() && sit->second == 1)
            throw SimulationError("dependence cycle through " + var + vec_str(z));
        state[key] = 1;
        const Equation* eq = program.defining_equation(var);
        if (!eq) throw SimulationError("variable " + var + " has no defining equation");
        i64 result;
        if (std::holds_alternative<PointwiseEquation>(*eq)) {
            const auto& pw = std::get<PointwiseEquation>(*eq);
            std::function<i64(const std::shared_ptr<const AffineExpr::Node>&)> ev =
                [&](const std::shared_ptr<const AffineExpr::Node>& n) -> i64 {
                switch (n->kind) {
                    case AffineExpr::Kind::Literal: return n->value;
                    case AffineExpr::Kind::Access: return value(n->var, n->map.eval(z, params));
                    case AffineExpr::Kind::Add: return checked_add(ev(n->a), ev(n->b));
                    case AffineExpr::Kind::Sub: return checked_sub(ev(n->a), ev(n->b));
                    case AffineExpr::Kind::Scale: return checked_mul(n->value, ev(n->a));
                }
                throw SimulationError("bad expression");
            };
            result = ev(pw.rhs.node);
        } else {
            const auto& red = std::get<ReduceEquation>(*eq);
            auto pts = detail::reduce_operands(program, red, z, params);
            if (pts.empty())
                throw EmptyReductionDomainError("reduction over an empty domain at " + var +
                                                vec_str(z));
            std::sort(pts.begin(), pts.end());
            i64 acc = value(red.body, pts[0]);
            for (size_t k = 1; k < pts.size(); ++k)
                acc = apply_op(red.op, acc, value(red.body, pts[k]));
            result = acc;
        }
        state[key] = 2;
        values[var][z] = result;
        return result;
    };

    for (const auto& v : program.variables) {
        if (program.is_input(v.name)) continue;
        for (const auto& z : enumerate_domain(v.domain, params)) value(v.name, z);
    }
    return values;
}

/// Executes the scheduled program. Pointwise points compute at exactly their
/// scheduled instant. An accumulation folds its operands into the target cell
/// one binary step at a time, in increasing order of operand availability,
/// never before an operand exists and never past the target's scheduled
/// completion: when the deadline leaves too few steps, the surplus folds land
/// on the deadline itself, which the exclusive-write check then reports.
inline MachineTrace simulate(const Program& program, const Schedule& schedule,
                             const IntVec& params, const InputValues& inputs) {
    for (const auto& v : program.variables) {
        if (!program.is_input(v.name) && !schedule.has(v.name))
            throw SimulationError("variable " + v.name + " is not scheduled");
    }

    MachineTrace trace;

    auto availability = [&](const std::string& var, const IntVec& p) -> IntVec {
        if (schedule.has(var)) return schedule.eval(var, p, params);
        return IntVec(schedule.time_dims, 0);  // unscheduled input
    };

    auto sorted_operands = [&](const ReduceEquation& red, const IntVec& z) {
        auto pts = detail::reduce_operands(program, red, z, params);
        if (pts.empty())
            throw EmptyReductionDomainError("reduction over an empty domain at " + red.target +
                                            vec_str(z));
        std::vector<std::pair<IntVec, IntVec>> operands;  // (availability, point)
        operands.reserve(pts.size());
        for (const auto& p : pts) operands.emplace_back(availability(red.body, p), p);
        std::sort(operands.begin(), operands.end());
        return operands;
    };

    // Cell values produced by replaying the machine's own fold order; the
    // lexicographic-order reference evaluator stays an independent check.
    for (const auto& [name, pv] : inputs) trace.values[name] = pv;
    std::map<std::pair<std::string, IntVec>, int> state;
    std::function<i64(const std::string&, const IntVec&)> cell_value =
        [&](const std::string& var, const IntVec& z) -> i64 {
        auto vit = trace.values.find(var);
        if (vit != trace.values.end()) {
            auto pit = vit->second.find(z);
            if (pit != vit->second.end()) return pit->second;
        }
        if (program.is_input(var))
            throw SimulationError("no value for input " + var + vec_str(z));
        auto key = std::make_pair(var, z);
        auto sit = state.find(key);
        if (sit != state.end() && sit->second == 1)
            throw SimulationError("dependence cycle through " + var + vec_str(z));
        state[key] = 1;
        const Equation* eq = program.defining_equation(var);
        if (!eq) throw SimulationError("variable " + var + " has no defining equation");
        i64 result;
        if (std::holds_alternative<PointwiseEquation>(*eq)) {
            const auto& pw = std::get<PointwiseEquation>(*eq);
            std::function<i64(const std::shared_ptr<const AffineExpr::Node>&)> ev =
                [&](const std::shared_ptr<const AffineExpr::Node>& n) -> i64 {
                switch (n->kind) {
                    case AffineExpr::Kind::Literal: return n->value;
                    case AffineExpr::Kind::Access:
                        return cell_value(n->var, n->map.eval(z, params));
                    case AffineExpr::Kind::Add: return checked_add(ev(n->a), ev(n->b));
                    case AffineExpr::Kind::Sub: return checked_sub(ev(n->a), ev(n->b));
                    case AffineExpr::Kind::Scale: return checked_mul(n->value, ev(n->a));
                }
                throw SimulationError("bad expression");
            };
            result = ev(pw.rhs.node);
        } else {
            const auto& red = std::get<ReduceEquation>(*eq);
            auto operands = sorted_operands(red, z);
            i64 acc = cell_value(red.body, operands[0].second);
            for (size_t k = 1; k < operands.size(); ++k)
                acc = apply_op(red.op, acc, cell_value(red.body, operands[k].second));
            result = acc;
        }
        state[key] = 2;
        trace.values[var][z] = result;
        return result;
    };
    for (const auto& v : program.variables) {
        if (program.is_input(v.name)) continue;
        for (const auto& z : enumerate_domain(v.domain, params)) cell_value(v.name, z);
    }

    for (const auto& v : program.variables) {
        if (program.is_input(v.name)) continue;
        const Equation* eq = program.defining_equation(v.name);
        for (const auto& z : enumerate_domain(v.domain, params)) {
            IntVec deadline = schedule.eval(v.name, z, params);
            if (std::holds_alternative<PointwiseEquation>(*eq)) {
                const auto& pw = std::get<PointwiseEquation>(*eq);
                std::vector<std::pair<std::string, AffineFunction>> accesses;
                detail::collect_accesses(pw.rhs.node, accesses);
                Event e;
                e.time = deadline;
                e.kind = EventKind::Compute;
                e.var = v.name;
                e.point = z;
                for (const auto& [w, map] : accesses)
                    e.sources.emplace_back(w, map.eval(z, params));
                trace.events.push_back(std::move(e));
            } else {
                const auto& red = std::get<ReduceEquation>(*eq);
                auto operands = sorted_operands(red, z);

                IntVec when = operands[0].first;
                if (lex_less(deadline, when)) when = deadline;
                Event dep;
                dep.time = when;
                dep.kind = EventKind::Compute;
                dep.var = v.name;
                dep.point = z;
                dep.sources.emplace_back(red.body, operands[0].second);
                trace.events.push_back(std::move(dep));

                for (size_t k = 1; k < operands.size(); ++k) {
                    IntVec ideal = lex_max(operands[k].first, plus_inner(when, 1));
                    when = lex_less(deadline, ideal) ? deadline : ideal;
                    Event f;
                    f.time = when;
                    f.kind = EventKind::Accumulate;
                    f.var = v.name;
                    f.point = z;
                    f.ops = 1;
                    f.sources.emplace_back(red.body, operands[k].second);
                    trace.events.push_back(std::move(f));
                }
            }
        }
    }

    std::stable_sort(trace.events.begin(), trace.events.end(),
                     [](const Event& a, const Event& b) {
                         if (a.time != b.time) return lex_less(a.time, b.time);
                         if (a.var != b.var) return a.var < b.var;
                         return a.point < b.point;
                     });
    return trace;
}

/// At most one write per cell per time step.
inline std::vector<Violation> check_exclusive_writes(const MachineTrace& trace) {
    std::vector<Violation> out;
    size_t i = 0;
    while (i < trace.events.size()) {
        size_t j = i + 1;
        while (j < trace.events.size() && trace.events[j].time == trace.events[i].time &&
               trace.events[j].var == trace.events[i].var &&
               trace.events[j].point == trace.events[i].point)
            ++j;
        if (j - i >= 2) {
            Violation v;
            v.kind = ViolationKind::ConcurrentWrite;
            v.time = trace.events[i].time;
            v.var = trace.events[i].var;
            v.point = trace.events[i].point;
            for (size_t k = i; k < j; ++k) v.events.push_back(k);
            v.detail = std::to_string(j - i) + " writes to " + v.var + vec_str(v.point) +
                       " at time " + vec_str(v.time);
            out.push_back(std::move(v));
        }
        i = j;
    }
    return out;
}

/// Every consumed value must be produced early enough: pointwise reads wait
/// out the equation latency, accumulation folds may run the step the operand
/// appears. Reads of unscheduled inputs never violate.
inline std::vector<Violation> check_causality(const MachineTrace& trace, const Schedule& schedule,
                                              const Program& program, const IntVec& params) {
    std::map<std::string, i64> latency;
    for (const auto& eq : program.equations)
        if (std::holds_alternative<PointwiseEquation>(eq)) {
            const auto& pw = std::get<PointwiseEquation>(eq);
            latency[pw.target] = pw.latency;
        }

    std::vector<Violation> out;
    for (size_t i = 0; i < trace.events.size(); ++i) {
        const Event& e = trace.events[i];
        bool pointwise = latency.count(e.var) > 0;
        for (const auto& [w, p] : e.sources) {
            if (!schedule.has(w)) continue;  // unscheduled input, available from the start
            IntVec avail = schedule.eval(w, p, params);
            IntVec required = pointwise ? plus_inner(avail, latency[e.var]) : avail;
            if (lex_less(e.time, required)) {
                Violation v;
                v.kind = ViolationKind::Causality;
                v.time = e.time;
                v.var = e.var;
                v.point = e.point;
                v.events.push_back(i);
                v.detail = e.var + vec_str(e.point) + " at " + vec_str(e.time) + " consumes " + w +
                           vec_str(p) + " available at " + vec_str(avail);
                out.push_back(std::move(v));
            }
        }
    }
    return out;
}

/// Structural bound: computes install one value, accumulates fold exactly one
/// operand into the running cell.
inline std::vector<Violation> check_fan_in(const MachineTrace& trace) {
    std::vector<Violation> out;
    for (size_t i = 0; i < trace.events.size(); ++i) {
        const Event& e = trace.events[i];
        bool bad = e.kind == EventKind::Accumulate ? (e.ops != 1 || e.sources.size() != 1)
                                                   : (e.ops != 0);
        if (bad) {
            Violation v;
            v.kind = ViolationKind::FanIn;
            v.time = e.time;
            v.var = e.var;
            v.point = e.point;
            v.events.push_back(i);
            v.detail = "event exceeds binary fan-in";
            out.push_back(std::move(v));
        }
    }
    return out;
}

}  // namespace redtile
