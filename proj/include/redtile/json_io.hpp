#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "redtile/constraints.hpp"
#include "redtile/schedule.hpp"
#include "redtile/simulate.hpp"
#include "redtile/solver.hpp"

namespace redtile {

using nlohmann::json;

struct IoError : std::runtime_error {
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write " + path);
    os << content;
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline json load_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw IoError(path + ": " + e.what());
    }
}

// --- schedules -----------------------------------------------------------

inline json schedule_to_json(const Schedule& schedule, const std::vector<std::string>& params,
                             const IntVec& param_values) {
    json j;
    j["time_dims"] = schedule.time_dims;
    j["param_names"] = params;
    j["param_values"] = param_values;
    json vars = json::array();
    for (const auto& [name, fn] : schedule.fns) {
        json v;
        v["name"] = name;
        v["index_dims"] = fn.n_in;
        v["matrix"] = fn.rows;
        v["constant"] = fn.constant;
        v["pinned_input"] = schedule.pinned_inputs.count(name) > 0;
        vars.push_back(std::move(v));
    }
    j["variables"] = std::move(vars);
    return j;
}

struct LoadedSchedule {
    Schedule schedule;
    std::vector<std::string> params;
    IntVec param_values;
};

inline LoadedSchedule schedule_from_json(const json& j) {
    LoadedSchedule out;
    try {
        out.schedule.time_dims = j.at("time_dims").get<int>();
        out.params = j.at("param_names").get<std::vector<std::string>>();
        out.param_values = j.at("param_values").get<IntVec>();
        for (const auto& v : j.at("variables")) {
            AffineFunction fn(v.at("index_dims").get<int>(), static_cast<int>(out.params.size()),
                              v.at("matrix").get<std::vector<IntVec>>(),
                              v.at("constant").get<IntVec>());
            out.schedule.set(v.at("name").get<std::string>(), std::move(fn),
                             v.value("pinned_input", false));
        }
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed schedule file: ") + e.what());
    }
    return out;
}

// --- constraint systems ----------------------------------------------------

inline json expr_to_json(const LinExprU& e) {
    json terms = json::array();
    for (auto& [u, c] : e.terms) terms.push_back(json::array({u, c}));
    return json{{"terms", std::move(terms)}, {"const", e.constant}};
}

inline LinExprU expr_from_json(const json& j) {
    LinExprU e;
    e.constant = j.at("const").get<i64>();
    for (const auto& t : j.at("terms")) e.add_term(t.at(0).get<int>(), t.at(1).get<i64>());
    return e;
}

inline json system_to_json(const ConstraintSystem& sys, const std::vector<std::string>& params) {
    json j;
    j["param_names"] = params;
    j["param_values"] = sys.templates.param_values;
    j["time_dims"] = sys.templates.time_dims;
    json tpls = json::array();
    for (const auto& t : sys.templates.templates) {
        tpls.push_back(json{{"var", t.var},
                            {"time_dims", t.time_dims},
                            {"index_dims", t.n_idx},
                            {"first_unknown", t.first_unknown},
                            {"points", t.points}});
    }
    j["templates"] = std::move(tpls);
    json cs = json::array();
    for (const auto& c : sys.constraints) {
        json jc;
        jc["origin"] = c.origin;
        jc["instance"] = c.instance;
        jc["kind"] = c.kind == ConstraintKind::LexGe ? "lex_ge" : "slack_ge";
        json lhs = json::array(), rhs = json::array();
        for (const auto& e : c.lhs) lhs.push_back(expr_to_json(e));
        for (const auto& e : c.rhs) rhs.push_back(expr_to_json(e));
        jc["lhs"] = std::move(lhs);
        jc["rhs"] = std::move(rhs);
        if (c.kind == ConstraintKind::SlackGe) jc["bound"] = c.bound;
        cs.push_back(std::move(jc));
    }
    j["constraints"] = std::move(cs);
    json flags = json::array();
    for (const auto& [var, z] : sys.empty_reductions) flags.push_back(json::array({var, z}));
    j["empty_reductions"] = std::move(flags);
    return j;
}

inline ConstraintSystem system_from_json(const json& j) {
    ConstraintSystem sys;
    try {
        sys.templates.param_values = j.at("param_values").get<IntVec>();
        sys.templates.time_dims = j.at("time_dims").get<int>();
        for (const auto& t : j.at("templates")) {
            auto& tpl = sys.templates.add(t.at("var").get<std::string>(),
                                          t.at("index_dims").get<int>(),
                                          t.at("points").get<std::vector<IntVec>>());
            if (tpl.first_unknown != t.at("first_unknown").get<int>())
                throw IoError("inconsistent template layout in constraints file");
        }
        for (const auto& jc : j.at("constraints")) {
            Constraint c;
            c.origin = jc.at("origin").get<std::string>();
            c.instance = jc.at("instance").get<std::string>();
            c.kind = jc.at("kind").get<std::string>() == "slack_ge" ? ConstraintKind::SlackGe
                                                                    : ConstraintKind::LexGe;
            for (const auto& e : jc.at("lhs")) c.lhs.push_back(expr_from_json(e));
            for (const auto& e : jc.at("rhs")) c.rhs.push_back(expr_from_json(e));
            c.bound = jc.value("bound", static_cast<i64>(0));
            sys.constraints.push_back(std::move(c));
        }
        for (const auto& f : j.at("empty_reductions"))
            sys.empty_reductions.emplace_back(f.at(0).get<std::string>(), f.at(1).get<IntVec>());
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed constraints file: ") + e.what());
    }
    return sys;
}

// --- traces and violations ---------------------------------------------------

/// One event per line: time, kind, target, sources, fold count; field order fixed.
inline std::string trace_to_jsonl(const MachineTrace& trace) {
    std::ostringstream os;
    for (const auto& e : trace.events) {
        json sources = json::array();
        for (const auto& [w, p] : e.sources) sources.push_back(json::array({w, p}));
        json j;
        j["t"] = e.time;
        j["kind"] = e.kind == EventKind::Compute ? "compute" : "accumulate";
        j["var"] = e.var;
        j["point"] = e.point;
        j["sources"] = std::move(sources);
        j["ops"] = e.ops;
        os << j.dump() << "\n";
    }
    return os.str();
}

inline std::vector<Event> trace_events_from_jsonl(const std::string& text) {
    std::vector<Event> events;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            json j = json::parse(line);
            Event e;
            e.time = j.at("t").get<IntVec>();
            e.kind = j.at("kind").get<std::string>() == "compute" ? EventKind::Compute
                                                                  : EventKind::Accumulate;
            e.var = j.at("var").get<std::string>();
            e.point = j.at("point").get<IntVec>();
            for (const auto& s : j.at("sources"))
                e.sources.emplace_back(s.at(0).get<std::string>(), s.at(1).get<IntVec>());
            e.ops = j.at("ops").get<int>();
            events.push_back(std::move(e));
        } catch (const json::exception& err) {
            throw IoError("trace line " + std::to_string(lineno) + ": " + err.what());
        }
    }
    return events;
}

inline json violations_to_json(const std::vector<Violation>& violations) {
    json arr = json::array();
    for (const auto& v : violations) {
        arr.push_back(json{{"kind", violation_kind_name(v.kind)},
                           {"time", v.time},
                           {"var", v.var},
                           {"point", v.point},
                           {"events", v.events},
                           {"detail", v.detail}});
    }
    return arr;
}

inline std::vector<Violation> violations_from_json(const json& arr) {
    std::vector<Violation> out;
    for (const auto& j : arr) {
        Violation v;
        std::string k = j.at("kind").get<std::string>();
        v.kind = k == "concurrent-write" ? ViolationKind::ConcurrentWrite
                 : k == "causality"      ? ViolationKind::Causality
                                         : ViolationKind::FanIn;
        v.time = j.at("time").get<IntVec>();
        v.var = j.at("var").get<std::string>();
        v.point = j.at("point").get<IntVec>();
        v.events = j.at("events").get<std::vector<size_t>>();
        v.detail = j.at("detail").get<std::string>();
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace redtile
