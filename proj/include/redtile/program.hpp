#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "redtile/domain.hpp"

namespace redtile {

struct ModelError : std::runtime_error {
    explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

struct EmptyReductionDomainError : ModelError {
    explicit EmptyReductionDomainError(const std::string& what) : ModelError(what) {}
};

/// Accumulation operators. The list is closed so that associativity and
/// commutativity hold by construction.
enum class ReduceOp { Add, Max, Min };

inline i64 apply_op(ReduceOp op, i64 a, i64 b) {
    switch (op) {
        case ReduceOp::Add: return checked_add(a, b);
        case ReduceOp::Max: return a >= b ? a : b;
        case ReduceOp::Min: return a <= b ? a : b;
    }
    throw ModelError("unknown operator");
}

inline std::string op_symbol(ReduceOp op) {
    switch (op) {
        case ReduceOp::Add: return "+";
        case ReduceOp::Max: return "max";
        case ReduceOp::Min: return "min";
    }
    return "?";
}

/// Affine expression tree for pointwise right-hand sides. Leaves are integer
/// literals and variable accesses through affine index maps.
struct AffineExpr {
    enum class Kind { Literal, Access, Add, Sub, Scale };

    struct Node {
        Kind kind;
        i64 value = 0;       // Literal / Scale factor
        std::string var;     // Access
        AffineFunction map;  // Access
        std::shared_ptr<const Node> a, b;
    };

    std::shared_ptr<const Node> node;

    static AffineExpr lit(i64 v) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Literal;
        n->value = v;
        return {n};
    }
    static AffineExpr access(std::string var, AffineFunction map) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Access;
        n->var = std::move(var);
        n->map = std::move(map);
        return {n};
    }
    static AffineExpr add(AffineExpr x, AffineExpr y) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Add;
        n->a = x.node;
        n->b = y.node;
        return {n};
    }
    static AffineExpr sub(AffineExpr x, AffineExpr y) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Sub;
        n->a = x.node;
        n->b = y.node;
        return {n};
    }
    static AffineExpr scale(i64 k, AffineExpr x) {
        auto n = std::make_shared<Node>();
        n->kind = Kind::Scale;
        n->value = k;
        n->a = x.node;
        return {n};
    }
};

inline bool expr_equal(const std::shared_ptr<const AffineExpr::Node>& a,
                       const std::shared_ptr<const AffineExpr::Node>& b) {
    if (!a || !b) return !a && !b;
    if (a->kind != b->kind || a->value != b->value || a->var != b->var || !(a->map == b->map))
        return false;
    return expr_equal(a->a, b->a) && expr_equal(a->b, b->b);
}

struct PointwiseEquation {
    std::string target;
    std::vector<std::string> index_names;  // names bound by the left-hand side
    AffineExpr rhs;
    i64 latency = 1;

    bool operator==(const PointwiseEquation& o) const {
        return target == o.target && index_names == o.index_names && latency == o.latency &&
               expr_equal(rhs.node, o.rhs.node);
    }
};

/// target = reduce(op, projection, body). The body is read at the projection's
/// input space (the body variable's own index space). Rewrite stages may
/// instead carry an explicit target-point -> body-points grouping when the
/// grouping is not affine.
struct ReduceEquation {
    std::string target;
    ReduceOp op = ReduceOp::Add;
    AffineFunction projection;  // body index space -> target index space
    std::string body;
    std::vector<std::string> body_index_names;

    bool finite_groups = false;
    std::map<IntVec, std::vector<IntVec>> groups;

    bool operator==(const ReduceEquation& o) const {
        return target == o.target && op == o.op && projection == o.projection && body == o.body &&
               body_index_names == o.body_index_names && finite_groups == o.finite_groups &&
               groups == o.groups;
    }
};

using Equation = std::variant<PointwiseEquation, ReduceEquation>;

inline const std::string& equation_target(const Equation& eq) {
    if (std::holds_alternative<PointwiseEquation>(eq)) return std::get<PointwiseEquation>(eq).target;
    return std::get<ReduceEquation>(eq).target;
}

struct Variable {
    std::string name;
    Domain domain;

    bool operator==(const Variable& o) const { return name == o.name && domain == o.domain; }
};

/// Input values: explicit literals (assigned in lexicographic point order)
/// or values drawn from the run's seeded generator.
struct InputSpec {
    bool has_literals = false;
    std::vector<i64> literals;

    bool operator==(const InputSpec& o) const {
        return has_literals == o.has_literals && literals == o.literals;
    }
};

struct Program {
    std::vector<std::string> params;
    std::vector<Variable> variables;          // declaration order
    std::map<std::string, InputSpec> inputs;  // variables without a defining equation
    std::vector<Equation> equations;

    const Variable* find_var(const std::string& name) const {
        for (const auto& v : variables)
            if (v.name == name) return &v;
        return nullptr;
    }

    const Variable& var(const std::string& name) const {
        const Variable* v = find_var(name);
        if (!v) throw ModelError("unknown variable " + name);
        return *v;
    }

    bool is_input(const std::string& name) const { return inputs.count(name) > 0; }

    const Equation* defining_equation(const std::string& name) const {
        for (const auto& eq : equations)
            if (equation_target(eq) == name) return &eq;
        return nullptr;
    }

    int param_index(const std::string& name) const {
        for (size_t i = 0; i < params.size(); ++i)
            if (params[i] == name) return static_cast<int>(i);
        return -1;
    }

    IntVec bind_params(const std::map<std::string, i64>& binding) const {
        IntVec values(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            auto it = binding.find(params[i]);
            if (it == binding.end()) throw ModelError("parameter " + params[i] + " is unbound");
            values[i] = it->second;
        }
        return values;
    }

    bool operator==(const Program& o) const {
        return params == o.params && variables == o.variables && inputs == o.inputs &&
               equations == o.equations;
    }
};

struct Dependence {
    std::string consumer;
    std::string producer;
    /// For pointwise accesses: consumer point -> producer point.
    /// For reduction body reads: body point -> result point (the projection).
    AffineFunction map;
    bool is_reduction = false;
};

namespace detail {
inline void collect_accesses(const std::shared_ptr<const AffineExpr::Node>& n,
                             std::vector<std::pair<std::string, AffineFunction>>& out) {
    if (!n) return;
    if (n->kind == AffineExpr::Kind::Access) out.emplace_back(n->var, n->map);
    collect_accesses(n->a, out);
    collect_accesses(n->b, out);
}
}  // namespace detail

inline std::vector<Dependence> dependences(const Program& program) {
    std::vector<Dependence> deps;
    for (const auto& eq : program.equations) {
        if (std::holds_alternative<PointwiseEquation>(eq)) {
            const auto& pw = std::get<PointwiseEquation>(eq);
            std::vector<std::pair<std::string, AffineFunction>> accesses;
            detail::collect_accesses(pw.rhs.node, accesses);
            for (auto& [var, map] : accesses)
                deps.push_back(Dependence{pw.target, var, map, false});
        } else {
            const auto& red = std::get<ReduceEquation>(eq);
            deps.push_back(Dependence{red.target, red.body, red.projection, true});
        }
    }
    return deps;
}

/// P(z_X): the body points a reduce equation folds into z_X.
inline Domain reduction_domain(const Program& program, const ReduceEquation& eq, const IntVec& z,
                               const IntVec& param_values) {
    const Variable& target = program.var(eq.target);
    if (!target.domain.contains(z, param_values))
        throw ModelError("point " + vec_str(z) + " lies outside Dom(" + eq.target + ")");
    if (eq.finite_groups) {
        auto it = eq.groups.find(z);
        std::vector<IntVec> pts = it == eq.groups.end() ? std::vector<IntVec>{} : it->second;
        if (pts.empty())
            throw EmptyReductionDomainError("reduction over an empty domain at " + eq.target +
                                            vec_str(z));
        return Domain::explicit_set(program.var(eq.body).domain.n_idx, target.domain.params,
                                    std::move(pts));
    }
    const Variable& body = program.var(eq.body);
    Domain fiber = preimage(eq.projection, z, body.domain, param_values);
    if (enumerate_domain(fiber, param_values).empty())
        throw EmptyReductionDomainError("reduction over an empty domain at " + eq.target +
                                        vec_str(z));
    return fiber;
}

namespace detail {

inline std::string affine_arg_str(const AffineFunction& f, int row,
                                  const std::vector<std::string>& index_names,
                                  const std::vector<std::string>& params) {
    std::ostringstream os;
    bool any = false;
    auto term = [&](i64 c, const std::string& name) {
        if (c == 0) return;
        if (!any) {
            if (c == -1)
                os << "-";
            else if (c != 1)
                os << c << "*";
        } else {
            os << (c > 0 ? " + " : " - ");
            i64 a = c > 0 ? c : -c;
            if (a != 1) os << a << "*";
        }
        os << name;
        any = true;
    };
    for (int k = 0; k < f.n_in; ++k) term(f.rows[row][k], index_names[k]);
    for (int k = 0; k < f.n_par; ++k) term(f.rows[row][f.n_in + k], params[k]);
    i64 c = f.constant[row];
    if (!any)
        os << c;
    else if (c > 0)
        os << " + " << c;
    else if (c < 0)
        os << " - " << -c;
    return os.str();
}

inline std::string expr_str(const std::shared_ptr<const AffineExpr::Node>& n,
                            const std::vector<std::string>& index_names,
                            const std::vector<std::string>& params) {
    switch (n->kind) {
        case AffineExpr::Kind::Literal: return std::to_string(n->value);
        case AffineExpr::Kind::Access: {
            std::string s = n->var + "(";
            for (int r = 0; r < n->map.out_dims(); ++r) {
                if (r) s += ",";
                s += affine_arg_str(n->map, r, index_names, params);
            }
            return s + ")";
        }
        case AffineExpr::Kind::Add:
            return expr_str(n->a, index_names, params) + " + " + expr_str(n->b, index_names, params);
        case AffineExpr::Kind::Sub:
            return expr_str(n->a, index_names, params) + " - (" +
                   expr_str(n->b, index_names, params) + ")";
        case AffineExpr::Kind::Scale:
            return std::to_string(n->value) + "*(" + expr_str(n->a, index_names, params) + ")";
    }
    return "?";
}

inline std::string domain_str(const Domain& d, const std::vector<std::string>& names) {
    std::ostringstream os;
    os << "{";
    for (int i = 0; i < d.n_idx; ++i) {
        if (i) os << ",";
        os << names[i];
    }
    os << " | ";
    for (size_t r = 0; r < d.rows.size(); ++r) {
        if (r) os << " and ";
        // each row prints as 0 <= expr
        AffineFunction f(d.n_idx, d.n_par(), {d.rows[r].coeffs}, {d.rows[r].constant});
        os << "0 <= " << affine_arg_str(f, 0, names, d.params);
    }
    os << "}";
    return os.str();
}

inline std::vector<std::string> default_names(int n) {
    static const char* base[] = {"i", "j", "k", "l", "m", "n"};
    std::vector<std::string> names;
    for (int d = 0; d < n; ++d)
        names.push_back(d < 6 ? base[d] : "x" + std::to_string(d));
    return names;
}

}  // namespace detail

/// Canonical text form; reparses to a structurally equal program. Programs
/// holding explicit-point domains or finite groupings (rewrite products) are
/// not printable in the text format.
inline std::string pretty_print(const Program& program) {
    std::ostringstream os;
    for (const auto& p : program.params) os << "param " << p << ";\n";
    std::map<std::string, std::vector<std::string>> eq_names;
    for (const auto& eq : program.equations) {
        if (std::holds_alternative<PointwiseEquation>(eq)) {
            const auto& pw = std::get<PointwiseEquation>(eq);
            eq_names[pw.target] = pw.index_names;
        }
    }
    for (const auto& v : program.variables) {
        if (v.domain.explicit_points)
            throw ModelError("variable " + v.name + " has no text form (explicit domain)");
        std::vector<std::string> names =
            eq_names.count(v.name) ? eq_names[v.name] : detail::default_names(v.domain.n_idx);
        os << (program.is_input(v.name) ? "input " : "var ") << v.name << " "
           << detail::domain_str(v.domain, names);
        auto it = program.inputs.find(v.name);
        if (it != program.inputs.end() && it->second.has_literals) {
            os << " = [";
            for (size_t k = 0; k < it->second.literals.size(); ++k) {
                if (k) os << ",";
                os << it->second.literals[k];
            }
            os << "]";
        }
        os << ";\n";
    }
    for (const auto& eq : program.equations) {
        if (std::holds_alternative<PointwiseEquation>(eq)) {
            const auto& pw = std::get<PointwiseEquation>(eq);
            os << pw.target << "(";
            for (size_t k = 0; k < pw.index_names.size(); ++k) {
                if (k) os << ",";
                os << pw.index_names[k];
            }
            os << ") = " << detail::expr_str(pw.rhs.node, pw.index_names, program.params);
            if (pw.latency != 1) os << " @latency " << pw.latency;
            os << ";\n";
        } else {
            const auto& red = std::get<ReduceEquation>(eq);
            if (red.finite_groups)
                throw ModelError("equation for " + red.target + " has no text form (finite groups)");
            const auto& names = red.body_index_names;
            std::vector<std::string> tnames =
                detail::default_names(program.var(red.target).domain.n_idx);
            os << red.target << "(";
            for (size_t k = 0; k < tnames.size(); ++k) {
                if (k) os << ",";
                os << tnames[k];
            }
            os << ") = reduce(" << op_symbol(red.op) << ", (";
            for (size_t k = 0; k < names.size(); ++k) {
                if (k) os << ",";
                os << names[k];
            }
            os << " -> ";
            for (int r = 0; r < red.projection.out_dims(); ++r) {
                if (r) os << ",";
                os << detail::affine_arg_str(red.projection, r, names, program.params);
            }
            os << "), " << red.body << "(";
            for (size_t k = 0; k < names.size(); ++k) {
                if (k) os << ",";
                os << names[k];
            }
            os << "));\n";
        }
    }
    return os.str();
}

/// Structural validation under a concrete parameter binding: unique names,
/// single definitions, in-domain accesses, point-level acyclicity of the
/// non-reduction dependence graph.
inline void validate_program(const Program& program, const IntVec& param_values) {
    std::set<std::string> seen;
    for (const auto& v : program.variables)
        if (!seen.insert(v.name).second) throw ModelError("duplicate variable " + v.name);
    std::set<std::string> defined;
    for (const auto& eq : program.equations) {
        const std::string& t = equation_target(eq);
        if (program.is_input(t)) throw ModelError("input variable " + t + " has an equation");
        if (!defined.insert(t).second) throw ModelError("variable " + t + " defined twice");
    }
    for (const auto& v : program.variables)
        if (!program.is_input(v.name) && !defined.count(v.name))
            throw ModelError("variable " + v.name + " has no defining equation");

    // Point-level acyclicity of pointwise dependences plus access range checks.
    std::map<std::pair<std::string, IntVec>, int> state;
    std::function<void(const std::string&, const IntVec&)> visit = [&](const std::string& name,
                                                                       const IntVec& z) {
        if (program.is_input(name)) return;
        auto key = std::make_pair(name, z);
        auto it = state.find(key);
        if (it != state.end()) {
            if (it->second == 1)
                throw ModelError("dependence cycle through " + name + vec_str(z));
            return;
        }
        state[key] = 1;
        const Equation* eq = program.defining_equation(name);
        if (eq && std::holds_alternative<PointwiseEquation>(*eq)) {
            const auto& pw = std::get<PointwiseEquation>(*eq);
            std::vector<std::pair<std::string, AffineFunction>> accesses;
            detail::collect_accesses(pw.rhs.node, accesses);
            for (auto& [var, map] : accesses) {
                IntVec p = map.eval(z, param_values);
                if (!program.var(var).domain.contains(p, param_values))
                    throw ModelError("access " + var + vec_str(p) + " from " + name + vec_str(z) +
                                     " lies outside Dom(" + var + ")");
                visit(var, p);
            }
        }
        state[key] = 2;
    };
    for (const auto& v : program.variables) {
        if (program.is_input(v.name)) continue;
        const Equation* eq = program.defining_equation(v.name);
        if (!eq || !std::holds_alternative<PointwiseEquation>(*eq)) continue;
        for (const auto& z : enumerate_domain(v.domain, param_values)) visit(v.name, z);
    }
}

}  // namespace redtile
