#pragma once

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "redtile/program.hpp"

namespace redtile {

struct ParseError : std::runtime_error {
    int line, col;
    ParseError(int line_, int col_, const std::string& msg)
        : std::runtime_error("parse error at " + std::to_string(line_) + ":" +
                             std::to_string(col_) + ": " + msg),
          line(line_),
          col(col_) {}
};

namespace detail {

struct Token {
    enum class Kind { Ident, Int, Punct, End };
    Kind kind;
    std::string text;
    i64 value = 0;
    int line = 1, col = 1;
};

inline std::vector<Token> tokenize(const std::string& src) {
    std::vector<Token> out;
    int line = 1, col = 1;
    size_t i = 0;
    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (src[i + k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        i += n;
    };
    while (i < src.size()) {
        char c = src[i];
        if (c == '#') {
            while (i < src.size() && src[i] != '\n') advance(1);
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(c))) {
            advance(1);
            continue;
        }
        Token t;
        t.line = line;
        t.col = col;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
                ++j;
            t.kind = Token::Kind::Ident;
            t.text = src.substr(i, j - i);
            advance(j - i);
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            size_t j = i;
            while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
            t.kind = Token::Kind::Int;
            t.text = src.substr(i, j - i);
            try {
                t.value = std::stoll(t.text);
            } catch (const std::exception&) {
                throw ParseError(line, col, "integer literal out of range");
            }
            advance(j - i);
        } else {
            static const char* two[] = {"<=", ">=", "==", "->"};
            t.kind = Token::Kind::Punct;
            t.text = std::string(1, c);
            for (const char* p : two) {
                if (src.compare(i, 2, p) == 0) {
                    t.text = p;
                    break;
                }
            }
            advance(t.text.size());
        }
        out.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::Kind::End;
    end.line = line;
    end.col = col;
    out.push_back(end);
    return out;
}

/// Linear integer combination of index names and parameter names.
struct LinearCombo {
    std::map<std::string, i64> coeffs;
    i64 constant = 0;

    void add(const LinearCombo& o, i64 sign) {
        for (auto& [k, v] : o.coeffs) coeffs[k] = checked_add(coeffs[k], checked_mul(sign, v));
        constant = checked_add(constant, checked_mul(sign, o.constant));
    }
};

class Parser {
  public:
    explicit Parser(const std::string& src) : toks_(tokenize(src)) {}

    Program parse() {
        if (toks_.size() <= 1) fail("no program");
        Program prog;
        bool any = false;
        while (!at_end()) {
            any = true;
            if (peek_ident("param")) {
                next();
                std::string name = expect_ident("parameter name");
                if (prog.param_index(name) >= 0) fail("duplicate parameter " + name);
                prog.params.push_back(name);
                expect(";");
            } else if (peek_ident("input") || peek_ident("var")) {
                bool is_input = peek_ident("input");
                next();
                std::string name = expect_ident("variable name");
                if (prog.find_var(name)) fail("duplicate variable " + name);
                auto [dom, names] = parse_domain(prog);
                prog.variables.push_back(Variable{name, dom});
                var_index_names_[name] = names;
                if (is_input) {
                    InputSpec spec;
                    if (peek_punct("=")) {
                        next();
                        expect("[");
                        spec.has_literals = true;
                        if (!peek_punct("]")) {
                            spec.literals.push_back(parse_signed_int());
                            while (peek_punct(",")) {
                                next();
                                spec.literals.push_back(parse_signed_int());
                            }
                        }
                        expect("]");
                    }
                    prog.inputs[name] = spec;
                }
                expect(";");
            } else {
                parse_equation(prog);
            }
        }
        if (!any) fail("no program");
        check(prog);
        return prog;
    }

    /// Parses "(i,j -> i-j, 2*i)" style affine map text against known params.
    static AffineFunction parse_affine_map_text(const std::string& text,
                                                const std::vector<std::string>& params) {
        Parser p(text);
        auto [names, fn] = p.parse_arrow_map(params);
        if (!p.at_end()) throw ParseError(p.cur().line, p.cur().col, "trailing input after map");
        return fn;
    }

  private:
    std::vector<Token> toks_;
    size_t pos_ = 0;
    std::map<std::string, std::vector<std::string>> var_index_names_;

    const Token& cur() const { return toks_[pos_]; }
    bool at_end() const { return cur().kind == Token::Kind::End; }
    void next() { ++pos_; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(cur().line, cur().col, msg);
    }

    bool peek_ident(const std::string& s) const {
        return cur().kind == Token::Kind::Ident && cur().text == s;
    }
    bool peek_punct(const std::string& s) const {
        return cur().kind == Token::Kind::Punct && cur().text == s;
    }
    void expect(const std::string& s) {
        if (!peek_punct(s)) fail("expected '" + s + "'");
        next();
    }
    std::string expect_ident(const std::string& what) {
        if (cur().kind != Token::Kind::Ident) fail("expected " + what);
        std::string s = cur().text;
        next();
        return s;
    }

    i64 parse_signed_int() {
        i64 sign = 1;
        while (peek_punct("-") || peek_punct("+")) {
            if (peek_punct("-")) sign = -sign;
            next();
        }
        if (cur().kind != Token::Kind::Int) fail("expected integer");
        i64 v = checked_mul(sign, cur().value);
        next();
        return v;
    }

    // --- linear combinations over names --------------------------------

    LinearCombo parse_combo_term(i64 sign) {
        if (cur().kind == Token::Kind::Int) {
            i64 v = cur().value;
            next();
            LinearCombo c;
            if (peek_punct("*")) {
                next();
                std::string name = expect_ident("name after '*'");
                c.coeffs[name] = checked_mul(sign, v);
            } else {
                c.constant = checked_mul(sign, v);
            }
            return c;
        }
        if (cur().kind == Token::Kind::Ident) {
            LinearCombo c;
            c.coeffs[cur().text] = sign;
            next();
            return c;
        }
        fail("expected linear term");
    }

    LinearCombo parse_combo() {
        LinearCombo acc;
        i64 sign = 1;
        while (peek_punct("+") || peek_punct("-")) {
            if (peek_punct("-")) sign = -sign;
            next();
        }
        acc.add(parse_combo_term(sign), 1);
        while (peek_punct("+") || peek_punct("-")) {
            i64 s = peek_punct("+") ? 1 : -1;
            next();
            while (peek_punct("+") || peek_punct("-")) {
                if (peek_punct("-")) s = -s;
                next();
            }
            acc.add(parse_combo_term(s), 1);
        }
        return acc;
    }

    /// Resolves a combo to coefficient rows over (index names, params).
    std::pair<IntVec, i64> resolve_combo(const LinearCombo& c,
                                         const std::vector<std::string>& index_names,
                                         const std::vector<std::string>& params) {
        IntVec row(index_names.size() + params.size(), 0);
        for (auto& [name, coeff] : c.coeffs) {
            bool found = false;
            for (size_t k = 0; k < index_names.size(); ++k)
                if (index_names[k] == name) {
                    row[k] = checked_add(row[k], coeff);
                    found = true;
                    break;
                }
            if (!found) {
                for (size_t k = 0; k < params.size(); ++k)
                    if (params[k] == name) {
                        row[index_names.size() + k] = checked_add(row[index_names.size() + k], coeff);
                        found = true;
                        break;
                    }
            }
            if (!found) fail("unknown name " + name);
        }
        return {row, c.constant};
    }

    // --- domains --------------------------------------------------------

    std::pair<Domain, std::vector<std::string>> parse_domain(const Program& prog) {
        expect("{");
        std::vector<std::string> names;
        if (cur().kind == Token::Kind::Ident) {
            names.push_back(expect_ident("index name"));
            while (peek_punct(",")) {
                next();
                names.push_back(expect_ident("index name"));
            }
        }
        for (const auto& n : names)
            if (prog.param_index(n) >= 0) fail("index name " + n + " shadows a parameter");
        std::vector<LinIneq> rows;
        if (peek_punct("|")) {
            next();
            if (!peek_punct("}")) {
                parse_inequality(rows, names, prog.params);
                while (peek_ident("and")) {
                    next();
                    parse_inequality(rows, names, prog.params);
                }
            }
        }
        expect("}");
        return {Domain(static_cast<int>(names.size()), prog.params, std::move(rows)), names};
    }

    void parse_inequality(std::vector<LinIneq>& rows, const std::vector<std::string>& names,
                          const std::vector<std::string>& params) {
        LinearCombo lhs = parse_combo();
        std::string rel;
        if (peek_punct("<=") || peek_punct("<") || peek_punct(">=") || peek_punct(">") ||
            peek_punct("=") || peek_punct("==")) {
            rel = cur().text;
            next();
        } else {
            fail("expected a relation (<=, <, >=, >, =)");
        }
        LinearCombo rhs = parse_combo();
        // Normalize to expr >= 0 rows.
        auto push = [&](const LinearCombo& a, const LinearCombo& b, i64 shift) {
            LinearCombo d;
            d.add(b, 1);
            d.add(a, -1);
            d.constant = checked_add(d.constant, shift);
            auto [row, c] = resolve_combo(d, names, params);
            rows.push_back(LinIneq{row, c});
        };
        if (rel == "<=")
            push(lhs, rhs, 0);  // rhs - lhs >= 0
        else if (rel == "<")
            push(lhs, rhs, -1);
        else if (rel == ">=")
            push(rhs, lhs, 0);
        else if (rel == ">")
            push(rhs, lhs, -1);
        else {  // equality
            push(lhs, rhs, 0);
            push(rhs, lhs, 0);
        }
    }

    // --- affine maps "(names -> exprs)" ----------------------------------

    std::pair<std::vector<std::string>, AffineFunction> parse_arrow_map(
        const std::vector<std::string>& params) {
        expect("(");
        std::vector<std::string> names;
        if (cur().kind == Token::Kind::Ident) {
            names.push_back(expect_ident("index name"));
            while (peek_punct(",")) {
                next();
                names.push_back(expect_ident("index name"));
            }
        }
        expect("->");
        std::vector<IntVec> out_rows;
        IntVec out_const;
        if (!peek_punct(")")) {
            do {
                if (peek_punct(",")) next();
                LinearCombo c = parse_combo();
                auto [row, k] = resolve_combo(c, names, params);
                out_rows.push_back(row);
                out_const.push_back(k);
            } while (peek_punct(","));
        }
        expect(")");
        return {names, AffineFunction(static_cast<int>(names.size()),
                                      static_cast<int>(params.size()), std::move(out_rows),
                                      std::move(out_const))};
    }

    // --- equations --------------------------------------------------------

    void parse_equation(Program& prog) {
        std::string target = expect_ident("equation target");
        const Variable* tv = prog.find_var(target);
        if (!tv) fail("unknown variable " + target);
        if (prog.is_input(target)) fail("input variable " + target + " cannot have an equation");
        expect("(");
        std::vector<std::string> lhs_names;
        if (cur().kind == Token::Kind::Ident) {
            lhs_names.push_back(expect_ident("index name"));
            while (peek_punct(",")) {
                next();
                lhs_names.push_back(expect_ident("index name"));
            }
        }
        expect(")");
        if (static_cast<int>(lhs_names.size()) != tv->domain.n_idx)
            fail(target + " has " + std::to_string(tv->domain.n_idx) + " index dimensions");
        expect("=");
        if (peek_ident("reduce")) {
            next();
            expect("(");
            ReduceOp op;
            if (peek_punct("+")) {
                op = ReduceOp::Add;
                next();
            } else if (peek_ident("max")) {
                op = ReduceOp::Max;
                next();
            } else if (peek_ident("min")) {
                op = ReduceOp::Min;
                next();
            } else {
                fail("expected an operator (+, max, min)");
            }
            expect(",");
            auto [names, projection] = parse_arrow_map(prog.params);
            if (projection.out_dims() != tv->domain.n_idx)
                fail("projection output dims must match Dom(" + target + ")");
            expect(",");
            std::string body = expect_ident("body variable");
            const Variable* bv = prog.find_var(body);
            if (!bv) fail("unknown variable " + body);
            if (bv->domain.n_idx != static_cast<int>(names.size()))
                fail("projection binds " + std::to_string(names.size()) + " indices but Dom(" +
                     body + ") has " + std::to_string(bv->domain.n_idx));
            expect("(");
            for (size_t k = 0; k < names.size(); ++k) {
                if (k) expect(",");
                std::string n = expect_ident("body index");
                if (n != names[k]) fail("body access must list the reduction indices in order");
            }
            expect(")");
            expect(")");
            expect(";");
            ReduceEquation red;
            red.target = target;
            red.op = op;
            red.projection = projection;
            red.body = body;
            red.body_index_names = names;
            prog.equations.emplace_back(std::move(red));
        } else {
            AffineExpr rhs = parse_expr(prog, lhs_names);
            i64 latency = 1;
            if (peek_punct("@")) {
                next();
                if (!peek_ident("latency")) fail("expected 'latency'");
                next();
                latency = parse_signed_int();
                if (latency < 0) fail("latency must be non-negative");
            }
            expect(";");
            PointwiseEquation pw;
            pw.target = target;
            pw.index_names = lhs_names;
            pw.rhs = rhs;
            pw.latency = latency;
            prog.equations.emplace_back(std::move(pw));
        }
    }

    AffineExpr parse_expr(const Program& prog, const std::vector<std::string>& names) {
        AffineExpr acc = parse_term(prog, names);
        while (peek_punct("+") || peek_punct("-")) {
            bool plus = peek_punct("+");
            next();
            AffineExpr rhs = parse_term(prog, names);
            acc = plus ? AffineExpr::add(acc, rhs) : AffineExpr::sub(acc, rhs);
        }
        return acc;
    }

    // Folds literal factors so reprinting a parsed tree reparses identically.
    static AffineExpr make_scale(i64 k, AffineExpr e) {
        if (e.node->kind == AffineExpr::Kind::Literal)
            return AffineExpr::lit(checked_mul(k, e.node->value));
        if (e.node->kind == AffineExpr::Kind::Scale)
            return make_scale(checked_mul(k, e.node->value), AffineExpr{e.node->a});
        if (k == 1) return e;
        return AffineExpr::scale(k, e);
    }

    AffineExpr parse_term(const Program& prog, const std::vector<std::string>& names) {
        if (peek_punct("-")) {
            next();
            return make_scale(-1, parse_term(prog, names));
        }
        if (peek_punct("(")) {
            next();
            AffineExpr e = parse_expr(prog, names);
            expect(")");
            return e;
        }
        if (cur().kind == Token::Kind::Int) {
            i64 v = cur().value;
            next();
            if (peek_punct("*")) {
                next();
                return make_scale(v, parse_term(prog, names));
            }
            return AffineExpr::lit(v);
        }
        if (cur().kind == Token::Kind::Ident) {
            std::string var = expect_ident("variable");
            const Variable* v = prog.find_var(var);
            if (!v) fail("unknown variable " + var);
            expect("(");
            std::vector<IntVec> rows;
            IntVec consts;
            if (!peek_punct(")")) {
                do {
                    if (peek_punct(",")) next();
                    LinearCombo c = parse_combo();
                    auto [row, k] = resolve_combo(c, names, prog.params);
                    rows.push_back(row);
                    consts.push_back(k);
                } while (peek_punct(","));
            }
            expect(")");
            if (static_cast<int>(rows.size()) != v->domain.n_idx)
                fail("access to " + var + " must have " + std::to_string(v->domain.n_idx) +
                     " coordinates");
            AffineFunction map(static_cast<int>(names.size()),
                               static_cast<int>(prog.params.size()), std::move(rows),
                               std::move(consts));
            return AffineExpr::access(var, std::move(map));
        }
        fail("expected an expression");
    }

    void check(const Program& prog) {
        for (const auto& v : prog.variables) {
            if (!prog.is_input(v.name) && !prog.defining_equation(v.name))
                fail("variable " + v.name + " has no defining equation");
        }
        for (const auto& eq : prog.equations) {
            const std::string& t = equation_target(eq);
            int count = 0;
            for (const auto& e2 : prog.equations)
                if (equation_target(e2) == t) ++count;
            if (count > 1) fail("variable " + t + " defined twice");
        }
    }
};

}  // namespace detail

inline Program parse_program(const std::string& text) { return detail::Parser(text).parse(); }

inline AffineFunction parse_affine_map(const std::string& text,
                                       const std::vector<std::string>& params) {
    return detail::Parser::parse_affine_map_text(text, params);
}

}  // namespace redtile
