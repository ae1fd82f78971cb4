#include "ddcp/conic/program.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace ddcp::conic {

void ConicProgram::check_binary_bounds(const std::string& name, double lower, double upper) {
    auto integral01 = [](double v) { return v == 0.0 || v == 1.0; };
    if (!integral01(lower) || !integral01(upper) || lower > upper) {
        throw ProgramError(fmt::format("binary variable '{}' has bounds [{}, {}]; expected "
                                       "integral bounds inside [0, 1]",
                                       name, lower, upper));
    }
}

VarId ConicProgram::add_variable(std::string name, double lower, double upper, VarType type,
                                 int priority) {
    if (name.empty()) {
        name = fmt::format("x{}", variables_.size());
    }
    if (by_name_.count(name) != 0) {
        throw ProgramError(fmt::format("duplicate variable name '{}'", name));
    }
    if (std::isnan(lower) || std::isnan(upper)) {
        throw ProgramError(fmt::format("variable '{}' has NaN bound", name));
    }
    if (type == VarType::Binary) {
        check_binary_bounds(name, lower, upper);
    }
    const int index = static_cast<int>(variables_.size());
    by_name_.emplace(name, index);
    variables_.push_back(Variable{std::move(name), lower, upper, type, priority});
    return VarId{index};
}

void ConicProgram::check(VarId id, const char* where) const {
    if (id.index < 0 || id.index >= static_cast<int>(variables_.size())) {
        throw ProgramError(fmt::format("{}: unknown variable handle {}", where, id.index));
    }
}

RowId ConicProgram::add_linear(std::vector<Term> terms, Relation relation, double rhs,
                               std::string name) {
    for (const auto& t : terms) {
        check(t.var, "add_linear");
        if (!std::isfinite(t.coef)) {
            throw ProgramError(fmt::format("add_linear: non-finite coefficient in row '{}'", name));
        }
    }
    if (!std::isfinite(rhs)) {
        throw ProgramError(fmt::format("add_linear: non-finite rhs in row '{}'", name));
    }
    // Merge repeated references to one variable.
    std::sort(terms.begin(), terms.end(),
              [](const Term& a, const Term& b) { return a.var.index < b.var.index; });
    std::vector<Term> merged;
    merged.reserve(terms.size());
    for (const auto& t : terms) {
        if (!merged.empty() && merged.back().var == t.var) {
            merged.back().coef += t.coef;
        } else {
            merged.push_back(t);
        }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    rows_.push_back(LinearConstraint{std::move(name), std::move(merged), relation, rhs});
    return RowId{static_cast<int>(rows_.size()) - 1};
}

ConeId ConicProgram::add_rotated_cone(VarId u, VarId w, const std::vector<VarId>& ys,
                                      std::string name) {
    check(u, "add_rotated_cone");
    check(w, "add_rotated_cone");
    std::vector<VarId> members{u, w};
    for (auto y : ys) {
        check(y, "add_rotated_cone");
        members.push_back(y);
    }
    cones_.push_back(ConeConstraint{std::move(name), ConeKind::Rotated, std::move(members)});
    return ConeId{static_cast<int>(cones_.size()) - 1};
}

ConeId ConicProgram::add_standard_cone(VarId t, const std::vector<VarId>& ys, std::string name) {
    check(t, "add_standard_cone");
    std::vector<VarId> members{t};
    for (auto y : ys) {
        check(y, "add_standard_cone");
        members.push_back(y);
    }
    cones_.push_back(ConeConstraint{std::move(name), ConeKind::Standard, std::move(members)});
    return ConeId{static_cast<int>(cones_.size()) - 1};
}

void ConicProgram::set_objective(std::vector<Term> terms, double constant) {
    for (const auto& t : terms) {
        check(t.var, "set_objective");
    }
    objective_ = Objective{std::move(terms), constant};
}

void ConicProgram::set_bounds(VarId id, double lower, double upper) {
    check(id, "set_bounds");
    auto& v = variables_[id.index];
    if (v.is_binary()) {
        check_binary_bounds(v.name, lower, upper);
    }
    v.lower = lower;
    v.upper = upper;
}

const Variable& ConicProgram::variable(VarId id) const {
    check(id, "variable");
    return variables_[id.index];
}

std::size_t ConicProgram::num_binaries() const {
    return static_cast<std::size_t>(std::count_if(
        variables_.begin(), variables_.end(), [](const Variable& v) { return v.is_binary(); }));
}

VarId ConicProgram::find(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? VarId{} : VarId{it->second};
}

double ConicProgram::evaluate_objective(const std::vector<double>& values) const {
    double total = objective_.constant;
    for (const auto& t : objective_.terms) {
        total += t.coef * values.at(t.var.index);
    }
    return total;
}

std::vector<Diagnostic> validate(const ConicProgram& program) {
    std::vector<Diagnostic> out;
    const auto& vars = program.variables();
    std::vector<char> used(vars.size(), 0);
    for (std::size_t r = 0; r < program.linear_constraints().size(); ++r) {
        const auto& row = program.linear_constraints()[r];
        if (row.terms.empty()) {
            out.push_back({Severity::Warning,
                           fmt::format("row {} '{}' has no terms", r, row.name)});
        }
        for (const auto& t : row.terms) {
            used[t.var.index] = 1;
            if (!std::isfinite(t.coef)) {
                out.push_back({Severity::Error,
                               fmt::format("row {} '{}' has a non-finite coefficient", r, row.name)});
            }
        }
    }
    for (const auto& cone : program.cones()) {
        for (auto m : cone.members) {
            used[m.index] = 1;
        }
    }
    for (const auto& t : program.objective().terms) {
        used[t.var.index] = 1;
    }
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const auto& v = vars[j];
        if (!used[j]) {
            out.push_back({Severity::Warning, fmt::format("variable '{}' is never referenced", v.name)});
        }
        if (v.lower > v.upper) {
            out.push_back({Severity::Error, fmt::format("variable '{}' has lower bound {} above "
                                                        "upper bound {}",
                                                        v.name, v.lower, v.upper)});
        }
        if (v.is_binary()) {
            auto ok = [](double b) { return b == 0.0 || b == 1.0; };
            if (!ok(v.lower) || !ok(v.upper)) {
                out.push_back({Severity::Error,
                               fmt::format("binary variable '{}' has bounds [{}, {}]", v.name,
                                           v.lower, v.upper)});
            }
        }
    }
    return out;
}

double cone_gap(const ConeConstraint& cone, const std::vector<double>& values) {
    const auto& m = cone.members;
    double sq = 0.0;
    const std::size_t first_y = cone.kind == ConeKind::Rotated ? 2 : 1;
    for (std::size_t k = first_y; k < m.size(); ++k) {
        const double y = values[m[k].index];
        sq += y * y;
    }
    if (cone.kind == ConeKind::Rotated) {
        const double u = values[m[0].index];
        const double w = values[m[1].index];
        // Negative heads are infeasible even when the product is positive.
        const double head = std::min({u * w, u * std::abs(w), w * std::abs(u)});
        return head - sq;
    }
    return values[m[0].index] - std::sqrt(sq);
}

FeasibilityReport check_feasibility(const ConicProgram& program,
                                    const std::vector<double>& values) {
    FeasibilityReport rep;
    const auto& vars = program.variables();
    if (values.size() != vars.size()) {
        throw ProgramError(fmt::format("check_feasibility: {} values for {} variables",
                                       values.size(), vars.size()));
    }
    for (std::size_t j = 0; j < vars.size(); ++j) {
        const double x = values[j];
        rep.max_bound_violation =
            std::max({rep.max_bound_violation, vars[j].lower - x, x - vars[j].upper});
        if (vars[j].is_binary()) {
            rep.max_integrality_violation =
                std::max(rep.max_integrality_violation, std::abs(x - std::round(x)));
        }
    }
    for (const auto& row : program.linear_constraints()) {
        double lhs = 0.0;
        for (const auto& t : row.terms) {
            lhs += t.coef * values[t.var.index];
        }
        double viol = 0.0;
        switch (row.relation) {
        case Relation::LessEqual: viol = lhs - row.rhs; break;
        case Relation::GreaterEqual: viol = row.rhs - lhs; break;
        case Relation::Equal: viol = std::abs(lhs - row.rhs); break;
        }
        rep.max_linear_violation = std::max(rep.max_linear_violation, viol);
    }
    rep.cone_gaps.reserve(program.cones().size());
    for (const auto& cone : program.cones()) {
        const double g = cone_gap(cone, values);
        rep.cone_gaps.push_back(g);
        rep.min_cone_residual = std::min(rep.min_cone_residual, g);
    }
    return rep;
}

namespace {

std::string number(double v) {
    if (v == kInf) return "inf";
    if (v == -kInf) return "-inf";
    return fmt::format("{:.17g}", v);
}

double parse_number(const std::string& token) {
    if (token == "inf" || token == "+inf") return kInf;
    if (token == "-inf") return -kInf;
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(token, &used);
    } catch (const std::exception&) {
        throw ProgramError(fmt::format("bad number '{}'", token));
    }
    if (used != token.size()) {
        throw ProgramError(fmt::format("bad number '{}'", token));
    }
    return v;
}

const char* relation_token(Relation r) {
    switch (r) {
    case Relation::LessEqual: return "le";
    case Relation::Equal: return "eq";
    case Relation::GreaterEqual: return "ge";
    }
    return "eq";
}

std::string label(const std::string& name) { return name.empty() ? "-" : name; }

}  // namespace

void write_text(std::ostream& out, const ConicProgram& program) {
    const auto& vars = program.variables();
    out << "conic-program v1\n";
    for (const auto& v : vars) {
        out << "var " << v.name << ' ' << number(v.lower) << ' ' << number(v.upper) << ' '
            << (v.is_binary() ? 'B' : 'C') << ' ' << v.priority << '\n';
    }
    out << "min " << number(program.objective().constant);
    for (const auto& t : program.objective().terms) {
        out << ' ' << number(t.coef) << ' ' << vars[t.var.index].name;
    }
    out << '\n';
    for (const auto& row : program.linear_constraints()) {
        out << "row " << label(row.name) << ' ' << relation_token(row.relation) << ' '
            << number(row.rhs);
        for (const auto& t : row.terms) {
            out << ' ' << number(t.coef) << ' ' << vars[t.var.index].name;
        }
        out << '\n';
    }
    for (const auto& cone : program.cones()) {
        out << (cone.kind == ConeKind::Rotated ? "rcone " : "scone ") << label(cone.name);
        for (auto m : cone.members) {
            out << ' ' << vars[m.index].name;
        }
        out << '\n';
    }
    out << "end\n";
}

std::string to_text(const ConicProgram& program) {
    std::ostringstream os;
    write_text(os, program);
    return os.str();
}

ConicProgram read_text(std::istream& in) {
    ConicProgram prog;
    std::string line;
    int line_no = 0;
    bool header = false;
    bool ended = false;
    auto fail = [&](const std::string& what) {
        throw ProgramError(fmt::format("line {}: {}", line_no, what));
    };
    auto lookup = [&](const std::string& name) {
        VarId id = prog.find(name);
        if (id.index < 0) fail(fmt::format("unknown variable '{}'", name));
        return id;
    };
    auto unlabel = [](const std::string& s) { return s == "-" ? std::string{} : s; };
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::vector<std::string> tok;
        for (std::string s; ls >> s;) tok.push_back(s);
        if (tok.empty()) continue;
        if (!header) {
            if (tok.size() != 2 || tok[0] != "conic-program" || tok[1] != "v1") {
                fail("expected header 'conic-program v1'");
            }
            header = true;
            continue;
        }
        const std::string& kw = tok[0];
        try {
            if (kw == "var") {
                if (tok.size() != 6) fail("var expects 5 fields");
                const VarType type = tok[4] == "B" ? VarType::Binary : VarType::Continuous;
                if (tok[4] != "B" && tok[4] != "C") fail("var type must be B or C");
                prog.add_variable(tok[1], parse_number(tok[2]), parse_number(tok[3]), type,
                                  std::stoi(tok[5]));
            } else if (kw == "min") {
                if (tok.size() < 2 || tok.size() % 2 != 0) fail("min expects constant and pairs");
                std::vector<Term> terms;
                for (std::size_t k = 2; k + 1 < tok.size(); k += 2) {
                    terms.push_back({lookup(tok[k + 1]), parse_number(tok[k])});
                }
                prog.set_objective(std::move(terms), parse_number(tok[1]));
            } else if (kw == "row") {
                if (tok.size() < 4 || tok.size() % 2 != 0) fail("row expects name, relation, rhs, pairs");
                Relation rel = Relation::Equal;
                if (tok[2] == "le") rel = Relation::LessEqual;
                else if (tok[2] == "ge") rel = Relation::GreaterEqual;
                else if (tok[2] != "eq") fail("relation must be le, eq or ge");
                std::vector<Term> terms;
                for (std::size_t k = 4; k + 1 < tok.size(); k += 2) {
                    terms.push_back({lookup(tok[k + 1]), parse_number(tok[k])});
                }
                prog.add_linear(std::move(terms), rel, parse_number(tok[3]), unlabel(tok[1]));
            } else if (kw == "rcone") {
                if (tok.size() < 4) fail("rcone expects name, u, w");
                std::vector<VarId> ys;
                for (std::size_t k = 4; k < tok.size(); ++k) ys.push_back(lookup(tok[k]));
                prog.add_rotated_cone(lookup(tok[2]), lookup(tok[3]), ys, unlabel(tok[1]));
            } else if (kw == "scone") {
                if (tok.size() < 3) fail("scone expects name, t");
                std::vector<VarId> ys;
                for (std::size_t k = 3; k < tok.size(); ++k) ys.push_back(lookup(tok[k]));
                prog.add_standard_cone(lookup(tok[2]), ys, unlabel(tok[1]));
            } else if (kw == "end") {
                ended = true;
                break;
            } else {
                fail(fmt::format("unknown directive '{}'", kw));
            }
        } catch (const ProgramError& e) {
            const std::string msg = e.what();
            if (msg.rfind("line ", 0) == 0) throw;
            fail(msg);
        }
    }
    if (!header) throw ProgramError("empty program text");
    if (!ended) throw ProgramError("missing 'end'");
    return prog;
}

ConicProgram from_text(const std::string& text) {
    std::istringstream is(text);
    return read_text(is);
}

}  // namespace ddcp::conic
