#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <queue>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "ddcp/conic/solver.hpp"

namespace ddcp::conic {

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::GapLimit: return "gap_limit";
        case SolveStatus::NodeLimit: return "node_limit";
        case SolveStatus::TimeLimit: return "time_limit";
        case SolveStatus::NumericalFailure: return "numerical_failure";
    }
    return "unknown";
}

void SolveParams::check() const {
    auto bad = [](const char* what) { throw ProgramError(fmt::format("invalid solve parameter: {}", what)); };
    if (!(feasibility_tol > 0.0) || feasibility_tol > 1e-2) bad("feasibility_tol");
    if (!(integrality_tol > 0.0) || integrality_tol >= 0.5) bad("integrality_tol");
    if (!(rel_gap_tol >= 0.0)) bad("rel_gap_tol");
    if (node_limit < 1) bad("node_limit");
    if (!(time_limit > 0.0)) bad("time_limit");
    if (max_iterations < 5) bad("max_iterations");
}

namespace {

constexpr double kPresolveTol = 1e-9;
constexpr double kZeroTol = 1e-12;

struct Row {
    std::vector<std::pair<int, double>> terms;
    double lo = -kInf;
    double hi = kInf;
    bool active = true;
};

struct Presolved {
    bool infeasible = false;
    std::string reason;
    std::vector<double> lb, ub;
    std::vector<bool> fixed;
    std::vector<Row> rows;
    std::vector<bool> cone_active;
};

bool close_bounds(double lo, double hi) {
    if (!std::isfinite(lo) || !std::isfinite(hi)) return false;
    return hi - lo <= kZeroTol * std::max(1.0, std::abs(lo));
}

double row_scale(const Row& r) {
    double s = 1.0;
    if (std::isfinite(r.lo)) s = std::max(s, std::abs(r.lo));
    if (std::isfinite(r.hi)) s = std::max(s, std::abs(r.hi));
    return s;
}

class Presolver {
public:
    Presolver(const ConicProgram& prog, std::vector<double> lb, std::vector<double> ub) : prog_(prog) {
        out_.lb = std::move(lb);
        out_.ub = std::move(ub);
        out_.fixed.assign(out_.lb.size(), false);
        for (const auto& lc : prog.linear_constraints()) {
            Row r;
            for (const auto& t : lc.terms) r.terms.emplace_back(t.var.index, t.coef);
            switch (lc.relation) {
                case Relation::LessEqual: r.hi = lc.rhs; break;
                case Relation::GreaterEqual: r.lo = lc.rhs; break;
                case Relation::Equal: r.lo = r.hi = lc.rhs; break;
            }
            out_.rows.push_back(std::move(r));
        }
        out_.cone_active.assign(prog.cones().size(), true);
    }

    Presolved run() {
        for (std::size_t j = 0; j < out_.lb.size() && !out_.infeasible; ++j) check_var(static_cast<int>(j));
        bool changed = true;
        for (int pass = 0; changed && pass < 200 && !out_.infeasible; ++pass) {
            changed = false;
            for (auto& r : out_.rows) {
                if (out_.infeasible) break;
                if (r.active) changed |= reduce_row(r);
            }
            for (std::size_t k = 0; k < prog_.cones().size() && !out_.infeasible; ++k) {
                if (out_.cone_active[k]) changed |= reduce_cone(k);
            }
        }
        if (!out_.infeasible) merge_parallel();
        return std::move(out_);
    }

private:
    void fail(std::string why) {
        if (!out_.infeasible) {
            out_.infeasible = true;
            out_.reason = std::move(why);
        }
    }

    // Returns true when the variable became fixed.
    bool check_var(int j) {
        if (out_.fixed[j]) return false;
        double& lo = out_.lb[j];
        double& hi = out_.ub[j];
        const double mag = std::min(std::abs(lo), std::abs(hi));
        const double tol = kPresolveTol * (std::isfinite(mag) ? std::max(1.0, mag) : 1.0);
        if (lo > hi + tol) {
            fail(fmt::format("bounds of '{}' are contradictory", prog_.variables()[j].name));
            return false;
        }
        if (prog_.variables()[j].is_binary()) {
            lo = std::ceil(lo - 1e-6);
            hi = std::floor(hi + 1e-6);
            if (lo > hi) {
                fail(fmt::format("binary '{}' has no integral value", prog_.variables()[j].name));
                return false;
            }
        }
        if (lo > hi) lo = hi = 0.5 * (lo + hi);
        if (close_bounds(lo, hi)) {
            hi = lo;
            out_.fixed[j] = true;
            return true;
        }
        return false;
    }

    bool tighten(int j, double lo, double hi) {
        bool changed = false;
        if (lo > out_.lb[j]) {
            out_.lb[j] = lo;
            changed = true;
        }
        if (hi < out_.ub[j]) {
            out_.ub[j] = hi;
            changed = true;
        }
        if (changed) check_var(j);
        return changed;
    }

    bool fix(int j, double v) {
        const double tol = kPresolveTol * std::max(1.0, std::abs(v));
        if (v < out_.lb[j] - tol || v > out_.ub[j] + tol) {
            fail(fmt::format("'{}' forced outside its bounds", prog_.variables()[j].name));
            return false;
        }
        out_.lb[j] = out_.ub[j] = v;
        out_.fixed[j] = true;
        return true;
    }

    bool reduce_row(Row& r) {
        bool changed = false;
        // Substitute fixed variables.
        auto it = std::remove_if(r.terms.begin(), r.terms.end(), [&](const auto& t) {
            if (!out_.fixed[t.first]) return false;
            const double v = t.second * out_.lb[t.first];
            r.lo -= v;
            r.hi -= v;
            return true;
        });
        if (it != r.terms.end()) {
            r.terms.erase(it, r.terms.end());
            changed = true;
        }
        const double tol = kPresolveTol * row_scale(r);
        if (r.terms.empty()) {
            if (r.lo > tol || r.hi < -tol) fail("constant row violated");
            r.active = false;
            return true;
        }
        if (r.terms.size() == 1) {
            const auto [j, a] = r.terms.front();
            double lo = r.lo / a, hi = r.hi / a;
            if (a < 0.0) std::swap(lo, hi);
            const double vtol = tol / std::abs(a);
            if (lo > out_.ub[j] + vtol || hi < out_.lb[j] - vtol) {
                fail(fmt::format("singleton row on '{}' conflicts with bounds", prog_.variables()[j].name));
                return true;
            }
            tighten(j, std::min(lo, out_.ub[j]), std::max(hi, out_.lb[j]));
            r.active = false;
            return true;
        }
        double minact = 0.0, maxact = 0.0;
        for (const auto& [j, a] : r.terms) {
            minact += a > 0.0 ? a * out_.lb[j] : a * out_.ub[j];
            maxact += a > 0.0 ? a * out_.ub[j] : a * out_.lb[j];
        }
        if (std::isnan(minact)) minact = -kInf;
        if (std::isnan(maxact)) maxact = kInf;
        if (minact > r.hi + tol || maxact < r.lo - tol) {
            fail("row activity cannot meet its bounds");
            return true;
        }
        if (minact >= r.lo && maxact <= r.hi) {
            r.active = false;
            return true;
        }
        if (std::isfinite(r.hi) && std::isfinite(minact) && std::abs(minact - r.hi) <= kZeroTol * row_scale(r)) {
            for (const auto& [j, a] : r.terms) fix(j, a > 0.0 ? out_.lb[j] : out_.ub[j]);
            r.active = false;
            return true;
        }
        if (std::isfinite(r.lo) && std::isfinite(maxact) && std::abs(maxact - r.lo) <= kZeroTol * row_scale(r)) {
            for (const auto& [j, a] : r.terms) fix(j, a > 0.0 ? out_.ub[j] : out_.lb[j]);
            r.active = false;
            return true;
        }
        return changed;
    }

    bool zero_members(const std::vector<VarId>& members, std::size_t from) {
        for (std::size_t k = from; k < members.size(); ++k) {
            const int j = members[k].index;
            if (out_.fixed[j]) {
                if (std::abs(out_.lb[j]) > kPresolveTol) {
                    fail("cone forces a nonzero member to zero");
                    return false;
                }
            } else {
                fix(j, 0.0);
            }
        }
        return true;
    }

    bool reduce_cone(std::size_t k) {
        const auto& cone = prog_.cones()[k];
        const auto& mem = cone.members;
        bool all_fixed = true;
        for (auto v : mem) all_fixed &= static_cast<bool>(out_.fixed[v.index]);
        if (all_fixed) {
            std::vector<double> vals(out_.lb.size(), 0.0);
            for (auto v : mem) vals[v.index] = out_.lb[v.index];
            if (cone_gap(cone, vals) < -kPresolveTol) fail(fmt::format("cone '{}' violated by fixed values", cone.name));
            out_.cone_active[k] = false;
            return true;
        }
        auto fixed_zero = [&](VarId v) {
            return out_.fixed[v.index] && std::abs(out_.lb[v.index]) <= kZeroTol;
        };
        if (cone.kind == ConeKind::Standard) {
            const int t = mem[0].index;
            if (out_.ub[t] < -kPresolveTol) {
                fail(fmt::format("cone '{}' head is negative", cone.name));
                return true;
            }
            if (out_.lb[t] < 0.0) tighten(t, 0.0, out_.ub[t]);
            if (fixed_zero(mem[0])) {
                zero_members(mem, 1);
                out_.cone_active[k] = false;
                return true;
            }
            return false;
        }
        for (int head = 0; head < 2; ++head) {
            const int j = mem[head].index;
            if (out_.ub[j] < -kPresolveTol) {
                fail(fmt::format("cone '{}' head is negative", cone.name));
                return true;
            }
        }
        if (fixed_zero(mem[0]) || fixed_zero(mem[1])) {
            for (int head = 0; head < 2; ++head) {
                const int j = mem[head].index;
                if (out_.lb[j] < 0.0) tighten(j, 0.0, out_.ub[j]);
            }
            zero_members(mem, 2);
            out_.cone_active[k] = false;
            return true;
        }
        bool changed = false;
        for (int head = 0; head < 2; ++head) {
            const int j = mem[head].index;
            if (out_.lb[j] < 0.0) changed |= tighten(j, 0.0, out_.ub[j]);
        }
        return changed;
    }

    // Rows with identical coefficients collapse into one ranged row.
    void merge_parallel() {
        std::map<std::vector<std::pair<int, double>>, std::size_t> seen;
        for (std::size_t i = 0; i < out_.rows.size(); ++i) {
            Row& r = out_.rows[i];
            if (!r.active) continue;
            std::sort(r.terms.begin(), r.terms.end());
            if (r.terms.front().second < 0.0) {
                for (auto& t : r.terms) t.second = -t.second;
                std::swap(r.lo, r.hi);
                r.lo = -r.lo;
                r.hi = -r.hi;
            }
            auto [pos, inserted] = seen.emplace(r.terms, i);
            if (inserted) continue;
            Row& keep = out_.rows[pos->second];
            keep.lo = std::max(keep.lo, r.lo);
            keep.hi = std::min(keep.hi, r.hi);
            r.active = false;
            const double tol = kPresolveTol * row_scale(keep);
            if (keep.lo > keep.hi + tol) {
                fail("parallel rows are contradictory");
                return;
            }
            if (keep.lo > keep.hi || close_bounds(keep.lo, keep.hi)) keep.lo = keep.hi = 0.5 * (keep.lo + keep.hi);
        }
    }

    const ConicProgram& prog_;
    Presolved out_;
};

struct Compiled {
    StandardForm form;
    std::vector<int> column;  // program variable -> column, -1 when fixed
    std::vector<int> var_of;  // column -> program variable
    double objective_constant = 0.0;
};

Compiled compile(const ConicProgram& prog, const Presolved& pre) {
    Compiled out;
    const int nv = static_cast<int>(prog.num_variables());
    out.column.assign(nv, -1);
    for (int j = 0; j < nv; ++j) {
        if (!pre.fixed[j]) {
            out.column[j] = static_cast<int>(out.var_of.size());
            out.var_of.push_back(j);
        }
    }
    const int n = static_cast<int>(out.var_of.size());

    out.form.c = Eigen::VectorXd::Zero(n);
    out.objective_constant = prog.objective().constant;
    for (const auto& t : prog.objective().terms) {
        const int col = out.column[t.var.index];
        if (col < 0) out.objective_constant += t.coef * pre.lb[t.var.index];
        else out.form.c[col] += t.coef;
    }

    std::vector<Eigen::Triplet<double>> at, gt;
    std::vector<double> b, h;
    auto add_g = [&](const std::vector<std::pair<int, double>>& terms, double sign, double rhs) {
        const int row = static_cast<int>(h.size());
        for (const auto& [j, a] : terms) gt.emplace_back(row, out.column[j], sign * a);
        h.push_back(rhs);
    };
    for (const auto& r : pre.rows) {
        if (!r.active) continue;
        if (r.lo == r.hi) {
            const int row = static_cast<int>(b.size());
            for (const auto& [j, a] : r.terms) at.emplace_back(row, out.column[j], a);
            b.push_back(r.hi);
            continue;
        }
        if (std::isfinite(r.hi)) add_g(r.terms, 1.0, r.hi);
        if (std::isfinite(r.lo)) add_g(r.terms, -1.0, -r.lo);
    }
    for (int j = 0; j < nv; ++j) {
        const int col = out.column[j];
        if (col < 0) continue;
        if (std::isfinite(pre.ub[j])) add_g({{j, 1.0}}, 1.0, pre.ub[j]);
        if (std::isfinite(pre.lb[j])) add_g({{j, 1.0}}, -1.0, -pre.lb[j]);
    }
    out.form.linear_rows = static_cast<int>(h.size());

    // Cone rows encode h - Gx = affine expression of the members.
    auto add_expr = [&](const std::vector<std::pair<int, double>>& expr) {
        const int row = static_cast<int>(h.size());
        double constant = 0.0;
        for (const auto& [j, a] : expr) {
            const int col = out.column[j];
            if (col < 0) constant += a * pre.lb[j];
            else gt.emplace_back(row, col, -a);
        }
        h.push_back(constant);
    };
    for (std::size_t k = 0; k < prog.cones().size(); ++k) {
        if (!pre.cone_active[k]) continue;
        const auto& cone = prog.cones()[k];
        const auto& m = cone.members;
        if (cone.kind == ConeKind::Rotated) {
            const int u = m[0].index, w = m[1].index;
            add_expr({{u, 1.0}, {w, 1.0}});
            add_expr({{u, 1.0}, {w, -1.0}});
            for (std::size_t i = 2; i < m.size(); ++i) add_expr({{m[i].index, 2.0}});
            out.form.soc_sizes.push_back(static_cast<int>(m.size()));
        } else {
            for (auto v : m) add_expr({{v.index, 1.0}});
            out.form.soc_sizes.push_back(static_cast<int>(m.size()));
        }
    }

    out.form.A.resize(static_cast<int>(b.size()), n);
    out.form.A.setFromTriplets(at.begin(), at.end());
    out.form.b = Eigen::Map<Eigen::VectorXd>(b.data(), static_cast<int>(b.size()));
    out.form.G.resize(static_cast<int>(h.size()), n);
    out.form.G.setFromTriplets(gt.begin(), gt.end());
    out.form.h = Eigen::Map<Eigen::VectorXd>(h.data(), static_cast<int>(h.size()));
    return out;
}

BackendSettings backend_settings(const SolveParams& params) {
    BackendSettings s;
    s.feastol = std::min(params.feasibility_tol, 1e-8);
    s.abstol = 1e-12;  // scaled objective units
    s.reltol = std::min(s.feastol, 1e-9);
    s.max_iterations = params.max_iterations;
    return s;
}

// Tolerance for accepting a backend point against the original program.
double acceptance_tol(const SolveParams& params) { return std::max(1e-6, 100.0 * params.feasibility_tol); }

Solution solve_continuous(const ConicProgram& prog, std::vector<double> lb, std::vector<double> ub,
                          const SolveParams& params, const ConicBackend& backend) {
    Solution sol;
    sol.relaxations = 1;
    const std::vector<double> node_lb = lb, node_ub = ub;
    Presolved pre = Presolver(prog, std::move(lb), std::move(ub)).run();
    if (pre.infeasible) {
        sol.status = SolveStatus::Infeasible;
        sol.messages.push_back("presolve: " + pre.reason);
        return sol;
    }
    const Compiled comp = compile(prog, pre);
    std::vector<double> values(prog.num_variables(), 0.0);
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (pre.fixed[j]) values[j] = pre.lb[j];
    }

    BackendResult res;
    if (comp.var_of.empty()) {
        res.status = BackendStatus::Optimal;
    } else {
        BackendSettings settings = backend_settings(params);
        res = backend.solve(comp.form, settings);
        sol.iterations = res.iterations;
        if (res.status == BackendStatus::NumericalFailure) {
            settings.max_iterations *= 2;
            settings.static_reg *= 100.0;
            settings.refine_steps *= 3;
            sol.messages.push_back("interior point retried after numerical failure");
            res = backend.solve(comp.form, settings);
            sol.iterations += res.iterations;
        }
    }
    switch (res.status) {
        case BackendStatus::PrimalInfeasible:
            sol.status = SolveStatus::Infeasible;
            return sol;
        case BackendStatus::DualInfeasible:
            sol.status = SolveStatus::Unbounded;
            return sol;
        case BackendStatus::NumericalFailure:
            sol.status = SolveStatus::NumericalFailure;
            sol.messages.push_back("interior point did not converge");
            return sol;
        case BackendStatus::Optimal:
            break;
    }
    // snap to the node bounds
    for (std::size_t col = 0; col < comp.var_of.size(); ++col) {
        const int j = comp.var_of[col];
        values[j] = std::clamp(res.x[static_cast<int>(col)], node_lb[j], node_ub[j]);
    }
    const FeasibilityReport rep = check_feasibility(prog, values);
    sol.values = std::move(values);
    sol.cone_gaps = rep.cone_gaps;
    sol.objective = prog.evaluate_objective(sol.values);
    sol.bound = sol.objective;
    sol.gap = 0.0;
    const double tol = acceptance_tol(params);
    if (rep.max_linear_violation > tol || rep.min_cone_residual < -tol) {
        sol.status = SolveStatus::NumericalFailure;
        sol.messages.push_back(fmt::format("solution residuals too large (linear {:.3g}, cone {:.3g})",
                                           rep.max_linear_violation, rep.min_cone_residual));
        return sol;
    }
    sol.status = SolveStatus::Optimal;
    return sol;
}

std::vector<double> lower_bounds(const ConicProgram& p) {
    std::vector<double> v;
    for (const auto& var : p.variables()) v.push_back(var.lower);
    return v;
}

std::vector<double> upper_bounds(const ConicProgram& p) {
    std::vector<double> v;
    for (const auto& var : p.variables()) v.push_back(var.upper);
    return v;
}

double rel_gap(double incumbent, double bound) {
    if (!std::isfinite(incumbent)) return kInf;
    if (!std::isfinite(bound)) return kInf;
    return std::max(0.0, incumbent - bound) / std::max(1.0, std::abs(incumbent));
}

}  // namespace

Solution solve_relaxation(const ConicProgram& program, const SolveParams& params, const ConicBackend& backend) {
    return solve_relaxation(program, lower_bounds(program), upper_bounds(program), params, backend);
}

Solution solve_relaxation(const ConicProgram& program, const std::vector<double>& lower,
                          const std::vector<double>& upper, const SolveParams& params,
                          const ConicBackend& backend) {
    params.check();
    if (lower.size() != program.num_variables() || upper.size() != program.num_variables()) {
        throw ProgramError("bound override size does not match the variable count");
    }
    return solve_continuous(program, lower, upper, params, backend);
}

namespace {

struct Node {
    long id = 0;
    int depth = 0;
    double bound = -kInf;
    std::vector<double> lb, ub;
};

struct NodeOrder {
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.id > b.id;
    }
};

class BranchAndBound {
public:
    BranchAndBound(const ConicProgram& prog, const SolveParams& params, const RoundingHeuristic& heuristic,
                   const ConicBackend& backend)
        : prog_(prog), params_(params), heuristic_(heuristic), backend_(backend) {
        for (std::size_t j = 0; j < prog.num_variables(); ++j) {
            if (prog.variables()[j].is_binary()) binaries_.push_back(static_cast<int>(j));
        }
        start_ = std::chrono::steady_clock::now();
    }

    Solution run() {
        Solution out;
        Node root{0, 0, -kInf, lower_bounds(prog_), upper_bounds(prog_)};
        std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
        long next_id = 1;
        bool failed_nodes = false;
        double failed_bound = kInf;
        bool root_done = false;
        SolveStatus stop = SolveStatus::Optimal;

        open.push(std::move(root));
        while (!open.empty()) {
            if (nodes_ >= params_.node_limit) {
                stop = SolveStatus::NodeLimit;
                break;
            }
            if (elapsed() > params_.time_limit) {
                stop = SolveStatus::TimeLimit;
                break;
            }
            Node node = open.top();
            open.pop();
            if (std::isfinite(incumbent_) && prunable(node.bound)) continue;
            ++nodes_;
            Solution rel = relax(node.lb, node.ub);
            if (!root_done) {
                root_done = true;
                if (rel.status == SolveStatus::Unbounded) {
                    out.status = SolveStatus::Unbounded;
                    finish(out);
                    return out;
                }
            }
            if (rel.status == SolveStatus::Infeasible) {
                log(node, rel.objective, current_bound(open, failed_bound), "infeasible");
                continue;
            }
            if (rel.status != SolveStatus::Optimal) {
                failed_nodes = true;
                failed_bound = std::min(failed_bound, node.bound);
                messages_.push_back(fmt::format("node {} relaxation failed: {}", node.id, to_string(rel.status)));
                log(node, node.bound, current_bound(open, failed_bound), "failed");
                continue;
            }
            const double nb = std::max(node.bound, rel.objective);
            if (std::isfinite(incumbent_) && prunable(nb)) {
                log(node, nb, current_bound(open, failed_bound), "pruned");
                continue;
            }
            if (heuristic_ && (node.id == 0 || nodes_ % 16 == 0)) run_heuristic(rel.values, node);

            const int branch = pick_branch(rel.values, node);
            if (branch < 0) {
                try_assignment(rel.values, node.lb, node.ub, "integral");
                log(node, nb, current_bound(open, failed_bound), "integral");
                continue;
            }
            for (int side = 1; side >= 0; --side) {
                Node child{next_id++, node.depth + 1, nb, node.lb, node.ub};
                child.lb[branch] = child.ub[branch] = side;
                open.push(std::move(child));
            }
            log(node, nb, current_bound(open, failed_bound), "branched");
        }

        double bound = current_bound(open, failed_bound);
        if (stop == SolveStatus::Optimal && !std::isfinite(bound)) bound = incumbent_;
        out.bound = std::isfinite(incumbent_) ? std::min(bound, incumbent_) : bound;
        if (!std::isfinite(incumbent_)) {
            if (stop != SolveStatus::Optimal) out.status = stop;
            else out.status = failed_nodes ? SolveStatus::NumericalFailure : SolveStatus::Infeasible;
            finish(out);
            return out;
        }
        out.values = best_;
        out.objective = incumbent_;
        out.gap = rel_gap(incumbent_, out.bound);
        if (stop != SolveStatus::Optimal) out.status = stop;
        else if (failed_nodes && out.gap > params_.rel_gap_tol) out.status = SolveStatus::GapLimit;
        else out.status = SolveStatus::Optimal;
        out.cone_gaps = check_feasibility(prog_, best_).cone_gaps;
        finish(out);
        return out;
    }

private:
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

    bool prunable(double bound) const { return rel_gap(incumbent_, bound) <= params_.rel_gap_tol; }

    template <typename Q>
    double current_bound(const Q& open, double failed_bound) const {
        double b = failed_bound;
        if (!open.empty()) b = std::min(b, open.top().bound);
        return b;
    }

    Solution relax(const std::vector<double>& lb, const std::vector<double>& ub) {
        ++relaxations_;
        Solution s = solve_continuous(prog_, lb, ub, params_, backend_);
        iterations_ += s.iterations;
        return s;
    }

    int pick_branch(const std::vector<double>& x, const Node& node) const {
        int best = -1;
        int best_prio = 0;
        double best_frac = 0.0;
        for (int j : binaries_) {
            if (node.lb[j] == node.ub[j]) continue;
            const double f = std::abs(x[j] - std::round(x[j]));
            if (f <= params_.integrality_tol) continue;
            const double score = std::min(x[j] - std::floor(x[j]), std::ceil(x[j]) - x[j]);
            const int prio = prog_.variables()[j].priority;
            if (best < 0 || prio > best_prio || (prio == best_prio && score > best_frac + 1e-12)) {
                best = j;
                best_prio = prio;
                best_frac = score;
            }
        }
        return best;
    }

    void try_assignment(const std::vector<double>& x, std::vector<double> lb, std::vector<double> ub,
                        const char* source) {
        for (int j : binaries_) {
            const double v = std::clamp(std::round(x[j]), lb[j], ub[j]);
            lb[j] = ub[j] = v;
        }
        Solution s = relax(lb, ub);
        if (s.status != SolveStatus::Optimal) return;
        if (s.objective < incumbent_) {
            incumbent_ = s.objective;
            best_ = std::move(s.values);
            if (params_.on_incumbent) params_.on_incumbent(best_, incumbent_);
            messages_.push_back(fmt::format("incumbent {:.10g} from {}", incumbent_, source));
        }
    }

    void run_heuristic(const std::vector<double>& x, const Node& node) {
        std::vector<double> guess = heuristic_(x);
        if (guess.size() != prog_.num_variables()) {
            throw ProgramError("rounding heuristic returned an assignment of the wrong size");
        }
        for (int j : binaries_) {
            if (node.lb[j] == node.ub[j]) guess[j] = node.lb[j];
        }
        std::vector<double> lb = lower_bounds(prog_), ub = upper_bounds(prog_);
        try_assignment(guess, lb, ub, "heuristic");
    }

    void log(const Node& node, double node_bound, double open_bound, const char* event) const {
        if (!params_.log) return;
        NodeLogEntry e;
        e.node = node.id;
        e.depth = node.depth;
        e.node_bound = node_bound;
        e.best_bound = std::min(open_bound, std::isfinite(incumbent_) ? incumbent_ : kInf);
        e.incumbent = incumbent_;
        e.gap = rel_gap(incumbent_, e.best_bound);
        e.event = event;
        params_.log(e);
    }

    void finish(Solution& out) {
        out.nodes = nodes_;
        out.relaxations = relaxations_;
        out.iterations = static_cast<int>(iterations_);
        out.messages = std::move(messages_);
    }

    const ConicProgram& prog_;
    const SolveParams& params_;
    const RoundingHeuristic& heuristic_;
    const ConicBackend& backend_;
    std::vector<int> binaries_;
    double incumbent_ = kInf;
    std::vector<double> best_;
    long nodes_ = 0;
    long relaxations_ = 0;
    long iterations_ = 0;
    std::vector<std::string> messages_;
    std::chrono::steady_clock::time_point start_;
};

}  // namespace

Solution solve_mixed_integer(const ConicProgram& program, const SolveParams& params,
                             const RoundingHeuristic& heuristic, const ConicBackend& backend) {
    params.check();
    return BranchAndBound(program, params, heuristic, backend).run();
}

Solution enumerate_oracle(const ConicProgram& program, const SolveParams& params, const ConicBackend& backend) {
    params.check();
    std::vector<int> bins;
    for (std::size_t j = 0; j < program.num_variables(); ++j) {
        if (program.variables()[j].is_binary()) bins.push_back(static_cast<int>(j));
    }
    if (static_cast<int>(bins.size()) > kMaxEnumeratedBinaries) {
        throw ProgramError(fmt::format("enumeration limited to {} binaries, program has {}", kMaxEnumeratedBinaries,
                                       bins.size()));
    }
    Solution best;
    best.status = SolveStatus::Infeasible;
    bool failures = false;
    const std::uint64_t count = std::uint64_t{1} << bins.size();
    std::vector<double> lb = lower_bounds(program), ub = upper_bounds(program);
    for (std::uint64_t mask = 0; mask < count; ++mask) {
        std::vector<double> l = lb, u = ub;
        bool allowed = true;
        for (std::size_t k = 0; k < bins.size(); ++k) {
            const double v = static_cast<double>((mask >> (bins.size() - 1 - k)) & 1U);
            const int j = bins[k];
            if (v < lb[j] || v > ub[j]) {
                allowed = false;
                break;
            }
            l[j] = u[j] = v;
        }
        if (!allowed) continue;
        Solution s = solve_continuous(program, l, u, params, backend);
        best.relaxations += 1;
        best.iterations += s.iterations;
        if (s.status == SolveStatus::Unbounded) {
            best.status = SolveStatus::Unbounded;
            best.values.clear();
            return best;
        }
        if (s.status == SolveStatus::NumericalFailure) failures = true;
        if (s.status == SolveStatus::Optimal && s.objective < best.objective) {
            const long rel = best.relaxations;
            const int it = best.iterations;
            best = std::move(s);
            best.relaxations = rel;
            best.iterations = it;
        }
    }
    best.nodes = static_cast<long>(count);
    if (best.status == SolveStatus::Optimal) {
        best.bound = best.objective;
        best.gap = 0.0;
        if (failures) {
            best.status = SolveStatus::GapLimit;
            best.messages.push_back("some assignments failed numerically");
        }
    } else if (failures) {
        best.status = SolveStatus::NumericalFailure;
    }
    return best;
}

}  // namespace ddcp::conic
