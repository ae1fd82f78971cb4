#include <algorithm>
#include <cmath>
#include <map>

#include <fmt/format.h>

#include "ddcp/pipeline/ddcp.hpp"

namespace ddcp::pipeline {

using conic::SolveStatus;
using grid::NetworkCase;
using planning::BessParams;
using scenario::LoadSet;

namespace {

std::vector<int> candidates_or_default(const NetworkCase& net, const StageOptions& options) {
    return options.candidate_buses.empty() ? planning::bess_candidate_buses(net) : options.candidate_buses;
}

// Storage-planning solve shared by the stages; the plan is empty when the
// model has no solution.
struct StorageSolve {
    planning::Model model;
    conic::Solution solution;
};

StorageSolve solve_storage(planning::Model model, const conic::SolveParams& params) {
    conic::Solution s = conic::solve_mixed_integer(model.program, params, planning::vmbp_rounding(model));
    return {std::move(model), std::move(s)};
}

}  // namespace

BottleneckRanking diagnose_bottlenecks(const NetworkCase& net, const LoadSet& loads, const BessParams& bess,
                                       const grid::CableCatalog& catalog, const StageOptions& options) {
    BottleneckRanking out;
    out.lambda = options.lambda > 0.0 ? options.lambda : planning::default_lambda(net, catalog);
    auto [model, sol] =
        solve_storage(planning::build_relaxed_vmbp(net, loads, bess, candidates_or_default(net, options), out.lambda),
                      options.solver);
    out.status = sol.status;
    if (!sol.has_values() || !sol.optimal()) return out;
    out.objective = sol.objective;
    out.bess = planning::extract_bess_plan(net, model, sol);
    const grid::Topology topo = grid::topology(net);
    const double ib = grid::PerUnit(net).i_base_a();
    for (std::size_t k = 0; k < net.branches.size(); ++k) {
        Bottleneck b;
        b.branch = static_cast<int>(k);
        b.from = net.branches[k].from;
        b.to = net.branches[k].to;
        b.hops = topo.branch_hops(b.branch);
        for (int t = 0; t < model.horizon; ++t) {
            const double tau = std::max(0.0, sol.value(model.tau[k][t]));
            b.slack_total += tau;
            b.slack_max = std::max(b.slack_max, tau);
            b.relaxed_peak_a = std::max(b.relaxed_peak_a, std::sqrt(std::max(0.0, sol.value(model.flow.l[k][t]))) * ib);
        }
        if (b.slack_max > kSlackTol) out.items.push_back(b);
    }
    std::sort(out.items.begin(), out.items.end(), [](const Bottleneck& a, const Bottleneck& b) {
        if (a.slack_total != b.slack_total) return a.slack_total > b.slack_total;
        if (a.hops != b.hops) return a.hops < b.hops;
        return a.branch < b.branch;
    });
    return out;
}

std::vector<planning::UpgradeItem> select_upgrades(const NetworkCase& net, const BottleneckRanking& ranking,
                                                   const grid::CableCatalog& catalog, int n) {
    if (n < 0 || n > static_cast<int>(ranking.size())) {
        throw planning::PlanningError(fmt::format("cannot upgrade {} of {} ranked branches", n, ranking.size()));
    }
    std::vector<planning::UpgradeItem> out;
    for (int i = 0; i < n; ++i) {
        const Bottleneck& b = ranking.items[i];
        const auto& br = net.branches.at(b.branch);
        auto menu = planning::cable_menu(br, catalog, b.relaxed_peak_a);
        const auto best = std::min_element(menu.begin(), menu.end(), [&](const auto& x, const auto& y) {
            const double cx = x.cost(br.length_m), cy = y.cost(br.length_m);
            if (cx != cy) return cx < cy;
            if (x.ampacity_a != y.ampacity_a) return x.ampacity_a < y.ampacity_a;
            return x.name < y.name;
        });
        planning::UpgradeItem item;
        item.branch = b.branch;
        item.from = br.from;
        item.to = br.to;
        item.old_type = br.cable_type;
        item.cable = *best;
        item.relaxed_peak_a = b.relaxed_peak_a;
        item.length_m = br.length_m;
        item.cost = best->cost(br.length_m);
        const NetworkCase after = grid::apply_upgrade(net, br.from, br.to, *best);
        item.impedance_ratio = grid::impedance_ratio(br, after.branches[b.branch]);
        out.push_back(std::move(item));
    }
    return out;
}

NRange default_n_range(std::size_t ranking_size) {
    const int r = static_cast<int>(ranking_size);
    if (r == 0) return {0, 0};
    return {std::max(1, r - 5), r};
}

const TopNRow* DdcpResult::chosen() const {
    for (const auto& row : rows) {
        if (row.n == chosen_n) return &row;
    }
    return nullptr;
}

DdcpResult run_ddcp(const NetworkCase& net, const LoadSet& loads, const BessParams& bess,
                    const grid::CableCatalog& catalog, std::optional<NRange> n_range, const StageOptions& options) {
    DdcpResult out;
    out.params = bess;
    out.ranking = diagnose_bottlenecks(net, loads, bess, catalog, options);
    if (!out.ranking.solved()) {
        out.warnings.push_back(out.ranking.infeasible()
                                   ? "relaxed storage model is infeasible: voltage limits cannot be met"
                                   : fmt::format("relaxed storage model ended with status {}",
                                                 conic::to_string(out.ranking.status)));
        return out;
    }
    const NRange range = n_range ? *n_range : default_n_range(out.ranking.size());
    if (range.lo < 0 || range.hi < range.lo || range.hi > static_cast<int>(out.ranking.size())) {
        throw planning::PlanningError(
            fmt::format("Top-N range {}..{} is outside 0..{}", range.lo, range.hi, out.ranking.size()));
    }
    const std::vector<int> candidates = candidates_or_default(net, options);
    for (int n = range.lo; n <= range.hi; ++n) {
        TopNRow row;
        row.n = n;
        row.upgrades = select_upgrades(net, out.ranking, catalog, n);
        for (const auto& u : row.upgrades) row.cable_cost += u.cost;
        const NetworkCase upgraded = planning::apply_plan(net, row.upgrades);
        std::vector<int> marked;
        for (const auto& u : row.upgrades) marked.push_back(u.branch);
        auto [model, sol] =
            solve_storage(planning::build_vmbp(upgraded, loads, bess, candidates, marked), options.solver);
        row.status = sol.status;
        if (sol.optimal()) {
            row.bess = planning::extract_bess_plan(upgraded, model, sol);
            row.bess_cost = row.bess.cost;
            row.total = row.cable_cost + row.bess_cost;
            row.check = planning::run_vdq(upgraded, planning::with_bess(loads, row.bess), options.solver);
            if (!row.check.clean()) {
                row.note = fmt::format("flow check: {} overloaded lines, {} low-voltage buses",
                                       row.check.stats.violated_lines, row.check.stats.voltage_violations);
            }
        } else {
            row.note = row.status == SolveStatus::Infeasible ? "infeasible with the remaining limits"
                                                             : fmt::format("solve ended: {}", conic::to_string(row.status));
        }
        out.rows.push_back(std::move(row));
    }
    for (const auto& row : out.rows) {
        if (!row.feasible()) continue;
        if (out.chosen_n < 0 || row.total < out.chosen_total) {
            out.chosen_n = row.n;
            out.chosen_total = row.total;
        }
    }
    if (out.chosen_n < 0) out.warnings.push_back("no Top-N level is feasible");
    return out;
}

VcuOutcome run_vcu(const NetworkCase& net, const LoadSet& loads, const grid::CableCatalog& catalog,
                   const conic::SolveParams& solver, const planning::VcuOptions& options) {
    VcuOutcome out;
    out.before = planning::run_vdq(net, loads, solver);
    if (!out.before.ok()) {
        out.status = out.before.status;
        out.note = out.before.collapse ? "model collapse in the flow check" : "flow check failed";
        return out;
    }
    const auto peak = out.before.peak_current_a(net.branches.size());
    for (int k : out.before.overloaded_branches()) {
        out.candidates.push_back({k, peak[k], planning::cable_menu(net.branches[k], catalog, peak[k])});
    }
    if (out.candidates.empty() && out.before.stats.voltage_violations == 0) {
        out.status = SolveStatus::Optimal;
        out.after = out.before;
        return out;
    }
    const planning::Model model = planning::build_vcu(net, loads, out.candidates, options);
    const conic::Solution sol = conic::solve_mixed_integer(model.program, solver, planning::vcu_rounding(model));
    out.status = sol.status;
    if (!sol.optimal()) {
        out.note = fmt::format("cable upgrade solve ended: {}", conic::to_string(sol.status));
        return out;
    }
    out.plan = planning::extract_upgrade_plan(net, model, sol);
    out.after = planning::run_vdq(planning::apply_plan(net, out.plan.items), loads, solver);
    return out;
}

VmbpOutcome run_vmbp(const NetworkCase& net, const LoadSet& loads, const BessParams& bess,
                     const StageOptions& options) {
    VmbpOutcome out;
    auto [model, sol] = solve_storage(planning::build_vmbp(net, loads, bess, candidates_or_default(net, options)),
                                      options.solver);
    out.status = sol.status;
    if (!sol.optimal()) {
        out.note = sol.status == SolveStatus::Infeasible ? "infeasible: storage alone cannot remove the violations"
                                                         : fmt::format("solve ended: {}", conic::to_string(sol.status));
        return out;
    }
    out.plan = planning::extract_bess_plan(net, model, sol);
    out.after = planning::run_vdq(net, planning::with_bess(loads, out.plan), options.solver);
    return out;
}

bool hosting_level_ok(const NetworkCase& net, double charger_kw, std::uint32_t seed, double penetration,
                      bool with_bess, const HostingOptions& options) {
    scenario::EvConfig ev;
    ev.penetration = penetration;
    ev.charger_kw = charger_kw;
    ev.seed = seed;
    ev.power_factor = options.power_factor;
    if (!with_bess) {
        return planning::run_vdq(net, scenario::scenario_loads(net, ev, options.mode), options.stage.solver).clean();
    }
    const LoadSet loads = scenario::scenario_loads(net, ev, scenario::LoadMode::Horizon);
    return run_vmbp(net, loads, options.bess, options.stage).feasible();
}

HostingThreshold hosting_capacity(const NetworkCase& net, double charger_kw, std::uint32_t seed, bool with_bess,
                                  const HostingOptions& options) {
    const int steps = static_cast<int>(std::lround(1.0 / kHostingResolution));
    std::map<int, bool> memo;
    HostingThreshold out;
    auto ok = [&](int k) {
        auto it = memo.find(k);
        if (it != memo.end()) return it->second;
        ++out.evaluations;
        const bool pass = hosting_level_ok(net, charger_kw, seed, k * kHostingResolution, with_bess, options);
        memo.emplace(k, pass);
        return pass;
    };
    if (!ok(0)) {
        out.limited_at_zero = true;
        return out;
    }
    if (ok(steps)) {
        out.penetration = 1.0;
        return out;
    }
    int lo = 0, hi = steps;
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        (ok(mid) ? lo : hi) = mid;
    }
    out.penetration = lo * kHostingResolution;
    return out;
}

std::vector<HostingRow> hosting_capacity_table(const NetworkCase& net, const std::vector<double>& base_kvs,
                                               const std::vector<double>& charger_kws, std::uint32_t seed,
                                               bool with_bess, const HostingOptions& options) {
    std::vector<HostingRow> out;
    for (double kv : base_kvs) {
        const NetworkCase at = grid::rebase_voltage(net, kv);
        for (double kw : charger_kws) {
            HostingRow row;
            row.base_kv = kv;
            row.charger_kw = kw;
            row.onset_pct = 100.0 * hosting_capacity(at, kw, seed, false, options).penetration;
            if (with_bess) row.bess_limit_pct = 100.0 * hosting_capacity(at, kw, seed, true, options).penetration;
            out.push_back(row);
        }
    }
    return out;
}

namespace {

int residual(const planning::ViolationReport& r) { return r.stats.violated_lines + r.stats.voltage_violations; }

StrategyRow vcu_row(std::string name, const NetworkCase& net, const LoadSet& loads, const grid::CableCatalog& catalog,
                    const conic::SolveParams& solver) {
    StrategyRow row;
    row.name = std::move(name);
    try {
        const VcuOutcome v = run_vcu(net, loads, catalog, solver);
        row.status = conic::to_string(v.status);
        row.feasible = v.feasible() && v.after.ok();
        row.cable_cost = v.plan.total_cost;
        row.total_cost = row.cable_cost;
        row.residual_violations = v.after.ok() ? residual(v.after) : residual(v.before);
        row.note = v.note;
        if (row.feasible && v.plan.slack_total > 1e-7) row.note = "ampacity slack in use";
    } catch (const planning::PlanningError& e) {
        row.status = "error";
        row.note = e.what();
    }
    return row;
}

}  // namespace

std::vector<StrategyRow> compare_strategies(const NetworkCase& net, const LoadSet& loads,
                                            const grid::CableCatalog& catalog, const BessParams& bess,
                                            const CompareOptions& options) {
    std::vector<StrategyRow> out;
    const conic::SolveParams& solver = options.stage.solver;
    out.push_back(vcu_row("vcu", net, loads, catalog, solver));

    {
        StrategyRow row;
        row.name = "vmbp";
        const VmbpOutcome v = run_vmbp(net, loads, bess, options.stage);
        row.status = conic::to_string(v.status);
        row.feasible = v.feasible();
        row.bess_cost = v.plan.cost;
        row.total_cost = row.bess_cost;
        row.residual_violations = residual(v.feasible() ? v.after : planning::run_vdq(net, loads, solver));
        row.note = v.note;
        out.push_back(row);
    }

    {
        StrategyRow row;
        row.name = "ddcp";
        try {
            const DdcpResult d = run_ddcp(net, loads, bess, catalog, options.n_range, options.stage);
            const TopNRow* c = d.chosen();
            row.feasible = c != nullptr;
            row.status = c ? conic::to_string(c->status) : conic::to_string(d.ranking.status);
            if (c) {
                row.cable_cost = c->cable_cost;
                row.bess_cost = c->bess_cost;
                row.total_cost = c->total;
                row.residual_violations = residual(c->check);
                row.note = fmt::format("N = {}", c->n);
            } else if (!d.warnings.empty()) {
                row.note = d.warnings.front();
            }
        } catch (const planning::PlanningError& e) {
            row.status = "error";
            row.note = e.what();
        }
        out.push_back(row);
    }

    {
        const NetworkCase up = grid::rebase_voltage(net, options.uprate_kv);
        StrategyRow row = vcu_row(fmt::format("uprate-{}kV+vcu", options.uprate_kv), up, loads, catalog, solver);
        out.push_back(row);
    }
    return out;
}

}  // namespace ddcp::pipeline
