#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ddcp/planning/models.hpp"

namespace ddcp::pipeline {

/// Slack threshold for calling a branch a bottleneck, squared p.u.
inline constexpr double kSlackTol = 1e-6;

struct Bottleneck {
    int branch = -1;
    grid::BusId from{}, to{};
    double relaxed_peak_a = 0.0;
    double slack_total = 0.0;  // sum over steps of tau
    double slack_max = 0.0;
    int hops = 0;
};

struct BottleneckRanking {
    conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
    std::vector<Bottleneck> items;
    double objective = 0.0;
    double lambda = 0.0;
    planning::BessPlan bess;  // storage the relaxed solve installed

    /// The relaxed model has no slack on voltages, so it can still be infeasible.
    bool infeasible() const { return status == conic::SolveStatus::Infeasible; }
    bool solved() const { return status == conic::SolveStatus::Optimal; }
    std::size_t size() const { return items.size(); }
};

struct StageOptions {
    conic::SolveParams solver;
    double lambda = 0.0;  // <= 0 selects planning::default_lambda
    std::vector<int> candidate_buses;  // empty selects every flagged bus
};

/// Stage I: relaxed storage planning; branches with slack above kSlackTol,
/// ordered by total slack (descending), hop distance, branch index.
BottleneckRanking diagnose_bottlenecks(const grid::NetworkCase& net, const scenario::LoadSet& loads,
                                       const planning::BessParams& bess, const grid::CableCatalog& catalog,
                                       const StageOptions& options = {});

/// Stage II: cheapest catalog entry of the branch's kind rated at least
/// 1.05x the relaxed peak, for each of the first n ranked branches.
std::vector<planning::UpgradeItem> select_upgrades(const grid::NetworkCase& net, const BottleneckRanking& ranking,
                                                   const grid::CableCatalog& catalog, int n);

struct TopNRow {
    int n = 0;
    std::vector<planning::UpgradeItem> upgrades;
    double cable_cost = 0.0;
    conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
    planning::BessPlan bess;
    double bess_cost = 0.0;
    double total = 0.0;
    planning::ViolationReport check;  // fresh flow with the storage schedule
    std::string note;

    bool feasible() const { return status == conic::SolveStatus::Optimal; }
    bool verified() const { return feasible() && check.clean(); }
};

struct NRange {
    int lo = 0, hi = 0;
};

/// [max(1, |R| - 5), |R|], or {0, 0} for an empty ranking.
NRange default_n_range(std::size_t ranking_size);

struct DdcpResult {
    BottleneckRanking ranking;
    std::vector<TopNRow> rows;
    int chosen_n = -1;
    double chosen_total = 0.0;
    planning::BessParams params;
    std::vector<std::string> warnings;

    bool feasible() const { return chosen_n >= 0; }
    const TopNRow* chosen() const;
};

/// Stages I to III with a Top-N sweep; the chosen N has the lowest total cost
/// among feasible rows (smallest N on ties).
DdcpResult run_ddcp(const grid::NetworkCase& net, const scenario::LoadSet& loads, const planning::BessParams& bess,
                    const grid::CableCatalog& catalog, std::optional<NRange> n_range = std::nullopt,
                    const StageOptions& options = {});

struct VcuOutcome {
    planning::ViolationReport before;
    std::vector<planning::CandidateLine> candidates;
    conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
    planning::UpgradePlan plan;
    planning::ViolationReport after;
    std::string note;

    bool feasible() const { return status == conic::SolveStatus::Optimal; }
};

/// Flow check, candidate menus from its overloaded branches, cable upgrade
/// solve and a fresh check on the upgraded network.
VcuOutcome run_vcu(const grid::NetworkCase& net, const scenario::LoadSet& loads, const grid::CableCatalog& catalog,
                   const conic::SolveParams& solver = {}, const planning::VcuOptions& options = {});

struct VmbpOutcome {
    conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
    planning::BessPlan plan;
    planning::ViolationReport after;
    std::string note;

    bool feasible() const { return status == conic::SolveStatus::Optimal; }
};

/// Strict storage planning on the network as given.
VmbpOutcome run_vmbp(const grid::NetworkCase& net, const scenario::LoadSet& loads, const planning::BessParams& bess,
                     const StageOptions& options = {});

inline constexpr double kHostingResolution = 0.005;

struct HostingOptions {
    scenario::LoadMode mode = scenario::LoadMode::Horizon;  // flow check only
    double power_factor = 1.0;
    planning::BessParams bess;
    StageOptions stage;
};

struct HostingThreshold {
    double penetration = 0.0;  // largest clean level on the grid
    bool limited_at_zero = false;
    int evaluations = 0;
};

/// Bisection over penetration levels k * 0.5 %, k = 0..200. Without storage
/// a level passes when the flow check is clean; with storage when strict
/// storage planning is feasible.
HostingThreshold hosting_capacity(const grid::NetworkCase& net, double charger_kw, std::uint32_t seed,
                                  bool with_bess, const HostingOptions& options = {});

/// The pass/fail predicate behind hosting_capacity, exposed for sweeps.
bool hosting_level_ok(const grid::NetworkCase& net, double charger_kw, std::uint32_t seed, double penetration,
                      bool with_bess, const HostingOptions& options = {});

struct HostingRow {
    double base_kv = 0.0;
    double charger_kw = 0.0;
    double onset_pct = 0.0;
    std::optional<double> bess_limit_pct;
};

std::vector<HostingRow> hosting_capacity_table(const grid::NetworkCase& net, const std::vector<double>& base_kvs,
                                               const std::vector<double>& charger_kws, std::uint32_t seed,
                                               bool with_bess, const HostingOptions& options = {});

struct StrategyRow {
    std::string name;
    bool feasible = false;
    std::string status;
    double cable_cost = 0.0;
    double bess_cost = 0.0;
    double total_cost = 0.0;
    int residual_violations = 0;  // overloaded lines plus low-voltage buses
    std::string note;
};

struct CompareOptions {
    double uprate_kv = 13.8;
    StageOptions stage;
    std::optional<NRange> n_range;
};

/// Cable upgrade only, storage only, the staged plan, and a voltage uprate
/// followed by cable upgrades.
std::vector<StrategyRow> compare_strategies(const grid::NetworkCase& net, const scenario::LoadSet& loads,
                                            const grid::CableCatalog& catalog, const planning::BessParams& bess,
                                            const CompareOptions& options = {});

}  // namespace ddcp::pipeline
