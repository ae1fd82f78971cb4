#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "ddcp/conic/solver.hpp"
#include "ddcp/grid/network.hpp"
#include "ddcp/scenario/ev.hpp"

namespace ddcp::planning {

using conic::VarId;

class PlanningError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BessParams {
    double e_min_kwh = 50.0;
    double e_max_kwh = 10000.0;
    double soc_min = 0.1;
    double soc_max = 0.9;
    double eta_charge = 0.95;
    double eta_discharge = 0.95;
    double c_cap = 250.0;  // $/kWh
    double c_rate_charge = 0.5;
    double c_rate_discharge = 0.5;
    double k_inv = 1.0;
    double dt_h = 1.0;

    void check() const;
    std::string describe() const;
};

enum class ModelKind { Vdq, Vcu, Vmbp, RelaxedVmbp, EnhancedVmbp };
const char* to_string(ModelKind kind);

template <typename T>
using Grid2 = std::vector<std::vector<T>>;

struct FlowVars {
    Grid2<VarId> P, Q, l;  // [branch][step]
    Grid2<VarId> v;        // [bus][step]
    std::vector<VarId> Ps, Qs;
};

struct CandidateLine {
    int branch = -1;
    double relaxed_peak_a = 0.0;
    std::vector<grid::CableType> menu;
};

struct VcuVars {
    std::vector<CandidateLine> candidates;
    Grid2<VarId> z;                       // [candidate][menu entry]
    Grid2<VarId> sigma, p_loss, q_loss;   // [candidate][step]
    double rho = 0.0;
};

struct BessVars {
    std::vector<int> buses;  // bus indices
    std::vector<VarId> z, e_cap, e_init, s_inv;
    Grid2<VarId> e, p_ch, p_dis, q_inj, q_abs;  // [unit][step]
    Grid2<VarId> y_ch, y_dis, y_inj, y_abs;
};

/// A built program plus the handles needed to read its solution back.
/// Powers are per unit on the network bases, energies in per-unit hours.
struct Model {
    ModelKind kind = ModelKind::Vdq;
    conic::ConicProgram program;
    int horizon = 0;
    std::vector<int> hours;
    double s_base_kva = 0.0;
    FlowVars flow;
    VcuVars vcu;
    BessVars bess;
    BessParams bess_params;
    Grid2<VarId> tau;  // [branch][step], relaxed VMBP only
    double lambda = 0.0;
    std::vector<int> upgraded;  // branches whose limit comes from an upgrade
};

/// Loss-minimizing flow with the upper voltage limit only and no current
/// limit, so overloads show up instead of making the model infeasible.
Model build_vdq(const grid::NetworkCase& net, const scenario::LoadSet& loads);

/// Menu of catalog entries of the branch's kind rated at least 1.05x the
/// relaxed peak. Throws PlanningError when nothing qualifies.
std::vector<grid::CableType> cable_menu(const grid::BranchSpec& branch, const grid::CableCatalog& catalog,
                                        double relaxed_peak_a);
inline constexpr double kSizingMargin = 1.05;

struct VcuOptions {
    double rho = 0.0;  // <= 0 selects 1e6 x the most expensive menu entry
};

Model build_vcu(const grid::NetworkCase& net, const scenario::LoadSet& loads,
                const std::vector<CandidateLine>& candidates, const VcuOptions& options = {});

/// Strict storage planning model. `upgraded` marks branches reinforced in an
/// earlier stage (reporting only; limits come from the network data).
Model build_vmbp(const grid::NetworkCase& net, const scenario::LoadSet& loads, const BessParams& params,
                 const std::vector<int>& candidate_buses, const std::vector<int>& upgraded = {});

/// Storage planning with soft current limits l <= Imax^2 + tau.
Model build_relaxed_vmbp(const grid::NetworkCase& net, const scenario::LoadSet& loads, const BessParams& params,
                         const std::vector<int>& candidate_buses, double lambda);

/// 1e6 x the most expensive catalog entry that fits any branch.
double default_lambda(const grid::NetworkCase& net, const grid::CableCatalog& catalog);

/// Every bus flagged as a storage candidate.
std::vector<int> bess_candidate_buses(const grid::NetworkCase& net);

/// Installs where relaxed capacity is positive and picks the dominant mode of
/// each charge/discharge and inject/absorb pair.
conic::RoundingHeuristic vmbp_rounding(const Model& model);

/// Picks the largest relaxed selection per candidate.
conic::RoundingHeuristic vcu_rounding(const Model& model);

// ---- reports --------------------------------------------------------------

/// Loading level in percent of rating.
double loading_pct(double current_a, double rated_a);
/// Excess over 100 %, zero when within rating.
double violation_pct(double loading);

/// Counting tolerances that absorb solver noise at the limits.
inline constexpr double kLoadingTolPct = 1e-4;
inline constexpr double kVoltageTolPu = 1e-7;

struct LineLoading {
    int branch = -1;
    grid::BusId from{}, to{};
    int step = 0;
    int hour = 0;
    double current_a = 0.0;
    double loading_pct = 0.0;
    double violation_pct = 0.0;
    bool violated = false;
};

struct BusVoltage {
    int bus = -1;
    grid::BusId id{};
    int step = 0;
    int hour = 0;
    double v_pu = 0.0;
    bool violated = false;
};

struct LoadingStats {
    int count = 0;  // branch-step samples
    double min = 0.0, max = 0.0, avg = 0.0;
    int violated_lines = 0;
    double max_violation_pct = 0.0;
    int voltage_violations = 0;  // buses below v_min at some step
    double min_voltage_pu = 0.0;
};

struct ViolationReport {
    conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
    bool collapse = false;  // model infeasible
    std::vector<LineLoading> lines;
    std::vector<BusVoltage> voltages;
    LoadingStats stats;
    double losses_pu = 0.0;

    bool ok() const { return status == conic::SolveStatus::Optimal; }
    bool clean() const { return ok() && stats.violated_lines == 0 && stats.voltage_violations == 0; }
    std::vector<int> overloaded_branches() const;
    /// Largest current over all steps, per branch.
    std::vector<double> peak_current_a(std::size_t branches) const;
};

ViolationReport extract_violations(const grid::NetworkCase& net, const Model& model, const conic::Solution& sol);

/// Build, solve and report in one step.
ViolationReport run_vdq(const grid::NetworkCase& net, const scenario::LoadSet& loads,
                        const conic::SolveParams& params = {});

struct UpgradeItem {
    int branch = -1;
    grid::BusId from{}, to{};
    std::string old_type;
    grid::CableType cable;
    double relaxed_peak_a = 0.0;
    double length_m = 0.0;
    double cost = 0.0;
    double impedance_ratio = 1.0;
};

struct UpgradePlan {
    std::vector<UpgradeItem> items;
    double total_cost = 0.0;
    double slack_total = 0.0;  // sum of sigma, squared p.u.
    std::vector<std::string> warnings;
};

UpgradePlan extract_upgrade_plan(const grid::NetworkCase& net, const Model& model, const conic::Solution& sol);

grid::NetworkCase apply_plan(const grid::NetworkCase& net, const std::vector<UpgradeItem>& items);

struct BessUnit {
    int bus = -1;
    grid::BusId id{};
    double capacity_kwh = 0.0;
    double inverter_kva = 0.0;
    double cost = 0.0;
    double initial_kwh = 0.0;
    std::vector<double> p_ch_kw, p_dis_kw, q_inj_kvar, q_abs_kvar, energy_kwh, soc;
    double cyclic_residual_kwh = 0.0;
};

struct BessPlan {
    std::vector<BessUnit> units;  // installed units only
    double total_kwh = 0.0;
    double cost = 0.0;
    bool cyclic_ok = true;
    std::vector<std::string> warnings;
};

BessPlan extract_bess_plan(const grid::NetworkCase& net, const Model& model, const conic::Solution& sol);

/// Adds the storage schedule to the demand (charging raises it).
scenario::LoadSet with_bess(const scenario::LoadSet& loads, const BessPlan& plan);

}  // namespace ddcp::planning
