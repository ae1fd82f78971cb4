#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ddcp/pipeline/ddcp.hpp"

namespace ddcp::report {

/// Written into the first line of every CSV and as "schema" in JSON output.
inline constexpr const char* kSchema = "ddcp-report/1";

/// Where a flow check sits in a sweep.
struct Cell {
    double base_kv = 0.0;
    double charger_kw = 0.0;
    double penetration = 0.0;
    planning::ViolationReport report;
};

/// Fixed-point text with trailing zeros kept, "-0" folded into "0".
std::string num(double value, int decimals = 6);

// Column layouts (after the "# schema: ..." line):
//   violations.csv     base_kv,charger_kw,penetration,from,to,step,hour,current_a,rated_a,loading_pct,violation_pct,violated
//   voltages.csv       base_kv,charger_kw,penetration,bus,step,hour,v_pu,violated
//   loading_stats.csv  base_kv,charger_kw,penetration,status,count,min_pct,max_pct,avg_pct,violated_lines,
//                      max_violation_pct,voltage_violations,min_voltage_pu
//   upgrade_plan.csv   from,to,old_type,new_type,relaxed_peak_a,required_a,ampacity_a,length_m,cost,impedance_ratio
//   bess_plan.csv      bus,capacity_kwh,inverter_kva,cost,initial_kwh,cyclic_residual_kwh
//   bess_schedule.csv  bus,step,p_ch_kw,p_dis_kw,q_inj_kvar,q_abs_kvar,energy_kwh,soc
//   hosting_capacity.csv  base_kv,charger_kw,seed,onset_pct,bess_limit_pct
//   comparison.csv     strategy,feasible,status,cable_cost,bess_cost,total_cost,residual_violations,note
void write_violations_csv(std::ostream& out, const grid::NetworkCase& net, const std::vector<Cell>& cells);
void write_voltages_csv(std::ostream& out, const std::vector<Cell>& cells);
void write_loading_stats_csv(std::ostream& out, const std::vector<Cell>& cells);
void write_upgrade_plan_csv(std::ostream& out, const std::vector<planning::UpgradeItem>& items);
void write_bess_plan_csv(std::ostream& out, const planning::BessPlan& plan);
void write_bess_schedule_csv(std::ostream& out, const planning::BessPlan& plan);
void write_hosting_capacity_csv(std::ostream& out, const std::vector<pipeline::HostingRow>& rows, std::uint32_t seed);
void write_comparison_csv(std::ostream& out, const std::vector<pipeline::StrategyRow>& rows);

/// ranking, per-N rows and the chosen plan. `runtime_s` < 0 leaves timing out.
std::string ddcp_result_json(const pipeline::DdcpResult& result, double runtime_s = -1.0);

/// Loading statistics laid out per (voltage level, adoption rate), one
/// fixed-width table per charger rating.
std::string emit_summary(const std::vector<Cell>& cells);

}  // namespace ddcp::report
