#include <cmath>
#include <map>
#include <ostream>
#include <set>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ddcp/report/report.hpp"

namespace ddcp::report {

using nlohmann::ordered_json;

std::string num(double value, int decimals) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::string s = fmt::format("{:.{}f}", value, decimals);
    if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
    return s;
}

namespace {

void header(std::ostream& out, const char* kind, const char* columns) {
    out << "# schema: " << kSchema << " " << kind << "\n" << columns << "\n";
}

std::string tag(const Cell& c) {
    return fmt::format("{},{},{}", num(c.base_kv, 3), num(c.charger_kw, 3), num(c.penetration, 4));
}

// CSV field quoting for free text.
std::string quoted(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

ordered_json upgrade_json(const planning::UpgradeItem& u) {
    return {{"from", grid::raw(u.from)},
            {"to", grid::raw(u.to)},
            {"old_type", u.old_type},
            {"new_type", u.cable.name},
            {"relaxed_peak_a", std::stod(num(u.relaxed_peak_a, 4))},
            {"ampacity_a", u.cable.ampacity_a},
            {"cost", std::stod(num(u.cost, 2))}};
}

}  // namespace

void write_violations_csv(std::ostream& out, const grid::NetworkCase& net, const std::vector<Cell>& cells) {
    header(out, "violations",
           "base_kv,charger_kw,penetration,from,to,step,hour,current_a,rated_a,loading_pct,violation_pct,violated");
    for (const auto& c : cells) {
        for (const auto& l : c.report.lines) {
            out << tag(c) << "," << grid::raw(l.from) << "," << grid::raw(l.to) << "," << l.step << "," << l.hour << ","
                << num(l.current_a, 4) << "," << num(net.branches.at(l.branch).ampacity_a, 4) << ","
                << num(l.loading_pct, 4) << "," << num(l.violation_pct, 4) << "," << (l.violated ? 1 : 0) << "\n";
        }
    }
}

void write_voltages_csv(std::ostream& out, const std::vector<Cell>& cells) {
    header(out, "voltages", "base_kv,charger_kw,penetration,bus,step,hour,v_pu,violated");
    for (const auto& c : cells) {
        for (const auto& v : c.report.voltages) {
            out << tag(c) << "," << grid::raw(v.id) << "," << v.step << "," << v.hour << "," << num(v.v_pu, 6) << ","
                << (v.violated ? 1 : 0) << "\n";
        }
    }
}

void write_loading_stats_csv(std::ostream& out, const std::vector<Cell>& cells) {
    header(out, "loading_stats",
           "base_kv,charger_kw,penetration,status,count,min_pct,max_pct,avg_pct,violated_lines,max_violation_pct,"
           "voltage_violations,min_voltage_pu");
    for (const auto& c : cells) {
        const auto& r = c.report;
        out << tag(c) << ",";
        if (r.collapse) {
            out << "model collapse,,,,,,,,\n";
            continue;
        }
        if (!r.ok()) {
            out << conic::to_string(r.status) << ",,,,,,,,\n";
            continue;
        }
        const auto& s = r.stats;
        out << "optimal," << s.count << "," << num(s.min, 2) << "," << num(s.max, 2) << "," << num(s.avg, 2) << ","
            << s.violated_lines << "," << num(s.max_violation_pct, 2) << "," << s.voltage_violations << ","
            << num(s.min_voltage_pu, 4) << "\n";
    }
}

void write_upgrade_plan_csv(std::ostream& out, const std::vector<planning::UpgradeItem>& items) {
    header(out, "upgrade_plan", "from,to,old_type,new_type,relaxed_peak_a,required_a,ampacity_a,length_m,cost,impedance_ratio");
    for (const auto& u : items) {
        out << grid::raw(u.from) << "," << grid::raw(u.to) << "," << quoted(u.old_type) << "," << quoted(u.cable.name)
            << "," << num(u.relaxed_peak_a, 2) << "," << num(planning::kSizingMargin * u.relaxed_peak_a, 2) << ","
            << num(u.cable.ampacity_a, 1) << "," << num(u.length_m, 1) << "," << num(u.cost, 2) << ","
            << num(u.impedance_ratio, 4) << "\n";
    }
}

void write_bess_plan_csv(std::ostream& out, const planning::BessPlan& plan) {
    header(out, "bess_plan", "bus,capacity_kwh,inverter_kva,cost,initial_kwh,cyclic_residual_kwh");
    for (const auto& u : plan.units) {
        out << grid::raw(u.id) << "," << num(u.capacity_kwh, 2) << "," << num(u.inverter_kva, 2) << ","
            << num(u.cost, 2) << "," << num(u.initial_kwh, 2) << "," << num(u.cyclic_residual_kwh, 6) << "\n";
    }
}

void write_bess_schedule_csv(std::ostream& out, const planning::BessPlan& plan) {
    header(out, "bess_schedule", "bus,step,p_ch_kw,p_dis_kw,q_inj_kvar,q_abs_kvar,energy_kwh,soc");
    for (const auto& u : plan.units) {
        for (std::size_t t = 0; t < u.energy_kwh.size(); ++t) {
            out << grid::raw(u.id) << "," << t << "," << num(u.p_ch_kw[t], 3) << "," << num(u.p_dis_kw[t], 3) << ","
                << num(u.q_inj_kvar[t], 3) << "," << num(u.q_abs_kvar[t], 3) << "," << num(u.energy_kwh[t], 3) << ","
                << num(u.soc[t], 4) << "\n";
        }
    }
}

void write_hosting_capacity_csv(std::ostream& out, const std::vector<pipeline::HostingRow>& rows, std::uint32_t seed) {
    header(out, "hosting_capacity", "base_kv,charger_kw,seed,onset_pct,bess_limit_pct");
    for (const auto& r : rows) {
        out << num(r.base_kv, 3) << "," << num(r.charger_kw, 3) << "," << seed << "," << num(r.onset_pct, 1) << ","
            << (r.bess_limit_pct ? num(*r.bess_limit_pct, 1) : "") << "\n";
    }
}

void write_comparison_csv(std::ostream& out, const std::vector<pipeline::StrategyRow>& rows) {
    header(out, "comparison", "strategy,feasible,status,cable_cost,bess_cost,total_cost,residual_violations,note");
    for (const auto& r : rows) {
        out << quoted(r.name) << "," << (r.feasible ? 1 : 0) << "," << r.status << "," << num(r.cable_cost, 2) << ","
            << num(r.bess_cost, 2) << "," << num(r.total_cost, 2) << "," << r.residual_violations << ","
            << quoted(r.note) << "\n";
    }
}

std::string ddcp_result_json(const pipeline::DdcpResult& result, double runtime_s) {
    ordered_json j;
    j["schema"] = kSchema;
    j["bess_params"] = result.params.describe();
    j["lambda"] = result.ranking.lambda;
    j["stage1_status"] = conic::to_string(result.ranking.status);
    ordered_json ranking = ordered_json::array();
    for (const auto& b : result.ranking.items) {
        ranking.push_back({{"from", grid::raw(b.from)},
                           {"to", grid::raw(b.to)},
                           {"relaxed_peak_a", std::stod(num(b.relaxed_peak_a, 4))},
                           {"slack_total", std::stod(num(b.slack_total, 9))},
                           {"hops", b.hops}});
    }
    j["ranking"] = ranking;
    ordered_json rows = ordered_json::array();
    for (const auto& r : result.rows) {
        ordered_json row{{"n", r.n},
                         {"status", conic::to_string(r.status)},
                         {"cable_cost", std::stod(num(r.cable_cost, 2))},
                         {"bess_cost", std::stod(num(r.bess_cost, 2))},
                         {"bess_kwh", std::stod(num(r.bess.total_kwh, 4))},
                         {"total", std::stod(num(r.total, 2))},
                         {"verified", r.verified()}};
        if (!r.note.empty()) row["note"] = r.note;
        rows.push_back(row);
    }
    j["rows"] = rows;
    if (const pipeline::TopNRow* c = result.chosen()) {
        ordered_json chosen{{"n", c->n}, {"total", std::stod(num(c->total, 2))}};
        ordered_json ups = ordered_json::array();
        for (const auto& u : c->upgrades) ups.push_back(upgrade_json(u));
        chosen["upgrades"] = ups;
        ordered_json units = ordered_json::array();
        for (const auto& u : c->bess.units) {
            units.push_back({{"bus", grid::raw(u.id)},
                             {"capacity_kwh", std::stod(num(u.capacity_kwh, 4))},
                             {"inverter_kva", std::stod(num(u.inverter_kva, 4))},
                             {"cost", std::stod(num(u.cost, 2))}});
        }
        chosen["bess"] = units;
        j["chosen"] = chosen;
    } else {
        j["chosen"] = nullptr;
    }
    j["warnings"] = result.warnings;
    if (runtime_s >= 0.0) j["runtime_s"] = runtime_s;
    return j.dump(2) + "\n";
}

std::string emit_summary(const std::vector<Cell>& cells) {
    std::string out = "LOADING LEVEL STATISTICS\n";
    std::set<double> ratings;
    for (const auto& c : cells) ratings.insert(c.charger_kw);
    const std::string rule(78, '-');
    for (double kw : ratings) {
        out += fmt::format("\ncharger rating {} kW\n", num(kw, 1));
        out += fmt::format("{:>8} {:>9} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9}\n", "kV", "adoption", "Count", "Min (%)",
                           "Max (%)", "Avg (%)", "Violated", "Vmin");
        out += rule + "\n";
        for (const auto& c : cells) {
            if (c.charger_kw != kw) continue;
            const std::string lead =
                fmt::format("{:>8} {:>8}%", num(c.base_kv, 2), num(100.0 * c.penetration, 1));
            if (c.report.collapse) {
                out += fmt::format("{} {:>7}\n", lead, "model collapse");
                continue;
            }
            if (!c.report.ok()) {
                out += fmt::format("{} {:>7}\n", lead, conic::to_string(c.report.status));
                continue;
            }
            const auto& s = c.report.stats;
            out += fmt::format("{} {:>7} {:>9} {:>9} {:>9} {:>9} {:>9}\n", lead, s.count, num(s.min, 2), num(s.max, 2),
                               num(s.avg, 2), s.violated_lines, num(s.min_voltage_pu, 4));
        }
    }
    return out;
}

}  // namespace ddcp::report
