#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ddcp/grid/io.hpp"
#include "ddcp/pipeline/ddcp.hpp"
#include "ddcp/report/report.hpp"

namespace fs = std::filesystem;
using namespace ddcp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string net;
    std::string cables;
    std::vector<double> penetration{0.0};
    std::vector<double> charger_kw{10.0};
    std::vector<double> base_kv;
    std::uint32_t seed = 42;
    double pf = 1.0;
    std::string top_n;
    double bess_cap_cost = planning::BessParams{}.c_cap;
    std::string out = ".";
    bool deterministic = false;
    double time_limit = 0.0;
    std::string mode;  // empty: subcommand default
    bool with_bess = false;
    double uprate_kv = 13.8;
};

std::shared_ptr<spdlog::logger> make_logger() {
    auto log = spdlog::stderr_color_mt("ddcp");
    log->set_pattern("[%l] %v");
    log->set_level(spdlog::level::warn);
    if (const char* env = std::getenv("DDCP_LOG")) {
        const auto level = spdlog::level::from_str(env);
        if (level != spdlog::level::off || std::string(env) == "off") log->set_level(level);
    }
    return log;
}

std::shared_ptr<spdlog::logger> logger;

conic::SolveParams solver_params(const Options& o) {
    conic::SolveParams p;
    p.deterministic = o.deterministic;
    if (o.time_limit > 0.0) {
        if (o.deterministic) {
            logger->warn("--time-limit is ignored with --deterministic");
        } else {
            p.time_limit = o.time_limit;
        }
    }
    if (logger->should_log(spdlog::level::debug)) {
        p.log = [](const conic::NodeLogEntry& e) {
            logger->debug("node {} depth {} bound {:.6g} incumbent {:.6g} gap {:.3g} {}", e.node, e.depth,
                          e.best_bound, e.incumbent, e.gap, e.event);
        };
    }
    return p;
}

planning::BessParams bess_params(const Options& o) {
    planning::BessParams b;
    b.c_cap = o.bess_cap_cost;
    b.check();
    return b;
}

grid::CableCatalog catalog(const Options& o) {
    if (o.cables.empty()) return grid::default_catalog();
    return grid::load_catalog(o.cables);
}

double single(const std::vector<double>& v, const char* flag) {
    if (v.size() != 1) throw UsageError(fmt::format("{} takes a single value for this subcommand", flag));
    return v.front();
}

void write_file(const Options& o, const std::string& name, const std::string& text) {
    const fs::path path = fs::path(o.out) / name;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
    f << text;
    logger->info("wrote {}", path.string());
}

template <typename Fn>
std::string to_text(Fn&& fn) {
    std::ostringstream s;
    fn(s);
    return s.str();
}

scenario::LoadSet scenario_for(const grid::NetworkCase& net, const Options& o, double p, double kw,
                               scenario::LoadMode mode) {
    scenario::EvConfig ev;
    ev.penetration = p;
    ev.charger_kw = kw;
    ev.seed = o.seed;
    ev.power_factor = o.pf;
    ev.check();
    return scenario::scenario_loads(net, ev, mode);
}

grid::NetworkCase network_at(const grid::NetworkCase& net, const Options& o) {
    if (o.base_kv.empty()) return net;
    return grid::rebase_voltage(net, single(o.base_kv, "--base-kv"));
}

std::string bess_line(const planning::BessPlan& plan) {
    if (plan.units.empty()) return "no storage installed";
    std::string s;
    for (const auto& u : plan.units) {
        s += fmt::format("bus {}: {:.2f} kWh, inverter {:.2f} kVA, ${:.2f}\n", grid::raw(u.id), u.capacity_kwh,
                         u.inverter_kva, u.cost);
    }
    return s + fmt::format("total {:.2f} kWh, ${:.2f}", plan.total_kwh, plan.cost);
}

scenario::LoadMode load_mode(const std::string& text, scenario::LoadMode fallback) {
    if (text.empty()) return fallback;
    if (text == "snapshot") return scenario::LoadMode::Snapshot;
    if (text == "horizon") return scenario::LoadMode::Horizon;
    throw UsageError("--mode must be snapshot or horizon");
}

int run_vdq(const grid::NetworkCase& base, const Options& o) {
    const auto mode = load_mode(o.mode, scenario::LoadMode::Snapshot);
    const conic::SolveParams params = solver_params(o);
    std::vector<double> kvs = o.base_kv.empty() ? std::vector<double>{base.base_kv} : o.base_kv;
    std::vector<report::Cell> cells;
    for (double kv : kvs) {
        const grid::NetworkCase net = grid::rebase_voltage(base, kv);
        for (double kw : o.charger_kw) {
            for (double p : o.penetration) {
                report::Cell c{kv, kw, p, planning::run_vdq(net, scenario_for(net, o, p, kw, mode), params)};
                logger->info("{} kV, {} kW, {}%: {}", kv, kw, 100 * p, conic::to_string(c.report.status));
                cells.push_back(std::move(c));
            }
        }
    }
    write_file(o, "violations.csv", to_text([&](auto& s) { report::write_violations_csv(s, base, cells); }));
    write_file(o, "voltages.csv", to_text([&](auto& s) { report::write_voltages_csv(s, cells); }));
    write_file(o, "loading_stats.csv", to_text([&](auto& s) { report::write_loading_stats_csv(s, cells); }));
    const std::string summary = report::emit_summary(cells);
    write_file(o, "summary.txt", summary);
    std::cout << summary;
    for (const auto& c : cells) {
        if (!c.report.ok()) return kExitInfeasible;
    }
    return kExitOk;
}

int run_vcu(const grid::NetworkCase& base, const Options& o) {
    const grid::NetworkCase net = network_at(base, o);
    const auto loads = scenario_for(net, o, single(o.penetration, "--penetration"), single(o.charger_kw, "--charger-kw"),
                                    scenario::LoadMode::Horizon);
    const auto v = pipeline::run_vcu(net, loads, catalog(o), solver_params(o));
    write_file(o, "upgrade_plan.csv", to_text([&](auto& s) { report::write_upgrade_plan_csv(s, v.plan.items); }));
    std::vector<report::Cell> after{{net.base_kv, o.charger_kw.front(), o.penetration.front(), v.after}};
    const grid::NetworkCase upgraded = planning::apply_plan(net, v.plan.items);
    write_file(o, "violations.csv", to_text([&](auto& s) { report::write_violations_csv(s, upgraded, after); }));
    std::cout << fmt::format("cable upgrade: {} ({} candidates)\n", conic::to_string(v.status), v.candidates.size());
    for (const auto& u : v.plan.items) {
        std::cout << fmt::format("  ({}, {}) {} -> {}  {:.2f} $\n", grid::raw(u.from), grid::raw(u.to), u.old_type,
                                 u.cable.name, u.cost);
    }
    std::cout << fmt::format("total ${:.2f}\n", v.plan.total_cost);
    for (const auto& w : v.plan.warnings) logger->warn("{}", w);
    if (!v.feasible()) {
        logger->error("{}", v.note);
        return kExitInfeasible;
    }
    return v.after.clean() && v.plan.slack_total <= 1e-7 ? kExitOk : kExitInfeasible;
}

int run_vmbp(const grid::NetworkCase& base, const Options& o) {
    const grid::NetworkCase net = network_at(base, o);
    const auto loads = scenario_for(net, o, single(o.penetration, "--penetration"), single(o.charger_kw, "--charger-kw"),
                                    scenario::LoadMode::Horizon);
    pipeline::StageOptions stage;
    stage.solver = solver_params(o);
    const auto v = pipeline::run_vmbp(net, loads, bess_params(o), stage);
    write_file(o, "bess_plan.csv", to_text([&](auto& s) { report::write_bess_plan_csv(s, v.plan); }));
    write_file(o, "bess_schedule.csv", to_text([&](auto& s) { report::write_bess_schedule_csv(s, v.plan); }));
    std::cout << fmt::format("storage planning: {}\n", conic::to_string(v.status));
    if (!v.feasible()) {
        logger->error("{}", v.note);
        return kExitInfeasible;
    }
    std::cout << bess_line(v.plan) << "\n";
    for (const auto& w : v.plan.warnings) logger->warn("{}", w);
    return kExitOk;
}

std::optional<pipeline::NRange> parse_top_n(const std::string& text) {
    if (text.empty()) return std::nullopt;
    if (text == "all") return pipeline::NRange{0, std::numeric_limits<int>::max()};
    const auto dots = text.find("..");
    try {
        std::size_t used = 0;
        if (dots == std::string::npos) {
            const int n = std::stoi(text, &used);
            if (used != text.size()) throw std::invalid_argument(text);
            return pipeline::NRange{n, n};
        }
        const std::string a = text.substr(0, dots), b = text.substr(dots + 2);
        const int lo = std::stoi(a, &used);
        if (used != a.size()) throw std::invalid_argument(text);
        const int hi = std::stoi(b, &used);
        if (used != b.size()) throw std::invalid_argument(text);
        if (lo < 0 || hi < lo) throw std::invalid_argument(text);
        return pipeline::NRange{lo, hi};
    } catch (const std::exception&) {
        throw UsageError(fmt::format("--top-n expects N, A..B or all, got '{}'", text));
    }
}

int run_ddcp_cmd(const grid::NetworkCase& base, const Options& o) {
    const auto start = std::chrono::steady_clock::now();
    const grid::NetworkCase net = network_at(base, o);
    const auto loads = scenario_for(net, o, single(o.penetration, "--penetration"), single(o.charger_kw, "--charger-kw"),
                                    scenario::LoadMode::Horizon);
    pipeline::StageOptions stage;
    stage.solver = solver_params(o);
    const auto cat = catalog(o);
    const auto bess = bess_params(o);
    auto range = parse_top_n(o.top_n);
    if (range) {
        // clamp to the ranking size
        const auto ranking = pipeline::diagnose_bottlenecks(net, loads, bess, cat, stage);
        const int r = static_cast<int>(ranking.size());
        if (range->hi > r) {
            if (o.top_n != "all") logger->warn("--top-n {} clamped to the {} ranked branches", o.top_n, r);
            range->hi = r;
            range->lo = std::min(range->lo, r);
        }
    }
    const auto result = pipeline::run_ddcp(net, loads, bess, cat, range, stage);
    const double runtime =
        o.deterministic ? -1.0 : std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_file(o, "ddcp_result.json", report::ddcp_result_json(result, runtime));
    const pipeline::TopNRow* chosen = result.chosen();
    const planning::BessPlan none;
    write_file(o, "upgrade_plan.csv", to_text([&](auto& s) {
                   report::write_upgrade_plan_csv(s, chosen ? chosen->upgrades : std::vector<planning::UpgradeItem>{});
               }));
    write_file(o, "bess_plan.csv", to_text([&](auto& s) { report::write_bess_plan_csv(s, chosen ? chosen->bess : none); }));
    write_file(o, "bess_schedule.csv",
               to_text([&](auto& s) { report::write_bess_schedule_csv(s, chosen ? chosen->bess : none); }));

    std::cout << fmt::format("bottlenecks: {}\n", result.ranking.size());
    for (const auto& b : result.ranking.items) {
        std::cout << fmt::format("  ({}, {})  relaxed peak {:.1f} A  slack {:.6g}\n", grid::raw(b.from),
                                 grid::raw(b.to), b.relaxed_peak_a, b.slack_total);
    }
    std::cout << fmt::format("{:>4} {:>14} {:>14} {:>14} {:>12}\n", "N", "cable ($)", "BESS ($)", "total ($)", "status");
    for (const auto& r : result.rows) {
        std::cout << fmt::format("{:>4} {:>14.2f} {:>14.2f} {:>14.2f} {:>12}\n", r.n, r.cable_cost, r.bess_cost,
                                 r.total, conic::to_string(r.status));
    }
    for (const auto& w : result.warnings) logger->warn("{}", w);
    if (!chosen) return kExitInfeasible;
    std::cout << fmt::format("chosen N = {}, total ${:.2f}\n", chosen->n, chosen->total);
    std::cout << bess_line(chosen->bess) << "\n";
    return kExitOk;
}

int run_hosting(const grid::NetworkCase& net, const Options& o) {
    pipeline::HostingOptions h;
    h.power_factor = o.pf;
    h.bess = bess_params(o);
    h.stage.solver = solver_params(o);
    h.mode = load_mode(o.mode, scenario::LoadMode::Horizon);
    const std::vector<double> kvs = o.base_kv.empty() ? std::vector<double>{net.base_kv} : o.base_kv;
    const auto rows = pipeline::hosting_capacity_table(net, kvs, o.charger_kw, o.seed, o.with_bess, h);
    write_file(o, "hosting_capacity.csv", to_text([&](auto& s) { report::write_hosting_capacity_csv(s, rows, o.seed); }));
    std::cout << fmt::format("{:>8} {:>11} {:>10} {:>12}\n", "kV", "charger kW", "onset %", "BESS limit %");
    for (const auto& r : rows) {
        std::cout << fmt::format("{:>8} {:>11} {:>10} {:>12}\n", report::num(r.base_kv, 2), report::num(r.charger_kw, 1),
                                 report::num(r.onset_pct, 1),
                                 r.bess_limit_pct ? report::num(*r.bess_limit_pct, 1) : "-");
    }
    return kExitOk;
}

int run_compare(const grid::NetworkCase& base, const Options& o) {
    const grid::NetworkCase net = network_at(base, o);
    const auto loads = scenario_for(net, o, single(o.penetration, "--penetration"), single(o.charger_kw, "--charger-kw"),
                                    scenario::LoadMode::Horizon);
    pipeline::CompareOptions c;
    c.uprate_kv = o.uprate_kv;
    c.stage.solver = solver_params(o);
    const auto rows = pipeline::compare_strategies(net, loads, catalog(o), bess_params(o), c);
    write_file(o, "comparison.csv", to_text([&](auto& s) { report::write_comparison_csv(s, rows); }));
    std::cout << fmt::format("{:<20} {:>9} {:>14} {:>14} {:>14} {:>9}\n", "strategy", "feasible", "cable ($)",
                             "BESS ($)", "total ($)", "residual");
    for (const auto& r : rows) {
        std::cout << fmt::format("{:<20} {:>9} {:>14.2f} {:>14.2f} {:>14.2f} {:>9}\n", r.name, r.feasible ? "yes" : "no",
                                 r.cable_cost, r.bess_cost, r.total_cost, r.residual_violations);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    logger = make_logger();
    CLI::App app{"Distribution grid planning with cable upgrades and battery storage"};
    app.require_subcommand(1);
    Options o;

    auto common = [&](CLI::App* sub, bool bess) {
        sub->add_option("--net", o.net, "network file (sectioned CSV, JSON, or a directory)")->required();
        sub->add_option("--cables", o.cables, "cable catalog CSV (default: bundled catalog)");
        sub->add_option("--penetration", o.penetration, "EV adoption fractions, comma separated")
            ->delimiter(',')
            ->check(CLI::Range(0.0, 1.0));
        sub->add_option("--charger-kw", o.charger_kw, "charger ratings in kW, comma separated")
            ->delimiter(',')
            ->check(CLI::PositiveNumber);
        sub->add_option("--base-kv", o.base_kv, "nominal voltages in kV, comma separated")
            ->delimiter(',')
            ->check(CLI::PositiveNumber);
        sub->add_option("--seed", o.seed, "charger allocation seed");
        sub->add_option("--pf", o.pf, "charger power factor")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--out", o.out, "output directory");
        sub->add_flag("--deterministic", o.deterministic, "reproducible output: no timings, no time limit");
        sub->add_option("--time-limit", o.time_limit, "seconds per mixed-integer solve")->check(CLI::NonNegativeNumber);
        if (bess) sub->add_option("--bess-cap-cost", o.bess_cap_cost, "storage capital cost, $/kWh")->check(CLI::PositiveNumber);
    };

    auto* vdq = app.add_subcommand("vdq", "flow check and loading statistics over a sweep");
    common(vdq, false);
    vdq->add_option("--mode", o.mode, "snapshot (peak hour) or horizon");
    auto* vcu = app.add_subcommand("vcu", "minimum-cost cable upgrades");
    common(vcu, false);
    auto* vmbp = app.add_subcommand("vmbp", "minimum-cost storage siting and sizing");
    common(vmbp, true);
    auto* ddcp = app.add_subcommand("ddcp", "staged upgrades plus storage with a Top-N sweep");
    common(ddcp, true);
    ddcp->add_option("--top-n", o.top_n, "N, A..B or all (default: the last six levels)");
    auto* hc = app.add_subcommand("hosting-capacity", "EV adoption thresholds");
    common(hc, true);
    hc->add_flag("--with-bess", o.with_bess, "also find the limit storage can still fix");
    hc->add_option("--mode", o.mode, "flow check over the peak hour (snapshot) or the day (horizon)");
    auto* cmp = app.add_subcommand("compare", "compare upgrade strategies");
    common(cmp, true);
    cmp->add_option("--uprate-kv", o.uprate_kv, "target voltage of the uprate strategy")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return kExitUsage;
    }

    try {
        fs::create_directories(o.out);
        const grid::NetworkCase net = grid::load_network(o.net);
        if (vdq->parsed()) return run_vdq(net, o);
        if (vcu->parsed()) return run_vcu(net, o);
        if (vmbp->parsed()) return run_vmbp(net, o);
        if (ddcp->parsed()) return run_ddcp_cmd(net, o);
        if (hc->parsed()) return run_hosting(net, o);
        return run_compare(net, o);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const grid::GridError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    }
}
