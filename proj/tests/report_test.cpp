#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "ddcp/grid/io.hpp"
#include "ddcp/report/report.hpp"
#include "oracles.hpp"

using namespace ddcp;

namespace {

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    if (!s.empty() && s.back() == ',') out.emplace_back();
    return out;
}

report::Cell cell(const grid::NetworkCase& net, double p, double kw = 10.0) {
    report::Cell c;
    c.base_kv = net.base_kv;
    c.charger_kw = kw;
    c.penetration = p;
    c.report = planning::run_vdq(net, scenario::scenario_loads(net, {p, kw, 42, 1.0}, scenario::LoadMode::Snapshot));
    return c;
}

}  // namespace

TEST(Num, FixedDecimalsWithoutNegativeZero) {
    EXPECT_EQ(report::num(1.5, 2), "1.50");
    EXPECT_EQ(report::num(-0.0001, 2), "0.00");
    EXPECT_EQ(report::num(-0.0, 3), "0.000");
    EXPECT_EQ(report::num(-1.25, 1), "-1.2");
    EXPECT_EQ(report::num(248982.75, 2), "248982.75");
    EXPECT_EQ(report::num(1.0 / 0.0, 2), "inf");
}

TEST(Csv, EveryWriterStartsWithTheSchemaLine) {
    const auto net = grid::load_network(oracle::data("feeder6.csv"));
    const std::vector<report::Cell> cells{cell(net, 1.0)};
    std::ostringstream a, b, c, d, e, f, g, h;
    report::write_violations_csv(a, net, cells);
    report::write_voltages_csv(b, cells);
    report::write_loading_stats_csv(c, cells);
    report::write_upgrade_plan_csv(d, {});
    report::write_bess_plan_csv(e, {});
    report::write_bess_schedule_csv(f, {});
    report::write_hosting_capacity_csv(g, {}, 42);
    report::write_comparison_csv(h, {});
    const std::vector<std::pair<std::string, std::string>> files{
        {a.str(), "violations"},   {b.str(), "voltages"},         {c.str(), "loading_stats"},
        {d.str(), "upgrade_plan"}, {e.str(), "bess_plan"},        {f.str(), "bess_schedule"},
        {g.str(), "hosting_capacity"}, {h.str(), "comparison"}};
    for (const auto& [text, kind] : files) {
        const auto ls = lines(text);
        ASSERT_GE(ls.size(), 2u) << kind;
        EXPECT_EQ(ls[0], std::string("# schema: ddcp-report/1 ") + kind);
        EXPECT_EQ(text.find('\r'), std::string::npos);
    }
    const auto v = lines(a.str());
    EXPECT_EQ(v.size(), 2u + 5u);
    const auto header = split(v[1]);
    for (std::size_t i = 2; i < v.size(); ++i) EXPECT_EQ(split(v[i]).size(), header.size());
}

TEST(Csv, CollapsedCellIsLabelled) {
    report::Cell c;
    c.base_kv = 4.16;
    c.charger_kw = 15;
    c.penetration = 1.0;
    c.report.status = conic::SolveStatus::Infeasible;
    c.report.collapse = true;
    std::ostringstream out;
    report::write_loading_stats_csv(out, {c});
    const auto ls = lines(out.str());
    ASSERT_EQ(ls.size(), 3u);
    EXPECT_EQ(ls[2], "4.160,15.000,1.0000,model collapse,,,,,,,,");
    EXPECT_EQ(split(ls[2]).size(), split(ls[1]).size());
}

TEST(Summary, EmptyInputIsHeaderOnly) { EXPECT_EQ(report::emit_summary({}), "LOADING LEVEL STATISTICS\n"); }

TEST(Summary, OneCellOneRow) {
    const auto net = grid::load_network(oracle::data("feeder6.csv"));
    const auto text = report::emit_summary({cell(net, 0.2)});
    const auto ls = lines(text);
    ASSERT_EQ(ls.size(), 6u);
    EXPECT_NE(ls[2].find("10.0 kW"), std::string::npos);
    EXPECT_NE(ls[3].find("Count"), std::string::npos);
    EXPECT_NE(ls[5].find("20.0%"), std::string::npos);
}

TEST(Summary, CollapseLiteral) {
    report::Cell c;
    c.base_kv = 4.16;
    c.charger_kw = 15;
    c.penetration = 1.0;
    c.report.status = conic::SolveStatus::Infeasible;
    c.report.collapse = true;
    EXPECT_NE(report::emit_summary({c}).find("model collapse"), std::string::npos);
}

TEST(Summary, NumbersTraceToLoadingStats) {
    const auto net = grid::load_network(oracle::data("feeder6.csv"));
    std::vector<report::Cell> cells;
    for (int k = 0; k <= 5; ++k) cells.push_back(cell(net, 0.2 * k));
    std::ostringstream csv;
    report::write_loading_stats_csv(csv, cells);
    const auto rows = lines(csv.str());
    const auto table = lines(report::emit_summary(cells));
    ASSERT_EQ(rows.size(), 2u + cells.size());
    ASSERT_EQ(table.size(), 5u + cells.size());
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto f = split(rows[2 + i]);
        std::istringstream in(table[5 + i]);
        std::string kv, adoption, count, mn, mx, avg, violated, vmin;
        in >> kv >> adoption >> count >> mn >> mx >> avg >> violated >> vmin;
        EXPECT_EQ(count, f[4]);
        EXPECT_EQ(mn, f[5]);
        EXPECT_EQ(mx, f[6]);
        EXPECT_EQ(avg, f[7]);
        EXPECT_EQ(violated, f[8]);
        EXPECT_EQ(vmin, f[11]);
        EXPECT_EQ(std::stoi(count), cells[i].report.stats.count);
        EXPECT_EQ(std::stoi(violated), cells[i].report.stats.violated_lines);
    }
}

TEST(Json, DdcpResultParsesWithStableKeys) {
    pipeline::DdcpResult r;
    r.ranking.status = conic::SolveStatus::Optimal;
    r.ranking.lambda = 5e10;
    pipeline::Bottleneck b;
    b.branch = 2;
    b.from = grid::BusId{2};
    b.to = grid::BusId{4};
    b.relaxed_peak_a = 414.4;
    b.slack_total = 1.19;
    r.ranking.items.push_back(b);
    pipeline::TopNRow row;
    row.n = 1;
    row.status = conic::SolveStatus::Optimal;
    row.cable_cost = 77500;
    row.bess_cost = 100;
    row.total = 77600;
    planning::BessUnit u;
    u.id = grid::BusId{3};
    u.capacity_kwh = 0.4;
    row.bess.units.push_back(u);
    r.rows.push_back(row);
    r.chosen_n = 1;
    r.chosen_total = 77600;
    const auto text = report::ddcp_result_json(r);
    const auto j = nlohmann::json::parse(text);
    EXPECT_EQ(j["schema"], "ddcp-report/1");
    EXPECT_EQ(j["ranking"].size(), 1u);
    EXPECT_EQ(j["ranking"][0]["to"], 4);
    EXPECT_EQ(j["rows"][0]["total"], 77600.0);
    EXPECT_EQ(j["chosen"]["n"], 1);
    EXPECT_EQ(j["chosen"]["bess"][0]["bus"], 3);
    EXPECT_FALSE(j.contains("runtime_s"));
    EXPECT_TRUE(nlohmann::json::parse(report::ddcp_result_json(r, 1.5)).contains("runtime_s"));
    r.chosen_n = -1;
    EXPECT_TRUE(nlohmann::json::parse(report::ddcp_result_json(r))["chosen"].is_null());
}
