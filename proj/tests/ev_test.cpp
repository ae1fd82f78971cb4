#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ddcp/grid/io.hpp"
#include "ddcp/scenario/ev.hpp"
#include "oracles.hpp"

using namespace ddcp;
using scenario::EvConfig;
using scenario::LoadMode;

namespace {

grid::NetworkCase feeder6() { return grid::load_network(oracle::data("feeder6.csv")); }

// feeder6 with ten customers spread over the five load buses.
grid::NetworkCase ten_customers() {
    grid::NetworkCase net = feeder6();
    const int per_bus[] = {0, 1, 2, 3, 2, 2};
    for (std::size_t i = 0; i < net.buses.size(); ++i) net.buses[i].customers = per_bus[i];
    return net;
}

bool subset(const scenario::EvAssignment& a, const scenario::EvAssignment& b) {
    for (std::size_t i = 0; i < a.counts.size(); ++i) {
        if (a.counts[i] > b.counts[i]) return false;
    }
    return true;
}

}  // namespace

TEST(Chargers, CountIsCeilingOfShare) {
    EXPECT_EQ(scenario::charger_count(10, 0.0), 0);
    EXPECT_EQ(scenario::charger_count(10, 0.2), 2);
    EXPECT_EQ(scenario::charger_count(10, 0.21), 3);
    EXPECT_EQ(scenario::charger_count(150, 0.13), 20);
    EXPECT_EQ(scenario::charger_count(150, 1.0), 150);
    EXPECT_EQ(scenario::charger_count(3, 0.005), 1);
}

TEST(Chargers, ExtremesAreEmptyAndFull) {
    const auto net = feeder6();
    const auto none = scenario::allocate_chargers(net, {0.0, 10.0, 42, 1.0});
    EXPECT_EQ(none.total(), 0);
    const auto all = scenario::allocate_chargers(net, {1.0, 10.0, 42, 1.0});
    for (std::size_t i = 0; i < net.buses.size(); ++i) EXPECT_EQ(all.counts[i], net.buses[i].customers);
}

TEST(Chargers, TenCustomerFeederNests) {
    const auto net = ten_customers();
    const auto a = scenario::allocate_chargers(net, {0.2, 10.0, 42, 1.0});
    const auto b = scenario::allocate_chargers(net, {0.4, 10.0, 42, 1.0});
    EXPECT_EQ(a.total(), 2);
    EXPECT_EQ(b.total(), 4);
    EXPECT_TRUE(subset(a, b));
}

TEST(Chargers, NestedAndBoundedAcrossSeedsAndLevels) {
    const auto net = feeder6();
    for (std::uint32_t seed : {1u, 42u, 2024u, 4000000000u}) {
        scenario::EvAssignment prev = scenario::allocate_chargers(net, {0.0, 10.0, seed, 1.0});
        for (int k = 1; k <= 200; ++k) {
            const double p = 0.005 * k;
            const auto cur = scenario::allocate_chargers(net, {p, 10.0, seed, 1.0});
            ASSERT_EQ(cur.total(), scenario::charger_count(net.total_customers(), p));
            ASSERT_TRUE(subset(prev, cur)) << "seed " << seed << " p " << p;
            for (std::size_t i = 0; i < net.buses.size(); ++i) ASSERT_LE(cur.counts[i], net.buses[i].customers);
            prev = cur;
        }
    }
}

TEST(Chargers, SeedFixesTheAssignment) {
    const auto net = feeder6();
    const EvConfig cfg{0.37, 10.0, 42, 1.0};
    const auto a = scenario::allocate_chargers(net, cfg);
    const auto b = scenario::allocate_chargers(net, cfg);
    EXPECT_EQ(a.counts, b.counts);
    EXPECT_EQ(a.ordering, b.ordering);
    // The permutation keeps the customer multiset.
    std::vector<int> per_bus(net.buses.size(), 0);
    for (int bus : a.ordering) ++per_bus[bus];
    for (std::size_t i = 0; i < net.buses.size(); ++i) EXPECT_EQ(per_bus[i], net.buses[i].customers);
    const auto c = scenario::allocate_chargers(net, {0.37, 10.0, 43, 1.0});
    EXPECT_NE(a.ordering, c.ordering);
}

TEST(Chargers, ShareFollowsCustomerDensityOnAverage) {
    const auto net = feeder6();
    std::vector<double> mean(net.buses.size(), 0.0);
    const int runs = 400;
    for (int s = 0; s < runs; ++s) {
        const auto a = scenario::allocate_chargers(net, {0.2, 10.0, static_cast<std::uint32_t>(s), 1.0});
        for (std::size_t i = 0; i < net.buses.size(); ++i) mean[i] += a.counts[i] / double(runs);
    }
    for (std::size_t i = 0; i < net.buses.size(); ++i) EXPECT_NEAR(mean[i], 0.2 * net.buses[i].customers, 1.0);
}

TEST(Chargers, InvalidConfigThrows) {
    const auto net = feeder6();
    EXPECT_THROW(scenario::allocate_chargers(net, {1.2, 10.0, 1, 1.0}), std::invalid_argument);
    EXPECT_THROW(scenario::allocate_chargers(net, {0.5, 0.0, 1, 1.0}), std::invalid_argument);
    EXPECT_THROW(scenario::allocate_chargers(net, {0.5, 10.0, 1, 0.0}), std::invalid_argument);
}

TEST(Loads, ChargersAddRatedPowerAtEveryHour) {
    const auto net = feeder6();
    scenario::EvAssignment a;
    a.counts.assign(net.buses.size(), 0);
    a.counts[3] = 3;
    const EvConfig cfg{0.1, 10.0, 1, 1.0};
    const auto loads = scenario::build_loads(net, a, cfg, LoadMode::Horizon);
    ASSERT_EQ(loads.horizon(), net.horizon());
    for (int t = 0; t < loads.horizon(); ++t) {
        EXPECT_DOUBLE_EQ(loads.p_kw[3][t], net.buses[3].p_kw[t] + 30.0);
        EXPECT_DOUBLE_EQ(loads.q_kvar[3][t], net.buses[3].q_kvar[t]);
        EXPECT_DOUBLE_EQ(loads.p_kw[2][t], net.buses[2].p_kw[t]);
    }
}

TEST(Loads, PowerFactorSetsReactiveShare) {
    const auto net = feeder6();
    scenario::EvAssignment a;
    a.counts.assign(net.buses.size(), 0);
    a.counts[1] = 2;
    const auto loads = scenario::build_loads(net, a, {0.1, 10.0, 1, 0.98}, LoadMode::Horizon);
    const double dq = loads.q_kvar[1][5] - net.buses[1].q_kvar[5];
    EXPECT_DOUBLE_EQ(loads.p_kw[1][5] - net.buses[1].p_kw[5], 20.0);
    EXPECT_NEAR(dq, 20.0 * std::sqrt(1.0 - 0.98 * 0.98) / 0.98, 1e-12);
    EXPECT_NEAR(dq, 4.06, 5e-3);
}

TEST(Loads, SnapshotKeepsThePeakHour) {
    const auto net = feeder6();
    const int h = scenario::peak_hour(net);
    double best = 0.0;
    int expect = -1;
    for (int t = 0; t < net.horizon(); ++t) {
        double s = 0.0;
        for (const auto& b : net.buses) s += b.p_kw[t];
        if (s > best) {
            best = s;
            expect = t;
        }
    }
    EXPECT_EQ(h, expect);
    const auto loads = scenario::scenario_loads(net, {0.5, 10.0, 42, 1.0}, LoadMode::Snapshot);
    ASSERT_EQ(loads.horizon(), 1);
    EXPECT_EQ(loads.hours[0], h);
    const auto full = scenario::scenario_loads(net, {0.5, 10.0, 42, 1.0}, LoadMode::Horizon);
    for (std::size_t i = 0; i < net.buses.size(); ++i) EXPECT_DOUBLE_EQ(loads.p_kw[i][0], full.p_kw[i][h]);
}

TEST(Loads, MismatchedAssignmentThrows) {
    const auto net = feeder6();
    scenario::EvAssignment a;
    a.counts = {1, 2};
    EXPECT_THROW(scenario::build_loads(net, a, {0.1, 10.0, 1, 1.0}, LoadMode::Horizon), std::invalid_argument);
}

TEST(ScenarioFile, ParsesKeysAndRejectsJunk) {
    const auto cfg = scenario::parse_scenario_text(
        "# sweep point\npenetration = 0.4\ncharger_kw=15\nseed = 7\npower_factor = 0.95\nmode = horizon\n");
    EXPECT_DOUBLE_EQ(cfg.ev.penetration, 0.4);
    EXPECT_DOUBLE_EQ(cfg.ev.charger_kw, 15.0);
    EXPECT_EQ(cfg.ev.seed, 7u);
    EXPECT_DOUBLE_EQ(cfg.ev.power_factor, 0.95);
    EXPECT_EQ(cfg.mode, LoadMode::Horizon);
    EXPECT_EQ(scenario::parse_scenario_text("").mode, LoadMode::Snapshot);
    EXPECT_THROW(scenario::parse_scenario_text("colour = red\n"), std::invalid_argument);
    EXPECT_THROW(scenario::parse_scenario_text("penetration = lots\n"), std::invalid_argument);
    EXPECT_THROW(scenario::parse_scenario_text("penetration = 2\n"), std::invalid_argument);
    EXPECT_THROW(scenario::parse_scenario_text("mode = weekly\n"), std::invalid_argument);
}
