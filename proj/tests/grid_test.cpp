#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "ddcp/grid/io.hpp"
#include "oracles.hpp"

using namespace ddcp::grid;

namespace {

const char* kTiny = R"(# three buses
[settings]
base_kv,6.9
base_mva,10
substation_v,1.01

[buses]
id,kind,customers,p_kw_0,p_kw_1,q_kvar_0,q_kvar_1,bess_candidate
1,substation,0,0,0,0,0,0
2,load,3,100,120,30,35,1
3,load,2,80,90,20,25,0

[branches]
from,to,r_ohm,x_ohm,ampacity_a,length_m,is_breaker,cable_type
2,1,0.01,0.02,630,10,1,CB-630
2,3,0.2,0.1,325,1000,0,120mm2
)";

NetworkCase tiny() {
    std::istringstream in(kTiny);
    return parse_network_csv(in);
}

NetworkCase expect_error_text(const std::string& text) {
    std::istringstream in(text);
    return parse_network_csv(in);
}

std::string replace(std::string s, const std::string& a, const std::string& b) {
    const auto pos = s.find(a);
    EXPECT_NE(pos, std::string::npos) << a;
    return s.replace(pos, a.size(), b);
}

}  // namespace

TEST(PerUnit, BasesFollowFromKvAndMva) {
    PerUnit pu(6.9, 10.0);
    EXPECT_NEAR(pu.z_base_ohm(), 4.761, 1e-12);
    EXPECT_NEAR(pu.i_base_a(), 10e6 / (std::sqrt(3.0) * 6.9e3), 1e-9);
    EXPECT_NEAR(pu.i_base_a(), 836.7395, 1e-4);
    EXPECT_DOUBLE_EQ(pu.kw_to_pu(2500.0), 0.25);
    EXPECT_DOUBLE_EQ(pu.kwh_to_puh(995.93), 0.099593);
    EXPECT_NEAR(pu.pu_to_amp(pu.amp_to_pu(412.5)), 412.5, 1e-12);
    EXPECT_NEAR(pu.pu_to_ohm(pu.ohm_to_pu(0.37)), 0.37, 1e-15);
}

TEST(Catalog, BundledRatingsAndPrices) {
    const auto& c = default_catalog();
    EXPECT_NO_THROW(validate_catalog(c));
    const std::vector<std::pair<const char*, double>> amps{{"150mm2", 370},  {"185mm2", 420},  {"240mm2", 485},
                                                          {"300mm2", 540},  {"400mm2", 610},  {"500mm2", 690},
                                                          {"630mm2", 780},  {"800mm2", 860},  {"2x500mm2", 1200},
                                                          {"CB-630", 630}, {"CB-1250", 1250}};
    for (const auto& [name, a] : amps) {
        const CableType* t = find_cable(c, name);
        ASSERT_NE(t, nullptr) << name;
        EXPECT_DOUBLE_EQ(t->ampacity_a, a) << name;
    }
    EXPECT_DOUBLE_EQ(find_cable(c, "120mm2")->cost(1000.0), 98000.0);
    EXPECT_DOUBLE_EQ(find_cable(c, "2x500mm2")->cost(10.0), 4600.0);
    EXPECT_DOUBLE_EQ(find_cable(c, "CB-630")->cost(123.0), 18000.0);
    EXPECT_DOUBLE_EQ(find_cable(c, "CB-1250")->cost(0.0), 24000.0);
    EXPECT_EQ(find_cable(c, "nope"), nullptr);
}

TEST(Catalog, ValidationRejectsBrokenEntries) {
    CableCatalog c = default_catalog();
    c.push_back(c.front());
    EXPECT_THROW(validate_catalog(c), UnitError);
    c = {{"b", 100, 0, 0, 5.0, true, 1000.0}};
    EXPECT_THROW(validate_catalog(c), UnitError);
    c = {{"c", 0, 0.1, 0.1, 5.0, false, 0.0}};
    EXPECT_THROW(validate_catalog(c), UnitError);
}

TEST(Catalog, CsvRoundTrip) {
    std::stringstream s;
    write_catalog_csv(s, default_catalog());
    EXPECT_EQ(parse_catalog_csv(s), default_catalog());
    const auto loaded = load_catalog(oracle::data("cables.csv"));
    EXPECT_EQ(loaded, default_catalog());
}

TEST(Network, ParsesAndOrientsFromTheSubstation) {
    const NetworkCase net = tiny();
    EXPECT_EQ(net.horizon(), 2);
    EXPECT_EQ(net.substation_index(), 0);
    EXPECT_EQ(net.total_customers(), 5);
    EXPECT_DOUBLE_EQ(net.substation_vpu(1), 1.01);
    ASSERT_EQ(net.branches.size(), 2u);
    EXPECT_EQ(net.branches[0].from, BusId{1});
    EXPECT_EQ(net.branches[0].to, BusId{2});
    EXPECT_TRUE(net.branches[0].is_breaker);
    EXPECT_TRUE(net.buses[1].bess_candidate);
    EXPECT_DOUBLE_EQ(net.buses[2].q_kvar[1], 25.0);
    const Topology topo = topology(net);
    EXPECT_EQ(topo.root, 0);
    EXPECT_EQ(topo.parent_branch[2], 1);
    EXPECT_EQ(topo.branch_hops(0), 0);
    EXPECT_EQ(topo.branch_hops(1), 1);
    EXPECT_EQ(topo.upstream(2), std::vector<int>{1});
    EXPECT_EQ(topo.downstream(1), std::vector<int>{2});
}

TEST(Network, InvalidInputsAreRejected) {
    const std::string t = kTiny;
    EXPECT_THROW(expect_error_text(replace(t, "2,3,0.2", "3,3,0.2")), TopologyError);
    EXPECT_THROW(expect_error_text(replace(t, "2,3,0.2", "1,2,0.2")), TopologyError);
    EXPECT_THROW(expect_error_text(replace(t, "2,3,0.2", "2,9,0.2")), TopologyError);
    EXPECT_THROW(expect_error_text(replace(t, "1,substation", "1,load")), TopologyError);
    EXPECT_THROW(expect_error_text(replace(t, "630,10,1", "0,10,1")), UnitError);
    EXPECT_THROW(expect_error_text(replace(t, "0.2,0.1,325", "-0.2,0.1,325")), UnitError);
    EXPECT_THROW(expect_error_text(replace(t, "3,load,2,80,90,20,25,0", "3,load,2,80,x,20,25,0")), ParseError);
    EXPECT_THROW(expect_error_text(replace(t, "base_kv,6.9", "base_kv,0")), UnitError);
    EXPECT_THROW(expect_error_text(replace(t, "[branches]", "[wires]")), ParseError);
    // Cycle: a third branch on three buses.
    EXPECT_THROW(expect_error_text(t + "3,1,0.1,0.1,300,100,0,x\n"), TopologyError);
}

TEST(Network, DisconnectedBusIsReported) {
    NetworkCase net = tiny();
    net.branches[1] = {BusId{2}, BusId{1}, 0.1, 0.1, 300, 100, false, "x"};
    try {
        validate(net);
        FAIL();
    } catch (const TopologyError& e) {
        EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
    }
    NetworkCase four = tiny();
    four.buses.push_back(four.buses[2]);
    four.buses.back().id = BusId{4};
    four.branches[0] = {BusId{3}, BusId{2}, 0.1, 0.1, 300, 100, false, "x"};
    four.branches[1] = {BusId{4}, BusId{3}, 0.1, 0.1, 300, 100, false, "x"};
    four.branches.push_back({BusId{2}, BusId{4}, 0.1, 0.1, 300, 100, false, "x"});
    EXPECT_THROW(validate(four), TopologyError);
}

TEST(Network, CsvAndJsonRoundTrip) {
    const NetworkCase net = tiny();
    std::stringstream csv;
    write_network_csv(csv, net);
    EXPECT_EQ(parse_network_csv(csv), net);
    EXPECT_EQ(parse_network_json(network_to_json(net)), net);
}

TEST(Network, DirectoryLayoutLoads) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "ddcp_grid_dir_test";
    fs::create_directories(dir);
    const NetworkCase net = tiny();
    {
        std::ofstream(dir / "settings.csv") << "base_kv,6.9\nbase_mva,10\nsubstation_v,1.01\n";
        std::ofstream b(dir / "buses.csv");
        b << "id,kind,customers,p_kw_0,p_kw_1,q_kvar_0,q_kvar_1,bess_candidate\n"
          << "1,substation,0,0,0,0,0,0\n2,load,3,100,120,30,35,1\n3,load,2,80,90,20,25,0\n";
        std::ofstream r(dir / "branches.csv");
        r << "from,to,r_ohm,x_ohm,ampacity_a,length_m,is_breaker,cable_type\n"
          << "2,1,0.01,0.02,630,10,1,CB-630\n2,3,0.2,0.1,325,1000,0,120mm2\n";
    }
    EXPECT_EQ(load_network(dir), net);
    fs::remove_all(dir);
}

TEST(Network, BundledFixturesLoad) {
    for (const char* f : {"feeder6.csv", "bottleneck.csv"}) {
        const NetworkCase net = load_network(oracle::data(f));
        EXPECT_EQ(net.horizon(), 24) << f;
        EXPECT_EQ(net.branches.size() + 1, net.buses.size()) << f;
    }
    EXPECT_EQ(load_network(oracle::data("feeder6.csv")).buses.size(), 6u);
}

TEST(Upgrade, ConductorTakesNewImpedanceBreakerKeepsIt) {
    const NetworkCase net = tiny();
    const auto& c = default_catalog();
    const NetworkCase a = apply_upgrade(net, BusId{3}, BusId{2}, *find_cable(c, "240mm2"));
    EXPECT_DOUBLE_EQ(a.branches[1].ampacity_a, 485.0);
    EXPECT_NEAR(a.branches[1].r_ohm, 0.0976, 1e-15);
    EXPECT_NEAR(a.branches[1].x_ohm, 0.101, 1e-15);
    EXPECT_EQ(a.branches[1].cable_type, "240mm2");
    EXPECT_NEAR(impedance_ratio(net.branches[1], a.branches[1]), std::hypot(0.0976, 0.101) / std::hypot(0.2, 0.1),
                1e-12);
    const NetworkCase b = apply_upgrade(net, BusId{1}, BusId{2}, *find_cable(c, "CB-1250"));
    EXPECT_DOUBLE_EQ(b.branches[0].ampacity_a, 1250.0);
    EXPECT_DOUBLE_EQ(b.branches[0].r_ohm, 0.01);
    EXPECT_DOUBLE_EQ(impedance_ratio(net.branches[0], b.branches[0]), 1.0);
    EXPECT_EQ(a.buses, net.buses);
    EXPECT_THROW(apply_upgrade(net, BusId{1}, BusId{2}, *find_cable(c, "240mm2")), UnitError);
    EXPECT_THROW(apply_upgrade(net, BusId{1}, BusId{3}, *find_cable(c, "240mm2")), TopologyError);
    EXPECT_EQ(apply_upgrade(net, BusId{2}, BusId{3}, *find_cable(c, "120mm2")), net);
}

TEST(Upgrade, RebaseKeepsOhmsAndMovesPerUnit) {
    const NetworkCase net = tiny();
    const NetworkCase up = rebase_voltage(net, 13.8);
    EXPECT_EQ(up.branches, net.branches);
    EXPECT_DOUBLE_EQ(up.base_kv, 13.8);
    EXPECT_NEAR(PerUnit(up).i_base_a() / PerUnit(net).i_base_a(), 0.5, 1e-12);
    EXPECT_THROW(rebase_voltage(net, -1.0), UnitError);
}

TEST(Oracle, SweepConservesPowerOnRandomFeeders) {
    std::mt19937 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const NetworkCase net = oracle::random_feeder(rng, 8, 1);
        const auto loads = oracle::base_loads(net);
        const auto s = oracle::sweep(net, loads);
        ASSERT_TRUE(s.converged);
        double demand = 0.0;
        for (const auto& b : net.buses) demand += b.p_kw[0] / 10000.0;
        double injected = 0.0;
        for (std::size_t k = 0; k < net.branches.size(); ++k) {
            if (net.bus_index(net.branches[k].from) == net.substation_index()) injected += s.P[k][0];
        }
        EXPECT_NEAR(injected, demand + s.losses, 1e-12);
    }
}
