#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out, err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("ddcp_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

CliRun cli(const std::string& args, const fs::path& dir) {
    const std::string cmd = std::string(DDCP_CLI) + " " + args + " >" + (dir / "stdout.txt").string() + " 2>" +
                            (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "stdout.txt");
    r.err = slurp(dir / "stderr.txt");
    return r;
}

std::string net(const char* name) { return "--net " + oracle::data(name); }

}  // namespace

TEST(Cli, MissingNetIsUsageError) {
    const auto dir = scratch("missing");
    const CliRun r = cli("vdq --penetration 0.2", dir);
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("--net"), std::string::npos);
    EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, BadValuesAreUsageErrors) {
    const auto dir = scratch("bad");
    EXPECT_EQ(cli("vdq " + net("feeder6.csv") + " --penetration 1.5 --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(cli("vdq --net /nonexistent/feeder.csv --out " + dir.string(), dir).code, 2);
    EXPECT_EQ(cli("frobnicate", dir).code, 2);
    EXPECT_EQ(cli("ddcp " + net("bottleneck.csv") + " --top-n x --out " + dir.string(), dir).code, 2);
}

TEST(Cli, SweepWritesLoadingStatistics) {
    const auto dir = scratch("vdq");
    const CliRun r = cli("vdq " + net("feeder6.csv") +
                          " --penetration 0,0.2,0.4,0.6,0.8,1.0 --charger-kw 10 --seed 42 --out " + dir.string(),
                      dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const std::string stats = slurp(dir / "loading_stats.csv");
    std::istringstream in(stats);
    std::string line;
    int rows = 0;
    std::getline(in, line);
    EXPECT_EQ(line, "# schema: ddcp-report/1 loading_stats");
    std::getline(in, line);
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_NE(line.find(",optimal,5,"), std::string::npos) << line;
    }
    EXPECT_EQ(rows, 6);
    for (const char* f : {"violations.csv", "voltages.csv", "summary.txt"}) EXPECT_TRUE(fs::exists(dir / f)) << f;
    EXPECT_NE(slurp(dir / "summary.txt").find("LOADING LEVEL STATISTICS"), std::string::npos);
}

TEST(Cli, DdcpOnFeederWritesResult) {
    const auto dir = scratch("ddcp6");
    const CliRun r = cli("ddcp " + net("feeder6.csv") + " --top-n 0..3 --deterministic --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "ddcp_result.json"));
    EXPECT_EQ(j["schema"], "ddcp-report/1");
    EXPECT_TRUE(j["ranking"].empty());
    ASSERT_EQ(j["rows"].size(), 1u);
    EXPECT_EQ(j["chosen"]["n"], 0);
    EXPECT_FALSE(j.contains("runtime_s"));
}

TEST(Cli, DdcpOnBottleneckChoosesOneUpgrade) {
    const auto dir = scratch("ddcpb");
    const CliRun r = cli("ddcp " + net("bottleneck.csv") + " --top-n all --out " + dir.string(), dir);
    ASSERT_EQ(r.code, 0) << r.err;
    const auto j = nlohmann::json::parse(slurp(dir / "ddcp_result.json"));
    ASSERT_EQ(j["rows"].size(), 2u);
    EXPECT_EQ(j["rows"][0]["status"], "infeasible");
    EXPECT_EQ(j["chosen"]["n"], 1);
    EXPECT_EQ(j["chosen"]["upgrades"][0]["new_type"], "240mm2");
    EXPECT_TRUE(j.contains("runtime_s"));
    EXPECT_TRUE(fs::exists(dir / "bess_schedule.csv"));
}

TEST(Cli, InfeasibleStorageExitsOne) {
    const auto dir = scratch("vmbp");
    const CliRun r = cli("vmbp " + net("bottleneck.csv") + " --out " + dir.string(), dir);
    EXPECT_EQ(r.code, 1);
}
