#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ddcp/conic/solver.hpp"

using namespace ddcp::conic;

TEST(Relaxation, EmptyProgramIsOptimalAtConstant) {
    ConicProgram p;
    p.set_objective({}, 2.5);
    auto s = solve_relaxation(p);
    EXPECT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_DOUBLE_EQ(s.objective, 2.5);
}

TEST(Relaxation, SmallLinearProgramVertex) {
    ConicProgram p;
    auto x = p.add_variable("x", 0, kInf);
    auto y = p.add_variable("y", 0, kInf);
    p.add_linear({{x, 1}, {y, 2}}, Relation::LessEqual, 4);
    p.add_linear({{x, 3}, {y, 1}}, Relation::LessEqual, 6);
    p.set_objective({{x, -1}, {y, -1}});
    auto s = solve_relaxation(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_NEAR(s.value(x), 1.6, 1e-7);
    EXPECT_NEAR(s.value(y), 1.2, 1e-7);
    EXPECT_NEAR(s.objective, -2.8, 1e-7);
}

TEST(Relaxation, DiscMinimum) {
    ConicProgram p;
    auto t = p.add_variable("t", 1, 1);
    auto x = p.add_variable("x", -kInf, kInf);
    auto y = p.add_variable("y", -kInf, kInf);
    p.add_standard_cone(t, {x, y});
    p.set_objective({{x, 1}, {y, 1}});
    auto s = solve_relaxation(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal) << (s.messages.empty() ? "" : s.messages[0]);
    EXPECT_NEAR(s.objective, -std::sqrt(2.0), 1e-7);
    EXPECT_NEAR(s.value(x), -std::sqrt(0.5), 1e-6);
}

TEST(Relaxation, RotatedConeHyperbola) {
    ConicProgram p;
    auto u = p.add_variable("u", 0, kInf);
    auto w = p.add_variable("w", 0, kInf);
    auto y = p.add_variable("y", -kInf, kInf);
    p.add_rotated_cone(u, w, {y});
    p.add_linear({{w, 1}}, Relation::Equal, 2);
    p.add_linear({{y, 1}}, Relation::GreaterEqual, 3);
    p.set_objective({{u, 1}});
    auto s = solve_relaxation(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    EXPECT_NEAR(s.objective, 4.5, 1e-7);
}

TEST(Relaxation, RotatedConeWithoutPresolveHelp) {
    // min u + w with u*w >= 1: optimum 2 at u = w = 1.
    ConicProgram p;
    auto u = p.add_variable("u", -kInf, kInf);
    auto w = p.add_variable("w", -kInf, kInf);
    auto y = p.add_variable("y", -kInf, kInf);
    p.add_rotated_cone(u, w, {y});
    p.add_linear({{y, 1}, {u, 0.5}}, Relation::Equal, 1.0 + 0.5 * 1.0);
    p.set_objective({{u, 1}, {w, 1}});
    auto s = solve_relaxation(p);
    ASSERT_EQ(s.status, SolveStatus::Optimal);
    // y = 1.5 - u/2, minimize u + (1.5-u/2)^2/u: derivative gives u = 1.2 -> y = 0.9.
    const double uu = s.value(u);
    EXPECT_NEAR(s.objective, uu + std::pow(1.5 - 0.5 * uu, 2) / uu, 1e-7);
    EXPECT_NEAR(uu, std::sqrt(2.25 / 1.25), 1e-5);
}

TEST(Relaxation, PresolveDetectsContradictoryRows) {
    ConicProgram p;
    auto x = p.add_variable("x", -kInf, kInf);
    auto y = p.add_variable("y", -kInf, kInf);
    p.add_linear({{x, 1}, {y, 1}}, Relation::LessEqual, 1);
    p.add_linear({{x, 1}, {y, 1}}, Relation::GreaterEqual, 2);
    EXPECT_EQ(solve_relaxation(p).status, SolveStatus::Infeasible);
}

TEST(Relaxation, InteriorPointCertifiesInfeasibility) {
    ConicProgram p;
    auto t = p.add_variable("t", 0, 1);
    auto x = p.add_variable("x", -kInf, kInf);
    auto y = p.add_variable("y", -kInf, kInf);
    p.add_standard_cone(t, {x, y});
    p.add_linear({{x, 1}, {y, 1}}, Relation::GreaterEqual, 3);
    p.set_objective({{t, 1}});
    EXPECT_EQ(solve_relaxation(p).status, SolveStatus::Infeasible);
}

TEST(Relaxation, DetectsUnboundedObjective) {
    ConicProgram p;
    auto x = p.add_variable("x", 0, kInf);
    auto y = p.add_variable("y", 0, kInf);
    p.add_linear({{x, 1}, {y, -1}}, Relation::LessEqual, 1);
    p.set_objective({{x, -1}});
    EXPECT_EQ(solve_relaxation(p).status, SolveStatus::Unbounded);
}

TEST(Relaxation, BadParametersThrow) {
    ConicProgram p;
    SolveParams params;
    params.integrality_tol = 0.7;
    EXPECT_THROW(solve_relaxation(p, params), ProgramError);
}

namespace {

ConicProgram knapsack(std::mt19937& rng, int items) {
    std::uniform_real_distribution<double> val(1.0, 10.0), wt(1.0, 5.0);
    ConicProgram p;
    std::vector<Term> weight, obj;
    for (int i = 0; i < items; ++i) {
        auto b = p.add_binary("b" + std::to_string(i));
        weight.push_back({b, wt(rng)});
        obj.push_back({b, -val(rng)});
    }
    // Quadratic penalty on one continuous slack keeps a cone in the model.
    auto s = p.add_variable("s", 0, kInf);
    auto q = p.add_variable("q", 0, kInf);
    auto half = p.add_variable("half", 0.5, 0.5);
    p.add_rotated_cone(q, half, {s});
    std::vector<Term> cap = weight;
    cap.push_back({s, -1.0});
    p.add_linear(cap, Relation::LessEqual, 2.0 * items);
    obj.push_back({q, 3.0});
    p.set_objective(obj);
    return p;
}

}  // namespace

TEST(MixedInteger, MatchesEnumerationOnRandomKnapsacks) {
    std::mt19937 rng(7);
    SolveParams params;
    params.rel_gap_tol = 1e-9;
    for (int trial = 0; trial < 8; ++trial) {
        auto p = knapsack(rng, 6 + trial % 4);
        auto bb = solve_mixed_integer(p, params);
        auto ex = enumerate_oracle(p, params);
        ASSERT_EQ(bb.status, SolveStatus::Optimal) << trial << " " << bb.messages.front();
        ASSERT_EQ(ex.status, SolveStatus::Optimal) << trial;
        EXPECT_NEAR(bb.objective, ex.objective, 1e-6 * std::max(1.0, std::abs(ex.objective))) << trial;
        auto rel = solve_relaxation(p, params);
        EXPECT_LE(rel.objective, bb.objective + 1e-7);
        EXPECT_LE(bb.gap, 1e-9);
    }
}

TEST(MixedInteger, InfeasibleIntegerProgram) {
    ConicProgram p;
    auto a = p.add_binary("a");
    auto b = p.add_binary("b");
    p.add_linear({{a, 1}, {b, 1}}, Relation::Equal, 1);
    p.add_linear({{a, 1}, {b, -1}}, Relation::Equal, 0);
    p.set_objective({{a, 1}});
    EXPECT_EQ(solve_relaxation(p).status, SolveStatus::Optimal);
    EXPECT_EQ(solve_mixed_integer(p).status, SolveStatus::Infeasible);
    EXPECT_EQ(enumerate_oracle(p).status, SolveStatus::Infeasible);
}

TEST(MixedInteger, OracleRefusesLargePrograms) {
    ConicProgram p;
    for (int i = 0; i <= kMaxEnumeratedBinaries; ++i) p.add_binary("b" + std::to_string(i));
    EXPECT_THROW(enumerate_oracle(p), ProgramError);
}

TEST(MixedInteger, NodeLimitIsReported) {
    std::mt19937 rng(3);
    auto p = knapsack(rng, 12);
    SolveParams params;
    params.node_limit = 2;
    params.rel_gap_tol = 0.0;
    auto s = solve_mixed_integer(p, params);
    EXPECT_TRUE(s.status == SolveStatus::NodeLimit || s.status == SolveStatus::Optimal);
    EXPECT_LE(s.nodes, 2);
}

TEST(MixedInteger, HeuristicSuppliesIncumbent) {
    std::mt19937 rng(11);
    auto p = knapsack(rng, 8);
    int calls = 0;
    RoundingHeuristic h = [&](const std::vector<double>& x) {
        ++calls;
        std::vector<double> r(x.size(), 0.0);
        return r;
    };
    SolveParams params;
    params.rel_gap_tol = 1e-9;
    auto s = solve_mixed_integer(p, params, h);
    auto ex = enumerate_oracle(p, params);
    EXPECT_GT(calls, 0);
    EXPECT_NEAR(s.objective, ex.objective, 1e-6 * std::abs(ex.objective));
}
