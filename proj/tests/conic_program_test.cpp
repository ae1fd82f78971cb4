#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "ddcp/conic/program.hpp"

using namespace ddcp::conic;

TEST(ConicProgram, RejectsDuplicateNamesAndBadBinaryBounds) {
    ConicProgram p;
    p.add_variable("x", 0, 1);
    EXPECT_THROW(p.add_variable("x", 0, 1), ProgramError);
    EXPECT_THROW(p.add_variable("b", 0, 2, VarType::Binary), ProgramError);
    EXPECT_THROW(p.add_variable("c", 0.5, 1, VarType::Binary), ProgramError);
    EXPECT_NO_THROW(p.add_variable("d", 1, 1, VarType::Binary));
    EXPECT_NO_THROW(p.add_variable("e", 0, 0, VarType::Binary));
    EXPECT_THROW(p.add_variable("f", std::nan(""), 1), ProgramError);
}

TEST(ConicProgram, MergesDuplicateTermsAndDropsZeros) {
    ConicProgram p;
    auto x = p.add_variable("x", -kInf, kInf);
    auto y = p.add_variable("y", -kInf, kInf);
    p.add_linear({{x, 1.0}, {y, 0.0}, {x, 2.0}}, Relation::LessEqual, 3.0);
    ASSERT_EQ(p.linear_constraints().size(), 1u);
    const auto& row = p.linear_constraints()[0];
    ASSERT_EQ(row.terms.size(), 1u);
    EXPECT_DOUBLE_EQ(row.terms[0].coef, 3.0);
}

TEST(ConicProgram, ValidateFlagsUnusedVariables) {
    ConicProgram p;
    p.add_variable("lonely", 0, 1);
    auto diags = validate(p);
    ASSERT_FALSE(diags.empty());
    EXPECT_EQ(diags[0].severity, Severity::Warning);
}

TEST(ConicProgram, FeasibilityReportUsesProgramData) {
    ConicProgram p;
    auto u = p.add_variable("u", 0, kInf);
    auto w = p.add_variable("w", 0, kInf);
    auto y = p.add_variable("y", -kInf, kInf);
    p.add_rotated_cone(u, w, {y});
    p.add_linear({{u, 1}, {w, 1}}, Relation::Equal, 4);
    auto ok = check_feasibility(p, {2, 2, 2});
    EXPECT_TRUE(ok.feasible(1e-12));
    EXPECT_NEAR(ok.cone_gaps[0], 0.0, 1e-15);
    auto bad = check_feasibility(p, {1, 3, 2});
    EXPECT_FALSE(bad.feasible(1e-9));
    EXPECT_NEAR(bad.min_cone_residual, -1.0, 1e-15);
    EXPECT_NEAR(bad.max_linear_violation, 0.0, 1e-15);
}

TEST(ConicProgram, TextDumpRoundTripsExactly) {
    ConicProgram p;
    auto a = p.add_variable("a", -kInf, 0.1);
    auto b = p.add_binary("b", 3);
    auto t = p.add_variable("t", 0, kInf);
    p.add_linear({{a, 1.0 / 3.0}, {b, -2.5}}, Relation::GreaterEqual, -7.25, "r0");
    p.add_standard_cone(t, {a, b}, "cone");
    p.add_rotated_cone(t, t, {a});
    p.set_objective({{a, 1e-7}, {t, 2.0}}, 0.125);
    const std::string text = to_text(p);
    ConicProgram q = from_text(text);
    EXPECT_EQ(to_text(q), text);
    ASSERT_EQ(q.num_variables(), 3u);
    EXPECT_EQ(q.variables()[1].priority, 3);
    EXPECT_TRUE(q.variables()[1].is_binary());
    EXPECT_EQ(q.variables()[0].lower, -kInf);
    EXPECT_EQ(q.linear_constraints()[0].terms[0].coef, 1.0 / 3.0);
}

TEST(ConicProgram, ParserReportsLineNumbers) {
    std::istringstream in("conic-program v1\nvar x 0 1 C 0\nrow - le nope 1 x\nend\n");
    try {
        read_text(in);
        FAIL() << "expected a parse error";
    } catch (const ProgramError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}
