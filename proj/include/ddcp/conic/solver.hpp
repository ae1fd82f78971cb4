#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "ddcp/conic/program.hpp"

namespace ddcp::conic {

enum class SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    GapLimit,   // incumbent found, optimality not certified (failed nodes)
    NodeLimit,
    TimeLimit,
    NumericalFailure,
};

const char* to_string(SolveStatus status);

struct NodeLogEntry {
    long node = 0;
    int depth = 0;
    double node_bound = 0.0;
    double best_bound = 0.0;
    double incumbent = kInf;
    double gap = kInf;
    const char* event = "";
};

struct SolveParams {
    double feasibility_tol = 1e-8;
    double integrality_tol = 1e-6;
    double rel_gap_tol = 1e-4;
    long node_limit = 200000;
    double time_limit = kInf;  // seconds
    bool deterministic = true;
    int max_iterations = 150;  // interior-point iterations per relaxation
    std::function<void(const NodeLogEntry&)> log;
    // Called with every new incumbent (values indexed like the program's
    // variables) and its objective.
    std::function<void(const std::vector<double>&, double)> on_incumbent;

    void check() const;
};

struct Solution {
    SolveStatus status = SolveStatus::NumericalFailure;
    double objective = kInf;
    std::vector<double> values;
    double bound = -kInf;
    double gap = kInf;
    std::vector<double> cone_gaps;
    long nodes = 0;
    long relaxations = 0;
    int iterations = 0;
    std::vector<std::string> messages;

    bool has_values() const { return !values.empty(); }
    bool optimal() const { return status == SolveStatus::Optimal; }
    double value(VarId id) const { return values.at(id.index); }
};

/// Dense-index conic problem handed to a continuous backend:
///   minimize c'x  s.t.  A x = b,  h - G x in K,
/// where K is R_+^{linear_rows} followed by standard second-order cones of the
/// listed sizes (head first).
struct StandardForm {
    Eigen::VectorXd c;
    Eigen::SparseMatrix<double> A;
    Eigen::VectorXd b;
    Eigen::SparseMatrix<double> G;
    Eigen::VectorXd h;
    int linear_rows = 0;
    std::vector<int> soc_sizes;
};

enum class BackendStatus { Optimal, PrimalInfeasible, DualInfeasible, NumericalFailure };

struct BackendSettings {
    double feastol = 1e-9;
    double abstol = 1e-10;
    double reltol = 1e-10;
    int max_iterations = 150;
    double static_reg = 1e-9;
    int refine_steps = 6;
};

struct BackendResult {
    BackendStatus status = BackendStatus::NumericalFailure;
    Eigen::VectorXd x, y, z, s;
    int iterations = 0;
};

/// Plug-in contract for the continuous solver: solve one SOCP in standard
/// form and return primal/dual iterates plus a status. Infeasible results
/// carry a certificate in (y, z) and unbounded results a ray in x.
class ConicBackend {
public:
    virtual ~ConicBackend() = default;
    virtual BackendResult solve(const StandardForm& problem, const BackendSettings& settings) const = 0;
};

/// Primal-dual interior point method on the homogeneous self-dual embedding
/// with Nesterov-Todd scaling and Mehrotra correction.
class InteriorPointBackend final : public ConicBackend {
public:
    BackendResult solve(const StandardForm& problem, const BackendSettings& settings) const override;
};

const ConicBackend& default_backend();

/// Optional primal heuristic: maps a fractional relaxation point to a full
/// 0/1 assignment for the binaries (indexed like ConicProgram::variables();
/// entries of continuous variables are ignored). The solver fixes the
/// binaries, solves the remaining continuous problem and keeps the result if
/// it improves the incumbent.
using RoundingHeuristic = std::function<std::vector<double>(const std::vector<double>& relaxed)>;

/// Continuous relaxation: integrality dropped, binaries kept inside their bounds.
Solution solve_relaxation(const ConicProgram& program, const SolveParams& params = {},
                          const ConicBackend& backend = default_backend());

/// Same as solve_relaxation with per-variable bound overrides.
Solution solve_relaxation(const ConicProgram& program, const std::vector<double>& lower,
                          const std::vector<double>& upper, const SolveParams& params,
                          const ConicBackend& backend = default_backend());

/// Best-bound branch and bound over the binaries.
Solution solve_mixed_integer(const ConicProgram& program, const SolveParams& params = {},
                             const RoundingHeuristic& heuristic = {},
                             const ConicBackend& backend = default_backend());

/// Exhaustive oracle: solves the continuous problem for every 0/1 assignment.
/// Throws ProgramError beyond kMaxEnumeratedBinaries binaries.
inline constexpr int kMaxEnumeratedBinaries = 20;
Solution enumerate_oracle(const ConicProgram& program, const SolveParams& params = {},
                          const ConicBackend& backend = default_backend());

}  // namespace ddcp::conic
