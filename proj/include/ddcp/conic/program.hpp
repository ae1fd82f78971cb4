#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace ddcp::conic {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

class ProgramError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class VarType { Continuous, Binary };
enum class Relation { LessEqual, Equal, GreaterEqual };

// Rotated: u*w >= sum(y_k^2), u,w >= 0.  Standard: ||y|| <= t.
enum class ConeKind { Rotated, Standard };

struct VarId {
    int index = -1;
    friend bool operator==(VarId, VarId) = default;
};

struct RowId {
    int index = -1;
};

struct ConeId {
    int index = -1;
};

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    VarType type = VarType::Continuous;
    // Higher priority binaries are branched on first.
    int priority = 0;

    bool is_binary() const { return type == VarType::Binary; }
};

struct Term {
    VarId var;
    double coef = 0.0;
};

struct LinearConstraint {
    std::string name;
    std::vector<Term> terms;
    Relation relation = Relation::Equal;
    double rhs = 0.0;
};

struct ConeConstraint {
    std::string name;
    ConeKind kind = ConeKind::Rotated;
    // Rotated: members = {u, w, y...}.  Standard: members = {t, y...}.
    std::vector<VarId> members;
};

struct Objective {
    std::vector<Term> terms;
    double constant = 0.0;
};

/// Mixed-integer second-order cone program, always a minimization.
///
/// Built monotonically: handles returned by the add_* calls stay valid for the
/// lifetime of the program. Binary variables must have integral bounds inside
/// [0, 1]; [0,0] and [1,1] are accepted so callers can pin a decision.
class ConicProgram {
public:
    VarId add_variable(std::string name, double lower, double upper,
                       VarType type = VarType::Continuous, int priority = 0);
    VarId add_binary(std::string name, int priority = 0) {
        return add_variable(std::move(name), 0.0, 1.0, VarType::Binary, priority);
    }

    RowId add_linear(std::vector<Term> terms, Relation relation, double rhs,
                     std::string name = {});
    ConeId add_rotated_cone(VarId u, VarId w, const std::vector<VarId>& ys,
                            std::string name = {});
    ConeId add_standard_cone(VarId t, const std::vector<VarId>& ys,
                             std::string name = {});

    void set_objective(std::vector<Term> terms, double constant = 0.0);

    void set_bounds(VarId id, double lower, double upper);

    const std::vector<Variable>& variables() const { return variables_; }
    const std::vector<LinearConstraint>& linear_constraints() const { return rows_; }
    const std::vector<ConeConstraint>& cones() const { return cones_; }
    const Objective& objective() const { return objective_; }

    const Variable& variable(VarId id) const;
    std::size_t num_variables() const { return variables_.size(); }
    std::size_t num_binaries() const;

    /// Looks up a variable by name; returns an invalid handle when absent.
    VarId find(const std::string& name) const;

    /// Objective value for a full assignment.
    double evaluate_objective(const std::vector<double>& values) const;

private:
    void check(VarId id, const char* where) const;
    static void check_binary_bounds(const std::string& name, double lower, double upper);

    std::vector<Variable> variables_;
    std::vector<LinearConstraint> rows_;
    std::vector<ConeConstraint> cones_;
    Objective objective_;
    std::unordered_map<std::string, int> by_name_;
};

enum class Severity { Warning, Error };

struct Diagnostic {
    Severity severity = Severity::Warning;
    std::string message;
};

/// Structural checks: unreferenced variables, empty rows, bad binary bounds,
/// inverted bounds and non-finite coefficients. Never throws.
std::vector<Diagnostic> validate(const ConicProgram& program);

/// Residuals of a candidate assignment, computed straight from the program
/// data without any solver state.
struct FeasibilityReport {
    double max_linear_violation = 0.0;
    double max_bound_violation = 0.0;
    double min_cone_residual = kInf;  // most negative cone residual
    double max_integrality_violation = 0.0;
    std::vector<double> cone_gaps;  // rotated: u*w - |y|^2, standard: t - |y|

    bool feasible(double tol) const {
        return max_linear_violation <= tol && max_bound_violation <= tol &&
               min_cone_residual >= -tol;
    }
};

FeasibilityReport check_feasibility(const ConicProgram& program,
                                    const std::vector<double>& values);

double cone_gap(const ConeConstraint& cone, const std::vector<double>& values);

// Text dump, one directive per line:
//   conic-program v1
//   var <name> <lower> <upper> <C|B> <priority>
//   min <constant> {<coef> <var>}
//   row <name> <le|eq|ge> <rhs> {<coef> <var>}
//   rcone <name> <u> <w> {<y>}
//   scone <name> <t> {<y>}
//   end
// Names must not contain whitespace; an empty row/cone name is written as "-".
// Numbers use 17 significant digits so a dump re-parses bit-exactly.
void write_text(std::ostream& out, const ConicProgram& program);
std::string to_text(const ConicProgram& program);
ConicProgram read_text(std::istream& in);
ConicProgram from_text(const std::string& text);

}  // namespace ddcp::conic
