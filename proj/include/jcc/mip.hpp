#pragma once

#include "jcc/netcase.hpp"

#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace jcc::mip {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class VarKind { Continuous, Binary };
enum class Sense { LessEqual, Equal, GreaterEqual };

struct Variable {
    std::string name;
    double lower = 0.0;
    double upper = kInf;
    VarKind kind = VarKind::Continuous;
    double objective = 0.0;
};

struct Term {
    std::size_t var;
    double coef;
};

struct Constraint {
    std::string name;
    std::vector<Term> terms;
    Sense sense = Sense::LessEqual;
    double rhs = 0.0;
};

/// Sparse linear (mixed-binary) minimization model.
class MipModel {
public:
    std::size_t add_variable(std::string name, double lower, double upper, VarKind kind = VarKind::Continuous,
                             double objective = 0.0);
    std::size_t add_binary(std::string name, double objective = 0.0) {
        return add_variable(std::move(name), 0.0, 1.0, VarKind::Binary, objective);
    }
    std::size_t add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs);

    void set_objective(std::size_t var, double coef);
    void add_objective(std::size_t var, double coef);
    void add_objective_constant(double value) { objective_constant_ += value; }
    void set_bounds(std::size_t var, double lower, double upper);

    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
    const Variable& variable(std::size_t i) const { return variables_.at(i); }
    const Constraint& constraint(std::size_t i) const { return constraints_.at(i); }
    std::size_t num_variables() const noexcept { return variables_.size(); }
    std::size_t num_constraints() const noexcept { return constraints_.size(); }
    std::size_t num_binaries() const noexcept;
    double objective_constant() const noexcept { return objective_constant_; }

    /// Throws DataError when a term references a missing variable, bounds are inverted, a binary
    /// has bounds outside [0,1], or a coefficient is not finite.
    void validate() const;

    double objective_value(std::span<const double> x) const;
    double activity(std::size_t row, std::span<const double> x) const;
    /// Largest absolute violation over rows and variable bounds.
    double max_violation(std::span<const double> x) const;

    /// CPLEX-LP style text for cross-checking with external solvers.
    std::string to_lp_text() const;

private:
    std::vector<Variable> variables_;
    std::vector<Constraint> constraints_;
    double objective_constant_ = 0.0;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NodeLimit };

const char* to_string(SolveStatus status);

struct MipSolution {
    SolveStatus status = SolveStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> values;
    std::size_t nodes = 0;
    std::size_t lp_iterations = 0;

    bool optimal() const noexcept { return status == SolveStatus::Optimal; }
};

struct SolverOptions {
    double feasibility_tol = 1e-7;
    double optimality_tol = 1e-9;
    double integrality_tol = 1e-6;
    double absolute_gap = 1e-6;
    double relative_gap = 1e-6;
    std::size_t max_lp_iterations = 200'000;
    std::size_t max_nodes = 1'000'000;
    /// Degenerate pivots without objective progress before switching to Bland's rule.
    std::size_t stall_threshold = 50;
    std::size_t refactor_interval = 100;
    /// Start from equality rows and add violated inequality rows on demand. Off means every row is
    /// in the tableau from the start. The returned optimum is the same either way.
    bool lazy_rows = true;
    std::size_t lazy_rows_per_round = 64;
    /// Called with each new incumbent of the branch-and-bound search (objective, values).
    std::function<void(double, std::span<const double>)> on_incumbent;
};

/// LP relaxation (binaries relaxed to [0,1]) by bounded primal simplex.
MipSolution solve_lp(const MipModel& model, const SolverOptions& options = {});

/// Best-bound branch and bound over the binary variables. Branches on the most fractional binary
/// (ties: lowest index). A node is pruned when its bound is within
/// min(absolute_gap, relative_gap * max(1, |incumbent|)) of the incumbent.
MipSolution solve_milp(const MipModel& model, const SolverOptions& options = {});

/// Convex piecewise-linear curve given by its breakpoints.
struct PiecewiseCurve {
    std::vector<double> breakpoints;  ///< strictly increasing
    std::vector<double> values;

    std::size_t segments() const noexcept { return breakpoints.empty() ? 0 : breakpoints.size() - 1; }
    bool is_convex(double tol = 1e-9) const;
    /// Linear interpolation; extrapolates with the end segments outside the breakpoint range.
    double operator()(double x) const;
};

/// Interpolates the cost curve at `segments + 1` uniform breakpoints on [p_lo, p_hi]. With c2 = 0 the
/// result is the two-point curve. Chords overestimate by at most c2 * width^2 / 4 per segment.
/// Throws DataError for c2 < 0, p_lo >= p_hi or segments < 1.
PiecewiseCurve linearize(const netcase::CostCurve& cost, double p_lo, double p_hi, int segments);

/// Adds an epigraph variable t >= chord_k(var) for every segment and puts +t in the objective.
/// Returns the index of t. Throws DataError if the curve is not convex.
std::size_t add_piecewise_objective(MipModel& model, std::size_t var, const PiecewiseCurve& curve,
                                    const std::string& name = "");

}  // namespace jcc::mip
