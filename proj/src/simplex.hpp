#pragma once

#include "jcc/mip.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace jcc::mip::detail {

/// Basis in model terms: a basic entry j < n is structural variable j, n + r is the slack of model row r.
struct Basis {
    std::vector<std::size_t> basic;
    std::vector<char> at_upper;  ///< per structural variable, meaningful when nonbasic

    bool empty() const noexcept { return basic.empty(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::Infeasible;
    double objective = 0.0;
    std::vector<double> x;  ///< structural values
    std::size_t iterations = 0;
};

/// Bounded-variable primal simplex on a dense tableau over a working set of model rows.
///
/// Every row is written a*x + s = b with a slack s bounded by the row sense. Phase 1 minimizes the
/// sum of bound violations of basic variables, phase 2 the model objective. Pricing is Dantzig's
/// rule, switching to Bland's rule after `stall_threshold` consecutive degenerate steps. The ratio
/// test is Harris' two-pass variant.
///
/// With lazy rows the working set starts with the equality rows; after each optimum every other row
/// is checked and the most violated ones are appended (their slacks enter the basis), so the final
/// point is optimal for the full model. The working set only grows, so one engine can serve all
/// nodes of a branch-and-bound search.
class DenseSimplex {
public:
    DenseSimplex(const MipModel& model, const SolverOptions& options);

    /// Solves with the given structural bounds. `warm`, when non-null, seeds the basis.
    LpResult solve(std::span<const double> lower, std::span<const double> upper, const Basis* warm);

    Basis basis() const;
    std::size_t working_rows() const noexcept { return rows_.size(); }

private:
    enum class State : unsigned char { Basic, Lower, Upper, Zero };

    std::size_t cols() const noexcept { return n_ + rows_.size(); }
    void add_row(std::size_t model_row, bool eliminate);
    void rebuild(const std::vector<std::size_t>& target_basic);
    void reset_nonbasic_values();
    void recompute_basic_values();
    void pivot(std::size_t r, std::size_t q, std::vector<double>* reduced);
    LpStatus iterate(std::size_t& iterations);
    std::vector<std::size_t> violated_rows() const;
    std::size_t column_of(std::size_t basis_id) const;
    double tol_of(double bound) const noexcept;

    const MipModel& model_;
    SolverOptions opt_;
    std::size_t n_;

    std::vector<std::size_t> rows_;  ///< model row of each working-set row
    std::vector<long> row_pos_;      ///< model row -> working-set position, -1 if absent
    std::vector<std::vector<double>> tab_;
    std::vector<double> rhs_;
    std::vector<std::size_t> head_;
    std::vector<State> state_;
    std::vector<double> x_, lo_, up_, cost_;
    std::size_t pivots_since_refactor_ = 0;
    bool built_ = false;
};

}  // namespace jcc::mip::detail
