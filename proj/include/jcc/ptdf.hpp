#pragma once

#include "jcc/netcase.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <vector>

namespace jcc::ptdf {

/// Power transfer distribution factors under the DC approximation.
///
/// Row r belongs to in-service branch `branch_of_row()[r]`; column n to `net.buses[n]`.
/// entries(r, n) is the MW flow on the branch (positive from `from_bus` to `to_bus`) caused by
/// injecting 1 MW at bus n and withdrawing it at the slack bus. The slack column is zero, which is
/// how the reference-angle condition enters: angles are eliminated with theta_slack = 0.
class PtdfMatrix {
public:
    PtdfMatrix(Eigen::MatrixXd entries, std::vector<std::size_t> branch_of_row, std::size_t slack_column,
               int slack_bus);

    const Eigen::MatrixXd& entries() const noexcept { return entries_; }
    double operator()(std::size_t row, std::size_t bus) const { return entries_(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(bus)); }
    std::size_t rows() const noexcept { return static_cast<std::size_t>(entries_.rows()); }
    std::size_t buses() const noexcept { return static_cast<std::size_t>(entries_.cols()); }
    const std::vector<std::size_t>& branch_of_row() const noexcept { return branch_of_row_; }
    /// Row of a network branch index, or npos when the branch is out of service.
    std::size_t row_of_branch(std::size_t branch) const;
    std::size_t slack_column() const noexcept { return slack_column_; }
    int slack_bus() const noexcept { return slack_bus_; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    Eigen::MatrixXd entries_;
    std::vector<std::size_t> branch_of_row_;
    std::size_t slack_column_;
    int slack_bus_;
};

/// Builds the PTDF with the network's reference bus as slack. Out-of-service branches get no row.
/// Throws DataError if the reduced susceptance matrix is singular.
PtdfMatrix build_ptdf(const netcase::Network& net);

/// Same, with an explicit slack bus id (used to check slack invariance of balanced flows).
PtdfMatrix build_ptdf(const netcase::Network& net, int slack_bus);

/// Per-row flows in MW for a per-bus injection vector (MW). Unbalanced injections are absorbed at
/// the slack. Throws DataError on a length mismatch.
std::vector<double> flows(const PtdfMatrix& ptdf, std::span<const double> injection);

/// CSV: header `branch,from,to,<bus ids...>`, one line per PTDF row.
std::string to_csv(const PtdfMatrix& ptdf, const netcase::Network& net);

}  // namespace jcc::ptdf
