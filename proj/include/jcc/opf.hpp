#pragma once

#include "jcc/mip.hpp"
#include "jcc/netcase.hpp"
#include "jcc/ptdf.hpp"
#include "jcc/scenarios.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace jcc::learn {
struct Ensemble;
}

namespace jcc::opf {

enum class BigMMode {
    /// M_l = sum_n |B_ln| * (max credible injection at n) + limit_l, one value per line.
    PerLineComputed,
    /// A user value used for every line.
    Fixed,
};

struct SaaConfig {
    double alpha = 0.05;
    std::size_t n_scenarios = 100;
    /// Branch indices whose limits enter the model. Empty: every in-service branch with a finite limit.
    std::vector<std::size_t> monitored_lines;
    BigMMode big_m_mode = BigMMode::PerLineComputed;
    double big_m_value = 0.0;  ///< used with BigMMode::Fixed
    double big_m_scale = 1.0;  ///< multiplies every M (the doubling check uses 2)
    int cost_segments = 8;
    int beta_segments = 8;
};

/// floor(alpha * n), with a small epsilon so that e.g. 0.05 * 100 gives 5.
std::size_t violation_budget(double alpha, std::size_t n);

struct DispatchSolution {
    mip::SolveStatus status = mip::SolveStatus::Infeasible;
    std::vector<double> p;     ///< MW per generator
    std::vector<double> beta;  ///< participation factor per generator
    std::vector<int> z;        ///< per scenario, 1 = scenario allowed to violate
    double cost = 0.0;         ///< model objective (piecewise-linear cost)
    double quadratic_cost = 0.0;  ///< exact quadratic expected cost at (p, beta)
    std::size_t budget = 0;
    std::size_t nodes = 0;
    std::size_t lp_iterations = 0;

    bool optimal() const noexcept { return status == mip::SolveStatus::Optimal; }
    std::size_t relaxed_scenarios() const;
};

/// Assembled model with the variable layout needed to read a solution back.
struct OpfModel {
    mip::MipModel model;
    std::vector<std::size_t> p_var;
    std::vector<std::size_t> beta_var;
    std::vector<std::size_t> z_var;
    std::vector<std::size_t> monitored;  ///< branch indices with line rows
    std::vector<double> big_m;           ///< per monitored branch
    double big_m_svm = 0.0;
    std::size_t budget = 0;
    std::size_t surrogate_rows = 0;
};

/// Monitored branches after applying the config default.
std::vector<std::size_t> monitored_lines(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf,
                                         const SaaConfig& cfg);

/// Big-M for branch `line`: sum_n |B_ln| * (installed p_max at n + max_s d_n^s + max_s w_n^s) + limit.
double compute_big_m(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf, const scenarios::ScenarioSet& scen,
                     std::size_t line);

/// SAA chance-constrained model. Throws InfeasibleError when generation cannot cover the mean net
/// demand, DataError when inputs do not fit together.
OpfModel build_saa(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf, const scenarios::ScenarioSet& scen,
                   const SaaConfig& cfg);

/// Same balance, generator limits and cost, but line limits only at the mean injection and no
/// scenario rows. Participation factors are still chosen (by cost) so the result has a policy.
OpfModel build_deterministic(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf,
                             const scenarios::UncertaintySpec& spec, const SaaConfig& cfg);

enum class SurrogateMode { MeanAffine, Conjunctive };

const char* to_string(SurrogateMode mode);
SurrogateMode surrogate_mode_from_string(const std::string& s);

/// max_m (sum_g |w_mg| * p_max_g + |b_m|) + 1. Features that are participation factors use a bound of 1.
double compute_big_m_svm(const learn::Ensemble& ens, const netcase::Network& net);

/// Line rows replaced by classifier rows on P_gs = p_g + beta_g * Omega_s:
///  - Conjunctive: w_m . P_s + b_m + M_svm z_s >= 0 for every plane m;
///  - MeanAffine: sum_m weight_m (w_m . P_s + b_m) + M_svm z_s >= 0.
/// `big_m_svm_scale` multiplies M_svm. Throws DataError if the ensemble features do not match.
/// Since the rows depend on a scenario only through Omega_s, `order_by_omega` adds rows and bounds
/// that let z relax only the lowest and highest omegas; the optimum is the same either way.
OpfModel build_surrogate(const netcase::Network& net, const scenarios::ScenarioSet& scen, const learn::Ensemble& ens,
                         const SaaConfig& cfg, SurrogateMode mode, double big_m_svm_scale = 1.0,
                         bool order_by_omega = true);

DispatchSolution extract(const OpfModel& m, const mip::MipSolution& sol, const netcase::Network& net,
                         double var_omega);

DispatchSolution solve(const OpfModel& m, const netcase::Network& net, double var_omega,
                       const mip::SolverOptions& options = {});

DispatchSolution solve_saa(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf,
                           const scenarios::ScenarioSet& scen, const SaaConfig& cfg,
                           const mip::SolverOptions& options = {});

DispatchSolution solve_deterministic(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf,
                                     const scenarios::UncertaintySpec& spec, const SaaConfig& cfg,
                                     const mip::SolverOptions& options = {});

/// sum_g c2 p^2 + c1 p + c0 + var_omega * c2 beta^2.
double expected_cost(const netcase::Network& net, const std::vector<double>& p, const std::vector<double>& beta,
                     double var_omega);

/// Branch flows (per PTDF row) for the policy applied to one scenario.
std::vector<double> scenario_flows(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf,
                                   const DispatchSolution& sol, const scenarios::Scenario& s);

/// Branches of the PTDF rows whose loading exceeds `threshold` * limit at the mean injection.
std::vector<std::size_t> loaded_lines(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf,
                                      const DispatchSolution& sol, const scenarios::UncertaintySpec& spec,
                                      double threshold);

struct ExPostReport {
    std::size_t scenarios = 0;
    std::size_t violations = 0;  ///< scenarios with at least one overloaded line
    double worst_overload = 0.0; ///< max over scenarios and lines of |f| - limit, MW (0 if none)
    double probability = 0.0;    ///< violations / scenarios
    std::vector<std::size_t> violated;  ///< indices of violating scenarios
};

/// Overload slack in MW used by the check.
inline constexpr double kOverloadSlack = 1e-6;

/// Applies p + beta * Omega to every scenario and counts those with |f_l| > limit_l + 1e-6 on any
/// in-service line.
ExPostReport expost_validate(const netcase::Network& net, const ptdf::PtdfMatrix& ptdf, const DispatchSolution& sol,
                             const scenarios::ScenarioSet& mc);

std::string to_json(const DispatchSolution& sol, const netcase::Network& net);
std::string to_csv(const DispatchSolution& sol, const netcase::Network& net);
std::string to_json(const ExPostReport& report);
std::string to_csv(const ExPostReport& report);

}  // namespace jcc::opf
