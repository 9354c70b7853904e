#pragma once

#include "jcc/rng.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace jcc::learn {

/// Feature matrix (one row per sample) with labels in {-1, +1}.
struct LabeledSet {
    Eigen::MatrixXd x;
    std::vector<int> y;
    std::vector<std::string> feature_names;

    std::size_t size() const noexcept { return y.size(); }
    std::size_t dims() const noexcept { return static_cast<std::size_t>(x.cols()); }
    std::size_t count(int label) const;
    LabeledSet subset(std::span<const std::size_t> rows) const;
    /// Throws DataError on NaN features, bad labels or a row/label count mismatch.
    void check() const;
};

/// Per-feature affine map x -> (x - mean) / scale. Constant features get scale 1.
struct Scaler {
    std::vector<double> mean;
    std::vector<double> scale;

    static Scaler fit(const Eigen::MatrixXd& x);
    Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct Hyperplane {
    std::vector<double> w;
    double b = 0.0;
    double c = 1.0;
    std::size_t iterations = 0;
    bool converged = false;

    double decision(std::span<const double> x) const;
    /// sign(decision) with 0 mapped to +1.
    int predict(std::span<const double> x) const;
};

struct SvmOptions {
    double c = 1.0;
    double tol = 1e-4;
    std::size_t max_epochs = 1000;
};

/// Training output with the dual solution, kept in the standardized feature space.
struct SvmFit {
    Hyperplane plane;             ///< raw feature units
    Scaler scaler;
    std::vector<double> w_std;    ///< weights in standardized units
    double b_std = 0.0;
    std::vector<double> alpha;    ///< duals in [0, C]
    std::vector<double> dual_history;  ///< dual objective after every epoch
    double dual_objective = 0.0;
    double primal_objective = 0.0;
};

/// Soft-margin linear SVM: min 0.5 |w|^2 + C sum xi, y (w.x + b) >= 1 - xi, xi >= 0, on standardized
/// features. The dual (with the equality sum alpha_i y_i = 0 from the free bias) is solved by
/// two-coordinate descent on the maximal violating pair; an epoch is n pair updates. Stops when the
/// pair violation is at most tol. The returned plane is folded back to raw units.
/// Throws DataError for single-class data, n < 2 or C <= 0.
SvmFit train_svm_fit(const LabeledSet& data, const SvmOptions& options = {});
Hyperplane train_svm(const LabeledSet& data, const SvmOptions& options = {});

/// n indices drawn uniformly with replacement.
std::vector<std::size_t> bootstrap(std::size_t n, rng::Philox& rng);
/// Sorted indices in [0, n) absent from `drawn`.
std::vector<std::size_t> out_of_bag(std::span<const std::size_t> drawn, std::size_t n);

enum class VoteMode { VoteSign, MeanAffine };

const char* to_string(VoteMode mode);

struct Ensemble {
    std::vector<Hyperplane> planes;
    std::vector<double> weights;  ///< nonnegative, sum 1
    std::vector<std::string> feature_order;
    std::uint64_t seed = 0;

    std::size_t dims() const noexcept { return feature_order.size(); }
    /// vote_sign: sign of sum_m weight_m * predict_m(x); mean_affine: sign of sum_m weight_m * decision_m(x).
    /// Ties give +1. Throws DataError on a dimension mismatch.
    int predict(std::span<const double> x, VoteMode mode = VoteMode::VoteSign) const;
    double score(std::span<const double> x, VoteMode mode = VoteMode::VoteSign) const;
};

/// Plane m is trained on a bootstrap drawn from substream (Bootstrap, m) of `seed`, so an ensemble
/// of size M is a prefix of one of size M + 1. A single-class draw is redrawn up to 10 times.
Ensemble train_bagging(const LabeledSet& data, std::size_t m, const SvmOptions& options, std::uint64_t seed);

struct Metrics {
    std::size_t n = 0;
    std::size_t true_positives = 0;   ///< +1 predicted +1
    std::size_t true_negatives = 0;   ///< -1 predicted -1
    std::size_t false_positives = 0;  ///< +1 predicted -1
    std::size_t false_negatives = 0;  ///< -1 predicted +1 (infeasible point called feasible)
    double accuracy = 0.0;
};

Metrics metrics(const Ensemble& ens, const LabeledSet& test, VoteMode mode = VoteMode::VoteSign);

std::string to_json(const Ensemble& ens);
Ensemble ensemble_from_json(const std::string& text);

}  // namespace jcc::learn
