#include "jcc/error.hpp"
#include "jcc/learn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace jcc::learn {

std::size_t LabeledSet::count(int label) const {
    return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

LabeledSet LabeledSet::subset(std::span<const std::size_t> rows) const {
    LabeledSet out;
    out.feature_names = feature_names;
    out.x.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.x.row(static_cast<Eigen::Index>(i)) = x.row(static_cast<Eigen::Index>(rows[i]));
        out.y.push_back(y[rows[i]]);
    }
    return out;
}

void LabeledSet::check() const {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw DataError("feature rows and labels differ in count");
    if (!feature_names.empty() && feature_names.size() != dims()) throw DataError("feature names do not match columns");
    if (x.hasNaN()) throw DataError("features contain NaN");
    for (int v : y) {
        if (v != 1 && v != -1) throw DataError("labels must be -1 or +1");
    }
}

Scaler Scaler::fit(const Eigen::MatrixXd& x) {
    Scaler s;
    const double n = static_cast<double>(x.rows());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        const double mean = x.col(j).mean();
        const double var = (x.col(j).array() - mean).square().sum() / n;
        const double sd = std::sqrt(var);
        s.mean.push_back(mean);
        s.scale.push_back(sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0);
    }
    return s;
}

Eigen::MatrixXd Scaler::apply(const Eigen::MatrixXd& x) const {
    Eigen::MatrixXd out = x;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        out.col(j) = (x.col(j).array() - mean[static_cast<std::size_t>(j)]) / scale[static_cast<std::size_t>(j)];
    }
    return out;
}

double Hyperplane::decision(std::span<const double> x) const {
    if (x.size() != w.size()) throw DataError("feature dimension mismatch");
    double s = b;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    return s;
}

int Hyperplane::predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : -1; }

namespace {

constexpr double kTau = 1e-12;

// Two-coordinate descent on min 0.5 a'Qa - e'a, y'a = 0, 0 <= a <= C with Q_ij = y_i y_j x_i.x_j.
// The working pair is the maximal violating pair with second-order choice of the second index.
class DualSolver {
public:
    DualSolver(const Eigen::MatrixXd& x, const std::vector<int>& y, double c) : x_(x), c_(c), n_(y.size()) {
        for (int v : y) y_.push_back(static_cast<double>(v));
        alpha_.assign(n_, 0.0);
        grad_.assign(n_, -1.0);
        w_ = Eigen::VectorXd::Zero(x.cols());
        qd_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) qd_[i] = x_.row(static_cast<Eigen::Index>(i)).squaredNorm();
    }

    /// One pair update. Returns false when the pair violation is at most tol.
    bool step(double tol) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n_;
        for (std::size_t t = 0; t < n_; ++t) {
            if (y_[t] > 0) {
                if (!upper(t) && -grad_[t] >= gmax) {
                    gmax = -grad_[t];
                    i = t;
                }
            } else if (!lower(t) && grad_[t] >= gmax) {
                gmax = grad_[t];
                i = t;
            }
        }
        if (i == n_) return false;
        const Eigen::VectorXd ki = x_ * x_.row(static_cast<Eigen::Index>(i)).transpose();
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        std::size_t j = n_;
        for (std::size_t t = 0; t < n_; ++t) {
            const double kit = ki(static_cast<Eigen::Index>(t));
            if (y_[t] > 0) {
                if (lower(t)) continue;
                const double diff = gmax + grad_[t];
                gmax2 = std::max(gmax2, grad_[t]);
                if (diff > 0) {
                    const double quad = qd_[i] + qd_[t] - 2.0 * y_[i] * kit;
                    const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
                    if (obj <= best) {
                        best = obj;
                        j = t;
                    }
                }
            } else {
                if (upper(t)) continue;
                const double diff = gmax - grad_[t];
                gmax2 = std::max(gmax2, -grad_[t]);
                if (diff > 0) {
                    const double quad = qd_[i] + qd_[t] + 2.0 * y_[i] * kit;
                    const double obj = -(diff * diff) / (quad > 0 ? quad : kTau);
                    if (obj <= best) {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        if (gmax + gmax2 <= tol || j == n_) return false;
        update(i, j, y_[i] * y_[j] * ki(static_cast<Eigen::Index>(j)));
        return true;
    }

    double dual_objective() const {
        double s = 0.0;
        for (double a : alpha_) s += a;
        return s - 0.5 * w_.squaredNorm();
    }

    double primal_objective(double b) const {
        double hinge = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double m = y_[i] * (x_.row(static_cast<Eigen::Index>(i)).dot(w_) + b);
            hinge += std::max(0.0, 1.0 - m);
        }
        return 0.5 * w_.squaredNorm() + c_ * hinge;
    }

    /// Bias from the free duals, or the middle of the feasible interval when none is free.
    double bias() const {
        double ub = std::numeric_limits<double>::infinity();
        double lb = -std::numeric_limits<double>::infinity();
        double sum = 0.0;
        std::size_t free = 0;
        for (std::size_t i = 0; i < n_; ++i) {
            const double yg = y_[i] * grad_[i];
            if (upper(i)) {
                if (y_[i] < 0) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else if (lower(i)) {
                if (y_[i] > 0) ub = std::min(ub, yg);
                else lb = std::max(lb, yg);
            } else {
                ++free;
                sum += yg;
            }
        }
        const double rho = free > 0 ? sum / static_cast<double>(free) : 0.5 * (ub + lb);
        return -rho;
    }

    const std::vector<double>& alpha() const { return alpha_; }
    const Eigen::VectorXd& w() const { return w_; }

private:
    bool upper(std::size_t t) const { return alpha_[t] >= c_; }
    bool lower(std::size_t t) const { return alpha_[t] <= 0.0; }

    void update(std::size_t i, std::size_t j, double qij) {
        const double old_i = alpha_[i], old_j = alpha_[j];
        double& ai = alpha_[i];
        double& aj = alpha_[j];
        if (y_[i] != y_[j]) {
            double quad = qd_[i] + qd_[j] + 2.0 * qij;
            if (quad <= 0) quad = kTau;
            const double delta = (-grad_[i] - grad_[j]) / quad;
            const double diff = ai - aj;
            ai += delta;
            aj += delta;
            if (diff > 0) {
                if (aj < 0) {
                    aj = 0;
                    ai = diff;
                }
            } else if (ai < 0) {
                ai = 0;
                aj = -diff;
            }
            if (diff > 0) {
                if (ai > c_) {
                    ai = c_;
                    aj = c_ - diff;
                }
            } else if (aj > c_) {
                aj = c_;
                ai = c_ + diff;
            }
        } else {
            double quad = qd_[i] + qd_[j] - 2.0 * qij;
            if (quad <= 0) quad = kTau;
            const double delta = (grad_[i] - grad_[j]) / quad;
            const double sum = ai + aj;
            ai -= delta;
            aj += delta;
            if (sum > c_) {
                if (ai > c_) {
                    ai = c_;
                    aj = sum - c_;
                }
            } else if (aj < 0) {
                aj = 0;
                ai = sum;
            }
            if (sum > c_) {
                if (aj > c_) {
                    aj = c_;
                    ai = sum - c_;
                }
            } else if (ai < 0) {
                ai = 0;
                aj = sum;
            }
        }
        const Eigen::VectorXd dw = (ai - old_i) * y_[i] * x_.row(static_cast<Eigen::Index>(i)).transpose() +
                                   (aj - old_j) * y_[j] * x_.row(static_cast<Eigen::Index>(j)).transpose();
        w_ += dw;
        const Eigen::VectorXd dm = x_ * dw;
        for (std::size_t t = 0; t < n_; ++t) grad_[t] += y_[t] * dm(static_cast<Eigen::Index>(t));
    }

    const Eigen::MatrixXd& x_;
    double c_;
    std::size_t n_;
    std::vector<double> y_, alpha_, grad_, qd_;
    Eigen::VectorXd w_;
};

}  // namespace

SvmFit train_svm_fit(const LabeledSet& data, const SvmOptions& options) {
    data.check();
    if (data.size() < 2) throw DataError("SVM training needs at least two samples");
    if (data.count(1) == 0 || data.count(-1) == 0) throw DataError("SVM training needs both classes");
    if (!(options.c > 0.0)) throw DataError("SVM regularization C must be positive");

    SvmFit fit;
    fit.scaler = Scaler::fit(data.x);
    const Eigen::MatrixXd xs = fit.scaler.apply(data.x);
    DualSolver solver(xs, data.y, options.c);

    const std::size_t n = data.size();
    const std::size_t cap = options.max_epochs * n;
    std::size_t iter = 0;
    bool converged = false;
    while (iter < cap) {
        if (!solver.step(options.tol)) {
            converged = true;
            break;
        }
        ++iter;
        if (iter % n == 0) fit.dual_history.push_back(solver.dual_objective());
    }
    if (fit.dual_history.empty() || iter % n != 0) fit.dual_history.push_back(solver.dual_objective());

    fit.alpha = solver.alpha();
    fit.b_std = solver.bias();
    fit.w_std.assign(solver.w().data(), solver.w().data() + solver.w().size());
    fit.dual_objective = solver.dual_objective();
    fit.primal_objective = solver.primal_objective(fit.b_std);

    auto& h = fit.plane;
    h.b = fit.b_std;
    for (std::size_t f = 0; f < fit.w_std.size(); ++f) {
        const double wf = fit.w_std[f] / fit.scaler.scale[f];
        h.w.push_back(wf);
        h.b -= wf * fit.scaler.mean[f];
    }
    h.c = options.c;
    h.iterations = iter;
    h.converged = converged;
    return fit;
}

Hyperplane train_svm(const LabeledSet& data, const SvmOptions& options) { return train_svm_fit(data, options).plane; }

}  // namespace jcc::learn
