#include "simplex.hpp"

#include "jcc/error.hpp"

#include <algorithm>
#include <cmath>

namespace jcc::mip::detail {
namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-14;

}  // namespace

DenseSimplex::DenseSimplex(const MipModel& model, const SolverOptions& options)
    : model_(model), opt_(options), n_(model.num_variables()), row_pos_(model.num_constraints(), -1) {
    lo_.resize(n_);
    up_.resize(n_);
    cost_.resize(n_);
    x_.assign(n_, 0.0);
    state_.assign(n_, State::Lower);
    for (std::size_t j = 0; j < n_; ++j) {
        lo_[j] = model.variable(j).lower;
        up_[j] = model.variable(j).upper;
        cost_[j] = model.variable(j).objective;
    }
    for (std::size_t r = 0; r < model.num_constraints(); ++r) {
        if (!opt_.lazy_rows || model.constraint(r).sense == Sense::Equal) add_row(r, false);
    }
}

double DenseSimplex::tol_of(double bound) const noexcept {
    return opt_.feasibility_tol * std::max(1.0, 1e-3 * std::abs(bound));
}

std::size_t DenseSimplex::column_of(std::size_t basis_id) const {
    if (basis_id < n_) return basis_id;
    const long pos = row_pos_[basis_id - n_];
    return pos < 0 ? static_cast<std::size_t>(-1) : n_ + static_cast<std::size_t>(pos);
}

Basis DenseSimplex::basis() const {
    Basis b;
    b.basic.reserve(head_.size());
    for (std::size_t c : head_) b.basic.push_back(c < n_ ? c : n_ + rows_[c - n_]);
    b.at_upper.resize(n_);
    for (std::size_t j = 0; j < n_; ++j) b.at_upper[j] = state_[j] == State::Upper ? 1 : 0;
    return b;
}

void DenseSimplex::add_row(std::size_t model_row, bool eliminate) {
    const Constraint& con = model_.constraint(model_row);
    const std::size_t k = rows_.size();
    rows_.push_back(model_row);
    row_pos_[model_row] = static_cast<long>(k);
    const std::size_t col = n_ + k;
    switch (con.sense) {
        case Sense::LessEqual: lo_.push_back(0.0); up_.push_back(kInf); break;
        case Sense::GreaterEqual: lo_.push_back(-kInf); up_.push_back(0.0); break;
        case Sense::Equal: lo_.push_back(0.0); up_.push_back(0.0); break;
    }
    cost_.push_back(0.0);
    x_.push_back(0.0);
    state_.push_back(State::Basic);
    if (!built_ || !eliminate) {
        built_ = false;
        return;
    }

    const std::size_t nc = cols();
    for (auto& row : tab_) row.push_back(0.0);
    std::vector<double> row(nc, 0.0);
    for (const Term& t : con.terms) row[t.var] = t.coef;
    row[col] = 1.0;
    double b = con.rhs;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t h = head_[i];
        const double c = row[h];
        if (c == 0.0) continue;
        const auto& ti = tab_[i];
        for (std::size_t j = 0; j < nc; ++j) {
            if (ti[j] != 0.0) row[j] -= c * ti[j];
        }
        b -= c * rhs_[i];
        row[h] = 0.0;
    }
    tab_.push_back(std::move(row));
    rhs_.push_back(b);
    head_.push_back(col);
    double activity = 0.0;
    for (const Term& t : con.terms) activity += t.coef * x_[t.var];
    x_[col] = con.rhs - activity;
}

void DenseSimplex::rebuild(const std::vector<std::size_t>& target_basic) {
    const std::size_t m = rows_.size();
    const std::size_t nc = cols();
    tab_.assign(m, std::vector<double>(nc, 0.0));
    rhs_.assign(m, 0.0);
    head_.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const Constraint& con = model_.constraint(rows_[k]);
        for (const Term& t : con.terms) tab_[k][t.var] = t.coef;
        tab_[k][n_ + k] = 1.0;
        rhs_[k] = con.rhs;
        head_[k] = n_ + k;
    }
    std::vector<char> in_target(nc, 0);
    for (std::size_t c : target_basic) {
        if (c < nc) in_target[c] = 1;
    }
    for (std::size_t c : target_basic) {
        if (c >= n_) continue;
        std::size_t best = m;
        double best_abs = kPivotTol;
        for (std::size_t r = 0; r < m; ++r) {
            if (head_[r] < n_ || in_target[head_[r]]) continue;
            const double a = std::abs(tab_[r][c]);
            if (a > best_abs) {
                best_abs = a;
                best = r;
            }
        }
        if (best < m) pivot(best, c, nullptr);
    }
    std::vector<char> basic(nc, 0);
    for (std::size_t c : head_) basic[c] = 1;
    for (std::size_t c = 0; c < nc; ++c) {
        if (basic[c]) {
            state_[c] = State::Basic;
        } else if (c >= n_) {
            state_[c] = std::isfinite(lo_[c]) ? State::Lower : State::Upper;
        } else if (state_[c] == State::Basic) {
            state_[c] = State::Lower;
        }
    }
    pivots_since_refactor_ = 0;
    built_ = true;
}

void DenseSimplex::reset_nonbasic_values() {
    for (std::size_t c = 0; c < cols(); ++c) {
        State& s = state_[c];
        if (s == State::Basic) continue;
        const bool lo_ok = std::isfinite(lo_[c]);
        const bool up_ok = std::isfinite(up_[c]);
        if (s == State::Upper && !up_ok) s = lo_ok ? State::Lower : State::Zero;
        if (s == State::Lower && !lo_ok) s = up_ok ? State::Upper : State::Zero;
        if (s == State::Zero && (lo_ok || up_ok)) s = lo_ok ? State::Lower : State::Upper;
        x_[c] = s == State::Lower ? lo_[c] : (s == State::Upper ? up_[c] : 0.0);
    }
}

void DenseSimplex::recompute_basic_values() {
    std::vector<std::size_t> nonzero;
    for (std::size_t c = 0; c < cols(); ++c) {
        if (state_[c] != State::Basic && x_[c] != 0.0) nonzero.push_back(c);
    }
    for (std::size_t i = 0; i < rows_.size(); ++i) {
        double v = rhs_[i];
        const auto& ti = tab_[i];
        for (std::size_t c : nonzero) v -= ti[c] * x_[c];
        x_[head_[i]] = v;
    }
}

void DenseSimplex::pivot(std::size_t r, std::size_t q, std::vector<double>* reduced) {
    auto& pr = tab_[r];
    const double inv = 1.0 / pr[q];
    std::vector<std::size_t> nz;
    nz.reserve(pr.size());
    for (std::size_t j = 0; j < pr.size(); ++j) {
        if (pr[j] != 0.0) {
            pr[j] *= inv;
            nz.push_back(j);
        }
    }
    pr[q] = 1.0;
    rhs_[r] *= inv;
    for (std::size_t i = 0; i < tab_.size(); ++i) {
        if (i == r) continue;
        auto& ti = tab_[i];
        const double f = ti[q];
        if (f == 0.0) continue;
        for (std::size_t j : nz) {
            double v = ti[j] - f * pr[j];
            ti[j] = std::abs(v) < kDropTol ? 0.0 : v;
        }
        ti[q] = 0.0;
        rhs_[i] -= f * rhs_[r];
    }
    if (reduced != nullptr) {
        auto& d = *reduced;
        const double f = d[q];
        if (f != 0.0) {
            for (std::size_t j : nz) d[j] -= f * pr[j];
        }
        d[q] = 0.0;
    }
    head_[r] = q;
    ++pivots_since_refactor_;
}

LpStatus DenseSimplex::iterate(std::size_t& iterations) {
    std::vector<double> d;
    std::vector<signed char> infeasible;
    bool phase2_ready = false;
    bool bland = false;
    std::size_t degenerate = 0;

    while (true) {
        if (iterations >= opt_.max_lp_iterations) return LpStatus::IterationLimit;
        if (pivots_since_refactor_ >= opt_.refactor_interval) {
            std::vector<std::size_t> current(head_);
            rebuild(current);
            recompute_basic_values();
            phase2_ready = false;
        }
        const std::size_t m = rows_.size();
        const std::size_t nc = cols();

        infeasible.assign(m, 0);
        bool any_infeasible = false;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t h = head_[i];
            if (x_[h] < lo_[h] - tol_of(lo_[h])) {
                infeasible[i] = -1;
                any_infeasible = true;
            } else if (x_[h] > up_[h] + tol_of(up_[h])) {
                infeasible[i] = 1;
                any_infeasible = true;
            }
        }
        const bool phase1 = any_infeasible;
        if (phase1) {
            // d_j = derivative of the total violation as x_j increases
            d.assign(nc, 0.0);
            for (std::size_t i = 0; i < m; ++i) {
                if (infeasible[i] == 0) continue;
                const double g = infeasible[i];
                const auto& ti = tab_[i];
                for (std::size_t j = 0; j < nc; ++j) {
                    if (ti[j] != 0.0) d[j] -= g * ti[j];
                }
            }
            phase2_ready = false;
        } else if (!phase2_ready) {
            d.assign(cost_.begin(), cost_.end());
            for (std::size_t i = 0; i < m; ++i) {
                const double cb = cost_[head_[i]];
                if (cb == 0.0) continue;
                const auto& ti = tab_[i];
                for (std::size_t j = 0; j < nc; ++j) {
                    if (ti[j] != 0.0) d[j] -= cb * ti[j];
                }
            }
            phase2_ready = true;
        }

        // Pricing.
        std::size_t q = nc;
        double dir = 0.0;
        double best = 0.0;
        for (std::size_t j = 0; j < nc; ++j) {
            const State s = state_[j];
            if (s == State::Basic || !(up_[j] > lo_[j])) continue;
            double score = 0.0;
            double jdir = 0.0;
            if ((s == State::Lower || s == State::Zero) && d[j] < -opt_.optimality_tol) {
                score = -d[j];
                jdir = 1.0;
            } else if ((s == State::Upper || s == State::Zero) && d[j] > opt_.optimality_tol) {
                score = d[j];
                jdir = -1.0;
            } else {
                continue;
            }
            if (bland) {
                q = j;
                dir = jdir;
                break;
            }
            if (score > best) {
                best = score;
                q = j;
                dir = jdir;
            }
        }
        if (q == nc) return phase1 ? LpStatus::Infeasible : LpStatus::Optimal;

        // Ratio test (Harris two-pass; plain minimum with lowest-index ties under Bland).
        const double range = up_[q] - lo_[q];
        auto exact_ratio = [&](std::size_t i, double alpha, bool& leaves_upper) -> double {
            const std::size_t h = head_[i];
            if (phase1 && infeasible[i] != 0) {
                if (infeasible[i] < 0 && alpha > 0.0) {
                    leaves_upper = false;
                    return (lo_[h] - x_[h]) / alpha;
                }
                if (infeasible[i] > 0 && alpha < 0.0) {
                    leaves_upper = true;
                    return (up_[h] - x_[h]) / alpha;
                }
                return kInf;
            }
            if (alpha > 0.0 && std::isfinite(up_[h])) {
                leaves_upper = true;
                return std::max(0.0, (up_[h] - x_[h]) / alpha);
            }
            if (alpha < 0.0 && std::isfinite(lo_[h])) {
                leaves_upper = false;
                return std::max(0.0, (lo_[h] - x_[h]) / alpha);
            }
            return kInf;
        };

        double t_max = kInf;
        if (!bland) {
            for (std::size_t i = 0; i < m; ++i) {
                const double alpha = -dir * tab_[i][q];
                if (std::abs(alpha) <= kPivotTol) continue;
                const std::size_t h = head_[i];
                double ratio = kInf;
                if (phase1 && infeasible[i] != 0) {
                    bool unused = false;
                    ratio = exact_ratio(i, alpha, unused);
                } else if (alpha > 0.0 && std::isfinite(up_[h])) {
                    ratio = (up_[h] + tol_of(up_[h]) - x_[h]) / alpha;
                } else if (alpha < 0.0 && std::isfinite(lo_[h])) {
                    ratio = (lo_[h] - tol_of(lo_[h]) - x_[h]) / alpha;
                }
                t_max = std::min(t_max, ratio);
            }
        }

        std::size_t leave = m;
        double step = kInf;
        bool leave_upper = false;
        double best_alpha = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double alpha = -dir * tab_[i][q];
            if (std::abs(alpha) <= kPivotTol) continue;
            bool upper_hit = false;
            const double ratio = exact_ratio(i, alpha, upper_hit);
            if (!std::isfinite(ratio)) continue;
            if (bland) {
                if (ratio < step - 1e-12 || (ratio <= step + 1e-12 && leave < m && head_[i] < head_[leave])) {
                    step = ratio;
                    leave = i;
                    leave_upper = upper_hit;
                }
            } else if (ratio <= t_max && std::abs(alpha) > best_alpha) {
                best_alpha = std::abs(alpha);
                step = ratio;
                leave = i;
                leave_upper = upper_hit;
            }
        }
        const double flip_limit = bland ? step : std::min(step, t_max);
        const bool flip = std::isfinite(range) && (leave == m || range <= flip_limit);
        if (!flip && leave == m) {
            // No row limits the step.
            return phase1 ? LpStatus::Infeasible : LpStatus::Unbounded;
        }
        if (flip) step = range;

        ++iterations;
        const double progress = step * std::abs(d[q]);
        if (progress <= 1e-12 * (1.0 + std::abs(d[q]))) {
            if (++degenerate >= opt_.stall_threshold) bland = true;
        } else {
            degenerate = 0;
            bland = false;
        }

        if (step > 0.0) {
            x_[q] += dir * step;
            for (std::size_t i = 0; i < m; ++i) {
                const double a = tab_[i][q];
                if (a != 0.0) x_[head_[i]] -= dir * a * step;
            }
        }
        if (flip) {
            state_[q] = dir > 0.0 ? State::Upper : State::Lower;
            x_[q] = dir > 0.0 ? up_[q] : lo_[q];
            continue;
        }
        const std::size_t h = head_[leave];
        x_[h] = leave_upper ? up_[h] : lo_[h];
        state_[h] = leave_upper ? State::Upper : State::Lower;
        state_[q] = State::Basic;
        pivot(leave, q, phase1 ? nullptr : &d);
    }
}

std::vector<std::size_t> DenseSimplex::violated_rows() const {
    std::vector<std::pair<double, std::size_t>> found;
    for (std::size_t r = 0; r < model_.num_constraints(); ++r) {
        if (row_pos_[r] >= 0) continue;
        const Constraint& con = model_.constraint(r);
        double a = 0.0;
        for (const Term& t : con.terms) a += t.coef * x_[t.var];
        double v = 0.0;
        switch (con.sense) {
            case Sense::LessEqual: v = a - con.rhs; break;
            case Sense::GreaterEqual: v = con.rhs - a; break;
            case Sense::Equal: v = std::abs(a - con.rhs); break;
        }
        if (v > tol_of(con.rhs)) found.emplace_back(v, r);
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    if (found.size() > opt_.lazy_rows_per_round) found.resize(opt_.lazy_rows_per_round);
    std::vector<std::size_t> out;
    out.reserve(found.size());
    for (const auto& f : found) out.push_back(f.second);
    return out;
}

LpResult DenseSimplex::solve(std::span<const double> lower, std::span<const double> upper, const Basis* warm) {
    LpResult result;
    for (std::size_t j = 0; j < n_; ++j) {
        lo_[j] = lower[j];
        up_[j] = upper[j];
        if (lo_[j] > up_[j]) {
            result.status = LpStatus::Infeasible;
            return result;
        }
    }

    if (warm != nullptr && !warm->empty()) {
        if (!built_ || warm->basic != basis().basic) {
            std::vector<std::size_t> target;
            target.reserve(warm->basic.size());
            for (std::size_t id : warm->basic) {
                const std::size_t c = column_of(id);
                if (c != static_cast<std::size_t>(-1)) target.push_back(c);
            }
            rebuild(target);
        }
        for (std::size_t j = 0; j < n_; ++j) {
            if (state_[j] != State::Basic) state_[j] = warm->at_upper[j] ? State::Upper : State::Lower;
        }
    } else if (!built_) {
        std::vector<std::size_t> current;
        for (std::size_t i = 0; i < head_.size(); ++i) current.push_back(head_[i]);
        rebuild(current);
    }
    reset_nonbasic_values();
    recompute_basic_values();

    while (true) {
        const LpStatus status = iterate(result.iterations);
        if (status == LpStatus::Unbounded && rows_.size() < model_.num_constraints()) {
            for (std::size_t r = 0; r < model_.num_constraints(); ++r) {
                if (row_pos_[r] < 0) add_row(r, true);
            }
            continue;
        }
        if (status != LpStatus::Optimal) {
            result.status = status;
            return result;
        }
        if (rows_.size() < model_.num_constraints()) {
            const auto violated = violated_rows();
            if (!violated.empty()) {
                for (std::size_t r : violated) add_row(r, true);
                continue;
            }
        }
        break;
    }
    result.status = LpStatus::Optimal;
    result.x.assign(x_.begin(), x_.begin() + static_cast<long>(n_));
    result.objective = model_.objective_value(result.x);
    return result;
}

}  // namespace jcc::mip::detail
