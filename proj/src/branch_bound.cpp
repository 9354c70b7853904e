#include "jcc/error.hpp"
#include "jcc/mip.hpp"
#include "simplex.hpp"

#include <cmath>
#include <memory>
#include <queue>

namespace jcc::mip {
namespace {

using detail::Basis;
using detail::DenseSimplex;
using detail::LpResult;
using detail::LpStatus;

SolveStatus to_solve_status(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return SolveStatus::Optimal;
        case LpStatus::Infeasible: return SolveStatus::Infeasible;
        case LpStatus::Unbounded: return SolveStatus::Unbounded;
        case LpStatus::IterationLimit: return SolveStatus::IterationLimit;
    }
    return SolveStatus::Infeasible;
}

struct Node {
    double bound;
    std::size_t seq;
    std::vector<std::pair<std::size_t, double>> fixes;
    std::shared_ptr<const Basis> basis;
};

struct NodeOrder {
    // Lowest bound first; among equal bounds the newest node, which keeps dives going.
    bool operator()(const Node& a, const Node& b) const {
        if (a.bound != b.bound) return a.bound > b.bound;
        return a.seq < b.seq;
    }
};

class BranchAndBound {
public:
    BranchAndBound(const MipModel& model, const SolverOptions& opt) : model_(model), opt_(opt), engine_(model, opt) {
        for (std::size_t j = 0; j < model.num_variables(); ++j) {
            lower_.push_back(model.variable(j).lower);
            upper_.push_back(model.variable(j).upper);
            if (model.variable(j).kind == VarKind::Binary) binaries_.push_back(j);
        }
    }

    MipSolution run() {
        MipSolution out;
        std::vector<double> lo = lower_, up = upper_;
        LpResult root = solve(lo, up, nullptr);
        ++nodes_;
        if (root.status != LpStatus::Optimal) {
            out.status = to_solve_status(root.status);
            return finish(out);
        }
        const std::size_t branch_var = most_fractional(root.x);
        if (branch_var == kNone) {
            offer(root.objective, root.x);
        } else {
            auto root_basis = std::make_shared<const Basis>(engine_.basis());
            dive(root.x);
            push_children(Node{root.objective, 0, {}, nullptr}, branch_var, root.objective, root_basis);
        }

        while (!open_.empty()) {
            Node node = open_.top();
            open_.pop();
            if (pruned(node.bound)) continue;
            if (nodes_ >= opt_.max_nodes) {
                out.status = SolveStatus::NodeLimit;
                return finish(out);
            }
            ++nodes_;
            lo = lower_;
            up = upper_;
            for (const auto& [var, value] : node.fixes) lo[var] = up[var] = value;
            LpResult r = solve(lo, up, node.basis.get());
            if (r.status == LpStatus::IterationLimit) {
                out.status = SolveStatus::IterationLimit;
                return finish(out);
            }
            if (r.status != LpStatus::Optimal || pruned(r.objective)) continue;
            const std::size_t j = most_fractional(r.x);
            if (j == kNone) {
                offer(r.objective, r.x);
                continue;
            }
            push_children(std::move(node), j, r.objective, std::make_shared<const Basis>(engine_.basis()));
        }
        out.status = has_incumbent_ ? SolveStatus::Optimal : SolveStatus::Infeasible;
        return finish(out);
    }

private:
    static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

    LpResult solve(const std::vector<double>& lo, const std::vector<double>& up, const Basis* warm) {
        LpResult r = engine_.solve(lo, up, warm);
        lp_iterations_ += r.iterations;
        return r;
    }

    double gap_tol() const {
        return std::min(opt_.absolute_gap, opt_.relative_gap * std::max(1.0, std::abs(incumbent_value_)));
    }

    bool pruned(double bound) const { return has_incumbent_ && bound >= incumbent_value_ - gap_tol(); }

    std::size_t most_fractional(const std::vector<double>& x) const {
        std::size_t best = kNone;
        double best_frac = opt_.integrality_tol;
        for (std::size_t j : binaries_) {
            const double f = x[j] - std::floor(x[j]);
            const double dist = std::min(f, 1.0 - f);
            if (dist > best_frac) {
                best_frac = dist;
                best = j;
            }
        }
        return best;
    }

    void offer(double value, const std::vector<double>& x) {
        if (has_incumbent_ && value >= incumbent_value_) return;
        has_incumbent_ = true;
        incumbent_value_ = value;
        incumbent_ = x;
        if (opt_.on_incumbent) opt_.on_incumbent(value, incumbent_);
    }

    void push_children(Node parent, std::size_t var, double bound, std::shared_ptr<const Basis> basis) {
        for (double value : {0.0, 1.0}) {
            Node child{bound, ++seq_, parent.fixes, basis};
            child.fixes.emplace_back(var, value);
            open_.push(std::move(child));
        }
    }

    // Fix the largest fractional binary to one (falling back to zero) until the LP is integral.
    void dive(std::vector<double> x) {
        std::vector<double> lo = lower_, up = upper_;
        for (std::size_t step = 0; step <= binaries_.size(); ++step) {
            std::size_t pick = kNone;
            double best = -1.0;
            for (std::size_t j : binaries_) {
                const double f = x[j] - std::floor(x[j]);
                if (std::min(f, 1.0 - f) <= opt_.integrality_tol) continue;
                if (x[j] > best) {
                    best = x[j];
                    pick = j;
                }
            }
            if (pick == kNone) {
                offer(model_.objective_value(x), x);
                return;
            }
            lo[pick] = up[pick] = 1.0;
            LpResult r = solve(lo, up, nullptr);
            if (r.status != LpStatus::Optimal) {
                lo[pick] = up[pick] = 0.0;
                r = solve(lo, up, nullptr);
                if (r.status != LpStatus::Optimal) return;
            }
            if (pruned(r.objective)) return;
            x = std::move(r.x);
        }
    }

    // Re-solve the incumbent's continuous part with its binaries fixed to exact 0/1.
    MipSolution finish(MipSolution out) {
        out.nodes = nodes_;
        if (has_incumbent_) {
            std::vector<double> lo = lower_, up = upper_;
            for (std::size_t j : binaries_) lo[j] = up[j] = std::round(incumbent_[j]);
            // Binaries within the integrality tolerance of 0 or 1 can still leak through big-M rows
            // (M * 1e-7 is not small), so the returned point is always the one with exact binaries.
            LpResult polished = solve(lo, up, nullptr);
            if (polished.status == LpStatus::Optimal) incumbent_ = std::move(polished.x);
            for (std::size_t j : binaries_) incumbent_[j] = lo[j];
            out.values = incumbent_;
            out.objective = model_.objective_value(out.values);
            if (out.status == SolveStatus::Infeasible) out.status = SolveStatus::Optimal;
        }
        out.lp_iterations = lp_iterations_;
        return out;
    }

    const MipModel& model_;
    const SolverOptions& opt_;
    DenseSimplex engine_;
    std::vector<double> lower_, upper_;
    std::vector<std::size_t> binaries_;
    std::priority_queue<Node, std::vector<Node>, NodeOrder> open_;
    std::size_t seq_ = 0;
    std::size_t nodes_ = 0;
    std::size_t lp_iterations_ = 0;
    bool has_incumbent_ = false;
    double incumbent_value_ = kInf;
    std::vector<double> incumbent_;
};

}  // namespace

MipSolution solve_lp(const MipModel& model, const SolverOptions& options) {
    model.validate();
    DenseSimplex engine(model, options);
    std::vector<double> lo, up;
    for (const auto& v : model.variables()) {
        lo.push_back(v.lower);
        up.push_back(v.upper);
    }
    LpResult r = engine.solve(lo, up, nullptr);
    MipSolution out;
    out.status = to_solve_status(r.status);
    out.lp_iterations = r.iterations;
    out.nodes = 1;
    if (r.status == LpStatus::Optimal) {
        out.values = std::move(r.x);
        out.objective = r.objective;
    }
    return out;
}

MipSolution solve_milp(const MipModel& model, const SolverOptions& options) {
    model.validate();
    if (model.num_binaries() == 0) return solve_lp(model, options);
    BranchAndBound bb(model, options);
    return bb.run();
}

}  // namespace jcc::mip
