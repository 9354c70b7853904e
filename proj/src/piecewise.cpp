#include "jcc/error.hpp"
#include "jcc/mip.hpp"

#include <algorithm>
#include <cmath>

namespace jcc::mip {

bool PiecewiseCurve::is_convex(double tol) const {
    if (breakpoints.size() != values.size() || breakpoints.size() < 2) return false;
    for (std::size_t k = 1; k < breakpoints.size(); ++k) {
        if (!(breakpoints[k] > breakpoints[k - 1])) return false;
    }
    for (std::size_t k = 1; k + 1 < breakpoints.size(); ++k) {
        const double left = (values[k] - values[k - 1]) / (breakpoints[k] - breakpoints[k - 1]);
        const double right = (values[k + 1] - values[k]) / (breakpoints[k + 1] - breakpoints[k]);
        if (right < left - tol * (1.0 + std::abs(left))) return false;
    }
    return true;
}

double PiecewiseCurve::operator()(double x) const {
    const std::size_t n = breakpoints.size();
    std::size_t k = 0;
    if (x >= breakpoints[n - 1]) {
        k = n - 2;
    } else if (x > breakpoints[0]) {
        k = static_cast<std::size_t>(std::upper_bound(breakpoints.begin(), breakpoints.end(), x) - breakpoints.begin()) - 1;
    }
    const double slope = (values[k + 1] - values[k]) / (breakpoints[k + 1] - breakpoints[k]);
    return values[k] + slope * (x - breakpoints[k]);
}

PiecewiseCurve linearize(const netcase::CostCurve& cost, double p_lo, double p_hi, int segments) {
    if (cost.c2 < 0.0) throw DataError("cannot linearize a concave cost (c2 < 0)");
    if (!(p_lo < p_hi)) throw DataError("linearization interval must satisfy p_lo < p_hi");
    if (segments < 1) throw DataError("linearization needs at least one segment");
    const int n = cost.c2 == 0.0 ? 1 : segments;
    PiecewiseCurve curve;
    curve.breakpoints.reserve(static_cast<std::size_t>(n) + 1);
    curve.values.reserve(static_cast<std::size_t>(n) + 1);
    const double width = (p_hi - p_lo) / n;
    for (int k = 0; k <= n; ++k) {
        const double p = (k == n) ? p_hi : p_lo + width * k;
        curve.breakpoints.push_back(p);
        curve.values.push_back(cost(p));
    }
    return curve;
}

std::size_t add_piecewise_objective(MipModel& model, std::size_t var, const PiecewiseCurve& curve,
                                    const std::string& name) {
    if (!curve.is_convex()) throw DataError("piecewise objective requires a convex curve");
    const std::string base = name.empty() ? "epi_" + model.variable(var).name : name;
    // The max of the chords never drops below the smallest breakpoint value, so that bound is redundant
    // for the full model but keeps partial row sets bounded.
    const double floor = *std::min_element(curve.values.begin(), curve.values.end());
    const std::size_t t = model.add_variable(base, floor, kInf, VarKind::Continuous, 1.0);
    for (std::size_t k = 0; k + 1 < curve.breakpoints.size(); ++k) {
        const double x0 = curve.breakpoints[k];
        const double x1 = curve.breakpoints[k + 1];
        const double slope = (curve.values[k + 1] - curve.values[k]) / (x1 - x0);
        // t - slope*x >= v0 - slope*x0
        model.add_constraint(base + "_seg" + std::to_string(k), {{t, 1.0}, {var, -slope}}, Sense::GreaterEqual,
                             curve.values[k] - slope * x0);
    }
    return t;
}

}  // namespace jcc::mip
