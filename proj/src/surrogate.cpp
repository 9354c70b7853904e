#include "jcc/error.hpp"
#include "jcc/learn.hpp"
#include "jcc/opf.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace jcc::opf {

using mip::Sense;
using mip::Term;

const char* to_string(SurrogateMode mode) {
    return mode == SurrogateMode::MeanAffine ? "mean_affine" : "conjunctive";
}

SurrogateMode surrogate_mode_from_string(const std::string& s) {
    if (s == "mean_affine") return SurrogateMode::MeanAffine;
    if (s == "conjunctive") return SurrogateMode::Conjunctive;
    throw DataError("unknown surrogate mode '" + s + "' (expected mean_affine or conjunctive)");
}

namespace {

struct Feature {
    bool is_beta;
    std::size_t gen;
};

// Feature names are p_<k> or beta_<k> with k the 1-based generator position.
std::vector<Feature> parse_features(const learn::Ensemble& ens, const netcase::Network& net) {
    std::vector<Feature> out;
    for (const auto& name : ens.feature_order) {
        Feature f{};
        std::string_view rest;
        if (name.rfind("p_", 0) == 0) {
            f.is_beta = false;
            rest = std::string_view(name).substr(2);
        } else if (name.rfind("beta_", 0) == 0) {
            f.is_beta = true;
            rest = std::string_view(name).substr(5);
        } else {
            throw DataError("unknown ensemble feature '" + name + "'");
        }
        std::size_t k = 0;
        auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), k);
        if (ec != std::errc{} || ptr != rest.data() + rest.size() || k == 0 || k > net.generators.size()) {
            throw DataError("ensemble feature '" + name + "' does not name a generator of this network");
        }
        f.gen = k - 1;
        out.push_back(f);
    }
    for (const auto& plane : ens.planes) {
        if (plane.w.size() != out.size()) throw DataError("ensemble plane dimension does not match its feature list");
    }
    return out;
}

// For fixed (p, beta) every classifier row is affine in Omega_s, so the accepted scenarios form an
// Omega interval and some optimal z relaxes only a run of the lowest and a run of the highest
// omegas. Restricting z to that shape keeps the optimum and leaves budget + 1 patterns.
void add_omega_order(OpfModel& m, const scenarios::ScenarioSet& scen) {
    const std::size_t n = scen.size();
    const std::size_t k = m.budget;
    if (k == 0 || 2 * k >= n) return;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return scen.scenarios[a].omega < scen.scenarios[b].omega;
    });
    auto chain = [&](std::size_t outer, std::size_t inner) {
        m.model.add_constraint("order_" + std::to_string(outer + 1) + "_" + std::to_string(inner + 1),
                               {{m.z_var[outer], 1.0}, {m.z_var[inner], -1.0}}, Sense::GreaterEqual, 0.0);
    };
    for (std::size_t j = 0; j + 1 < k; ++j) chain(order[j], order[j + 1]);
    for (std::size_t j = n - 1; j > n - k; --j) chain(order[j], order[j - 1]);
    for (std::size_t j = k; j < n - k; ++j) m.model.set_bounds(m.z_var[order[j]], 0.0, 0.0);
}

}  // namespace

double compute_big_m_svm(const learn::Ensemble& ens, const netcase::Network& net) {
    const auto features = parse_features(ens, net);
    double worst = 0.0;
    for (const auto& plane : ens.planes) {
        double s = std::abs(plane.b);
        for (std::size_t f = 0; f < features.size(); ++f) {
            const double bound = features[f].is_beta ? 1.0 : net.generators[features[f].gen].p_max;
            s += std::abs(plane.w[f]) * bound;
        }
        worst = std::max(worst, s);
    }
    return worst + 1.0;
}

OpfModel build_surrogate(const netcase::Network& net, const scenarios::ScenarioSet& scen, const learn::Ensemble& ens,
                         const SaaConfig& cfg, SurrogateMode mode, double big_m_svm_scale, bool order_by_omega) {
    if (scen.size() == 0) throw DataError("surrogate model needs at least one scenario");
    if (ens.planes.empty()) throw DataError("ensemble has no planes");
    const auto features = parse_features(ens, net);

    // The SAA assembly with an empty PTDF has no line rows.
    SaaConfig core_cfg = cfg;
    core_cfg.monitored_lines.clear();
    const ptdf::PtdfMatrix no_ptdf(Eigen::MatrixXd::Zero(0, static_cast<Eigen::Index>(net.buses.size())), {}, 0,
                                   net.ref_bus);
    OpfModel m = build_saa(net, no_ptdf, scen, core_cfg);
    m.monitored.clear();
    m.big_m.clear();
    m.big_m_svm = compute_big_m_svm(ens, net) * big_m_svm_scale;

    auto plane_terms = [&](const learn::Hyperplane& plane, double omega, double weight, std::vector<Term>& terms) {
        for (std::size_t f = 0; f < features.size(); ++f) {
            const double w = weight * plane.w[f];
            const std::size_t g = features[f].gen;
            if (features[f].is_beta) {
                terms.push_back({m.beta_var[g], w});
            } else {
                terms.push_back({m.p_var[g], w});
                terms.push_back({m.beta_var[g], w * omega});
            }
        }
    };

    for (std::size_t s = 0; s < scen.size(); ++s) {
        const double omega = scen.scenarios[s].omega;
        const std::string sid = std::to_string(s + 1);
        if (mode == SurrogateMode::Conjunctive) {
            for (std::size_t k = 0; k < ens.planes.size(); ++k) {
                std::vector<Term> terms;
                plane_terms(ens.planes[k], omega, 1.0, terms);
                terms.push_back({m.z_var[s], m.big_m_svm});
                m.model.add_constraint("svm_" + std::to_string(k + 1) + "_" + sid, std::move(terms), Sense::GreaterEqual,
                                       -ens.planes[k].b);
                ++m.surrogate_rows;
            }
        } else {
            std::vector<Term> terms;
            double bias = 0.0;
            for (std::size_t k = 0; k < ens.planes.size(); ++k) {
                plane_terms(ens.planes[k], omega, ens.weights[k], terms);
                bias += ens.weights[k] * ens.planes[k].b;
            }
            terms.push_back({m.z_var[s], m.big_m_svm});
            m.model.add_constraint("svm_mean_" + sid, std::move(terms), Sense::GreaterEqual, -bias);
            ++m.surrogate_rows;
        }
    }
    if (order_by_omega) add_omega_order(m, scen);
    return m;
}

}  // namespace jcc::opf
