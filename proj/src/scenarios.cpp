#include "jcc/scenarios.hpp"

#include "jcc/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include <json.hpp>

namespace jcc::scenarios {

UncertaintySpec load_only_spec(const netcase::Network& net, double sigma_fraction, std::uint64_t seed) {
    UncertaintySpec spec;
    spec.sigma_d.reserve(net.buses.size());
    for (const auto& b : net.buses) spec.sigma_d.push_back(sigma_fraction * std::abs(b.pd_mean));
    spec.seed = seed;
    return spec;
}

void check_spec(const UncertaintySpec& spec, const netcase::Network& net) {
    if (spec.sigma_d.size() != net.buses.size()) {
        throw DataError("sigma_d has " + std::to_string(spec.sigma_d.size()) + " entries for " +
                        std::to_string(net.buses.size()) + " buses");
    }
    if (std::any_of(spec.sigma_d.begin(), spec.sigma_d.end(), [](double s) { return !(s >= 0.0); })) {
        throw DataError("sigma_d must be non-negative");
    }
    const std::size_t nw = spec.wind_buses.size();
    if (spec.mu_w.size() != nw || spec.sigma_w.size() != nw) {
        throw DataError("mu_w and sigma_w must have one entry per wind bus");
    }
    const auto index = net.bus_index();
    for (std::size_t k = 0; k < nw; ++k) {
        if (!index.contains(spec.wind_buses[k])) {
            throw DataError("wind bus " + std::to_string(spec.wind_buses[k]) + " not in network");
        }
        if (!(spec.sigma_w[k] >= 0.0) || !(spec.mu_w[k] >= 0.0)) {
            throw DataError("wind mean and deviation must be non-negative");
        }
    }
}

std::vector<double> mean_wind(const UncertaintySpec& spec, const netcase::Network& net) {
    std::vector<double> w(net.buses.size(), 0.0);
    for (std::size_t k = 0; k < spec.wind_buses.size(); ++k) {
        w[net.bus_position(spec.wind_buses[k])] += spec.mu_w[k];
    }
    return w;
}

double compose_omega(const UncertaintySpec& spec, const netcase::Network& net, const Scenario& s) {
    double omega = 0.0;
    for (std::size_t n = 0; n < net.buses.size(); ++n) omega += s.d[n] - net.buses[n].pd_mean;
    if (spec.omega_composition == OmegaComposition::Net) {
        const auto mu = mean_wind(spec, net);
        for (std::size_t n = 0; n < net.buses.size(); ++n) omega -= s.w[n] - mu[n];
    }
    return omega;
}

ScenarioSet sample(const UncertaintySpec& spec, const netcase::Network& net, std::size_t n, std::uint64_t stream) {
    check_spec(spec, net);
    if (n == 0) throw DataError("scenario count must be at least 1");
    rng::Philox gen(spec.seed, stream);
    const std::size_t nb = net.buses.size();
    std::vector<std::size_t> wind_pos;
    for (int id : spec.wind_buses) wind_pos.push_back(net.bus_position(id));
    const auto mu = mean_wind(spec, net);

    ScenarioSet set;
    set.spec = spec;
    set.var_omega = var_omega(spec);
    set.scenarios.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        Scenario sc;
        sc.d.resize(nb);
        sc.w.assign(nb, 0.0);
        for (std::size_t b = 0; b < nb; ++b) sc.d[b] = net.buses[b].pd_mean + spec.sigma_d[b] * gen.normal();
        for (std::size_t k = 0; k < wind_pos.size(); ++k) {
            sc.w[wind_pos[k]] += std::max(0.0, spec.mu_w[k] + spec.sigma_w[k] * gen.normal());
        }
        double omega = 0.0;
        for (std::size_t b = 0; b < nb; ++b) omega += sc.d[b] - net.buses[b].pd_mean;
        if (spec.omega_composition == OmegaComposition::Net) {
            for (std::size_t b = 0; b < nb; ++b) omega -= sc.w[b] - mu[b];
        }
        sc.omega = omega;
        set.scenarios.push_back(std::move(sc));
    }
    return set;
}

UncertaintySpec perturb_wind_stats(const UncertaintySpec& spec, rng::Philox& rng, const PerturbationRange& range) {
    UncertaintySpec out = spec;
    for (std::size_t k = 0; k < out.wind_buses.size(); ++k) {
        const double f_mu = rng.uniform(range.mu_lo, range.mu_hi);
        const double f_sigma = rng.uniform(range.sigma_lo, range.sigma_hi);
        out.mu_w[k] = std::max(0.0, out.mu_w[k] * f_mu);
        out.sigma_w[k] = std::max(0.0, out.sigma_w[k] * f_sigma);
    }
    return out;
}

double var_omega(const UncertaintySpec& spec) {
    double v = 0.0;
    for (double s : spec.sigma_d) v += s * s;
    if (spec.omega_composition == OmegaComposition::Net) {
        for (double s : spec.sigma_w) v += s * s;
    }
    return v;
}

namespace {
using detail::num;
}  // namespace

std::string to_csv(const ScenarioSet& set, const netcase::Network& net) {
    std::ostringstream os;
    os << "scenario,omega";
    for (const auto& b : net.buses) os << ",d_" << b.id;
    for (int id : set.spec.wind_buses) os << ",w_" << id;
    os << '\n';
    std::vector<std::size_t> wind_pos;
    for (int id : set.spec.wind_buses) wind_pos.push_back(net.bus_position(id));
    for (std::size_t s = 0; s < set.size(); ++s) {
        const auto& sc = set.scenarios[s];
        os << s << ',' << num(sc.omega);
        for (double d : sc.d) os << ',' << num(d);
        for (std::size_t p : wind_pos) os << ',' << num(sc.w[p]);
        os << '\n';
    }
    return os.str();
}

std::string to_json(const ScenarioSet& set) {
    nlohmann::ordered_json j;
    j["var_omega"] = set.var_omega;
    j["seed"] = set.spec.seed;
    j["omega_composition"] = to_string(set.spec.omega_composition);
    j["scenarios"] = nlohmann::ordered_json::array();
    for (const auto& sc : set.scenarios) {
        j["scenarios"].push_back({{"omega", sc.omega}, {"d", sc.d}, {"w", sc.w}});
    }
    return j.dump(2) + "\n";
}

const char* to_string(OmegaComposition c) { return c == OmegaComposition::Net ? "net" : "load_only"; }

OmegaComposition omega_composition_from_string(const std::string& s) {
    if (s == "net") return OmegaComposition::Net;
    if (s == "load_only") return OmegaComposition::LoadOnly;
    throw DataError("unknown omega_composition '" + s + "' (expected net or load_only)");
}

}  // namespace jcc::scenarios
