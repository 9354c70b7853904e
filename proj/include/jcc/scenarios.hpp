#pragma once

#include "jcc/netcase.hpp"
#include "jcc/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace jcc::scenarios {

/// Which error sources make up the aggregate imbalance Omega that the AGC policy covers.
///  - LoadOnly: Omega = sum of demand deviations.
///  - Net: Omega = sum of demand deviations minus sum of wind deviations from the wind mean, so that
///    generation p + beta*Omega plus realized wind matches realized demand exactly when sum(beta) = 1.
enum class OmegaComposition { LoadOnly, Net };

struct UncertaintySpec {
    std::vector<double> sigma_d;  ///< per bus in network order, MW
    std::vector<int> wind_buses;  ///< bus ids hosting wind
    std::vector<double> mu_w;     ///< per wind bus, MW
    std::vector<double> sigma_w;  ///< per wind bus, MW
    std::uint64_t seed = 0;
    OmegaComposition omega_composition = OmegaComposition::Net;

    bool operator==(const UncertaintySpec&) const = default;
};

/// sigma_d = fraction * pd_mean on every bus, no wind.
UncertaintySpec load_only_spec(const netcase::Network& net, double sigma_fraction = 0.03, std::uint64_t seed = 0);

/// Throws DataError when the spec does not fit the network or has negative deviations.
void check_spec(const UncertaintySpec& spec, const netcase::Network& net);

struct Scenario {
    std::vector<double> d;  ///< demand per bus, MW
    std::vector<double> w;  ///< wind per bus, MW (zero off wind buses)
    double omega = 0.0;     ///< aggregate imbalance, MW

    bool operator==(const Scenario&) const = default;
};

struct ScenarioSet {
    std::vector<Scenario> scenarios;
    UncertaintySpec spec;
    double var_omega = 0.0;

    std::size_t size() const noexcept { return scenarios.size(); }
    bool operator==(const ScenarioSet&) const = default;
};

/// Mean wind per bus (zero off wind buses), MW.
std::vector<double> mean_wind(const UncertaintySpec& spec, const netcase::Network& net);

/// Omega recomputed from a scenario's demand and wind under the spec's composition.
double compose_omega(const UncertaintySpec& spec, const netcase::Network& net, const Scenario& s);

/// Draws n scenarios from substream `stream` of generator `spec.seed`.
/// Per scenario the draw order is: one normal per bus (bus order), then one per wind bus.
/// Wind is truncated at zero from below.
ScenarioSet sample(const UncertaintySpec& spec, const netcase::Network& net, std::size_t n, std::uint64_t stream);

struct PerturbationRange {
    double mu_lo = 0.8;
    double mu_hi = 1.2;
    double sigma_lo = 0.8;
    double sigma_hi = 1.2;
};

/// Copy of `spec` with each wind bus' mean and deviation scaled by independent uniform factors.
/// Draw order per wind bus: mean factor, then deviation factor.
UncertaintySpec perturb_wind_stats(const UncertaintySpec& spec, rng::Philox& rng, const PerturbationRange& range = {});

/// Variance of Omega implied by the spec (nominal, ignoring the truncation of wind at zero).
double var_omega(const UncertaintySpec& spec);

/// One row per scenario: `scenario,omega,d_<bus>...,w_<bus>...` (wind columns only for wind buses).
std::string to_csv(const ScenarioSet& set, const netcase::Network& net);
std::string to_json(const ScenarioSet& set);

const char* to_string(OmegaComposition c);
OmegaComposition omega_composition_from_string(const std::string& s);

}  // namespace jcc::scenarios
