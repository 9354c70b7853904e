#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace jcc::netcase {

enum class BusKind { PQ = 1, PV = 2, Ref = 3 };

struct Bus {
    int id = 0;
    BusKind kind = BusKind::PQ;
    double pd_mean = 0.0;  ///< nominal demand, MW

    bool operator==(const Bus&) const = default;
};

struct Branch {
    int from_bus = 0;
    int to_bus = 0;
    double reactance_pu = 0.0;
    /// Thermal limit in MW. A zero rating in the case file means unlimited and is stored as +inf.
    double flow_limit = std::numeric_limits<double>::infinity();
    bool in_service = true;

    bool operator==(const Branch&) const = default;
};

/// Quadratic generation cost c2*p^2 + c1*p + c0 in $/h with p in MW.
struct CostCurve {
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;

    double operator()(double p) const noexcept { return (c2 * p + c1) * p + c0; }
    bool operator==(const CostCurve&) const = default;
};

struct Generator {
    int bus = 0;
    double p_min = 0.0;
    double p_max = 0.0;
    CostCurve cost;

    bool operator==(const Generator&) const = default;
};

/// The physical system. Plain data: build it, validate it, then share it as const.
struct Network {
    double base_mva = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Generator> generators;
    int ref_bus = 0;

    bool operator==(const Network&) const = default;

    /// Map from bus id to position in `buses`. Assumes ids are unique.
    std::unordered_map<int, std::size_t> bus_index() const;
    double total_demand() const;
    std::size_t bus_position(int id) const;  ///< throws DataError if absent
};

enum class ViolationCode {
    NonPositiveBase,
    DuplicateBusId,
    MissingRef,
    DuplicateRef,
    RefMismatch,
    DanglingBranch,
    SelfLoop,
    NonPositiveReactance,
    NonPositiveLimit,
    GenBusMissing,
    GenBounds,
    NegativeQuadraticCost,
    NoGenerators,
    Disconnected,
};

std::string_view to_string(ViolationCode code);

struct Violation {
    ViolationCode code;
    std::size_t index = 0;  ///< offending bus/branch/generator position; 0 for network-wide codes
    std::string detail;
};

/// Every invariant breach in `net`. Empty means valid. Never throws.
std::vector<Violation> validate(const Network& net);

/// Parses the matrix-block case format (`mpc.bus = [ ... ];` etc., version 2 columns).
/// Throws ParseError for syntax problems and DataError when the result fails validation.
Network parse_case(std::string_view text);
Network load_case(const std::string& path);

/// Writes `net` in the same matrix-block format; parse_case(render_case(net)) == net.
std::string render_case(const Network& net, std::string_view name = "jcc_case");

/// Canonical JSON dump (two-space indent, infinite limits as null).
std::string to_json(const Network& net);

}  // namespace jcc::netcase
