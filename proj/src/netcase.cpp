#include "jcc/netcase.hpp"

#include "jcc/error.hpp"
#include "text.hpp"

#include <charconv>
#include <cmath>
#include <queue>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

namespace jcc::netcase {

std::unordered_map<int, std::size_t> Network::bus_index() const {
    std::unordered_map<int, std::size_t> index;
    index.reserve(buses.size());
    for (std::size_t i = 0; i < buses.size(); ++i) index.emplace(buses[i].id, i);
    return index;
}

double Network::total_demand() const {
    double total = 0.0;
    for (const auto& b : buses) total += b.pd_mean;
    return total;
}

std::size_t Network::bus_position(int id) const {
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id == id) return i;
    }
    throw DataError("unknown bus id " + std::to_string(id));
}

std::string_view to_string(ViolationCode code) {
    switch (code) {
        case ViolationCode::NonPositiveBase: return "NonPositiveBase";
        case ViolationCode::DuplicateBusId: return "DuplicateBusId";
        case ViolationCode::MissingRef: return "MissingRef";
        case ViolationCode::DuplicateRef: return "DuplicateRef";
        case ViolationCode::RefMismatch: return "RefMismatch";
        case ViolationCode::DanglingBranch: return "DanglingBranch";
        case ViolationCode::SelfLoop: return "SelfLoop";
        case ViolationCode::NonPositiveReactance: return "NonPositiveReactance";
        case ViolationCode::NonPositiveLimit: return "NonPositiveLimit";
        case ViolationCode::GenBusMissing: return "GenBusMissing";
        case ViolationCode::GenBounds: return "GenBounds";
        case ViolationCode::NegativeQuadraticCost: return "NegativeQuadraticCost";
        case ViolationCode::NoGenerators: return "NoGenerators";
        case ViolationCode::Disconnected: return "Disconnected";
    }
    return "Unknown";
}

std::vector<Violation> validate(const Network& net) {
    std::vector<Violation> out;
    auto report = [&out](ViolationCode code, std::size_t index, std::string detail) {
        out.push_back({code, index, std::move(detail)});
    };

    if (!(net.base_mva > 0.0)) report(ViolationCode::NonPositiveBase, 0, "base MVA must be positive");

    std::unordered_map<int, std::size_t> index;
    std::vector<std::size_t> refs;
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        const Bus& b = net.buses[i];
        if (!index.emplace(b.id, i).second) {
            report(ViolationCode::DuplicateBusId, i, "bus id " + std::to_string(b.id) + " repeated");
        }
        if (b.kind == BusKind::Ref) refs.push_back(i);
    }
    if (refs.empty()) {
        report(ViolationCode::MissingRef, 0, "no reference bus");
    } else if (refs.size() > 1) {
        report(ViolationCode::DuplicateRef, refs[1], std::to_string(refs.size()) + " reference buses");
    } else if (net.buses[refs.front()].id != net.ref_bus) {
        report(ViolationCode::RefMismatch, refs.front(),
               "ref_bus " + std::to_string(net.ref_bus) + " is not the REF bus");
    }

    std::size_t live = 0;
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        const Branch& br = net.branches[l];
        if (!index.contains(br.from_bus) || !index.contains(br.to_bus)) {
            report(ViolationCode::DanglingBranch, l,
                   "branch " + std::to_string(br.from_bus) + "-" + std::to_string(br.to_bus) + " has a missing endpoint");
        }
        if (br.from_bus == br.to_bus) report(ViolationCode::SelfLoop, l, "branch connects bus to itself");
        if (br.in_service && !(br.reactance_pu > 0.0)) {
            report(ViolationCode::NonPositiveReactance, l, "in-service branch needs positive reactance");
        }
        if (!(br.flow_limit > 0.0)) report(ViolationCode::NonPositiveLimit, l, "flow limit must be positive");
        if (br.in_service) ++live;
    }

    if (net.generators.empty()) report(ViolationCode::NoGenerators, 0, "network has no generators");
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const Generator& gen = net.generators[g];
        if (!index.contains(gen.bus)) {
            report(ViolationCode::GenBusMissing, g, "generator bus " + std::to_string(gen.bus) + " not found");
        }
        if (!(gen.p_min >= 0.0 && gen.p_min <= gen.p_max)) {
            report(ViolationCode::GenBounds, g, "generator " + std::to_string(g) + " needs 0 <= p_min <= p_max");
        }
        if (!(gen.cost.c2 >= 0.0)) report(ViolationCode::NegativeQuadraticCost, g, "c2 must be non-negative");
    }

    // Connectivity over in-service branches. A network with no live branch is disconnected by definition.
    if (!net.buses.empty()) {
        std::vector<std::vector<std::size_t>> adj(net.buses.size());
        for (const Branch& br : net.branches) {
            if (!br.in_service) continue;
            auto f = index.find(br.from_bus);
            auto t = index.find(br.to_bus);
            if (f == index.end() || t == index.end()) continue;
            adj[f->second].push_back(t->second);
            adj[t->second].push_back(f->second);
        }
        std::vector<char> seen(net.buses.size(), 0);
        std::queue<std::size_t> frontier;
        frontier.push(0);
        seen[0] = 1;
        std::size_t reached = 1;
        while (!frontier.empty()) {
            std::size_t u = frontier.front();
            frontier.pop();
            for (std::size_t v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    ++reached;
                    frontier.push(v);
                }
            }
        }
        if (live == 0 || reached != net.buses.size()) {
            report(ViolationCode::Disconnected, 0,
                   "disconnected graph: " + std::to_string(reached) + " of " + std::to_string(net.buses.size()) +
                       " buses reachable");
        }
    }
    return out;
}

namespace {

using detail::num;

}  // namespace

std::string render_case(const Network& net, std::string_view name) {
    std::ostringstream os;
    os << "function mpc = " << name << "\n";
    os << "mpc.version = '2';\n";
    os << "mpc.baseMVA = " << num(net.base_mva) << ";\n\n";

    os << "%% bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n";
    os << "mpc.bus = [\n";
    for (const Bus& b : net.buses) {
        os << '\t' << b.id << '\t' << static_cast<int>(b.kind) << '\t' << num(b.pd_mean)
           << "\t0\t0\t0\t1\t1\t0\t0\t1\t1.06\t0.94;\n";
    }
    os << "];\n\n";

    os << "%% generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin\n";
    os << "mpc.gen = [\n";
    for (const Generator& g : net.generators) {
        os << '\t' << g.bus << "\t0\t0\t0\t0\t1\t" << num(net.base_mva) << "\t1\t" << num(g.p_max) << '\t'
           << num(g.p_min) << ";\n";
    }
    os << "];\n\n";

    os << "%% branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n";
    os << "mpc.branch = [\n";
    for (const Branch& br : net.branches) {
        double rate = std::isinf(br.flow_limit) ? 0.0 : br.flow_limit;
        os << '\t' << br.from_bus << '\t' << br.to_bus << "\t0\t" << num(br.reactance_pu) << "\t0\t" << num(rate)
           << "\t0\t0\t0\t0\t" << (br.in_service ? 1 : 0) << "\t-360\t360;\n";
    }
    os << "];\n\n";

    os << "%% generator cost data\n%\t2\tstartup\tshutdown\tn\tc(n-1)\t...\tc0\n";
    os << "mpc.gencost = [\n";
    for (const Generator& g : net.generators) {
        os << "\t2\t0\t0\t3\t" << num(g.cost.c2) << '\t' << num(g.cost.c1) << '\t' << num(g.cost.c0) << ";\n";
    }
    os << "];\n";
    return os.str();
}

std::string to_json(const Network& net) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["base_mva"] = net.base_mva;
    j["ref_bus"] = net.ref_bus;
    j["buses"] = ordered_json::array();
    for (const Bus& b : net.buses) {
        const char* kind = b.kind == BusKind::Ref ? "REF" : (b.kind == BusKind::PV ? "PV" : "PQ");
        j["buses"].push_back({{"id", b.id}, {"kind", kind}, {"pd_mean", b.pd_mean}});
    }
    j["branches"] = ordered_json::array();
    for (const Branch& br : net.branches) {
        ordered_json limit = std::isinf(br.flow_limit) ? ordered_json(nullptr) : ordered_json(br.flow_limit);
        j["branches"].push_back({{"from_bus", br.from_bus},
                                 {"to_bus", br.to_bus},
                                 {"reactance_pu", br.reactance_pu},
                                 {"flow_limit", limit},
                                 {"in_service", br.in_service}});
    }
    j["generators"] = ordered_json::array();
    for (const Generator& g : net.generators) {
        j["generators"].push_back({{"bus", g.bus},
                                   {"p_min", g.p_min},
                                   {"p_max", g.p_max},
                                   {"cost", {{"c2", g.cost.c2}, {"c1", g.cost.c1}, {"c0", g.cost.c0}}}});
    }
    return j.dump(2) + "\n";
}

}  // namespace jcc::netcase
