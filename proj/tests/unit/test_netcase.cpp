#include "jcc/error.hpp"
#include "jcc/netcase.hpp"
#include "jcc/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace jcc;
using netcase::ViolationCode;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Counts the data rows of one matrix block by scanning text lines, independent of the parser.
std::size_t count_block_rows(const std::string& text, const std::string& block) {
    std::istringstream in(text);
    std::string line;
    bool inside = false;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        const auto pct = line.find('%');
        if (pct != std::string::npos) line = line.substr(0, pct);
        if (!inside) {
            if (line.find("mpc." + block + " = [") != std::string::npos) inside = true;
            continue;
        }
        if (line.find("];") != std::string::npos) break;
        if (line.find(';') != std::string::npos) ++rows;
    }
    return rows;
}

bool has_code(const std::vector<netcase::Violation>& v, ViolationCode c) {
    for (const auto& x : v) {
        if (x.code == c) return true;
    }
    return false;
}

netcase::Network random_network(rng::Philox& r, std::size_t n) {
    netcase::Network net;
    net.base_mva = 100.0;
    for (std::size_t i = 0; i < n; ++i) {
        netcase::Bus b;
        b.id = static_cast<int>(10 * (i + 1));
        b.kind = i == 0 ? netcase::BusKind::Ref : netcase::BusKind::PQ;
        b.pd_mean = std::round(r.uniform(0.0, 100.0) * 8.0) / 8.0;
        net.buses.push_back(b);
    }
    net.ref_bus = net.buses[0].id;
    for (std::size_t i = 1; i < n; ++i) {
        netcase::Branch br;
        br.from_bus = net.buses[r.below(i)].id;
        br.to_bus = net.buses[i].id;
        br.reactance_pu = 0.01 + r.uniform() * 0.3;
        if (r.uniform() < 0.5) br.flow_limit = 50.0 + r.uniform() * 100.0;
        net.branches.push_back(br);
    }
    for (std::size_t g = 0; g < 1 + r.below(3); ++g) {
        netcase::Generator gen;
        gen.bus = net.buses[r.below(n)].id;
        gen.p_min = r.uniform(0.0, 20.0);
        gen.p_max = gen.p_min + r.uniform(1.0, 300.0);
        gen.cost = {r.uniform(0.0, 0.1), r.uniform(5.0, 40.0), r.uniform(0.0, 10.0)};
        net.generators.push_back(gen);
    }
    return net;
}

}  // namespace

TEST_CASE("three-bus fixture parses with the expected shape") {
    const auto net = netcase::load_case(test::data_path("case3.m"));
    CHECK(net.buses.size() == 3);
    CHECK(net.branches.size() == 3);
    CHECK(net.generators.size() == 2);
    CHECK(net.ref_bus == 1);
    CHECK(net.total_demand() == doctest::Approx(150.0));
    CHECK(net.branches[2].flow_limit == doctest::Approx(80.0));
    CHECK(std::isinf(net.branches[0].flow_limit));
    CHECK(net.generators[1].p_min == doctest::Approx(10.0));
    CHECK(net.generators[0].cost.c2 == doctest::Approx(0.02));
    CHECK(netcase::validate(net).empty());
}

TEST_CASE("118-bus case counts match a line count of the file") {
    const std::string path = test::data_path("case118.m");
    const std::string text = slurp(path);
    const auto net = netcase::parse_case(text);
    CHECK(net.buses.size() == count_block_rows(text, "bus"));
    CHECK(net.branches.size() == count_block_rows(text, "branch"));
    CHECK(net.generators.size() == count_block_rows(text, "gen"));
    CHECK(net.buses.size() == 118);
    CHECK(net.branches.size() == 186);
}

TEST_CASE("a case without branches is rejected as disconnected") {
    const std::string text = R"(
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
  1 3 10 0 0 0 1 1 0 135 1 1.05 0.95;
];
mpc.gen = [
  1 0 0 0 0 1 100 1 50 0;
];
mpc.branch = [
];
mpc.gencost = [
  2 0 0 3 0.01 10 0;
];
)";
    try {
        netcase::parse_case(text);
        FAIL("expected a DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("disconnected graph") != std::string::npos);
    }
}

TEST_CASE("syntax errors carry the line number") {
    const std::string text = "mpc.version = '2';\nmpc.baseMVA = 100;\nmpc.bus = [\n  1 3 abc 0 0 0 1 1 0 135 1 1.05 0.95;\n];\n";
    try {
        netcase::parse_case(text);
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 4);
    }
}

TEST_CASE("missing reference bus and dangling branch are reported") {
    auto net = netcase::load_case(test::data_path("case3.m"));
    auto no_ref = net;
    no_ref.buses[0].kind = netcase::BusKind::PV;
    CHECK(has_code(netcase::validate(no_ref), ViolationCode::MissingRef));

    auto dangling = net;
    dangling.branches[1].to_bus = 99;
    const auto v = netcase::validate(dangling);
    REQUIRE(has_code(v, ViolationCode::DanglingBranch));
    CHECK(v.front().index == 1);
}

TEST_CASE("validate reports single invariant breaches") {
    const auto net = netcase::load_case(test::data_path("case3.m"));
    CHECK(netcase::validate(net).empty());

    auto two_refs = net;
    two_refs.buses[2].kind = netcase::BusKind::Ref;
    const auto v1 = netcase::validate(two_refs);
    REQUIRE(v1.size() == 1);
    CHECK(v1[0].code == ViolationCode::DuplicateRef);

    auto bad_gen = net;
    bad_gen.generators[1].p_min = 200.0;
    const auto v2 = netcase::validate(bad_gen);
    REQUIRE(v2.size() == 1);
    CHECK(v2[0].code == ViolationCode::GenBounds);
    CHECK(v2[0].index == 1);

    auto neg_cost = net;
    neg_cost.generators[0].cost.c2 = -1.0;
    CHECK(has_code(netcase::validate(neg_cost), ViolationCode::NegativeQuadraticCost));
}

TEST_CASE("render and parse round-trip") {
    const auto net3 = netcase::load_case(test::data_path("case3.m"));
    CHECK(netcase::parse_case(netcase::render_case(net3)) == net3);
    const auto net118 = netcase::load_case(test::data_path("case118.m"));
    CHECK(netcase::parse_case(netcase::render_case(net118)) == net118);

    rng::Philox r(7, rng::stream_id(rng::Purpose::Test, 100));
    for (int k = 0; k < 30; ++k) {
        const auto net = random_network(r, 2 + r.below(12));
        REQUIRE(netcase::validate(net).empty());
        CHECK(netcase::parse_case(netcase::render_case(net)) == net);
    }
}

TEST_CASE("unreadable case file is a data error") {
    CHECK_THROWS_AS(netcase::load_case("/nonexistent/case.m"), DataError);
}
