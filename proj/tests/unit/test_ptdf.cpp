#include "jcc/error.hpp"
#include "jcc/ptdf.hpp"
#include "jcc/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace jcc;

namespace {

netcase::Network two_bus() {
    netcase::Network net;
    net.buses = {{1, netcase::BusKind::Ref, 0.0}, {2, netcase::BusKind::PQ, 50.0}};
    net.ref_bus = 1;
    netcase::Branch br;
    br.from_bus = 1;
    br.to_bus = 2;
    br.reactance_pu = 0.1;
    br.flow_limit = 30.0;
    net.branches = {br};
    netcase::Generator g;
    g.bus = 2;
    g.p_max = 100.0;
    g.cost = {0.0, 10.0, 0.0};
    net.generators = {g};
    return net;
}

std::vector<double> balanced_injection(rng::Philox& r, std::size_t n) {
    std::vector<double> inj(n);
    double sum = 0.0;
    for (auto& v : inj) {
        v = r.uniform(-100.0, 100.0);
        sum += v;
    }
    for (auto& v : inj) v -= sum / static_cast<double>(n);
    return inj;
}

}  // namespace

TEST_CASE("two-bus PTDF") {
    const auto p = ptdf::build_ptdf(two_bus());
    REQUIRE(p.rows() == 1);
    CHECK(p(0, 1) == doctest::Approx(-1.0));
    CHECK(p(0, 0) == 0.0);
}

TEST_CASE("three-bus triangle, 1 MW injected at bus 2") {
    const auto net = netcase::load_case(test::data_path("case3.m"));
    const auto p = ptdf::build_ptdf(net);
    const std::vector<double> inj{0.0, 1.0, 0.0};
    const auto f = ptdf::flows(p, inj);
    CHECK(f[0] == doctest::Approx(-2.0 / 3.0).epsilon(1e-12));
    CHECK(f[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(f[2] == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
    const auto oracle = test::angle_flows(net, {-1.0, 1.0, 0.0});
    for (std::size_t l = 0; l < 3; ++l) CHECK(f[l] == doctest::Approx(oracle[l]).epsilon(1e-12));
}

TEST_CASE("slack column is zero and unit injections give the columns") {
    for (const char* name : {"case3.m", "case14_desk.m", "case118.m"}) {
        const auto net = netcase::load_case(test::data_path(name));
        const auto p = ptdf::build_ptdf(net);
        CHECK(p.entries().col(static_cast<Eigen::Index>(p.slack_column())).cwiseAbs().maxCoeff() == 0.0);
        std::vector<double> zero(net.buses.size(), 0.0);
        for (double f : ptdf::flows(p, zero)) CHECK(f == 0.0);
        std::vector<double> unit(net.buses.size(), 0.0);
        unit[net.buses.size() / 2] = 1.0;
        const auto f = ptdf::flows(p, unit);
        for (std::size_t r = 0; r < p.rows(); ++r) CHECK(f[r] == p(r, net.buses.size() / 2));
    }
}

TEST_CASE("PTDF flows equal angle-formulation flows on random balanced injections") {
    const auto net = netcase::load_case(test::data_path("case14_desk.m"));
    const auto p = ptdf::build_ptdf(net);
    rng::Philox r(3, rng::stream_id(rng::Purpose::Test, 200));
    for (int k = 0; k < 50; ++k) {
        const auto inj = balanced_injection(r, net.buses.size());
        const auto f = ptdf::flows(p, inj);
        const auto oracle = test::angle_flows(net, inj);
        for (std::size_t row = 0; row < p.rows(); ++row) {
            CHECK(std::abs(f[row] - oracle[p.branch_of_row()[row]]) <= 1e-8);
        }
    }
}

TEST_CASE("flows are linear and antisymmetric") {
    const auto net = netcase::load_case(test::data_path("case14_desk.m"));
    const auto p = ptdf::build_ptdf(net);
    rng::Philox r(4, rng::stream_id(rng::Purpose::Test, 201));
    const auto a = balanced_injection(r, net.buses.size());
    const auto b = balanced_injection(r, net.buses.size());
    std::vector<double> mix(a.size()), neg(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        mix[i] = 2.0 * a[i] - 3.0 * b[i];
        neg[i] = -a[i];
    }
    const auto fa = ptdf::flows(p, a), fb = ptdf::flows(p, b), fm = ptdf::flows(p, mix), fn = ptdf::flows(p, neg);
    for (std::size_t l = 0; l < fa.size(); ++l) {
        CHECK(fm[l] == doctest::Approx(2.0 * fa[l] - 3.0 * fb[l]).epsilon(1e-10));
        CHECK(fn[l] == doctest::Approx(-fa[l]).epsilon(1e-12));
    }
}

TEST_CASE("balanced flows do not depend on the slack bus") {
    const auto net = netcase::load_case(test::data_path("case14_desk.m"));
    const auto p1 = ptdf::build_ptdf(net);
    const auto p7 = ptdf::build_ptdf(net, net.buses[6].id);
    CHECK(p7.slack_bus() == net.buses[6].id);
    rng::Philox r(5, rng::stream_id(rng::Purpose::Test, 202));
    for (int k = 0; k < 20; ++k) {
        const auto inj = balanced_injection(r, net.buses.size());
        const auto f1 = ptdf::flows(p1, inj), f7 = ptdf::flows(p7, inj);
        for (std::size_t l = 0; l < f1.size(); ++l) CHECK(std::abs(f1[l] - f7[l]) <= 1e-9);
    }
}

TEST_CASE("out-of-service branches get no row") {
    auto net = netcase::load_case(test::data_path("case3.m"));
    net.branches[1].in_service = false;
    const auto p = ptdf::build_ptdf(net);
    CHECK(p.rows() == 2);
    CHECK(p.row_of_branch(1) == ptdf::PtdfMatrix::npos);
    CHECK(p.row_of_branch(2) == 1);
    // With 2-3 open, everything from bus 2 returns through 1-2.
    CHECK(ptdf::flows(p, std::vector<double>{0.0, 1.0, 0.0})[0] == doctest::Approx(-1.0));
}

TEST_CASE("dimension mismatch and singular networks are data errors") {
    const auto net = netcase::load_case(test::data_path("case3.m"));
    const auto p = ptdf::build_ptdf(net);
    CHECK_THROWS_AS(ptdf::flows(p, std::vector<double>{1.0, 2.0}), DataError);
    auto split = net;
    split.branches[0].in_service = false;
    split.branches[1].in_service = false;
    CHECK_THROWS_AS(ptdf::build_ptdf(split), DataError);
}
