#include "jcc/error.hpp"
#include "jcc/learn.hpp"
#include "jcc/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace jcc;
using learn::LabeledSet;

namespace {

LabeledSet make_set(const std::vector<std::vector<double>>& rows, const std::vector<int>& y) {
    LabeledSet s;
    s.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) s.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    s.y = y;
    return s;
}

std::vector<double> row_of(const LabeledSet& s, std::size_t i) {
    std::vector<double> v(s.dims());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = s.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    return v;
}

double accuracy(const learn::Hyperplane& h, const LabeledSet& s) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < s.size(); ++i) ok += h.predict(row_of(s, i)) == s.y[i];
    return static_cast<double>(ok) / static_cast<double>(s.size());
}

learn::Hyperplane plane(std::vector<double> w, double b) {
    learn::Hyperplane h;
    h.w = std::move(w);
    h.b = b;
    return h;
}

}  // namespace

TEST_CASE("symmetric two-point problem") {
    const auto s = make_set({{-1.0, 0.0}, {1.0, 0.0}}, {-1, 1});
    const auto h = learn::train_svm(s, {1e6, 1e-8, 1000});
    CHECK(h.w[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(std::abs(h.w[1]) <= 1e-3);
    CHECK(std::abs(h.b) <= 1e-3);
    CHECK(h.converged);
}

TEST_CASE("separable blobs are fitted exactly with large C") {
    rng::Philox r(1, rng::stream_id(rng::Purpose::Test, 400));
    for (int k = 0; k < 5; ++k) {
        LabeledSet s = test::blobs(r, 120, 2, 0.0, 0.0);
        // Push the classes apart along the first axis to guarantee a margin.
        for (std::size_t i = 0; i < s.size(); ++i) s.x(static_cast<Eigen::Index>(i), 0) = s.y[i] * (2.0 + std::abs(s.x(static_cast<Eigen::Index>(i), 0)));
        CHECK(accuracy(learn::train_svm(s, {1e4, 1e-6, 5000}), s) == 1.0);
    }
}

TEST_CASE("duality gap, dual feasibility and complementarity") {
    rng::Philox r(2, rng::stream_id(rng::Purpose::Test, 401));
    for (int k = 0; k < 12; ++k) {
        const std::size_t n = 20 + r.below(150), d = 1 + r.below(8);
        const auto s = test::blobs(r, n, d, r.uniform(0.5, 4.0), 0.1);
        learn::SvmOptions opt{r.uniform(0.1, 10.0), 1e-9, 100000};
        const auto fit = learn::train_svm_fit(s, opt);
        REQUIRE(fit.plane.converged);
        const auto [primal, dual] = test::svm_objectives(fit, s, opt.c);
        CHECK(primal - dual <= 1e-6 * (1.0 + std::abs(primal)));
        CHECK(primal - dual >= -1e-9 * (1.0 + std::abs(primal)));
        CHECK(fit.primal_objective == doctest::Approx(primal).epsilon(1e-9));
        CHECK(fit.dual_objective == doctest::Approx(dual).epsilon(1e-9));
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(fit.alpha[i] >= -opt.tol);
            CHECK(fit.alpha[i] <= opt.c + opt.tol);
            if (fit.alpha[i] > 1e-8 && fit.alpha[i] < opt.c - 1e-8) {
                CHECK(std::abs(s.y[i] * fit.plane.decision(row_of(s, i)) - 1.0) <= 10.0 * 1e-4);
            }
        }
    }
}

TEST_CASE("dual objective never decreases across epochs") {
    rng::Philox r(3, rng::stream_id(rng::Purpose::Test, 402));
    const auto s = test::blobs(r, 150, 4, 1.0, 0.15);
    const auto fit = learn::train_svm_fit(s, {1.0, 1e-6, 1000});
    REQUIRE(fit.dual_history.size() >= 1);
    for (std::size_t e = 1; e < fit.dual_history.size(); ++e) CHECK(fit.dual_history[e] >= fit.dual_history[e - 1] - 1e-12);
}

TEST_CASE("decision function") {
    const auto h = plane({1.0, 0.0}, -5.0);
    CHECK(h.decision(std::vector<double>{7.0, 3.0}) == doctest::Approx(2.0));
    CHECK(h.predict(std::vector<double>{7.0, 3.0}) == 1);
    CHECK(h.predict(std::vector<double>{5.0, -1.0}) == 1);  // on the plane
    CHECK(h.predict(std::vector<double>{4.0, 0.0}) == -1);
    CHECK_THROWS_AS(h.decision(std::vector<double>{1.0}), DataError);

    rng::Philox r(4, rng::stream_id(rng::Purpose::Test, 403));
    const auto g = plane({0.3, -1.7, 2.2}, 0.4);
    for (int k = 0; k < 20; ++k) {
        std::vector<double> a(3), b(3), m(3);
        for (std::size_t j = 0; j < 3; ++j) {
            a[j] = r.normal();
            b[j] = r.normal();
            m[j] = 0.25 * a[j] + 0.75 * b[j];
        }
        CHECK(g.decision(m) == doctest::Approx(0.25 * g.decision(a) + 0.75 * g.decision(b)));
    }
}

TEST_CASE("training input errors") {
    const auto one_class = make_set({{0.0}, {1.0}}, {1, 1});
    CHECK_THROWS_AS(learn::train_svm(one_class), DataError);
    const auto s = make_set({{0.0}, {1.0}}, {-1, 1});
    CHECK_THROWS_AS(learn::train_svm(s, {0.0, 1e-4, 10}), DataError);
    auto bad = s;
    bad.y[0] = 0;
    CHECK_THROWS_AS(bad.check(), DataError);
}

TEST_CASE("bootstrap") {
    rng::Philox r(5, rng::stream_id(rng::Purpose::Bootstrap, 0));
    CHECK(learn::bootstrap(1, r) == std::vector<std::size_t>{0});
    CHECK(learn::out_of_bag(learn::bootstrap(1, r), 1).empty());

    double unique_sum = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto b = learn::bootstrap(10000, r);
        REQUIRE(b.size() == 10000);
        const std::set<std::size_t> u(b.begin(), b.end());
        unique_sum += static_cast<double>(u.size()) / 10000.0;
        if (k == 0) CHECK(learn::out_of_bag(b, 10000).size() == 10000 - u.size());
    }
    CHECK(unique_sum / 100.0 >= 0.612);
    CHECK(unique_sum / 100.0 <= 0.652);
}

TEST_CASE("ensemble votes") {
    learn::Ensemble e;
    e.planes = {plane({1.0}, 0.0), plane({1.0}, 0.0), plane({1.0}, 0.0)};
    e.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    e.feature_order = {"x"};
    // Scores at x = 0.1: +0.1, +0.1 and -10 for the third plane below.
    e.planes[2] = plane({-100.0}, 0.0);
    const std::vector<double> x{0.1};
    CHECK(e.predict(x, learn::VoteMode::VoteSign) == 1);
    CHECK(e.predict(x, learn::VoteMode::MeanAffine) == -1);

    learn::Ensemble agree = e;
    agree.planes[2] = plane({2.0}, 0.0);
    CHECK(agree.predict(x, learn::VoteMode::VoteSign) == 1);
    CHECK(agree.predict(x, learn::VoteMode::MeanAffine) == 1);

    // Positive rescaling of one plane never changes the sign vote but can change the mean.
    learn::Ensemble scaled = e;
    scaled.planes[0] = plane({1000.0}, 0.0);
    scaled.planes[1] = plane({1000.0}, 0.0);
    rng::Philox r(6, rng::stream_id(rng::Purpose::Test, 404));
    for (int k = 0; k < 50; ++k) {
        const std::vector<double> p{r.uniform(-1.0, 1.0)};
        CHECK(scaled.predict(p, learn::VoteMode::VoteSign) == e.predict(p, learn::VoteMode::VoteSign));
    }
    CHECK(scaled.predict(x, learn::VoteMode::MeanAffine) != e.predict(x, learn::VoteMode::MeanAffine));

    learn::Ensemble tie;
    tie.planes = {plane({1.0}, 0.0), plane({-1.0}, 0.0)};
    tie.weights = {0.5, 0.5};
    tie.feature_order = {"x"};
    CHECK(tie.predict(std::vector<double>{0.5}) == 1);
    CHECK_THROWS_AS(tie.predict(std::vector<double>{0.5, 1.0}), DataError);
}

TEST_CASE("metrics") {
    const auto s = make_set({{-2.0}, {-1.0}, {1.0}, {2.0}}, {-1, -1, 1, 1});
    learn::Ensemble perfect;
    perfect.planes = {plane({1.0}, 0.0)};
    perfect.weights = {1.0};
    perfect.feature_order = {"x"};
    const auto mp = learn::metrics(perfect, s);
    CHECK(mp.accuracy == 1.0);
    CHECK(mp.false_negatives == 0);

    learn::Ensemble always = perfect;
    always.planes = {plane({0.0}, 1.0)};
    const auto ma = learn::metrics(always, s);
    CHECK(ma.accuracy == 0.5);
    CHECK(ma.false_negatives == 2);
    CHECK(ma.false_positives == 0);
    CHECK(ma.true_positives + ma.true_negatives + ma.false_positives + ma.false_negatives == ma.n);
    CHECK(ma.accuracy == static_cast<double>(ma.true_positives + ma.true_negatives) / static_cast<double>(ma.n));
}

TEST_CASE("bagging is deterministic, nested and reduces error") {
    rng::Philox r(7, rng::stream_id(rng::Purpose::Test, 405));
    const auto train = test::blobs(r, 200, 3, 1.0, 0.1);
    const auto a = learn::train_bagging(train, 8, {}, 99);
    const auto b = learn::train_bagging(train, 8, {}, 99);
    const auto c = learn::train_bagging(train, 3, {}, 99);
    REQUIRE(a.planes.size() == 8);
    for (std::size_t m = 0; m < 8; ++m) CHECK(a.planes[m].w == b.planes[m].w);
    for (std::size_t m = 0; m < 3; ++m) CHECK(a.planes[m].w == c.planes[m].w);
    double wsum = 0.0;
    for (double w : a.weights) wsum += w;
    CHECK(wsum == doctest::Approx(1.0));

    const auto single = learn::train_bagging(train, 1, {}, 99);
    const auto plane0 = learn::train_svm(train.subset([&] {
        rng::Philox bs(99, rng::stream_id(rng::Purpose::Bootstrap, 0));
        return learn::bootstrap(train.size(), bs);
    }()));
    CHECK(single.planes[0].w == plane0.w);

    const auto round = learn::ensemble_from_json(learn::to_json(a));
    CHECK(round.feature_order == a.feature_order);
    CHECK(round.planes.size() == 8);
    CHECK(round.planes[5].w == a.planes[5].w);
    CHECK(round.planes[5].b == a.planes[5].b);

    double err1 = 0.0, err8 = 0.0;
    const int seeds = 20;
    for (int k = 0; k < seeds; ++k) {
        rng::Philox dr(100 + k, rng::stream_id(rng::Purpose::Test, 406));
        const auto tr = test::blobs(dr, 60, 5, 1.2, 0.2);
        const auto te = test::blobs(dr, 400, 5, 1.2, 0.2);
        const auto ens = learn::train_bagging(tr, 8, {}, static_cast<std::uint64_t>(k));
        auto first = ens;
        first.planes.resize(1);
        first.weights = {1.0};
        err1 += 1.0 - learn::metrics(first, te).accuracy;
        err8 += 1.0 - learn::metrics(ens, te).accuracy;
    }
    CHECK(err8 <= err1);
}
