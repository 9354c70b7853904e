#include "jcc/error.hpp"
#include "jcc/pipeline.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

using namespace jcc;
namespace fs = std::filesystem;

namespace {

pipeline::ExperimentConfig three_bus(std::size_t runs) {
    pipeline::ExperimentConfig cfg = pipeline::parse_config(R"({
      "case": "case3.m", "seed": 5,
      "uncertainty": {"sigma_d_fraction": 0.05, "wind_buses": [3], "mu_w": [30], "sigma_w": [10],
                      "perturbation": {"mu": [0.3, 1.7], "sigma": [0.8, 1.2]}},
      "dataset": {"scenarios": 20, "mc_size": 200}
    })", JCC_DATA_DIR);
    cfg.n_runs = runs;
    return cfg;
}

std::vector<int> labels(std::size_t pos, std::size_t neg) {
    std::vector<int> y(pos, 1);
    y.insert(y.end(), neg, -1);
    return y;
}

}  // namespace

TEST_CASE("rebalance oversamples the minority class") {
    rng::Philox r(1, rng::stream_id(rng::Purpose::Rebalance, 0));
    const auto y = labels(90, 10);
    const auto idx = pipeline::rebalance_indices(y, r);
    REQUIRE(idx.size() == 180);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (i < 100) CHECK(idx[i] == i);
        else CHECK(y[idx[i]] == -1);
        pos += y[idx[i]] == 1;
    }
    CHECK(pos == 90);

    const auto balanced = labels(10, 10);
    CHECK(pipeline::rebalance_indices(balanced, r).size() == 20);

    const auto half = pipeline::rebalance_indices(y, r, 0.5);
    CHECK(half.size() == 100 + 35);
    CHECK_THROWS_AS(pipeline::rebalance_indices(labels(5, 0), r), DataError);
}

TEST_CASE("stratified split") {
    rng::Philox r(2, rng::stream_id(rng::Purpose::Split, 0));
    const auto y = labels(37, 63);
    const auto [train, test] = pipeline::split(y, 0.75, r);
    CHECK(train.size() == 75);
    CHECK(test.size() == 25);
    std::vector<int> seen(100, 0);
    for (auto i : train) ++seen[i];
    for (auto i : test) ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    double train_pos = 0, test_pos = 0;
    for (auto i : train) train_pos += y[i] == 1;
    for (auto i : test) test_pos += y[i] == 1;
    CHECK(std::abs(train_pos - 0.37 * 75) <= 1.0);
    CHECK(std::abs(test_pos - 0.37 * 25) <= 1.0);
    CHECK_THROWS_AS(pipeline::split(labels(1, 20), 0.75, r), DataError);
    CHECK_THROWS_AS(pipeline::split(y, 1.0, r), DataError);
}

TEST_CASE("three-bus dataset labels match an independent recount") {
    const auto ctx = pipeline::make_context(three_bus(20));
    const auto ds = pipeline::generate_dataset(ctx);
    CHECK(ds.records.size() + 2 * ds.failed_runs == 40);
    REQUIRE(ds.data.size() == ds.records.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& rec = ds.records[i];
        const auto mc = pipeline::run_validation_set(ctx, rec);
        const auto v = test::recount_violations(ctx.net, ctx.ptdf, rec.solution.p, rec.solution.beta, mc);
        CHECK(rec.violations == v);
        CHECK(rec.label == (v == 0 ? 1 : -1));
        CHECK(ds.data.y[i] == rec.label);
        CHECK(ds.data.x(static_cast<Eigen::Index>(i), 0) == rec.solution.p[0]);
        // The stored record reproduces its own solve.
        if (i < 4) {
            auto cfg = ctx.saa;
            cfg.alpha = rec.alpha;
            const auto again = opf::solve_saa(ctx.net, ctx.ptdf, pipeline::run_scenarios(ctx, rec), cfg);
            CHECK(again.p == rec.solution.p);
        }
        pos += rec.label == 1;
    }
    CHECK(pos > 0);
    CHECK(pos < ds.records.size());
}

TEST_CASE("dataset edge cases") {
    const auto empty = pipeline::generate_dataset(pipeline::make_context(three_bus(0)));
    CHECK(empty.data.size() == 0);

    auto net = netcase::load_case(test::data_path("case3.m"));
    for (auto& br : net.branches) br.flow_limit = std::numeric_limits<double>::infinity();
    const fs::path path = fs::temp_directory_path() / "jcc_unlimited_case3.m";
    {
        std::ofstream f(path);
        f << netcase::render_case(net);
    }
    auto cfg = three_bus(5);
    cfg.case_path = path.string();
    const auto ds = pipeline::generate_dataset(pipeline::make_context(cfg));
    REQUIRE(ds.data.size() == 10);
    for (int y : ds.data.y) CHECK(y == 1);
    fs::remove(path);
}

TEST_CASE("dataset and pipeline do not depend on the job count") {
    auto cfg = pipeline::load_config(test::data_path("configs/small14.json"));
    cfg.n_runs = 24;
    const auto one = pipeline::run_pipeline(pipeline::make_context(cfg));
    cfg.jobs = 3;
    const auto three = pipeline::run_pipeline(pipeline::make_context(cfg));
    CHECK(pipeline::dataset_csv(one.dataset, netcase::load_case(cfg.case_path), false) ==
          pipeline::dataset_csv(three.dataset, netcase::load_case(cfg.case_path), false));
    CHECK(pipeline::report_csv(one.report) == pipeline::report_csv(three.report));
    CHECK(learn::to_json(one.ensemble) == learn::to_json(three.ensemble));
}

TEST_CASE("comparison rows respect the violation budget and hold out runs") {
    const auto cfg = pipeline::load_config(test::data_path("configs/small14.json"));
    const auto ctx = pipeline::make_context(cfg);
    const auto res = pipeline::run_pipeline(ctx);
    REQUIRE(res.report.rows.size() == cfg.test_samples);
    std::set<std::size_t> test_runs;
    for (auto r : res.partition.test_rows) test_runs.insert(res.dataset.records[r].run_id);
    for (const auto& row : res.report.rows) {
        REQUIRE(row.ok);
        CHECK(test_runs.count(row.run_id) == 1);
        CHECK(row.violations_surrogate <= row.budget);
        CHECK(row.relaxed_surrogate <= row.budget);
        CHECK(row.budget == 2);
        CHECK(row.delta == doctest::Approx(row.cost_surrogate - row.cost_saa));
        CHECK(row.delta_pct == doctest::Approx(100.0 * row.delta / row.cost_saa));
    }
    const auto held = pipeline::held_out_runs(res.dataset, res.partition, 1000);
    for (auto run : held) CHECK(test_runs.count(run) == 1);

    // Vacuous classifier: the surrogate is a relaxation of the SAA model.
    learn::Ensemble vac;
    learn::Hyperplane h;
    h.w.assign(ctx.net.generators.size(), 0.0);
    h.b = 1.0;
    vac.planes = {h};
    vac.weights = {1.0};
    vac.feature_order = pipeline::feature_names(ctx.net, false);
    const auto rep = pipeline::run_comparison(ctx, res.dataset, res.partition, vac);
    for (const auto& row : rep.rows) {
        REQUIRE(row.ok);
        CHECK(row.cost_surrogate <= row.cost_saa + 1e-6);
    }
}

TEST_CASE("ensemble-size sweep") {
    auto cfg = pipeline::load_config(test::data_path("configs/small14.json"));
    const auto ds = pipeline::generate_dataset(pipeline::make_context(cfg));
    const auto rows = pipeline::sweep_ensemble_size(ds.data, cfg, {1, 2, 4}, 3);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].m == 1);
    CHECK(rows[2].m == 4);
    const auto single = pipeline::sweep_ensemble_size(ds.data, cfg, {1}, 1);
    const auto part = pipeline::partition(ds.data, cfg, cfg.seed);
    const auto ens = learn::train_bagging(part.train, 1, cfg.svm, cfg.seed);
    CHECK(single[0].accuracy == doctest::Approx(learn::metrics(ens, part.test).accuracy));
    CHECK_THROWS_AS(pipeline::sweep_ensemble_size(ds.data, cfg, {}, 1), DataError);
}

TEST_CASE("dataset CSV round-trip") {
    const auto ctx = pipeline::make_context(three_bus(4));
    const auto ds = pipeline::generate_dataset(ctx);
    const auto back = pipeline::read_dataset_csv(pipeline::dataset_csv(ds, ctx.net, false));
    CHECK(back.y == ds.data.y);
    CHECK(back.feature_names == ds.data.feature_names);
    CHECK(back.x == ds.data.x);
    CHECK_THROWS_AS(pipeline::read_dataset_csv("a,b\n1,2\n"), ParseError);
}

TEST_CASE("config parsing") {
    const auto cfg = pipeline::load_config(test::data_path("configs/desk14.json"));
    CHECK(cfg.n_runs == 400);
    CHECK(cfg.alphas == std::vector<double>{0.0, 0.05});
    CHECK(fs::path(cfg.case_path).filename() == "case14_desk.m");
    CHECK(pipeline::parse_config(pipeline::to_json(cfg), "").seed == cfg.seed);
    CHECK(pipeline::config_hash(pipeline::parse_config(pipeline::to_json(cfg), "")) == pipeline::config_hash(cfg));
    auto other = cfg;
    other.seed += 1;
    CHECK(pipeline::config_hash(other) != pipeline::config_hash(cfg));
    auto jobs = cfg;
    jobs.jobs = 8;
    CHECK(pipeline::config_hash(jobs) == pipeline::config_hash(cfg));

    CHECK_THROWS_AS(pipeline::parse_config(R"({"case": "x.m", "bogus": 1})", ""), DataError);
    CHECK_THROWS_AS(pipeline::parse_config(R"({"seed": 1})", ""), DataError);
    CHECK_THROWS_AS(pipeline::parse_config("{not json", ""), DataError);
    CHECK_THROWS_AS(pipeline::load_config("/nonexistent/config.json"), DataError);
}
