// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.

#include "jcc/cli.hpp"
#include "jcc/learn.hpp"
#include "jcc/opf.hpp"
#include "jcc/pipeline.hpp"
#include "oracles.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace jcc;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double kPtdfTol = 1e-8;         // MW
constexpr double kPtdfSeconds = 1.0;
constexpr double kOracleTol = 1e-6;       // objective, absolute
constexpr double kOracleSeconds = 30.0;
constexpr double kBigMTol = 1e-6;         // objective, absolute
constexpr double kGapRel = 1e-6;          // duality gap relative to 1 + |primal|
constexpr double kSvmSolverTol = 1e-9;
constexpr double kTwoPointTol = 1e-3;
constexpr double kUniqueLo = 0.612;
constexpr double kUniqueHi = 0.652;
constexpr double kMeanAbsDeltaPct = 0.5;
constexpr std::size_t kBudgetCap = 5;
constexpr double kDeskSeconds = 30.0 * 60.0;
constexpr std::size_t kSweepSeeds = 50;

const std::string kDesk = "configs/desk14.json";

struct Outcome {
    bool pass;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

// The desk run is shared by several criteria.
const pipeline::PipelineResult& desk_run() {
    static const pipeline::PipelineResult res = [] {
        const auto ctx = pipeline::make_context(pipeline::load_config(test::data_path(kDesk)));
        return pipeline::run_pipeline(ctx);
    }();
    return res;
}

const pipeline::Context& desk_context() {
    static const pipeline::Context ctx = pipeline::make_context(pipeline::load_config(test::data_path(kDesk)));
    return ctx;
}

opf::SaaConfig desk_saa(double alpha) {
    opf::SaaConfig s = desk_context().saa;
    s.alpha = alpha;
    s.n_scenarios = desk_context().cfg.n_scenarios;
    return s;
}

Outcome ptdf_flows() {
    const auto t0 = std::chrono::steady_clock::now();
    rng::Philox r(1, rng::stream_id(rng::Purpose::Test, 9001));
    double worst = 0.0;
    for (const char* file : {"case3.m", "case14_desk.m"}) {
        const auto net = netcase::load_case(test::data_path(file));
        const auto pt = ptdf::build_ptdf(net);
        for (int k = 0; k < 100; ++k) {
            std::vector<double> inj(net.buses.size());
            double sum = 0.0;
            for (auto& v : inj) sum += v = r.uniform(-200.0, 200.0);
            inj[r.below(inj.size())] -= sum;
            const auto f = ptdf::flows(pt, inj);
            const auto ref = test::angle_flows(net, inj);
            for (std::size_t row = 0; row < f.size(); ++row) {
                worst = std::max(worst, std::abs(f[row] - ref[pt.branch_of_row()[row]]));
            }
        }
    }
    const double t = seconds_since(t0);
    return {worst <= kPtdfTol && t < kPtdfSeconds,
            "max error " + fmt("%.3g", worst) + " MW, " + fmt("%.3f", t) + " s"};
}

Outcome milp_oracle() {
    const auto net = netcase::load_case(test::data_path("case3.m"));
    const auto pt = ptdf::build_ptdf(net);
    rng::Philox r(2, rng::stream_id(rng::Purpose::Test, 9002));
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    std::size_t compared = 0;
    for (int k = 0; k < 25; ++k) {
        const std::size_t n = 4 + r.below(3);
        const double alpha = std::vector<double>{0.0, 1.0 / 6.0, 1.0 / 3.0}[static_cast<std::size_t>(k % 3)];
        const auto spec = scenarios::load_only_spec(net, r.uniform(0.05, 0.15), 100 + static_cast<std::uint64_t>(k));
        const auto set = scenarios::sample(spec, net, n, 200 + static_cast<std::uint64_t>(k));
        opf::SaaConfig cfg;
        cfg.alpha = alpha;
        cfg.n_scenarios = n;
        const auto m = opf::build_saa(net, pt, set, cfg);
        const auto sol = opf::solve(m, net, set.var_omega);
        const double oracle = test::z_pattern_oracle(m);
        if (!sol.optimal() || !std::isfinite(oracle)) return {false, "instance " + std::to_string(k) + " not solved"};
        worst = std::max(worst, std::abs(sol.cost - oracle));
        ++compared;
    }
    const double t = seconds_since(t0);
    return {worst <= kOracleTol && t < kOracleSeconds,
            std::to_string(compared) + " instances, max |B&B - oracle| " + fmt("%.3g", worst) + ", " + fmt("%.2f", t) + " s"};
}

Outcome violation_budget() {
    std::size_t checked = 0, bad = 0;
    // SAA solutions of the desk dataset, on their own scenarios.
    const auto& ctx = desk_context();
    const auto& res = desk_run();
    for (const auto& rec : res.dataset.records) {
        const auto set = pipeline::run_scenarios(ctx, rec);
        const std::size_t budget = opf::violation_budget(rec.alpha, set.size());
        bad += opf::expost_validate(ctx.net, ctx.ptdf, rec.solution, set).violations > budget;
        bad += rec.solution.relaxed_scenarios() > budget;
        ++checked;
    }
    // Surrogate solutions of the desk comparison.
    for (const auto& row : res.report.rows) {
        bad += !row.ok || row.violations_surrogate > row.budget || row.relaxed_surrogate > row.budget;
        ++checked;
    }
    // Small SAA instances on both fixtures.
    for (const char* file : {"case3.m", "case14_desk.m"}) {
        const auto net = netcase::load_case(test::data_path(file));
        const auto pt = ptdf::build_ptdf(net);
        const auto spec = scenarios::load_only_spec(net, 0.08, 3);
        for (double alpha : {0.0, 0.05, 0.1, 0.2}) {
            const auto set = scenarios::sample(spec, net, 40, 300);
            opf::SaaConfig cfg;
            cfg.alpha = alpha;
            cfg.n_scenarios = 40;
            const auto sol = opf::solve_saa(net, pt, set, cfg);
            bad += !sol.optimal() || opf::expost_validate(net, pt, sol, set).violations > sol.budget;
            ++checked;
        }
    }
    return {bad == 0, std::to_string(checked) + " solved instances, " + std::to_string(bad) + " over budget"};
}

Outcome big_m_doubling() {
    double worst = 0.0;
    std::size_t compared = 0;
    for (const char* file : {"case3.m", "case14_desk.m"}) {
        const auto net = netcase::load_case(test::data_path(file));
        const auto pt = ptdf::build_ptdf(net);
        const auto spec = scenarios::load_only_spec(net, 0.08, 4);
        for (std::uint64_t k = 0; k < 3; ++k) {
            const auto set = scenarios::sample(spec, net, 30, 400 + k);
            opf::SaaConfig cfg;
            cfg.alpha = 0.1;
            cfg.n_scenarios = 30;
            const auto a = opf::solve_saa(net, pt, set, cfg);
            cfg.big_m_scale = 2.0;
            const auto b = opf::solve_saa(net, pt, set, cfg);
            if (!a.optimal() || !b.optimal()) return {false, std::string(file) + " SAA not solved"};
            worst = std::max(worst, std::abs(a.cost - b.cost));
            ++compared;
        }
    }
    // Desk SAA and surrogate on held-out runs, with the trained ensemble.
    const auto& ctx = desk_context();
    const auto& res = desk_run();
    const auto saa = desk_saa(ctx.cfg.test_alpha);
    std::size_t used = 0;
    for (const auto& row : res.report.rows) {
        if (used++ == 3) break;
        const pipeline::RunRecord* rec = nullptr;
        for (const auto& r : res.dataset.records) {
            if (r.run_id == row.run_id) rec = &r;
        }
        const auto set = pipeline::run_scenarios(ctx, *rec);
        auto doubled = saa;
        doubled.big_m_scale = 2.0;
        const auto a = opf::solve_saa(ctx.net, ctx.ptdf, set, saa, ctx.cfg.solver);
        const auto b = opf::solve_saa(ctx.net, ctx.ptdf, set, doubled, ctx.cfg.solver);
        for (auto mode : {opf::SurrogateMode::Conjunctive, opf::SurrogateMode::MeanAffine}) {
            const auto sa = opf::solve(opf::build_surrogate(ctx.net, set, res.ensemble, saa, mode, 1.0), ctx.net,
                                       set.var_omega, ctx.cfg.solver);
            const auto sb = opf::solve(opf::build_surrogate(ctx.net, set, res.ensemble, saa, mode, 2.0), ctx.net,
                                       set.var_omega, ctx.cfg.solver);
            if (sa.optimal() != sb.optimal()) return {false, "surrogate status changed with M_svm"};
            if (sa.optimal()) {
                worst = std::max(worst, std::abs(sa.cost - sb.cost));
                ++compared;
            }
        }
        if (!a.optimal() || !b.optimal()) return {false, "desk SAA not solved"};
        worst = std::max(worst, std::abs(a.cost - b.cost));
        ++compared;
    }
    return {worst <= kBigMTol, std::to_string(compared) + " optima, max change " + fmt("%.3g", worst)};
}

Outcome svm_optimality() {
    rng::Philox r(5, rng::stream_id(rng::Purpose::Test, 9005));
    double worst_gap = 0.0;
    bool all_converged = true;
    for (int k = 0; k < 50; ++k) {
        const std::size_t n = 10 + r.below(191), d = 1 + r.below(10);
        const auto s = test::blobs(r, n, d, r.uniform(0.0, 4.0), r.uniform(0.0, 0.3));
        const learn::SvmOptions opt{r.uniform(0.05, 20.0), kSvmSolverTol, 200000};
        const auto fit = learn::train_svm_fit(s, opt);
        all_converged = all_converged && fit.plane.converged;
        const auto [primal, dual] = test::svm_objectives(fit, s, opt.c);
        worst_gap = std::max(worst_gap, (primal - dual) / (1.0 + std::abs(primal)));
    }
    std::size_t separable_ok = 0;
    for (int k = 0; k < 10; ++k) {
        auto s = test::blobs(r, 100, 3, 0.0, 0.0);
        for (std::size_t i = 0; i < s.size(); ++i) {
            auto& v = s.x(static_cast<Eigen::Index>(i), 0);
            v = s.y[i] * (1.5 + std::abs(v));
        }
        const auto h = learn::train_svm(s, {1e5, 1e-8, 50000});
        std::size_t right = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const Eigen::VectorXd row = s.x.row(static_cast<Eigen::Index>(i)).transpose();
            right += h.predict(std::span<const double>(row.data(), static_cast<std::size_t>(row.size()))) == s.y[i];
        }
        separable_ok += right == s.size();
    }
    learn::LabeledSet two;
    two.x.resize(2, 2);
    two.x << -1.0, 0.0, 1.0, 0.0;
    two.y = {-1, 1};
    const auto h = learn::train_svm(two, {1e6, 1e-8, 1000});
    const double two_err = std::max({std::abs(h.w[0] - 1.0), std::abs(h.w[1]), std::abs(h.b)});
    return {all_converged && worst_gap <= kGapRel && separable_ok == 10 && two_err <= kTwoPointTol,
            "max relative gap " + fmt("%.3g", worst_gap) + ", separable " + std::to_string(separable_ok) +
                "/10 at 100%, two-point error " + fmt("%.3g", two_err)};
}

Outcome bootstrap_fraction() {
    rng::Philox r(6, rng::stream_id(rng::Purpose::Bootstrap, 9006));
    constexpr std::size_t n = 10000;
    double total = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto draw = learn::bootstrap(n, r);
        std::vector<char> seen(n, 0);
        std::size_t unique = 0;
        for (auto i : draw) {
            unique += seen[i] == 0;
            seen[i] = 1;
        }
        total += static_cast<double>(unique) / static_cast<double>(n);
    }
    const double mean = total / 100.0;
    return {mean >= kUniqueLo && mean <= kUniqueHi, "mean unique fraction " + fmt("%.4f", mean)};
}

Outcome bagging_trend() {
    const auto& res = desk_run();
    const auto rows = pipeline::sweep_ensemble_size(res.dataset.data, desk_context().cfg, {1, 8}, kSweepSeeds);
    const auto& one = rows[0];
    const auto& eight = rows[1];
    return {eight.accuracy >= one.accuracy && eight.false_negatives <= one.false_negatives,
            std::to_string(kSweepSeeds) + " seeds: accuracy " + fmt("%.4f", one.accuracy) + " -> " +
                fmt("%.4f", eight.accuracy) + ", false negatives " + fmt("%.2f", one.false_negatives) + " -> " +
                fmt("%.2f", eight.false_negatives)};
}

Outcome desk_table() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto ctx = pipeline::make_context(pipeline::load_config(test::data_path(kDesk)));
    const auto res = pipeline::run_pipeline(ctx);
    const double t = seconds_since(t0);
    const auto& rep = res.report;
    bool ok = ctx.cfg.n_scenarios == 100 && ctx.cfg.test_alpha == 0.05 && rep.rows.size() == 15;
    std::size_t worst = 0;
    for (const auto& row : rep.rows) {
        ok = ok && row.ok && row.violations_surrogate <= kBudgetCap;
        worst = std::max(worst, row.violations_surrogate);
    }
    ok = ok && rep.mean_abs_delta_pct <= kMeanAbsDeltaPct && t < kDeskSeconds;
    return {ok, std::to_string(rep.rows.size()) + " samples, max in-sample violations " + std::to_string(worst) +
                    ", mean |dCost| " + fmt("%.4f", rep.mean_abs_delta_pct) + "%, " + fmt("%.1f", t) + " s"};
}

Outcome determinism() {
    const auto base = fs::temp_directory_path() / "jcc_acceptance_determinism";
    fs::remove_all(base);
    std::string reports[2];
    for (int k = 0; k < 2; ++k) {
        const auto dir = base / std::to_string(k);
        std::ostringstream out, err;
        const int code = cli::dispatch({"compare", "--config", test::data_path(kDesk), "--out", dir.string()}, out, err);
        if (code != cli::kOk) return {false, "compare exited with " + std::to_string(code) + ": " + err.str()};
        std::ifstream in(dir / "report.csv", std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        reports[k] = ss.str();
    }
    fs::remove_all(base);
    return {!reports[0].empty() && reports[0] == reports[1],
            std::to_string(reports[0].size()) + " bytes, " + (reports[0] == reports[1] ? "identical" : "different")};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"ptdf flows match the angle formulation", ptdf_flows},
        {"branch-and-bound matches z-pattern enumeration", milp_oracle},
        {"violation budget holds exactly", violation_budget},
        {"doubling Big-M values leaves optima unchanged", big_m_doubling},
        {"svm optimality", svm_optimality},
        {"bootstrap unique fraction", bootstrap_fraction},
        {"bagging trend on the desk dataset", bagging_trend},
        {"desk-scale comparison", desk_table},
        {"compare reports are byte-identical", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
