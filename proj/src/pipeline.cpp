#include "jcc/pipeline.hpp"

#include "jcc/error.hpp"
#include "parallel.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

namespace jcc::pipeline {

using rng::Purpose;
using rng::stream_id;

Context make_context(const ExperimentConfig& cfg) {
    netcase::Network net = netcase::load_case(cfg.case_path);
    ptdf::PtdfMatrix pt = ptdf::build_ptdf(net);

    scenarios::UncertaintySpec spec = scenarios::load_only_spec(net, cfg.sigma_d_fraction, cfg.seed);
    if (!cfg.sigma_d.empty()) spec.sigma_d = cfg.sigma_d;
    spec.wind_buses = cfg.wind_buses;
    spec.mu_w = cfg.mu_w;
    spec.sigma_w = cfg.sigma_w;
    spec.omega_composition = cfg.omega_composition;
    scenarios::check_spec(spec, net);

    opf::SaaConfig saa;
    saa.n_scenarios = cfg.n_scenarios;
    saa.cost_segments = cfg.cost_segments;
    saa.beta_segments = cfg.beta_segments;
    saa.big_m_scale = cfg.big_m_scale;
    for (std::size_t b : cfg.monitored_lines) {
        if (b < 1 || b > net.branches.size()) throw DataError("config: monitored line " + std::to_string(b) + " does not exist");
        saa.monitored_lines.push_back(b - 1);
    }
    if (saa.monitored_lines.empty() && cfg.monitor_threshold > 0.0) {
        const auto det = opf::solve_deterministic(net, pt, spec, saa, cfg.solver);
        if (!det.optimal()) throw InfeasibleError("infeasible: deterministic pre-solve failed");
        saa.monitored_lines = opf::loaded_lines(net, pt, det, spec, cfg.monitor_threshold);
        if (saa.monitored_lines.empty()) spdlog::warn("no line above the monitoring threshold; monitoring all lines");
        spdlog::info("monitoring {} lines loaded above {}", saa.monitored_lines.size(), cfg.monitor_threshold);
    }
    return Context{cfg, std::move(net), std::move(pt), std::move(spec), std::move(saa)};
}

std::vector<std::string> feature_names(const netcase::Network& net, bool include_beta) {
    std::vector<std::string> out;
    for (std::size_t g = 0; g < net.generators.size(); ++g) out.push_back("p_" + std::to_string(g + 1));
    if (include_beta) {
        for (std::size_t g = 0; g < net.generators.size(); ++g) out.push_back("beta_" + std::to_string(g + 1));
    }
    return out;
}

std::vector<double> features(const opf::DispatchSolution& sol, bool include_beta) {
    std::vector<double> out = sol.p;
    if (include_beta) out.insert(out.end(), sol.beta.begin(), sol.beta.end());
    return out;
}

scenarios::ScenarioSet run_scenarios(const Context& ctx, const RunRecord& rec) {
    return scenarios::sample(rec.spec, ctx.net, ctx.cfg.n_scenarios, rec.scenario_stream);
}

scenarios::ScenarioSet run_validation_set(const Context& ctx, const RunRecord& rec) {
    return scenarios::sample(rec.spec, ctx.net, ctx.cfg.mc_size, rec.validation_stream);
}

namespace {

opf::SaaConfig saa_at(const Context& ctx, double alpha) {
    opf::SaaConfig c = ctx.saa;
    c.alpha = alpha;
    return c;
}

struct RunOutcome {
    std::vector<RunRecord> records;
    bool failed = false;
};

RunOutcome one_run(const Context& ctx, std::size_t run) {
    const auto& cfg = ctx.cfg;
    RunOutcome out;
    rng::Philox perturb(cfg.seed, stream_id(Purpose::WindPerturbation, run));
    RunRecord base;
    base.run_id = run;
    base.spec = scenarios::perturb_wind_stats(ctx.base_spec, perturb, cfg.perturbation);
    base.scenario_stream = stream_id(Purpose::Scenarios, run);
    base.validation_stream = stream_id(Purpose::Validation, run);
    const auto scen = run_scenarios(ctx, base);
    const auto mc = run_validation_set(ctx, base);
    for (double alpha : cfg.alphas) {
        RunRecord rec = base;
        rec.alpha = alpha;
        try {
            rec.solution = opf::solve_saa(ctx.net, ctx.ptdf, scen, saa_at(ctx, alpha), cfg.solver);
        } catch (const InfeasibleError& e) {
            spdlog::warn("run {} alpha {}: {}", run, alpha, e.what());
            out.failed = true;
            return out;
        }
        if (!rec.solution.optimal()) {
            spdlog::warn("run {} alpha {}: solver status {}", run, alpha, mip::to_string(rec.solution.status));
            out.failed = true;
            return out;
        }
        rec.violations = opf::expost_validate(ctx.net, ctx.ptdf, rec.solution, mc).violations;
        rec.label = rec.violations == 0 ? 1 : -1;
        out.records.push_back(std::move(rec));
    }
    return out;
}

}  // namespace

Dataset generate_dataset(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    std::vector<RunOutcome> outcomes(cfg.n_runs);
    detail::parallel_for(cfg.n_runs, cfg.jobs, [&](std::size_t r) { outcomes[r] = one_run(ctx, r); });

    Dataset ds;
    ds.data.feature_names = feature_names(ctx.net, cfg.include_beta_features);
    for (auto& o : outcomes) {
        if (o.failed) {
            ++ds.failed_runs;
            continue;
        }
        for (auto& rec : o.records) ds.records.push_back(std::move(rec));
    }
    const std::size_t d = ds.data.feature_names.size();
    ds.data.x.resize(static_cast<Eigen::Index>(ds.records.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto f = features(ds.records[i].solution, cfg.include_beta_features);
        for (std::size_t k = 0; k < d; ++k) ds.data.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = f[k];
        ds.data.y.push_back(ds.records[i].label);
    }
    spdlog::info("dataset: {} rows ({} feasible), {} failed runs", ds.data.size(), ds.data.count(1), ds.failed_runs);
    return ds;
}

std::vector<std::size_t> rebalance_indices(const std::vector<int>& labels, rng::Philox& rng, double target_ratio) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(i);
    if (pos.empty() || neg.empty()) throw DataError("rebalancing needs both classes");
    const auto& minority = pos.size() < neg.size() ? pos : neg;
    const std::size_t majority = std::max(pos.size(), neg.size());
    const auto target = static_cast<std::size_t>(std::llround(target_ratio * static_cast<double>(majority)));
    std::vector<std::size_t> out(labels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = i;
    for (std::size_t have = minority.size(); have < target; ++have) out.push_back(minority[rng.below(minority.size())]);
    return out;
}

learn::LabeledSet rebalance(const learn::LabeledSet& data, rng::Philox& rng, double target_ratio) {
    return data.subset(rebalance_indices(data.y, rng, target_ratio));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(const std::vector<int>& labels, double fraction,
                                                                    rng::Philox& rng) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw DataError("split fraction must lie in (0, 1)");
    std::vector<std::size_t> cls[2];
    for (std::size_t i = 0; i < labels.size(); ++i) cls[labels[i] == 1 ? 1 : 0].push_back(i);
    for (const auto& c : cls) {
        if (c.size() < 2) throw DataError("split needs at least two samples of each class");
    }
    const double n = static_cast<double>(labels.size());
    const auto total = static_cast<std::size_t>(std::floor(fraction * n));
    std::size_t take[2];
    double rem[2];
    for (int c = 0; c < 2; ++c) {
        const double q = fraction * static_cast<double>(cls[c].size());
        take[c] = static_cast<std::size_t>(std::floor(q));
        rem[c] = q - std::floor(q);
    }
    // Largest remainder; a tie goes to the -1 class.
    for (std::size_t left = total - take[0] - take[1]; left > 0; --left) {
        const int c = rem[1] > rem[0] ? 1 : 0;
        ++take[c];
        rem[c] = -1.0;
    }
    std::vector<std::size_t> train, test;
    for (int c = 0; c < 2; ++c) {
        rng.shuffle(std::span<std::size_t>(cls[c]));
        train.insert(train.end(), cls[c].begin(), cls[c].begin() + static_cast<std::ptrdiff_t>(take[c]));
        test.insert(test.end(), cls[c].begin() + static_cast<std::ptrdiff_t>(take[c]), cls[c].end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

Partition partition(const learn::LabeledSet& data, const ExperimentConfig& cfg, std::uint64_t seed) {
    Partition p;
    rng::Philox split_rng(seed, stream_id(Purpose::Split, 0));
    std::tie(p.train_rows, p.test_rows) = split(data.y, cfg.split_fraction, split_rng);
    const auto train = data.subset(p.train_rows);
    rng::Philox rebalance_rng(seed, stream_id(Purpose::Rebalance, 0));
    p.train = rebalance(train, rebalance_rng, cfg.rebalance_ratio);
    p.test = data.subset(p.test_rows);
    return p;
}

std::vector<std::size_t> held_out_runs(const Dataset& ds, const Partition& part, std::size_t n) {
    std::map<std::size_t, std::pair<bool, bool>> seen;  // run -> (in train, in test)
    for (std::size_t r : part.train_rows) seen[ds.records[r].run_id].first = true;
    for (std::size_t r : part.test_rows) seen[ds.records[r].run_id].second = true;
    std::vector<std::size_t> out;
    for (const auto& [run, where] : seen) {
        if (out.size() < n && where.second && !where.first) out.push_back(run);
    }
    for (const auto& [run, where] : seen) {
        if (out.size() < n && where.second && where.first) out.push_back(run);
    }
    return out;
}

ExperimentReport run_comparison(const Context& ctx, const Dataset& ds, const Partition& part, const learn::Ensemble& ens) {
    const auto& cfg = ctx.cfg;
    ExperimentReport rep;
    rep.dataset_rows = ds.data.size();
    rep.positives = ds.data.count(1);
    rep.failed_runs = ds.failed_runs;
    rep.metrics = learn::metrics(ens, part.test, learn::VoteMode::VoteSign);

    const auto runs = held_out_runs(ds, part, cfg.test_samples);
    rep.rows.resize(runs.size());
    const opf::SaaConfig saa = saa_at(ctx, cfg.test_alpha);
    detail::parallel_for(runs.size(), cfg.jobs, [&](std::size_t k) {
        ComparisonRow& row = rep.rows[k];
        row.sample = k + 1;
        row.run_id = runs[k];
        const RunRecord* rec = nullptr;
        const RunRecord* any = nullptr;
        for (const auto& r : ds.records) {
            if (r.run_id != runs[k]) continue;
            any = &r;
            if (r.alpha == cfg.test_alpha) rec = &r;
        }
        try {
            const auto scen = run_scenarios(ctx, *any);
            const auto mc = run_validation_set(ctx, *any);
            opf::DispatchSolution base = rec ? rec->solution : opf::solve_saa(ctx.net, ctx.ptdf, scen, saa, cfg.solver);
            if (!base.optimal()) throw SolverError(std::string("SAA solve: ") + mip::to_string(base.status));
            const auto model = opf::build_surrogate(ctx.net, scen, ens, saa, cfg.surrogate_mode);
            const auto sur = opf::solve(model, ctx.net, scen.var_omega, cfg.solver);
            spdlog::debug("sample {} (run {}): surrogate {} nodes, {} LP iterations", row.sample, row.run_id, sur.nodes,
                          sur.lp_iterations);
            if (!sur.optimal()) throw SolverError(std::string("surrogate solve: ") + mip::to_string(sur.status));
            row.cost_saa = base.cost;
            row.cost_surrogate = sur.cost;
            row.delta = sur.cost - base.cost;
            row.delta_pct = 100.0 * row.delta / base.cost;
            row.violations_surrogate = opf::expost_validate(ctx.net, ctx.ptdf, sur, scen).violations;
            row.relaxed_surrogate = sur.relaxed_scenarios();
            row.budget = model.budget;
            row.mc_violations_saa = opf::expost_validate(ctx.net, ctx.ptdf, base, mc).violations;
            row.mc_violations_surrogate = opf::expost_validate(ctx.net, ctx.ptdf, sur, mc).violations;
            row.ok = true;
        } catch (const Error& e) {
            row.error = e.what();
            spdlog::warn("sample {} (run {}): {}", row.sample, row.run_id, e.what());
        }
    });

    std::vector<double> d;
    for (const auto& r : rep.rows) {
        if (r.ok) d.push_back(r.delta_pct);
    }
    if (!d.empty()) {
        double sum = 0.0, abs_sum = 0.0;
        for (double v : d) {
            sum += v;
            abs_sum += std::abs(v);
        }
        rep.mean_delta_pct = sum / static_cast<double>(d.size());
        rep.mean_abs_delta_pct = abs_sum / static_cast<double>(d.size());
        if (d.size() > 1) {
            double ss = 0.0;
            for (double v : d) ss += (v - rep.mean_delta_pct) * (v - rep.mean_delta_pct);
            rep.std_delta_pct = std::sqrt(ss / static_cast<double>(d.size() - 1));
        }
    }
    return rep;
}

PipelineResult run_pipeline(const Context& ctx) {
    PipelineResult res;
    res.dataset = generate_dataset(ctx);
    res.partition = partition(res.dataset.data, ctx.cfg, ctx.cfg.seed);
    res.ensemble = learn::train_bagging(res.partition.train, ctx.cfg.ensemble_size, ctx.cfg.svm, ctx.cfg.seed);
    res.report = run_comparison(ctx, res.dataset, res.partition, res.ensemble);
    return res;
}

std::vector<SweepRow> sweep_ensemble_size(const learn::LabeledSet& data, const ExperimentConfig& cfg,
                                          const std::vector<std::size_t>& sizes, std::size_t seeds) {
    if (sizes.empty()) throw DataError("sweep needs at least one ensemble size");
    if (seeds < 1) throw DataError("sweep needs at least one seed");
    if (std::find(sizes.begin(), sizes.end(), std::size_t{0}) != sizes.end()) throw DataError("ensemble sizes must be positive");
    const std::size_t largest = *std::max_element(sizes.begin(), sizes.end());
    std::vector<SweepRow> rows;
    for (std::size_t m : sizes) rows.push_back({m, 0.0, 0.0});
    for (std::size_t k = 0; k < seeds; ++k) {
        const std::uint64_t seed = cfg.seed + k;
        const auto part = partition(data, cfg, seed);
        const auto full = learn::train_bagging(part.train, largest, cfg.svm, seed);
        for (auto& row : rows) {
            learn::Ensemble ens = full;
            ens.planes.resize(row.m);
            ens.weights.assign(row.m, 1.0 / static_cast<double>(row.m));
            const auto met = learn::metrics(ens, part.test, learn::VoteMode::VoteSign);
            row.accuracy += met.accuracy / static_cast<double>(seeds);
            row.false_negatives += static_cast<double>(met.false_negatives) / static_cast<double>(seeds);
        }
    }
    return rows;
}

}  // namespace jcc::pipeline
