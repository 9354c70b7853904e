#pragma once

#include "jcc/learn.hpp"
#include "jcc/mip.hpp"
#include "jcc/netcase.hpp"
#include "jcc/opf.hpp"
#include "jcc/ptdf.hpp"
#include "jcc/scenarios.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace jcc::pipeline {

struct ExperimentConfig {
    std::string case_path;  ///< resolved against the config file's directory
    /// Load deviation as a fraction of mean demand, unless `sigma_d` lists one value per bus.
    double sigma_d_fraction = 0.03;
    std::vector<double> sigma_d;
    std::vector<int> wind_buses;
    std::vector<double> mu_w;
    std::vector<double> sigma_w;
    scenarios::OmegaComposition omega_composition = scenarios::OmegaComposition::Net;
    scenarios::PerturbationRange perturbation;

    std::size_t n_runs = 100;
    std::size_t n_scenarios = 100;
    std::vector<double> alphas{0.0, 0.05};
    std::size_t mc_size = 1000;
    double rebalance_ratio = 1.0;
    double split_fraction = 0.75;
    std::size_t ensemble_size = 8;
    learn::SvmOptions svm;
    bool include_beta_features = false;
    std::uint64_t seed = 1;

    opf::SurrogateMode surrogate_mode = opf::SurrogateMode::Conjunctive;
    double test_alpha = 0.05;
    std::size_t test_samples = 15;
    std::vector<std::size_t> sweep_sizes{1, 2, 4, 8, 12, 16};
    std::size_t sweep_seeds = 10;

    /// Monitored lines (1-based branch numbers). Empty: all limited lines, or the loaded ones below.
    std::vector<std::size_t> monitored_lines;
    /// When positive, monitor only lines loaded above this fraction in a deterministic pre-solve.
    double monitor_threshold = 0.0;
    int cost_segments = 8;
    int beta_segments = 8;
    double big_m_scale = 1.0;
    mip::SolverOptions solver;
    std::size_t jobs = 1;
};

/// Parses a JSON config. Relative paths resolve against `base_dir`. Throws DataError.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON form, also the input of the config hash.
std::string to_json(const ExperimentConfig& cfg);
/// FNV-1a 64 of the canonical JSON.
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// Network, PTDF and derived settings shared by every stage.
struct Context {
    ExperimentConfig cfg;
    netcase::Network net;
    ptdf::PtdfMatrix ptdf;
    scenarios::UncertaintySpec base_spec;
    opf::SaaConfig saa;  ///< alpha and N filled per solve
};

/// Loads the case, builds the PTDF and the base uncertainty spec, and resolves monitored lines.
Context make_context(const ExperimentConfig& cfg);

struct RunRecord {
    std::size_t run_id = 0;
    scenarios::UncertaintySpec spec;  ///< perturbed
    std::uint64_t scenario_stream = 0;
    std::uint64_t validation_stream = 0;
    double alpha = 0.0;
    opf::DispatchSolution solution;
    std::size_t violations = 0;  ///< on the validation Monte Carlo set
    int label = 0;               ///< +1 iff violations == 0
};

struct Dataset {
    learn::LabeledSet data;          ///< one row per record
    std::vector<RunRecord> records;  ///< row i comes from records[i]
    std::size_t failed_runs = 0;
};

/// Feature names in dataset column order: p_1..p_G, then beta_1..beta_G when enabled.
std::vector<std::string> feature_names(const netcase::Network& net, bool include_beta);
std::vector<double> features(const opf::DispatchSolution& sol, bool include_beta);

scenarios::ScenarioSet run_scenarios(const Context& ctx, const RunRecord& rec);
scenarios::ScenarioSet run_validation_set(const Context& ctx, const RunRecord& rec);

/// For each run: perturb the wind statistics, sample N scenarios, solve the SAA model at every
/// alpha and label each solution on an independent Monte Carlo set. Runs whose solves fail are
/// skipped and counted. Results are ordered by run id whatever the job count.
Dataset generate_dataset(const Context& ctx);

/// Row indices after oversampling the minority class (with replacement) until
/// minority / majority is within one sample of `target_ratio`. Original rows come first.
std::vector<std::size_t> rebalance_indices(const std::vector<int>& labels, rng::Philox& rng, double target_ratio = 1.0);
learn::LabeledSet rebalance(const learn::LabeledSet& data, rng::Philox& rng, double target_ratio = 1.0);

/// Stratified split: floor(fraction * n) training rows, class quotas by largest remainder.
/// Both index lists are sorted. Throws DataError when a class has fewer than two members.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split(const std::vector<int>& labels, double fraction,
                                                                    rng::Philox& rng);

/// Split, rebalanced training set and test set for one master seed.
struct Partition {
    std::vector<std::size_t> train_rows;  ///< dataset rows before rebalancing
    std::vector<std::size_t> test_rows;
    learn::LabeledSet train;  ///< rebalanced
    learn::LabeledSet test;
};

Partition partition(const learn::LabeledSet& data, const ExperimentConfig& cfg, std::uint64_t seed);

/// Run ids used as comparison samples: runs with test rows and no training rows first, then runs
/// with test rows, each group by increasing id; at most n.
std::vector<std::size_t> held_out_runs(const Dataset& ds, const Partition& part, std::size_t n);

struct ComparisonRow {
    std::size_t sample = 0;
    std::size_t run_id = 0;
    bool ok = false;
    std::string error;
    double cost_saa = 0.0;
    double cost_surrogate = 0.0;
    double delta = 0.0;
    double delta_pct = 0.0;
    std::size_t violations_surrogate = 0;  ///< in-sample scenarios with an overloaded line
    std::size_t relaxed_surrogate = 0;     ///< scenarios whose classifier rows are switched off
    std::size_t budget = 0;
    std::size_t mc_violations_saa = 0;
    std::size_t mc_violations_surrogate = 0;
};

struct ExperimentReport {
    std::vector<ComparisonRow> rows;
    double mean_delta_pct = 0.0;
    double std_delta_pct = 0.0;  ///< sample standard deviation
    double mean_abs_delta_pct = 0.0;
    learn::Metrics metrics;
    std::size_t dataset_rows = 0;
    std::size_t positives = 0;
    std::size_t failed_runs = 0;
};

/// SAA (stored solution) against the surrogate model on each held-out run's own scenarios.
ExperimentReport run_comparison(const Context& ctx, const Dataset& ds, const Partition& part,
                                const learn::Ensemble& ens);

/// Full pipeline: dataset, partition, ensemble, comparison.
struct PipelineResult {
    Dataset dataset;
    Partition partition;
    learn::Ensemble ensemble;
    ExperimentReport report;
};

PipelineResult run_pipeline(const Context& ctx);

struct SweepRow {
    std::size_t m = 0;
    double accuracy = 0.0;         ///< mean over seeds
    double false_negatives = 0.0;  ///< mean over seeds
};

/// For each master seed (seed, seed + 1, ...): partition, train the largest ensemble once and
/// evaluate every prefix size on the test rows.
std::vector<SweepRow> sweep_ensemble_size(const learn::LabeledSet& data, const ExperimentConfig& cfg,
                                          const std::vector<std::size_t>& sizes, std::size_t seeds);

std::string dataset_csv(const Dataset& ds, const netcase::Network& net, bool include_beta);
std::string records_json(const Dataset& ds);
/// Reads the features and labels back from `dataset_csv` output.
learn::LabeledSet read_dataset_csv(const std::string& text);

std::string report_csv(const ExperimentReport& rep);
std::string report_json(const ExperimentReport& rep);
std::string delta_plot_csv(const ExperimentReport& rep);
std::string violation_plot_csv(const ExperimentReport& rep);
std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace jcc::pipeline
