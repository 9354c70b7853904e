#include "jcc/cli.hpp"

#include "jcc/error.hpp"
#include "jcc/learn.hpp"
#include "jcc/netcase.hpp"
#include "jcc/opf.hpp"
#include "jcc/pipeline.hpp"
#include "jcc/ptdf.hpp"
#include "jcc/scenarios.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace jcc::cli {
namespace {

namespace fs = std::filesystem;

struct Options {
    std::string command;
    std::string config;
    std::string case_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::string format = "csv";
    std::optional<std::size_t> jobs;
    std::string mode;
    std::optional<double> alpha;
    std::string ensemble;
    std::string dataset;
    std::string solution;
    std::vector<std::size_t> sizes;
};

void setup_logging() {
    auto logger = spdlog::get("jcc");
    if (!logger) {
        logger = spdlog::stderr_logger_mt("jcc");
        logger->set_pattern("[%l] %v");
    }
    spdlog::set_default_logger(logger);
    spdlog::level::level_enum level = spdlog::level::warn;
    if (const char* env = std::getenv("JCC_LOG")) level = spdlog::level::from_str(env);
    spdlog::set_level(level);
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Collects named outputs; writes them under --out with a manifest, or prints the primary one.
class Sink {
public:
    Sink(const Options& opt, std::ostream& out, std::optional<std::uint64_t> hash, std::uint64_t seed)
        : opt_(opt), out_(out), hash_(hash), seed_(seed) {}

    void add(const std::string& name, std::string text, bool primary = false) {
        if (primary) primary_ = files_.size();
        files_.emplace_back(name, std::move(text));
    }

    void finish() {
        if (opt_.out_dir.empty()) {
            if (primary_) out_ << files_[*primary_].second;
            return;
        }
        fs::create_directories(opt_.out_dir);
        nlohmann::ordered_json manifest;
        manifest["command"] = opt_.command;
        manifest["version"] = kVersion;
        if (hash_) {
            char buf[17];
            std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(*hash_));
            manifest["config_hash"] = buf;
        } else {
            manifest["config_hash"] = nullptr;
        }
        manifest["seed"] = seed_;
        auto names = nlohmann::ordered_json::array();
        for (const auto& [name, text] : files_) {
            std::ofstream f(fs::path(opt_.out_dir) / name, std::ios::binary);
            if (!f) throw DataError("cannot write " + (fs::path(opt_.out_dir) / name).string());
            f << text;
            names.push_back(name);
        }
        manifest["outputs"] = names;
        std::ofstream m(fs::path(opt_.out_dir) / "manifest.json", std::ios::binary);
        m << manifest.dump(2) << "\n";
    }

private:
    const Options& opt_;
    std::ostream& out_;
    std::optional<std::uint64_t> hash_;
    std::uint64_t seed_;
    std::vector<std::pair<std::string, std::string>> files_;
    std::optional<std::size_t> primary_;
};

pipeline::ExperimentConfig config_of(const Options& opt) {
    if (opt.config.empty()) throw DataError("--config is required for " + opt.command);
    auto cfg = pipeline::load_config(opt.config);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.jobs) cfg.jobs = std::max<std::size_t>(1, *opt.jobs);
    if (!opt.mode.empty()) cfg.surrogate_mode = opf::surrogate_mode_from_string(opt.mode);
    if (opt.alpha) {
        if (!(*opt.alpha >= 0.0 && *opt.alpha < 1.0)) throw DataError("--alpha must lie in [0, 1)");
        cfg.test_alpha = *opt.alpha;
    }
    return cfg;
}

bool json_format(const Options& opt) { return opt.format == "json"; }

// Scenario sets for the single-shot commands come from the Test purpose of the master seed.
scenarios::ScenarioSet standalone_scenarios(const pipeline::Context& ctx) {
    return scenarios::sample(ctx.base_spec, ctx.net, ctx.cfg.n_scenarios, rng::stream_id(rng::Purpose::Test, 0));
}

scenarios::ScenarioSet standalone_mc(const pipeline::Context& ctx) {
    return scenarios::sample(ctx.base_spec, ctx.net, ctx.cfg.mc_size, rng::stream_id(rng::Purpose::Test, 1));
}

opf::SaaConfig saa_of(const pipeline::Context& ctx) {
    opf::SaaConfig c = ctx.saa;
    c.alpha = ctx.cfg.test_alpha;
    return c;
}

void require_optimal(const opf::DispatchSolution& sol, const std::string& what) {
    if (!sol.optimal()) {
        if (sol.status == mip::SolveStatus::Infeasible) throw InfeasibleError(what + " is infeasible");
        throw SolverError(what + " stopped with status " + mip::to_string(sol.status));
    }
}

void emit_solution(Sink& sink, const Options& opt, const opf::DispatchSolution& sol, const netcase::Network& net) {
    const std::string csv = opf::to_csv(sol, net), js = opf::to_json(sol, net);
    sink.add("solution.csv", csv, !json_format(opt));
    sink.add("solution.json", js, json_format(opt));
}

opf::DispatchSolution read_solution(const std::string& path, const netcase::Network& net) {
    opf::DispatchSolution sol;
    try {
        const auto j = nlohmann::json::parse(read_file(path));
        for (const auto& g : j.at("generators")) {
            sol.p.push_back(g.at("p").get<double>());
            sol.beta.push_back(g.at("beta").get<double>());
        }
        if (j.contains("z")) sol.z = j["z"].get<std::vector<int>>();
        sol.cost = j.value("cost", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("bad solution file " + path + ": " + e.what());
    }
    if (sol.p.size() != net.generators.size()) throw DataError("solution " + path + " does not match the network");
    sol.status = mip::SolveStatus::Optimal;
    return sol;
}

int run(const Options& opt, std::ostream& out) {
    const std::string& cmd = opt.command;

    if (cmd == "parse-case" || cmd == "ptdf") {
        std::string path = opt.case_path;
        std::optional<std::uint64_t> hash;
        if (path.empty()) {
            const auto cfg = config_of(opt);
            path = cfg.case_path;
            hash = pipeline::config_hash(cfg);
        }
        if (path.empty()) throw DataError(cmd + " needs a case file or --config");
        const auto net = netcase::load_case(path);
        Sink sink(opt, out, hash, opt.seed.value_or(0));
        if (cmd == "parse-case") {
            std::string summary = "buses,branches,generators,total_demand_mw\n" + std::to_string(net.buses.size()) + "," +
                                  std::to_string(net.branches.size()) + "," + std::to_string(net.generators.size()) + "," +
                                  std::to_string(net.total_demand()) + "\n";
            sink.add("network.json", netcase::to_json(net), json_format(opt));
            sink.add("network.csv", summary, !json_format(opt));
        } else {
            const auto p = ptdf::build_ptdf(net);
            if (json_format(opt)) {
                nlohmann::ordered_json j;
                j["slack_bus"] = p.slack_bus();
                auto rows = nlohmann::ordered_json::array();
                for (std::size_t r = 0; r < p.rows(); ++r) {
                    std::vector<double> row(p.buses());
                    for (std::size_t n = 0; n < p.buses(); ++n) row[n] = p(r, n);
                    rows.push_back({{"branch", p.branch_of_row()[r] + 1}, {"entries", row}});
                }
                j["rows"] = rows;
                sink.add("ptdf.json", j.dump(2) + "\n", true);
            } else {
                sink.add("ptdf.csv", ptdf::to_csv(p, net), true);
            }
        }
        sink.finish();
        return kOk;
    }

    const auto cfg = config_of(opt);
    const auto ctx = pipeline::make_context(cfg);
    Sink sink(opt, out, pipeline::config_hash(cfg), cfg.seed);
    sink.add("config.json", pipeline::to_json(cfg));

    if (cmd == "sample") {
        const auto set = standalone_scenarios(ctx);
        sink.add("scenarios.csv", scenarios::to_csv(set, ctx.net), !json_format(opt));
        sink.add("scenarios.json", scenarios::to_json(set), json_format(opt));
    } else if (cmd == "solve-det") {
        const auto sol = opf::solve_deterministic(ctx.net, ctx.ptdf, ctx.base_spec, ctx.saa, cfg.solver);
        require_optimal(sol, "deterministic OPF");
        emit_solution(sink, opt, sol, ctx.net);
    } else if (cmd == "solve-saa") {
        const auto set = standalone_scenarios(ctx);
        const auto sol = opf::solve_saa(ctx.net, ctx.ptdf, set, saa_of(ctx), cfg.solver);
        require_optimal(sol, "SAA model");
        emit_solution(sink, opt, sol, ctx.net);
    } else if (cmd == "solve-surrogate") {
        if (opt.ensemble.empty()) throw DataError("solve-surrogate needs --ensemble");
        const auto ens = learn::ensemble_from_json(read_file(opt.ensemble));
        const auto set = standalone_scenarios(ctx);
        const auto model = opf::build_surrogate(ctx.net, set, ens, saa_of(ctx), cfg.surrogate_mode);
        const auto sol = opf::solve(model, ctx.net, set.var_omega, cfg.solver);
        require_optimal(sol, "surrogate model");
        emit_solution(sink, opt, sol, ctx.net);
    } else if (cmd == "validate") {
        opf::DispatchSolution sol;
        if (!opt.solution.empty()) {
            sol = read_solution(opt.solution, ctx.net);
        } else {
            sol = opf::solve_saa(ctx.net, ctx.ptdf, standalone_scenarios(ctx), saa_of(ctx), cfg.solver);
            require_optimal(sol, "SAA model");
        }
        const auto rep = opf::expost_validate(ctx.net, ctx.ptdf, sol, standalone_mc(ctx));
        sink.add("expost.csv", opf::to_csv(rep), !json_format(opt));
        sink.add("expost.json", opf::to_json(rep), json_format(opt));
    } else if (cmd == "gen-dataset") {
        const auto ds = pipeline::generate_dataset(ctx);
        sink.add("dataset.csv", pipeline::dataset_csv(ds, ctx.net, cfg.include_beta_features), !json_format(opt));
        sink.add("records.json", pipeline::records_json(ds), json_format(opt));
    } else if (cmd == "train-ensemble") {
        const learn::LabeledSet data = opt.dataset.empty() ? pipeline::generate_dataset(ctx).data
                                                           : pipeline::read_dataset_csv(read_file(opt.dataset));
        const auto part = pipeline::partition(data, cfg, cfg.seed);
        const auto ens = learn::train_bagging(part.train, cfg.ensemble_size, cfg.svm, cfg.seed);
        const auto m = learn::metrics(ens, part.test);
        sink.add("ensemble.json", learn::to_json(ens), true);
        sink.add("metrics.csv", "n,accuracy,true_positives,true_negatives,false_positives,false_negatives\n" +
                                    std::to_string(m.n) + "," + std::to_string(m.accuracy) + "," +
                                    std::to_string(m.true_positives) + "," + std::to_string(m.true_negatives) + "," +
                                    std::to_string(m.false_positives) + "," + std::to_string(m.false_negatives) + "\n");
    } else if (cmd == "compare") {
        const auto res = pipeline::run_pipeline(ctx);
        sink.add("report.csv", pipeline::report_csv(res.report), !json_format(opt));
        sink.add("report.json", pipeline::report_json(res.report), json_format(opt));
        sink.add("dataset.csv", pipeline::dataset_csv(res.dataset, ctx.net, cfg.include_beta_features));
        sink.add("ensemble.json", learn::to_json(res.ensemble));
        sink.add("fig_delta_cost.csv", pipeline::delta_plot_csv(res.report));
        sink.add("fig_violations.csv", pipeline::violation_plot_csv(res.report));
    } else if (cmd == "sweep") {
        const learn::LabeledSet data = opt.dataset.empty() ? pipeline::generate_dataset(ctx).data
                                                           : pipeline::read_dataset_csv(read_file(opt.dataset));
        const auto sizes = opt.sizes.empty() ? cfg.sweep_sizes : opt.sizes;
        const auto rows = pipeline::sweep_ensemble_size(data, cfg, sizes, cfg.sweep_seeds);
        sink.add("fig_ensemble_size.csv", pipeline::sweep_csv(rows), true);
    } else {
        throw DataError("unknown command " + cmd);
    }
    sink.finish();
    return kOk;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    setup_logging();
    CLI::App app{"Chance-constrained DC-OPF with an ensemble SVM surrogate", "jcc"};
    app.require_subcommand(1, 1);
    app.set_version_flag("--version", kVersion);

    Options opt;
    const std::vector<std::pair<const char*, const char*>> commands = {
        {"parse-case", "Parse and validate a case file"},
        {"ptdf", "Print the PTDF matrix of a case"},
        {"sample", "Draw the scenario set of the configuration"},
        {"solve-det", "Solve the deterministic OPF"},
        {"solve-saa", "Solve the SAA chance-constrained OPF"},
        {"gen-dataset", "Generate the labeled dataset"},
        {"train-ensemble", "Train the bagged SVM ensemble"},
        {"solve-surrogate", "Solve the surrogate-constrained OPF"},
        {"validate", "Monte Carlo validation of a dispatch"},
        {"compare", "End-to-end SAA versus surrogate comparison"},
        {"sweep", "Accuracy and false negatives against ensemble size"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        if (std::string(name) == "parse-case" || std::string(name) == "ptdf") {
            sub->add_option("case", opt.case_path, "Case file");
        }
        sub->add_option("--config", opt.config, "Experiment config (JSON)");
        sub->add_option("--out", opt.out_dir, "Output directory (default: primary output to stdout)");
        sub->add_option("--seed", opt.seed, "Master seed override");
        sub->add_option("--format", opt.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--jobs", opt.jobs, "Worker threads");
        sub->add_option("--mode", opt.mode, "Surrogate mode")->check(CLI::IsMember({"mean_affine", "conjunctive"}));
        sub->add_option("--alpha", opt.alpha, "Risk level for single solves and the comparison");
        if (std::string(name) == "solve-surrogate") sub->add_option("--ensemble", opt.ensemble, "Ensemble JSON");
        if (std::string(name) == "train-ensemble" || std::string(name) == "sweep") {
            sub->add_option("--dataset", opt.dataset, "Dataset CSV from gen-dataset");
        }
        if (std::string(name) == "validate") sub->add_option("--solution", opt.solution, "Solution JSON to validate");
        if (std::string(name) == "sweep") sub->add_option("--sizes", opt.sizes, "Ensemble sizes")->delimiter(',');
    }

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForVersion&) {
        out << kVersion << "\n";
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kUsage;
    }
    for (auto* sub : app.get_subcommands()) opt.command = sub->get_name();

    try {
        return run(opt, out);
    } catch (const InfeasibleError& e) {
        err << "error: " << e.what() << "\n";
        return kInfeasible;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const DataError& e) {
        err << "error: " << e.what() << "\n";
        return kDataError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace jcc::cli
