#include "jcc/error.hpp"
#include "jcc/pipeline.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace jcc::pipeline {

using nlohmann::json;

namespace {

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
    if (!obj.is_object()) throw DataError("config: '" + where + "' must be an object");
    std::set<std::string> allowed(keys.begin(), keys.end());
    for (const auto& [k, v] : obj.items()) {
        if (!allowed.count(k)) throw DataError("config: unknown key '" + k + "' in " + where);
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out) {
    if (obj.contains(key)) out = obj.at(key).get<T>();
}

void read_range(const json& obj, const char* key, double& lo, double& hi) {
    if (!obj.contains(key)) return;
    const auto v = obj.at(key).get<std::vector<double>>();
    if (v.size() != 2 || v[0] > v[1]) throw DataError(std::string("config: '") + key + "' must be [lo, hi]");
    lo = v[0];
    hi = v[1];
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
    ExperimentConfig cfg;
    try {
        const json j = json::parse(text);
        allow_keys(j, "config", {"case", "uncertainty", "dataset", "learning", "comparison", "model", "solver", "seed", "jobs"});
        if (!j.contains("case")) throw DataError("config: missing 'case'");
        std::filesystem::path p = j.at("case").get<std::string>();
        if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
        cfg.case_path = p.lexically_normal().string();
        read(j, "seed", cfg.seed);
        read(j, "jobs", cfg.jobs);

        if (j.contains("uncertainty")) {
            const auto& u = j["uncertainty"];
            allow_keys(u, "uncertainty",
                       {"sigma_d_fraction", "sigma_d", "wind_buses", "mu_w", "sigma_w", "omega_composition", "perturbation"});
            read(u, "sigma_d_fraction", cfg.sigma_d_fraction);
            read(u, "sigma_d", cfg.sigma_d);
            read(u, "wind_buses", cfg.wind_buses);
            read(u, "mu_w", cfg.mu_w);
            read(u, "sigma_w", cfg.sigma_w);
            if (u.contains("omega_composition")) {
                cfg.omega_composition = scenarios::omega_composition_from_string(u["omega_composition"].get<std::string>());
            }
            if (u.contains("perturbation")) {
                const auto& pr = u["perturbation"];
                allow_keys(pr, "perturbation", {"mu", "sigma"});
                read_range(pr, "mu", cfg.perturbation.mu_lo, cfg.perturbation.mu_hi);
                read_range(pr, "sigma", cfg.perturbation.sigma_lo, cfg.perturbation.sigma_hi);
            }
        }
        if (j.contains("dataset")) {
            const auto& d = j["dataset"];
            allow_keys(d, "dataset", {"runs", "scenarios", "alphas", "mc_size", "include_beta"});
            read(d, "runs", cfg.n_runs);
            read(d, "scenarios", cfg.n_scenarios);
            read(d, "alphas", cfg.alphas);
            read(d, "mc_size", cfg.mc_size);
            read(d, "include_beta", cfg.include_beta_features);
        }
        if (j.contains("learning")) {
            const auto& l = j["learning"];
            allow_keys(l, "learning",
                       {"rebalance_ratio", "split_fraction", "ensemble_size", "c", "tol", "max_epochs", "sweep_sizes", "sweep_seeds"});
            read(l, "rebalance_ratio", cfg.rebalance_ratio);
            read(l, "split_fraction", cfg.split_fraction);
            read(l, "ensemble_size", cfg.ensemble_size);
            read(l, "c", cfg.svm.c);
            read(l, "tol", cfg.svm.tol);
            read(l, "max_epochs", cfg.svm.max_epochs);
            read(l, "sweep_sizes", cfg.sweep_sizes);
            read(l, "sweep_seeds", cfg.sweep_seeds);
        }
        if (j.contains("comparison")) {
            const auto& c = j["comparison"];
            allow_keys(c, "comparison", {"alpha", "test_samples", "surrogate_mode"});
            read(c, "alpha", cfg.test_alpha);
            read(c, "test_samples", cfg.test_samples);
            if (c.contains("surrogate_mode")) cfg.surrogate_mode = opf::surrogate_mode_from_string(c["surrogate_mode"].get<std::string>());
        }
        if (j.contains("model")) {
            const auto& m = j["model"];
            allow_keys(m, "model", {"monitored_lines", "monitor_threshold", "cost_segments", "beta_segments", "big_m_scale"});
            read(m, "monitored_lines", cfg.monitored_lines);
            read(m, "monitor_threshold", cfg.monitor_threshold);
            read(m, "cost_segments", cfg.cost_segments);
            read(m, "beta_segments", cfg.beta_segments);
            read(m, "big_m_scale", cfg.big_m_scale);
        }
        if (j.contains("solver")) {
            const auto& s = j["solver"];
            allow_keys(s, "solver", {"feasibility_tol", "optimality_tol", "integrality_tol", "absolute_gap", "relative_gap",
                                     "max_lp_iterations", "max_nodes"});
            read(s, "feasibility_tol", cfg.solver.feasibility_tol);
            read(s, "optimality_tol", cfg.solver.optimality_tol);
            read(s, "integrality_tol", cfg.solver.integrality_tol);
            read(s, "absolute_gap", cfg.solver.absolute_gap);
            read(s, "relative_gap", cfg.solver.relative_gap);
            read(s, "max_lp_iterations", cfg.solver.max_lp_iterations);
            read(s, "max_nodes", cfg.solver.max_nodes);
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("config: ") + e.what());
    }

    if (!(cfg.split_fraction > 0.0 && cfg.split_fraction < 1.0)) throw DataError("config: split_fraction must lie in (0, 1)");
    for (double a : cfg.alphas) {
        if (!(a >= 0.0 && a < 1.0)) throw DataError("config: alphas must lie in [0, 1)");
    }
    if (!(cfg.test_alpha >= 0.0 && cfg.test_alpha < 1.0)) throw DataError("config: comparison alpha must lie in [0, 1)");
    if (cfg.n_scenarios < 1) throw DataError("config: scenarios must be at least 1");
    if (cfg.ensemble_size < 1) throw DataError("config: ensemble_size must be at least 1");
    if (!(cfg.rebalance_ratio > 0.0 && cfg.rebalance_ratio <= 1.0)) throw DataError("config: rebalance_ratio must lie in (0, 1]");
    if (cfg.jobs < 1) cfg.jobs = 1;
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::filesystem::path(path).parent_path().string());
}

std::string to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["case"] = cfg.case_path;
    j["seed"] = cfg.seed;
    j["uncertainty"] = {{"sigma_d_fraction", cfg.sigma_d_fraction},
                        {"sigma_d", cfg.sigma_d},
                        {"wind_buses", cfg.wind_buses},
                        {"mu_w", cfg.mu_w},
                        {"sigma_w", cfg.sigma_w},
                        {"omega_composition", scenarios::to_string(cfg.omega_composition)},
                        {"perturbation",
                         {{"mu", {cfg.perturbation.mu_lo, cfg.perturbation.mu_hi}},
                          {"sigma", {cfg.perturbation.sigma_lo, cfg.perturbation.sigma_hi}}}}};
    j["dataset"] = {{"runs", cfg.n_runs},
                    {"scenarios", cfg.n_scenarios},
                    {"alphas", cfg.alphas},
                    {"mc_size", cfg.mc_size},
                    {"include_beta", cfg.include_beta_features}};
    j["learning"] = {{"rebalance_ratio", cfg.rebalance_ratio}, {"split_fraction", cfg.split_fraction},
                     {"ensemble_size", cfg.ensemble_size},     {"c", cfg.svm.c},
                     {"tol", cfg.svm.tol},                     {"max_epochs", cfg.svm.max_epochs},
                     {"sweep_sizes", cfg.sweep_sizes},         {"sweep_seeds", cfg.sweep_seeds}};
    j["comparison"] = {{"alpha", cfg.test_alpha},
                       {"test_samples", cfg.test_samples},
                       {"surrogate_mode", opf::to_string(cfg.surrogate_mode)}};
    j["model"] = {{"monitored_lines", cfg.monitored_lines}, {"monitor_threshold", cfg.monitor_threshold},
                  {"cost_segments", cfg.cost_segments},     {"beta_segments", cfg.beta_segments},
                  {"big_m_scale", cfg.big_m_scale}};
    j["solver"] = {{"feasibility_tol", cfg.solver.feasibility_tol}, {"optimality_tol", cfg.solver.optimality_tol},
                   {"integrality_tol", cfg.solver.integrality_tol}, {"absolute_gap", cfg.solver.absolute_gap},
                   {"relative_gap", cfg.solver.relative_gap},       {"max_lp_iterations", cfg.solver.max_lp_iterations},
                   {"max_nodes", cfg.solver.max_nodes}};
    return j.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : to_json(cfg)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace jcc::pipeline
