#include "jcc/error.hpp"
#include "jcc/pipeline.hpp"
#include "text.hpp"

#include <json.hpp>

#include <sstream>

namespace jcc::pipeline {

using detail::num;

std::string dataset_csv(const Dataset& ds, const netcase::Network& net, bool include_beta) {
    std::string out = "run_id,alpha,label,violations";
    for (const auto& name : feature_names(net, include_beta)) out += "," + name;
    out += "\n";
    for (std::size_t i = 0; i < ds.records.size(); ++i) {
        const auto& r = ds.records[i];
        out += std::to_string(r.run_id) + "," + num(r.alpha) + "," + std::to_string(r.label) + "," +
               std::to_string(r.violations);
        for (double v : features(r.solution, include_beta)) out += "," + num(v);
        out += "\n";
    }
    return out;
}

std::string records_json(const Dataset& ds) {
    nlohmann::ordered_json j;
    j["failed_runs"] = ds.failed_runs;
    auto recs = nlohmann::ordered_json::array();
    for (const auto& r : ds.records) {
        nlohmann::ordered_json e;
        e["run_id"] = r.run_id;
        e["alpha"] = r.alpha;
        e["scenario_stream"] = r.scenario_stream;
        e["validation_stream"] = r.validation_stream;
        e["mu_w"] = r.spec.mu_w;
        e["sigma_w"] = r.spec.sigma_w;
        e["label"] = r.label;
        e["violations"] = r.violations;
        e["cost"] = r.solution.cost;
        e["p"] = r.solution.p;
        e["beta"] = r.solution.beta;
        e["relaxed_scenarios"] = r.solution.relaxed_scenarios();
        recs.push_back(e);
    }
    j["records"] = recs;
    return j.dump(2) + "\n";
}

learn::LabeledSet read_dataset_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty dataset file", 1);
    auto cells = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string c;
        while (std::getline(ss, c, ',')) out.push_back(c);
        return out;
    };
    const auto header = cells(line);
    const std::size_t first = 4;
    if (header.size() <= first || header[2] != "label") throw ParseError("dataset header must start run_id,alpha,label,violations", 1);
    learn::LabeledSet set;
    set.feature_names.assign(header.begin() + first, header.end());
    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = cells(line);
        if (c.size() != header.size()) throw ParseError("expected " + std::to_string(header.size()) + " fields", lineno);
        try {
            set.y.push_back(std::stoi(c[2]));
            std::vector<double> row;
            for (std::size_t k = first; k < c.size(); ++k) row.push_back(std::stod(c[k]));
            rows.push_back(std::move(row));
        } catch (const std::exception&) {
            throw ParseError("invalid number", lineno);
        }
    }
    set.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(set.feature_names.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < rows[i].size(); ++k) set.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
    }
    set.check();
    return set;
}

std::string report_csv(const ExperimentReport& rep) {
    std::string out =
        "sample,run_id,jcc_opf_cost,ensemble_svm_cost,delta_cost,delta_cost_pct,violations_surrogate,relaxed_surrogate,"
        "budget,mc_violations_saa,mc_violations_surrogate,status\n";
    for (const auto& r : rep.rows) {
        out += std::to_string(r.sample) + "," + std::to_string(r.run_id) + ",";
        if (r.ok) {
            out += num(r.cost_saa) + "," + num(r.cost_surrogate) + "," + num(r.delta) + "," + num(r.delta_pct) + "," +
                   std::to_string(r.violations_surrogate) + "," + std::to_string(r.relaxed_surrogate) + "," +
                   std::to_string(r.budget) + "," + std::to_string(r.mc_violations_saa) + "," +
                   std::to_string(r.mc_violations_surrogate) + ",ok\n";
        } else {
            out += ",,,,,,,,,failed\n";
        }
    }
    return out;
}

std::string report_json(const ExperimentReport& rep) {
    nlohmann::ordered_json j;
    auto rows = nlohmann::ordered_json::array();
    for (const auto& r : rep.rows) {
        nlohmann::ordered_json e;
        e["sample"] = r.sample;
        e["run_id"] = r.run_id;
        e["ok"] = r.ok;
        if (r.ok) {
            e["cost_saa"] = r.cost_saa;
            e["cost_surrogate"] = r.cost_surrogate;
            e["delta"] = r.delta;
            e["delta_pct"] = r.delta_pct;
            e["violations_surrogate"] = r.violations_surrogate;
            e["relaxed_surrogate"] = r.relaxed_surrogate;
            e["budget"] = r.budget;
            e["mc_violations_saa"] = r.mc_violations_saa;
            e["mc_violations_surrogate"] = r.mc_violations_surrogate;
        } else {
            e["error"] = r.error;
        }
        rows.push_back(e);
    }
    j["rows"] = rows;
    j["mean_delta_pct"] = rep.mean_delta_pct;
    j["std_delta_pct"] = rep.std_delta_pct;
    j["mean_abs_delta_pct"] = rep.mean_abs_delta_pct;
    j["dataset_rows"] = rep.dataset_rows;
    j["feasible_rows"] = rep.positives;
    j["failed_runs"] = rep.failed_runs;
    const auto& m = rep.metrics;
    j["ensemble_metrics"] = {{"n", m.n},
                             {"accuracy", m.accuracy},
                             {"true_positives", m.true_positives},
                             {"true_negatives", m.true_negatives},
                             {"false_positives", m.false_positives},
                             {"false_negatives", m.false_negatives}};
    return j.dump(2) + "\n";
}

std::string delta_plot_csv(const ExperimentReport& rep) {
    std::string out = "sample,delta_cost_pct\n";
    for (const auto& r : rep.rows) {
        if (r.ok) out += std::to_string(r.sample) + "," + num(r.delta_pct) + "\n";
    }
    return out;
}

std::string violation_plot_csv(const ExperimentReport& rep) {
    std::string out = "sample,violations_surrogate,relaxed_surrogate,budget\n";
    for (const auto& r : rep.rows) {
        if (r.ok) {
            out += std::to_string(r.sample) + "," + std::to_string(r.violations_surrogate) + "," +
                   std::to_string(r.relaxed_surrogate) + "," + std::to_string(r.budget) + "\n";
        }
    }
    return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "ensemble_size,accuracy,false_negatives\n";
    for (const auto& r : rows) out += std::to_string(r.m) + "," + num(r.accuracy) + "," + num(r.false_negatives) + "\n";
    return out;
}

}  // namespace jcc::pipeline
