#include "jcc/error.hpp"
#include "jcc/learn.hpp"

#include <json.hpp>

#include <algorithm>

namespace jcc::learn {

std::vector<std::size_t> bootstrap(std::size_t n, rng::Philox& rng) {
    std::vector<std::size_t> out(n);
    for (auto& i : out) i = rng.below(n);
    return out;
}

std::vector<std::size_t> out_of_bag(std::span<const std::size_t> drawn, std::size_t n) {
    std::vector<char> seen(n, 0);
    for (std::size_t i : drawn) {
        if (i < n) seen[i] = 1;
    }
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!seen[i]) out.push_back(i);
    }
    return out;
}

const char* to_string(VoteMode mode) { return mode == VoteMode::VoteSign ? "vote_sign" : "mean_affine"; }

double Ensemble::score(std::span<const double> x, VoteMode mode) const {
    if (x.size() != dims()) throw DataError("feature dimension mismatch");
    double s = 0.0;
    for (std::size_t m = 0; m < planes.size(); ++m) {
        s += weights[m] * (mode == VoteMode::VoteSign ? planes[m].predict(x) : planes[m].decision(x));
    }
    return s;
}

int Ensemble::predict(std::span<const double> x, VoteMode mode) const { return score(x, mode) >= 0.0 ? 1 : -1; }

Ensemble train_bagging(const LabeledSet& data, std::size_t m, const SvmOptions& options, std::uint64_t seed) {
    if (m < 1) throw DataError("ensemble size must be at least 1");
    data.check();
    Ensemble ens;
    ens.seed = seed;
    ens.feature_order = data.feature_names;
    if (ens.feature_order.empty()) {
        for (std::size_t f = 0; f < data.dims(); ++f) ens.feature_order.push_back("x_" + std::to_string(f + 1));
    }
    for (std::size_t k = 0; k < m; ++k) {
        rng::Philox rng(seed, rng::stream_id(rng::Purpose::Bootstrap, k));
        LabeledSet sample;
        bool ok = false;
        for (int attempt = 0; attempt <= 10 && !ok; ++attempt) {
            const auto idx = bootstrap(data.size(), rng);
            sample = data.subset(idx);
            ok = sample.count(1) > 0 && sample.count(-1) > 0;
        }
        if (!ok) throw DataError("bootstrap sample " + std::to_string(k + 1) + " has a single class after 10 redraws");
        ens.planes.push_back(train_svm(sample, options));
    }
    ens.weights.assign(m, 1.0 / static_cast<double>(m));
    return ens;
}

Metrics metrics(const Ensemble& ens, const LabeledSet& test, VoteMode mode) {
    Metrics out;
    out.n = test.size();
    std::vector<double> row(test.dims());
    for (std::size_t i = 0; i < test.size(); ++i) {
        for (std::size_t f = 0; f < row.size(); ++f) row[f] = test.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f));
        const int pred = ens.predict(row, mode);
        if (test.y[i] == 1) {
            if (pred == 1) ++out.true_positives;
            else ++out.false_positives;
        } else {
            if (pred == -1) ++out.true_negatives;
            else ++out.false_negatives;
        }
    }
    if (out.n > 0) out.accuracy = static_cast<double>(out.true_positives + out.true_negatives) / static_cast<double>(out.n);
    return out;
}

std::string to_json(const Ensemble& ens) {
    nlohmann::ordered_json j;
    j["version"] = 1;
    j["feature_order"] = ens.feature_order;
    auto planes = nlohmann::ordered_json::array();
    for (const auto& p : ens.planes) {
        nlohmann::ordered_json e;
        e["w"] = p.w;
        e["b"] = p.b;
        planes.push_back(e);
    }
    j["planes"] = planes;
    j["weights"] = ens.weights;
    auto meta = nlohmann::ordered_json::array();
    for (const auto& p : ens.planes) {
        nlohmann::ordered_json e;
        e["c"] = p.c;
        e["iterations"] = p.iterations;
        e["converged"] = p.converged;
        meta.push_back(e);
    }
    j["training_meta"] = {{"seed", ens.seed}, {"planes", meta}};
    return j.dump(2) + "\n";
}

Ensemble ensemble_from_json(const std::string& text) {
    Ensemble ens;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("version").get<int>() != 1) throw DataError("unsupported ensemble version");
        ens.feature_order = j.at("feature_order").get<std::vector<std::string>>();
        for (const auto& e : j.at("planes")) {
            Hyperplane h;
            h.w = e.at("w").get<std::vector<double>>();
            h.b = e.at("b").get<double>();
            ens.planes.push_back(std::move(h));
        }
        ens.weights = j.at("weights").get<std::vector<double>>();
        if (j.contains("training_meta")) {
            const auto& meta = j["training_meta"];
            ens.seed = meta.value("seed", std::uint64_t{0});
            if (meta.contains("planes")) {
                for (std::size_t k = 0; k < meta["planes"].size() && k < ens.planes.size(); ++k) {
                    const auto& e = meta["planes"][k];
                    ens.planes[k].c = e.value("c", 1.0);
                    ens.planes[k].iterations = e.value("iterations", std::size_t{0});
                    ens.planes[k].converged = e.value("converged", false);
                }
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad ensemble JSON: ") + e.what());
    }
    if (ens.weights.size() != ens.planes.size()) throw DataError("ensemble weights do not match planes");
    double sum = 0.0;
    for (double w : ens.weights) {
        if (w < 0.0) throw DataError("ensemble weights must be nonnegative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("ensemble weights must sum to 1");
    for (const auto& p : ens.planes) {
        if (p.w.size() != ens.feature_order.size()) throw DataError("ensemble plane dimension does not match features");
    }
    return ens;
}

}  // namespace jcc::learn
