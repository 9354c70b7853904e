#include "jcc/opf.hpp"

#include "jcc/error.hpp"
#include "text.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jcc::opf {

using mip::Sense;
using mip::Term;
using netcase::Network;
using ptdf::PtdfMatrix;
using scenarios::ScenarioSet;

std::size_t violation_budget(double alpha, std::size_t n) {
    return static_cast<std::size_t>(std::floor(alpha * static_cast<double>(n) + 1e-9));
}

std::size_t DispatchSolution::relaxed_scenarios() const {
    return static_cast<std::size_t>(std::count(z.begin(), z.end(), 1));
}

std::vector<std::size_t> monitored_lines(const Network& net, const PtdfMatrix& ptdf, const SaaConfig& cfg) {
    std::vector<std::size_t> out;
    if (cfg.monitored_lines.empty()) {
        for (std::size_t b : ptdf.branch_of_row()) {
            if (std::isfinite(net.branches[b].flow_limit)) out.push_back(b);
        }
        return out;
    }
    for (std::size_t b : cfg.monitored_lines) {
        if (b >= net.branches.size()) throw DataError("monitored line " + std::to_string(b + 1) + " does not exist");
        if (ptdf.row_of_branch(b) == PtdfMatrix::npos) continue;
        if (!std::isfinite(net.branches[b].flow_limit)) continue;
        out.push_back(b);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double compute_big_m(const Network& net, const PtdfMatrix& ptdf, const ScenarioSet& scen, std::size_t line) {
    const std::size_t row = ptdf.row_of_branch(line);
    if (row == PtdfMatrix::npos) throw DataError("branch " + std::to_string(line + 1) + " is out of service");
    const std::size_t nb = net.buses.size();
    std::vector<double> inj(nb, 0.0);
    for (const auto& g : net.generators) inj[net.bus_position(g.bus)] += g.p_max;
    for (std::size_t n = 0; n < nb; ++n) {
        double dmax = scen.size() == 0 ? net.buses[n].pd_mean : 0.0;
        double wmax = 0.0;
        for (const auto& s : scen.scenarios) {
            dmax = std::max(dmax, s.d[n]);
            wmax = std::max(wmax, s.w[n]);
        }
        inj[n] += std::abs(dmax) + wmax;
    }
    double m = 0.0;
    for (std::size_t n = 0; n < nb; ++n) m += std::abs(ptdf(row, n)) * inj[n];
    const double limit = net.branches[line].flow_limit;
    return m + (std::isfinite(limit) ? limit : 0.0);
}

double expected_cost(const Network& net, const std::vector<double>& p, const std::vector<double>& beta,
                     double var_omega) {
    double total = 0.0;
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const auto& cost = net.generators[g].cost;
        total += cost(p[g]);
        if (g < beta.size()) total += var_omega * cost.c2 * beta[g] * beta[g];
    }
    return total;
}

namespace {

/// Flow sensitivity of each PTDF row to each generator's output.
Eigen::MatrixXd generator_sensitivity(const Network& net, const PtdfMatrix& ptdf) {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ptdf.rows()),
                                              static_cast<Eigen::Index>(net.generators.size()));
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        a.col(static_cast<Eigen::Index>(g)) = ptdf.entries().col(static_cast<Eigen::Index>(net.bus_position(net.generators[g].bus)));
    }
    return a;
}

/// Variables, cost epigraphs, mean balance, participation simplex and per-scenario generator limits.
OpfModel build_dispatch_core(const Network& net, const std::vector<double>& wind_mean, const std::vector<double>& omegas,
                             double var_omega, const SaaConfig& cfg) {
    OpfModel m;
    auto& model = m.model;
    const std::size_t ng = net.generators.size();
    if (ng == 0) throw DataError("network has no generators");

    double demand = 0.0;
    for (std::size_t n = 0; n < net.buses.size(); ++n) demand += net.buses[n].pd_mean - wind_mean[n];
    double cap_hi = 0.0, cap_lo = 0.0;
    for (const auto& g : net.generators) {
        cap_hi += g.p_max;
        cap_lo += g.p_min;
    }
    if (cap_hi < demand - 1e-9 || cap_lo > demand + 1e-9) {
        std::ostringstream os;
        os << "infeasible: net demand " << demand << " MW outside generation range [" << cap_lo << ", " << cap_hi << "]";
        throw InfeasibleError(os.str());
    }

    for (std::size_t g = 0; g < ng; ++g) {
        const auto& gen = net.generators[g];
        m.p_var.push_back(model.add_variable("p_" + std::to_string(g + 1), gen.p_min, gen.p_max));
    }
    for (std::size_t g = 0; g < ng; ++g) m.beta_var.push_back(model.add_variable("beta_" + std::to_string(g + 1), 0.0, 1.0));

    for (std::size_t g = 0; g < ng; ++g) {
        const auto& gen = net.generators[g];
        const std::string id = std::to_string(g + 1);
        if (gen.p_max - gen.p_min <= 0.0) {
            model.add_objective_constant(gen.cost(gen.p_min));
        } else {
            mip::add_piecewise_objective(model, m.p_var[g], mip::linearize(gen.cost, gen.p_min, gen.p_max, cfg.cost_segments),
                                         "cost_p_" + id);
        }
        const double q = var_omega * gen.cost.c2;
        if (q > 0.0) {
            mip::add_piecewise_objective(model, m.beta_var[g], mip::linearize({q, 0.0, 0.0}, 0.0, 1.0, cfg.beta_segments),
                                         "cost_beta_" + id);
        }
    }

    std::vector<Term> balance, simplex;
    for (std::size_t g = 0; g < ng; ++g) {
        balance.push_back({m.p_var[g], 1.0});
        simplex.push_back({m.beta_var[g], 1.0});
    }
    model.add_constraint("balance", balance, Sense::Equal, demand);
    model.add_constraint("participation", simplex, Sense::Equal, 1.0);

    // With beta >= 0, p + beta * Omega is monotone in Omega, so the extreme scenarios imply the rest.
    if (!omegas.empty()) {
        const double hi = *std::max_element(omegas.begin(), omegas.end());
        const double lo = *std::min_element(omegas.begin(), omegas.end());
        for (std::size_t g = 0; g < ng; ++g) {
            const auto& gen = net.generators[g];
            const std::string id = std::to_string(g + 1);
            model.add_constraint("gen_hi_" + id, {{m.p_var[g], 1.0}, {m.beta_var[g], hi}}, Sense::LessEqual, gen.p_max);
            model.add_constraint("gen_lo_" + id, {{m.p_var[g], 1.0}, {m.beta_var[g], lo}}, Sense::GreaterEqual, gen.p_min);
        }
    }
    return m;
}

void add_budget(OpfModel& m, std::size_t n, double alpha) {
    m.budget = violation_budget(alpha, n);
    std::vector<Term> terms;
    for (std::size_t s = 0; s < n; ++s) {
        m.z_var.push_back(m.model.add_binary("z_" + std::to_string(s + 1)));
        terms.push_back({m.z_var.back(), 1.0});
    }
    if (n > 0) m.model.add_constraint("budget", terms, Sense::LessEqual, static_cast<double>(m.budget));
}

std::vector<double> omegas_of(const ScenarioSet& scen) {
    std::vector<double> out;
    for (const auto& s : scen.scenarios) out.push_back(s.omega);
    return out;
}

void check_alpha(const SaaConfig& cfg) {
    if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) throw DataError("alpha must lie in [0, 1)");
}

}  // namespace

OpfModel build_saa(const Network& net, const PtdfMatrix& ptdf, const ScenarioSet& scen, const SaaConfig& cfg) {
    check_alpha(cfg);
    if (scen.size() == 0) throw DataError("SAA needs at least one scenario");
    if (ptdf.buses() != net.buses.size()) throw DataError("PTDF does not match the network");
    for (const auto& s : scen.scenarios) {
        if (s.d.size() != net.buses.size() || s.w.size() != net.buses.size()) {
            throw DataError("scenario dimension does not match the network");
        }
    }
    const auto wind = scenarios::mean_wind(scen.spec, net);
    OpfModel m = build_dispatch_core(net, wind, omegas_of(scen), scen.var_omega, cfg);
    add_budget(m, scen.size(), cfg.alpha);

    const Eigen::MatrixXd a = generator_sensitivity(net, ptdf);
    const std::size_t ng = net.generators.size();
    const std::size_t nb = net.buses.size();
    m.monitored = monitored_lines(net, ptdf, cfg);
    for (std::size_t line : m.monitored) {
        const std::size_t row = ptdf.row_of_branch(line);
        const auto r = static_cast<Eigen::Index>(row);
        const double limit = net.branches[line].flow_limit;
        double big_m = cfg.big_m_mode == BigMMode::Fixed ? cfg.big_m_value : compute_big_m(net, ptdf, scen, line);
        big_m *= cfg.big_m_scale;
        m.big_m.push_back(big_m);

        // Range of the generator part of the flow over the per-scenario generator limits.
        double gen_hi = 0.0, gen_lo = 0.0;
        for (std::size_t g = 0; g < ng; ++g) {
            const double c = a(r, static_cast<Eigen::Index>(g));
            const auto& gen = net.generators[g];
            gen_hi += std::max(c * gen.p_min, c * gen.p_max);
            gen_lo += std::min(c * gen.p_min, c * gen.p_max);
        }
        const std::string id = std::to_string(line + 1);
        for (std::size_t s = 0; s < scen.size(); ++s) {
            const auto& sc = scen.scenarios[s];
            double k = 0.0;
            for (std::size_t n = 0; n < nb; ++n) k += ptdf(row, n) * (sc.w[n] - sc.d[n]);
            std::vector<Term> terms;
            for (std::size_t g = 0; g < ng; ++g) {
                const double c = a(r, static_cast<Eigen::Index>(g));
                terms.push_back({m.p_var[g], c});
                terms.push_back({m.beta_var[g], c * sc.omega});
            }
            const std::string tag = id + "_" + std::to_string(s + 1);
            // Rows that no dispatch within generator limits can violate are left out.
            if (gen_hi + k > limit) {
                auto up = terms;
                up.push_back({m.z_var[s], -big_m});
                m.model.add_constraint("line_hi_" + tag, std::move(up), Sense::LessEqual, limit - k);
            }
            if (gen_lo + k < -limit) {
                auto dn = std::move(terms);
                dn.push_back({m.z_var[s], big_m});
                m.model.add_constraint("line_lo_" + tag, std::move(dn), Sense::GreaterEqual, -limit - k);
            }
        }
    }
    return m;
}

OpfModel build_deterministic(const Network& net, const PtdfMatrix& ptdf, const scenarios::UncertaintySpec& spec,
                             const SaaConfig& cfg) {
    scenarios::check_spec(spec, net);
    const auto wind = scenarios::mean_wind(spec, net);
    OpfModel m = build_dispatch_core(net, wind, {}, scenarios::var_omega(spec), cfg);
    const Eigen::MatrixXd a = generator_sensitivity(net, ptdf);
    m.monitored = monitored_lines(net, ptdf, cfg);
    for (std::size_t line : m.monitored) {
        const std::size_t row = ptdf.row_of_branch(line);
        double k = 0.0;
        for (std::size_t n = 0; n < net.buses.size(); ++n) k += ptdf(row, n) * (wind[n] - net.buses[n].pd_mean);
        std::vector<Term> terms;
        for (std::size_t g = 0; g < net.generators.size(); ++g) {
            terms.push_back({m.p_var[g], a(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(g))});
        }
        const double limit = net.branches[line].flow_limit;
        const std::string id = std::to_string(line + 1);
        m.model.add_constraint("line_hi_" + id, terms, Sense::LessEqual, limit - k);
        m.model.add_constraint("line_lo_" + id, std::move(terms), Sense::GreaterEqual, -limit - k);
        m.big_m.push_back(0.0);
    }
    return m;
}

DispatchSolution extract(const OpfModel& m, const mip::MipSolution& sol, const Network& net, double var_omega) {
    DispatchSolution out;
    out.status = sol.status;
    out.budget = m.budget;
    out.nodes = sol.nodes;
    out.lp_iterations = sol.lp_iterations;
    if (sol.values.empty()) return out;
    for (std::size_t v : m.p_var) out.p.push_back(sol.values[v]);
    for (std::size_t v : m.beta_var) out.beta.push_back(sol.values[v]);
    for (std::size_t v : m.z_var) out.z.push_back(sol.values[v] > 0.5 ? 1 : 0);
    out.cost = sol.objective;
    out.quadratic_cost = expected_cost(net, out.p, out.beta, var_omega);
    return out;
}

DispatchSolution solve(const OpfModel& m, const Network& net, double var_omega, const mip::SolverOptions& options) {
    return extract(m, mip::solve_milp(m.model, options), net, var_omega);
}

DispatchSolution solve_saa(const Network& net, const PtdfMatrix& ptdf, const ScenarioSet& scen, const SaaConfig& cfg,
                           const mip::SolverOptions& options) {
    return solve(build_saa(net, ptdf, scen, cfg), net, scen.var_omega, options);
}

DispatchSolution solve_deterministic(const Network& net, const PtdfMatrix& ptdf, const scenarios::UncertaintySpec& spec,
                                     const SaaConfig& cfg, const mip::SolverOptions& options) {
    return solve(build_deterministic(net, ptdf, spec, cfg), net, scenarios::var_omega(spec), options);
}

std::vector<double> scenario_flows(const Network& net, const PtdfMatrix& ptdf, const DispatchSolution& sol,
                                   const scenarios::Scenario& s) {
    std::vector<double> inj(net.buses.size(), 0.0);
    for (std::size_t n = 0; n < inj.size(); ++n) inj[n] = s.w[n] - s.d[n];
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const double beta = g < sol.beta.size() ? sol.beta[g] : 0.0;
        inj[net.bus_position(net.generators[g].bus)] += sol.p[g] + beta * s.omega;
    }
    return ptdf::flows(ptdf, inj);
}

std::vector<std::size_t> loaded_lines(const Network& net, const PtdfMatrix& ptdf, const DispatchSolution& sol,
                                      const scenarios::UncertaintySpec& spec, double threshold) {
    scenarios::Scenario mean;
    mean.w = scenarios::mean_wind(spec, net);
    for (const auto& b : net.buses) mean.d.push_back(b.pd_mean);
    const auto f = scenario_flows(net, ptdf, sol, mean);
    std::vector<std::size_t> out;
    for (std::size_t r = 0; r < f.size(); ++r) {
        const std::size_t b = ptdf.branch_of_row()[r];
        const double limit = net.branches[b].flow_limit;
        if (std::isfinite(limit) && std::abs(f[r]) > threshold * limit) out.push_back(b);
    }
    return out;
}

ExPostReport expost_validate(const Network& net, const PtdfMatrix& ptdf, const DispatchSolution& sol,
                             const ScenarioSet& mc) {
    ExPostReport rep;
    rep.scenarios = mc.size();
    for (std::size_t s = 0; s < mc.size(); ++s) {
        const auto f = scenario_flows(net, ptdf, sol, mc.scenarios[s]);
        bool violated = false;
        for (std::size_t r = 0; r < f.size(); ++r) {
            const double over = std::abs(f[r]) - net.branches[ptdf.branch_of_row()[r]].flow_limit;
            if (over > kOverloadSlack) {
                violated = true;
                rep.worst_overload = std::max(rep.worst_overload, over);
            }
        }
        if (violated) rep.violated.push_back(s);
    }
    rep.violations = rep.violated.size();
    rep.probability = rep.scenarios ? static_cast<double>(rep.violations) / static_cast<double>(rep.scenarios) : 0.0;
    return rep;
}

std::string to_json(const DispatchSolution& sol, const Network& net) {
    nlohmann::ordered_json j;
    j["status"] = mip::to_string(sol.status);
    j["cost"] = sol.cost;
    j["quadratic_cost"] = sol.quadratic_cost;
    j["budget"] = sol.budget;
    j["relaxed_scenarios"] = sol.relaxed_scenarios();
    j["nodes"] = sol.nodes;
    j["lp_iterations"] = sol.lp_iterations;
    auto gens = nlohmann::ordered_json::array();
    for (std::size_t g = 0; g < sol.p.size(); ++g) {
        nlohmann::ordered_json e;
        e["generator"] = g + 1;
        e["bus"] = net.generators[g].bus;
        e["p"] = sol.p[g];
        e["beta"] = g < sol.beta.size() ? sol.beta[g] : 0.0;
        gens.push_back(e);
    }
    j["generators"] = gens;
    j["z"] = sol.z;
    return j.dump(2) + "\n";
}

std::string to_csv(const DispatchSolution& sol, const Network& net) {
    using detail::num;
    std::string out = "generator,bus,p_mw,beta\n";
    for (std::size_t g = 0; g < sol.p.size(); ++g) {
        out += std::to_string(g + 1) + "," + std::to_string(net.generators[g].bus) + "," + num(sol.p[g]) + "," +
               num(g < sol.beta.size() ? sol.beta[g] : 0.0) + "\n";
    }
    return out;
}

std::string to_json(const ExPostReport& report) {
    nlohmann::ordered_json j;
    j["scenarios"] = report.scenarios;
    j["violations"] = report.violations;
    j["probability"] = report.probability;
    j["worst_overload_mw"] = report.worst_overload;
    j["violated"] = report.violated;
    return j.dump(2) + "\n";
}

std::string to_csv(const ExPostReport& report) {
    using detail::num;
    return "scenarios,violations,probability,worst_overload_mw\n" + std::to_string(report.scenarios) + "," +
           std::to_string(report.violations) + "," + num(report.probability) + "," + num(report.worst_overload) + "\n";
}

}  // namespace jcc::opf
