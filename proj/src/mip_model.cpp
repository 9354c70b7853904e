#include "jcc/error.hpp"
#include "jcc/mip.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace jcc::mip {

std::size_t MipModel::add_variable(std::string name, double lower, double upper, VarKind kind, double objective) {
    if (name.empty()) name = "x" + std::to_string(variables_.size());
    variables_.push_back({std::move(name), lower, upper, kind, objective});
    return variables_.size() - 1;
}

std::size_t MipModel::add_constraint(std::string name, std::vector<Term> terms, Sense sense, double rhs) {
    if (name.empty()) name = "c" + std::to_string(constraints_.size());
    // Merge repeated variables so every row has one coefficient per variable.
    std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
    std::vector<Term> merged;
    merged.reserve(terms.size());
    for (const Term& t : terms) {
        if (!merged.empty() && merged.back().var == t.var) {
            merged.back().coef += t.coef;
        } else {
            merged.push_back(t);
        }
    }
    std::erase_if(merged, [](const Term& t) { return t.coef == 0.0; });
    constraints_.push_back({std::move(name), std::move(merged), sense, rhs});
    return constraints_.size() - 1;
}

void MipModel::set_objective(std::size_t var, double coef) { variables_.at(var).objective = coef; }
void MipModel::add_objective(std::size_t var, double coef) { variables_.at(var).objective += coef; }

void MipModel::set_bounds(std::size_t var, double lower, double upper) {
    auto& v = variables_.at(var);
    v.lower = lower;
    v.upper = upper;
}

std::size_t MipModel::num_binaries() const noexcept {
    return static_cast<std::size_t>(
        std::count_if(variables_.begin(), variables_.end(), [](const Variable& v) { return v.kind == VarKind::Binary; }));
}

void MipModel::validate() const {
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        const auto& v = variables_[j];
        if (std::isnan(v.lower) || std::isnan(v.upper) || v.lower > v.upper) {
            throw DataError("variable " + v.name + " has invalid bounds");
        }
        if (v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0)) {
            throw DataError("binary variable " + v.name + " has bounds outside [0,1]");
        }
        if (!std::isfinite(v.objective)) throw DataError("variable " + v.name + " has a non-finite objective");
    }
    for (const auto& c : constraints_) {
        if (!std::isfinite(c.rhs)) throw DataError("constraint " + c.name + " has a non-finite right-hand side");
        for (const auto& t : c.terms) {
            if (t.var >= variables_.size()) throw DataError("constraint " + c.name + " references a missing variable");
            if (!std::isfinite(t.coef)) throw DataError("constraint " + c.name + " has a non-finite coefficient");
        }
    }
}

double MipModel::objective_value(std::span<const double> x) const {
    double z = objective_constant_;
    for (std::size_t j = 0; j < variables_.size(); ++j) z += variables_[j].objective * x[j];
    return z;
}

double MipModel::activity(std::size_t row, std::span<const double> x) const {
    double a = 0.0;
    for (const auto& t : constraints_[row].terms) a += t.coef * x[t.var];
    return a;
}

double MipModel::max_violation(std::span<const double> x) const {
    double worst = 0.0;
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        worst = std::max({worst, variables_[j].lower - x[j], x[j] - variables_[j].upper});
    }
    for (std::size_t i = 0; i < constraints_.size(); ++i) {
        const double a = activity(i, x);
        const double r = constraints_[i].rhs;
        switch (constraints_[i].sense) {
            case Sense::LessEqual: worst = std::max(worst, a - r); break;
            case Sense::GreaterEqual: worst = std::max(worst, r - a); break;
            case Sense::Equal: worst = std::max(worst, std::abs(a - r)); break;
        }
    }
    return worst;
}

namespace {

std::string lp_name(const std::string& raw) {
    std::string out;
    for (char c : raw) {
        const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.';
        out.push_back(ok ? c : '_');
    }
    if (out.empty() || std::isdigit(static_cast<unsigned char>(out.front())) || out.front() == '.') out = "v_" + out;
    return out;
}

std::string lp_num(double v) {
    if (v == 0.0) v = 0.0;
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

void write_linear(std::ostream& os, const std::vector<std::pair<double, std::string>>& terms) {
    if (terms.empty()) {
        os << "0";
        return;
    }
    bool first = true;
    for (const auto& [coef, name] : terms) {
        if (first) {
            os << (coef < 0 ? "- " : "") << lp_num(std::abs(coef)) << ' ' << name;
        } else {
            os << (coef < 0 ? " - " : " + ") << lp_num(std::abs(coef)) << ' ' << name;
        }
        first = false;
    }
}

}  // namespace

std::string MipModel::to_lp_text() const {
    std::vector<std::string> names;
    names.reserve(variables_.size());
    for (const auto& v : variables_) names.push_back(lp_name(v.name));

    std::ostringstream os;
    os << "\\ objective constant: " << lp_num(objective_constant_) << "\n";
    os << "Minimize\n obj: ";
    std::vector<std::pair<double, std::string>> obj;
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        if (variables_[j].objective != 0.0) obj.emplace_back(variables_[j].objective, names[j]);
    }
    write_linear(os, obj);
    os << "\nSubject To\n";
    for (const auto& c : constraints_) {
        os << ' ' << lp_name(c.name) << ": ";
        std::vector<std::pair<double, std::string>> row;
        for (const auto& t : c.terms) row.emplace_back(t.coef, names[t.var]);
        write_linear(os, row);
        const char* op = c.sense == Sense::LessEqual ? " <= " : (c.sense == Sense::Equal ? " = " : " >= ");
        os << op << lp_num(c.rhs) << '\n';
    }
    os << "Bounds\n";
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        const auto& v = variables_[j];
        if (std::isinf(v.lower) && std::isinf(v.upper)) {
            os << ' ' << names[j] << " free\n";
        } else {
            os << ' ' << (std::isinf(v.lower) ? "-inf" : lp_num(v.lower)) << " <= " << names[j] << " <= "
               << (std::isinf(v.upper) ? "+inf" : lp_num(v.upper)) << '\n';
        }
    }
    bool header = false;
    for (std::size_t j = 0; j < variables_.size(); ++j) {
        if (variables_[j].kind != VarKind::Binary) continue;
        if (!header) os << "Binaries\n";
        header = true;
        os << ' ' << names[j] << '\n';
    }
    os << "End\n";
    return os.str();
}

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::Unbounded: return "unbounded";
        case SolveStatus::IterationLimit: return "iteration_limit";
        case SolveStatus::NodeLimit: return "node_limit";
    }
    return "unknown";
}

}  // namespace jcc::mip
