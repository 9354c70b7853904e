#include "jcc/ptdf.hpp"

#include "jcc/error.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace jcc::ptdf {

PtdfMatrix::PtdfMatrix(Eigen::MatrixXd entries, std::vector<std::size_t> branch_of_row, std::size_t slack_column,
                       int slack_bus)
    : entries_(std::move(entries)),
      branch_of_row_(std::move(branch_of_row)),
      slack_column_(slack_column),
      slack_bus_(slack_bus) {}

std::size_t PtdfMatrix::row_of_branch(std::size_t branch) const {
    for (std::size_t r = 0; r < branch_of_row_.size(); ++r) {
        if (branch_of_row_[r] == branch) return r;
    }
    return npos;
}

PtdfMatrix build_ptdf(const netcase::Network& net) { return build_ptdf(net, net.ref_bus); }

PtdfMatrix build_ptdf(const netcase::Network& net, int slack_bus) {
    const auto index = net.bus_index();
    const auto nb = static_cast<Eigen::Index>(net.buses.size());
    auto slack_it = index.find(slack_bus);
    if (slack_it == index.end()) throw DataError("slack bus " + std::to_string(slack_bus) + " not in network");
    const auto slack = static_cast<Eigen::Index>(slack_it->second);

    std::vector<std::size_t> rows;
    for (std::size_t l = 0; l < net.branches.size(); ++l) {
        if (net.branches[l].in_service) rows.push_back(l);
    }
    const auto nl = static_cast<Eigen::Index>(rows.size());
    if (nb < 2 || nl == 0) throw DataError("PTDF needs at least two buses and one in-service branch");

    // Bf maps angles to branch flows, Bbus = A^T diag(b) A.
    Eigen::MatrixXd bf = Eigen::MatrixXd::Zero(nl, nb);
    Eigen::MatrixXd bbus = Eigen::MatrixXd::Zero(nb, nb);
    for (Eigen::Index r = 0; r < nl; ++r) {
        const auto& br = net.branches[rows[static_cast<std::size_t>(r)]];
        if (!(br.reactance_pu > 0.0)) throw DataError("in-service branch with non-positive reactance");
        const double b = 1.0 / br.reactance_pu;
        const auto f = static_cast<Eigen::Index>(index.at(br.from_bus));
        const auto t = static_cast<Eigen::Index>(index.at(br.to_bus));
        bf(r, f) += b;
        bf(r, t) -= b;
        bbus(f, f) += b;
        bbus(t, t) += b;
        bbus(f, t) -= b;
        bbus(t, f) -= b;
    }

    // Drop the slack row/column and invert the reduced matrix through a partial-pivot LU.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index n = 0; n < nb; ++n) {
        if (n != slack) keep.push_back(n);
    }
    const auto nr = static_cast<Eigen::Index>(keep.size());
    Eigen::MatrixXd reduced(nr, nr);
    for (Eigen::Index i = 0; i < nr; ++i) {
        for (Eigen::Index j = 0; j < nr; ++j) reduced(i, j) = bbus(keep[i], keep[j]);
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(reduced);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-12)) {
        throw DataError("singular reduced susceptance matrix (disconnected or zero-reactance network)");
    }
    Eigen::MatrixXd inv = lu.solve(Eigen::MatrixXd::Identity(nr, nr));

    Eigen::MatrixXd entries = Eigen::MatrixXd::Zero(nl, nb);
    for (Eigen::Index r = 0; r < nl; ++r) {
        for (Eigen::Index j = 0; j < nr; ++j) {
            double sum = 0.0;
            for (Eigen::Index k = 0; k < nr; ++k) sum += bf(r, keep[k]) * inv(k, j);
            entries(r, keep[j]) = sum;
        }
    }
    return PtdfMatrix(std::move(entries), std::move(rows), static_cast<std::size_t>(slack), slack_bus);
}

std::vector<double> flows(const PtdfMatrix& ptdf, std::span<const double> injection) {
    if (injection.size() != ptdf.buses()) {
        throw DataError("injection vector has " + std::to_string(injection.size()) + " entries, expected " +
                        std::to_string(ptdf.buses()));
    }
    const auto& m = ptdf.entries();
    std::vector<double> out(ptdf.rows(), 0.0);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index n = 0; n < m.cols(); ++n) sum += m(r, n) * injection[static_cast<std::size_t>(n)];
        out[static_cast<std::size_t>(r)] = sum;
    }
    return out;
}

std::string to_csv(const PtdfMatrix& ptdf, const netcase::Network& net) {
    std::ostringstream os;
    os << "branch,from,to";
    for (const auto& b : net.buses) os << ',' << b.id;
    os << '\n';
    char buf[64];
    for (std::size_t r = 0; r < ptdf.rows(); ++r) {
        const std::size_t l = ptdf.branch_of_row()[r];
        os << l << ',' << net.branches[l].from_bus << ',' << net.branches[l].to_bus;
        for (std::size_t n = 0; n < ptdf.buses(); ++n) {
            const double v = ptdf(r, n) == 0.0 ? 0.0 : ptdf(r, n);
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
            os << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
        }
        os << '\n';
    }
    return os.str();
}

}  // namespace jcc::ptdf
