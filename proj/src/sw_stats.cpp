#include "dispersia/sw_stats.hpp"
#include "dispersia/errors.hpp"

#include "entropy_util.hpp"
#include "fd_hessian.hpp"

#include <cmath>
#include <stdexcept>

namespace dispersia {

namespace {

constexpr double kFdStep = 1e-5;

using detail::vec_entropy;

double vec_entropy_sums(const std::vector<double>& v, int rows, int cols, bool over_rows) {
    // over_rows: entropy of the row-sum vector (marginal of X1); otherwise of
    // the column sums (marginal of X2).
    std::vector<double> s(over_rows ? rows : cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            s[over_rows ? r : c] += v[r * cols + c];
        }
    }
    return vec_entropy(s);
}

} // namespace

JointPMF2::JointPMF2(int rows_, int cols_, std::vector<double> probs)
    : rows(rows_), cols(cols_), p(std::move(probs)) {
    if (rows < 2 || cols < 2) {
        throw std::invalid_argument("JointPMF2: both alphabets need at least two symbols");
    }
    if (static_cast<int>(p.size()) != rows * cols) {
        throw std::invalid_argument("JointPMF2: entry count does not match the alphabet sizes");
    }
    double total = 0.0;
    strictly_positive = true;
    for (double v : p) {
        if (std::isnan(v) || v < 0.0) {
            throw std::invalid_argument("JointPMF2: entries must be nonnegative");
        }
        if (v == 0.0) strictly_positive = false;
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-12) {
        throw std::invalid_argument("JointPMF2: entries must sum to 1 within 1e-12");
    }
    const double h1 = vec_entropy_sums(p, rows, cols, true);
    const double h2 = vec_entropy_sums(p, rows, cols, false);
    const double h12 = vec_entropy(p);
    dependent = (h1 + h2 - h12) > 1e-12;
}

std::vector<double> JointPMF2::marginal1() const {
    std::vector<double> m(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m[r] += at(r, c);
    }
    return m;
}

std::vector<double> JointPMF2::marginal2() const {
    std::vector<double> m(cols, 0.0);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) m[c] += at(r, c);
    }
    return m;
}

std::array<double, 3> entropy_density(const JointPMF2& pmf, int x1, int x2) {
    if (x1 < 0 || x1 >= pmf.rows || x2 < 0 || x2 >= pmf.cols) {
        throw std::invalid_argument("entropy_density: symbol out of range");
    }
    const double pj = pmf.at(x1, x2);
    if (!(pj > 0.0)) {
        throw std::invalid_argument("entropy_density: zero-probability cell");
    }
    double p1 = 0.0, p2 = 0.0;
    for (int c = 0; c < pmf.cols; ++c) p1 += pmf.at(x1, c);
    for (int r = 0; r < pmf.rows; ++r) p2 += pmf.at(r, x2);
    // Build the conditionals from the joint term so that the identity
    // d3 = d1 + (-log2 p(x2)) holds exactly, not just to rounding.
    const double d3 = -std::log2(pj);
    const double d1 = d3 - (-std::log2(p2));
    const double d2 = d3 - (-std::log2(p1));
    return {d1, d2, d3};
}

std::pair<EntropyTriple, SwDispersion> sw_statistics(const JointPMF2& pmf) {
    // First and second moments of the entropy density vector; cells with zero
    // probability carry no mass and are skipped (0 log 0 = 0).
    double mean[3] = {0, 0, 0};
    for (int r = 0; r < pmf.rows; ++r) {
        for (int c = 0; c < pmf.cols; ++c) {
            if (pmf.at(r, c) <= 0.0) continue;
            const auto d = entropy_density(pmf, r, c);
            for (int t = 0; t < 3; ++t) mean[t] += pmf.at(r, c) * d[t];
        }
    }
    double cov[3][3] = {};
    double xi = 0.0;
    for (int r = 0; r < pmf.rows; ++r) {
        for (int c = 0; c < pmf.cols; ++c) {
            const double w = pmf.at(r, c);
            if (w <= 0.0) continue;
            const auto d = entropy_density(pmf, r, c);
            double dev[3], norm2 = 0.0;
            for (int t = 0; t < 3; ++t) {
                dev[t] = d[t] - mean[t];
                norm2 += dev[t] * dev[t];
            }
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) cov[i][j] += w * dev[i] * dev[j];
            }
            xi += w * norm2 * std::sqrt(norm2);
        }
    }

    EntropyTriple H{mean[0], mean[1], mean[2]};
    SwDispersion disp;
    disp.V = CovMatrix(3, &cov[0][0]);
    disp.xi = xi;
    disp.degenerate = (disp.V.rank == 0);

    // kappa: maximum spectral norm of the Hessians of the three entropy
    // functionals viewed as functions of the full vectorized pmf. Available
    // only when all central-difference displacements stay strictly inside the
    // positive orthant.
    double min_cell = 1.0;
    for (double v : pmf.p) min_cell = std::min(min_cell, v);
    if (pmf.strictly_positive && min_cell > 2.0 * kFdStep) {
        const int rows = pmf.rows, cols = pmf.cols;
        auto f_joint = [](const std::vector<double>& v) { return vec_entropy(v); };
        auto f_1g2 = [rows, cols](const std::vector<double>& v) {
            return vec_entropy(v) - vec_entropy_sums(v, rows, cols, false);
        };
        auto f_2g1 = [rows, cols](const std::vector<double>& v) {
            return vec_entropy(v) - vec_entropy_sums(v, rows, cols, true);
        };
        double kappa = 0.0;
        for (const auto& f : {std::function<double(const std::vector<double>&)>(f_1g2),
                              std::function<double(const std::vector<double>&)>(f_2g1),
                              std::function<double(const std::vector<double>&)>(f_joint)}) {
            kappa = std::max(kappa, detail::fd_hessian_norm(f, pmf.p, kFdStep));
        }
        disp.kappa = kappa;
        disp.nu = pmf.rows * pmf.cols + kappa + 1.5;
    }
    return {H, disp};
}

std::pair<JointPMF2, double> dsbs(double zeta) {
    if (!(zeta > 0.0 && zeta < 0.5)) {
        throw std::invalid_argument("dsbs: zeta must lie strictly inside (0, 0.5)");
    }
    JointPMF2 pmf(2, 2,
                  {(1.0 - zeta) / 2.0, zeta / 2.0,
                   zeta / 2.0, (1.0 - zeta) / 2.0});
    const double lr = std::log2((1.0 - zeta) / zeta);
    const double v_zeta = zeta * (1.0 - zeta) * lr * lr;
    return {std::move(pmf), v_zeta};
}

} // namespace dispersia
