#pragma once

// Internal helper: spectral norm of a central finite-difference Hessian in
// full vectorized-pmf coordinates. Shared by the source and channel
// statistics modules; not part of the public API.

#include <Eigen/Dense>

#include <functional>
#include <vector>

namespace dispersia::detail {

inline double fd_hessian_norm(const std::function<double(const std::vector<double>&)>& f,
                              const std::vector<double>& v0, double h) {
    const int m = static_cast<int>(v0.size());
    const double f0 = f(v0);
    Eigen::MatrixXd H(m, m);
    std::vector<double> v = v0;
    for (int i = 0; i < m; ++i) {
        v[i] = v0[i] + h;
        const double fp = f(v);
        v[i] = v0[i] - h;
        const double fm = f(v);
        v[i] = v0[i];
        H(i, i) = (fp - 2.0 * f0 + fm) / (h * h);
    }
    for (int i = 0; i < m; ++i) {
        for (int j = i + 1; j < m; ++j) {
            v[i] = v0[i] + h;
            v[j] = v0[j] + h;
            const double fpp = f(v);
            v[j] = v0[j] - h;
            const double fpm = f(v);
            v[i] = v0[i] - h;
            const double fmm = f(v);
            v[j] = v0[j] + h;
            const double fmp = f(v);
            v[i] = v0[i];
            v[j] = v0[j];
            H(i, j) = H(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    double norm = 0.0;
    for (int i = 0; i < m; ++i) norm = std::max(norm, std::abs(es.eigenvalues()(i)));
    return norm;
}

} // namespace dispersia::detail
