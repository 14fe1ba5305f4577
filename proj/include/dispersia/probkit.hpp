#pragma once

#include <array>
#include <vector>

namespace dispersia {

// Symmetric positive-semidefinite covariance matrix of dimension 1..3 with
// eigen metadata. All entries are in bits^2 (every log in this library is
// base 2). Construction validates symmetry (1e-12 relative) and that no
// eigenvalue is below -1e-10 * max(lambda_max, 1); rank is the number of
// eigenvalues exceeding eigen_floor * lambda_max.
struct CovMatrix {
    int dim = 0;
    std::array<std::array<double, 3>, 3> m{};   // only the leading dim x dim block is used
    double eigen_floor = 1e-12;
    int rank = 0;
    std::array<double, 3> eigval{};             // ascending, only first dim entries valid
    std::array<std::array<double, 3>, 3> eigvec{}; // eigvec[r][c]: column c pairs with eigval[c]

    CovMatrix() = default;
    CovMatrix(int dim, const double* entries_rowmajor, double eigen_floor = 1e-12);
    explicit CovMatrix(const std::vector<std::vector<double>>& rows, double eigen_floor = 1e-12);
    CovMatrix(std::initializer_list<std::initializer_list<double>> rows,
              double eigen_floor = 1e-12);

    double operator()(int i, int j) const { return m[i][j]; }
};

// Membership query for S(V, eps) = { z : P(Z <= z) >= 1 - eps }, Z ~ N(0, V).
// z is on the sqrt(n)-scaled bit scale.
struct SQuery {
    CovMatrix cov;              // dim 3
    double epsilon = 0.1;       // strictly inside (0,1)
    std::array<double, 3> z{};
};

// Gaussian tail Q(x) = 1 - Phi(x). Absolute accuracy 1e-12.
double q_func(double x);

// Inverse of q_func on (0,1); q_func(q_inv(eps)) = eps to 1e-10 and
// q_inv(eps) = -q_inv(1-eps).
double q_inv(double eps);

// Upper-orthant probability of a standardized bivariate normal:
// P(X >= xp, Y >= yp) with correlation rho. |rho| in [1-1e-9, 1] is routed to
// the degenerate branch (rho -> 1 gives Q(max(xp, yp)), rho -> -1 gives
// max(0, Phi(-yp) - Phi(xp))). Accuracy 1e-9 away from the degenerate cutoff.
double psi(double rho, double xp, double yp);

// P(Z <= z componentwise) for Z ~ N(0, cov). Singular covariances of rank 1
// or 2 are integrated on their support (rank 0 is rejected). Accuracy 1e-7
// full rank, 1e-6 singular.
double mvn_lower_orthant(const CovMatrix& cov, const std::vector<double>& z);

// True iff mvn_lower_orthant(cov, z) >= 1 - epsilon. Decisions within 1e-7 of
// the threshold resolve toward membership so that boundary bisections behave
// deterministically.
bool in_S(const SQuery& query);

// Berry-Esseen gap bound 400 * d^{1/4} * xi / (lambda_min^{3/2} * sqrt(n)).
// lambda_min must be positive: reduce to the nonsingular subspace first.
double berry_esseen_bound(int d, double xi, double lambda_min, long long n);

} // namespace dispersia
