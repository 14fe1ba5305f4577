#include "dispersia/probkit.hpp"
#include "dispersia/errors.hpp"

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dispersia {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kTwoPi = 6.2831853071795864769;

// Standard normal CDF. erfc keeps full relative accuracy in the lower tail,
// which plain 0.5*(1+erf) would lose.
double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / kSqrt2);
}

double normal_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

// Lower-orthant CDF of a standardized bivariate normal, P(X <= h, Y <= k)
// with correlation rho. Drezner-Wesolowsky single integral in the angle
// variable: for rho >= 0,
//   Phi2(h,k,rho) = Phi(h)Phi(k)
//     + (1/2pi) * Int_0^{asin rho} exp(-(h-k)^2/(2 cos^2 t) - hk/(1+sin t)) dt,
// where the exponent is the algebraically stable rewrite of
// (h^2+k^2-2hk sin t)/(2 cos^2 t); the naive form cancels catastrophically
// for h ~ k near t = pi/2. Negative rho is reduced through
// Phi2(h,k,rho) = Phi(h) - Phi2(h,-k,-rho).
double bvn_lower(double h, double k, double rho) {
    if (std::isnan(h) || std::isnan(k) || std::isnan(rho)) {
        throw std::invalid_argument("bvn_lower: NaN input");
    }
    h = std::clamp(h, -40.0, 40.0);
    k = std::clamp(k, -40.0, 40.0);
    if (rho < 0.0) {
        return std::max(0.0, normal_cdf(h) - bvn_lower(h, -k, -rho));
    }
    if (rho >= 1.0 - 1e-12) {
        // Numerically comonotone: Y = X almost surely.
        return normal_cdf(std::min(h, k));
    }
    // Beyond 8.3 sigma the neglected orthant mass is below 6e-17.
    if (h <= -8.3 || k <= -8.3) return 0.0;
    if (h >= 8.3) return normal_cdf(k);
    if (k >= 8.3) return normal_cdf(h);
    double base = normal_cdf(h) * normal_cdf(k);
    if (rho == 0.0) return base;

    const double upper = std::asin(rho);
    auto integrand = [h, k](double t) {
        const double s = std::sin(t);
        const double c = std::cos(t);
        const double d = h - k;
        return std::exp(-d * d / (2.0 * c * c) - h * k / (1.0 + s));
    };
    double err = 0.0;
    const double corr = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, 0.0, upper, 15, 1e-12, &err);
    if (err > 2e-10) {
        throw NonconvergenceError("bvn_lower: quadrature did not converge", err);
    }
    return std::clamp(base + corr / kTwoPi, 0.0, 1.0);
}

struct Sym3 {
    int dim;
    double a[3][3];
};

// Trivariate lower-orthant CDF for a full-rank covariance. Conditions on the
// pivot coordinate whose removal leaves the weakest conditional correlation,
// then integrates phi(t) * Phi2(conditional pair) adaptively.
double tvn_lower_fullrank(const Sym3& S, const double* z) {
    int order[3][3] = {{0, 1, 2}, {1, 0, 2}, {2, 0, 1}};
    int best = 0;
    double best_rho = std::numeric_limits<double>::infinity();
    for (int pick = 0; pick < 3; ++pick) {
        int i = order[pick][0], j = order[pick][1], k = order[pick][2];
        double vjj = S.a[j][j] - S.a[j][i] * S.a[i][j] / S.a[i][i];
        double vkk = S.a[k][k] - S.a[k][i] * S.a[i][k] / S.a[i][i];
        double vjk = S.a[j][k] - S.a[j][i] * S.a[i][k] / S.a[i][i];
        if (vjj <= 0.0 || vkk <= 0.0) continue;
        double r = std::abs(vjk) / std::sqrt(vjj * vkk);
        if (r < best_rho) {
            best_rho = r;
            best = pick;
        }
    }
    const int i = order[best][0], j = order[best][1], k = order[best][2];
    const double si = std::sqrt(S.a[i][i]);
    const double cj = S.a[j][i] / si;
    const double ck = S.a[k][i] / si;
    const double vjj = S.a[j][j] - cj * cj;
    const double vkk = S.a[k][k] - ck * ck;
    const double vjk = S.a[j][k] - cj * ck;
    const double sj = std::sqrt(std::max(vjj, 0.0));
    const double sk = std::sqrt(std::max(vkk, 0.0));
    double rho = vjk / (sj * sk);
    rho = std::clamp(rho, -1.0, 1.0);

    const double upper = std::min(z[i] / si, 8.75);
    if (upper < -8.75) return 0.0; // truncated mass below 1.2e-18

    auto integrand = [&](double t) {
        const double hj = (z[j] - cj * t) / sj;
        const double hk2 = (z[k] - ck * t) / sk;
        return normal_pdf(t) * bvn_lower(hj, hk2, rho);
    };
    double err = 0.0;
    const double p = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        integrand, -8.75, upper, 15, 1e-10, &err);
    if (err > 5e-8) {
        throw NonconvergenceError("trivariate CDF: quadrature did not converge", err);
    }
    return std::clamp(p, 0.0, 1.0);
}

// Constraint rows for the reduced-coordinate (singular) paths: Z = B W with
// W ~ N(0, I_r), so {Z <= z} = {B_i . w <= z_i for all i}.
struct ReducedConstraints {
    int r = 0;                       // support dimension
    int nrows = 0;
    double b[3][2];                  // row i, reduced coordinate c
    double z[3];
    bool infeasible_zero_row = false;
};

ReducedConstraints reduce_singular(const CovMatrix& cov, const std::vector<double>& z) {
    ReducedConstraints rc;
    double lam_max = 0.0;
    for (int c = 0; c < cov.dim; ++c) lam_max = std::max(lam_max, cov.eigval[c]);
    // Columns of B are sqrt(lambda)-scaled eigenvectors of the retained modes.
    int cols[2];
    for (int c = 0; c < cov.dim; ++c) {
        if (cov.eigval[c] > cov.eigen_floor * lam_max) {
            cols[rc.r++] = c;
        }
    }
    const double row_tol = 1e-10 * std::sqrt(std::max(lam_max, 1e-300));
    for (int i = 0; i < cov.dim; ++i) {
        double row[2] = {0.0, 0.0};
        double norm = 0.0;
        for (int c = 0; c < rc.r; ++c) {
            row[c] = cov.eigvec[i][cols[c]] * std::sqrt(cov.eigval[cols[c]]);
            norm += row[c] * row[c];
        }
        if (std::sqrt(norm) <= row_tol) {
            // This component is deterministically zero; the constraint is a
            // feasibility test on z_i alone.
            if (z[i] < -1e-9 * (1.0 + std::sqrt(lam_max))) rc.infeasible_zero_row = true;
            continue;
        }
        rc.b[rc.nrows][0] = row[0];
        rc.b[rc.nrows][1] = row[1];
        rc.z[rc.nrows] = z[i];
        ++rc.nrows;
    }
    return rc;
}

double singular_rank1(const ReducedConstraints& rc) {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int i = 0; i < rc.nrows; ++i) {
        const double b = rc.b[i][0];
        if (b > 0.0) {
            hi = std::min(hi, rc.z[i] / b);
        } else {
            lo = std::max(lo, rc.z[i] / b);
        }
    }
    if (hi <= lo) return 0.0;
    return std::clamp(normal_cdf(hi) - normal_cdf(lo), 0.0, 1.0);
}

double singular_rank2(const ReducedConstraints& rc) {
    // Split constraints into pure-w1 bounds and genuine lines in (w1, w2).
    double w1_lo = -8.75, w1_hi = 8.75;
    struct Line {
        double b0, b1, z;
    };
    std::vector<Line> lines;
    for (int i = 0; i < rc.nrows; ++i) {
        const double b0 = rc.b[i][0], b1 = rc.b[i][1];
        if (std::abs(b1) <= 1e-13 * (std::abs(b0) + std::abs(b1))) {
            if (b0 > 0.0) {
                w1_hi = std::min(w1_hi, rc.z[i] / b0);
            } else if (b0 < 0.0) {
                w1_lo = std::max(w1_lo, rc.z[i] / b0);
            }
        } else {
            lines.push_back({b0, b1, rc.z[i]});
        }
    }
    if (w1_hi <= w1_lo) return 0.0;

    auto band = [&lines](double w1) {
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (const Line& L : lines) {
            const double bound = (L.z - L.b0 * w1) / L.b1;
            if (L.b1 > 0.0) {
                hi = std::min(hi, bound);
            } else {
                lo = std::max(lo, bound);
            }
        }
        if (hi <= lo) return 0.0;
        return std::max(0.0, normal_cdf(hi) - normal_cdf(lo));
    };
    auto integrand = [&](double w1) { return normal_pdf(w1) * band(w1); };

    // The integrand has kinks where the active line switches; splitting at the
    // pairwise crossings keeps each piece smooth for the quadrature.
    std::vector<double> knots = {w1_lo, w1_hi};
    for (size_t i = 0; i < lines.size(); ++i) {
        for (size_t j = i + 1; j < lines.size(); ++j) {
            const double den = lines[i].b0 * lines[j].b1 - lines[j].b0 * lines[i].b1;
            if (std::abs(den) < 1e-300) continue;
            const double w1 = (lines[i].z * lines[j].b1 - lines[j].z * lines[i].b1) / den;
            if (w1 > w1_lo && w1 < w1_hi) knots.push_back(w1);
        }
    }
    std::sort(knots.begin(), knots.end());
    double total = 0.0, total_err = 0.0;
    for (size_t s = 0; s + 1 < knots.size(); ++s) {
        if (knots[s + 1] - knots[s] < 1e-300) continue;
        double err = 0.0;
        total += boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
            integrand, knots[s], knots[s + 1], 15, 1e-10, &err);
        total_err += err;
    }
    if (total_err > 5e-7) {
        throw NonconvergenceError("singular rank-2 CDF: quadrature did not converge", total_err);
    }
    return std::clamp(total, 0.0, 1.0);
}

} // namespace

CovMatrix::CovMatrix(int dim_, const double* entries, double floor_) {
    if (dim_ < 1 || dim_ > 3) throw std::invalid_argument("CovMatrix: dim must be 1, 2, or 3");
    dim = dim_;
    eigen_floor = floor_;
    double scale = 0.0;
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) {
            m[i][j] = entries[i * dim + j];
            if (std::isnan(m[i][j])) throw std::invalid_argument("CovMatrix: NaN entry");
            scale = std::max(scale, std::abs(m[i][j]));
        }
    }
    const double sym_tol = 1e-12 * std::max(scale, 1.0);
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            if (std::abs(m[i][j] - m[j][i]) > sym_tol) {
                throw std::invalid_argument("CovMatrix: entries are not symmetric");
            }
        }
    }
    Eigen::MatrixXd A(dim, dim);
    for (int i = 0; i < dim; ++i) {
        for (int j = 0; j < dim; ++j) A(i, j) = 0.5 * (m[i][j] + m[j][i]);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.info() != Eigen::Success) {
        throw std::invalid_argument("CovMatrix: eigendecomposition failed");
    }
    double lam_max = 0.0;
    for (int c = 0; c < dim; ++c) {
        eigval[c] = es.eigenvalues()(c);
        lam_max = std::max(lam_max, eigval[c]);
        for (int r = 0; r < dim; ++r) eigvec[r][c] = es.eigenvectors()(r, c);
    }
    const double neg_tol = 1e-10 * std::max(lam_max, 1.0);
    rank = 0;
    for (int c = 0; c < dim; ++c) {
        if (eigval[c] < -neg_tol) {
            throw std::invalid_argument("CovMatrix: matrix is not positive semidefinite");
        }
        if (eigval[c] < 0.0) eigval[c] = 0.0;
        if (eigval[c] > eigen_floor * lam_max) ++rank;
    }
}

namespace {
std::array<double, 9> flatten_rows(const std::vector<std::vector<double>>& rows) {
    const int d = static_cast<int>(rows.size());
    if (d < 1 || d > 3) throw std::invalid_argument("CovMatrix: dim must be 1, 2, or 3");
    std::array<double, 9> flat{};
    for (int i = 0; i < d; ++i) {
        if (static_cast<int>(rows[i].size()) != d) {
            throw std::invalid_argument("CovMatrix: ragged rows");
        }
        for (int j = 0; j < d; ++j) flat[i * d + j] = rows[i][j];
    }
    return flat;
}
} // namespace

CovMatrix::CovMatrix(const std::vector<std::vector<double>>& rows, double floor_)
    : CovMatrix(static_cast<int>(rows.size()), flatten_rows(rows).data(), floor_) {}

CovMatrix::CovMatrix(std::initializer_list<std::initializer_list<double>> rows, double floor_)
    : CovMatrix(std::vector<std::vector<double>>(rows.begin(), rows.end()), floor_) {}

double q_func(double x) {
    if (std::isnan(x)) throw std::invalid_argument("q_func: NaN input");
    return 0.5 * std::erfc(x / kSqrt2);
}

double q_inv(double eps) {
    if (!(eps > 0.0 && eps < 1.0)) {
        throw std::invalid_argument("q_inv: epsilon must lie strictly inside (0,1)");
    }
    // Q(x) = eps  <=>  erfc(x/sqrt2) = 2 eps.
    return kSqrt2 * boost::math::erfc_inv(2.0 * eps);
}

double psi(double rho, double xp, double yp) {
    if (std::isnan(rho) || std::isnan(xp) || std::isnan(yp)) {
        throw std::invalid_argument("psi: NaN input");
    }
    if (std::abs(rho) > 1.0) throw std::invalid_argument("psi: |rho| exceeds 1");
    if (std::isinf(xp) && xp < 0.0) return q_func(std::isinf(yp) ? (yp < 0 ? -40.0 : 40.0) : yp);
    if (std::isinf(yp) && yp < 0.0) return q_func(std::isinf(xp) ? (xp < 0 ? -40.0 : 40.0) : xp);
    if (std::isinf(xp) || std::isinf(yp)) return 0.0; // an argument at +infinity
    if (std::abs(rho) >= 1.0 - 1e-9) {
        if (rho > 0.0) {
            // Comonotone limit: the larger threshold binds.
            return q_func(std::max(xp, yp));
        }
        // Antithetic limit Y = -X: event is {X >= xp, X <= -yp}.
        return std::max(0.0, normal_cdf(-yp) - normal_cdf(xp));
    }
    // Upper orthant of (X,Y) equals lower orthant of (-X,-Y), same correlation.
    return bvn_lower(-xp, -yp, rho);
}

double mvn_lower_orthant(const CovMatrix& cov, const std::vector<double>& z) {
    if (static_cast<int>(z.size()) != cov.dim) {
        throw std::invalid_argument("mvn_lower_orthant: z length must equal cov.dim");
    }
    for (double v : z) {
        if (std::isnan(v)) throw std::invalid_argument("mvn_lower_orthant: NaN in z");
    }
    if (cov.rank == 0) {
        throw std::invalid_argument("mvn_lower_orthant: rank-0 covariance is not supported");
    }

    if (cov.rank < cov.dim) {
        ReducedConstraints rc = reduce_singular(cov, z);
        if (rc.infeasible_zero_row) return 0.0;
        if (rc.nrows == 0) return 1.0;
        return rc.r == 1 ? singular_rank1(rc) : singular_rank2(rc);
    }

    if (cov.dim == 1) {
        return normal_cdf(z[0] / std::sqrt(cov.m[0][0]));
    }
    if (cov.dim == 2) {
        const double s1 = std::sqrt(cov.m[0][0]);
        const double s2 = std::sqrt(cov.m[1][1]);
        const double rho = std::clamp(cov.m[0][1] / (s1 * s2), -1.0, 1.0);
        return bvn_lower(z[0] / s1, z[1] / s2, rho);
    }
    Sym3 S{3, {}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) S.a[i][j] = cov.m[i][j];
    }
    return tvn_lower_fullrank(S, z.data());
}

bool in_S(const SQuery& query) {
    if (!(query.epsilon > 0.0 && query.epsilon < 1.0)) {
        throw std::invalid_argument("in_S: epsilon must lie strictly inside (0,1)");
    }
    if (query.cov.dim != 3) throw std::invalid_argument("in_S: covariance must be 3x3");
    const std::vector<double> z(query.z.begin(), query.z.end());
    // Ties within 1e-7 of the threshold resolve toward membership so boundary
    // bisections terminate deterministically.
    return mvn_lower_orthant(query.cov, z) >= 1.0 - query.epsilon - 1e-7;
}

double berry_esseen_bound(int d, double xi, double lambda_min, long long n) {
    if (d < 1) throw std::invalid_argument("berry_esseen_bound: d must be >= 1");
    if (!(xi >= 0.0)) throw std::invalid_argument("berry_esseen_bound: xi must be >= 0");
    if (!(lambda_min > 0.0)) {
        throw std::invalid_argument(
            "berry_esseen_bound: lambda_min must be positive; reduce to the nonsingular subspace");
    }
    if (n < 1) throw std::invalid_argument("berry_esseen_bound: n must be >= 1");
    return 400.0 * std::pow(static_cast<double>(d), 0.25) * xi /
           (std::pow(lambda_min, 1.5) * std::sqrt(static_cast<double>(n)));
}

} // namespace dispersia
