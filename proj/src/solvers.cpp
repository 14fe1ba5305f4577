#include "dispersia/solvers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "dispersia/errors.hpp"

namespace dispersia {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kClassifyTol = 1e-9;  // boundary membership, absolute bits
constexpr double kAngleTol = 1e-12;    // direction components below this count as parallel
constexpr double kResidualTol = 1e-9;  // implicit-equation residual budget
constexpr double kSpanTol = 1e-9;      // relative residual for span / row-space membership
constexpr double kMultTol = 1e-12;     // multiplier sign resolution (relative)
constexpr double kDegenerateRho = 1.0 - 1e-9;  // correlation treated as exactly 1

double dot(const std::vector<double>& x, const std::vector<double>& y) {
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

double sigma_of(const CovMatrix& V, int j0) { return std::sqrt(std::max(V(j0, j0), 0.0)); }

CovMatrix sub_cov(const CovMatrix& V, const std::vector<int>& idx0) {
    const int d = static_cast<int>(idx0.size());
    std::vector<double> e(static_cast<size_t>(d) * d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) e[static_cast<size_t>(r) * d + c] = V(idx0[r], idx0[c]);
    return CovMatrix(d, e.data());
}

// P(Z <= t componentwise). A rank-0 covariance is a point mass at the origin,
// which mvn_lower_orthant refuses, so handle it here as an indicator.
double orthant(const CovMatrix& sub, const std::vector<double>& t) {
    if (sub.rank == 0) {
        for (double v : t)
            if (v < 0.0) return 0.0;
        return 1.0;
    }
    return mvn_lower_orthant(sub, t);
}

// ---------------------------------------------------------------------------
// Single active constraint: minimize c.u subject to P(a.u >= Z_j) >= 1 - eps.
// Only the scalar a.u matters, so c must lie in span{a} or the objective is
// unbounded along the unconstrained orthogonal directions. The constraint is
// a.u >= sigma_j * Qinv(eps), tight at the optimum; the minimum-norm solution
// is returned.
std::vector<double> single_constraint(const std::vector<double>& c, const std::vector<double>& a,
                                      double sigma, double q) {
    const double a2 = dot(a, a);
    const double gamma = dot(c, a) / a2;
    double resid2 = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double r = c[i] - gamma * a[i];
        resid2 += r * r;
    }
    const double cnorm2 = dot(c, c);
    if (resid2 > kSpanTol * kSpanTol * std::max(cnorm2, 1.0))
        throw InfeasibleError(
            "objective is unbounded below: the weight vector has a component outside the span "
            "of the single active constraint row");
    if (gamma < -kMultTol * std::max(1.0, std::abs(gamma)))
        throw InfeasibleError(
            "objective is unbounded below: the weight vector points against the active "
            "constraint row");
    std::vector<double> u(a.size());
    const double s = sigma * q / a2;
    for (size_t i = 0; i < a.size(); ++i) u[i] = s * a[i];
    return u;
}

// ---------------------------------------------------------------------------
// All active rows proportional to one direction b: thresholds move along a
// line t = tau * s and the orthant probability is log-concave in tau, so the
// feasible tau form a closed interval. The optimum is the endpoint selected
// by the sign of the objective's component along b.
struct ScalarReduction {
    std::vector<double> b;  // base direction in u-space
    std::vector<double> s;  // per-constraint scale: row_m = s_m * b
    double gamma = 0.0;     // c = gamma * b
};

double scalar_phi(const CovMatrix& sub, const std::vector<double>& s, double tau) {
    std::vector<double> t(s.size());
    for (size_t m = 0; m < s.size(); ++m) t[m] = s[m] * tau;
    return orthant(sub, t);
}

// Finds the feasible-interval endpoint on the side where `increasing` says the
// probability rises through the target. lo must be infeasible, hi feasible
// (or the reverse for a right endpoint, which callers encode by flipping tau).
double scalar_endpoint(const CovMatrix& sub, const std::vector<double>& s, double target,
                       double lo, double hi, double scale) {
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double p = scalar_phi(sub, s, mid);
        if (p >= target)
            hi = mid;
        else
            lo = mid;
        if (hi - lo <= std::max(1e-13 * scale, 4.0 * std::numeric_limits<double>::epsilon() *
                                                   std::max(std::abs(lo), std::abs(hi))))
            break;
    }
    return hi;  // the feasible side
}

std::vector<double> solve_scalar(const ScalarReduction& red, const CovMatrix& sub, double eps,
                                 double q) {
    const double target = 1.0 - eps;
    const auto& s = red.s;
    const bool all_nonneg = std::all_of(s.begin(), s.end(), [](double v) { return v >= 0.0; });
    const bool all_nonpos = std::all_of(s.begin(), s.end(), [](double v) { return v <= 0.0; });

    double smax = 0.0, sigmax = 0.0;
    for (size_t m = 0; m < s.size(); ++m) {
        smax = std::max(smax, std::abs(s[m]));
        sigmax = std::max(sigmax, std::sqrt(std::max(sub(static_cast<int>(m),
                                                         static_cast<int>(m)), 0.0)));
    }
    const double scale = (sigmax * (std::abs(q) + 12.0) + 1.0) / std::max(smax, 1e-30);

    double tau_lo = -std::numeric_limits<double>::infinity();
    double tau_hi = std::numeric_limits<double>::infinity();

    auto find_left = [&]() {
        // smallest feasible tau; requires phi nondecreasing on the left flank
        double hi = 0.0;
        if (scalar_phi(sub, s, hi) < target) {
            double step = scale;
            int guard = 0;
            while (scalar_phi(sub, s, hi) < target) {
                hi += step;
                step *= 2.0;
                if (++guard > 200)
                    throw InfeasibleError("the chance constraint never reaches its target");
            }
        }
        double lo = hi - scale;
        int guard = 0;
        while (scalar_phi(sub, s, lo) >= target) {
            hi = lo;
            lo -= scale * std::pow(2.0, guard);
            if (++guard > 200) return -std::numeric_limits<double>::infinity();
        }
        return scalar_endpoint(sub, s, target, lo, hi, scale);
    };

    if (all_nonneg) {
        tau_lo = find_left();
    } else if (all_nonpos) {
        // mirror problem in -tau
        ScalarReduction mir = red;
        for (double& v : mir.s) v = -v;
        std::vector<double> u = solve_scalar({mir.b, mir.s, -red.gamma}, sub, eps, q);
        for (double& v : u) v = -v;
        return u;
    } else {
        // mixed signs: phi -> 0 at both ends; log-concavity makes it unimodal.
        // Locate the peak by golden section on an expanding symmetric range.
        double T = scale;
        int guard = 0;
        while ((scalar_phi(sub, s, -T) > 1e-15 || scalar_phi(sub, s, T) > 1e-15) && guard < 80) {
            T *= 2.0;
            ++guard;
        }
        const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
        double a = -T, b = T;
        double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
        double f1 = scalar_phi(sub, s, x1), f2 = scalar_phi(sub, s, x2);
        for (int it = 0; it < 300 && (b - a) > 1e-12 * scale; ++it) {
            if (f1 < f2) {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + gr * (b - a);
                f2 = scalar_phi(sub, s, x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - gr * (b - a);
                f1 = scalar_phi(sub, s, x1);
            }
        }
        const double peak = 0.5 * (a + b);
        const double pmax = scalar_phi(sub, s, peak);
        if (pmax < target)
            throw InfeasibleError("the chance constraint never reaches its target");
        // left endpoint in [-T, peak], right endpoint mirrored
        tau_lo = scalar_endpoint(sub, s, target, peak - 2.0 * (peak + T) - scale, peak, scale);
        {
            std::vector<double> neg(s.size());
            for (size_t m = 0; m < s.size(); ++m) neg[m] = -s[m];
            const double left_of_mirror =
                scalar_endpoint(sub, neg, target, -(peak + 2.0 * (T - peak) + scale), -peak, scale);
            tau_hi = -left_of_mirror;
        }
    }

    double tau;
    const double gtol = kMultTol * std::max(1.0, std::abs(red.gamma));
    if (red.gamma > gtol) {
        tau = tau_lo;
        if (!std::isfinite(tau))
            throw InfeasibleError("objective is unbounded below along the constraint line");
    } else if (red.gamma < -gtol) {
        tau = tau_hi;
        if (!std::isfinite(tau))
            throw InfeasibleError("objective is unbounded below along the constraint line");
    } else {
        tau = std::isfinite(tau_lo) ? tau_lo : (std::isfinite(tau_hi) ? tau_hi : 0.0);
    }

    const double b2 = dot(red.b, red.b);
    std::vector<double> u(red.b.size());
    for (size_t i = 0; i < u.size(); ++i) u[i] = red.b[i] * tau / b2;
    return u;
}

// ---------------------------------------------------------------------------
// Gaussian helpers for the analytic Karush-Kuhn-Tucker conditions. The
// orthant probability's partial derivative in one threshold is the marginal
// density there times the conditional probability of the remaining
// constraints, all available in closed form, which lets the smooth branches
// drive the tangency condition itself to tolerance instead of minimizing a
// numerically jittery objective.
double std_normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi); }
double std_normal_cdf(double x) { return 1.0 - q_func(x); }

// d/dti P(Zi <= ti, Zj <= tj) for the 2x2 covariance `pair`.
double pair_partial(const CovMatrix& pair, int which, double ti, double tj) {
    const double si = sigma_of(pair, which), sj = sigma_of(pair, 1 - which);
    if (si <= 0.0) return 0.0;  // an indicator constraint has no density term
    const double own = (which == 0) ? ti : tj;
    const double other = (which == 0) ? tj : ti;
    const double a = own / si;
    if (sj <= 0.0) return std_normal_pdf(a) / si * (other >= 0.0 ? 1.0 : 0.0);
    const double rho = pair(0, 1) / (si * sj);
    const double s = std::sqrt(std::max(1.0 - rho * rho, 1e-24));
    return std_normal_pdf(a) / si * std_normal_cdf((other / sj - rho * a) / s);
}

// d/dz_m P(Z <= z) for the 3x3 covariance V: density of the m-th component
// times the conditional bivariate orthant of the other two.
double triple_partial(const CovMatrix& V, int m, const double z[3]) {
    const double vm = V(m, m);
    if (vm <= 0.0) return 0.0;
    const int o0 = (m == 0) ? 1 : 0;
    const int o1 = (m == 2) ? 1 : 2;
    const double c0 = V(o0, m) / vm, c1 = V(o1, m) / vm;
    const double e00 = V(o0, o0) - V(o0, m) * V(m, o0) / vm;
    const double e01 = V(o0, o1) - V(o0, m) * V(m, o1) / vm;
    const double e11 = V(o1, o1) - V(o1, m) * V(m, o1) / vm;
    const CovMatrix cond{{std::max(e00, 0.0), e01}, {e01, std::max(e11, 0.0)}};
    const double sm = std::sqrt(vm);
    return std_normal_pdf(z[m] / sm) / sm *
           orthant(cond, {z[o0] - c0 * z[m], z[o1] - c1 * z[m]});
}

// Bisect the sign change of the tangency slope over (lo, +inf): `slope` is
// negative just right of lo (the objective still descends) and positive for
// large arguments. Returns the stationary point.
template <class S>
double kkt_bisect(S&& slope, double lo, double scale, const char* what) {
    double h = 1e-7 * scale;
    double xl = lo + h;
    double sl = slope(xl);
    int shrink = 0;
    while (sl >= 0.0 && shrink < 40) {
        // stationary point hugs the left barrier: tighten the toehold
        h *= 0.25;
        xl = lo + h;
        sl = slope(xl);
        ++shrink;
    }
    if (sl >= 0.0) return xl;  // minimum at the barrier edge within resolution
    double step = h;
    double xr = xl;
    int guard = 0;
    do {
        xl = xr;
        xr = xl + step;
        step *= 2.0;
        if (++guard > 160) throw NonconvergenceError(what, slope(xr));
    } while (slope(xr) < 0.0);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (xl + xr);
        if (slope(mid) < 0.0)
            xl = mid;
        else
            xr = mid;
        if (xr - xl <= std::max(1e-13 * scale, 4.0 * std::numeric_limits<double>::epsilon() *
                                                   std::max(std::abs(xl), std::abs(xr))))
            break;
    }
    return 0.5 * (xl + xr);
}

// Monotone root: p(t) nondecreasing in t with p(lo) <= target and
// p(t) -> sup > target. Expands the bracket upward then bisects to a width
// that keeps downstream difference quotients quiet.
template <class P>
double rising_root(P&& p, double lo, double start_step, double target, double scale,
                   const char* what) {
    double hi = lo, step = std::max(start_step, 1e-12 * scale);
    int guard = 0;
    while (p(hi) < target) {
        hi += step;
        step *= 2.0;
        if (++guard > 200) throw NonconvergenceError(what, p(hi) - target);
    }
    for (int it = 0; it < 300; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (p(mid) < target)
            lo = mid;
        else
            hi = mid;
        if (hi - lo <= std::max(1e-13 * scale, 4.0 * std::numeric_limits<double>::epsilon() *
                                                   std::max(std::abs(lo), std::abs(hi))))
            break;
    }
    return hi;
}

struct MultiplierSplit {
    Eigen::VectorXd gamma;  // objective weights on the reduced thresholds
};

// Decompose c over the given rows (least squares); a residual means the
// objective moves along directions the constraints cannot see, i.e. it is
// unbounded below.
MultiplierSplit reduce_objective(const std::vector<const std::vector<double>*>& rows,
                                 const std::vector<double>& c) {
    const int k = static_cast<int>(c.size());
    const int r = static_cast<int>(rows.size());
    Eigen::MatrixXd Bt(k, r);
    Eigen::VectorXd cv(k);
    for (int i = 0; i < k; ++i) {
        cv(i) = c[i];
        for (int j = 0; j < r; ++j) Bt(i, j) = (*rows[j])[i];
    }
    Eigen::VectorXd gamma = Bt.colPivHouseholderQr().solve(cv);
    const double resid = (Bt * gamma - cv).norm();
    if (resid > kSpanTol * std::max(1.0, cv.norm()))
        throw InfeasibleError(
            "objective is unbounded below: the weight vector has a component outside the row "
            "space of the active constraints");
    MultiplierSplit out;
    out.gamma = gamma;
    return out;
}

// Minimum-norm u with row_j . u = t_j for the given rows.
std::vector<double> lift_thresholds(const std::vector<const std::vector<double>*>& rows,
                                    const Eigen::VectorXd& t) {
    const int k = static_cast<int>(rows[0]->size());
    const int r = static_cast<int>(rows.size());
    Eigen::MatrixXd B(r, k);
    for (int j = 0; j < r; ++j)
        for (int i = 0; i < k; ++i) B(j, i) = (*rows[j])[i];
    Eigen::VectorXd u = B.transpose() * (B * B.transpose()).ldlt().solve(t);
    return std::vector<double>(u.data(), u.data() + k);
}

void check_attained(double g1, double g2, const char* branch) {
    const double tol = kMultTol * std::max({1.0, std::abs(g1), std::abs(g2)});
    if (g1 < -tol || g2 < -tol)
        throw InfeasibleError(std::string("objective is unbounded below on the ") + branch);
    if (g1 <= tol || g2 <= tol)
        throw InfeasibleError(
            std::string("the infimum is approached but never attained on the ") + branch +
            "; use the aligned closed form instead");
}

// ---------------------------------------------------------------------------
// Two active constraints with independent rows: optimum on the equality curve
// P(Z_i <= t_i, Z_j <= t_j) = 1 - eps. Degenerate pairs (a zero variance or
// correlation 1) make the feasible set an exact quadrant with corner
// (sigma_i q, sigma_j q).
std::vector<double> solve_curve(const std::vector<const std::vector<double>*>& rows,
                                const std::vector<double>& c, const CovMatrix& pair, double eps,
                                double q) {
    const double si = sigma_of(pair, 0), sj = sigma_of(pair, 1);
    const double target = 1.0 - eps;
    const MultiplierSplit ms = reduce_objective(rows, c);
    const double gi = ms.gamma(0), gj = ms.gamma(1);

    const double sscale = std::max({si, sj, 1e-12});
    const double rho = (si > 1e-12 * sscale && sj > 1e-12 * sscale)
                           ? pair(0, 1) / (si * sj)
                           : 1.0;  // a deterministic component behaves like the corner case
    if (si <= 1e-12 * sscale || sj <= 1e-12 * sscale || rho >= kDegenerateRho) {
        const double tol = kMultTol * std::max({1.0, std::abs(gi), std::abs(gj)});
        if (gi < -tol || gj < -tol)
            throw InfeasibleError("objective is unbounded below on the degenerate pair branch");
        Eigen::VectorXd t(2);
        t << si * q, sj * q;
        return lift_thresholds(rows, t);
    }

    check_attained(gi, gj, "pair branch");

    const double scale = (si + sj) * (std::abs(q) + 6.0) + 1.0;
    auto tj_of = [&](double ti) {
        auto p = [&](double tj) { return orthant(pair, {ti, tj}); };
        return rising_root(p, sj * q, 0.25 * scale, target,
                           scale, "inner bisection on the pair curve failed to bracket");
    };
    // tangency condition along the curve: d(objective)/dti changes sign where
    // gi * dP/dtj = gj * dP/dti
    auto slope = [&](double ti) {
        const double tj = tj_of(ti);
        return gi * pair_partial(pair, 1, ti, tj) - gj * pair_partial(pair, 0, ti, tj);
    };
    const double ti_star =
        kkt_bisect(slope, si * q, scale, "pair-curve tangency search failed to bracket");
    const double tj_star = tj_of(ti_star);
    Eigen::VectorXd t(2);
    t << ti_star, tj_star;

    // first-order certificate on the analytic gradient
    const double pj = pair_partial(pair, 1, ti_star, tj_star);
    const double pi = pair_partial(pair, 0, ti_star, tj_star);
    const double grad = gi - gj * (pj > 0.0 ? pi / pj : 0.0);
    const double slope_budget = 1e-7 * std::max(1.0, std::abs(gi) + std::abs(gj));
    if (std::abs(grad) > slope_budget)
        throw NonconvergenceError("pair-curve optimum failed its first-order check",
                                  std::abs(grad));
    return lift_thresholds(rows, t);
}

// ---------------------------------------------------------------------------
// All three constraints active (row space of dimension two): optimum on the
// surface P(Z_1 <= t_1, Z_2 <= t_2, Z_3 <= t_1 + t_2) = 1 - eps, parametrized
// by (t_1, t_2).
std::vector<double> solve_surface(const std::vector<double>& a1, const std::vector<double>& a2,
                                  const std::vector<double>& c, const CovMatrix& V, double eps,
                                  double q) {
    const double s1 = sigma_of(V, 0), s2 = sigma_of(V, 1), s3 = sigma_of(V, 2);
    const double target = 1.0 - eps;
    const std::vector<const std::vector<double>*> rows{&a1, &a2};
    const MultiplierSplit ms = reduce_objective(rows, c);
    const double g1 = ms.gamma(0), g2 = ms.gamma(1);

    if (V.rank <= 1) {
        // one-dimensional fluctuations: the feasible set is an exact quadrant
        // whenever the corner satisfies the constraint, which we verify
        const double tol = kMultTol * std::max({1.0, std::abs(g1), std::abs(g2)});
        if (g1 < -tol || g2 < -tol)
            throw InfeasibleError("objective is unbounded below on the degenerate surface branch");
        const double p = orthant(V, {s1 * q, s2 * q, (s1 + s2) * q});
        if (std::abs(p - target) <= 10.0 * kResidualTol) {
            Eigen::VectorXd t(2);
            t << s1 * q, s2 * q;
            return lift_thresholds(rows, t);
        }
        // fall through: the rank-one fluctuation is not aligned with the
        // corner, so treat it like the generic surface
    }

    check_attained(g1, g2, "surface branch");

    const double scale = (s1 + s2 + s3) * (std::abs(q) + 6.0) + 1.0;
    auto t2_of = [&](double t1) {
        auto p = [&](double t2) { return orthant(V, {t1, t2, t1 + t2}); };
        const double lo = std::max(s2 * q, s3 * q - t1);
        return rising_root(p, lo, 0.25 * scale, target,
                           scale, "inner bisection on the surface failed to bracket");
    };
    // moving along the surface trades t2 against t1 at rate -(P1+P3)/(P2+P3)
    auto partial_sums = [&](double t1, double t2, double& d1, double& d2) {
        const double z[3] = {t1, t2, t1 + t2};
        const double p1 = triple_partial(V, 0, z);
        const double p2 = triple_partial(V, 1, z);
        const double p3 = triple_partial(V, 2, z);
        d1 = p1 + p3;
        d2 = p2 + p3;
    };
    auto slope = [&](double t1) {
        double d1, d2;
        partial_sums(t1, t2_of(t1), d1, d2);
        return g1 * d2 - g2 * d1;
    };
    const double t1_star =
        kkt_bisect(slope, s1 * q, scale, "surface tangency search failed to bracket");
    const double t2_star = t2_of(t1_star);
    Eigen::VectorXd t(2);
    t << t1_star, t2_star;

    double d1, d2;
    partial_sums(t1_star, t2_star, d1, d2);
    const double grad = g1 - g2 * (d2 > 0.0 ? d1 / d2 : 0.0);
    const double slope_budget = 1e-7 * std::max(1.0, std::abs(g1) + std::abs(g2));
    if (std::abs(grad) > slope_budget)
        throw NonconvergenceError("surface optimum failed its first-order check",
                                  std::abs(grad));
    return lift_thresholds(rows, t);
}

void validate_problem(const GenDispProblem& p) {
    const size_t k = p.c.size();
    if (k == 0) throw std::invalid_argument("objective weight vector is empty");
    if (p.a1.size() != k || p.a2.size() != k)
        throw std::invalid_argument("constraint rows must match the weight vector length");
    for (double v : p.c) {
        if (!std::isfinite(v)) throw std::invalid_argument("objective weights must be finite");
        if (v < 0.0) throw std::invalid_argument("objective weights must be nonnegative");
    }
    for (double v : p.a1)
        if (!std::isfinite(v)) throw std::invalid_argument("constraint rows must be finite");
    for (double v : p.a2)
        if (!std::isfinite(v)) throw std::invalid_argument("constraint rows must be finite");
    if (p.active.empty()) throw std::invalid_argument("active set is empty");
    std::vector<int> act = p.active;
    std::sort(act.begin(), act.end());
    if (std::adjacent_find(act.begin(), act.end()) != act.end())
        throw std::invalid_argument("active set has repeated entries");
    for (int id : act)
        if (id < 1 || id > 3) throw std::invalid_argument("active ids must be 1, 2 or 3");
    if (p.V.dim != 3) throw std::invalid_argument("dispersion matrix must be 3x3");
    if (!(p.epsilon > 0.0 && p.epsilon < 1.0))
        throw std::invalid_argument("error budget must lie strictly inside (0,1)");
}

}  // namespace

std::vector<double> solve_gen_disp(const GenDispProblem& p) {
    validate_problem(p);
    std::vector<int> act = p.active;
    std::sort(act.begin(), act.end());
    const size_t k = p.c.size();

    std::vector<double> a3(k);
    for (size_t i = 0; i < k; ++i) a3[i] = p.a1[i] + p.a2[i];
    std::vector<std::vector<double>> rows;
    std::vector<int> sel0;
    for (int id : act) {
        rows.push_back(id == 1 ? p.a1 : (id == 2 ? p.a2 : a3));
        sel0.push_back(id - 1);
        if (dot(rows.back(), rows.back()) == 0.0)
            throw std::invalid_argument("an active constraint row is identically zero");
    }

    const double q = q_inv(p.epsilon);

    if (rows.size() == 1) return single_constraint(p.c, rows[0], sigma_of(p.V, sel0[0]), q);

    Eigen::MatrixXd R(static_cast<int>(rows.size()), static_cast<int>(k));
    for (size_t j = 0; j < rows.size(); ++j)
        for (size_t i = 0; i < k; ++i) R(static_cast<int>(j), static_cast<int>(i)) = rows[j][i];
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(R);
    qr.setThreshold(1e-10);
    const int rank = static_cast<int>(qr.rank());

    if (rank <= 1) {
        // every active row is a multiple of the largest one
        size_t ib = 0;
        double best = -1.0;
        for (size_t j = 0; j < rows.size(); ++j) {
            const double n2 = dot(rows[j], rows[j]);
            if (n2 > best) {
                best = n2;
                ib = j;
            }
        }
        ScalarReduction red;
        red.b = rows[ib];
        const double b2 = dot(red.b, red.b);
        red.s.resize(rows.size());
        for (size_t j = 0; j < rows.size(); ++j) red.s[j] = dot(rows[j], red.b) / b2;
        red.gamma = dot(p.c, red.b) / b2;
        double resid2 = 0.0;
        for (size_t i = 0; i < k; ++i) {
            const double r = p.c[i] - red.gamma * red.b[i];
            resid2 += r * r;
        }
        if (resid2 > kSpanTol * kSpanTol * std::max(dot(p.c, p.c), 1.0))
            throw InfeasibleError(
                "objective is unbounded below: the weight vector has a component outside the "
                "common direction of the active constraints");
        return solve_scalar(red, sub_cov(p.V, sel0), p.epsilon, q);
    }

    if (rows.size() == 2) {
        const std::vector<const std::vector<double>*> rp{&rows[0], &rows[1]};
        return solve_curve(rp, p.c, sub_cov(p.V, sel0), p.epsilon, q);
    }

    return solve_surface(p.a1, p.a2, p.c, p.V, p.epsilon, q);
}

LocalDispersionResult local_dispersion(const EntropyTriple& H, const CovMatrix& V, double R1_star,
                                       double R2_star, double theta, double epsilon) {
    if (V.dim != 3) throw std::invalid_argument("dispersion matrix must be 3x3");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("error budget must lie strictly inside (0,1)");
    if (!std::isfinite(R1_star) || !std::isfinite(R2_star) || !std::isfinite(theta))
        throw std::invalid_argument("rates and angle must be finite");

    const double H1 = H.h12 - H.h2g1;  // marginal entropy of the first source
    const double H2 = H.h12 - H.h1g2;
    auto near = [](double a, double b) { return std::abs(a - b) <= kClassifyTol; };

    BoundaryCase bc;
    if (near(R1_star, H.h1g2) && near(R2_star, H2))
        bc = BoundaryCase::corner_min_r1;
    else if (near(R1_star, H1) && near(R2_star, H.h2g1))
        bc = BoundaryCase::corner_min_r2;
    else if (near(R1_star, H.h1g2) && R2_star > H2)
        bc = BoundaryCase::vertical;
    else if (near(R2_star, H.h2g1) && R1_star > H1)
        bc = BoundaryCase::horizontal;
    else if (near(R1_star + R2_star, H.h12) && R1_star > H.h1g2 && R2_star > H.h2g1)
        bc = BoundaryCase::sum_rate;
    else
        throw std::invalid_argument("rate pair is not on the first-order boundary");

    double th = std::remainder(theta, 2.0 * kPi);
    if (th <= -kPi) th += 2.0 * kPi;
    const double dc = std::cos(th), ds = std::sin(th);

    LocalDispersionResult out;
    out.case_id = bc;

    auto parallel = [&]() {
        out.F = std::numeric_limits<double>::infinity();
        out.boundary_parallel = true;
        return out;
    };

    switch (bc) {
        case BoundaryCase::vertical:
            if (dc <= kAngleTol) return parallel();
            out.F = V(0, 0) / (dc * dc);
            return out;
        case BoundaryCase::horizontal:
            if (ds <= kAngleTol) return parallel();
            out.F = V(1, 1) / (ds * ds);
            return out;
        case BoundaryCase::sum_rate:
            if (dc + ds <= kAngleTol) return parallel();
            out.F = V(2, 2) / ((dc + ds) * (dc + ds));
            return out;
        case BoundaryCase::corner_min_r1:
        case BoundaryCase::corner_min_r2:
            break;
    }

    // corner: the approach must make progress against both the touching faces
    const double ci = (bc == BoundaryCase::corner_min_r1) ? dc : ds;
    const double c3 = dc + ds;
    if (ci <= kAngleTol || c3 <= kAngleTol) return parallel();

    const double q = q_inv(epsilon);
    if (std::abs(q) < 1e-12)
        throw std::invalid_argument(
            "corner dispersion is indeterminate at epsilon = 1/2: the defining equation no "
            "longer involves the coefficient");

    const int i0 = (bc == BoundaryCase::corner_min_r1) ? 0 : 1;
    const CovMatrix pair = sub_cov(V, {i0, 2});
    const double target = 1.0 - epsilon;
    auto prob = [&](double F) {
        const double r = std::sqrt(F);
        return orthant(pair, {r * ci * q, r * c3 * q});
    };

    const bool increasing = q > 0.0;
    const double p0 = prob(0.0);
    if (increasing ? p0 >= target : p0 <= target) {
        if (increasing && p0 >= target) {
            // only possible when every fluctuation in sight is degenerate
            out.F = 0.0;
            out.residual = std::max(0.0, target - p0);
            return out;
        }
        throw NonconvergenceError(
            "corner equation has no root: the zero-coefficient probability already falls short "
            "of the error budget",
            p0 - target);
    }

    double Fhi = std::max({V(0, 0), V(1, 1), V(2, 2), 1.0});
    int guard = 0;
    while (increasing ? prob(Fhi) < target : prob(Fhi) > target) {
        Fhi *= 2.0;
        if (++guard > 200)
            throw NonconvergenceError("corner equation bracket expansion failed",
                                      prob(Fhi) - target);
    }
    double Flo = 0.0;
    double F = 0.5 * Fhi, pF = prob(F);
    for (int it = 0; it < 400; ++it) {
        F = 0.5 * (Flo + Fhi);
        pF = prob(F);
        if (std::abs(pF - target) <= 1e-13) break;
        const bool below = increasing ? pF < target : pF > target;
        if (below)
            Flo = F;
        else
            Fhi = F;
        if (Fhi - Flo <= 1e-15 * std::max(Fhi, 1e-300)) break;
    }
    out.F = F;
    out.residual = std::abs(pF - target);
    if (out.residual > kResidualTol)
        throw NonconvergenceError("corner equation bisection left too large a residual",
                                  out.residual);
    return out;
}

double sum_rate_dispersion(const CovMatrix& V, double alpha, double beta, double epsilon) {
    if (V.dim != 3) throw std::invalid_argument("dispersion matrix must be 3x3");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("error budget must lie strictly inside (0,1)");
    if (!std::isfinite(alpha) || !std::isfinite(beta) || alpha < 0.0 || beta < 0.0)
        throw std::invalid_argument("rate weights must be finite and nonnegative");
    const double wmax = std::max(alpha, beta);
    if (wmax == 0.0) throw std::invalid_argument("rate weights must not both vanish");

    // aligned cases have closed forms for every error budget; the window around
    // them is wider than the solver's multiplier resolution on purpose, and the
    // value is continuous across it
    if (beta <= 1e-10 * wmax) return alpha * alpha * V(0, 0);
    if (alpha <= 1e-10 * wmax) return beta * beta * V(1, 1);
    if (std::abs(alpha - beta) <= 1e-10 * wmax) {
        const double a = 0.5 * (alpha + beta);
        return a * a * V(2, 2);
    }

    const double q = q_inv(epsilon);
    if (std::abs(q) < 1e-12)
        throw std::invalid_argument(
            "weighted sum-rate dispersion is indeterminate at epsilon = 1/2 for distinct "
            "weights");

    GenDispProblem gp;
    gp.c = {alpha, beta};
    gp.a1 = {1.0, 0.0};
    gp.a2 = {0.0, 1.0};
    gp.active = (alpha > beta) ? std::vector<int>{1, 3} : std::vector<int>{2, 3};
    gp.V = V;
    gp.epsilon = epsilon;
    const std::vector<double> u = solve_gen_disp(gp);
    const double val = alpha * u[0] + beta * u[1];
    return (val / q) * (val / q);
}

}  // namespace dispersia
