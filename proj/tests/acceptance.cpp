// Acceptance gate: nine end-to-end checks, one PASS/FAIL line each, nonzero
// exit when any fails. Each check states its tolerance inline; the timed ones
// also enforce a wall-clock budget.

#include "dispersia/exponents.hpp"
#include "dispersia/net_stats.hpp"
#include "dispersia/oracles.hpp"
#include "dispersia/probkit.hpp"
#include "dispersia/regions.hpp"
#include "dispersia/solvers.hpp"
#include "dispersia/sw_stats.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

using namespace dispersia;

namespace {

constexpr double kPi = 3.14159265358979323846;

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, pattern);
    std::vsnprintf(buf, sizeof buf, pattern, ap);
    va_end(ap);
    return buf;
}

// 1. Blocklength needed for 10% rate overhead on the skewed binary source:
// the gaussian estimate lands near 9.9e3, the exponent estimate near 1.6e4,
// and the first saves 25..50% relative to the second. Budget 10 s.
bool check_blocklengths(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const JointPMF2 pmf(2, 2, {0.7, 0.1, 0.1, 0.1});
    const auto [H, disp] = sw_statistics(pmf);
    const double R1 = 1.1 * H.h1g2;
    const double R2 = 1.1 * H.h2g1;
    const long long nd = blocklength_dispersion(H, disp.V, 1e-3, R1, R2);
    const long long ne = blocklength_exponent(pmf, 1e-3, R1, R2);
    const double saving = static_cast<double>(ne - nd) / static_cast<double>(ne);
    const double secs = seconds_since(t0);
    detail = fmt("n_D=%lld n_E=%lld saving=%.1f%% (%.2fs)", nd, ne, 100.0 * saving, secs);
    return std::abs(static_cast<double>(nd) - 9.9e3) <= 0.10 * 9.9e3 &&
           std::abs(static_cast<double>(ne) - 1.6e4) <= 0.10 * 1.6e4 && saving >= 0.25 &&
           saving <= 0.50 && secs < 10.0;
}

// 2. For the symmetric binary source the fluctuation is one-dimensional, so
// the traced 3-D boundary must equal the scalar-backoff region
// R >= H + sqrt(V_z/n) Qinv(eps) componentwise, within 1e-6 bits.
bool check_rank_one_boundary(std::string& detail) {
    double worst = 0.0;
    bool ok = true;
    auto trace_and_compare = [&](double zeta, long long n, double eps, RegionSide side) {
        const auto [pmf, vz] = dsbs(zeta);
        const auto [H, disp] = sw_statistics(pmf);
        const double d = std::sqrt(vz / static_cast<double>(n)) * q_inv(eps);
        const double base = H.h1g2 + d;
        const std::vector<double> grid = {base - 0.01, base + 0.01, base + 0.05, base + 0.1,
                                          base + 0.2,  base + 0.4,  base + 0.8};
        RegionQuery q;
        q.n = n;
        q.epsilon = eps;
        q.correction = CorrectionMode::gaussian_only;
        q.side = side;
        const auto b = trace_boundary(H, disp, q, grid);
        // the first grid point sits below the minimal R1 and must be dropped
        if (b.points.size() != grid.size() - 1) {
            ok = false;
            return;
        }
        for (const auto& pt : b.points) {
            const double want = std::max(H.h2g1 + d, H.h12 + d - pt[0]);
            worst = std::max(worst, std::abs(pt[1] - want));
        }
    };
    for (double zeta : {0.1, 0.25, 0.4}) {
        for (long long n : {1000LL, 100000LL}) {
            for (double eps : {0.01, 0.1}) {
                trace_and_compare(zeta, n, eps, RegionSide::sw_inner);
            }
        }
    }
    // without log terms the outer trace collapses onto the same curve
    trace_and_compare(0.25, 1000, 0.1, RegionSide::sw_outer);
    detail = fmt("worst deviation %.2e bits", worst);
    return ok && worst <= 1e-6;
}

// 3. Weighted sum-rate coefficients hit their three closed forms on random
// dependent sources (1e-6 relative), with the expected variances recomputed
// here by direct moment sums so the comparison does not reuse the library's
// covariance pipeline. Then a corner coefficient with the correlations
// pushed to 1 - 1e-7 recovers the rank-one closed form V_z / cos^2(theta)
// within 1e-3 relative.
bool check_solver_closed_forms(std::string& detail) {
    testrng::Stream rng(0xACC3u);
    double worst_g = 0.0;
    int made = 0;
    while (made < 10) {
        const JointPMF2 pmf(2, 2, rng.pmf(4, 0.02));
        if (!pmf.dependent) continue;
        ++made;
        const auto [H, disp] = sw_statistics(pmf);

        const auto q1 = pmf.marginal1();
        const auto q2 = pmf.marginal2();
        double mean[3] = {0.0, 0.0, 0.0};
        double sq[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < 2; ++a) {
            for (int b = 0; b < 2; ++b) {
                const double p = pmf.at(a, b);
                const double d[3] = {-std::log2(p / q2[b]), -std::log2(p / q1[a]),
                                     -std::log2(p)};
                for (int t = 0; t < 3; ++t) {
                    mean[t] += p * d[t];
                    sq[t] += p * d[t] * d[t];
                }
            }
        }
        const double var[3] = {sq[0] - mean[0] * mean[0], sq[1] - mean[1] * mean[1],
                               sq[2] - mean[2] * mean[2]};

        const double alpha = rng.uniform(0.2, 2.0);
        const double beta = rng.uniform(0.2, 2.0);
        const double eps = rng.uniform(0.02, 0.45);
        const double cases[3][2] = {{alpha, 0.0}, {0.0, beta}, {alpha, alpha}};
        const double want[3] = {alpha * alpha * var[0], beta * beta * var[1],
                                alpha * alpha * var[2]};
        for (int c = 0; c < 3; ++c) {
            const double g = sum_rate_dispersion(disp.V, cases[c][0], cases[c][1], eps);
            worst_g = std::max(worst_g, std::abs(g - want[c]) / want[c]);
        }
    }

    const auto [pmf, vz] = dsbs(0.25);
    const auto [H, disp] = sw_statistics(pmf);
    const double rho = 1.0 - 1e-7;
    const double m[9] = {vz, vz * rho, vz * rho, vz * rho, vz,       vz * rho,
                         vz * rho,    vz * rho, vz};
    const CovMatrix near_singular(3, m);
    const double H2 = H.h12 - H.h1g2;
    double worst_f = 0.0;
    for (double th : {0.2, 0.5, 0.8, 1.1, 1.3}) {
        for (double eps : {1e-3, 0.1}) {
            const auto r = local_dispersion(H, near_singular, H.h1g2, H2, th, eps);
            const double want = vz / (std::cos(th) * std::cos(th));
            worst_f = std::max(worst_f, std::abs(r.F - want) / want);
        }
    }
    detail = fmt("sum-rate rel %.2e, corner rel %.2e", worst_g, worst_f);
    return worst_g <= 1e-6 && worst_f <= 1e-3;
}

// 4. The tilted exponents vanish at rho = 0 with slope R - H (1e-5 absolute)
// and curvature -V ln2 on the matching diagonal (1e-3 relative), estimated by
// Richardson-extrapolated one-sided differences.
bool check_exponent_derivatives(std::string& detail) {
    testrng::Stream rng(0xACC4u);
    double worst1 = 0.0, worst2 = 0.0;
    for (int s = 0; s < 10; ++s) {
        const JointPMF2 pmf(2, 2, rng.pmf(4, 0.02));
        const auto [H, disp] = sw_statistics(pmf);
        const double R1 = H.h1g2 + rng.uniform(0.05, 0.5);
        const double R2 = H.h2g1 + rng.uniform(0.05, 0.5);
        const struct {
            ExponentKind kind;
            double slope;
            double variance;
        } rows[3] = {{ExponentKind::e1g2, R1 - H.h1g2, disp.V(0, 0)},
                     {ExponentKind::e2g1, R2 - H.h2g1, disp.V(1, 1)},
                     {ExponentKind::e12, R1 + R2 - H.h12, disp.V(2, 2)}};
        for (const auto& row : rows) {
            auto f = [&](double r) { return gallager_e(pmf, row.kind, R1, R2, r); };
            auto d1 = [&](double h) { return (4.0 * f(h) - f(2.0 * h)) / (2.0 * h); };
            auto d2 = [&](double h) {
                return (-5.0 * f(h) + 4.0 * f(2.0 * h) - f(3.0 * h)) / (h * h);
            };
            const double h = 1e-3;
            const double slope = (4.0 * d1(h) - d1(2.0 * h)) / 3.0;
            const double curve = (4.0 * d2(h) - d2(2.0 * h)) / 3.0;
            const double want_curve = -row.variance * std::log(2.0);
            worst1 = std::max(worst1, std::abs(slope - row.slope));
            worst2 = std::max(worst2, std::abs(curve - want_curve) / std::abs(want_curve));
        }
    }
    detail = fmt("slope abs %.2e, curvature rel %.2e", worst1, worst2);
    return worst1 <= 1e-5 && worst2 <= 1e-3;
}

// 5. Exhaustive type enumeration at n = 20 agrees with a 1e5-trial sampler
// within four standard errors at five thresholds per source. Budget 60 s.
// The plug-in entropies are bounded by the log alphabet sizes, so the
// offsets stay small enough to keep every threshold strictly interior
// (a threshold past the cap makes both estimates exactly 1 with zero
// standard error).
bool check_oracle_agreement(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<JointPMF2> sources = {dsbs(0.25).first,
                                            JointPMF2(2, 2, {0.7, 0.1, 0.1, 0.1})};
    double worst_pull = 0.0;
    bool ok = true;
    std::uint64_t seed = 7;
    for (const auto& pmf : sources) {
        const auto [H, disp] = sw_statistics(pmf);
        for (double c : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
            const std::array<double, 3> z = {
                H.h1g2 + c * std::sqrt(disp.V(0, 0) / 20.0),
                H.h2g1 + c * std::sqrt(disp.V(1, 1) / 20.0),
                H.h12 + c * std::sqrt(disp.V(2, 2) / 20.0)};
            const double exact = exact_entropy_cdf(pmf, 20, z);
            SimConfig cfg;
            cfg.n = 20;
            cfg.trials = 100000;
            cfg.seed = seed++;
            cfg.shards = 4;
            const SimReport rep = mc_entropy_cdf(pmf, cfg, z);
            if (rep.std_error <= 0.0) {
                ok = false;
                continue;
            }
            worst_pull = std::max(worst_pull, std::abs(exact - rep.estimate) / rep.std_error);
        }
    }
    const double secs = seconds_since(t0);
    detail = fmt("worst pull %.2f se (%.2fs)", worst_pull, secs);
    return ok && worst_pull <= 4.0 && secs < 60.0;
}

// 6. The exact probability at the gaussian 90th-percentile threshold drifts
// toward 0.9 as n grows, and both gaps respect the normal-approximation
// error bound with the rank-reduced smallest eigenvalue.
bool check_gaussian_gap(std::string& detail) {
    const auto [pmf, vz] = dsbs(0.25);
    const auto [H, disp] = sw_statistics(pmf);
    auto gap_at = [&](long long n) {
        const double d = std::sqrt(vz / static_cast<double>(n)) * q_inv(0.1);
        return std::abs(exact_entropy_cdf(pmf, n, {H.h1g2 + d, H.h2g1 + d, H.h12 + d}) - 0.9);
    };
    const double gap15 = gap_at(15);
    const double gap60 = gap_at(60);
    const double bound15 = berry_esseen_bound(1, disp.xi, vz, 15);
    const double bound60 = berry_esseen_bound(1, disp.xi, vz, 60);
    detail = fmt("gap15=%.4f<=%.2f gap60=%.4f<=%.2f", gap15, bound15, gap60, bound60);
    return gap60 < gap15 && gap15 <= bound15 && gap60 <= bound60;
}

// 7. Bivariate kernel against the arcsine law (1e-6) plus psi(1/2,0,0) = 1/3
// (1e-9), and trivariate orthant values against a 1e6-sample simulation
// within three standard errors on 20 random covariances.
bool check_orthant_probabilities(std::string& detail) {
    const double third = psi(0.5, 0.0, 0.0);
    if (std::abs(third - 1.0 / 3.0) > 1e-9) {
        detail = fmt("psi(0.5,0,0)=%.12f", third);
        return false;
    }

    testrng::Stream rng(0xACC7u);
    double worst_arc = 0.0;
    for (int i = 0; i < 20; ++i) {
        const double rho = rng.uniform(-0.98, 0.98);
        const double m[4] = {1.0, rho, rho, 1.0};
        const double p = mvn_lower_orthant(CovMatrix(2, m), {0.0, 0.0});
        const double want = 0.25 + std::asin(rho) / (2.0 * kPi);
        worst_arc = std::max(worst_arc, std::abs(p - want));
    }

    double worst_pull = 0.0;
    bool ok = true;
    for (int i = 0; i < 20; ++i) {
        const auto rc = testrng::random_cov3(rng);
        std::vector<double> z(3);
        for (int t = 0; t < 3; ++t) {
            z[t] = rng.uniform(0.1, 1.2) * std::sqrt(rc.sigma[t][t]);
        }
        const double exact = mvn_lower_orthant(CovMatrix(rc.sigma), z);
        long long hits = 0;
        const long long samples = 1000000;
        double draw[3];
        for (long long s = 0; s < samples; ++s) {
            rc.sample(rng, draw);
            if (draw[0] <= z[0] && draw[1] <= z[1] && draw[2] <= z[2]) ++hits;
        }
        const double phat = static_cast<double>(hits) / static_cast<double>(samples);
        const double se = std::sqrt(phat * (1.0 - phat) / static_cast<double>(samples));
        if (se <= 0.0) {
            ok = false;
            continue;
        }
        worst_pull = std::max(worst_pull, std::abs(exact - phat) / se);
    }
    detail = fmt("arcsine abs %.2e, trivariate pull %.2f se", worst_arc, worst_pull);
    return ok && worst_arc <= 1e-6 && worst_pull <= 3.0;
}

// 8. At the corner where the second rate is minimal, the directional
// coefficient over theta in (0.05, 3pi/4 - 0.05) falls then rises with a
// single interior minimum, diverges by 10x at the ends, and shifts by more
// than 1% when the error budget moves from 1e-3 to 0.1.
bool check_corner_angle_profile(std::string& detail) {
    const JointPMF2 pmf(2, 2, {0.7, 0.1, 0.1, 0.1});
    const auto [H, disp] = sw_statistics(pmf);
    const double H1 = H.h12 - H.h2g1;
    auto coeff = [&](double th, double eps) {
        return local_dispersion(H, disp.V, H1, H.h2g1, th, eps).F;
    };

    const int points = 60;
    const double lo = 0.05, hi = 3.0 * kPi / 4.0 - 0.05;
    bool shape_ok = true;
    for (double eps : {1e-3, 0.1}) {
        std::vector<double> vals(points);
        for (int k = 0; k < points; ++k) {
            const double th = lo + (hi - lo) * static_cast<double>(k) / (points - 1);
            vals[k] = coeff(th, eps);
        }
        const auto mn = std::min_element(vals.begin(), vals.end());
        const int k_star = static_cast<int>(mn - vals.begin());
        if (k_star <= 0 || k_star >= points - 1) shape_ok = false;
        for (int k = 0; k + 1 < points; ++k) {
            const bool decreasing = vals[k + 1] < vals[k];
            if ((k < k_star) != decreasing) shape_ok = false;
        }
        if (!(vals.front() > 10.0 * *mn && vals.back() > 10.0 * *mn)) shape_ok = false;
    }

    const double f_small = coeff(3.0 * kPi / 8.0, 1e-3);
    const double f_large = coeff(3.0 * kPi / 8.0, 0.1);
    const double rel = std::abs(f_small - f_large) / std::min(f_small, f_large);
    detail = fmt("mid-angle budget sensitivity %.2f%%", 100.0 * rel);
    return shape_ok && rel > 0.01;
}

// 9. Random binning at n = 400: rates 0.05 bits under both conditional
// entropies (the sum then also sits under the joint entropy) fail at least
// 90% of trials, while a point on the corrected inner boundary for
// eps = 0.1 stays within the converse-side allowance. At this blocklength
// the logarithmic shift exceeds the mutual-information gap, so the
// boundary's symmetric point is the corner where both conditional-rate
// constraints are tight and the sum constraint is slack. Budget 5 min.
bool check_binning_simulator(std::string& detail) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [pmf, vz] = dsbs(0.25);
    const auto [H, disp] = sw_statistics(pmf);

    SimConfig cfg;
    cfg.n = 400;
    cfg.trials = 2000;
    cfg.seed = 11;
    cfg.shards = 8;
    const SimReport under = binning_simulator(pmf, H.h1g2 - 0.05, H.h2g1 - 0.05, cfg);

    const double shift =
        *disp.nu * std::log2(400.0) / 400.0 + std::sqrt(vz / 400.0) * q_inv(0.1);
    const double R1 = H.h1g2 + shift;
    const double R2 = H.h2g1 + shift;
    RegionQuery q;
    q.n = 400;
    q.epsilon = 0.1;
    q.correction = CorrectionMode::with_log_terms;
    q.side = RegionSide::sw_inner;
    const bool on_region = sw_member(H, disp, q, R1, R2);
    cfg.seed = 12;
    const SimReport at_boundary = binning_simulator(pmf, R1, R2, cfg);
    const double allowance = 0.1 + 4.0 / std::sqrt(401.0) + 3.0 * at_boundary.std_error;

    const double secs = seconds_since(t0);
    detail = fmt("under=%.3f boundary=%.4f<=%.4f (%.2fs)", under.estimate,
                 at_boundary.estimate, allowance, secs);
    return under.estimate >= 0.9 && on_region && at_boundary.estimate <= allowance &&
           secs < 300.0;
}

} // namespace

int main() {
    struct Row {
        const char* label;
        bool (*fn)(std::string&);
    };
    const Row rows[] = {
        {"blocklength estimates and relative saving", check_blocklengths},
        {"rank-one source boundary equals scalar backoff", check_rank_one_boundary},
        {"sum-rate closed forms and degenerate corner", check_solver_closed_forms},
        {"tilted-exponent derivatives match mean and variance", check_exponent_derivatives},
        {"exact type enumeration agrees with sampling", check_oracle_agreement},
        {"gaussian boundary gap shrinks with blocklength", check_gaussian_gap},
        {"bivariate kernel and orthant probabilities", check_orthant_probabilities},
        {"corner coefficient angle and budget profile", check_corner_angle_profile},
        {"random binning against the inner boundary", check_binning_simulator},
    };

    bool all_ok = true;
    int id = 0;
    for (const auto& row : rows) {
        ++id;
        std::string extra;
        bool ok = false;
        try {
            ok = row.fn(extra);
        } catch (const std::exception& e) {
            extra = std::string("threw: ") + e.what();
        }
        std::printf("%s %d/9 %-52s %s\n", ok ? "PASS" : "FAIL", id, row.label, extra.c_str());
        all_ok = all_ok && ok;
    }
    std::printf("%s\n", all_ok ? "acceptance: 9/9 passed" : "acceptance: FAILURES present");
    return all_ok ? 0 : 1;
}
