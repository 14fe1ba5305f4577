#include "dispersia/exponents.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "dispersia/errors.hpp"

namespace dispersia {
namespace {

constexpr double kRhoTol = 1e-8;       // golden-section bracket width on [0,1]
constexpr double kBackslideTol = 1e-6; // evaluator jitter allowed in the bracket scan
constexpr long long kBlockCap = 1LL << 50;

// P(Z <= t componentwise) with a point-mass guard: a rank-0 covariance is a
// point at the origin, which mvn_lower_orthant refuses.
double orthant(const CovMatrix& sub, const std::vector<double>& t) {
    if (sub.rank == 0) {
        for (double v : t)
            if (v < 0.0) return 0.0;
        return 1.0;
    }
    return mvn_lower_orthant(sub, t);
}

CovMatrix sub_cov(const CovMatrix& V, const std::vector<int>& idx0) {
    const int d = static_cast<int>(idx0.size());
    std::vector<double> e(static_cast<size_t>(d) * d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) e[static_cast<size_t>(r) * d + c] = V(idx0[r], idx0[c]);
    return CovMatrix(d, e.data());
}

double tilted_sum_1g2(const JointPMF2& pmf, double rho) {
    const double s = 1.0 / (1.0 + rho);
    double outer = 0.0;
    for (int x2 = 0; x2 < pmf.cols; ++x2) {
        double inner = 0.0;
        for (int x1 = 0; x1 < pmf.rows; ++x1) inner += std::pow(pmf.at(x1, x2), s);
        outer += std::pow(inner, 1.0 + rho);
    }
    return outer;
}

double tilted_sum_2g1(const JointPMF2& pmf, double rho) {
    const double s = 1.0 / (1.0 + rho);
    double outer = 0.0;
    for (int x1 = 0; x1 < pmf.rows; ++x1) {
        double inner = 0.0;
        for (int x2 = 0; x2 < pmf.cols; ++x2) inner += std::pow(pmf.at(x1, x2), s);
        outer += std::pow(inner, 1.0 + rho);
    }
    return outer;
}

} // namespace

double gallager_e(const JointPMF2& pmf, ExponentKind which, double R1, double R2,
                  double rho) {
    if (!(rho >= 0.0 && rho <= 1.0))
        throw std::invalid_argument("tilting parameter must lie in [0, 1]");
    if (!std::isfinite(R1) || !std::isfinite(R2))
        throw std::invalid_argument("rates must be finite");
    switch (which) {
    case ExponentKind::e1g2:
        return rho * R1 - std::log2(tilted_sum_1g2(pmf, rho));
    case ExponentKind::e2g1:
        return rho * R2 - std::log2(tilted_sum_2g1(pmf, rho));
    case ExponentKind::e12: {
        const double s = 1.0 / (1.0 + rho);
        double total = 0.0;
        for (double q : pmf.p) total += std::pow(q, s);
        return rho * (R1 + R2) - (1.0 + rho) * std::log2(total);
    }
    }
    throw std::invalid_argument("unknown exponent kind");
}

ExponentEval lower_exponent(const JointPMF2& pmf, double R1, double R2) {
    if (!std::isfinite(R1) || !std::isfinite(R2))
        throw std::invalid_argument("rates must be finite");
    const auto phi = [&](double rho) {
        return std::min({gallager_e(pmf, ExponentKind::e1g2, R1, R2, rho),
                         gallager_e(pmf, ExponentKind::e2g1, R1, R2, rho),
                         gallager_e(pmf, ExponentKind::e12, R1, R2, rho)});
    };
    // each constituent is concave in rho, hence so is their minimum; golden
    // section converges to the interior maximizer or drifts to an endpoint
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.0, hi = 1.0;
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    double f1 = phi(x1), f2 = phi(x2);
    while (hi - lo > kRhoTol) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = phi(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = phi(x1);
        }
    }
    ExponentEval out;
    out.rho_star = 0.5 * (lo + hi);
    out.components = {gallager_e(pmf, ExponentKind::e1g2, R1, R2, out.rho_star),
                      gallager_e(pmf, ExponentKind::e2g1, R1, R2, out.rho_star),
                      gallager_e(pmf, ExponentKind::e12, R1, R2, out.rho_star)};
    const double v =
        std::min({out.components[0], out.components[1], out.components[2]});
    out.E_lower = std::max(v, 0.0);
    return out;
}

long long blocklength_dispersion(const EntropyTriple& H, const CovMatrix& V,
                                 double epsilon, double R1, double R2) {
    if (V.dim != 3) throw std::invalid_argument("fluctuation covariance must be 3x3");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("error budget must lie strictly inside (0,1)");
    if (!std::isfinite(R1) || !std::isfinite(R2))
        throw std::invalid_argument("rates must be finite");
    const double target = 1.0 - epsilon;
    const double m[3] = {R1 - H.h1g2, R2 - H.h2g1, R1 + R2 - H.h12};

    for (int i = 0; i < 3; ++i)
        if (V(i, i) <= 0.0 && m[i] < 0.0)
            throw InfeasibleError(
                "a rate margin on a deterministic component is negative, so the success "
                "probability is zero at every blocklength");

    const auto prob = [&](long long n) {
        const double rn = std::sqrt(static_cast<double>(n));
        return orthant(V, {rn * m[0], rn * m[1], rn * m[2]});
    };

    double plo = prob(2);
    if (plo >= target) return 2;

    if (!(m[0] > 0.0 && m[1] > 0.0 && m[2] > 0.0)) {
        for (int i = 0; i < 3; ++i)
            if (V(i, i) > 0.0 && m[i] < 0.0)
                throw InfeasibleError(
                    "a negative rate margin drives the success probability to zero, so it "
                    "never reaches the target");
        // every margin is >= 0 with at least one exact zero; the probability
        // still increases with n but its limit is the orthant probability of
        // the zero-margin fluctuating components
        std::vector<int> pinned;
        for (int i = 0; i < 3; ++i)
            if (V(i, i) > 0.0 && m[i] == 0.0) pinned.push_back(i);
        if (!pinned.empty()) {
            const double ceiling =
                orthant(sub_cov(V, pinned), std::vector<double>(pinned.size(), 0.0));
            if (ceiling < target)
                throw InfeasibleError(
                    "zero rate margins cap the success probability below the target at "
                    "every blocklength");
        }
    }

    long long lo = 2, hi = 4;
    while (true) {
        const double ph = prob(hi);
        if (ph + kBackslideTol < plo)
            throw InfeasibleError(
                "success probability decreased along the blocklength bracket; the rate "
                "margins do not drive it to the target");
        if (ph >= target) break;
        if (hi >= kBlockCap)
            throw InfeasibleError(
                "success probability plateaued below the target within the blocklength "
                "search cap");
        plo = ph;
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        const long long mid = lo + (hi - lo) / 2;
        if (prob(mid) >= target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

long long blocklength_exponent(const JointPMF2& pmf, double epsilon, double R1,
                               double R2) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("error budget must lie strictly inside (0,1)");
    const ExponentEval ev = lower_exponent(pmf, R1, R2);
    if (ev.E_lower <= 1e-12)
        throw InfeasibleError(
            "exponent lower bound vanishes at these rates; no finite blocklength estimate");
    return static_cast<long long>(std::ceil(std::log2(3.0 / epsilon) / ev.E_lower));
}

} // namespace dispersia
