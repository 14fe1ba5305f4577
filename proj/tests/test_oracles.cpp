#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dispersia/errors.hpp"
#include "dispersia/oracles.hpp"
#include "dispersia/probkit.hpp"
#include "dispersia/sw_stats.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

using namespace dispersia;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

SimConfig plan(long long n, long long trials, std::uint64_t seed, int shards = 1) {
    SimConfig c;
    c.n = n;
    c.trials = trials;
    c.seed = seed;
    c.shards = shards;
    return c;
}

// Tail probability of the L1 distance between empirical and true pmf for a
// 2x2 source, by direct multinomial enumeration. Returns {tail, total mass}
// so the caller can sanity-check the enumeration itself.
std::pair<double, double> l1_tail(const JointPMF2& pmf, long long n, double t) {
    std::vector<double> lf(static_cast<std::size_t>(n) + 1);
    for (long long i = 0; i <= n; ++i) lf[static_cast<std::size_t>(i)] = std::lgamma(static_cast<double>(i) + 1.0);
    double tail = 0.0, total = 0.0;
    for (long long k0 = 0; k0 <= n; ++k0) {
        for (long long k1 = 0; k0 + k1 <= n; ++k1) {
            for (long long k2 = 0; k0 + k1 + k2 <= n; ++k2) {
                const long long k3 = n - k0 - k1 - k2;
                const std::array<long long, 4> k = {k0, k1, k2, k3};
                double lp = lf[static_cast<std::size_t>(n)];
                double dist = 0.0;
                for (int c = 0; c < 4; ++c) {
                    const double p = pmf.p[static_cast<std::size_t>(c)];
                    if (k[static_cast<std::size_t>(c)] > 0) {
                        lp += static_cast<double>(k[static_cast<std::size_t>(c)]) * std::log(p) -
                              lf[static_cast<std::size_t>(k[static_cast<std::size_t>(c)])];
                    }
                    dist += std::abs(static_cast<double>(k[static_cast<std::size_t>(c)]) / static_cast<double>(n) - p);
                }
                const double pr = std::exp(lp);
                total += pr;
                if (dist >= t) tail += pr;
            }
        }
    }
    return {tail, total};
}

} // namespace

TEST_CASE("exact entropy cdf reproduces hand-enumerated values") {
    const auto pmf = dsbs(0.25).first;

    // At n=2 there are ten joint types. With thresholds (1, 1, 1.5) every
    // type passes: conditional entropies never exceed 1 bit and the joint
    // empirical entropy of two samples never exceeds 1 bit either.
    CHECK(exact_entropy_cdf(pmf, 2, {1.0, 1.0, 1.5}) == 1.0);

    // Tightening the second component to 0.9 rejects exactly the two types
    // where x1 repeats and x2 does not, each of probability 3/32.
    CHECK(exact_entropy_cdf(pmf, 2, {1.0, 0.9, 1.5}) ==
          doctest::Approx(0.8125).epsilon(1e-12));

    // (0.5, 0.5, 1) keeps the four singleton types and the two types where
    // the samples agree on both coordinates.
    CHECK(exact_entropy_cdf(pmf, 2, {0.5, 0.5, 1.0}) ==
          doctest::Approx(0.625).epsilon(1e-12));

    // Only the singleton types have an all-zero entropy triple.
    CHECK(exact_entropy_cdf(pmf, 2, {0.0, 0.0, 0.0}) ==
          doctest::Approx(0.3125).epsilon(1e-12));

    // The triple is componentwise nonnegative, so negative thresholds
    // exclude everything.
    CHECK(exact_entropy_cdf(pmf, 2, {-0.1, -0.1, -0.1}) == 0.0);

    // n=1 puts all mass on singleton types.
    CHECK(exact_entropy_cdf(pmf, 1, {0.0, 0.0, 0.0}) == 1.0);

    // A structural zero removes the types that would use the empty cell:
    // the three reachable singleton types carry 0.25 + 0.0625 + 0.0625.
    const JointPMF2 holed(2, 2, {0.5, 0.25, 0.25, 0.0});
    CHECK(exact_entropy_cdf(holed, 2, {0.0, 0.0, 0.0}) ==
          doctest::Approx(0.375).epsilon(1e-12));
    CHECK(exact_entropy_cdf(holed, 2, {kInf, kInf, kInf}) == 1.0);
}

TEST_CASE("exact entropy cdf is monotone, validates input, and bounds its work") {
    const auto pmf = dsbs(0.25).first;

    const double p_tight = exact_entropy_cdf(pmf, 6, {0.3, 0.3, 1.0});
    const double p_mid = exact_entropy_cdf(pmf, 6, {0.6, 0.6, 1.4});
    const double p_loose = exact_entropy_cdf(pmf, 6, {0.9, 0.9, 1.8});
    CHECK(p_tight <= p_mid);
    CHECK(p_mid <= p_loose);
    CHECK(p_loose <= 1.0);
    CHECK(exact_entropy_cdf(pmf, 6, {1.0, 1.0, 2.0}) == 1.0);

    CHECK_THROWS_AS(exact_entropy_cdf(pmf, 0, {1.0, 1.0, 2.0}), std::invalid_argument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(exact_entropy_cdf(pmf, 2, {nan, 1.0, 2.0}), std::invalid_argument);

    // A 3x3 alphabet at n=30 has about 4.9e7 joint types, past the cap.
    const JointPMF2 big(3, 3, std::vector<double>(9, 1.0 / 9.0));
    CHECK_THROWS_AS(exact_entropy_cdf(big, 30, {1.0, 1.0, 2.0}), ResourceError);
}

TEST_CASE("exact cdf approaches the gaussian level on the dispersion boundary") {
    const auto [pmf, vz] = dsbs(0.25);
    const auto [H, disp] = sw_statistics(pmf);

    // Threshold sitting exactly on the gaussian 90th percentile of the
    // entropy density in the equal-offset direction. The exact probability
    // should drift toward 0.9 as n grows.
    auto gap_at = [&](long long n) {
        const double d = std::sqrt(vz / static_cast<double>(n)) * q_inv(0.1);
        const double p = exact_entropy_cdf(pmf, n, {H.h1g2 + d, H.h2g1 + d, H.h12 + d});
        return std::abs(p - 0.9);
    };
    const double gap15 = gap_at(15);
    const double gap60 = gap_at(60);
    CHECK(gap60 < gap15);

    // Third absolute moment of the conditional log-score about its mean,
    // which controls the normal-approximation error on this line.
    double xi = 0.0;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double pab = pmf.at(a, b);
            const double density = -std::log2(pab / 0.5);
            xi += pab * std::pow(std::abs(density - H.h1g2), 3.0);
        }
    }
    CHECK(gap15 <= berry_esseen_bound(1, xi, vz, 15));
    CHECK(gap60 <= berry_esseen_bound(1, xi, vz, 60));
}

TEST_CASE("empirical type deviations obey the exponential tail bound") {
    const JointPMF2 skew(2, 2, {0.7, 0.1, 0.1, 0.1});
    const auto pmfs = {dsbs(0.25).first, skew};
    for (const auto& pmf : pmfs) {
        for (long long n : {20, 40}) {
            bool total_checked = false;
            for (double t : {0.25, 0.4, 0.6, 0.9}) {
                const auto [tail, total] = l1_tail(pmf, n, t);
                if (!total_checked) {
                    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
                    total_checked = true;
                }
                const double bound = 16.0 * std::exp2(-static_cast<double>(n) * t * t / 2.0);
                CHECK(tail <= bound + 1e-12);
            }
        }
    }
}

TEST_CASE("monte carlo matches exact enumeration and is shard independent") {
    const auto pmf = dsbs(0.25).first;
    const std::array<double, 3> z = {0.95, 0.95, 1.95};

    const double exact = exact_entropy_cdf(pmf, 20, z);
    // Reference value from an independent enumeration of the same CDF.
    CHECK(exact == doctest::Approx(0.9186413117305411).epsilon(1e-10));

    const auto rep = mc_entropy_cdf(pmf, plan(20, 100000, 0x5EEDull, 4), z);
    CHECK(rep.trials == 100000);
    CHECK(rep.seed == 0x5EEDull);
    CHECK_FALSE(rep.exhaustive.has_value());
    CHECK(rep.std_error ==
          doctest::Approx(std::sqrt(rep.estimate * (1.0 - rep.estimate) / 100000.0)).epsilon(1e-12));
    CHECK(std::abs(rep.estimate - exact) <= 4.0 * std::max(rep.std_error, 1e-4));

    // Same plan, different shard counts: bit-identical results.
    const auto rep1 = mc_entropy_cdf(pmf, plan(20, 100000, 0x5EEDull, 1), z);
    const auto rep7 = mc_entropy_cdf(pmf, plan(20, 100000, 0x5EEDull, 7), z);
    CHECK(rep1.estimate == rep.estimate);
    CHECK(rep7.estimate == rep.estimate);
    CHECK(rep1.std_error == rep.std_error);

    // Infinite thresholds accept every sample.
    const auto sure = mc_entropy_cdf(pmf, plan(20, 100, 1ull), {kInf, kInf, kInf});
    CHECK(sure.estimate == 1.0);
    CHECK(sure.std_error == 0.0);

    const auto one = mc_entropy_cdf(pmf, plan(5, 1, 2ull), z);
    CHECK((one.estimate == 0.0 || one.estimate == 1.0));
    CHECK(one.std_error == 0.0);

    CHECK_THROWS_AS(mc_entropy_cdf(pmf, plan(0, 10, 1ull), z), std::invalid_argument);
    CHECK_THROWS_AS(mc_entropy_cdf(pmf, plan(10, 0, 1ull), z), std::invalid_argument);
    SimConfig bad = plan(10, 10, 1ull);
    bad.shards = 0;
    CHECK_THROWS_AS(mc_entropy_cdf(pmf, bad, z), std::invalid_argument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(mc_entropy_cdf(pmf, plan(10, 10, 1ull), {nan, 1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("binning with generous rates decodes every trial") {
    const auto pmf = dsbs(0.25).first;
    const long long n = 12;
    const double delta = 4.5 * std::log2(static_cast<double>(n) + 1.0) / static_cast<double>(n);
    const double rate = 1.0 + delta + 0.05;

    // The decoding threshold clears the largest possible entropy triple, so
    // the exact oracle reports that no type can fail.
    CHECK(exact_entropy_cdf(pmf, n, {rate - delta, rate - delta, 2.0 * rate - delta}) == 1.0);

    const auto rep = binning_simulator(pmf, rate, rate, plan(n, 3000, 0x77ull, 3));
    REQUIRE(rep.exhaustive.has_value());
    CHECK(*rep.exhaustive);
    // Collisions need two sequences in the same one-in-2^29 bin; even a
    // handful of hits in 3000 trials would be suspicious.
    CHECK(rep.estimate <= 0.004);
}

TEST_CASE("binning error matches the exact type oracle when bins are large") {
    const auto pmf = dsbs(0.25).first;
    const long long n = 12;
    const double delta = 4.5 * std::log2(static_cast<double>(n) + 1.0) / static_cast<double>(n);
    const double rate = 2.0;

    const double pass = exact_entropy_cdf(pmf, n, {rate - delta, rate - delta, 2.0 * rate - delta});
    CHECK(pass == doctest::Approx(0.28533217112999404).epsilon(1e-10));

    // With 2^24 bins per encoder the collision contribution is below 1e-5,
    // so the simulated error rate is the threshold-failure probability.
    const auto rep = binning_simulator(pmf, rate, rate, plan(n, 6000, 0xABCDull, 4));
    REQUIRE(rep.exhaustive.has_value());
    CHECK(*rep.exhaustive);
    CHECK(std::abs(rep.estimate - (1.0 - pass)) <= 4.0 * rep.std_error + 0.004);
}

TEST_CASE("binning below the joint entropy rate fails almost always") {
    const auto pmf = dsbs(0.25).first;
    // Rate sum 1.4 bits sits far under the joint entropy 1.81 bits, so the
    // true pair essentially never passes the threshold.
    const auto rep = binning_simulator(pmf, 0.7, 0.7, plan(400, 1200, 0xB1D5ull, 1));
    REQUIRE(rep.exhaustive.has_value());
    CHECK_FALSE(*rep.exhaustive);
    CHECK(rep.estimate >= 0.9);

    // Restricted decoding still reproduces bit for bit across shard counts.
    const auto rep5 = binning_simulator(pmf, 0.7, 0.7, plan(400, 1200, 0xB1D5ull, 5));
    CHECK(rep5.estimate == rep.estimate);
    CHECK(rep5.std_error == rep.std_error);
}

TEST_CASE("binning error does not grow when both rates rise") {
    const auto pmf = dsbs(0.25).first;
    // 2/sqrt(400) = 0.1 on each rate moves the pair from straddling the
    // boundary to comfortably inside it.
    const auto lo = binning_simulator(pmf, 0.95, 0.95, plan(400, 10000, 0xC0FEull, 8));
    const auto hi = binning_simulator(pmf, 1.05, 1.05, plan(400, 10000, 0xC0FEull, 8));
    CHECK(lo.estimate > 0.3);
    CHECK(lo.estimate < 0.9);
    CHECK(hi.estimate < 0.1);
    const double spread = std::sqrt(lo.std_error * lo.std_error + hi.std_error * hi.std_error);
    CHECK(hi.estimate - lo.estimate <= 3.0 * spread);
    CHECK(lo.std_error ==
          doctest::Approx(std::sqrt(lo.estimate * (1.0 - lo.estimate) / 10000.0)).epsilon(1e-12));
}

TEST_CASE("a single bin on one side is a valid degenerate code") {
    const auto pmf = dsbs(0.25).first;

    // Rate zero makes the first threshold negative, so the true pair always
    // fails and the error rate is exactly one; both decoder paths agree.
    const auto small = binning_simulator(pmf, 0.0, 2.0, plan(8, 400, 3ull, 2));
    REQUIRE(small.exhaustive.has_value());
    CHECK(*small.exhaustive);
    CHECK(small.estimate == 1.0);

    const auto large = binning_simulator(pmf, 0.0, 2.0, plan(50, 200, 3ull, 2));
    REQUIRE(large.exhaustive.has_value());
    CHECK_FALSE(*large.exhaustive);
    CHECK(large.estimate == 1.0);
}

TEST_CASE("binning validates rates and bounds restricted decoding work") {
    const auto pmf = dsbs(0.25).first;
    CHECK_THROWS_AS(binning_simulator(pmf, -0.1, 1.0, plan(10, 10, 1ull)), std::invalid_argument);
    CHECK_THROWS_AS(binning_simulator(pmf, 1.0, kInf, plan(10, 10, 1ull)), std::invalid_argument);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(binning_simulator(pmf, nan, 1.0, plan(10, 10, 1ull)), std::invalid_argument);
    CHECK_THROWS_AS(binning_simulator(pmf, 1.0, 1.0, plan(0, 10, 1ull)), std::invalid_argument);

    // Counting candidates for one trial at n=10000 would visit about 2.5e7
    // conditional type configurations, past the per-trial budget.
    CHECK_THROWS_AS(binning_simulator(pmf, 0.9, 0.9, plan(10000, 1, 1ull)), ResourceError);
}
