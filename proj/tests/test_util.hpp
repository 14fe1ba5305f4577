#pragma once

// Shared deterministic randomness for the test suites. Counter-based so that
// every test draws an independent, reproducible stream regardless of
// execution order.

#include <cmath>
#include <cstdint>
#include <vector>

namespace testrng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

struct Stream {
    std::uint64_t key;
    std::uint64_t counter = 0;

    explicit Stream(std::uint64_t seed) : key(splitmix64(seed)) {}

    std::uint64_t next_u64() { return splitmix64(key ^ (0xD1B54A32D192ED03ULL * ++counter)); }

    double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; one normal per call, pairs drawn from consecutive uniforms.
    double normal() {
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Random strictly positive pmf over `cells` outcomes, every cell >= min_cell.
    std::vector<double> pmf(int cells, double min_cell) {
        std::vector<double> p(cells);
        double total = 0.0;
        for (double& v : p) {
            v = -std::log(std::max(uniform(), 1e-300));
            total += v;
        }
        const double keep = 1.0 - min_cell * cells;
        for (double& v : p) v = min_cell + keep * v / total;
        return p;
    }
};

// Random full-rank covariance Sigma = A A^T + jitter * I. Sampling draws
// Z = A g + sqrt(jitter) h with independent standard normal g, h, which has
// covariance exactly Sigma, so no Cholesky factor is needed in tests.
struct RandomCov {
    double A[3][3];
    double jitter;
    std::vector<std::vector<double>> sigma;

    void sample(Stream& rng, double out[3]) const {
        double g[3] = {rng.normal(), rng.normal(), rng.normal()};
        for (int i = 0; i < 3; ++i) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += A[i][k] * g[k];
            out[i] = s + std::sqrt(jitter) * rng.normal();
        }
    }
};

inline RandomCov random_cov3(Stream& rng, double jitter = 0.05) {
    RandomCov rc;
    rc.jitter = jitter;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) rc.A[i][j] = rng.uniform(-1.0, 1.0);
    }
    rc.sigma.assign(3, std::vector<double>(3, 0.0));
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += rc.A[i][k] * rc.A[j][k];
            rc.sigma[i][j] = s + (i == j ? jitter : 0.0);
        }
    }
    return rc;
}

} // namespace testrng
