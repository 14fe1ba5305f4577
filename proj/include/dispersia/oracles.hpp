#pragma once

#include "dispersia/sw_stats.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace dispersia {

// Plan for a Monte-Carlo run. Results are a pure function of (n, trials,
// seed): every trial draws from its own counter-based stream, so shards only
// changes how trials are scheduled across threads, never the outcome.
struct SimConfig {
    long long n = 1;
    long long trials = 1;
    std::uint64_t seed = 0;
    int shards = 1;
};

// Outcome of a Monte-Carlo run. estimate lies in [0,1] and
// std_error = sqrt(estimate * (1 - estimate) / trials). exhaustive is set by
// the binning simulator only: true when the decoder searched every pair in
// the two received bins, false when the search was restricted to pairs that
// share one sequence with the true pair.
struct SimReport {
    double estimate = 0.0;
    double std_error = 0.0;
    long long trials = 0;
    std::uint64_t seed = 0;
    std::optional<bool> exhaustive;
};

// Exact P(empirical entropy triple of n i.i.d. pairs <= z componentwise).
// Enumerates every joint n-type over X1 x X2 with its multinomial
// probability; summation is compensated and carried out in long double.
// Throws ResourceError when the number of joint types exceeds 1e7, and
// std::invalid_argument for n < 1 or NaN thresholds.
double exact_entropy_cdf(const JointPMF2& pmf, long long n, const std::array<double, 3>& z);

// Monte-Carlo estimate of the same CDF: config.trials independent length-n
// samples, empirical entropy triple compared against z componentwise.
SimReport mc_entropy_cdf(const JointPMF2& pmf, const SimConfig& config,
                         const std::array<double, 3>& z);

// Random-binning source code with minimum-empirical-entropy decoding.
// Encoder j hashes its length-n sequence into ceil(2^{n Rj}) bins with a
// keyed hash (equivalent in distribution to uniform binning); the decoder
// accepts the unique pair in the two bins whose empirical entropy triple is
// <= (R1, R2, R1+R2) - delta_n componentwise, with
// delta_n = (|X1||X2| + 1/2) log2(n+1) / n. A trial errs when the true pair
// fails the threshold or any other pair in the bins passes it. When the
// sequence space is too large to enumerate, collisions are only tested
// against pairs sharing one true sequence; their hit probabilities are then
// computed exactly from candidate counts by conditional type enumeration and
// sampled as Bernoulli indicators, which matches the keyed-hash model in
// distribution. estimate is the empirical error rate.
SimReport binning_simulator(const JointPMF2& pmf, double R1, double R2, const SimConfig& config);

} // namespace dispersia
