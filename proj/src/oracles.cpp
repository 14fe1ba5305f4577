#include "dispersia/oracles.hpp"

#include "dispersia/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <vector>

namespace dispersia {

namespace {

constexpr long double kLn2 = 0.69314718055994530941723212145817657L;
constexpr double kMaxExactTypes = 1e7;
// Cap on conditional type configurations enumerated per candidate count; past
// this the restricted decoder cannot be priced exactly either.
constexpr double kMaxCandidateConfigs = 2e7;
// Sequence spaces up to this size may be enumerated by the exhaustive decoder.
constexpr unsigned long long kMaxSeqSpace = 1ull << 16;
// Budget on the expected number of candidate pairs scanned per trial.
constexpr double kMaxPairWork = 2.5e5;

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Counter-based generator: the i-th output depends only on (seed, trial, i),
// so trials can run on any thread in any order and still reproduce.
struct TrialStream {
    std::uint64_t key;
    std::uint64_t counter = 0;

    TrialStream(std::uint64_t seed, std::uint64_t trial)
        : key(mix64(mix64(seed) ^ (0xD1B54A32D192ED03ull * (trial + 1)))) {}

    std::uint64_t next() { return mix64(key ^ (0x9E3779B97F4A7C15ull * ++counter)); }
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
};

// Keyed sequence hash, one key per (seed, trial, encoder). Absorbing symbols
// one at a time lets the exhaustive decoder share prefix work.
struct SeqHash {
    std::uint64_t init;

    SeqHash(std::uint64_t seed, std::uint64_t trial, std::uint64_t encoder)
        : init(mix64(mix64(seed ^ 0xA5A5A5A5A5A5A5A5ull) ^ mix64(trial * 0x632BE59BD9B4E019ull + encoder))) {}

    static std::uint64_t absorb(std::uint64_t h, int symbol) {
        return mix64(h ^ (0xD6E8FEB86659FD93ull * (static_cast<std::uint64_t>(symbol) + 1)));
    }
};

void validate_config(const SimConfig& config) {
    if (config.n < 1) throw std::invalid_argument("SimConfig.n must be at least 1");
    if (config.trials < 1) throw std::invalid_argument("SimConfig.trials must be at least 1");
    if (config.shards < 1) throw std::invalid_argument("SimConfig.shards must be at least 1");
}

void validate_thresholds(const std::array<double, 3>& z) {
    for (double v : z) {
        if (std::isnan(v)) throw std::invalid_argument("entropy thresholds must not be NaN");
    }
}

// log(i!) for i = 0..n, natural log.
std::vector<long double> log_factorials(long long n) {
    std::vector<long double> lf(static_cast<std::size_t>(n) + 1);
    for (long long i = 0; i <= n; ++i) lf[static_cast<std::size_t>(i)] = lgammal(static_cast<long double>(i) + 1.0L);
    return lf;
}

// Empirical (H(X1|X2), H(X2|X1), H(X1,X2)) in bits of a joint count table.
std::array<double, 3> count_entropy_triple(const long long* k, int rows, int cols, long long n) {
    const double logn = std::log2(static_cast<double>(n));
    double h12 = 0.0;
    for (int c = 0; c < rows * cols; ++c) {
        if (k[c] > 0) h12 += static_cast<double>(k[c]) * (logn - std::log2(static_cast<double>(k[c])));
    }
    double h1 = 0.0, h2 = 0.0;
    for (int a = 0; a < rows; ++a) {
        long long s = 0;
        for (int b = 0; b < cols; ++b) s += k[a * cols + b];
        if (s > 0) h1 += static_cast<double>(s) * (logn - std::log2(static_cast<double>(s)));
    }
    for (int b = 0; b < cols; ++b) {
        long long s = 0;
        for (int a = 0; a < rows; ++a) s += k[a * cols + b];
        if (s > 0) h2 += static_cast<double>(s) * (logn - std::log2(static_cast<double>(s)));
    }
    const double inv = 1.0 / static_cast<double>(n);
    return {(h12 - h2) * inv, (h12 - h1) * inv, h12 * inv};
}

bool leq3(const std::array<double, 3>& t, const std::array<double, 3>& z) {
    return t[0] <= z[0] && t[1] <= z[1] && t[2] <= z[2];
}

struct KahanLD {
    long double sum = 0.0L;
    long double carry = 0.0L;
    void add(long double v) {
        long double y = v - carry;
        long double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

// Splits config.trials into contiguous ranges, one worker per range. The
// estimate is independent of the split because each trial seeds itself.
template <typename TrialFn>
long long run_sharded(const SimConfig& config, TrialFn&& trial_hits) {
    const long long trials = config.trials;
    int workers = static_cast<int>(std::min<long long>({config.shards, trials, 32}));
    if (workers <= 1) return trial_hits(0, trials);
    std::vector<long long> hits(static_cast<std::size_t>(workers), 0);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        const long long lo = trials * w / workers;
        const long long hi = trials * (w + 1) / workers;
        pool.emplace_back([&hits, &trial_hits, w, lo, hi] { hits[static_cast<std::size_t>(w)] = trial_hits(lo, hi); });
    }
    for (auto& t : pool) t.join();
    long long total = 0;
    for (long long h : hits) total += h;
    return total;
}

SimReport make_report(long long hits, const SimConfig& config) {
    SimReport report;
    report.trials = config.trials;
    report.seed = config.seed;
    const double est = static_cast<double>(hits) / static_cast<double>(config.trials);
    report.estimate = est;
    report.std_error = std::sqrt(est * (1.0 - est) / static_cast<double>(config.trials));
    return report;
}

// ---- binning simulator internals ----

// P(at least one of N uniformly binned candidates lands in a given bin) with
// B = ceil(2^rate_bits) bins, i.e. 1 - (1 - 1/B)^N. log_count = ln N, which
// may be hundreds of ln-units; everything stays in log space.
double collision_probability(long double log_count, long double rate_bits) {
    if (!(log_count > -std::numeric_limits<long double>::infinity())) return 0.0;
    long double t; // ln(-N ln(1 - 1/B))
    if (rate_bits <= 62.0L) {
        const auto bins = static_cast<unsigned long long>(ceill(exp2l(rate_bits)));
        if (bins <= 1) return 1.0;
        t = log_count + logl(-log1pl(-1.0L / static_cast<long double>(bins)));
    } else {
        // 1/B below 2^-62: -ln(1 - 1/B) = 1/B up to relative error 2^-63.
        t = log_count - rate_bits * kLn2;
    }
    if (t > 44.0L) return 1.0;
    return static_cast<double>(-expm1l(-expl(t)));
}

// ln of the number of sequences whose empirical count table passes thr when
// one side's per-symbol counts are fixed. fixed_rows selects which side:
// true fixes the X1 counts and enumerates X2 candidates, false the reverse.
// Each conditional type contributes prod_g C(m_g; k_g1..k_gd) sequences.
long double log_passing_candidates(const std::vector<long long>& fixed, bool fixed_rows, int rows,
                                   int cols, long long n, const std::array<double, 3>& thr,
                                   const std::vector<long double>& lf) {
    const int groups = fixed_rows ? rows : cols;
    const int slots = fixed_rows ? cols : rows;

    double log_configs = 0.0;
    for (int g = 0; g < groups; ++g) {
        const auto m = static_cast<double>(fixed[static_cast<std::size_t>(g)]);
        const auto d = static_cast<double>(slots);
        log_configs += std::lgamma(m + d) - std::lgamma(m + 1.0) - std::lgamma(d);
    }
    if (log_configs > std::log(kMaxCandidateConfigs)) {
        throw ResourceError("conditional type enumeration needs more than 2e7 configurations");
    }

    std::vector<long long> k(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0);
    KahanLD total;
    bool any = false;

    // DFS over groups; within a group, over compositions of fixed[g] into
    // the slot cells. log_seq accumulates ln prod_g fixed[g]! / prod k!.
    auto cell = [&](int g, int s) -> long long& {
        return fixed_rows ? k[static_cast<std::size_t>(g * cols + s)] : k[static_cast<std::size_t>(s * cols + g)];
    };
    // Sum in the scale of exp(log_seq - shift) so the accumulator cannot
    // overflow: each term is at most n! and there may be ~2e7 of them.
    const long double shift = lf[static_cast<std::size_t>(n)];
    auto at_leaf = [&]() {
        if (leq3(count_entropy_triple(k.data(), rows, cols, n), thr)) {
            long double log_seq = 0.0L;
            for (int g = 0; g < groups; ++g) {
                log_seq += lf[static_cast<std::size_t>(fixed[static_cast<std::size_t>(g)])];
                for (int s = 0; s < slots; ++s) log_seq -= lf[static_cast<std::size_t>(cell(g, s))];
            }
            total.add(expl(log_seq - shift));
            any = true;
        }
    };

    auto compose = [&](auto&& self, int g, int s, long long remaining) -> void {
        if (g == groups) {
            at_leaf();
            return;
        }
        if (s == slots - 1) {
            cell(g, s) = remaining;
            self(self, g + 1, 0, g + 1 < groups ? fixed[static_cast<std::size_t>(g + 1)] : 0);
            cell(g, s) = 0;
            return;
        }
        for (long long v = 0; v <= remaining; ++v) {
            cell(g, s) = v;
            self(self, g, s + 1, remaining - v);
        }
        cell(g, s) = 0;
    };
    compose(compose, 0, 0, groups > 0 ? fixed[0] : 0);

    if (!any) return -std::numeric_limits<long double>::infinity();
    return logl(total.sum) + shift;
}

// Candidate totals are reused across trials sharing a marginal type.
struct CandidateCache {
    std::mutex mu;
    std::map<std::vector<long long>, long double> values;

    template <typename Builder>
    long double get(const std::vector<long long>& key, Builder&& build) {
        {
            std::lock_guard<std::mutex> lock(mu);
            auto it = values.find(key);
            if (it != values.end()) return it->second;
        }
        const long double v = build();
        std::lock_guard<std::mutex> lock(mu);
        return values.emplace(key, v).first->second;
    }
};

// ln(T - 1) from ln T: removes the true sequence from its own candidate list.
long double drop_one(long double log_total) {
    if (!(log_total > -std::numeric_limits<long double>::infinity())) return log_total;
    const long double d = expl(-log_total);
    if (d >= 1.0L) return -std::numeric_limits<long double>::infinity();
    return log_total + log1pl(-d);
}

unsigned long long bounded_pow(unsigned long long base, long long exp, unsigned long long cap) {
    unsigned long long r = 1;
    for (long long i = 0; i < exp; ++i) {
        if (r > cap / base) return cap + 1;
        r *= base;
    }
    return r;
}

} // namespace

double exact_entropy_cdf(const JointPMF2& pmf, long long n, const std::array<double, 3>& z) {
    if (n < 1) throw std::invalid_argument("exact_entropy_cdf requires n >= 1");
    validate_thresholds(z);

    const int rows = pmf.rows, cols = pmf.cols;
    const int cells = rows * cols;
    const double dn = static_cast<double>(n);
    const double log_types =
        std::lgamma(dn + cells) - std::lgamma(dn + 1.0) - std::lgamma(static_cast<double>(cells));
    if (log_types > std::log(kMaxExactTypes) + 1e-9) {
        throw ResourceError("joint type enumeration exceeds 1e7 types; use mc_entropy_cdf");
    }

    const auto lf = log_factorials(n);
    std::vector<long double> logp(static_cast<std::size_t>(cells));
    for (int c = 0; c < cells; ++c) {
        const double p = pmf.p[static_cast<std::size_t>(c)];
        logp[static_cast<std::size_t>(c)] =
            p > 0.0 ? logl(static_cast<long double>(p)) : -std::numeric_limits<long double>::infinity();
    }

    std::vector<long long> k(static_cast<std::size_t>(cells), 0);
    KahanLD mass;
    bool any_fail = false;

    auto visit = [&](auto&& self, int c, long long remaining) -> void {
        if (c == cells - 1) {
            k[static_cast<std::size_t>(c)] = remaining;
            long double logprob = lf[static_cast<std::size_t>(n)];
            bool possible = true;
            for (int i = 0; i < cells && possible; ++i) {
                const long long ki = k[static_cast<std::size_t>(i)];
                if (ki == 0) continue;
                if (pmf.p[static_cast<std::size_t>(i)] <= 0.0) {
                    possible = false;
                } else {
                    logprob += static_cast<long double>(ki) * logp[static_cast<std::size_t>(i)] -
                               lf[static_cast<std::size_t>(ki)];
                }
            }
            if (possible) {
                if (leq3(count_entropy_triple(k.data(), rows, cols, n), z)) {
                    mass.add(expl(logprob));
                } else {
                    any_fail = true;
                }
            }
            k[static_cast<std::size_t>(c)] = 0;
            return;
        }
        for (long long v = 0; v <= remaining; ++v) {
            k[static_cast<std::size_t>(c)] = v;
            self(self, c + 1, remaining - v);
        }
        k[static_cast<std::size_t>(c)] = 0;
    };
    visit(visit, 0, n);

    // If every type the source can emit passes, the answer is 1 regardless of
    // accumulated rounding.
    if (!any_fail) return 1.0;
    return std::clamp(static_cast<double>(mass.sum), 0.0, 1.0);
}

SimReport mc_entropy_cdf(const JointPMF2& pmf, const SimConfig& config,
                         const std::array<double, 3>& z) {
    validate_config(config);
    validate_thresholds(z);

    const int rows = pmf.rows, cols = pmf.cols;
    const int cells = rows * cols;
    std::vector<double> cdf(static_cast<std::size_t>(cells));
    double acc = 0.0;
    for (int c = 0; c < cells; ++c) {
        acc += pmf.p[static_cast<std::size_t>(c)];
        cdf[static_cast<std::size_t>(c)] = acc;
    }
    cdf.back() = 1.0;

    const long long n = config.n;
    auto worker = [&](long long lo, long long hi) -> long long {
        std::vector<long long> k(static_cast<std::size_t>(cells));
        long long hits = 0;
        for (long long t = lo; t < hi; ++t) {
            TrialStream rng(config.seed, static_cast<std::uint64_t>(t));
            std::fill(k.begin(), k.end(), 0);
            for (long long i = 0; i < n; ++i) {
                const double u = rng.uniform();
                int c = 0;
                while (c + 1 < cells && u >= cdf[static_cast<std::size_t>(c)]) ++c;
                ++k[static_cast<std::size_t>(c)];
            }
            if (leq3(count_entropy_triple(k.data(), rows, cols, n), z)) ++hits;
        }
        return hits;
    };

    return make_report(run_sharded(config, worker), config);
}

SimReport binning_simulator(const JointPMF2& pmf, double R1, double R2, const SimConfig& config) {
    validate_config(config);
    if (!std::isfinite(R1) || !std::isfinite(R2) || R1 < 0.0 || R2 < 0.0) {
        throw std::invalid_argument("binning rates must be finite and nonnegative");
    }

    const int rows = pmf.rows, cols = pmf.cols;
    const int cells = rows * cols;
    const long long n = config.n;
    const double dn = static_cast<double>(n);
    const double delta = (cells + 0.5) * std::log2(dn + 1.0) / dn;
    const std::array<double, 3> thr = {R1 - delta, R2 - delta, R1 + R2 - delta};
    const long double rate1_bits = static_cast<long double>(dn) * R1;
    const long double rate2_bits = static_cast<long double>(dn) * R2;

    std::vector<double> cdf1(static_cast<std::size_t>(rows), 0.0);
    std::vector<std::vector<double>> cdf2g1(static_cast<std::size_t>(rows),
                                            std::vector<double>(static_cast<std::size_t>(cols)));
    {
        const auto m1 = pmf.marginal1();
        double acc = 0.0;
        for (int a = 0; a < rows; ++a) {
            acc += m1[static_cast<std::size_t>(a)];
            cdf1[static_cast<std::size_t>(a)] = acc;
            double cacc = 0.0;
            for (int b = 0; b < cols; ++b) {
                const double pa = m1[static_cast<std::size_t>(a)];
                cacc += pa > 0.0 ? pmf.at(a, b) / pa : (b == 0 ? 1.0 : 0.0);
                cdf2g1[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = cacc;
            }
            cdf2g1[static_cast<std::size_t>(a)].back() = 1.0;
        }
        cdf1.back() = 1.0;
    }

    // Exhaustive decoding is on the table when both sequence spaces fit the
    // enumeration cap and the expected bin occupancy keeps pair scans cheap.
    const unsigned long long space1 = bounded_pow(static_cast<unsigned long long>(rows), n, kMaxSeqSpace);
    const unsigned long long space2 = bounded_pow(static_cast<unsigned long long>(cols), n, kMaxSeqSpace);
    bool exhaustive = n <= 16 && space1 <= kMaxSeqSpace && space2 <= kMaxSeqSpace;
    if (exhaustive) {
        const double b1 = std::exp2(std::min(static_cast<double>(rate1_bits), 1023.0));
        const double b2 = std::exp2(std::min(static_cast<double>(rate2_bits), 1023.0));
        const double pair_work = (static_cast<double>(space1) / b1 + 1.0) * (static_cast<double>(space2) / b2 + 1.0);
        exhaustive = pair_work <= kMaxPairWork;
    }

    long long hits = 0;
    if (exhaustive) {
        // Bin counts fit in 64 bits here or collapse to a modulus cap whose
        // extra collision mass is below 2^-46.
        const unsigned long long bins1 =
            rate1_bits <= 62.0L ? static_cast<unsigned long long>(ceill(exp2l(rate1_bits))) : (1ull << 62);
        const unsigned long long bins2 =
            rate2_bits <= 62.0L ? static_cast<unsigned long long>(ceill(exp2l(rate2_bits))) : (1ull << 62);

        auto worker = [&](long long lo, long long hi) -> long long {
            std::vector<int> x1(static_cast<std::size_t>(n)), x2(static_cast<std::size_t>(n));
            std::vector<long long> k(static_cast<std::size_t>(cells));
            std::vector<std::vector<int>> cand1, cand2;
            std::vector<int> buf(static_cast<std::size_t>(n));
            long long errors = 0;

            // Collect all sequences over an alphabet that hash into the
            // observed bin, sharing hash prefixes along the DFS.
            auto collect = [&](int alphabet, std::uint64_t init, unsigned long long bins,
                               std::uint64_t want, std::vector<std::vector<int>>& out) {
                out.clear();
                auto dfs = [&](auto&& self, long long pos, std::uint64_t h) -> void {
                    if (pos == n) {
                        if (h % bins == want) out.push_back(buf);
                        return;
                    }
                    for (int s = 0; s < alphabet; ++s) {
                        buf[static_cast<std::size_t>(pos)] = s;
                        self(self, pos + 1, SeqHash::absorb(h, s));
                    }
                };
                dfs(dfs, 0, init);
            };

            for (long long t = lo; t < hi; ++t) {
                TrialStream rng(config.seed, static_cast<std::uint64_t>(t));
                std::fill(k.begin(), k.end(), 0);
                for (long long i = 0; i < n; ++i) {
                    const double u1 = rng.uniform();
                    int a = 0;
                    while (a + 1 < rows && u1 >= cdf1[static_cast<std::size_t>(a)]) ++a;
                    const double u2 = rng.uniform();
                    int b = 0;
                    while (b + 1 < cols && u2 >= cdf2g1[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) ++b;
                    x1[static_cast<std::size_t>(i)] = a;
                    x2[static_cast<std::size_t>(i)] = b;
                    ++k[static_cast<std::size_t>(a * cols + b)];
                }
                const bool true_pass = leq3(count_entropy_triple(k.data(), rows, cols, n), thr);

                const SeqHash h1(config.seed, static_cast<std::uint64_t>(t), 1);
                const SeqHash h2(config.seed, static_cast<std::uint64_t>(t), 2);
                std::uint64_t hv1 = h1.init, hv2 = h2.init;
                for (long long i = 0; i < n; ++i) {
                    hv1 = SeqHash::absorb(hv1, x1[static_cast<std::size_t>(i)]);
                    hv2 = SeqHash::absorb(hv2, x2[static_cast<std::size_t>(i)]);
                }
                collect(rows, h1.init, bins1, hv1 % bins1, cand1);
                collect(cols, h2.init, bins2, hv2 % bins2, cand2);

                bool impostor = false;
                for (const auto& u : cand1) {
                    for (const auto& v : cand2) {
                        if (u == x1 && v == x2) continue;
                        std::fill(k.begin(), k.end(), 0);
                        for (long long i = 0; i < n; ++i) {
                            ++k[static_cast<std::size_t>(u[static_cast<std::size_t>(i)] * cols +
                                                         v[static_cast<std::size_t>(i)])];
                        }
                        if (leq3(count_entropy_triple(k.data(), rows, cols, n), thr)) {
                            impostor = true;
                            break;
                        }
                    }
                    if (impostor) break;
                }
                if (!true_pass || impostor) ++errors;
            }
            return errors;
        };
        hits = run_sharded(config, worker);
    } else {
        // The per-symbol composition count is log-concave in the symbol's
        // count, so the balanced marginal type is the most expensive one.
        // Checking it here means no worker thread can hit the resource cap
        // mid-run.
        auto balanced_log_configs = [&](int groups, int slots) {
            double lc = 0.0;
            for (int g = 0; g < groups; ++g) {
                const double m = static_cast<double>(n / groups + (g < n % groups ? 1 : 0));
                lc += std::lgamma(m + slots) - std::lgamma(m + 1.0) -
                      std::lgamma(static_cast<double>(slots));
            }
            return lc;
        };
        if (std::max(balanced_log_configs(rows, cols), balanced_log_configs(cols, rows)) >
            std::log(kMaxCandidateConfigs)) {
            throw ResourceError("restricted decoding needs more than 2e7 conditional type "
                                "configurations per trial; reduce n or the alphabet");
        }

        const auto lf = log_factorials(n);
        CandidateCache cache_v; // keyed on X1 counts, counts X2 candidates
        CandidateCache cache_u; // keyed on X2 counts, counts X1 candidates

        auto worker = [&](long long lo, long long hi) -> long long {
            std::vector<int> x1(static_cast<std::size_t>(n)), x2(static_cast<std::size_t>(n));
            std::vector<long long> k(static_cast<std::size_t>(cells));
            std::vector<long long> rsum(static_cast<std::size_t>(rows)), csum(static_cast<std::size_t>(cols));
            long long errors = 0;

            for (long long t = lo; t < hi; ++t) {
                TrialStream rng(config.seed, static_cast<std::uint64_t>(t));
                std::fill(k.begin(), k.end(), 0);
                for (long long i = 0; i < n; ++i) {
                    const double u1 = rng.uniform();
                    int a = 0;
                    while (a + 1 < rows && u1 >= cdf1[static_cast<std::size_t>(a)]) ++a;
                    const double u2 = rng.uniform();
                    int b = 0;
                    while (b + 1 < cols && u2 >= cdf2g1[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) ++b;
                    x1[static_cast<std::size_t>(i)] = a;
                    x2[static_cast<std::size_t>(i)] = b;
                    ++k[static_cast<std::size_t>(a * cols + b)];
                }
                const bool true_pass = leq3(count_entropy_triple(k.data(), rows, cols, n), thr);

                std::fill(rsum.begin(), rsum.end(), 0);
                std::fill(csum.begin(), csum.end(), 0);
                for (int a = 0; a < rows; ++a) {
                    for (int b = 0; b < cols; ++b) {
                        rsum[static_cast<std::size_t>(a)] += k[static_cast<std::size_t>(a * cols + b)];
                        csum[static_cast<std::size_t>(b)] += k[static_cast<std::size_t>(a * cols + b)];
                    }
                }

                // Candidate totals include the true partner when it passes;
                // drop it so only impostors remain.
                long double log_v = cache_v.get(rsum, [&] {
                    return log_passing_candidates(rsum, true, rows, cols, n, thr, lf);
                });
                long double log_u = cache_u.get(csum, [&] {
                    return log_passing_candidates(csum, false, rows, cols, n, thr, lf);
                });
                if (true_pass) {
                    log_v = drop_one(log_v);
                    log_u = drop_one(log_u);
                }
                const double q_v = collision_probability(log_v, rate2_bits);
                const double q_u = collision_probability(log_u, rate1_bits);

                // Both uniforms are always drawn so the stream layout does
                // not depend on intermediate outcomes.
                const double d1 = rng.uniform();
                const double d2 = rng.uniform();
                if (!true_pass || d1 < q_v || d2 < q_u) ++errors;
            }
            return errors;
        };
        hits = run_sharded(config, worker);
    }

    SimReport report = make_report(hits, config);
    report.exhaustive = exhaustive;
    return report;
}

} // namespace dispersia
