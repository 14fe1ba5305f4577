#include "dispersia/cli.hpp"

#include "dispersia/csv.hpp"
#include "dispersia/errors.hpp"
#include "dispersia/exponents.hpp"
#include "dispersia/net_stats.hpp"
#include "dispersia/oracles.hpp"
#include "dispersia/probkit.hpp"
#include "dispersia/problem_spec.hpp"
#include "dispersia/regions.hpp"
#include "dispersia/solvers.hpp"
#include "dispersia/sw_stats.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace dispersia {

namespace {

unsigned thread_cap() {
    if (const char* env = std::getenv("DISPERSIA_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v >= 1) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Runs fn(i) for i in [0, count) across at most DISPERSIA_THREADS workers.
// Each index writes into its own output slot, so row order never depends on
// scheduling.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    const std::size_t workers = std::min<std::size_t>({thread_cap(), count, 32});
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t lo = count * w / workers;
        const std::size_t hi = count * (w + 1) / workers;
        pool.emplace_back([&fn, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

// "start:stop:count" with count evenly spaced points, endpoints included.
std::vector<double> parse_grid(const std::string& text) {
    double start = 0.0, stop = 0.0;
    long long count = 0;
    char tail = '\0';
    if (std::sscanf(text.c_str(), "%lf:%lf:%lld%c", &start, &stop, &count, &tail) != 3 ||
        count < 1 || count > 1000000 || !std::isfinite(start) || !std::isfinite(stop)) {
        throw std::invalid_argument("grid must be start:stop:count, got '" + text + "'");
    }
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (long long i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] =
            count == 1 ? start
                       : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
    }
    return grid;
}

struct SpecChoice {
    std::string file;
    std::string preset;
};

ProblemSpec resolve_spec(const SpecChoice& choice) {
    if (choice.file.empty() == choice.preset.empty()) {
        throw std::invalid_argument("give exactly one of --spec and --preset");
    }
    return choice.file.empty() ? preset_problem_spec(choice.preset) : load_problem_spec(choice.file);
}

const JointPMF2& require_source(const ProblemSpec& spec, const char* cmd) {
    if (spec.kind != ProblemKind::sw) {
        throw std::invalid_argument(std::string(cmd) + " needs a source problem (problem = sw)");
    }
    return *spec.pmf;
}

CorrectionMode parse_correction(const std::string& name) {
    if (name == "log") return CorrectionMode::with_log_terms;
    if (name == "none") return CorrectionMode::gaussian_only;
    throw std::invalid_argument("--correction must be log or none");
}

void maybe_svg(const std::string& path, const std::vector<std::array<double, 2>>& points) {
    if (!path.empty()) write_svg_polyline(path, points);
}

// ---- region ----

struct RegionArgs {
    SpecChoice spec;
    long long n = 2;
    double eps = 0.1;
    std::string side = "inner";
    std::string correction = "none";
    std::string grid;
    std::string out, svg;
};

void run_region(const RegionArgs& args) {
    const ProblemSpec spec = resolve_spec(args.spec);
    RegionQuery query;
    query.n = args.n;
    query.epsilon = args.eps;
    query.correction = parse_correction(args.correction);

    const std::vector<double> grid = parse_grid(args.grid);
    BoundaryPolyline poly;
    if (spec.kind == ProblemKind::sw) {
        if (args.side == "inner") query.side = RegionSide::sw_inner;
        else if (args.side == "outer") query.side = RegionSide::sw_outer;
        else if (args.side == "sied") query.side = RegionSide::sw_sied;
        else throw std::invalid_argument("--side must be inner, outer or sied for sources");
        const auto [H, disp] = sw_statistics(*spec.pmf);
        poly = trace_boundary(H, disp, query, grid);
    } else {
        if (args.side != "inner") {
            throw std::invalid_argument("channel problems only have an inner boundary");
        }
        query.side = spec.kind == ProblemKind::mac ? RegionSide::mac_inner : RegionSide::abc_inner;
        const InfoDispersion info =
            spec.kind == ProblemKind::mac ? mac_statistics(*spec.mac) : abc_statistics(*spec.abc);
        poly = trace_boundary(info, query, grid);
    }

    CsvTable table;
    table.header = {"R1", "R2"};
    for (const auto& p : poly.points) table.rows.push_back({p[0], p[1]});
    write_csv(args.out, table);
    maybe_svg(args.svg, poly.points);
}

// ---- local-disp ----

struct LocalDispArgs {
    SpecChoice spec;
    std::string corner; // min-r1 | min-r2, or empty with explicit point
    double r1 = std::numeric_limits<double>::quiet_NaN();
    double r2 = std::numeric_limits<double>::quiet_NaN();
    std::string theta_grid;
    std::vector<double> epsilons;
    std::string out, svg;
};

void run_local_disp(const LocalDispArgs& args) {
    const ProblemSpec spec = resolve_spec(args.spec);
    const JointPMF2& pmf = require_source(spec, "local-disp");
    const auto [H, disp] = sw_statistics(pmf);

    double r1 = args.r1, r2 = args.r2;
    if (args.corner == "min-r1") {
        r1 = H.h1g2;
        r2 = H.h12 - H.h1g2; // H(X2)
    } else if (args.corner == "min-r2") {
        r1 = H.h12 - H.h2g1; // H(X1)
        r2 = H.h2g1;
    } else if (!args.corner.empty()) {
        throw std::invalid_argument("--corner must be min-r1 or min-r2");
    } else if (!std::isfinite(r1) || !std::isfinite(r2)) {
        throw std::invalid_argument("give --corner or both --r1 and --r2");
    }
    if (args.epsilons.empty()) throw std::invalid_argument("give at least one --eps");

    const std::vector<double> thetas = parse_grid(args.theta_grid);
    const std::size_t ne = args.epsilons.size();
    std::vector<double> F(thetas.size() * ne);
    parallel_for(F.size(), [&](std::size_t i) {
        const double theta = thetas[i / ne];
        const double eps = args.epsilons[i % ne];
        F[i] = local_dispersion(H, disp.V, r1, r2, theta, eps).F;
    });

    CsvTable table;
    table.header = {"theta", "epsilon", "F"};
    std::vector<std::array<double, 2>> curve;
    for (std::size_t i = 0; i < F.size(); ++i) {
        const double theta = thetas[i / ne];
        const double eps = args.epsilons[i % ne];
        table.rows.push_back({theta, eps, F[i]});
        if (i % ne == 0) curve.push_back({theta, F[i]});
    }
    write_csv(args.out, table);
    maybe_svg(args.svg, curve);
}

// ---- blocklength ----

struct BlocklengthArgs {
    SpecChoice spec;
    std::string eta_grid;
    std::vector<double> epsilons;
    std::string out;
};

void run_blocklength(const BlocklengthArgs& args) {
    const ProblemSpec spec = resolve_spec(args.spec);
    const JointPMF2& pmf = require_source(spec, "blocklength");
    const auto [H, disp] = sw_statistics(pmf);
    if (args.epsilons.empty()) throw std::invalid_argument("give at least one --eps");

    const std::vector<double> etas = parse_grid(args.eta_grid);
    const std::size_t ne = args.epsilons.size();
    std::vector<std::optional<double>> nd(etas.size() * ne), nexp(etas.size() * ne);
    parallel_for(nd.size(), [&](std::size_t i) {
        const double eta = etas[i / ne];
        const double eps = args.epsilons[i % ne];
        const double R1 = (1.0 + eta) * H.h1g2;
        const double R2 = (1.0 + eta) * H.h2g1;
        try {
            nd[i] = static_cast<double>(blocklength_dispersion(H, disp.V, eps, R1, R2));
        } catch (const InfeasibleError&) {
            // below the asymptotic region: reported as an empty field
        }
        try {
            nexp[i] = static_cast<double>(blocklength_exponent(pmf, eps, R1, R2));
        } catch (const InfeasibleError&) {
        }
    });

    CsvTable table;
    table.header = {"eta", "epsilon", "n_D", "n_E"};
    for (std::size_t i = 0; i < nd.size(); ++i) {
        table.rows.push_back({etas[i / ne], args.epsilons[i % ne], nd[i], nexp[i]});
    }
    write_csv(args.out, table);
}

// ---- simulate ----

struct SimulateArgs {
    SpecChoice spec;
    long long n = 1;
    double r1 = 0.0, r2 = 0.0;
    long long trials = 1000;
    std::uint64_t seed = 0;
    std::string out;
};

void run_simulate(const SimulateArgs& args) {
    const ProblemSpec spec = resolve_spec(args.spec);
    const JointPMF2& pmf = require_source(spec, "simulate");
    SimConfig config;
    config.n = args.n;
    config.trials = args.trials;
    config.seed = args.seed;
    config.shards = static_cast<int>(std::min<unsigned>(thread_cap(), 32));
    const SimReport report = binning_simulator(pmf, args.r1, args.r2, config);

    CsvTable table;
    table.header = {"estimate", "std_error", "trials", "seed", "exhaustive"};
    table.rows.push_back({report.estimate, report.std_error, static_cast<double>(report.trials),
                          static_cast<double>(report.seed),
                          report.exhaustive && *report.exhaustive ? 1.0 : 0.0});
    write_csv(args.out, table);
}

// ---- sv-set ----

struct SvSetArgs {
    std::vector<double> cov;
    std::vector<double> epsilons;
    std::vector<long long> ns{1};
    std::string grid; // optional absolute z1 grid, unscaled
    std::string out, svg;
};

void run_sv_set(const SvSetArgs& args) {
    if (args.cov.size() != 4) {
        throw std::invalid_argument("--cov takes the four entries of a 2x2 matrix, row major");
    }
    if (std::abs(args.cov[1] - args.cov[2]) > 1e-12) {
        throw std::invalid_argument("--cov must be symmetric");
    }
    if (args.epsilons.empty()) throw std::invalid_argument("give at least one --eps");
    for (long long n : args.ns) {
        if (n < 1) throw std::invalid_argument("--n must be at least 1");
    }
    const CovMatrix V(2, args.cov.data());
    const double s1 = std::sqrt(V(0, 0));
    const double s2 = std::sqrt(V(1, 1));

    CsvTable table;
    table.header = {"z1", "z2"};
    std::vector<std::array<double, 2>> first_curve;
    bool captured_first = false;
    for (double eps : args.epsilons) {
        if (!(eps > 0.0 && eps < 1.0)) throw std::invalid_argument("--eps must be in (0, 1)");
        // Below z1 = s1 q_inv(eps) no z2 can reach the target probability.
        std::vector<double> z1s;
        if (args.grid.empty()) {
            const double start = s1 * (q_inv(eps) + 1e-3);
            const double stop = s1 * (q_inv(eps) + 3.5);
            z1s.resize(241);
            for (std::size_t i = 0; i < z1s.size(); ++i) {
                z1s[i] = start + (stop - start) * static_cast<double>(i) / 240.0;
            }
        } else {
            z1s = parse_grid(args.grid);
        }
        std::vector<std::optional<double>> z2s(z1s.size());
        const double target = 1.0 - eps;
        parallel_for(z1s.size(), [&](std::size_t i) {
            const double z1 = z1s[i];
            double lo = -40.0 * s2, hi = 60.0 * s2;
            if (mvn_lower_orthant(V, {z1, hi}) < target) return; // infeasible z1
            while (hi - lo > 1e-10) {
                const double mid = 0.5 * (lo + hi);
                if (mvn_lower_orthant(V, {z1, mid}) >= target) hi = mid;
                else lo = mid;
            }
            z2s[i] = hi;
        });
        for (long long n : args.ns) {
            const double scale = 1.0 / std::sqrt(static_cast<double>(n));
            for (std::size_t i = 0; i < z1s.size(); ++i) {
                if (!z2s[i]) continue;
                const double a = z1s[i] * scale;
                const double b = *z2s[i] * scale;
                table.rows.push_back({a, b});
                if (!captured_first) first_curve.push_back({a, b});
            }
            captured_first = true;
        }
    }
    write_csv(args.out, table);
    maybe_svg(args.svg, first_curve);
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"finite-blocklength rate region toolkit"};
    app.require_subcommand(1);

    RegionArgs region;
    auto* reg = app.add_subcommand("region", "trace a rate-region boundary to CSV");
    reg->add_option("--spec", region.spec.file, "problem file, JSON or TOML");
    reg->add_option("--preset", region.spec.preset, "built-in instance name");
    reg->add_option("--n", region.n, "blocklength")->required();
    reg->add_option("--eps", region.eps, "error budget in (0,1)")->required();
    reg->add_option("--side", region.side, "inner|outer|sied (sources; channels: inner)");
    reg->add_option("--correction", region.correction, "log|none (default none)");
    reg->add_option("--grid", region.grid, "R1 grid start:stop:count")->required();
    reg->add_option("--out", region.out, "output CSV path")->required();
    reg->add_option("--svg", region.svg, "optional SVG plot path");

    LocalDispArgs ld;
    auto* ldc = app.add_subcommand("local-disp", "directional dispersion along a theta grid");
    ldc->add_option("--spec", ld.spec.file, "problem file, JSON or TOML");
    ldc->add_option("--preset", ld.spec.preset, "built-in instance name");
    ldc->add_option("--corner", ld.corner, "min-r1|min-r2 boundary corner");
    ldc->add_option("--r1", ld.r1, "explicit boundary point, first rate");
    ldc->add_option("--r2", ld.r2, "explicit boundary point, second rate");
    ldc->add_option("--theta-grid", ld.theta_grid, "angle grid start:stop:count")->required();
    ldc->add_option("--eps", ld.epsilons, "error budget, repeatable")->required();
    ldc->add_option("--out", ld.out, "output CSV path")->required();
    ldc->add_option("--svg", ld.svg, "optional SVG plot path (first eps)");

    BlocklengthArgs bl;
    auto* blc = app.add_subcommand("blocklength", "required blocklength along an eta grid");
    blc->add_option("--spec", bl.spec.file, "problem file, JSON or TOML");
    blc->add_option("--preset", bl.spec.preset, "built-in instance name");
    blc->add_option("--eta-grid", bl.eta_grid, "rate margin grid start:stop:count")->required();
    blc->add_option("--eps", bl.epsilons, "error budget, repeatable")->required();
    blc->add_option("--out", bl.out, "output CSV path")->required();

    SimulateArgs sim;
    auto* simc = app.add_subcommand("simulate", "random-binning error rate at one rate pair");
    simc->add_option("--spec", sim.spec.file, "problem file, JSON or TOML");
    simc->add_option("--preset", sim.spec.preset, "built-in instance name");
    simc->add_option("--n", sim.n, "blocklength")->required();
    simc->add_option("--r1", sim.r1, "first encoder rate")->required();
    simc->add_option("--r2", sim.r2, "second encoder rate")->required();
    simc->add_option("--trials", sim.trials, "Monte-Carlo trials")->required();
    simc->add_option("--seed", sim.seed, "RNG seed (default 0)");
    simc->add_option("--out", sim.out, "output CSV path")->required();

    SvSetArgs sv;
    auto* svc = app.add_subcommand("sv-set", "second-order penalty region boundary curves");
    svc->add_option("--cov", sv.cov, "2x2 covariance, row major")->expected(4)->required();
    svc->add_option("--eps", sv.epsilons, "error budget, repeatable")->required();
    svc->add_option("--n", sv.ns, "blocklength, repeatable (default 1: unscaled)");
    svc->add_option("--grid", sv.grid, "optional absolute z1 grid start:stop:count");
    svc->add_option("--out", sv.out, "output CSV path")->required();
    svc->add_option("--svg", sv.svg, "optional SVG plot path (first curve)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*reg) run_region(region);
        else if (*ldc) run_local_disp(ld);
        else if (*blc) run_blocklength(bl);
        else if (*simc) run_simulate(sim);
        else if (*svc) run_sv_set(sv);
        return 0;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NonconvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ResourceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
}

} // namespace dispersia
