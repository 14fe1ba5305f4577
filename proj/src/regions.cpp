#include "dispersia/regions.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>

#include "dispersia/errors.hpp"

namespace dispersia {
namespace {

constexpr double kBisectTol = 1e-9; // absolute, bits
constexpr double kOrderSlack = 1e-8;

void validate_query(const RegionQuery& query) {
    if (query.n < 2) throw std::invalid_argument("blocklength must be at least 2");
    if (!(query.epsilon > 0.0 && query.epsilon < 1.0))
        throw std::invalid_argument("error budget must lie strictly inside (0,1)");
}

void require_side(const RegionQuery& query, std::initializer_list<RegionSide> allowed) {
    for (RegionSide s : allowed)
        if (query.side == s) return;
    throw std::invalid_argument("query side does not match the region being tested");
}

// log-term shift subtracted from the rate margins, in bits. nu is required
// only for the inner sides; the outer correction is universal.
double margin_shift(const RegionQuery& query, const std::optional<double>& nu) {
    if (query.correction == CorrectionMode::gaussian_only) return 0.0;
    const double ln = std::log2(static_cast<double>(query.n)) / static_cast<double>(query.n);
    if (query.side == RegionSide::sw_outer) return -ln;
    if (!nu.has_value())
        throw std::invalid_argument(
            "log-term correction needs the nu statistic, which is unavailable for this "
            "source or channel (zero probability cells)");
    return *nu * ln;
}

bool gaussian_member(const std::array<double, 3>& margins, const CovMatrix& V,
                     const RegionQuery& query, const std::optional<double>& nu) {
    if (V.dim != 3) throw std::invalid_argument("fluctuation covariance must be 3x3");
    if (V.rank == 0)
        throw std::invalid_argument(
            "fluctuation covariance has rank 0; the region degenerates to a rectangle and "
            "needs no Gaussian test");
    const double shift = margin_shift(query, nu);
    const double rn = std::sqrt(static_cast<double>(query.n));
    SQuery sq;
    sq.cov = V;
    sq.epsilon = query.epsilon;
    for (int i = 0; i < 3; ++i) sq.z[i] = rn * (margins[i] - shift);
    return in_S(sq);
}

struct MembershipFn {
    // region membership at (r1, r2) plus the direction in which it is
    // monotone: up-closed regions stay members as r2 grows
    bool up_closed = true;
    std::array<double, 3> center{};
    const CovMatrix* V = nullptr;
    std::function<bool(double, double)> member;
};

BoundaryPolyline trace_impl(const MembershipFn& fn, const RegionQuery& query,
                            const std::vector<double>& r1_grid, double r2_cap) {
    validate_query(query);
    if (r1_grid.empty()) throw std::invalid_argument("R1 grid must not be empty");
    for (size_t i = 1; i < r1_grid.size(); ++i)
        if (!(r1_grid[i] > r1_grid[i - 1]))
            throw std::invalid_argument("R1 grid must be strictly increasing");
    const double cap = r2_cap >= 0.0 ? r2_cap : fn.center[2] + 5.0;

    BoundaryPolyline out;
    out.query = query;
    out.center = fn.center;
    out.V = *fn.V;
    for (double r1 : r1_grid) {
        const bool at_floor = fn.member(r1, 0.0);
        const bool at_cap = fn.member(r1, cap);
        double boundary;
        if (fn.up_closed) {
            if (!at_cap) continue; // no feasible R2 at this R1
            if (at_floor) {
                boundary = 0.0;
            } else {
                double lo = 0.0, hi = cap;
                while (hi - lo > kBisectTol) {
                    const double mid = 0.5 * (lo + hi);
                    (fn.member(r1, mid) ? hi : lo) = mid;
                }
                boundary = hi;
            }
        } else {
            if (!at_floor) continue;
            if (at_cap)
                throw std::logic_error(
                    "R2 cap lies inside a down-closed region; membership cannot be "
                    "bracketed");
            double lo = 0.0, hi = cap;
            while (hi - lo > kBisectTol) {
                const double mid = 0.5 * (lo + hi);
                (fn.member(r1, mid) ? lo : hi) = mid;
            }
            boundary = lo;
        }
        // spot-check monotonicity around the threshold: stepping into the
        // region must keep membership, stepping out must lose it
        const double in_dir = fn.up_closed ? 1.0 : -1.0;
        for (double step : {0.01, 0.1}) {
            const double inside = boundary + in_dir * step;
            if (inside >= 0.0 && inside <= cap && !fn.member(r1, inside))
                throw std::logic_error("membership is not monotone in R2 above the boundary");
            const double outside = boundary - in_dir * step;
            if (outside >= 0.0 && outside <= cap && fn.member(r1, outside))
                throw std::logic_error("membership is not monotone in R2 below the boundary");
        }
        out.points.push_back({r1, boundary});
    }
    for (size_t i = 1; i < out.points.size(); ++i)
        if (out.points[i][1] > out.points[i - 1][1] + kOrderSlack)
            throw std::logic_error("traced boundary is not nonincreasing in R2");
    return out;
}

} // namespace

bool sw_member(const EntropyTriple& H, const SwDispersion& disp, const RegionQuery& query,
               double R1, double R2) {
    validate_query(query);
    require_side(query, {RegionSide::sw_inner, RegionSide::sw_outer});
    if (!std::isfinite(R1) || !std::isfinite(R2))
        throw std::invalid_argument("rates must be finite");
    const std::array<double, 3> margins = {R1 - H.h1g2, R2 - H.h2g1, R1 + R2 - H.h12};
    return gaussian_member(margins, disp.V, query, disp.nu);
}

bool sied_member(const EntropyTriple& H, const SwDispersion& disp, const RegionQuery& query,
                 double R1, double R2) {
    validate_query(query);
    require_side(query, {RegionSide::sw_sied});
    if (!std::isfinite(R1) || !std::isfinite(R2))
        throw std::invalid_argument("rates must be finite");
    if (disp.V.dim != 3) throw std::invalid_argument("fluctuation covariance must be 3x3");
    const double scale = q_inv(query.epsilon) / std::sqrt(static_cast<double>(query.n));
    return R1 >= H.h1g2 + std::sqrt(std::max(disp.V(0, 0), 0.0)) * scale &&
           R2 >= H.h2g1 + std::sqrt(std::max(disp.V(1, 1), 0.0)) * scale &&
           R1 + R2 >= H.h12 + std::sqrt(std::max(disp.V(2, 2), 0.0)) * scale;
}

bool mac_member(const InfoDispersion& info, const RegionQuery& query, double R1, double R2) {
    validate_query(query);
    require_side(query, {RegionSide::mac_inner});
    if (!std::isfinite(R1) || !std::isfinite(R2))
        throw std::invalid_argument("rates must be finite");
    const std::array<double, 3> margins = {info.I[0] - R1, info.I[1] - R2,
                                           info.I[2] - R1 - R2};
    return gaussian_member(margins, info.V, query, info.nu);
}

bool abc_member(const InfoDispersion& info, const RegionQuery& query, double R1, double R2) {
    validate_query(query);
    require_side(query, {RegionSide::abc_inner});
    if (!std::isfinite(R1) || !std::isfinite(R2))
        throw std::invalid_argument("rates must be finite");
    const std::array<double, 3> margins = {info.I[0] - R1, info.I[1] - R2,
                                           info.I[2] - R1 - R2};
    return gaussian_member(margins, info.V, query, info.nu);
}

BoundaryPolyline trace_boundary(const EntropyTriple& H, const SwDispersion& disp,
                                const RegionQuery& query, const std::vector<double>& r1_grid,
                                double r2_cap) {
    MembershipFn fn;
    fn.up_closed = true;
    fn.center = {H.h1g2, H.h2g1, H.h12};
    fn.V = &disp.V;
    switch (query.side) {
    case RegionSide::sw_inner:
    case RegionSide::sw_outer:
        fn.member = [&](double r1, double r2) { return sw_member(H, disp, query, r1, r2); };
        break;
    case RegionSide::sw_sied:
        fn.member = [&](double r1, double r2) { return sied_member(H, disp, query, r1, r2); };
        break;
    default:
        throw std::invalid_argument("source statistics given but the query names a channel region");
    }
    return trace_impl(fn, query, r1_grid, r2_cap);
}

BoundaryPolyline trace_boundary(const InfoDispersion& info, const RegionQuery& query,
                                const std::vector<double>& r1_grid, double r2_cap) {
    MembershipFn fn;
    fn.up_closed = false;
    fn.center = info.I;
    fn.V = &info.V;
    switch (query.side) {
    case RegionSide::mac_inner:
        fn.member = [&](double r1, double r2) { return mac_member(info, query, r1, r2); };
        break;
    case RegionSide::abc_inner:
        fn.member = [&](double r1, double r2) { return abc_member(info, query, r1, r2); };
        break;
    default:
        throw std::invalid_argument("channel statistics given but the query names a source region");
    }
    return trace_impl(fn, query, r1_grid, r2_cap);
}

} // namespace dispersia
