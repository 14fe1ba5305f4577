#pragma once

#include "dispersia/net_stats.hpp"
#include "dispersia/sw_stats.hpp"

#include <array>
#include <vector>

namespace dispersia {

// Whether membership applies the full logarithmic corrections or
// keeps only the Gaussian backoff term.
enum class CorrectionMode { with_log_terms, gaussian_only };

// Which finite-blocklength region a query refers to. The sw_* sides are
// up-closed in the rates (larger rates stay members); the channel sides are
// down-closed.
enum class RegionSide { sw_inner, sw_outer, sw_sied, mac_inner, abc_inner };

struct RegionQuery {
    long long n = 2;
    double epsilon = 0.1;
    CorrectionMode correction = CorrectionMode::gaussian_only;
    RegionSide side = RegionSide::sw_inner;
};

// One traced boundary: points ordered by strictly increasing R1 with
// nonincreasing R2, together with the query and the statistics the rates
// were measured against.
struct BoundaryPolyline {
    std::vector<std::array<double, 2>> points; // (R1, R2) in bits/symbol
    RegionQuery query;
    std::array<double, 3> center{}; // entropy or mutual-information vector
    CovMatrix V;
};

// Membership of (R1, R2) in the source-coding region named by query.side
// (sw_inner or sw_outer): tests sqrt(n) * (r - H - shift) against S(V, eps)
// with the rate vector r = (R1, R2, R1+R2). The shift is +nu*log2(n)/n for the
// inner side and -log2(n)/n for the outer side under with_log_terms, zero
// under gaussian_only. Throws std::invalid_argument when the inner
// correction is requested but the source statistics carry no nu (zero cells)
// or when rank(V) = 0.
bool sw_member(const EntropyTriple& H, const SwDispersion& disp, const RegionQuery& query,
               double R1, double R2);

// Membership in the side-information-at-encoders-and-decoder comparison
// region: three decoupled scalar constraints
// R1 >= H(X1|X2) + sqrt(V11/n) Qinv(eps), symmetrically for R2, and
// R1+R2 >= H(X1,X2) + sqrt(V33/n) Qinv(eps). Correction mode is ignored;
// this region is defined without logarithmic terms.
bool sied_member(const EntropyTriple& H, const SwDispersion& disp, const RegionQuery& query,
                 double R1, double R2);

// Membership of (R1, R2) in the channel-coding inner regions: rates sit below
// the mutual-information vector, so the test is sqrt(n) * (I - r - shift)
// against S(V, eps) with shift = nu*log2(n)/n under with_log_terms.
bool mac_member(const InfoDispersion& info, const RegionQuery& query, double R1, double R2);
bool abc_member(const InfoDispersion& info, const RegionQuery& query, double R1, double R2);

// Traces the region boundary over a strictly increasing R1 grid by bisecting
// R2 to absolute tolerance 1e-9 bits: the minimal member R2 for the up-closed
// source regions, the maximal member R2 for the channel regions. Grid points
// with no member R2 in [0, r2_cap] are omitted. A negative r2_cap selects the
// default of center[2] + 5 bits. Membership that fails a monotonicity
// spot-check around the bisected threshold throws std::logic_error.
BoundaryPolyline trace_boundary(const EntropyTriple& H, const SwDispersion& disp,
                                const RegionQuery& query, const std::vector<double>& r1_grid,
                                double r2_cap = -1.0);
BoundaryPolyline trace_boundary(const InfoDispersion& info, const RegionQuery& query,
                                const std::vector<double>& r1_grid, double r2_cap = -1.0);

} // namespace dispersia
