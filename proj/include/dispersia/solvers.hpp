#pragma once
#include <vector>

#include "dispersia/probkit.hpp"
#include "dispersia/sw_stats.hpp"

namespace dispersia {

// Constrained second-order optimization: minimize c . u subject to
//
//   P( a_j . u >= Z_j  for every j in `active` )  >=  1 - epsilon,
//
// where Z ~ N(0, V) is the three-dimensional entropy-density fluctuation.
// The constraint rows are a_1, a_2 and the derived sum row a_3 = a_1 + a_2,
// mirroring how the third density component is the sum of the first two.
//
// c must be componentwise nonnegative (rate penalties), `active` a nonempty
// subset of {1,2,3}. The solution u* is the vector of second-order rate
// adjustments per sqrt(n); infeasible or unattained problems raise
// InfeasibleError, and a solver that cannot certify its tolerances raises
// NonconvergenceError.
struct GenDispProblem {
    std::vector<double> c;    // objective weights, length k, all >= 0
    std::vector<double> a1;   // first constraint row, length k
    std::vector<double> a2;   // second constraint row, length k
    std::vector<int> active;  // which of the three density constraints bind
    CovMatrix V;              // 3x3 dispersion matrix
    double epsilon = 0.1;     // error budget, in (0,1)
};

std::vector<double> solve_gen_disp(const GenDispProblem& problem);

// Which face of the first-order rate region a boundary point sits on. The
// two corner cases are named after the rate that is at its conditional
// minimum there: at corner_min_r1 the pair is (H(X1|X2), H(X2)), at
// corner_min_r2 it is (H(X1), H(X2|X1)).
enum class BoundaryCase { vertical, horizontal, sum_rate, corner_min_r1, corner_min_r2 };

struct LocalDispersionResult {
    double F = 0.0;          // +inf when the approach direction is boundary-parallel
    BoundaryCase case_id = BoundaryCase::vertical;
    double residual = 0.0;   // |implicit equation residual|; 0 for closed forms
    bool boundary_parallel = false;
};

// Directional dispersion coefficient F(theta) at a point (R1*, R2*) on the
// boundary of the first-order region: the squared second-order backoff needed
// when the rate pair approaches the boundary point from direction
// (cos theta, sin theta). Flat faces give closed forms; at the two corners F
// solves a bivariate-normal equation numerically. Angles pointing along the
// boundary (outside the admissible open interval for the face) make the
// approach first-order impossible, reported as F = +inf with the
// boundary_parallel flag set rather than as an error. The point must lie on
// the boundary (tolerance 1e-9, corners classified first) and epsilon must
// be in (0,1); a corner with epsilon = 1/2 leaves F indeterminate and is
// rejected as a domain error.
LocalDispersionResult local_dispersion(const EntropyTriple& H, const CovMatrix& V,
                                       double R1_star, double R2_star, double theta,
                                       double epsilon);

// Weighted sum-rate dispersion G(epsilon; alpha, beta): the squared
// second-order coefficient of the minimal weighted rate alpha*R1 + beta*R2.
// Requires alpha, beta >= 0, not both zero. The three aligned cases
// (beta = 0, alpha = 0, alpha = beta) have closed forms valid for every
// epsilon in (0,1); the strictly ordered cases reduce to a two-constraint
// solve_gen_disp instance and reject epsilon = 1/2, where the normalization
// by Q^{-1}(epsilon) breaks down.
double sum_rate_dispersion(const CovMatrix& V, double alpha, double beta, double epsilon);

}  // namespace dispersia
