#pragma once

#include "dispersia/sw_stats.hpp"

#include <array>

namespace dispersia {

// Which of the three tilted random-coding exponent functions to evaluate: the
// branch charged against R1 alone (the other component is side information),
// the branch charged against R2 alone, or the joint branch charged against
// R1 + R2.
enum class ExponentKind { e1g2, e2g1, e12 };

// Tilted exponent at parameter rho, in bits:
//   e1g2: rho R1 - log2 sum_{x2} [ sum_{x1} p(x1,x2)^{1/(1+rho)} ]^{1+rho}
//   e2g1: the same with the roles of x1 and x2 swapped, charged against R2
//   e12:  rho (R1+R2) - (1+rho) log2 sum_{x1,x2} p(x1,x2)^{1/(1+rho)}
// Zero cells contribute nothing to the sums. All three vanish at rho = 0 and
// are concave in rho. Throws std::invalid_argument for rho outside [0, 1].
double gallager_e(const JointPMF2& pmf, ExponentKind which, double R1, double R2,
                  double rho);

// Result of maximizing the smallest of the three exponent functions over the
// tilting parameter rho in [0, 1].
struct ExponentEval {
    double rho_star = 0.0;             // maximizing tilt
    double E_lower = 0.0;              // max-min value in bits, floored at 0
    std::array<double, 3> components{}; // e1g2, e2g1, e12 evaluated at rho_star
};

// Maximizes min(e1g2, e2g1, e12) over rho by golden-section search (each
// function is concave, so their pointwise minimum is too) to a rho tolerance
// of 1e-8. The result is positive exactly when both conditional rates and the
// sum rate sit strictly inside the achievable region.
ExponentEval lower_exponent(const JointPMF2& pmf, double R1, double R2);

// Least integer n >= 2 with P[Z <= sqrt(n) (R - H)] >= 1 - epsilon, where
// Z ~ N(0, V) and R - H is the margin vector
// (R1 - H(X1|X2), R2 - H(X2|X1), R1 + R2 - H(X1,X2)).
// Found by exponential bracketing followed by integer bisection; the bracket
// asserts that the probability is nondecreasing in n, which holds whenever
// every margin is nonnegative. Throws InfeasibleError when the probability
// can never reach the target (a negative margin on a fluctuating component,
// or a zero margin whose limiting orthant probability falls short).
long long blocklength_dispersion(const EntropyTriple& H, const CovMatrix& V,
                                 double epsilon, double R1, double R2);

// Blocklength estimate from the exponent bound: ceil(log2(3/epsilon) /
// E_lower) with E_lower from lower_exponent. Throws InfeasibleError when
// E_lower <= 1e-12 (rates on or outside the achievable region give no decay).
long long blocklength_exponent(const JointPMF2& pmf, double epsilon, double R1,
                               double R2);

} // namespace dispersia
