#pragma once

#include "dispersia/probkit.hpp"

#include <array>
#include <optional>
#include <utility>
#include <vector>

namespace dispersia {

// Joint pmf of a two-component discrete memoryless source. Entries are stored
// row-major: p(x1, x2) = p[x1 * cols + x2]. Construction validates that the
// entries are nonnegative and sum to 1 within 1e-12.
struct JointPMF2 {
    int rows = 0;                 // |X1|
    int cols = 0;                 // |X2|
    std::vector<double> p;
    bool strictly_positive = false; // every cell > 0
    bool dependent = false;         // I(X1;X2) > 1e-12

    JointPMF2(int rows, int cols, std::vector<double> probs);

    double at(int x1, int x2) const { return p[x1 * cols + x2]; }
    std::vector<double> marginal1() const; // p(x1)
    std::vector<double> marginal2() const; // p(x2)
};

// H(X1|X2), H(X2|X1), H(X1,X2) in bits.
struct EntropyTriple {
    double h1g2 = 0.0;
    double h2g1 = 0.0;
    double h12 = 0.0;
};

// Second- and third-order statistics of the entropy density vector. kappa is
// the maximum spectral norm of the Hessians of the three entropy functionals
// in the vectorized pmf coordinates; it (and nu, which is built from it) is
// absent when the pmf has a zero cell or a cell too small for the fixed
// finite-difference step to stay inside the positive orthant.
struct SwDispersion {
    CovMatrix V;                      // 3x3, bits^2
    std::optional<double> kappa;      // bits (spectral norm bound)
    double xi = 0.0;                  // E || h - H ||^3, bits^3
    std::optional<double> nu;         // |X1||X2| + kappa + 3/2
    bool degenerate = false;          // rank(V) == 0
};

// Entropy density vector at one cell:
// (-log2 p(x1|x2), -log2 p(x2|x1), -log2 p(x1,x2)). The cell must have
// positive probability.
std::array<double, 3> entropy_density(const JointPMF2& pmf, int x1, int x2);

// Mean (entropy triple) and dispersion statistics of the entropy density
// vector under the source.
std::pair<EntropyTriple, SwDispersion> sw_statistics(const JointPMF2& pmf);

// Doubly symmetric binary source with crossover zeta in (0, 0.5): pmf
// [[(1-z)/2, z/2], [z/2, (1-z)/2]] and the scalar dispersion
// V_zeta = z(1-z) [log2((1-z)/z)]^2; the full V equals V_zeta * (all ones).
std::pair<JointPMF2, double> dsbs(double zeta);

} // namespace dispersia
