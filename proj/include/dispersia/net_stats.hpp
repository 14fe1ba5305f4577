#pragma once

#include "dispersia/probkit.hpp"

#include <array>
#include <optional>
#include <vector>

namespace dispersia {

// Discrete memoryless multiple-access channel with an optional time-sharing
// variable Q. Inputs are independent given Q; the channel does not see Q.
// Construction validates that every distribution row is nonnegative and sums
// to 1 within 1e-12 and that the induced joint over (Q, X1, X2, Y) sums to 1.
struct MacSpec {
    int q_size = 1;
    int x1_size = 0;
    int x2_size = 0;
    int y_size = 0;
    std::vector<double> p_q;          // p(q), length q_size
    std::vector<double> p_x1_given_q; // p(x1|q), row-major [q][x1]
    std::vector<double> p_x2_given_q; // p(x2|q), row-major [q][x2]
    std::vector<double> W;            // W(y|x1,x2), row-major [x1][x2][y]

    MacSpec(int q_size, int x1_size, int x2_size, int y_size,
            std::vector<double> p_q, std::vector<double> p_x1_given_q,
            std::vector<double> p_x2_given_q, std::vector<double> W);

    // Fixed input distributions, no time sharing (|Q| = 1).
    static MacSpec without_time_sharing(std::vector<double> p_x1, std::vector<double> p_x2,
                                        int y_size, std::vector<double> W);

    double w(int x1, int x2, int y) const { return W[(x1 * x2_size + x2) * y_size + y]; }
    double joint(int q, int x1, int x2, int y) const;
};

// Two-receiver discrete memoryless broadcast channel with degraded message
// sets: the auxiliary U carries the common layer, X the full input. The
// channel is stored canonically as the full W(y1,y2|x) with the per-receiver
// branches derived by marginalization.
struct AbcSpec {
    int u_size = 0;
    int x_size = 0;
    int y1_size = 0;
    int y2_size = 0;
    std::vector<double> p_ux; // p(u,x), row-major [u][x]
    std::vector<double> W;    // W(y1,y2|x), row-major [x][y1][y2]
    std::vector<double> W1;   // W1(y1|x), derived, row-major [x][y1]
    std::vector<double> W2;   // W2(y2|x), derived, row-major [x][y2]

    AbcSpec(int u_size, int x_size, int y1_size, int y2_size,
            std::vector<double> p_ux, std::vector<double> W);

    // Conditionally independent receiver branches: W(y1,y2|x) = W1(y1|x) W2(y2|x).
    static AbcSpec from_branches(int u_size, int x_size, int y1_size, int y2_size,
                                 std::vector<double> p_ux,
                                 std::vector<double> W1, std::vector<double> W2);

    double joint(int u, int x, int y1, int y2) const;
};

// First, second and third moments of an information density vector. kappa is
// the maximum spectral norm of the finite-difference Hessians of the three
// mutual informations as functions of the vectorized joint; it and nu are
// absent when the joint has a zero cell or a cell too small for the
// finite-difference step (deterministic channels in particular).
struct InfoDispersion {
    std::array<double, 3> I{};   // bits, componentwise >= 0
    CovMatrix V;                 // 3x3, bits^2
    std::optional<double> kappa; // bits
    double xi = 0.0;             // bits^3
    std::optional<double> nu;    // alphabet product + kappa + 3/2
    bool degenerate = false;     // rank(V) == 0
};

// Information density vector at one joint cell with positive mass:
// MAC: (log2 W/P(y|x2,q), log2 W/P(y|x1,q), log2 W/P(y|q)).
std::array<double, 3> mac_density(const MacSpec& spec, int q, int x1, int x2, int y);

// ABC: (log2 W1(y1|x)/P(y1|u), log2 P(y2|u)/P(y2), log2 W1(y1|x)/P(y1)).
std::array<double, 3> abc_density(const AbcSpec& spec, int u, int x, int y1, int y2);

// Moments of the MAC density vector; the mean is
// (I(X1;Y|X2,Q), I(X2;Y|X1,Q), I(X1,X2;Y|Q)).
InfoDispersion mac_statistics(const MacSpec& spec);

// Moments of the ABC density vector; the mean is
// (I(X;Y1|U), I(U;Y2), I(X;Y1)).
InfoDispersion abc_statistics(const AbcSpec& spec);

enum class NetProblem { mac, abc };

// True iff the auxiliary alphabet is no larger than the size sufficient to
// exhaust the achievable region: 9 for the MAC time-sharing variable,
// |X| + 6 for the ABC cloud-center variable.
bool cardinality_guard(NetProblem problem, int aux_size, int x_size);

} // namespace dispersia
