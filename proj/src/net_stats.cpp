#include "dispersia/net_stats.hpp"
#include "dispersia/errors.hpp"

#include "entropy_util.hpp"
#include "fd_hessian.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>

namespace dispersia {

namespace {

constexpr double kFdStep = 1e-5;

void check_distribution_rows(const std::vector<double>& v, int rows, int cols,
                             const char* what) {
    if (static_cast<int>(v.size()) != rows * cols) {
        throw std::invalid_argument(std::string(what) + ": entry count does not match the sizes");
    }
    for (int r = 0; r < rows; ++r) {
        double total = 0.0;
        for (int c = 0; c < cols; ++c) {
            const double x = v[r * cols + c];
            if (std::isnan(x) || x < 0.0) {
                throw std::invalid_argument(std::string(what) + ": entries must be nonnegative");
            }
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-12) {
            throw std::invalid_argument(std::string(what) + ": rows must sum to 1 within 1e-12");
        }
    }
}

// Shared moment pass: mean, covariance and third absolute central moment of
// a density function over an enumerated support, plus the optional
// curvature bound when the joint is strictly positive with enough margin for
// the finite-difference step.
struct MomentAccumulator {
    double mean[3] = {0, 0, 0};
    double cov[3][3] = {};
    double xi = 0.0;

    template <typename Cells, typename Density>
    InfoDispersion run(const Cells& cells, const Density& density) {
        for (const auto& [w, c] : cells) {
            const auto d = density(c);
            for (int t = 0; t < 3; ++t) mean[t] += w * d[t];
        }
        for (const auto& [w, c] : cells) {
            const auto d = density(c);
            double dev[3], norm2 = 0.0;
            for (int t = 0; t < 3; ++t) {
                dev[t] = d[t] - mean[t];
                norm2 += dev[t] * dev[t];
            }
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) cov[i][j] += w * dev[i] * dev[j];
            }
            xi += w * norm2 * std::sqrt(norm2);
        }
        InfoDispersion out;
        for (int t = 0; t < 3; ++t) {
            // Mutual informations are nonnegative; a negative mean can only
            // be rounding residue of an exactly-zero component.
            out.I[t] = std::max(mean[t], 0.0);
        }
        out.V = CovMatrix(3, &cov[0][0]);
        out.xi = xi;
        out.degenerate = (out.V.rank == 0);
        return out;
    }
};

using FdFunc = std::function<double(const std::vector<double>&)>;

// kappa over a list of mutual-information functionals of the vectorized
// joint, each a signed combination of axis-marginal entropies. Only genuine
// marginals appear so the off-simplex extension matches the one used for the
// source statistics.
using SignedMasks = std::vector<std::pair<double, unsigned>>;

std::optional<double> fd_kappa(const std::vector<double>& joint, const std::vector<int>& dims,
                               const std::vector<SignedMasks>& terms) {
    double min_cell = 1.0;
    for (double v : joint) min_cell = std::min(min_cell, v);
    if (!(min_cell > 2.0 * kFdStep)) return std::nullopt;
    double kappa = 0.0;
    for (const auto& masks : terms) {
        FdFunc f = [&dims, &masks](const std::vector<double>& v) {
            double total = 0.0;
            for (const auto& [sign, mask] : masks) {
                total += sign * detail::marginal_entropy(v, dims, mask);
            }
            return total;
        };
        kappa = std::max(kappa, detail::fd_hessian_norm(f, joint, kFdStep));
    }
    return kappa;
}

} // namespace

MacSpec::MacSpec(int q_size_, int x1_size_, int x2_size_, int y_size_,
                 std::vector<double> p_q_, std::vector<double> p_x1_given_q_,
                 std::vector<double> p_x2_given_q_, std::vector<double> W_)
    : q_size(q_size_), x1_size(x1_size_), x2_size(x2_size_), y_size(y_size_),
      p_q(std::move(p_q_)), p_x1_given_q(std::move(p_x1_given_q_)),
      p_x2_given_q(std::move(p_x2_given_q_)), W(std::move(W_)) {
    if (q_size < 1 || x1_size < 1 || x2_size < 1 || y_size < 1) {
        throw std::invalid_argument("MacSpec: all alphabet sizes must be at least 1");
    }
    check_distribution_rows(p_q, 1, q_size, "MacSpec p_q");
    check_distribution_rows(p_x1_given_q, q_size, x1_size, "MacSpec p_x1_given_q");
    check_distribution_rows(p_x2_given_q, q_size, x2_size, "MacSpec p_x2_given_q");
    check_distribution_rows(W, x1_size * x2_size, y_size, "MacSpec W");
    double total = 0.0;
    for (int q = 0; q < q_size; ++q) {
        for (int a = 0; a < x1_size; ++a) {
            for (int b = 0; b < x2_size; ++b) {
                for (int y = 0; y < y_size; ++y) total += joint(q, a, b, y);
            }
        }
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw std::invalid_argument("MacSpec: induced joint does not sum to 1");
    }
}

MacSpec MacSpec::without_time_sharing(std::vector<double> p_x1, std::vector<double> p_x2,
                                      int y_size, std::vector<double> W) {
    const int n1 = static_cast<int>(p_x1.size());
    const int n2 = static_cast<int>(p_x2.size());
    return MacSpec(1, n1, n2, y_size, {1.0}, std::move(p_x1), std::move(p_x2), std::move(W));
}

double MacSpec::joint(int q, int x1, int x2, int y) const {
    return p_q[q] * p_x1_given_q[q * x1_size + x1] * p_x2_given_q[q * x2_size + x2] *
           w(x1, x2, y);
}

AbcSpec::AbcSpec(int u_size_, int x_size_, int y1_size_, int y2_size_,
                 std::vector<double> p_ux_, std::vector<double> W_)
    : u_size(u_size_), x_size(x_size_), y1_size(y1_size_), y2_size(y2_size_),
      p_ux(std::move(p_ux_)), W(std::move(W_)) {
    if (u_size < 1 || x_size < 1 || y1_size < 1 || y2_size < 1) {
        throw std::invalid_argument("AbcSpec: all alphabet sizes must be at least 1");
    }
    check_distribution_rows(p_ux, 1, u_size * x_size, "AbcSpec p_ux");
    check_distribution_rows(W, x_size, y1_size * y2_size, "AbcSpec W");
    W1.assign(x_size * y1_size, 0.0);
    W2.assign(x_size * y2_size, 0.0);
    for (int x = 0; x < x_size; ++x) {
        for (int a = 0; a < y1_size; ++a) {
            for (int b = 0; b < y2_size; ++b) {
                const double v = W[(x * y1_size + a) * y2_size + b];
                W1[x * y1_size + a] += v;
                W2[x * y2_size + b] += v;
            }
        }
    }
}

AbcSpec AbcSpec::from_branches(int u_size, int x_size, int y1_size, int y2_size,
                               std::vector<double> p_ux,
                               std::vector<double> W1, std::vector<double> W2) {
    check_distribution_rows(W1, x_size, y1_size, "AbcSpec W1");
    check_distribution_rows(W2, x_size, y2_size, "AbcSpec W2");
    std::vector<double> W(x_size * y1_size * y2_size);
    for (int x = 0; x < x_size; ++x) {
        for (int a = 0; a < y1_size; ++a) {
            for (int b = 0; b < y2_size; ++b) {
                W[(x * y1_size + a) * y2_size + b] =
                    W1[x * y1_size + a] * W2[x * y2_size + b];
            }
        }
    }
    return AbcSpec(u_size, x_size, y1_size, y2_size, std::move(p_ux), std::move(W));
}

double AbcSpec::joint(int u, int x, int y1, int y2) const {
    return p_ux[u * x_size + x] * W[(x * y1_size + y1) * y2_size + y2];
}

std::array<double, 3> mac_density(const MacSpec& spec, int q, int x1, int x2, int y) {
    if (q < 0 || q >= spec.q_size || x1 < 0 || x1 >= spec.x1_size || x2 < 0 ||
        x2 >= spec.x2_size || y < 0 || y >= spec.y_size) {
        throw std::invalid_argument("mac_density: symbol out of range");
    }
    if (!(spec.joint(q, x1, x2, y) > 0.0)) {
        throw std::invalid_argument("mac_density: zero-probability cell");
    }
    double py_g2 = 0.0, py_g1 = 0.0, py = 0.0;
    for (int a = 0; a < spec.x1_size; ++a) {
        py_g2 += spec.p_x1_given_q[q * spec.x1_size + a] * spec.w(a, x2, y);
    }
    for (int b = 0; b < spec.x2_size; ++b) {
        py_g1 += spec.p_x2_given_q[q * spec.x2_size + b] * spec.w(x1, b, y);
    }
    for (int a = 0; a < spec.x1_size; ++a) {
        for (int b = 0; b < spec.x2_size; ++b) {
            py += spec.p_x1_given_q[q * spec.x1_size + a] *
                  spec.p_x2_given_q[q * spec.x2_size + b] * spec.w(a, b, y);
        }
    }
    const double lw = std::log2(spec.w(x1, x2, y));
    return {lw - std::log2(py_g2), lw - std::log2(py_g1), lw - std::log2(py)};
}

std::array<double, 3> abc_density(const AbcSpec& spec, int u, int x, int y1, int y2) {
    if (u < 0 || u >= spec.u_size || x < 0 || x >= spec.x_size || y1 < 0 ||
        y1 >= spec.y1_size || y2 < 0 || y2 >= spec.y2_size) {
        throw std::invalid_argument("abc_density: symbol out of range");
    }
    if (!(spec.joint(u, x, y1, y2) > 0.0)) {
        throw std::invalid_argument("abc_density: zero-probability cell");
    }
    double pu = 0.0;
    for (int xx = 0; xx < spec.x_size; ++xx) pu += spec.p_ux[u * spec.x_size + xx];
    double py1_gu = 0.0, py2_gu = 0.0, py1 = 0.0, py2 = 0.0;
    for (int xx = 0; xx < spec.x_size; ++xx) {
        const double pxu = spec.p_ux[u * spec.x_size + xx] / pu;
        py1_gu += pxu * spec.W1[xx * spec.y1_size + y1];
        py2_gu += pxu * spec.W2[xx * spec.y2_size + y2];
    }
    for (int uu = 0; uu < spec.u_size; ++uu) {
        for (int xx = 0; xx < spec.x_size; ++xx) {
            const double p = spec.p_ux[uu * spec.x_size + xx];
            py1 += p * spec.W1[xx * spec.y1_size + y1];
            py2 += p * spec.W2[xx * spec.y2_size + y2];
        }
    }
    const double lw1 = std::log2(spec.W1[x * spec.y1_size + y1]);
    return {lw1 - std::log2(py1_gu),
            std::log2(py2_gu) - std::log2(py2),
            lw1 - std::log2(py1)};
}

InfoDispersion mac_statistics(const MacSpec& spec) {
    struct Cell {
        int q, x1, x2, y;
    };
    std::vector<std::pair<double, Cell>> cells;
    std::vector<double> joint;
    joint.reserve(spec.q_size * spec.x1_size * spec.x2_size * spec.y_size);
    for (int q = 0; q < spec.q_size; ++q) {
        for (int a = 0; a < spec.x1_size; ++a) {
            for (int b = 0; b < spec.x2_size; ++b) {
                for (int y = 0; y < spec.y_size; ++y) {
                    const double w = spec.joint(q, a, b, y);
                    joint.push_back(w);
                    if (w > 0.0) cells.push_back({w, {q, a, b, y}});
                }
            }
        }
    }
    MomentAccumulator acc;
    InfoDispersion out = acc.run(cells, [&spec](const Cell& c) {
        return mac_density(spec, c.q, c.x1, c.x2, c.y);
    });

    // Axes (Q, X1, X2, Y) = bits (1, 2, 4, 8); I(A;B|C) is expanded as
    // H(AC) + H(BC) - H(C) - H(ABC) over axis marginals.
    const std::vector<int> dims = {spec.q_size, spec.x1_size, spec.x2_size, spec.y_size};
    const std::vector<SignedMasks> terms = {
        {{1, 1 | 2 | 4}, {1, 1 | 4 | 8}, {-1, 1 | 4}, {-1, 15}}, // I(X1;Y|X2,Q)
        {{1, 1 | 2 | 4}, {1, 1 | 2 | 8}, {-1, 1 | 2}, {-1, 15}}, // I(X2;Y|X1,Q)
        {{1, 1 | 2 | 4}, {1, 1 | 8}, {-1, 1}, {-1, 15}},         // I(X1,X2;Y|Q)
    };
    out.kappa = fd_kappa(joint, dims, terms);
    if (out.kappa) {
        out.nu = spec.q_size * spec.x1_size * spec.x2_size * spec.y_size + *out.kappa + 1.5;
    }
    return out;
}

InfoDispersion abc_statistics(const AbcSpec& spec) {
    struct Cell {
        int u, x, y1, y2;
    };
    std::vector<std::pair<double, Cell>> cells;
    std::vector<double> joint;
    joint.reserve(spec.u_size * spec.x_size * spec.y1_size * spec.y2_size);
    for (int u = 0; u < spec.u_size; ++u) {
        for (int x = 0; x < spec.x_size; ++x) {
            for (int a = 0; a < spec.y1_size; ++a) {
                for (int b = 0; b < spec.y2_size; ++b) {
                    const double w = spec.joint(u, x, a, b);
                    joint.push_back(w);
                    if (w > 0.0) cells.push_back({w, {u, x, a, b}});
                }
            }
        }
    }
    MomentAccumulator acc;
    InfoDispersion out = acc.run(cells, [&spec](const Cell& c) {
        return abc_density(spec, c.u, c.x, c.y1, c.y2);
    });

    // Axes (U, X, Y1, Y2) = bits (1, 2, 4, 8).
    const std::vector<int> dims = {spec.u_size, spec.x_size, spec.y1_size, spec.y2_size};
    const std::vector<SignedMasks> terms = {
        {{1, 1 | 2}, {1, 1 | 4}, {-1, 1}, {-1, 1 | 2 | 4}}, // I(X;Y1|U)
        {{1, 1}, {1, 8}, {-1, 1 | 8}},                      // I(U;Y2)
        {{1, 2}, {1, 4}, {-1, 2 | 4}},                      // I(X;Y1)
    };
    out.kappa = fd_kappa(joint, dims, terms);
    if (out.kappa) {
        out.nu = spec.u_size * spec.x_size * std::max(spec.y1_size, spec.y2_size) +
                 *out.kappa + 1.5;
    }
    return out;
}

bool cardinality_guard(NetProblem problem, int aux_size, int x_size) {
    if (aux_size < 1 || x_size < 1) {
        throw std::invalid_argument("cardinality_guard: sizes must be at least 1");
    }
    return problem == NetProblem::mac ? aux_size <= 9 : aux_size <= x_size + 6;
}

} // namespace dispersia
