#pragma once

// Internal helpers shared by the statistics modules: entropy of a raw
// nonnegative vector and entropy of an axis marginal of a flat
// multidimensional array. Both accept off-simplex inputs because the
// finite-difference Hessians probe displaced points (natural extension of H
// with the 0 log 0 = 0 convention).

#include <cmath>
#include <vector>

namespace dispersia::detail {

inline double vec_entropy(const std::vector<double>& v) {
    double h = 0.0;
    for (double x : v) {
        if (x > 0.0) h -= x * std::log2(x);
    }
    return h;
}

// Entropy of the marginal obtained by keeping the axes whose bit is set in
// `mask` (bit a corresponds to dims[a]) and summing out the rest. The flat
// layout is row-major with the last axis fastest.
inline double marginal_entropy(const std::vector<double>& v,
                               const std::vector<int>& dims, unsigned mask) {
    const int axes = static_cast<int>(dims.size());
    std::vector<int> rstride(axes, 0);
    int rsize = 1;
    for (int a = axes - 1; a >= 0; --a) {
        if (mask & (1u << a)) {
            rstride[a] = rsize;
            rsize *= dims[a];
        }
    }
    std::vector<double> red(rsize, 0.0);
    std::vector<int> idx(axes, 0);
    for (double cell : v) {
        int r = 0;
        for (int a = 0; a < axes; ++a) r += rstride[a] * idx[a];
        red[r] += cell;
        for (int a = axes - 1; a >= 0; --a) {
            if (++idx[a] < dims[a]) break;
            idx[a] = 0;
        }
    }
    return vec_entropy(red);
}

} // namespace dispersia::detail
