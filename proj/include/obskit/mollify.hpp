#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "obskit/field.hpp"

namespace obskit {

namespace detail {

struct MollifierKernel {
    std::vector<int> di, dj;
    std::vector<double> w;

    MollifierKernel(const Grid& g, double radius) {
        if (radius < g.h())
            throw std::invalid_argument(
                "mollification radius below the mesh width degenerates to a point mass; "
                "skip mollification instead");
        const int reach = static_cast<int>(std::floor(radius / g.h()));
        const int jr = g.dim() == 2 ? reach : 0;
        for (int b = -jr; b <= jr; ++b) {
            for (int a = -reach; a <= reach; ++a) {
                double rho = g.h() * std::sqrt(double(a) * a + double(b) * b) / radius;
                if (rho >= 1.0) continue;
                di.push_back(a);
                dj.push_back(b);
                w.push_back(std::exp(-1.0 / (1.0 - rho * rho)));
            }
        }
    }
};

// Weights renormalized over the nodes actually available near the boundary,
// so constants stay fixed points and matrix values stay convex combinations.
template <typename Value, typename Field>
Field convolve(const Field& f, double radius) {
    const Grid& g = *f.grid();
    MollifierKernel k(g, radius);
    Field out(f.grid());
    g.for_each_value([&](int i, int j, int) {
        Value acc{};
        double total = 0.0;
        for (std::size_t q = 0; q < k.w.size(); ++q) {
            int ii = i + k.di[q];
            int jj = j + k.dj[q];
            if (ii < 0 || jj < 0 || ii >= g.nx() || jj >= g.ny()) continue;
            if (g.is_exterior(ii, jj)) continue;
            acc = acc + f.at(ii, jj) * k.w[q];
            total += k.w[q];
        }
        out.at(i, j) = acc * (1.0 / total);
    });
    return out;
}

} // namespace detail

/// Discrete convolution with a normalized compactly supported bump.
inline ScalarField mollify(const ScalarField& f, double radius) {
    return detail::convolve<double>(f, radius);
}

/// Matrix variant; eigenvalue bounds survive (convex combination nodewise).
inline MatrixField mollify(const MatrixField& f, double radius) {
    return detail::convolve<Sym2>(f, radius);
}

} // namespace obskit
