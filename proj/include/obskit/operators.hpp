#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "obskit/field.hpp"
#include "obskit/grid.hpp"
#include "obskit/rng.hpp"

namespace obskit {

/// How the mixed second difference is formed.  The skewed variants are the
/// 7-point stencils whose orientation must follow the sign of the mixed
/// coefficient for the scheme to stay monotone; `centered` is the symmetric
/// 4-point cross used when no coefficient is attached.
enum class MixedStencil { centered, skew_up, skew_down };

/// Second differences of u at an interior node.  Pure derivatives use the
/// 3-point central stencil, the mixed one the requested variant; all are
/// O(h^2) at interior nodes of smooth u and exact on quadratics.
inline Sym2 hessian_at(const ScalarField& u, int i, int j,
                       MixedStencil mode = MixedStencil::centered) {
    const Grid& g = *u.grid();
    const double h2 = g.h() * g.h();
    Sym2 d;
    if (g.dim() == 1) {
        d.xx = (u.at(i - 1, 0) - 2.0 * u.at(i, 0) + u.at(i + 1, 0)) / h2;
        return d;
    }
    const double c = u.at(i, j);
    d.xx = (u.at(i - 1, j) - 2.0 * c + u.at(i + 1, j)) / h2;
    d.yy = (u.at(i, j - 1) - 2.0 * c + u.at(i, j + 1)) / h2;
    switch (mode) {
        case MixedStencil::centered:
            d.xy = (u.at(i + 1, j + 1) + u.at(i - 1, j - 1) - u.at(i + 1, j - 1) -
                    u.at(i - 1, j + 1)) /
                   (4.0 * h2);
            break;
        case MixedStencil::skew_up:
            // (D11 + 2 D12 + D22)/2 minus the pure parts
            d.xy = (2.0 * c + u.at(i + 1, j + 1) + u.at(i - 1, j - 1) - u.at(i + 1, j) -
                    u.at(i - 1, j) - u.at(i, j + 1) - u.at(i, j - 1)) /
                   (2.0 * h2);
            break;
        case MixedStencil::skew_down:
            d.xy = -(2.0 * c + u.at(i + 1, j - 1) + u.at(i - 1, j + 1) - u.at(i + 1, j) -
                     u.at(i - 1, j) - u.at(i, j + 1) - u.at(i, j - 1)) /
                   (2.0 * h2);
            break;
    }
    return d;
}

/// Per-node matrix of second differences (interior nodes; zero elsewhere).
inline MatrixField hessian_stencils(const ScalarField& u,
                                    MixedStencil mode = MixedStencil::centered) {
    MatrixField out(u.grid());
    u.grid()->for_each_interior([&](int i, int j) { out.at(i, j) = hessian_at(u, i, j, mode); });
    return out;
}

/// First differences (central) at an interior node.
inline std::pair<double, double> gradient_at(const ScalarField& u, int i, int j) {
    const Grid& g = *u.grid();
    const double two_h = 2.0 * g.h();
    double gx = (u.at(i + 1, j) - u.at(i - 1, j)) / two_h;
    double gy = g.dim() == 2 ? (u.at(i, j + 1) - u.at(i, j - 1)) / two_h : 0.0;
    return {gx, gy};
}

/// Action of one coefficient field on u at an interior node, written as the
/// positive combination
///   (a11-|a12|) D11 + (a22-|a12|) D22 + |a12| (diagonal pair),
/// which is the monotone 7-point scheme (needs |a12| <= min(a11, a22)).
inline double apply_coefficient_at(const MatrixField& A, const ScalarField& u, int i, int j) {
    const Grid& g = *u.grid();
    const double h2 = g.h() * g.h();
    const Sym2& a = A.at(i, j);
    if (g.dim() == 1)
        return a.xx * (u.at(i - 1, 0) - 2.0 * u.at(i, 0) + u.at(i + 1, 0)) / h2;
    const double c = u.at(i, j);
    const double m = std::abs(a.xy);
    double v = (a.xx - m) * (u.at(i - 1, j) - 2.0 * c + u.at(i + 1, j)) +
               (a.yy - m) * (u.at(i, j - 1) - 2.0 * c + u.at(i, j + 1));
    if (m > 0.0) {
        if (a.xy > 0.0)
            v += m * (u.at(i + 1, j + 1) + u.at(i - 1, j - 1) - 2.0 * c);
        else
            v += m * (u.at(i + 1, j - 1) + u.at(i - 1, j + 1) - 2.0 * c);
    }
    return v / h2;
}

/// Monotone-stencil condition |a12| <= min(a11, a22) at every node.
inline bool monotone_stencil_ok(const MatrixField& A, double tol = 1e-14) {
    if (A.grid()->dim() == 1) {
        for (const Sym2& a : A.values())
            if (!(a.xx > 0.0)) return false;
        return true;
    }
    for (const Sym2& a : A.values())
        if (std::abs(a.xy) > std::min(a.xx, a.yy) + tol) return false;
    return true;
}

/// A finite set of uniformly elliptic coefficient fields.  One member is a
/// linear operator; several realize the convex Bellman operator
/// F(x, M) = max_k tr(A_k(x) M) (so F(x, 0) = 0 and F is convex in M by
/// construction).
struct OperatorFamily {
    std::vector<MatrixField> members;
    double lambda_lo = 1.0;
    double lambda_hi = 1.0;

    OperatorFamily(std::vector<MatrixField> m, double lo, double hi)
        : members(std::move(m)), lambda_lo(lo), lambda_hi(hi) {
        if (members.empty()) throw std::invalid_argument("operator family needs a member");
        for (std::size_t k = 1; k < members.size(); ++k)
            detail::require_same_grid(members[0].grid(), members[k].grid(), "operator family");
        if (!(lambda_lo > 0.0) || lambda_hi < lambda_lo)
            throw std::invalid_argument("ellipticity constants must satisfy 0 < lambda <= Lambda");
        for (const MatrixField& m2 : members) m2.require_eigenvalues_within(lambda_lo, lambda_hi);
    }

    static OperatorFamily single(MatrixField A) {
        auto [lo, hi] = A.eigenvalue_range();
        std::vector<MatrixField> m;
        m.push_back(std::move(A));
        return OperatorFamily(std::move(m), lo, hi);
    }

    const GridPtr& grid() const { return members.front().grid(); }
    bool linear() const { return members.size() == 1; }

    /// F(x, D^2 u) at an interior node: max over members of the monotone action.
    double apply_at(const ScalarField& u, int i, int j) const {
        double best = apply_coefficient_at(members[0], u, i, j);
        for (std::size_t k = 1; k < members.size(); ++k)
            best = std::max(best, apply_coefficient_at(members[k], u, i, j));
        return best;
    }

    /// F(x, M) with M given directly (used by the oscillation modulus).
    double eval(int i, int j, const Sym2& m) const {
        const int d = grid()->dim();
        double best = members[0].at(i, j).dot(m, d);
        for (std::size_t k = 1; k < members.size(); ++k)
            best = std::max(best, members[k].at(i, j).dot(m, d));
        return best;
    }

    void require_monotone() const {
        for (const MatrixField& m : members)
            if (!monotone_stencil_ok(m))
                throw std::invalid_argument(
                    "coefficients violate the monotone-stencil condition |a12| <= min(a11, a22)");
    }
};

/// Nodewise a_ij D_ij u (single member) or max_k over members; values at
/// interior nodes, zero at boundary nodes.
inline ScalarField apply_operator(const OperatorFamily& family, const ScalarField& u) {
    detail::require_same_grid(family.grid(), u.grid(), "apply_operator");
    ScalarField out(u.grid());
    u.grid()->for_each_interior([&](int i, int j) { out.at(i, j) = family.apply_at(u, i, j); });
    return out;
}

/// Sampled check of the ellipticity window: over random symmetric M and
/// random positive semidefinite N at sampled nodes, the ratios
/// (F(x, M+N) - F(x, M)) / |N| must stay inside [lambda, n*Lambda] for the
/// max-of-traces family.  Returns the observed (min, max); throws if a
/// sample escapes the certified window.
inline std::pair<double, double> audit_ellipticity(const OperatorFamily& family, int trials,
                                                   std::uint64_t seed = 1) {
    if (trials < 1) throw std::invalid_argument("audit needs at least one trial");
    const Grid& g = *family.grid();
    const int d = g.dim();
    std::vector<std::pair<int, int>> nodes;
    g.for_each_value([&](int i, int j, int) { nodes.emplace_back(i, j); });

    Rng rng(seed);
    auto random_sym = [&]() {
        Sym2 m{rng.uniform(-1.0, 1.0), d == 2 ? rng.uniform(-1.0, 1.0) : 0.0,
               d == 2 ? rng.uniform(-1.0, 1.0) : 0.0};
        return m;
    };
    auto random_psd = [&]() {
        if (d == 1) return Sym2{rng.uniform(0.05, 1.0), 0.0, 0.0};
        // v v^T + optional second direction
        double t = rng.uniform(0.0, 6.283185307179586);
        double c = std::cos(t), s = std::sin(t);
        double w1 = rng.uniform(0.05, 1.0);
        double w2 = rng.below(2) == 0 ? 0.0 : rng.uniform(0.05, 1.0);
        return Sym2{w1 * c * c + w2 * s * s, (w1 - w2) * c * s, w1 * s * s + w2 * c * c};
    };

    const double lo_cert = family.lambda_lo;
    const double hi_cert = d * family.lambda_hi;
    double lo = 1e300, hi = -1e300;
    for (int t = 0; t < trials; ++t) {
        auto [i, j] = nodes[rng.below(nodes.size())];
        Sym2 m = random_sym();
        Sym2 n = random_psd();
        double ratio = (family.eval(i, j, m + n) - family.eval(i, j, m)) / n.norm(d);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
        if (ratio < lo_cert * (1.0 - 1e-12) - 1e-12 || ratio > hi_cert * (1.0 + 1e-12) + 1e-12)
            throw std::runtime_error("family rejected as non-elliptic: sampled ratio " +
                                     std::to_string(ratio) + " outside [" +
                                     std::to_string(lo_cert) + ", " + std::to_string(hi_cert) +
                                     "]");
    }
    return {lo, hi};
}

} // namespace obskit
