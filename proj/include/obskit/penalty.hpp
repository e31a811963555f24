#pragma once

#include <array>
#include <cmath>
#include <stdexcept>

#include "obskit/field.hpp"
#include "obskit/operators.hpp"

namespace obskit {

namespace detail {

/// Normalized integral of the bump exp(-1/(t(1-t))) on (0,1), tabulated on
/// 4096 cells with per-cell Simpson quadrature and symmetrized so that the
/// midpoint value is exactly 1/2.  Linear interpolation between knots keeps
/// the profile monotone.
class SigmoidTable {
public:
    static const SigmoidTable& instance() {
        static SigmoidTable t;
        return t;
    }

    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        if (t >= 1.0) return 1.0;
        double pos = t * cells;
        int cell = static_cast<int>(pos);
        if (cell >= cells) cell = cells - 1;
        double frac = pos - cell;
        return knots_[cell] + frac * (knots_[cell + 1] - knots_[cell]);
    }

    /// Piecewise-constant derivative of the interpolated ramp.
    double slope(double t) const {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        int cell = static_cast<int>(t * cells);
        if (cell >= cells) cell = cells - 1;
        return (knots_[cell + 1] - knots_[cell]) * cells;
    }

private:
    static constexpr int cells = 4096;

    SigmoidTable() {
        auto bump = [](double t) {
            if (t <= 0.0 || t >= 1.0) return 0.0;
            return std::exp(-1.0 / (t * (1.0 - t)));
        };
        std::array<double, cells> piece{};
        const double dt = 1.0 / cells;
        for (int c = 0; c < cells; ++c) {
            double a = c * dt;
            piece[c] = dt / 6.0 * (bump(a) + 4.0 * bump(a + 0.5 * dt) + bump(a + dt));
        }
        std::array<double, cells + 1> raw{};
        raw[0] = 0.0;
        for (int c = 0; c < cells; ++c) raw[c + 1] = raw[c] + piece[c];
        const double total = raw[cells];
        // Symmetrize: the bump is even about 1/2, make the table exactly so.
        for (int c = 0; c <= cells; ++c)
            knots_[c] = 0.5 * (raw[c] / total + (1.0 - raw[cells - c] / total));
        knots_[0] = 0.0;
        knots_[cells] = 1.0;
    }

    std::array<double, cells + 1> knots_{};
};

} // namespace detail

/// Smoothed Heaviside: 0 for s <= 0, 1 for s >= eps, a smooth non-decreasing
/// ramp in between, plus the companion s * phi(s) used by the parabolic
/// reference equation.
class PenaltyShape {
public:
    explicit PenaltyShape(double eps) : eps_(eps) {
        if (!(eps > 0.0)) throw std::invalid_argument("penalty width eps must be positive");
    }

    double eps() const { return eps_; }

    double phi(double s) const {
        if (s <= 0.0) return 0.0;
        if (s >= eps_) return 1.0;
        return detail::SigmoidTable::instance()(s / eps_);
    }

    /// psi(s) = s * phi(s): 0 for s <= 0, s for s >= eps, and within [0, s]
    /// for s >= 0.
    double psi(double s) const {
        if (s <= 0.0) return 0.0;
        if (s >= eps_) return s;
        return s * phi(s);
    }

    /// d phi / ds, zero outside (0, eps).
    double phi_slope(double s) const {
        if (s <= 0.0 || s >= eps_) return 0.0;
        return detail::SigmoidTable::instance().slope(s / eps_) / eps_;
    }

private:
    double eps_;
};

/// g = f - F(x, D^2 psi) at interior nodes (zero on the boundary ring, where
/// no stencil exists and the solvers never read it).
inline ScalarField assemble_g_elliptic(const OperatorFamily& family, const ScalarField& f,
                                       const ScalarField& obstacle) {
    detail::require_same_grid(family.grid(), f.grid(), "assemble_g_elliptic");
    detail::require_same_grid(f.grid(), obstacle.grid(), "assemble_g_elliptic");
    ScalarField g(f.grid());
    f.grid()->for_each_interior(
        [&](int i, int j) { g.at(i, j) = f.at(i, j) - family.apply_at(obstacle, i, j); });
    return g;
}

/// Parabolic data term g = -f + psi_t - a_ij D_ij psi on one time slab; the
/// caller supplies psi_t as the backward difference matching the stepper.
inline ScalarField assemble_g_parabolic(const MatrixField& A, const ScalarField& f,
                                        const ScalarField& obstacle,
                                        const ScalarField& obstacle_dt) {
    detail::require_same_grid(A.grid(), f.grid(), "assemble_g_parabolic");
    detail::require_same_grid(f.grid(), obstacle.grid(), "assemble_g_parabolic");
    detail::require_same_grid(f.grid(), obstacle_dt.grid(), "assemble_g_parabolic");
    ScalarField g(f.grid());
    f.grid()->for_each_interior([&](int i, int j) {
        g.at(i, j) =
            -f.at(i, j) + obstacle_dt.at(i, j) - apply_coefficient_at(A, obstacle, i, j);
    });
    return g;
}

/// Right-hand side of the elliptic reference equation:
///   g+ * phi(u - psi) + f - g+,
/// nodewise with g+ = max(g, 0).  Sandwiched between f - g+ and f for any u.
inline ScalarField penalized_rhs_elliptic(const ScalarField& g, const ScalarField& f,
                                          const ScalarField& u, const ScalarField& obstacle,
                                          const PenaltyShape& shape) {
    detail::require_same_grid(g.grid(), f.grid(), "penalized_rhs_elliptic");
    detail::require_same_grid(f.grid(), u.grid(), "penalized_rhs_elliptic");
    detail::require_same_grid(u.grid(), obstacle.grid(), "penalized_rhs_elliptic");
    ScalarField rhs(f.grid());
    f.grid()->for_each_value([&](int i, int j, int) {
        double gp = std::max(g.at(i, j), 0.0);
        rhs.at(i, j) = gp * shape.phi(u.at(i, j) - obstacle.at(i, j)) + f.at(i, j) - gp;
    });
    return rhs;
}

/// Right-hand side of the parabolic reference equation:
///   psi_eps(g) * (1 - phi(u - psi)) + f,
/// which equals -psi_eps(g) phi(u - psi) + psi_eps(g) + f.
inline ScalarField penalized_rhs_parabolic(const ScalarField& g, const ScalarField& f,
                                           const ScalarField& u, const ScalarField& obstacle,
                                           const PenaltyShape& shape) {
    detail::require_same_grid(g.grid(), f.grid(), "penalized_rhs_parabolic");
    detail::require_same_grid(f.grid(), u.grid(), "penalized_rhs_parabolic");
    detail::require_same_grid(u.grid(), obstacle.grid(), "penalized_rhs_parabolic");
    ScalarField rhs(f.grid());
    f.grid()->for_each_value([&](int i, int j, int) {
        double pg = shape.psi(g.at(i, j));
        rhs.at(i, j) =
            pg * (1.0 - shape.phi(u.at(i, j) - obstacle.at(i, j))) + f.at(i, j);
    });
    return rhs;
}

} // namespace obskit
