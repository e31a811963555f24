#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "obskit/linear_system.hpp"
#include "obskit/norms.hpp"

namespace obskit {

/// Projected SOR for the discrete complementarity system
///   a_ij D_ij u <= f,  u >= psi,  (a_ij D_ij u - f)(u - psi) = 0,
/// with zero Dirichlet data.  Classical sweeps on the M-matrix form followed
/// by nodewise projection onto the obstacle; independent of everything the
/// penalized solvers do, which is the point of having it.
inline ScalarField psor_obstacle(const MatrixField& A, const ScalarField& f,
                                 const ScalarField& obstacle, double omega, double tol,
                                 long max_sweeps = 2000000) {
    detail::require_same_grid(A.grid(), f.grid(), "psor_obstacle");
    detail::require_same_grid(A.grid(), obstacle.grid(), "psor_obstacle");
    if (!(omega > 0.0) || !(omega < 2.0))
        throw std::invalid_argument("PSOR relaxation must lie in (0, 2)");
    if (!(tol > 0.0)) throw std::invalid_argument("PSOR tolerance must be positive");

    const StencilSystem sys = StencilSystem::negative_operator(A);
    std::vector<double> b = pack_interior(f);
    for (double& v : b) v = -v;
    const std::vector<double> lo = pack_interior(obstacle);

    std::vector<double> x = lo;
    for (double& v : x) v = std::max(v, 0.0);

    auto complementarity_ok = [&]() {
        double worst_eq = 0.0, worst_prod = 0.0;
        for (int r = 0; r < sys.n; ++r) {
            double acc = b[r];
            for (int k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k)
                acc -= sys.val[k] * x[sys.col[k]];
            worst_eq = std::max(worst_eq, acc); // = max(Lu - f, 0) side
            worst_prod = std::max(worst_prod, std::abs(acc * (x[r] - lo[r])));
        }
        return worst_eq <= 10.0 * tol && worst_prod <= 10.0 * tol;
    };

    for (long sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        for (int r = 0; r < sys.n; ++r) {
            double acc = b[r];
            for (int k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k)
                acc -= sys.val[k] * x[sys.col[k]];
            double next = std::max(x[r] + omega * acc / sys.diag[r], lo[r]);
            change = std::max(change, std::abs(next - x[r]));
            x[r] = next;
        }
        if (change < tol && complementarity_ok()) return unpack_interior(A.grid(), x);
    }
    throw SolveFailure("PSOR did not converge within the sweep cap", {});
}

namespace detail {

/// Dense LU with partial pivoting, enough for the tiny enumeration systems.
inline std::vector<double> dense_solve(std::vector<double> m, std::vector<double> b, int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    auto at = [&](int r, int c) -> double& { return m[static_cast<std::size_t>(r) * n + c]; };
    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r)
            if (std::abs(at(r, k)) > std::abs(at(piv, k))) piv = r;
        if (at(piv, k) == 0.0) throw std::runtime_error("singular active-set system");
        if (piv != k) {
            for (int c = 0; c < n; ++c) std::swap(at(piv, c), at(k, c));
            std::swap(b[static_cast<std::size_t>(piv)], b[static_cast<std::size_t>(k)]);
        }
        for (int r = k + 1; r < n; ++r) {
            double l = at(r, k) / at(k, k);
            at(r, k) = l;
            if (l == 0.0) continue;
            for (int c = k + 1; c < n; ++c) at(r, c) -= l * at(k, c);
            b[static_cast<std::size_t>(r)] -= l * b[static_cast<std::size_t>(k)];
        }
    }
    for (int r = n - 1; r >= 0; --r) {
        double acc = b[static_cast<std::size_t>(r)];
        for (int c = r + 1; c < n; ++c) acc -= at(r, c) * b[static_cast<std::size_t>(c)];
        b[static_cast<std::size_t>(r)] = acc / at(r, r);
    }
    return b;
}

} // namespace detail

/// Exhaustive oracle: enumerate every active set on a tiny grid, solve the
/// frozen linear system for each, and return the configuration whose
/// complementarity checks out.  Quadratic in nothing, exponential in nodes;
/// the 20-node cap keeps it a desk tool.
inline ScalarField brute_force_lcp(const MatrixField& A, const ScalarField& f,
                                   const ScalarField& obstacle) {
    detail::require_same_grid(A.grid(), f.grid(), "brute_force_lcp");
    detail::require_same_grid(A.grid(), obstacle.grid(), "brute_force_lcp");
    const int n = A.grid()->interior_count();
    if (n > 20)
        throw std::invalid_argument("brute-force oracle is capped at 20 interior nodes, got " +
                                    std::to_string(n));

    const StencilSystem sys = StencilSystem::negative_operator(A);
    std::vector<double> dense(static_cast<std::size_t>(n) * n, 0.0);
    for (int r = 0; r < n; ++r)
        for (int k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k)
            dense[static_cast<std::size_t>(r) * n + sys.col[k]] = sys.val[k];
    std::vector<double> b = pack_interior(f);
    for (double& v : b) v = -v;
    const std::vector<double> lo = pack_interior(obstacle);

    double scale = 1.0;
    for (int r = 0; r < n; ++r) scale = std::max(scale, std::abs(b[r]));
    for (int r = 0; r < n; ++r) scale = std::max(scale, sys.diag[r] * std::abs(lo[r]));
    const double tol = 1e-10 * scale;

    std::vector<int> free_rows;
    std::vector<double> sub, rhs, x(static_cast<std::size_t>(n));
    for (unsigned long mask = 0; mask < (1UL << n); ++mask) {
        free_rows.clear();
        for (int r = 0; r < n; ++r)
            if (!(mask >> r & 1UL)) free_rows.push_back(r);
        const int m = static_cast<int>(free_rows.size());

        // frozen system: u = psi on the active set, Mu = b on the rest
        sub.assign(static_cast<std::size_t>(m) * m, 0.0);
        rhs.assign(static_cast<std::size_t>(m), 0.0);
        for (int p = 0; p < m; ++p) {
            int r = free_rows[static_cast<std::size_t>(p)];
            double acc = b[static_cast<std::size_t>(r)];
            for (int k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k) {
                int c = sys.col[k];
                if (mask >> c & 1UL) {
                    acc -= sys.val[k] * lo[static_cast<std::size_t>(c)];
                } else {
                    int q = static_cast<int>(std::lower_bound(free_rows.begin(), free_rows.end(), c) -
                                             free_rows.begin());
                    sub[static_cast<std::size_t>(p) * m + q] = sys.val[k];
                }
            }
            rhs[static_cast<std::size_t>(p)] = acc;
        }
        std::vector<double> sol;
        try {
            sol = m > 0 ? detail::dense_solve(sub, rhs, m) : std::vector<double>{};
        } catch (const std::runtime_error&) {
            continue;
        }
        for (int r = 0; r < n; ++r) x[static_cast<std::size_t>(r)] = lo[static_cast<std::size_t>(r)];
        for (int p = 0; p < m; ++p)
            x[static_cast<std::size_t>(free_rows[static_cast<std::size_t>(p)])] =
                sol[static_cast<std::size_t>(p)];

        bool ok = true;
        for (int p = 0; p < m && ok; ++p)
            if (x[static_cast<std::size_t>(free_rows[static_cast<std::size_t>(p)])] <
                lo[static_cast<std::size_t>(free_rows[static_cast<std::size_t>(p)])] - tol)
                ok = false;
        if (ok) {
            for (int r = 0; r < n && ok; ++r) {
                if (!(mask >> r & 1UL)) continue;
                double acc = b[static_cast<std::size_t>(r)];
                for (int k = sys.row_ptr[r]; k < sys.row_ptr[r + 1]; ++k)
                    acc -= sys.val[k] * x[sys.col[k]];
                if (acc > tol) ok = false; // needs Lu <= f on the active set
            }
        }
        if (ok) return unpack_interior(A.grid(), x);
    }
    throw std::runtime_error(
        "no active set satisfies complementarity; the discretization is likely non-monotone");
}

/// Closed forms for the documented 1D contact instances.
struct ContactSolution {
    double contact_point;
    std::function<double(double)> value;
    std::function<double(double)> obstacle;
};

/// Catalogue of analytic 1D obstacle solutions.  Currently one entry:
/// "parabola-tangent" is psi = 1/2 - x^2, f = 0 on (-1, 1); the solution
/// rides the parabola on [-x*, x*] and leaves along the tangent lines to
/// (+-1, 0), with x* = 1 - 1/sqrt(2).
inline ContactSolution analytic_1d(const std::string& instance) {
    if (instance == "parabola-tangent") {
        const double xs = 1.0 - 1.0 / std::sqrt(2.0);
        return ContactSolution{
            xs,
            [xs](double x) {
                double a = std::abs(x);
                return a <= xs ? 0.5 - x * x : 2.0 * xs * (1.0 - a);
            },
            [](double x) { return 0.5 - x * x; },
        };
    }
    throw std::invalid_argument("unknown analytic 1D instance '" + instance + "'");
}

} // namespace obskit
