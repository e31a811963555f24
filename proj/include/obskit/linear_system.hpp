#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "obskit/field.hpp"
#include "obskit/operators.hpp"

namespace obskit {

/// Thrown when a linear or fixed-point solve gives up; carries the residual
/// trace so the caller can see how the iteration behaved.
struct SolveFailure : std::runtime_error {
    SolveFailure(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/// Rows of M = shift*I - a_ij D_ij over the interior unknowns in row-major
/// order, with zero Dirichlet data folded in.  For monotone coefficients M is
/// an M-matrix (positive diagonal, nonpositive off-diagonals), which is what
/// the factorization, the SOR sweeps and the projected oracle all assume.
struct StencilSystem {
    GridPtr grid;
    int n = 0;
    int bandwidth = 0;
    std::vector<int> row_ptr, col;
    std::vector<double> val;
    std::vector<double> diag;

    static StencilSystem negative_operator(const MatrixField& A, double shift = 0.0) {
        if (!monotone_stencil_ok(A))
            throw std::invalid_argument(
                "coefficients violate the monotone-stencil condition |a12| <= min(a11, a22); "
                "refusing to assemble");
        const Grid& g = *A.grid();
        StencilSystem sys;
        sys.grid = A.grid();
        sys.n = g.interior_count();
        sys.row_ptr.reserve(sys.n + 1);
        sys.row_ptr.push_back(0);
        sys.diag.assign(sys.n, 0.0);
        const double inv_h2 = 1.0 / (g.h() * g.h());

        struct Entry {
            int di, dj;
            double w;
        };
        std::vector<Entry> stencil;
        g.for_each_interior([&](int i, int j) {
            const Sym2& a = A.at(i, j);
            stencil.clear();
            double center;
            if (g.dim() == 1) {
                center = 2.0 * a.xx;
                stencil.push_back({-1, 0, -a.xx});
                stencil.push_back({1, 0, -a.xx});
            } else {
                const double m = std::abs(a.xy);
                center = 2.0 * (a.xx + a.yy - m);
                stencil.push_back({-1, 0, -(a.xx - m)});
                stencil.push_back({1, 0, -(a.xx - m)});
                stencil.push_back({0, -1, -(a.yy - m)});
                stencil.push_back({0, 1, -(a.yy - m)});
                if (m > 0.0) {
                    if (a.xy > 0.0) {
                        stencil.push_back({1, 1, -m});
                        stencil.push_back({-1, -1, -m});
                    } else {
                        stencil.push_back({1, -1, -m});
                        stencil.push_back({-1, 1, -m});
                    }
                }
            }
            const int row = g.interior_index(i, j);
            sys.diag[row] = center * inv_h2 + shift;
            sys.col.push_back(row);
            sys.val.push_back(sys.diag[row]);
            for (const Entry& e : stencil) {
                if (e.w == 0.0) continue;
                int ii = i + e.di, jj = j + e.dj;
                if (g.is_boundary(ii, jj)) continue; // zero Dirichlet data
                int c = g.interior_index(ii, jj);
                sys.col.push_back(c);
                sys.val.push_back(e.w * inv_h2);
                sys.bandwidth = std::max(sys.bandwidth, std::abs(c - row));
            }
            sys.row_ptr.push_back(static_cast<int>(sys.col.size()));
        });
        return sys;
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(n, 0.0);
        for (int r = 0; r < n; ++r) {
            double acc = 0.0;
            for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
            y[r] = acc;
        }
        return y;
    }

    double residual_inf(const std::vector<double>& x, const std::vector<double>& b) const {
        double worst = 0.0;
        for (int r = 0; r < n; ++r) {
            double acc = -b[r];
            for (int k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += val[k] * x[col[k]];
            worst = std::max(worst, std::abs(acc));
        }
        return worst;
    }
};

/// Pack interior values of a field into the unknown vector.
inline std::vector<double> pack_interior(const ScalarField& f) {
    const Grid& g = *f.grid();
    std::vector<double> v(static_cast<std::size_t>(g.interior_count()));
    g.for_each_interior(
        [&](int i, int j) { v[static_cast<std::size_t>(g.interior_index(i, j))] = f.at(i, j); });
    return v;
}

/// Spread an unknown vector back to a field; boundary nodes get zero.
inline ScalarField unpack_interior(const GridPtr& grid, const std::vector<double>& v) {
    ScalarField f(grid);
    grid->for_each_interior([&](int i, int j) {
        f.at(i, j) = v[static_cast<std::size_t>(grid->interior_index(i, j))];
    });
    return f;
}

/// Direct banded factorization with an iterative (SOR) fallback once the band
/// storage would get out of hand.  Both paths verify the residual contract
/// |Mx - b| <= rtol * max(|b|, tiny) before returning.
class LinearSolver {
public:
    struct Options {
        double rtol = 1e-10;
        std::size_t band_memory_cap = std::size_t(384) << 20;
        double sor_omega = 1.5;
        long sor_max_sweeps = 400000;
    };

    explicit LinearSolver(StencilSystem sys) : LinearSolver(std::move(sys), Options{}) {}

    LinearSolver(StencilSystem sys, Options opt) : sys_(std::move(sys)), opt_(opt) {
        const std::size_t width = 2 * static_cast<std::size_t>(sys_.bandwidth) + 1;
        banded_ = width * sys_.n * sizeof(double) <= opt_.band_memory_cap;
        if (banded_) factor();
    }

    const StencilSystem& system() const { return sys_; }
    bool direct() const { return banded_; }

    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x = banded_ ? band_solve(b) : sor_solve(b);
        const double scale = std::max(inf_norm(b), 1e-300);
        double res = sys_.residual_inf(x, b);
        if (banded_ && res > opt_.rtol * scale) {
            // one refinement pass; the factorization is reused
            std::vector<double> r(sys_.n);
            for (int i = 0; i < sys_.n; ++i) r[i] = b[i];
            std::vector<double> mx = sys_.apply(x);
            for (int i = 0; i < sys_.n; ++i) r[i] -= mx[i];
            std::vector<double> dx = band_solve(r);
            for (int i = 0; i < sys_.n; ++i) x[i] += dx[i];
            res = sys_.residual_inf(x, b);
        }
        if (res > opt_.rtol * scale)
            throw SolveFailure("linear solve missed the residual contract (|r| = " +
                                   std::to_string(res) + ", scale " + std::to_string(scale) + ")",
                               {res});
        return x;
    }

private:
    static double inf_norm(const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    }

    double& band(int r, int c) { return band_[static_cast<std::size_t>(r) * stride_ + (c - r + kl_)]; }
    double band(int r, int c) const {
        return band_[static_cast<std::size_t>(r) * stride_ + (c - r + kl_)];
    }

    void factor() {
        kl_ = sys_.bandwidth;
        stride_ = 2 * kl_ + 1;
        band_.assign(static_cast<std::size_t>(sys_.n) * stride_, 0.0);
        for (int r = 0; r < sys_.n; ++r)
            for (int k = sys_.row_ptr[r]; k < sys_.row_ptr[r + 1]; ++k)
                band(r, sys_.col[k]) = sys_.val[k];
        // Doolittle without pivoting; fill-in stays inside the band and the
        // M-matrix structure keeps the elimination stable.
        const int n = sys_.n;
        for (int k = 0; k < n; ++k) {
            const double piv = band(k, k);
            if (piv == 0.0) throw SolveFailure("zero pivot in banded factorization", {});
            const int rmax = std::min(k + kl_, n - 1);
            for (int r = k + 1; r <= rmax; ++r) {
                double l = band(r, k) / piv;
                band(r, k) = l;
                if (l == 0.0) continue;
                for (int c = k + 1; c <= rmax; ++c) band(r, c) -= l * band(k, c);
            }
        }
    }

    std::vector<double> band_solve(const std::vector<double>& b) const {
        const int n = sys_.n;
        std::vector<double> x(b.begin(), b.end());
        for (int r = 0; r < n; ++r) {
            const int k0 = std::max(0, r - kl_);
            double acc = x[r];
            for (int k = k0; k < r; ++k) acc -= band(r, k) * x[k];
            x[r] = acc;
        }
        for (int r = n - 1; r >= 0; --r) {
            const int cmax = std::min(r + kl_, n - 1);
            double acc = x[r];
            for (int c = r + 1; c <= cmax; ++c) acc -= band(r, c) * x[c];
            x[r] = acc / band(r, r);
        }
        return x;
    }

    std::vector<double> sor_solve(const std::vector<double>& b) const {
        std::vector<double> x(sys_.n, 0.0);
        double omega = opt_.sor_omega;
        const double scale = std::max(inf_norm(b), 1e-300);
        std::vector<double> history;
        double last = 1e300;
        for (long sweep = 0; sweep < opt_.sor_max_sweeps; ++sweep) {
            for (int r = 0; r < sys_.n; ++r) {
                double acc = b[r];
                for (int k = sys_.row_ptr[r]; k < sys_.row_ptr[r + 1]; ++k)
                    acc -= sys_.val[k] * x[sys_.col[k]];
                x[r] += omega * acc / sys_.diag[r];
            }
            if (sweep % 32 == 31) {
                double res = sys_.residual_inf(x, b);
                history.push_back(res);
                if (res <= opt_.rtol * scale) return x;
                if (res > last) omega = std::max(1.0, 0.7 * omega);
                last = res;
            }
        }
        history.push_back(sys_.residual_inf(x, b));
        throw SolveFailure("iterative linear solve did not reach the residual contract", history);
    }

    StencilSystem sys_;
    Options opt_;
    bool banded_ = false;
    int kl_ = 0;
    int stride_ = 0;
    std::vector<double> band_;
};

} // namespace obskit
