#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "obskit/grid.hpp"

namespace obskit {

/// Symmetric 2x2 matrix; in 1D only xx is meaningful.
struct Sym2 {
    double xx = 0.0, xy = 0.0, yy = 0.0;

    Sym2() = default;
    Sym2(double a, double b, double c) : xx(a), xy(b), yy(c) {}

    static Sym2 identity(int dim) { return dim == 1 ? Sym2{1, 0, 0} : Sym2{1, 0, 1}; }

    Sym2 operator+(const Sym2& o) const { return {xx + o.xx, xy + o.xy, yy + o.yy}; }
    Sym2 operator-(const Sym2& o) const { return {xx - o.xx, xy - o.xy, yy - o.yy}; }
    Sym2 operator*(double s) const { return {xx * s, xy * s, yy * s}; }

    double trace(int dim) const { return dim == 1 ? xx : xx + yy; }

    /// tr(this * M) for symmetric M.
    double dot(const Sym2& m, int dim) const {
        return dim == 1 ? xx * m.xx : xx * m.xx + 2.0 * xy * m.xy + yy * m.yy;
    }

    std::pair<double, double> eigenvalues(int dim) const {
        if (dim == 1) return {xx, xx};
        double mean = 0.5 * (xx + yy);
        double r = std::sqrt(0.25 * (xx - yy) * (xx - yy) + xy * xy);
        return {mean - r, mean + r};
    }

    /// Operator norm (largest |eigenvalue|).
    double norm(int dim) const {
        auto [lo, hi] = eigenvalues(dim);
        return std::max(std::abs(lo), std::abs(hi));
    }

    double frobenius(int dim) const {
        return dim == 1 ? std::abs(xx) : std::sqrt(xx * xx + 2.0 * xy * xy + yy * yy);
    }
};

namespace detail {
inline void require_same_grid(const GridPtr& a, const GridPtr& b, const char* what) {
    if (a.get() != b.get())
        throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}
} // namespace detail

/// One real value per non-exterior node.
class ScalarField {
public:
    explicit ScalarField(GridPtr grid, double fill = 0.0)
        : grid_(std::move(grid)), values_(static_cast<std::size_t>(grid_->value_count()), fill) {}

    const GridPtr& grid() const { return grid_; }

    double& at(int i, int j) { return values_[static_cast<std::size_t>(grid_->value_index(i, j))]; }
    double at(int i, int j) const {
        return values_[static_cast<std::size_t>(grid_->value_index(i, j))];
    }

    const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    double max_abs() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }

    ScalarField& operator+=(const ScalarField& o) {
        detail::require_same_grid(grid_, o.grid_, "field sum");
        for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
        return *this;
    }

    ScalarField& operator*=(double s) {
        for (double& v : values_) v *= s;
        return *this;
    }

    friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
    friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

    friend ScalarField operator-(ScalarField a, const ScalarField& b) {
        detail::require_same_grid(a.grid_, b.grid_, "field difference");
        for (std::size_t k = 0; k < a.values_.size(); ++k) a.values_[k] -= b.values_[k];
        return a;
    }

private:
    GridPtr grid_;
    std::vector<double> values_;
};

/// Pointwise evaluation of an expression at node coordinates.  Rejects
/// non-finite values naming the offending node.
template <typename F>
ScalarField sample_field(F&& f, const GridPtr& grid) {
    ScalarField out(grid);
    grid->for_each_value([&](int i, int j, int) {
        double v = f(grid->x(i), grid->y(j));
        if (!std::isfinite(v)) {
            std::ostringstream msg;
            msg << "expression is not finite at node (" << grid->x(i);
            if (grid->dim() == 2) msg << ", " << grid->y(j);
            msg << ")";
            throw std::domain_error(msg.str());
        }
        out.at(i, j) = v;
    });
    return out;
}

/// One symmetric matrix per non-exterior node (coefficients of the operator).
class MatrixField {
public:
    explicit MatrixField(GridPtr grid, Sym2 fill = {})
        : grid_(std::move(grid)), values_(static_cast<std::size_t>(grid_->value_count()), fill) {}

    template <typename F>
    static MatrixField sample(F&& f, const GridPtr& grid) {
        MatrixField out(grid);
        grid->for_each_value(
            [&](int i, int j, int) { out.at(i, j) = f(grid->x(i), grid->y(j)); });
        return out;
    }

    static MatrixField identity(const GridPtr& grid) {
        return MatrixField(grid, Sym2::identity(grid->dim()));
    }

    const GridPtr& grid() const { return grid_; }

    Sym2& at(int i, int j) { return values_[static_cast<std::size_t>(grid_->value_index(i, j))]; }
    const Sym2& at(int i, int j) const {
        return values_[static_cast<std::size_t>(grid_->value_index(i, j))];
    }

    const std::vector<Sym2>& values() const { return values_; }
    std::vector<Sym2>& values() { return values_; }

    /// Smallest and largest eigenvalue over all nodes.
    std::pair<double, double> eigenvalue_range() const {
        double lo = 1e300, hi = -1e300;
        for (const Sym2& m : values_) {
            auto [a, b] = m.eigenvalues(grid_->dim());
            lo = std::min(lo, a);
            hi = std::max(hi, b);
        }
        return {lo, hi};
    }

    /// Check the declared ellipticity window at every node.
    void require_eigenvalues_within(double lambda_lo, double lambda_hi, double tol = 1e-12) const {
        auto [lo, hi] = eigenvalue_range();
        if (lo < lambda_lo - tol || hi > lambda_hi + tol) {
            std::ostringstream msg;
            msg << "coefficient eigenvalues [" << lo << ", " << hi
                << "] leave the declared window [" << lambda_lo << ", " << lambda_hi << "]";
            throw std::invalid_argument(msg.str());
        }
    }

private:
    GridPtr grid_;
    std::vector<Sym2> values_;
};

} // namespace obskit
