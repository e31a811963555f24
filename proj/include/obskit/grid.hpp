#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace obskit {

enum class NodeClass : unsigned char { interior, boundary, exterior };

enum class DomainPreset { interval, square, disk };

inline DomainPreset domain_preset_from_name(const std::string& name) {
    if (name == "interval") return DomainPreset::interval;
    if (name == "square") return DomainPreset::square;
    if (name == "disk") return DomainPreset::disk;
    throw std::invalid_argument("unknown domain preset '" + name + "'");
}

inline const char* domain_preset_name(DomainPreset p) {
    switch (p) {
        case DomainPreset::interval: return "interval";
        case DomainPreset::square: return "square";
        default: return "disk";
    }
}

/// Uniform lattice over a rectangular bounding box with a per-node
/// interior/boundary/exterior classification approximating the domain.
///
/// Immutable after construction; share freely via shared_ptr.  Node (i,j)
/// sits at (x0 + i*h, y0 + j*h); in 1D ny() == 1 and j is always 0.
/// Every interior node has its full 9-point (3-point in 1D) neighborhood
/// classified interior or boundary, which is what the monotone stencils
/// downstream rely on.
class Grid {
public:
    static std::shared_ptr<const Grid> interval(double a, double b, int resolution) {
        check_resolution(resolution);
        Grid g;
        g.dim_ = 1;
        g.nx_ = resolution + 1;
        g.ny_ = 1;
        g.h_ = (b - a) / resolution;
        g.x0_ = a;
        g.y0_ = 0.0;
        g.mask_.assign(static_cast<std::size_t>(g.nx_), NodeClass::interior);
        g.mask_.front() = NodeClass::boundary;
        g.mask_.back() = NodeClass::boundary;
        g.finish();
        return std::make_shared<const Grid>(std::move(g));
    }

    static std::shared_ptr<const Grid> square(double a, double b, int resolution) {
        check_resolution(resolution);
        Grid g;
        g.dim_ = 2;
        g.nx_ = g.ny_ = resolution + 1;
        g.h_ = (b - a) / resolution;
        g.x0_ = g.y0_ = a;
        g.mask_.assign(static_cast<std::size_t>(g.nx_) * g.ny_, NodeClass::interior);
        for (int i = 0; i < g.nx_; ++i) {
            g.mask_[g.id(i, 0)] = NodeClass::boundary;
            g.mask_[g.id(i, g.ny_ - 1)] = NodeClass::boundary;
        }
        for (int j = 0; j < g.ny_; ++j) {
            g.mask_[g.id(0, j)] = NodeClass::boundary;
            g.mask_[g.id(g.nx_ - 1, j)] = NodeClass::boundary;
        }
        g.finish();
        return std::make_shared<const Grid>(std::move(g));
    }

    /// Unit disk sampled on the lattice of (-1,1)^2.  Nodes with |x| < 1 are
    /// kept; among those, the ring whose 9-point neighborhood pokes outside
    /// carries the Dirichlet data.  That ring sits within sqrt(2)*h of the
    /// circle (the diagonal neighbor distance), everything else is interior.
    static std::shared_ptr<const Grid> disk(int resolution) {
        check_resolution(resolution);
        Grid g;
        g.dim_ = 2;
        g.nx_ = g.ny_ = resolution + 1;
        g.h_ = 2.0 / resolution;
        g.x0_ = g.y0_ = -1.0;
        const int n = g.nx_;
        auto inside = [&](int i, int j) {
            if (i < 0 || j < 0 || i >= n || j >= n) return false;
            double x = g.x0_ + i * g.h_;
            double y = g.y0_ + j * g.h_;
            return x * x + y * y < 1.0;
        };
        g.mask_.assign(static_cast<std::size_t>(n) * n, NodeClass::exterior);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < n; ++i) {
                if (!inside(i, j)) continue;
                bool ring = false;
                for (int dj = -1; dj <= 1 && !ring; ++dj)
                    for (int di = -1; di <= 1 && !ring; ++di)
                        if (!inside(i + di, j + dj)) ring = true;
                g.mask_[g.id(i, j)] = ring ? NodeClass::boundary : NodeClass::interior;
            }
        }
        g.finish();
        return std::make_shared<const Grid>(std::move(g));
    }

    int dim() const { return dim_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double h() const { return h_; }
    double x(int i) const { return x0_ + i * h_; }
    double y(int j) const { return dim_ == 1 ? 0.0 : y0_ + j * h_; }
    double x_min() const { return x0_; }
    double x_max() const { return x0_ + (nx_ - 1) * h_; }
    double y_min() const { return y0_; }
    double y_max() const { return y0_ + (ny_ - 1) * h_; }

    /// Cell volume used by all quadratures (h in 1D, h^2 in 2D).
    double cell_volume() const { return dim_ == 1 ? h_ : h_ * h_; }

    NodeClass node_class(int i, int j) const { return mask_[id(i, j)]; }
    bool is_interior(int i, int j) const { return node_class(i, j) == NodeClass::interior; }
    bool is_boundary(int i, int j) const { return node_class(i, j) == NodeClass::boundary; }
    bool is_exterior(int i, int j) const { return node_class(i, j) == NodeClass::exterior; }

    /// Compact index among non-exterior nodes, -1 for exterior ones.
    int value_index(int i, int j) const { return value_index_[id(i, j)]; }
    int value_count() const { return value_count_; }
    int interior_count() const { return interior_count_; }
    int boundary_count() const { return boundary_count_; }

    /// Interior nodes in row-major order (the unknown ordering of the solvers).
    int interior_index(int i, int j) const { return interior_index_[id(i, j)]; }

    template <typename F>
    void for_each_value(F&& f) const {
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i)
                if (mask_[id(i, j)] != NodeClass::exterior) f(i, j, value_index_[id(i, j)]);
    }

    template <typename F>
    void for_each_interior(F&& f) const {
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i)
                if (mask_[id(i, j)] == NodeClass::interior) f(i, j);
    }

    template <typename F>
    void for_each_boundary(F&& f) const {
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i)
                if (mask_[id(i, j)] == NodeClass::boundary) f(i, j);
    }

    /// Node with the smallest |(x,y)|, handy for samplers anchored at the origin.
    std::pair<int, int> node_nearest_origin() const {
        double best = 1e300;
        std::pair<int, int> arg{0, 0};
        for (int j = 0; j < ny_; ++j)
            for (int i = 0; i < nx_; ++i) {
                if (mask_[id(i, j)] == NodeClass::exterior) continue;
                double d = x(i) * x(i) + y(j) * y(j);
                if (d < best) {
                    best = d;
                    arg = {i, j};
                }
            }
        return arg;
    }

    std::size_t id(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

private:
    static void check_resolution(int resolution) {
        if (resolution < 4)
            throw std::invalid_argument(
                "grid resolution must be at least 4, got " + std::to_string(resolution));
    }

    void finish() {
        value_index_.assign(mask_.size(), -1);
        interior_index_.assign(mask_.size(), -1);
        value_count_ = interior_count_ = boundary_count_ = 0;
        for (std::size_t k = 0; k < mask_.size(); ++k) {
            if (mask_[k] == NodeClass::exterior) continue;
            value_index_[k] = value_count_++;
            if (mask_[k] == NodeClass::interior) interior_index_[k] = interior_count_++;
            else ++boundary_count_;
        }
        if (interior_count_ == 0)
            throw std::invalid_argument("resolution too small: domain has no interior node");
    }

    int dim_ = 1;
    int nx_ = 0, ny_ = 1;
    double h_ = 0.0;
    double x0_ = 0.0, y0_ = 0.0;
    std::vector<NodeClass> mask_;
    std::vector<int> value_index_;
    std::vector<int> interior_index_;
    int value_count_ = 0;
    int interior_count_ = 0;
    int boundary_count_ = 0;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Preset factory backing the "domain" section of problem configs.
inline GridPtr build_grid(DomainPreset preset, int resolution) {
    switch (preset) {
        case DomainPreset::interval: return Grid::interval(-1.0, 1.0, resolution);
        case DomainPreset::square: return Grid::square(-1.0, 1.0, resolution);
        default: return Grid::disk(resolution);
    }
}

/// Space-time slab: a spatial grid marched with a fixed implicit step.
struct SpaceTimeGrid {
    GridPtr space;
    double dt = 0.0;
    int steps = 0;

    SpaceTimeGrid(GridPtr g, double dt_, int steps_) : space(std::move(g)), dt(dt_), steps(steps_) {
        if (!space) throw std::invalid_argument("space-time grid needs a spatial grid");
        if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
        if (steps < 1) throw std::invalid_argument("need at least one time step");
    }

    double final_time() const { return dt * steps; }
    double time(int m) const { return dt * m; }
};

} // namespace obskit
