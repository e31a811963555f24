#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "obskit/field.hpp"
#include "obskit/grid.hpp"
#include "obskit/operators.hpp"
#include "obskit/rng.hpp"

namespace obskit {

/// Declared truncation of "sup over all balls": a finite set of node centers
/// and dyadic radii.  Every estimator built on it is monotone in the sampler
/// (more centers or radii can only increase a sampled supremum), and reports
/// carry the id so results reproduce bit-for-bit.
struct BallSampler {
    std::vector<std::pair<int, int>> centers;
    std::vector<double> radii;
    std::string id;

    /// Strided node centers (always including the node nearest the origin)
    /// with radii h * 2^j, j = 0..levels-1.
    static BallSampler dyadic(const GridPtr& grid, int max_centers, int levels) {
        if (max_centers < 1 || levels < 1)
            throw std::invalid_argument("sampler needs at least one center and one radius");
        BallSampler s;
        std::vector<std::pair<int, int>> nodes;
        grid->for_each_value([&](int i, int j, int) { nodes.emplace_back(i, j); });
        const std::size_t stride = std::max<std::size_t>(1, nodes.size() / max_centers);
        for (std::size_t k = 0; k < nodes.size(); k += stride) s.centers.push_back(nodes[k]);
        auto origin = grid->node_nearest_origin();
        if (std::find(s.centers.begin(), s.centers.end(), origin) == s.centers.end())
            s.centers.push_back(origin);
        for (int j = 0; j < levels; ++j) s.radii.push_back(grid->h() * std::pow(2.0, j));
        s.id = "dyadic-c" + std::to_string(max_centers) + "-l" + std::to_string(levels);
        return s;
    }

    void validate(const GridPtr& grid) const {
        if (centers.empty() || radii.empty())
            throw std::invalid_argument("sampler is empty");
        for (std::size_t k = 1; k < radii.size(); ++k)
            if (!(radii[k] > radii[k - 1]))
                throw std::invalid_argument("sampler radii must be positive and increasing");
        if (!(radii.front() > 0.0))
            throw std::invalid_argument("sampler radii must be positive and increasing");
        bool touches = false;
        for (auto [ci, cj] : centers)
            if (!grid->is_exterior(ci, cj)) touches = true;
        if (!touches)
            throw std::invalid_argument("no sampled ball intersects the domain interior");
    }
};

/// Visit the non-exterior grid nodes with |node - center| <= r (tiny slack so
/// lattice-exact distances are kept).
template <typename F>
void for_each_node_in_ball(const Grid& g, double cx, double cy, double r, F&& f) {
    const double rr = r * (1.0 + 1e-12);
    int j0 = 0, j1 = 0;
    if (g.dim() == 2) {
        j0 = std::max(0, static_cast<int>(std::ceil((cy - rr - g.y_min()) / g.h())));
        j1 = std::min(g.ny() - 1, static_cast<int>(std::floor((cy + rr - g.y_min()) / g.h())));
    }
    for (int j = j0; j <= j1; ++j) {
        double dy = g.dim() == 2 ? g.y(j) - cy : 0.0;
        double w2 = rr * rr - dy * dy;
        if (w2 < 0.0) continue;
        double w = std::sqrt(w2);
        int i0 = std::max(0, static_cast<int>(std::ceil((cx - w - g.x_min()) / g.h() - 1e-9)));
        int i1 = std::min(g.nx() - 1,
                          static_cast<int>(std::floor((cx + w - g.x_min()) / g.h() + 1e-9)));
        for (int i = i0; i <= i1; ++i) {
            if (g.is_exterior(i, j)) continue;
            double dx = g.x(i) - cx;
            if (dx * dx + dy * dy <= rr * rr) f(i, j);
        }
    }
}

/// Weight w > 0 on the grid together with its declared Muckenhoupt parameter.
struct WeightField {
    ScalarField w;
    double declared_class;

    WeightField(ScalarField w_, double s) : w(std::move(w_)), declared_class(s) {
        for (double v : w.values())
            if (!(v > 0.0)) throw std::invalid_argument("weight values must be strictly positive");
    }
};

/// (sum |g|^p w * cellvol)^(1/p) over the non-exterior nodes.
inline double weighted_lp_norm(const ScalarField& g, const WeightField& w, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("weighted norm needs p > 1");
    detail::require_same_grid(g.grid(), w.w.grid(), "weighted_lp_norm");
    const double vol = g.grid()->cell_volume();
    double acc = 0.0;
    g.grid()->for_each_value([&](int i, int j, int) {
        acc += std::pow(std::abs(g.at(i, j)), p) * w.w.at(i, j) * vol;
    });
    return std::pow(acc, 1.0 / p);
}

namespace detail {

inline double weighted_power_sum(const ScalarField& g, const WeightField& w, double p) {
    const double vol = g.grid()->cell_volume();
    double acc = 0.0;
    g.grid()->for_each_value([&](int i, int j, int) {
        acc += std::pow(std::abs(g.at(i, j)), p) * w.w.at(i, j) * vol;
    });
    return acc;
}

/// Derivative contributions (first differences + second differences) to the
/// weighted Sobolev power sum; interior nodes only.
inline double derivative_power_sum(const ScalarField& u, const WeightField& w, double p) {
    const Grid& g = *u.grid();
    const double vol = g.cell_volume();
    double acc = 0.0;
    g.for_each_interior([&](int i, int j) {
        const double wv = w.w.at(i, j) * vol;
        auto [gx, gy] = gradient_at(u, i, j);
        acc += std::pow(std::abs(gx), p) * wv;
        if (g.dim() == 2) acc += std::pow(std::abs(gy), p) * wv;
        Sym2 d = hessian_at(u, i, j);
        acc += std::pow(std::abs(d.xx), p) * wv;
        if (g.dim() == 2) {
            acc += std::pow(std::abs(d.xy), p) * wv;
            acc += std::pow(std::abs(d.yy), p) * wv;
        }
    });
    return acc;
}

} // namespace detail

/// Weighted Sobolev norm: value, first-difference and second-difference
/// contributions combined.
inline double weighted_w2p_norm(const ScalarField& u, const WeightField& w, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("weighted norm needs p > 1");
    detail::require_same_grid(u.grid(), w.w.grid(), "weighted_w2p_norm");
    return std::pow(detail::weighted_power_sum(u, w, p) + detail::derivative_power_sum(u, w, p),
                    1.0 / p);
}

/// Parabolic variant: adds the backward time difference and integrates the
/// slab with weight dt per level (levels m >= 1 cover (0, T]).
inline double weighted_w21p_norm(const std::vector<ScalarField>& slabs, const SpaceTimeGrid& st,
                                 const WeightField& w, double p) {
    if (!(p > 1.0)) throw std::invalid_argument("weighted norm needs p > 1");
    if (slabs.size() != static_cast<std::size_t>(st.steps) + 1)
        throw std::invalid_argument("slab count must be steps + 1");
    double acc = 0.0;
    for (int m = 1; m <= st.steps; ++m) {
        const ScalarField& u = slabs[static_cast<std::size_t>(m)];
        acc += detail::weighted_power_sum(u, w, p) * st.dt;
        acc += detail::derivative_power_sum(u, w, p) * st.dt;
        const ScalarField& prev = slabs[static_cast<std::size_t>(m - 1)];
        const double vol = u.grid()->cell_volume();
        u.grid()->for_each_value([&](int i, int j, int) {
            double ut = (u.at(i, j) - prev.at(i, j)) / st.dt;
            acc += std::pow(std::abs(ut), p) * w.w.at(i, j) * vol * st.dt;
        });
    }
    return std::pow(acc, 1.0 / p);
}

/// Sampled Muckenhoupt product: max over balls of
///   (mean of w) * (mean of w^(-1/(s-1)))^(s-1).
inline double muckenhoupt_constant(const WeightField& w, double s, const BallSampler& sampler) {
    if (!(s > 1.0)) throw std::invalid_argument("Muckenhoupt class needs s > 1");
    const Grid& g = *w.w.grid();
    sampler.validate(w.w.grid());
    const double q = -1.0 / (s - 1.0);
    double worst = 0.0;
    bool any = false;
    for (auto [ci, cj] : sampler.centers) {
        for (double r : sampler.radii) {
            double sum_w = 0.0, sum_wq = 0.0;
            long count = 0;
            for_each_node_in_ball(g, g.x(ci), g.y(cj), r, [&](int i, int j) {
                double v = w.w.at(i, j);
                sum_w += v;
                sum_wq += std::pow(v, q);
                ++count;
            });
            if (count == 0) continue;
            any = true;
            double product = (sum_w / count) * std::pow(sum_wq / count, s - 1.0);
            worst = std::max(worst, product);
        }
    }
    if (!any) throw std::invalid_argument("every sampled ball missed the grid");
    return worst;
}

/// Lattice Hardy-Littlewood maximal function of the characteristic function
/// of the ball B_r(center): at each node the best sampled ratio
///   #(lattice points in B_rho(x) and B_r(center)) / #(lattice points in B_rho(x)),
/// over a geometric ladder of rho.  The lattice extends beyond the grid so
/// the counts are pure geometry.
inline ScalarField maximal_char_ball(const GridPtr& grid, std::pair<int, int> center, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("ball radius must be positive");
    const Grid& g = *grid;
    const double h = g.h();
    const double cx = g.x(center.first);
    const double cy = g.y(center.second);

    // rho ladder: half-power-of-two steps from h up to past the farthest node,
    // plus the covering radius per node (added in the loop below).
    std::vector<double> ladder;
    double span = std::hypot(g.x_max() - g.x_min(), g.dim() == 2 ? g.y_max() - g.y_min() : 0.0);
    for (double rho = h; rho <= 2.0 * (span + r); rho *= std::sqrt(2.0)) ladder.push_back(rho);
    ladder.push_back(r);

    // Count lattice points of the infinite grid-aligned lattice in one ball
    // row-intersected with B_r(center).
    auto counts = [&](double px, double py, double rho, long& inside, long& hits) {
        inside = hits = 0;
        const int jr = g.dim() == 2 ? static_cast<int>(std::floor(rho / h)) : 0;
        for (int dj = -jr; dj <= jr; ++dj) {
            double y = py + dj * h;
            double wy2 = rho * rho - (y - py) * (y - py);
            double w = std::sqrt(std::max(0.0, wy2));
            long i_lo = static_cast<long>(std::ceil((px - w - g.x_min()) / h - 1e-9));
            long i_hi = static_cast<long>(std::floor((px + w - g.x_min()) / h + 1e-9));
            inside += i_hi - i_lo + 1;
            // open ball B_r(center) on the same row
            double cy2 = r * r - (y - cy) * (y - cy);
            if (cy2 <= 0.0) continue;
            double wc = std::sqrt(cy2);
            long c_lo = static_cast<long>(std::ceil((cx - wc - g.x_min()) / h + 1e-9));
            long c_hi = static_cast<long>(std::floor((cx + wc - g.x_min()) / h - 1e-9));
            long lo = std::max(i_lo, c_lo), hi = std::min(i_hi, c_hi);
            if (hi >= lo) hits += hi - lo + 1;
        }
    };

    ScalarField out(grid);
    g.for_each_value([&](int i, int j, int) {
        const double px = g.x(i), py = g.y(j);
        double best = 0.0;
        double cover = std::hypot(px - cx, py - cy) + r;
        for (std::size_t k = 0; k <= ladder.size(); ++k) {
            double rho = k < ladder.size() ? ladder[k] : cover;
            long inside = 0, hits = 0;
            counts(px, py, rho, inside, hits);
            if (inside > 0) best = std::max(best, double(hits) / double(inside));
        }
        out.at(i, j) = best;
    });
    return out;
}

/// Sampled A1 ratio: max over balls of (mean of w) / (min of w).  Bounded
/// ratios under sampler refinement are the numerical signature of an A1
/// weight; the caller applies any power beforehand.
inline double sampled_a1_ratio(const ScalarField& w, const BallSampler& sampler) {
    const Grid& g = *w.grid();
    sampler.validate(w.grid());
    double worst = 0.0;
    for (auto [ci, cj] : sampler.centers) {
        for (double r : sampler.radii) {
            double mean = 0.0, lo = 1e300;
            long count = 0;
            for_each_node_in_ball(g, g.x(ci), g.y(cj), r, [&](int i, int j) {
                double v = w.at(i, j);
                mean += v;
                lo = std::min(lo, v);
                ++count;
            });
            if (count == 0 || !(lo > 0.0)) continue;
            worst = std::max(worst, mean / count / lo);
        }
    }
    return worst;
}

/// Sampled Morrey norm: max over (center, radius) of
///   r^(-theta) * sum_{ball ∩ Omega} |g|^p cellvol, to the 1/p.
inline double morrey_norm(const ScalarField& g, double p, double theta,
                          const BallSampler& sampler) {
    if (!(p >= 1.0)) throw std::invalid_argument("Morrey norm needs p >= 1");
    const int n = g.grid()->dim();
    if (!(theta > 0.0) || !(theta < n))
        throw std::invalid_argument("Morrey exponent must satisfy 0 < theta < n (n = " +
                                    std::to_string(n) + ")");
    sampler.validate(g.grid());
    const Grid& gr = *g.grid();
    const double vol = gr.cell_volume();
    double worst = 0.0;
    for (auto [ci, cj] : sampler.centers) {
        for (double r : sampler.radii) {
            double acc = 0.0;
            for_each_node_in_ball(gr, gr.x(ci), gr.y(cj), r,
                                  [&](int i, int j) { acc += std::pow(std::abs(g.at(i, j)), p) * vol; });
            worst = std::max(worst, acc / std::pow(r, theta));
        }
    }
    return std::pow(worst, 1.0 / p);
}

/// Sobolev-Morrey norm |g|_Lp + |D^2 g|_Morrey, the Hessian magnitude taken
/// in Frobenius aggregation at interior nodes.
inline double sobolev_morrey_norm(const ScalarField& u, double p, double theta,
                                  const BallSampler& sampler) {
    const Grid& g = *u.grid();
    WeightField one(sample_field([](double, double) { return 1.0; }, u.grid()), 2.0);
    double lp = weighted_lp_norm(u, one, p);
    ScalarField hess(u.grid());
    g.for_each_interior(
        [&](int i, int j) { hess.at(i, j) = hessian_at(u, i, j).frobenius(g.dim()); });
    return lp + morrey_norm(hess, p, theta, sampler);
}

/// Small-BMO modulus: max over sampled balls of radius <= R of the RMS
/// Frobenius deviation of A from its ball average.
inline double bmo_vanishing_modulus(const MatrixField& A, double R, const BallSampler& sampler) {
    const Grid& g = *A.grid();
    if (!(R >= g.h())) throw std::invalid_argument("BMO scale R must be at least the mesh width");
    sampler.validate(A.grid());
    const int d = g.dim();
    double worst = 0.0;
    for (auto [ci, cj] : sampler.centers) {
        for (double r : sampler.radii) {
            if (r > R * (1.0 + 1e-12)) continue;
            Sym2 mean{};
            long count = 0;
            for_each_node_in_ball(g, g.x(ci), g.y(cj), r, [&](int i, int j) {
                mean = mean + A.at(i, j);
                ++count;
            });
            if (count == 0) continue;
            mean = mean * (1.0 / count);
            double dev = 0.0;
            for_each_node_in_ball(g, g.x(ci), g.y(cj), r, [&](int i, int j) {
                double fz = (A.at(i, j) - mean).frobenius(d);
                dev += fz * fz;
            });
            worst = std::max(worst, std::sqrt(dev / count));
        }
    }
    return worst;
}

/// Parabolic (cylinder) variant: averages run over B_r x (t - r^2, t + r^2].
inline double bmo_vanishing_modulus(const std::vector<MatrixField>& slabs,
                                    const SpaceTimeGrid& st, double R,
                                    const BallSampler& sampler) {
    const Grid& g = *st.space;
    if (!(R >= g.h())) throw std::invalid_argument("BMO scale R must be at least the mesh width");
    const int d = g.dim();
    double worst = 0.0;
    for (auto [ci, cj] : sampler.centers) {
        for (double r : sampler.radii) {
            if (r > R * (1.0 + 1e-12)) continue;
            for (int m = 0; m <= st.steps; m += std::max(1, st.steps / 8)) {
                const double t = st.time(m);
                Sym2 mean{};
                long count = 0;
                auto each_slab = [&](auto&& f) {
                    for (int q = 0; q <= st.steps; ++q) {
                        double tq = st.time(q);
                        if (tq <= t - r * r || tq > t + r * r) continue;
                        f(q);
                    }
                };
                each_slab([&](int q) {
                    for_each_node_in_ball(g, g.x(ci), g.y(cj), r, [&](int i, int j) {
                        mean = mean + slabs[static_cast<std::size_t>(q)].at(i, j);
                        ++count;
                    });
                });
                if (count == 0) continue;
                mean = mean * (1.0 / count);
                double dev = 0.0;
                each_slab([&](int q) {
                    for_each_node_in_ball(g, g.x(ci), g.y(cj), r, [&](int i, int j) {
                        double fz = (slabs[static_cast<std::size_t>(q)].at(i, j) - mean).frobenius(d);
                        dev += fz * fz;
                    });
                });
                worst = std::max(worst, std::sqrt(dev / count));
            }
        }
    }
    return worst;
}

/// Probe set for the operator oscillation: symmetrized basis matrices plus
/// seeded random unit-norm symmetric matrices.  The eigen directions of the
/// member differences are added per node pair inside beta_oscillation.
inline std::vector<Sym2> oscillation_probes(int dim, std::uint64_t seed = 7) {
    std::vector<Sym2> probes;
    if (dim == 1) {
        probes.push_back({1, 0, 0});
    } else {
        probes.push_back({1, 0, 0});
        probes.push_back({0, 0, 1});
        probes.push_back({0, 1, 0}); // eigenvalues +-1, unit operator norm
    }
    Rng rng(seed);
    for (int k = 0; k < 32; ++k) {
        Sym2 m{rng.uniform(-1.0, 1.0), dim == 2 ? rng.uniform(-1.0, 1.0) : 0.0,
               dim == 2 ? rng.uniform(-1.0, 1.0) : 0.0};
        double nm = m.norm(dim);
        if (nm > 0.0) probes.push_back(m * (1.0 / nm));
    }
    return probes;
}

/// Pointwise oscillation beta(x, x0) = max over the probe set of
/// |F(x, M) - F(x0, M)|, M of unit operator norm.  For a single linear
/// member this lands between |A(x)-A(x0)| and n |A(x)-A(x0)|.
inline double beta_oscillation(const OperatorFamily& family, int i, int j, int ci, int cj,
                               const std::vector<Sym2>& probes) {
    const int d = family.grid()->dim();
    double best = 0.0;
    for (const Sym2& m : probes)
        best = std::max(best, std::abs(family.eval(i, j, m) - family.eval(ci, cj, m)));
    // eigen directions of the member differences capture the extremal
    // probes of the linear case exactly
    if (d == 2) {
        for (const MatrixField& mem : family.members) {
            Sym2 delta = mem.at(i, j) - mem.at(ci, cj);
            double theta = 0.5 * std::atan2(2.0 * delta.xy, delta.xx - delta.yy);
            double c = std::cos(theta), s = std::sin(theta);
            Sym2 v1{c * c, c * s, s * s};
            Sym2 v2{s * s, -c * s, c * c};
            best = std::max(best, std::abs(family.eval(i, j, v1) - family.eval(ci, cj, v1)));
            best = std::max(best, std::abs(family.eval(i, j, v2) - family.eval(ci, cj, v2)));
        }
    }
    return best;
}

/// Oscillation modulus of the operator in its spatial argument: the sup over
/// sampled (x0, r <= R0) of the L^n ball average of beta(., x0).
inline double beta_oscillation_modulus(const OperatorFamily& family, double R0,
                                       const BallSampler& sampler, std::uint64_t seed = 7) {
    const Grid& g = *family.grid();
    if (!(R0 >= g.h())) throw std::invalid_argument("oscillation scale must be at least h");
    sampler.validate(family.grid());
    const int d = g.dim();
    const std::vector<Sym2> probes = oscillation_probes(d, seed);

    double worst = 0.0;
    for (auto [ci, cj] : sampler.centers) {
        // beta against this base point, cached for all radii
        ScalarField b(family.grid());
        g.for_each_value(
            [&](int i, int j, int) { b.at(i, j) = beta_oscillation(family, i, j, ci, cj, probes); });
        for (double r : sampler.radii) {
            if (r > R0 * (1.0 + 1e-12)) continue;
            double acc = 0.0;
            long count = 0;
            for_each_node_in_ball(g, g.x(ci), g.y(cj), r, [&](int i, int j) {
                acc += std::pow(b.at(i, j), double(d));
                ++count;
            });
            if (count == 0) continue;
            worst = std::max(worst, std::pow(acc / count, 1.0 / d));
        }
    }
    return worst;
}

/// Sampled Hoelder seminorm sup |g(x)-g(y)| / |x-y|^alpha.  All pairs when
/// that is affordable, otherwise a seeded subsample.  Fields that only carry
/// interior values (difference quotients) restrict the pairs accordingly.
inline double holder_seminorm(const ScalarField& g, double alpha,
                              long pair_budget = 200000000L, std::uint64_t seed = 11,
                              bool interior_only = false) {
    if (!(alpha > 0.0) || alpha > 1.0)
        throw std::invalid_argument("Hoelder exponent must lie in (0, 1]");
    const Grid& gr = *g.grid();
    std::vector<int> ii, jj;
    std::vector<double> vv;
    gr.for_each_value([&](int i, int j, int) {
        if (interior_only && !gr.is_interior(i, j)) return;
        ii.push_back(i);
        jj.push_back(j);
        vv.push_back(g.at(i, j));
    });
    const std::size_t n = vv.size();
    if (n < 2) return 0.0;

    // |x-y|^alpha lookup per index offset; pow would dominate the pair loop
    const int oy = gr.dim() == 2 ? gr.ny() : 1;
    std::vector<double> dist_pow(static_cast<std::size_t>(gr.nx()) * (2 * oy - 1));
    for (int a = 0; a < gr.nx(); ++a)
        for (int b = -(oy - 1); b <= oy - 1; ++b) {
            double dist = gr.h() * std::sqrt(double(a) * a + double(b) * b);
            dist_pow[static_cast<std::size_t>(a) * (2 * oy - 1) + (b + oy - 1)] =
                dist > 0.0 ? std::pow(dist, alpha) : 0.0;
        }
    auto pow_of = [&](std::size_t p, std::size_t q) {
        int a = std::abs(ii[p] - ii[q]);
        int b = jj[p] - jj[q];
        return dist_pow[static_cast<std::size_t>(a) * (2 * oy - 1) + (b + oy - 1)];
    };

    double best = 0.0;
    const long all_pairs = static_cast<long>(n) * static_cast<long>(n - 1) / 2;
    if (all_pairs <= pair_budget) {
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                double d = std::abs(vv[p] - vv[q]);
                if (d > best * pow_of(p, q)) best = d / pow_of(p, q);
            }
    } else {
        Rng rng(seed);
        for (long t = 0; t < pair_budget; ++t) {
            std::size_t p = rng.below(n), q = rng.below(n);
            if (p == q) continue;
            double dp = pow_of(p, q);
            if (dp == 0.0) continue;
            best = std::max(best, std::abs(vv[p] - vv[q]) / dp);
        }
    }
    return best;
}

/// The three complementarity measures of a candidate solution:
///   obstacle:  max(psi - u, 0) in the max norm (all non-exterior nodes),
///   equation:  max(Lu - f, 0) in the max norm (interior; elliptic sign),
///   product:   max |(Lu - f)(u - psi)| (interior).
struct ComplementarityResidual {
    double obstacle = 0.0;
    double equation = 0.0;
    double product = 0.0;
};

inline ComplementarityResidual complementarity_residual(const ScalarField& u,
                                                        const ScalarField& obstacle,
                                                        const ScalarField& Lu,
                                                        const ScalarField& f) {
    detail::require_same_grid(u.grid(), obstacle.grid(), "complementarity_residual");
    detail::require_same_grid(u.grid(), Lu.grid(), "complementarity_residual");
    detail::require_same_grid(u.grid(), f.grid(), "complementarity_residual");
    ComplementarityResidual r;
    u.grid()->for_each_value([&](int i, int j, int) {
        r.obstacle = std::max(r.obstacle, obstacle.at(i, j) - u.at(i, j));
    });
    r.obstacle = std::max(r.obstacle, 0.0);
    u.grid()->for_each_interior([&](int i, int j) {
        double eq = Lu.at(i, j) - f.at(i, j);
        r.equation = std::max(r.equation, eq);
        r.product = std::max(r.product, std::abs(eq * (u.at(i, j) - obstacle.at(i, j))));
    });
    r.equation = std::max(r.equation, 0.0);
    return r;
}

/// Parabolic variant; the equation residual flips sign
/// (u_t - Lu >= f is the feasible side).
inline ComplementarityResidual complementarity_residual_parabolic(
    const std::vector<ScalarField>& u, const std::vector<ScalarField>& obstacle,
    const std::vector<ScalarField>& Pu_minus_f, const SpaceTimeGrid& st) {
    ComplementarityResidual r;
    for (int m = 1; m <= st.steps; ++m) {
        const ScalarField& um = u[static_cast<std::size_t>(m)];
        const ScalarField& pm = obstacle[static_cast<std::size_t>(m)];
        const ScalarField& em = Pu_minus_f[static_cast<std::size_t>(m)];
        um.grid()->for_each_value([&](int i, int j, int) {
            r.obstacle = std::max(r.obstacle, pm.at(i, j) - um.at(i, j));
        });
        um.grid()->for_each_interior([&](int i, int j) {
            double eq = em.at(i, j);
            r.equation = std::max(r.equation, -eq);
            r.product = std::max(r.product, std::abs(eq * (um.at(i, j) - pm.at(i, j))));
        });
    }
    r.obstacle = std::max(r.obstacle, 0.0);
    r.equation = std::max(r.equation, 0.0);
    return r;
}

} // namespace obskit
