#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "obskit/linear_system.hpp"
#include "obskit/mollify.hpp"
#include "obskit/norms.hpp"
#include "obskit/penalty.hpp"

namespace obskit {

/// Geometric penalty-width ladder eps_k = eps0 * factor^k, k = 0..count-1.
struct EpsSchedule {
    double eps0 = 0.1;
    double factor = 0.5;
    int count = 7;

    std::vector<double> values() const {
        if (!(eps0 > 0.0)) throw std::invalid_argument("eps schedule needs eps0 > 0");
        if (!(factor > 0.0) || !(factor < 1.0))
            throw std::invalid_argument("eps schedule factor must lie in (0, 1)");
        if (count < 1) throw std::invalid_argument("eps schedule must be nonempty");
        std::vector<double> v(static_cast<std::size_t>(count));
        double e = eps0;
        for (int k = 0; k < count; ++k, e *= factor) v[static_cast<std::size_t>(k)] = e;
        return v;
    }

    double last() const { return eps0 * std::pow(factor, count - 1); }
};

/// Whether a solve runs on raw grid data or on mollified coefficients/data.
struct Pipeline {
    bool mollified = false;
    double radius = 0.0;
};

/// Everything one reference equation needs: operator, data, obstacle, the
/// penalty width, and the data pipeline.
struct PenalizedProblem {
    OperatorFamily family;
    ScalarField f;
    ScalarField obstacle;
    PenaltyShape shape;
    Pipeline pipeline;

    PenalizedProblem(OperatorFamily fam, ScalarField f_, ScalarField obstacle_, PenaltyShape s,
                     Pipeline pipe = {})
        : family(std::move(fam)), f(std::move(f_)), obstacle(std::move(obstacle_)), shape(s),
          pipeline(pipe) {
        detail::require_same_grid(family.grid(), f.grid(), "penalized problem");
        detail::require_same_grid(f.grid(), obstacle.grid(), "penalized problem");
        double worst = 0.0;
        f.grid()->for_each_boundary(
            [&](int i, int j) { worst = std::max(worst, obstacle.at(i, j)); });
        if (worst > 1e-12)
            throw std::invalid_argument(
                "obstacle must be <= 0 on the boundary (max boundary value " +
                std::to_string(worst) + ")");
    }

    /// Resolve the pipeline: either the raw data or everything mollified.
    PenalizedProblem prepared() const {
        if (!pipeline.mollified) return *this;
        std::vector<MatrixField> members;
        members.reserve(family.members.size());
        for (const MatrixField& m : family.members) members.push_back(mollify(m, pipeline.radius));
        OperatorFamily fam(std::move(members), family.lambda_lo, family.lambda_hi);
        return PenalizedProblem(std::move(fam), mollify(f, pipeline.radius),
                                mollify(obstacle, pipeline.radius), shape, Pipeline{});
    }
};

/// What a solve did and how well it ended.
struct SolverReport {
    int outer_iters = 0;
    long inner_iters = 0;
    double fixed_point_residual = 0.0;
    double eps_last = 0.0;
    ComplementarityResidual complementarity;
    std::vector<std::pair<std::string, double>> norm_table;
};

struct FixedPointOptions {
    double omega = 0.5;          // Picard damping (auto-tuned downward on stall)
    int max_iters = 30000;
    int picard_budget = 1200;    // iterations before the Newton fallback kicks in
    double tol_scale = 1e-8;     // tol_fp = tol_scale * (|f| + |g+|)
    int bellman_policy_cap = 64; // policy sweeps before falling back
    int bellman_value_cap = 600; // damped value-iteration cap
    double linear_rtol = 1e-10;
};

/// Discrete Dirichlet solve a_ij D_ij u = rhs, u = 0 on the boundary ring.
/// Requires the monotone-stencil condition; the linear-system residual is
/// held below linear_rtol relative to |rhs|.
inline ScalarField solve_linear_dirichlet(const MatrixField& A, const ScalarField& rhs,
                                          const FixedPointOptions& opts = {}) {
    detail::require_same_grid(A.grid(), rhs.grid(), "solve_linear_dirichlet");
    LinearSolver solver(StencilSystem::negative_operator(A), {.rtol = opts.linear_rtol});
    std::vector<double> b = pack_interior(rhs);
    for (double& v : b) v = -v;
    return unpack_interior(A.grid(), solver.solve(b));
}

namespace detail {

inline std::uint64_t hash_policy(const std::vector<int>& p) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int v : p) {
        h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ULL;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Freeze a nodewise member selection into one coefficient field.
inline MatrixField freeze_policy(const OperatorFamily& family, const std::vector<int>& policy) {
    MatrixField A(family.grid());
    const Grid& g = *family.grid();
    g.for_each_value([&](int i, int j, int) {
        int k = g.is_interior(i, j) ? policy[static_cast<std::size_t>(g.interior_index(i, j))] : 0;
        A.at(i, j) = family.members[static_cast<std::size_t>(k)].at(i, j);
    });
    return A;
}

inline std::vector<int> argmax_policy(const OperatorFamily& family, const ScalarField& u) {
    const Grid& g = *u.grid();
    std::vector<int> p(static_cast<std::size_t>(g.interior_count()), 0);
    g.for_each_interior([&](int i, int j) {
        double best = apply_coefficient_at(family.members[0], u, i, j);
        int arg = 0;
        for (std::size_t k = 1; k < family.members.size(); ++k) {
            double v = apply_coefficient_at(family.members[k], u, i, j);
            if (v > best) {
                best = v;
                arg = static_cast<int>(k);
            }
        }
        p[static_cast<std::size_t>(g.interior_index(i, j))] = arg;
    });
    return p;
}

/// Dirichlet solve engine shared by the Picard loops: a single cached
/// factorization for linear operators, policy iteration with per-policy
/// factorization caching for Bellman families.
class DirichletEngine {
public:
    DirichletEngine(const OperatorFamily& family, const FixedPointOptions& opts)
        : family_(family), opts_(opts) {
        family.require_monotone();
        if (family.linear())
            solvers_.emplace(0, LinearSolver(StencilSystem::negative_operator(family.members[0]),
                                             LinearSolver::Options{.rtol = opts.linear_rtol}));
    }

    ScalarField solve(const ScalarField& rhs, const ScalarField* hint) const {
        if (family_.linear()) {
            std::vector<double> b = pack_interior(rhs);
            for (double& v : b) v = -v;
            return unpack_interior(family_.grid(), solvers_.at(0).solve(b));
        }
        return bellman_solve(rhs, hint);
    }

    /// Policy iteration: freeze the nodewise argmax, solve the frozen linear
    /// problem, repeat until the selection is stable; a detected policy cycle
    /// drops to damped value iteration before giving up.
    ScalarField bellman_solve(const ScalarField& rhs, const ScalarField* hint) const {
        const double scale = std::max(rhs.max_abs(), 1e-300);
        auto residual = [&](const ScalarField& u) {
            double worst = 0.0;
            u.grid()->for_each_interior([&](int i, int j) {
                worst = std::max(worst, std::abs(family_.apply_at(u, i, j) - rhs.at(i, j)));
            });
            return worst;
        };

        std::vector<int> policy =
            hint ? argmax_policy(family_, *hint)
                 : std::vector<int>(static_cast<std::size_t>(family_.grid()->interior_count()), 0);
        std::set<std::uint64_t> seen{hash_policy(policy)};
        ScalarField u = frozen_solve(policy, rhs);

        for (int it = 0; it < opts_.bellman_policy_cap; ++it) {
            std::vector<int> next = argmax_policy(family_, u);
            if (next == policy && residual(u) <= 10.0 * opts_.linear_rtol * scale) return u;
            if (next != policy && !seen.insert(hash_policy(next)).second) break; // cycle
            policy = std::move(next);
            u = frozen_solve(policy, rhs);
        }

        // damped value iteration fallback
        std::vector<double> history;
        for (int it = 0; it < opts_.bellman_value_cap; ++it) {
            double res = residual(u);
            history.push_back(res);
            if (res <= 10.0 * opts_.linear_rtol * scale) return u;
            ScalarField v = frozen_solve(argmax_policy(family_, u), rhs);
            u = 0.5 * (u + v);
        }
        throw SolveFailure("Bellman solve unconverged after policy cycling and damped iteration",
                           history);
    }

private:
    ScalarField frozen_solve(const std::vector<int>& policy, const ScalarField& rhs) const {
        std::uint64_t key = hash_policy(policy);
        auto it = solvers_.find(key);
        if (it == solvers_.end()) {
            if (solvers_.size() > 24) solvers_.clear(); // policies settle; keep the map tiny
            it = solvers_
                     .emplace(key,
                              LinearSolver(
                                  StencilSystem::negative_operator(freeze_policy(family_, policy)),
                                  LinearSolver::Options{.rtol = opts_.linear_rtol}))
                     .first;
        }
        std::vector<double> b = pack_interior(rhs);
        for (double& v : b) v = -v;
        return unpack_interior(family_.grid(), it->second.solve(b));
    }

    const OperatorFamily& family_;
    FixedPointOptions opts_;
    mutable std::map<std::uint64_t, LinearSolver> solvers_;
};

/// Multiplicative increase / multiplicative decrease tuner for the Picard
/// damping weight, judged on horizons of 64 iterations.  A horizon whose
/// best residual fails to beat the running best by 2% means the iterate is
/// orbiting (any stable weight above the floor makes more progress than
/// that), so the weight halves; a healthy horizon probes a larger weight, so
/// the iteration hovers near the largest stable damping instead of crawling.
struct DampingController {
    double omega;
    double cap;
    double best = 1e300;
    double horizon_best = 1e300;
    int count = 0;
    int floor_failures = 0;

    explicit DampingController(double w0) : omega(w0), cap(w0) {}

    void reset_progress() {
        best = horizon_best = 1e300;
        count = 0;
    }

    void observe(double res) {
        horizon_best = std::min(horizon_best, res);
        if (++count < 64) return;
        if (horizon_best > 0.98 * best) {
            if (omega <= 1.0 / 2048.0 * (1.0 + 1e-12)) ++floor_failures;
            omega = std::max(0.5 * omega, 1.0 / 2048.0);
        } else if (omega < cap) {
            omega = std::min(1.3 * omega, cap);
        }
        best = std::min(best, horizon_best);
        horizon_best = 1e300;
        count = 0;
    }
};

/// Semismooth Newton on the penalized system
///   min_k (-L_k u) + shift u + w phi(u - psi) = b   (interior rows),
/// the stiff-regime fallback once damped Picard orbits at its damping floor.
/// The linearization freezes the Bellman argmax policy and adds the diagonal
/// w phi'(u - psi), which keeps every Newton matrix an M-matrix; steps are
/// halved until the residual drops.  Returns false if a step cannot improve.
inline bool newton_penalized(const OperatorFamily& family, double shift, const ScalarField& w,
                             const std::vector<double>& b, const ScalarField& obstacle,
                             const PenaltyShape& shape, ScalarField& u, double fnorm_tol,
                             const FixedPointOptions& opts) {
    const Grid& grid = *family.grid();
    auto residual = [&](const ScalarField& v, std::vector<double>* out) {
        double worst = 0.0;
        if (out) out->assign(static_cast<std::size_t>(grid.interior_count()), 0.0);
        grid.for_each_interior([&](int i, int j) {
            const int r = grid.interior_index(i, j);
            double Fi = -family.apply_at(v, i, j) + shift * v.at(i, j) +
                        w.at(i, j) * shape.phi(v.at(i, j) - obstacle.at(i, j)) -
                        b[static_cast<std::size_t>(r)];
            if (out) (*out)[static_cast<std::size_t>(r)] = Fi;
            worst = std::max(worst, std::abs(Fi));
        });
        return worst;
    };

    std::vector<double> F;
    double fnorm = residual(u, &F);
    double mu = 0.0; // Levenberg shift, escalated when a step cannot improve
    for (int it = 0; it < 120; ++it) {
        if (fnorm <= fnorm_tol) return true;
        MatrixField frozen =
            family.linear() ? family.members[0] : freeze_policy(family, argmax_policy(family, u));
        StencilSystem sys = StencilSystem::negative_operator(frozen, shift + mu);
        grid.for_each_interior([&](int i, int j) {
            const int r = grid.interior_index(i, j);
            double d = w.at(i, j) * shape.phi_slope(u.at(i, j) - obstacle.at(i, j));
            sys.diag[static_cast<std::size_t>(r)] += d;
            sys.val[static_cast<std::size_t>(sys.row_ptr[r])] += d;
        });
        LinearSolver solver(std::move(sys), LinearSolver::Options{.rtol = opts.linear_rtol});
        std::vector<double> rhs(F.size());
        for (std::size_t k = 0; k < F.size(); ++k) rhs[k] = -F[k];
        std::vector<double> du = solver.solve(rhs);

        double t = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 28 && !accepted; ++ls, t *= 0.5) {
            ScalarField trial = u;
            grid.for_each_interior([&](int i, int j) {
                trial.at(i, j) +=
                    t * du[static_cast<std::size_t>(grid.interior_index(i, j))];
            });
            std::vector<double> Ftrial;
            double ftrial = residual(trial, &Ftrial);
            if (ftrial < fnorm * (1.0 - 1e-4 * t) || ftrial <= fnorm_tol) {
                u = std::move(trial);
                F = std::move(Ftrial);
                fnorm = ftrial;
                accepted = true;
            }
        }
        if (accepted) {
            mu *= 0.25; // relax toward the plain Newton step
            if (mu < 1e-12 * fnorm) mu = 0.0;
        } else {
            // steepen the model; with enough diagonal the step becomes a
            // short residual-descent direction, which the M-matrix rows
            // cannot refuse
            mu = mu == 0.0 ? std::max(fnorm, 1.0) : 10.0 * mu;
            if (mu > 1e14 * std::max(fnorm, 1.0)) return false;
        }
    }
    return fnorm <= fnorm_tol;
}

/// One Picard run at a fixed penalty width against a prebuilt engine and g.
/// The map S loses contractivity as eps shrinks, so the damping weight is
/// tuned on the fly (persisting across continuation stages via omega_state);
/// if the orbit survives at the damping floor, or the iteration budget runs
/// out, the stage drops into the semismooth Newton fallback and finishes with
/// one more S application so the returned field is always an S-image.
inline std::pair<ScalarField, SolverReport> picard_stage(
    const DirichletEngine& engine, const OperatorFamily& family, const ScalarField& f,
    const ScalarField& obstacle, const ScalarField& g, const PenaltyShape& shape,
    const FixedPointOptions& opts, const ScalarField* warm_start, double* omega_state = nullptr,
    bool* prefer_newton = nullptr) {
    double g_plus_max = 0.0;
    for (double v : g.values()) g_plus_max = std::max(g_plus_max, v);
    const double tol_fp = opts.tol_scale * (f.max_abs() + g_plus_max);

    DampingController damping(opts.omega);
    if (omega_state) damping.omega = *omega_state;
    ScalarField u = warm_start ? *warm_start : engine.solve(f, nullptr);
    SolverReport report;
    report.eps_last = shape.eps();
    std::vector<double> history;
    int newton_cooldown = 0;
    for (int it = 0; it < opts.max_iters; ++it) {
        ScalarField rhs = penalized_rhs_elliptic(g, f, u, obstacle, shape);
        ScalarField s = engine.solve(rhs, &u);
        double res = (s - u).max_abs();
        history.push_back(res);
        report.inner_iters = it + 1;
        if (res <= tol_fp) {
            report.fixed_point_residual = res;
            report.outer_iters = 1;
            if (omega_state) *omega_state = damping.omega;
            return {std::move(s), report};
        }
        damping.observe(res);

        const int budget = prefer_newton && *prefer_newton ? 1 : opts.picard_budget;
        if (newton_cooldown == 0 && (damping.floor_failures >= 1 || it + 1 >= budget)) {
            newton_cooldown = 256;
            damping.floor_failures = 0;
            ScalarField gplus = g;
            for (double& v : gplus.values()) v = std::max(v, 0.0);
            std::vector<double> b = pack_interior(gplus);
            std::vector<double> fb = pack_interior(f);
            for (std::size_t k = 0; k < b.size(); ++k) b[k] -= fb[k];
            double fnorm_tol = tol_fp * family.lambda_lo;
            for (int attempt = 0; attempt < 3; ++attempt, fnorm_tol *= 0.1) {
                if (!newton_penalized(family, 0.0, gplus, b, obstacle, shape, u, fnorm_tol, opts))
                    break;
                ScalarField rhs2 = penalized_rhs_elliptic(g, f, u, obstacle, shape);
                ScalarField s2 = engine.solve(rhs2, &u);
                double res2 = (s2 - u).max_abs();
                history.push_back(res2);
                ++report.inner_iters;
                if (res2 <= tol_fp) {
                    report.fixed_point_residual = res2;
                    report.outer_iters = 1;
                    if (omega_state) *omega_state = damping.omega;
                    if (prefer_newton) *prefer_newton = true;
                    return {std::move(s2), report};
                }
            }
        }
        if (newton_cooldown > 0) --newton_cooldown;
        u = (1.0 - damping.omega) * (std::move(u)) + damping.omega * std::move(s);
    }
    throw SolveFailure("penalized fixed point unconverged after " +
                           std::to_string(opts.max_iters) +
                           " iterations (damping too weak or eps too small for this grid)",
                       history);
}

} // namespace detail

/// Discrete Bellman Dirichlet solve max_k a^k_ij D_ij u = rhs.
inline ScalarField solve_bellman_dirichlet(const OperatorFamily& family, const ScalarField& rhs,
                                           const FixedPointOptions& opts = {},
                                           const ScalarField* hint = nullptr) {
    detail::require_same_grid(family.grid(), rhs.grid(), "solve_bellman_dirichlet");
    if (family.linear()) return solve_linear_dirichlet(family.members[0], rhs, opts);
    detail::DirichletEngine engine(family, opts);
    return engine.bellman_solve(rhs, hint);
}

/// Damped Picard realization of the fixed point u = S(u), where S(v) solves
/// the Dirichlet problem with right-hand side g+ phi(v - psi) + f - g+.
/// Returns the image S(u_last) (so the one-sided bound L u <= f holds to
/// linear-solve accuracy) together with the report.  The tolerance scales
/// with the data, tol_fp = tol_scale * (|f| + |g+|), and the iterate history
/// rides along in the failure when the cap is hit.
inline std::pair<ScalarField, SolverReport> fixed_point_penalized(
    const PenalizedProblem& problem_in, const FixedPointOptions& opts = {},
    const ScalarField* warm_start = nullptr) {
    const PenalizedProblem problem = problem_in.prepared();
    problem.family.require_monotone();
    ScalarField g = assemble_g_elliptic(problem.family, problem.f, problem.obstacle);
    detail::DirichletEngine engine(problem.family, opts);
    return detail::picard_stage(engine, problem.family, problem.f, problem.obstacle, g,
                                problem.shape, opts, warm_start);
}

/// Run the fixed point down a decreasing eps ladder, warm-starting each stage
/// from the previous one, and report the complementarity of the final field.
/// Records the per-stage product residual in the norm table.
inline std::pair<ScalarField, SolverReport> continuation_solve(const PenalizedProblem& problem_in,
                                                               const EpsSchedule& schedule,
                                                               const FixedPointOptions& opts = {}) {
    const PenalizedProblem problem = problem_in.prepared();
    problem.family.require_monotone();
    const std::vector<double> ladder = schedule.values();

    ScalarField g = assemble_g_elliptic(problem.family, problem.f, problem.obstacle);
    detail::DirichletEngine engine(problem.family, opts);

    SolverReport report;
    std::optional<ScalarField> u;
    double omega = opts.omega;
    bool prefer_newton = false;
    for (std::size_t k = 0; k < ladder.size(); ++k) {
        try {
            auto [v, stage_report] =
                detail::picard_stage(engine, problem.family, problem.f, problem.obstacle, g,
                                     PenaltyShape(ladder[k]), opts, u ? &*u : nullptr, &omega,
                                     &prefer_newton);
            u = std::move(v);
            report.inner_iters += stage_report.inner_iters;
            report.fixed_point_residual = stage_report.fixed_point_residual;
        } catch (const SolveFailure& e) {
            throw SolveFailure("continuation stage " + std::to_string(k) +
                                   " (eps = " + std::to_string(ladder[k]) + "): " + e.what(),
                               e.residual_history);
        }
        ++report.outer_iters;
        ScalarField Lu = apply_operator(problem.family, *u);
        auto stage_resid = complementarity_residual(*u, problem.obstacle, Lu, problem.f);
        report.norm_table.emplace_back("stage_product_" + std::to_string(k), stage_resid.product);
    }
    report.eps_last = ladder.back();
    ScalarField Lu = apply_operator(problem.family, *u);
    report.complementarity = complementarity_residual(*u, problem.obstacle, Lu, problem.f);
    return {std::move(*u), report};
}

/// Discrete comparison audit: if a_ij D_ij u <= 0 at interior nodes and
/// u >= 0 at boundary nodes, then u must be >= -tol everywhere.  Vacuously
/// true when the premise fails.
inline bool check_comparison(const MatrixField& A, const ScalarField& u, double tol = 1e-9) {
    detail::require_same_grid(A.grid(), u.grid(), "check_comparison");
    if (!monotone_stencil_ok(A))
        throw std::invalid_argument("check_comparison needs a monotone stencil");
    const double slack = 1e-12 * (1.0 + u.max_abs());
    bool premise = true;
    u.grid()->for_each_interior([&](int i, int j) {
        if (apply_coefficient_at(A, u, i, j) > slack) premise = false;
    });
    u.grid()->for_each_boundary([&](int i, int j) {
        if (u.at(i, j) < -slack) premise = false;
    });
    if (!premise) return true;
    double min_u = 0.0;
    u.grid()->for_each_value([&](int i, int j, int) { min_u = std::min(min_u, u.at(i, j)); });
    return min_u >= -tol;
}

} // namespace obskit
