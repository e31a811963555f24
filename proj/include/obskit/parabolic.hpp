#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "obskit/elliptic.hpp"

namespace obskit {

/// Backward Euler step: solve (u - u_prev)/dt - a_ij D_ij u = rhs with zero
/// lateral boundary data.  Backward Euler is the only stepper here; the
/// comparison-based checks need its unconditional discrete maximum principle.
inline ScalarField step_implicit(const MatrixField& A, const ScalarField& u_prev, double dt,
                                 const ScalarField& rhs, const FixedPointOptions& opts = {}) {
    detail::require_same_grid(A.grid(), u_prev.grid(), "step_implicit");
    detail::require_same_grid(A.grid(), rhs.grid(), "step_implicit");
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    LinearSolver solver(StencilSystem::negative_operator(A, 1.0 / dt),
                        {.rtol = opts.linear_rtol});
    std::vector<double> b = pack_interior(rhs);
    std::vector<double> prev = pack_interior(u_prev);
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += prev[k] / dt;
    return unpack_interior(A.grid(), solver.solve(b));
}

/// Data of the parabolic reference equation: coefficients (time-independent
/// across the slab), nonhomogeneity and obstacle per time level, and the data
/// pipeline.  The obstacle must be <= 0 on the parabolic boundary (the
/// lateral ring at every level and the whole initial level).
struct ParabolicProblem {
    SpaceTimeGrid st;
    MatrixField A;
    std::vector<ScalarField> f;
    std::vector<ScalarField> obstacle;
    Pipeline pipeline;

    ParabolicProblem(SpaceTimeGrid st_, MatrixField A_, std::vector<ScalarField> f_,
                     std::vector<ScalarField> obstacle_, Pipeline pipe = {})
        : st(std::move(st_)), A(std::move(A_)), f(std::move(f_)), obstacle(std::move(obstacle_)),
          pipeline(pipe) {
        const std::size_t levels = static_cast<std::size_t>(st.steps) + 1;
        if (f.size() != levels || obstacle.size() != levels)
            throw std::invalid_argument("parabolic data needs steps + 1 time levels");
        detail::require_same_grid(A.grid(), st.space, "parabolic problem");
        for (const ScalarField& s : f) detail::require_same_grid(s.grid(), st.space, "parabolic f");
        for (const ScalarField& s : obstacle)
            detail::require_same_grid(s.grid(), st.space, "parabolic obstacle");
        double worst = 0.0;
        st.space->for_each_boundary([&](int i, int j) {
            for (const ScalarField& s : obstacle) worst = std::max(worst, s.at(i, j));
        });
        st.space->for_each_value(
            [&](int i, int j, int) { worst = std::max(worst, obstacle[0].at(i, j)); });
        if (worst > 1e-12)
            throw std::invalid_argument(
                "obstacle must be <= 0 on the parabolic boundary (worst " +
                std::to_string(worst) + ")");
    }

    ParabolicProblem prepared() const {
        if (!pipeline.mollified) return *this;
        std::vector<ScalarField> fm, pm;
        fm.reserve(f.size());
        pm.reserve(obstacle.size());
        for (const ScalarField& s : f) fm.push_back(mollify(s, pipeline.radius));
        for (const ScalarField& s : obstacle) pm.push_back(mollify(s, pipeline.radius));
        return ParabolicProblem(st, mollify(A, pipeline.radius), std::move(fm), std::move(pm),
                                Pipeline{});
    }
};

/// u_t - a_ij D_ij u - f at interior nodes of level m >= 1 (backward time
/// difference), packaged per level for the residual checks.
inline std::vector<ScalarField> parabolic_defect(const std::vector<ScalarField>& u,
                                                 const MatrixField& A,
                                                 const std::vector<ScalarField>& f,
                                                 const SpaceTimeGrid& st) {
    std::vector<ScalarField> out;
    out.reserve(u.size());
    out.emplace_back(st.space);
    for (int m = 1; m <= st.steps; ++m) {
        const ScalarField& um = u[static_cast<std::size_t>(m)];
        const ScalarField& up = u[static_cast<std::size_t>(m - 1)];
        ScalarField d(st.space);
        st.space->for_each_interior([&](int i, int j) {
            double ut = (um.at(i, j) - up.at(i, j)) / st.dt;
            d.at(i, j) = ut - apply_coefficient_at(A, um, i, j) -
                         f[static_cast<std::size_t>(m)].at(i, j);
        });
        out.push_back(std::move(d));
    }
    return out;
}

/// March the penalized parabolic equation down the eps ladder.  Each step
/// solves its implicit system by the damped fixed point of the penalized
/// right-hand side evaluated at the new time level; the returned slab is the
/// last ladder stage (all time levels, level 0 the zero initial data).
inline std::pair<std::vector<ScalarField>, SolverReport> solve_parabolic_obstacle(
    const ParabolicProblem& problem_in, const EpsSchedule& schedule,
    const FixedPointOptions& opts = {}) {
    const ParabolicProblem problem = problem_in.prepared();
    if (!monotone_stencil_ok(problem.A))
        throw std::invalid_argument("parabolic coefficients violate the monotone-stencil condition");
    const SpaceTimeGrid& st = problem.st;
    const std::vector<double> ladder = schedule.values();

    LinearSolver solver(StencilSystem::negative_operator(problem.A, 1.0 / st.dt),
                        {.rtol = opts.linear_rtol});

    // g per level (eps-independent), with the backward difference of the
    // obstacle as its time derivative
    std::vector<ScalarField> g;
    g.reserve(static_cast<std::size_t>(st.steps) + 1);
    g.emplace_back(st.space);
    double g_plus_max = 0.0, f_max = 0.0;
    for (int m = 1; m <= st.steps; ++m) {
        const ScalarField& pm = problem.obstacle[static_cast<std::size_t>(m)];
        const ScalarField& pp = problem.obstacle[static_cast<std::size_t>(m - 1)];
        ScalarField pdot = pm;
        pdot += -1.0 * pp;
        pdot *= 1.0 / st.dt;
        g.push_back(assemble_g_parabolic(problem.A, problem.f[static_cast<std::size_t>(m)], pm,
                                         pdot));
        for (double v : g.back().values()) g_plus_max = std::max(g_plus_max, v);
        f_max = std::max(f_max, problem.f[static_cast<std::size_t>(m)].max_abs());
    }
    const double tol_fp = opts.tol_scale * (f_max + g_plus_max);

    SolverReport report;
    std::vector<ScalarField> slab;
    const OperatorFamily newton_family = OperatorFamily::single(problem.A);
    detail::DampingController damping(opts.omega); // tuned across steps and stages
    for (std::size_t stage = 0; stage < ladder.size(); ++stage) {
        PenaltyShape shape(ladder[stage]);
        std::vector<ScalarField> prev_slab = std::move(slab);
        slab.clear();
        slab.emplace_back(st.space); // u(.,0) = 0
        for (int m = 1; m <= st.steps; ++m) {
            const ScalarField& u_prev = slab[static_cast<std::size_t>(m - 1)];
            std::vector<double> prev_over_dt = pack_interior(u_prev);
            for (double& v : prev_over_dt) v /= st.dt;

            // warm start from the previous ladder stage when available
            ScalarField v = !prev_slab.empty() ? prev_slab[static_cast<std::size_t>(m)] : u_prev;
            bool done = false;
            bool newton_spent = false;
            damping.reset_progress();
            const ScalarField& gm = g[static_cast<std::size_t>(m)];
            const ScalarField& fm = problem.f[static_cast<std::size_t>(m)];
            const ScalarField& pm = problem.obstacle[static_cast<std::size_t>(m)];
            for (int it = 0; it < opts.max_iters && !done; ++it) {
                ScalarField rhs = penalized_rhs_parabolic(gm, fm, v, pm, shape);
                std::vector<double> b = pack_interior(rhs);
                for (std::size_t q = 0; q < b.size(); ++q) b[q] += prev_over_dt[q];
                ScalarField s = unpack_interior(st.space, solver.solve(b));
                double res = (s - v).max_abs();
                ++report.inner_iters;
                if (res <= tol_fp) {
                    slab.push_back(std::move(s));
                    report.fixed_point_residual = res;
                    done = true;
                    break;
                }
                damping.observe(res);

                if (!newton_spent &&
                    (damping.floor_failures >= 1 || it + 1 >= opts.picard_budget)) {
                    newton_spent = true;
                    damping.floor_failures = 0;
                    // (M + I/dt) u + psi_eps(g) phi(u - psi) = psi_eps(g) + f + u_prev/dt
                    ScalarField wmul(st.space);
                    st.space->for_each_value(
                        [&](int i, int j, int) { wmul.at(i, j) = shape.psi(gm.at(i, j)); });
                    std::vector<double> nb = pack_interior(wmul);
                    std::vector<double> fb = pack_interior(fm);
                    for (std::size_t q = 0; q < nb.size(); ++q)
                        nb[q] += fb[q] + prev_over_dt[q];
                    double fnorm_tol = tol_fp / st.dt;
                    for (int attempt = 0; attempt < 3; ++attempt, fnorm_tol *= 0.1) {
                        if (!detail::newton_penalized(newton_family, 1.0 / st.dt, wmul, nb, pm,
                                                      shape, v, fnorm_tol, opts))
                            break;
                        ScalarField rhs2 = penalized_rhs_parabolic(gm, fm, v, pm, shape);
                        std::vector<double> b2 = pack_interior(rhs2);
                        for (std::size_t q = 0; q < b2.size(); ++q) b2[q] += prev_over_dt[q];
                        ScalarField s2 = unpack_interior(st.space, solver.solve(b2));
                        double res2 = (s2 - v).max_abs();
                        ++report.inner_iters;
                        if (res2 <= tol_fp) {
                            slab.push_back(std::move(s2));
                            report.fixed_point_residual = res2;
                            done = true;
                            break;
                        }
                    }
                    if (done) break;
                }
                v = (1.0 - damping.omega) * std::move(v) + damping.omega * std::move(s);
            }
            if (!done)
                throw SolveFailure("parabolic fixed point unconverged at step " +
                                       std::to_string(m) + " (eps = " +
                                       std::to_string(ladder[stage]) + ")",
                                   {});
            ++report.outer_iters;
        }
    }
    report.eps_last = ladder.back();

    std::vector<ScalarField> defect = parabolic_defect(slab, problem.A, problem.f, st);
    report.complementarity =
        complementarity_residual_parabolic(slab, problem.obstacle, defect, st);
    return {std::move(slab), report};
}

/// Discrete parabolic comparison audit with the backward-time stencil: if
/// u_t - a_ij D_ij u >= 0 at interior nodes of every level m >= 1 and u >= 0
/// on the parabolic boundary, then u >= -tol on the whole slab.
inline bool check_comparison_parabolic(const MatrixField& A, const std::vector<ScalarField>& u,
                                       const SpaceTimeGrid& st, double tol = 1e-9) {
    if (u.size() != static_cast<std::size_t>(st.steps) + 1)
        throw std::invalid_argument("slab count must be steps + 1");
    if (!monotone_stencil_ok(A))
        throw std::invalid_argument("check_comparison_parabolic needs a monotone stencil");
    double umax = 0.0;
    for (const ScalarField& s : u) umax = std::max(umax, s.max_abs());
    const double slack = 1e-12 * (1.0 + umax);

    bool premise = true;
    st.space->for_each_value([&](int i, int j, int) {
        if (u[0].at(i, j) < -slack) premise = false;
    });
    for (int m = 1; m <= st.steps && premise; ++m) {
        const ScalarField& um = u[static_cast<std::size_t>(m)];
        st.space->for_each_boundary([&](int i, int j) {
            if (um.at(i, j) < -slack) premise = false;
        });
        const ScalarField& up = u[static_cast<std::size_t>(m - 1)];
        st.space->for_each_interior([&](int i, int j) {
            double ut = (um.at(i, j) - up.at(i, j)) / st.dt;
            if (ut - apply_coefficient_at(A, um, i, j) < -slack) premise = false;
        });
    }
    if (!premise) return true;
    double min_u = 0.0;
    for (const ScalarField& s : u)
        for (double v : s.values()) min_u = std::min(min_u, v);
    return min_u >= -tol;
}

} // namespace obskit
