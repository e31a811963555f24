// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails.  Each criterion pins its tolerances in code; the audits of
// criterion 4 accumulate over every solver output the other criteria produce.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "obskit/experiment.hpp"
#include "obskit/oracle.hpp"
#include "test_support.hpp"

using namespace obskit;
using testsupport::pi;

namespace {

struct Criterion {
    int id;
    std::string label;
    bool pass;
    std::string note;
};

std::vector<Criterion> results;

void report(int id, const std::string& label, bool pass, const std::string& note) {
    results.push_back({id, label, pass, note});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// criterion 4 tallies: every solver output in this suite flows through here
struct AuditTally {
    long fields = 0;
    bool ok = true;
    std::string worst;
} audits;

void audit_elliptic(const OperatorFamily& family, const ScalarField& u, const ScalarField& f,
                    const ScalarField& obstacle, double eps_last, const std::string& tag) {
    const double tol = 1e-6 * (1.0 + f.max_abs() + obstacle.max_abs());
    ScalarField Lu = apply_operator(family, u);
    bool ok = true;
    u.grid()->for_each_interior([&](int i, int j) {
        if (u.at(i, j) < obstacle.at(i, j) - (eps_last + tol)) ok = false;
        if (Lu.at(i, j) > f.at(i, j) + tol) ok = false;
    });
    ++audits.fields;
    if (!ok && audits.ok) {
        audits.ok = false;
        audits.worst = tag;
    }
}

void audit_parabolic(const MatrixField& A, const std::vector<ScalarField>& u,
                     const std::vector<ScalarField>& f, const std::vector<ScalarField>& obstacle,
                     const SpaceTimeGrid& st, double eps_last, const std::string& tag) {
    double mag = 0.0;
    for (const ScalarField& s : f) mag = std::max(mag, s.max_abs());
    for (const ScalarField& s : obstacle) mag = std::max(mag, s.max_abs());
    const double tol = 1e-6 * (1.0 + mag);
    const double barrier = eps_last * st.final_time() + tol;
    std::vector<ScalarField> defect = parabolic_defect(u, A, f, st);
    bool ok = true;
    for (int m = 1; m <= st.steps; ++m) {
        st.space->for_each_interior([&](int i, int j) {
            if (u[size_t(m)].at(i, j) < obstacle[size_t(m)].at(i, j) - barrier) ok = false;
            if (defect[size_t(m)].at(i, j) < -tol) ok = false;
        });
    }
    ++audits.fields;
    if (!ok && audits.ok) {
        audits.ok = false;
        audits.worst = tag;
    }
}

// ---------------------------------------------------------------------------

void criterion_1() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(20260808);
    double worst_cont = 0.0, worst_psor = 0.0;
    bool pass = true;
    const EpsSchedule schedule{0.05, 0.5, 8};
    for (int t = 0; t < 100; ++t) {
        int force_res = t < 10 ? 21 : 0; // ten instances at the 20-node cap
        auto inst = testsupport::random_monotone_instance(rng.next_u64(), 16, t >= 40, force_res);
        ScalarField bf = brute_force_lcp(inst.A, inst.f, inst.obstacle);
        ScalarField ps = psor_obstacle(inst.A, inst.f, inst.obstacle, 1.5, 1e-12);
        auto family = inst.family();
        PenalizedProblem problem(family, inst.f, inst.obstacle, PenaltyShape(schedule.eps0));
        auto [u, rep] = continuation_solve(problem, schedule);
        worst_cont = std::max(worst_cont, (u - bf).max_abs());
        worst_psor = std::max(worst_psor, (ps - bf).max_abs());
        if ((u - bf).max_abs() > schedule.last() + 1e-6) pass = false;
        if ((ps - bf).max_abs() > 1e-8) pass = false;
        audit_elliptic(family, u, inst.f, inst.obstacle, rep.eps_last,
                       "criterion-1 instance " + std::to_string(t));
    }
    double dt = seconds_since(t0);
    if (dt >= 60.0) pass = false;
    report(1, "oracle equivalence on 100 random monotone instances", pass,
           "max |cont - bf| = " + fmt(worst_cont) + " (cap " + fmt(schedule.last() + 1e-6) +
               "), max |psor - bf| = " + fmt(worst_psor) + " (cap 1e-8), " + fmt(dt) + " s");
}

void criterion_2() {
    const auto t0 = std::chrono::steady_clock::now();
    ContactSolution sol = analytic_1d("parabola-tangent");
    bool pass = true;
    std::vector<double> c_obs;
    std::string note;
    for (int res : {64, 128, 256}) {
        auto g = build_grid(DomainPreset::interval, res);
        const double h = g->h();
        // eps ladder coupled to the grid: stop once eps_last is about h^2
        int count = 1 + static_cast<int>(std::ceil(std::log2(0.1 / (h * h))));
        EpsSchedule schedule{0.1, 0.5, count};
        auto family = OperatorFamily::single(MatrixField::identity(g));
        ScalarField f(g);
        ScalarField psi = sample_field([&](double x, double) { return sol.obstacle(x); }, g);
        auto [u, rep] = continuation_solve(PenalizedProblem(family, f, psi, PenaltyShape(0.1)),
                                           schedule);
        audit_elliptic(family, u, f, psi, rep.eps_last, "criterion-2 res " + std::to_string(res));

        double xh = 0.0;
        g->for_each_interior([&](int i, int j) {
            if (u.at(i, j) - psi.at(i, j) <= rep.eps_last)
                xh = std::max(xh, std::abs(g->x(i)));
        });
        double err = 0.0;
        g->for_each_value([&](int i, int j, int) {
            err = std::max(err, std::abs(u.at(i, j) - sol.value(g->x(i))));
        });
        if (std::abs(xh - sol.contact_point) > 2.0 * h) pass = false;
        if (err > rep.eps_last + 10.0 * h * h) pass = false;
        c_obs.push_back(err / (h * h));
        note += "res " + std::to_string(res) + ": |x*_h - x*|/h = " +
                fmt(std::abs(xh - sol.contact_point) / h) + ", err/h^2 = " + fmt(err / (h * h)) +
                "; ";
    }
    double spread = *std::max_element(c_obs.begin(), c_obs.end()) /
                    std::max(1e-12, *std::min_element(c_obs.begin(), c_obs.end()));
    if (spread > 4.0) pass = false;
    double dt = seconds_since(t0);
    if (dt >= 60.0) pass = false;
    report(2, "analytic contact set on grids {64,128,256}", pass,
           note + "C spread " + fmt(spread) + ", " + fmt(dt) + " s");
}

void criterion_3() {
    auto g = build_grid(DomainPreset::interval, 256);
    ContactSolution sol = analytic_1d("parabola-tangent");
    auto family = OperatorFamily::single(MatrixField::identity(g));
    ScalarField f(g);
    ScalarField psi = sample_field([&](double x, double) { return sol.obstacle(x); }, g);
    EpsSchedule schedule{0.1, 0.5, 7}; // eps_k = 0.1 * 0.5^k, k = 0..6
    auto [u, rep] = continuation_solve(PenalizedProblem(family, f, psi, PenaltyShape(0.1)),
                                       schedule);
    audit_elliptic(family, u, f, psi, rep.eps_last, "criterion-3");

    std::vector<double> products;
    for (const auto& [name, value] : rep.norm_table)
        if (name.rfind("stage_product_", 0) == 0) products.push_back(value);
    bool monotone = products.size() == 7;
    for (std::size_t k = 0; k + 1 < products.size(); ++k)
        if (products[k + 1] > 1.10 * products[k]) monotone = false;
    bool final_small = !products.empty() && products.back() < 1e-4;
    std::string note = "r_product ladder:";
    for (double p : products) note += " " + fmt(p);
    if (!final_small)
        note += " | the symmetric ramp pins the band product near 0.6*g*eps, so the ladder floor"
                " here is ~9e-4; the bellman run's longer ladder pushes the same measure below"
                " 1e-4";
    report(3, "complementarity decay along the pinned eps ladder", monotone && final_small,
           note + (monotone ? " (monotone)" : " (NOT monotone)"));
}

void criterion_5() {
    auto g = build_grid(DomainPreset::square, 64);
    std::vector<MatrixField> members{MatrixField::identity(g), MatrixField(g, Sym2{1.0, 0.0, 4.0})};
    OperatorFamily family(std::move(members), 1.0, 4.0);
    ScalarField f(g);
    ScalarField psi =
        sample_field([](double x, double y) { return 0.5 - (x * x + y * y); }, g);
    EpsSchedule schedule{0.1, 0.5, 13};
    auto [u, rep] = continuation_solve(PenalizedProblem(family, f, psi, PenaltyShape(0.1)),
                                       schedule);
    audit_elliptic(family, u, f, psi, rep.eps_last, "criterion-5 bellman run");

    std::vector<double> products;
    for (const auto& [name, value] : rep.norm_table)
        if (name.rfind("stage_product_", 0) == 0) products.push_back(value);
    bool decay = true;
    for (std::size_t k = 0; k + 1 < products.size(); ++k)
        if (products[k + 1] > 1.10 * products[k]) decay = false;
    bool final_small = !products.empty() && products.back() < 1e-4;

    auto [lo, hi] = audit_ellipticity(family, 4000, 17);
    bool window = lo >= 1.0 - 1e-9 && hi <= 8.0 + 1e-9;

    // exhaustive policy enumeration on a 9-interior-node grid
    auto gc = build_grid(DomainPreset::square, 4);
    std::vector<MatrixField> mc{MatrixField::identity(gc), MatrixField(gc, Sym2{1.0, 0.0, 4.0})};
    OperatorFamily coarse(std::move(mc), 1.0, 4.0);
    Rng rng(99);
    ScalarField rhs = sample_field(testsupport::random_smooth(rng, 2.0), gc);
    ScalarField upi = solve_bellman_dirichlet(coarse, rhs);
    ScalarField best(gc, -1e300);
    for (int mask = 0; mask < (1 << 9); ++mask) {
        MatrixField frozen(gc);
        gc->for_each_value([&](int i, int j, int) {
            int sel = gc->is_interior(i, j) ? (mask >> gc->interior_index(i, j)) & 1 : 0;
            frozen.at(i, j) = coarse.members[static_cast<std::size_t>(sel)].at(i, j);
        });
        ScalarField v = solve_linear_dirichlet(frozen, rhs);
        gc->for_each_value(
            [&](int i, int j, int) { best.at(i, j) = std::max(best.at(i, j), v.at(i, j)); });
    }
    double enum_gap = (upi - best).max_abs();
    bool enum_match = enum_gap <= 1e-12;

    report(5, "bellman family {I, diag(1,4)} coverage",
           decay && final_small && window && enum_match,
           "final r_product " + fmt(products.empty() ? -1.0 : products.back()) +
               ", ellipticity window [" + fmt(lo) + ", " + fmt(hi) + "] in [1,8]" +
               (window ? "" : " VIOLATED") + ", enumeration gap " + fmt(enum_gap) +
               (decay ? "" : ", decay NOT monotone"));
}

void criterion_6() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(4242);
    bool pass = true;
    for (int t = 0; t < 1000; ++t) {
        auto inst = testsupport::random_monotone_instance(rng.next_u64(), 20);
        Rng local(rng.next_u64());
        ScalarField rhs(inst.grid);
        inst.grid->for_each_interior(
            [&](int i, int j) { rhs.at(i, j) = -local.uniform(0.0, 2.0); });
        ScalarField u = solve_linear_dirichlet(inst.A, rhs);
        if (!check_comparison(inst.A, u)) pass = false;
    }
    for (int t = 0; t < 200; ++t) {
        auto inst = testsupport::random_monotone_instance(rng.next_u64(), 16);
        SpaceTimeGrid st(inst.grid, 0.1, 6);
        Rng local(rng.next_u64());
        std::vector<ScalarField> u;
        u.emplace_back(inst.grid);
        ScalarField cur(inst.grid);
        for (int m = 1; m <= st.steps; ++m) {
            ScalarField rhs(inst.grid);
            inst.grid->for_each_interior(
                [&](int i, int j) { rhs.at(i, j) = local.uniform(0.0, 2.0); });
            cur = step_implicit(inst.A, cur, st.dt, rhs);
            u.push_back(cur);
        }
        if (!check_comparison_parabolic(inst.A, u, st)) pass = false;
    }
    double dt = seconds_since(t0);
    if (dt >= 120.0) pass = false;
    report(6, "comparison principles on 1000 elliptic + 200 parabolic instances", pass,
           fmt(dt) + " s");
}

Json cz_base_config() {
    return Json{{"kind", "linear-elliptic"},
                {"domain", {{"preset", "square"}, {"resolution", 16}}},
                {"coefficients", {{"preset", "identity"}}},
                {"f", {{"preset", "constant"}, {"value", -1.0}}},
                {"obstacle", {{"preset", "paraboloid"}, {"peak", 0.5}, {"curvature", 1.0}}},
                {"exponents", {{"p", 4.0}}},
                {"eps_schedule", {{"eps0", 0.05}, {"factor", 0.5}, {"count", 6}}},
                {"sampler", {{"centers", 16}, {"levels", 4}}}};
}

void criterion_7() {
    Json scalings = Json::array();
    for (int k = -3; k <= 8; ++k) scalings.push_back(std::pow(2.0, k)); // 12 exact powers of two
    Json sweep{{"base", cz_base_config()},
               {"scalings", scalings},
               {"grids", {16, 24, 32}},
               {"coefficients",
                Json::array({Json{{"preset", "identity"}},
                             Json{{"preset", "checkerboard"}, {"period", 0.5}, {"jump", 1.0}}})}};
    std::string csv = sweep_cz_ratio(sweep, 2);

    std::map<std::pair<std::string, std::string>, std::vector<double>> cells;
    bool all_ok = true;
    {
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::vector<std::string> c;
            std::string cell;
            std::istringstream ls(line);
            while (std::getline(ls, cell, ',')) c.push_back(cell);
            if (c.size() != 9 || c[8] != "ok") {
                all_ok = false;
                continue;
            }
            cells[{c[1], c[2]}].push_back(std::stod(c[7]));
        }
    }
    bool homogeneous = all_ok && cells.size() == 6;
    double worst_spread = 0.0;
    std::map<std::string, std::vector<double>> per_coef;
    for (auto& [key, ratios] : cells) {
        if (ratios.size() != 12) homogeneous = false;
        double lo = *std::min_element(ratios.begin(), ratios.end());
        double hi = *std::max_element(ratios.begin(), ratios.end());
        worst_spread = std::max(worst_spread, hi / lo - 1.0);
        if (hi / lo > 1.0 + 1e-6) homogeneous = false;
        per_coef[key.first].push_back(0.5 * (lo + hi));
    }
    bool drift_ok = true;
    double worst_drift = 0.0;
    for (auto& [coef, per_grid] : per_coef) {
        double lo = *std::min_element(per_grid.begin(), per_grid.end());
        double hi = *std::max_element(per_grid.begin(), per_grid.end());
        worst_drift = std::max(worst_drift, hi / lo - 1.0);
        if (hi / lo > 1.25) drift_ok = false;
    }
    report(7, "bounded-ratio evidence (12 scalings x 3 grids x 2 coefficient sets)",
           homogeneous && drift_ok,
           "scaling spread " + fmt(worst_spread) + " (cap 1e-6), grid drift " + fmt(worst_drift) +
               " (cap 0.25)");
}

void criterion_8() {
    bool pass = true;
    std::string note;

    // constant weight: the sampled product is exactly one
    {
        auto g = build_grid(DomainPreset::interval, 64);
        WeightField w(sample_field([](double, double) { return 1.0; }, g), 2.0);
        double mu = muckenhoupt_constant(w, 2.0, BallSampler::dyadic(g, 32, 5));
        if (mu != 1.0) pass = false;
        note += "mu(1) = " + fmt(mu) + "; ";
    }
    // admissible vs inadmissible power weights under sampler refinement
    {
        auto estimate = [](int res, double gamma) {
            auto g = build_grid(DomainPreset::interval, res);
            WeightField w(
                sample_field([&](double x, double) { return std::pow(std::abs(x), gamma); }, g),
                2.0);
            int levels = static_cast<int>(std::lround(std::log2(1.0 / g->h())));
            return muckenhoupt_constant(w, 2.0, BallSampler::dyadic(g, 64, levels));
        };
        double a0 = estimate(65, 0.5), a1 = estimate(1025, 0.5), a2 = estimate(16385, 0.5);
        double b0 = estimate(65, -2.0), b1 = estimate(1025, -2.0), b2 = estimate(16385, -2.0);
        if (!(a1 / a0 <= 1.25 && a2 / a1 <= 1.25)) pass = false;
        if (!(b1 / b0 >= 10.0 && b2 / b1 >= 10.0)) pass = false;
        note += "gamma=1/2 steps " + fmt(a1 / a0) + ", " + fmt(a2 / a1) + "; gamma=-2 steps " +
                fmt(b1 / b0) + ", " + fmt(b2 / b1) + "; ";
    }
    // maximal-function decay over dyadic annuli
    {
        auto g = build_grid(DomainPreset::square, 64);
        auto center = g->node_nearest_origin();
        const double r = 0.125;
        ScalarField m = maximal_char_ball(g, center, r);
        for (int k : {2, 3}) {
            double bound = std::pow(2.0, -2.0 * (k - 1)) * 1.05;
            g->for_each_value([&](int i, int j, int) {
                double d = std::hypot(g->x(i), g->y(j));
                if (d > std::pow(2.0, k) * r && d <= std::pow(2.0, k + 1) * r && m.at(i, j) > bound)
                    pass = false;
            });
        }
        note += "maximal decay ok; ";
    }
    // Morrey norm of the unit-disk constant
    {
        auto g = build_grid(DomainPreset::disk, 64);
        ScalarField one = sample_field([](double, double) { return 1.0; }, g);
        double norm = morrey_norm(one, 2.0, 1.0, BallSampler::dyadic(g, 64, 6));
        if (std::abs(norm - std::sqrt(pi)) > 0.03 * std::sqrt(pi)) pass = false;
        note += "disk Morrey " + fmt(norm) + " vs sqrt(pi) " + fmt(std::sqrt(pi));
    }
    report(8, "weighted machinery sanity", pass, note);
}

void criterion_9() {
    Json base = cz_base_config();
    base["domain"] = Json{{"preset", "square"}, {"resolution", 64}};
    base["f"] = Json{{"preset", "sine-product"}, {"amplitude", 1.0}, {"frequency", 2.0}};
    base["exponents"] = Json{{"p", 4.0}, {"theta", 1.0}};
    base["eps_schedule"] = Json{{"eps0", 0.1}, {"factor", 0.5}, {"count", 7}};
    Json sweep{{"base", base}, {"grids", {64, 128}}};
    std::string csv = obskit::sweep_holder(sweep, 1);

    std::vector<double> alphas, seminorms;
    bool rows_ok = true;
    {
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            std::vector<std::string> c;
            std::string cell;
            std::istringstream ls(line);
            while (std::getline(ls, cell, ',')) c.push_back(cell);
            if (c.size() != 6 || c[5] != "ok") {
                rows_ok = false;
                continue;
            }
            alphas.push_back(std::stod(c[2]));
            seminorms.push_back(std::stod(c[3]));
        }
    }
    bool pass = rows_ok && seminorms.size() == 2;
    if (pass) {
        if (std::abs(alphas[0] - 0.75) > 1e-12) pass = false;
        double lo = std::min(seminorms[0], seminorms[1]);
        double hi = std::max(seminorms[0], seminorms[1]);
        if (!(lo > 0.0) || !std::isfinite(hi) || hi / lo > 1.20) pass = false;
        report(9, "gradient Hoelder seminorm stability at alpha = 0.75", pass,
               "seminorms " + fmt(seminorms[0]) + " / " + fmt(seminorms[1]) + " (drift " +
                   fmt(hi / lo - 1.0) + ", cap 0.20)");
    } else {
        report(9, "gradient Hoelder seminorm stability at alpha = 0.75", false,
               "sweep rows failed");
    }
}

void criterion_10() {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "obskit-acceptance-record";
    fs::remove_all(dir);
    bool pass = true;
    std::ostringstream log;
    {
        Json cfg = cz_base_config();
        cfg["domain"]["resolution"] = 24;
        run_and_write(ProblemConfig::parse(cfg), dir / "elliptic");
        if (!verify_record(dir / "elliptic", log)) pass = false;
    }
    {
        Json cfg{{"kind", "linear-parabolic"},
                 {"domain", {{"preset", "interval"}, {"resolution", 32}}},
                 {"time", {{"horizon", 1.0}, {"steps", 20}, {"ramp", 0.25}}},
                 {"coefficients", {{"preset", "identity"}}},
                 {"f", {{"preset", "constant"}, {"value", 0.0}}},
                 {"obstacle", {{"preset", "paraboloid"}, {"peak", 0.5}, {"curvature", 1.0}}},
                 {"exponents", {{"p", 3.0}}},
                 {"eps_schedule", {{"eps0", 0.05}, {"factor", 0.5}, {"count", 5}}},
                 {"sampler", {{"centers", 8}, {"levels", 3}}}};
        RunResult r = run_and_write(ProblemConfig::parse(cfg), dir / "parabolic");
        if (!verify_record(dir / "parabolic", log)) pass = false;
        SpaceTimeGrid st(r.grid, 1.0 / 20, 20);
        OperatorFamily fam = OperatorFamily::single(r.config.coefficients[0].build(r.grid));
        audit_parabolic(fam.members[0], r.u, r.f_data, r.obstacle_data, st, r.report.eps_last,
                        "criterion-10 parabolic record");
    }
    fs::remove_all(dir);
    report(10, "records re-run byte-identically from their configs", pass,
           pass ? "elliptic + parabolic records verified" : log.str());
}

} // namespace

int main() {
    try {
        criterion_1();
        criterion_2();
        criterion_3();
        criterion_5();
        criterion_6();
        criterion_7();
        criterion_8();
        criterion_9();
        criterion_10();
    } catch (const std::exception& e) {
        std::printf("[FAIL] acceptance aborted: %s\n", e.what());
        return 1;
    }
    report(4, "constraint and one-sided equation on every solver output", audits.ok,
           std::to_string(audits.fields) + " fields audited" +
               (audits.ok ? "" : ", first failure at " + audits.worst));

    std::sort(results.begin(), results.end(),
              [](const Criterion& a, const Criterion& b) { return a.id < b.id; });
    int failures = 0;
    for (const Criterion& c : results) {
        std::printf("[%s] criterion %2d: %s  --  %s\n", c.pass ? "PASS" : "FAIL", c.id,
                    c.label.c_str(), c.note.c_str());
        if (!c.pass) ++failures;
    }
    std::printf("%d/%d criteria passed\n", static_cast<int>(results.size()) - failures,
                static_cast<int>(results.size()));
    return failures == 0 ? 0 : 1;
}
