#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "obskit/config.hpp"
#include "obskit/parabolic.hpp"

namespace obskit {

inline constexpr const char* kVersion = "0.1.0";

/// FNV-1a over the canonical JSON dump (nlohmann objects are key-sorted, so
/// the dump is canonical for a given content).
inline std::string config_hash(const Json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Shortest exact decimal for CSV cells; byte-stable across reruns.
inline std::string format_value(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct CsvRow {
    std::string norm;
    std::string params;
    std::string sampler;
    double value = 0.0;
};

struct RunResult {
    ProblemConfig config;
    Json config_json;
    std::string hash;
    std::string provenance;
    SolverReport report;
    GridPtr grid;
    std::optional<SpaceTimeGrid> st;       // engaged for parabolic runs
    std::vector<ScalarField> u;            // 1 level (elliptic) or steps+1 levels
    std::vector<ScalarField> f_data;       // same layout
    std::vector<ScalarField> obstacle_data;
    std::vector<CsvRow> norms;
    double seconds = 0.0;
};

inline std::string csv_text(const std::string& hash, const std::vector<CsvRow>& rows) {
    std::string out = "config,norm,params,sampler,value\n";
    for (const CsvRow& r : rows)
        out += hash + "," + r.norm + "," + r.params + "," + r.sampler + "," +
               format_value(r.value) + "\n";
    return out;
}

namespace detail {

inline OperatorFamily build_family(const ProblemConfig& config, const GridPtr& grid) {
    std::vector<MatrixField> members;
    members.reserve(config.coefficients.size());
    for (const CoefficientConfig& c : config.coefficients) members.push_back(c.build(grid));
    double lo = 1e300, hi = -1e300;
    for (const MatrixField& m : members) {
        auto [a, b] = m.eigenvalue_range();
        lo = std::min(lo, a);
        hi = std::max(hi, b);
    }
    if (!(lo > 0.0))
        throw ConfigError("coefficients: smallest eigenvalue " + std::to_string(lo) +
                          " is not positive, the family is not uniformly elliptic");
    return OperatorFamily(std::move(members), lo, hi);
}

inline double slab_lp_norm(const std::vector<ScalarField>& slabs, const SpaceTimeGrid& st,
                           const WeightField& w, double p) {
    double acc = 0.0;
    for (int m = 1; m <= st.steps; ++m) {
        const ScalarField& s = slabs[static_cast<std::size_t>(m)];
        const double vol = s.grid()->cell_volume() * st.dt;
        s.grid()->for_each_value([&](int i, int j, int) {
            acc += std::pow(std::abs(s.at(i, j)), p) * w.w.at(i, j) * vol;
        });
    }
    return std::pow(acc, 1.0 / p);
}

inline ScalarField gradient_component(const ScalarField& u, int axis) {
    ScalarField out(u.grid());
    u.grid()->for_each_interior([&](int i, int j) {
        auto [gx, gy] = gradient_at(u, i, j);
        out.at(i, j) = axis == 0 ? gx : gy;
    });
    return out;
}

/// Hoelder seminorm of the gradient; the difference quotients live on the
/// interior nodes, so the pair sampling stays there.
inline double gradient_holder_seminorm(const ScalarField& u, double alpha) {
    double s = holder_seminorm(gradient_component(u, 0), alpha, 200000000L, 11, true);
    if (u.grid()->dim() == 2)
        s = std::max(s, holder_seminorm(gradient_component(u, 1), alpha, 200000000L, 11, true));
    return s;
}

} // namespace detail

/// Dispatch one configured run, compute its norm table, stamp the record.
inline RunResult run(const ProblemConfig& config) {
    config.validate();
    RunResult r;
    r.config = config;
    r.config_json = config.to_json();
    r.hash = config_hash(r.config_json);
    r.provenance = std::string("obskit ") + kVersion + "+cfg." + r.hash;

    const auto t0 = std::chrono::steady_clock::now();
    GridPtr grid = config.domain.build();
    r.grid = grid;
    OperatorFamily family = detail::build_family(config, grid);

    const double scale = config.data_scale;
    auto fexpr = config.f.evaluator();
    auto pexpr = config.obstacle.evaluator();
    ScalarField f = sample_field(fexpr, grid);
    f *= scale;
    EpsSchedule schedule = config.schedule;
    schedule.eps0 *= scale;
    FixedPointOptions opts;
    opts.omega = config.omega;
    opts.max_iters = config.max_iters;
    opts.tol_scale = config.tol_scale;
    Pipeline pipeline{config.mollified, config.mollify_radius};

    if (config.parabolic()) {
        SpaceTimeGrid st(grid, config.time->horizon / config.time->steps, config.time->steps);
        r.st = st;
        const double ramp = config.time->ramp;
        for (int m = 0; m <= st.steps; ++m) {
            double t = st.time(m);
            double rf = ramp > 0.0 ? std::min(t / ramp, 1.0) : 1.0;
            ScalarField fm = sample_field(fexpr, grid);
            fm *= scale;
            ScalarField pm = sample_field(pexpr, grid);
            pm *= scale * rf;
            r.f_data.push_back(std::move(fm));
            r.obstacle_data.push_back(std::move(pm));
        }
        ParabolicProblem problem(st, family.members[0], r.f_data, r.obstacle_data, pipeline);
        auto [slabs, report] = solve_parabolic_obstacle(problem, schedule, opts);
        r.u = std::move(slabs);
        r.report = report;
    } else {
        ScalarField psi = sample_field(pexpr, grid);
        psi *= scale;
        PenalizedProblem problem(family, f, psi, PenaltyShape(schedule.eps0), pipeline);
        auto [u, report] = continuation_solve(problem, schedule, opts);
        r.u.push_back(std::move(u));
        r.f_data.push_back(f);
        r.obstacle_data.push_back(std::move(psi));
        r.report = report;
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    // norm table
    const ExponentsConfig& ex = config.exponents;
    BallSampler sampler = config.sampler.build(grid);
    WeightField w = config.weight.build(grid, ex.s);
    const std::string wtag = "p=" + format_value(ex.p) + ";weight=" + config.weight.preset;
    auto row = [&](const std::string& name, const std::string& params, const std::string& samp,
                   double value) { r.norms.push_back({name, params, samp, value}); };

    row("muckenhoupt_w", "s=" + format_value(ex.s), sampler.id,
        muckenhoupt_constant(w, ex.s, sampler));
    {
        // A1 behavior of the maximal function of a reference ball, at the
        // configured power sigma
        double mr = 0.25 * (grid->x_max() - grid->x_min());
        ScalarField m = maximal_char_ball(grid, grid->node_nearest_origin(), mr);
        for (double& v : m.values()) v = std::pow(v, ex.sigma);
        row("maximal_a1", "sigma=" + format_value(ex.sigma) + ";r=" + format_value(mr),
            sampler.id, sampled_a1_ratio(m, sampler));
    }
    double bmo_scale = sampler.radii.back();
    double bmo = 0.0;
    for (const MatrixField& m : family.members)
        bmo = std::max(bmo, bmo_vanishing_modulus(m, bmo_scale, sampler));
    row("bmo_A", "R=" + format_value(bmo_scale), sampler.id, bmo);
    {
        BallSampler beta_sampler = BallSampler::dyadic(grid, std::min(config.sampler.centers, 12),
                                                       config.sampler.levels);
        row("beta_F", "R0=" + format_value(bmo_scale), beta_sampler.id,
            beta_oscillation_modulus(family, bmo_scale, beta_sampler, config.seed));
    }

    double data_norm = 0.0, solution_norm = 0.0;
    if (config.parabolic()) {
        double lp_f = detail::slab_lp_norm(r.f_data, *r.st, w, ex.p);
        double w21_psi = weighted_w21p_norm(r.obstacle_data, *r.st, w, ex.p);
        double w21_u = weighted_w21p_norm(r.u, *r.st, w, ex.p);
        row("lp_f", wtag, "-", lp_f);
        row("w21p_psi", wtag, "-", w21_psi);
        row("w21p_u", wtag, "-", w21_u);
        data_norm = lp_f + w21_psi;
        solution_norm = w21_u;
    } else {
        double lp_f = weighted_lp_norm(r.f_data[0], w, ex.p);
        double w2_psi = weighted_w2p_norm(r.obstacle_data[0], w, ex.p);
        double w2_u = weighted_w2p_norm(r.u[0], w, ex.p);
        row("lp_f", wtag, "-", lp_f);
        row("w2p_psi", wtag, "-", w2_psi);
        row("w2p_u", wtag, "-", w2_u);
        data_norm = lp_f + w2_psi;
        solution_norm = w2_u;
    }
    row("cz_ratio", wtag, "-", data_norm > 0.0 ? solution_norm / data_norm : 0.0);

    if (!config.parabolic() && ex.morrey_requested()) {
        const std::string mtag = "p=" + format_value(ex.p) + ";theta=" + format_value(ex.theta);
        double mf = morrey_norm(r.f_data[0], ex.p, ex.theta, sampler);
        double mpsi = sobolev_morrey_norm(r.obstacle_data[0], ex.p, ex.theta, sampler);
        double mu = sobolev_morrey_norm(r.u[0], ex.p, ex.theta, sampler);
        row("morrey_f", mtag, sampler.id, mf);
        row("sm_psi", mtag, sampler.id, mpsi);
        row("sm_u", mtag, sampler.id, mu);
        row("sm_ratio", mtag, sampler.id, mf + mpsi > 0.0 ? mu / (mf + mpsi) : 0.0);
        if (ex.p + ex.theta > grid->dim()) {
            double alpha = holder_alpha(grid->dim(), ex.p, ex.theta);
            row("holder_du", "alpha=" + format_value(alpha), "-",
                detail::gradient_holder_seminorm(r.u[0], alpha));
        }
    }

    row("r_obstacle", "-", "-", r.report.complementarity.obstacle);
    row("r_equation", "-", "-", r.report.complementarity.equation);
    row("r_product", "-", "-", r.report.complementarity.product);
    row("eps_last", "-", "-", r.report.eps_last);
    row("fp_residual", "-", "-", r.report.fixed_point_residual);
    for (const auto& [name, value] : r.report.norm_table) row(name, "-", "-", value);
    return r;
}

// ---------------------------------------------------------------------------
// record files
// ---------------------------------------------------------------------------

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_levels(const std::filesystem::path& path,
                         const std::vector<ScalarField>& levels) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    for (const ScalarField& f : levels)
        out.write(reinterpret_cast<const char*>(f.values().data()),
                  static_cast<std::streamsize>(f.values().size() * sizeof(double)));
}

inline std::vector<ScalarField> read_levels(const std::filesystem::path& path,
                                            const GridPtr& grid, int levels) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::vector<ScalarField> out;
    for (int m = 0; m < levels; ++m) {
        ScalarField f(grid);
        in.read(reinterpret_cast<char*>(f.values().data()),
                static_cast<std::streamsize>(f.values().size() * sizeof(double)));
        if (!in) throw std::runtime_error("field file truncated: " + path.string());
        out.push_back(std::move(f));
    }
    return out;
}

inline Json field_sidecar(const RunResult& r, const std::string& file) {
    Json grid_json = r.config.domain.to_json();
    grid_json["dim"] = r.grid->dim();
    grid_json["h"] = r.grid->h();
    grid_json["nx"] = r.grid->nx();
    grid_json["ny"] = r.grid->ny();
    return Json{{"file", file},
                {"dtype", "float64"},
                {"byte_order", "little"},
                {"layout", "level-major; per level row-major over non-exterior nodes"},
                {"levels", static_cast<int>(r.u.size())},
                {"values_per_level", r.grid->value_count()},
                {"grid", grid_json}};
}

} // namespace detail

/// Write record.json, norms.csv and the flat binary fields with their JSON
/// sidecars under out_dir.
inline void write_record(const RunResult& r, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    detail::write_text(out_dir / "norms.csv", csv_text(r.hash, r.norms));
    detail::write_levels(out_dir / "u.f64", r.u);
    detail::write_text(out_dir / "u.json", detail::field_sidecar(r, "u.f64").dump(2) + "\n");
    detail::write_levels(out_dir / "obstacle.f64", r.obstacle_data);
    detail::write_levels(out_dir / "f.f64", r.f_data);

    Json record{{"provenance", r.provenance},
                {"config_hash", r.hash},
                {"config", r.config_json},
                {"report",
                 Json{{"outer_iters", r.report.outer_iters},
                      {"inner_iters", r.report.inner_iters},
                      {"fixed_point_residual", r.report.fixed_point_residual},
                      {"eps_last", r.report.eps_last},
                      {"r_obstacle", r.report.complementarity.obstacle},
                      {"r_equation", r.report.complementarity.equation},
                      {"r_product", r.report.complementarity.product}}},
                {"files", Json{{"norms", "norms.csv"},
                               {"u", "u.f64"},
                               {"u_sidecar", "u.json"},
                               {"obstacle", "obstacle.f64"},
                               {"f", "f.f64"}}},
                {"timing_seconds", r.seconds}};
    detail::write_text(out_dir / "record.json", record.dump(2) + "\n");
}

inline RunResult run_and_write(const ProblemConfig& config, const std::filesystem::path& out_dir) {
    RunResult r = run(config);
    write_record(r, out_dir);
    return r;
}

/// Re-run a stored record from its embedded config and audit it: hash match,
/// byte-identical norms.csv and solution field, then the solver invariants on
/// the recomputed solution.  Prints one line per check.
inline bool verify_record(const std::filesystem::path& record_dir, std::ostream& log) {
    bool all_ok = true;
    auto check = [&](const std::string& name, bool ok, const std::string& note = "") {
        log << (ok ? "PASS " : "FAIL ") << name;
        if (!note.empty()) log << "  (" << note << ")";
        log << "\n";
        all_ok = all_ok && ok;
    };

    Json record = Json::parse(detail::read_text(record_dir / "record.json"));
    ProblemConfig config = ProblemConfig::parse(record.at("config"));
    const std::string stored_hash = record.at("config_hash").get<std::string>();
    check("config-hash", config_hash(config.to_json()) == stored_hash, stored_hash);

    RunResult rerun = run(config);
    const std::string stored_csv = detail::read_text(record_dir / "norms.csv");
    check("norms-byte-identical", csv_text(rerun.hash, rerun.norms) == stored_csv);

    std::vector<ScalarField> stored_u =
        detail::read_levels(record_dir / "u.f64", rerun.grid, static_cast<int>(rerun.u.size()));
    bool fields_equal = true;
    for (std::size_t m = 0; m < rerun.u.size(); ++m)
        if (stored_u[m].values() != rerun.u[m].values()) fields_equal = false;
    check("solution-byte-identical", fields_equal);

    // invariant suite on the recomputed run
    OperatorFamily family = detail::build_family(config, rerun.grid);
    const double eps_last = rerun.report.eps_last;
    double data_mag = 0.0;
    for (const ScalarField& s : rerun.f_data) data_mag = std::max(data_mag, s.max_abs());
    for (const ScalarField& s : rerun.obstacle_data) data_mag = std::max(data_mag, s.max_abs());
    const double tol = 1e-6 * (1.0 + data_mag);

    if (config.parabolic()) {
        double barrier = eps_last * rerun.st->final_time() + tol;
        bool constraint = true, onesided = true, complement = true;
        std::vector<ScalarField> defect =
            parabolic_defect(rerun.u, family.members[0], rerun.f_data, *rerun.st);
        for (int m = 1; m <= rerun.st->steps; ++m) {
            const ScalarField& um = rerun.u[static_cast<std::size_t>(m)];
            const ScalarField& pm = rerun.obstacle_data[static_cast<std::size_t>(m)];
            rerun.grid->for_each_interior([&](int i, int j) {
                if (um.at(i, j) < pm.at(i, j) - barrier) constraint = false;
                double d = defect[static_cast<std::size_t>(m)].at(i, j);
                if (d < -tol) onesided = false;
                if (um.at(i, j) - pm.at(i, j) > eps_last && std::abs(d) > tol) complement = false;
            });
        }
        check("constraint  u >= psi - eps*T - tol", constraint);
        check("one-sided   u_t - Lu >= f - tol", onesided);
        check("complement  |u_t - Lu - f| <= tol off the contact band", complement);
    } else {
        const ScalarField& u = rerun.u[0];
        const ScalarField& psi = rerun.obstacle_data[0];
        const ScalarField& f = rerun.f_data[0];
        ScalarField Lu = apply_operator(family, u);
        bool constraint = true, onesided = true, complement = true;
        rerun.grid->for_each_interior([&](int i, int j) {
            if (u.at(i, j) < psi.at(i, j) - (eps_last + tol)) constraint = false;
            if (Lu.at(i, j) > f.at(i, j) + tol) onesided = false;
            if (u.at(i, j) - psi.at(i, j) > eps_last &&
                std::abs(Lu.at(i, j) - f.at(i, j)) > tol)
                complement = false;
        });
        check("constraint  u >= psi - (eps_last + tol)", constraint);
        check("one-sided   Lu <= f + tol", onesided);
        check("complement  |Lu - f| <= tol off the contact band", complement);
    }
    return all_ok;
}

// ---------------------------------------------------------------------------
// sweeps
// ---------------------------------------------------------------------------

namespace detail {

inline double norm_value(const RunResult& r, const std::string& name) {
    for (const CsvRow& row : r.norms)
        if (row.norm == name) return row.value;
    throw std::runtime_error("norm table is missing " + name);
}

template <typename Row>
void run_rows_concurrently(std::vector<Row>& rows, int jobs,
                           const std::function<void(Row&)>& work) {
    if (jobs < 2 || rows.size() < 2) {
        for (Row& row : rows) work(row);
        return;
    }
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t k = next.fetch_add(1);
            if (k >= rows.size()) return;
            work(rows[k]);
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
}

} // namespace detail

/// Bounded-ratio evidence sweep: data scalings x grids x coefficient presets,
/// each row reporting |u| / (|f| + |psi|) in the configured weighted norms.
/// Scalings multiply f, the obstacle and eps0 together, so scaled rows are
/// exactly proportional runs.  Row failures are recorded and the sweep
/// continues.
inline std::string sweep_cz_ratio(const Json& sweep_config, int jobs = 1) {
    detail::reject_unknown_keys(sweep_config, {"base", "scalings", "grids", "coefficients"},
                                "sweep-cz config");
    ProblemConfig base = ProblemConfig::parse(sweep_config.at("base"));
    std::vector<double> scalings;
    if (sweep_config.contains("scalings"))
        for (const Json& s : sweep_config.at("scalings")) scalings.push_back(s.get<double>());
    else
        for (int k = -3; k <= 8; ++k) scalings.push_back(std::pow(2.0, k));
    std::vector<int> grids;
    for (const Json& s : sweep_config.at("grids")) grids.push_back(s.get<int>());
    std::vector<CoefficientConfig> coefficients;
    if (sweep_config.contains("coefficients"))
        for (const Json& c : sweep_config.at("coefficients"))
            coefficients.push_back(CoefficientConfig::parse(c));
    else
        coefficients = base.coefficients;
    if (scalings.empty() || grids.empty() || coefficients.empty())
        throw ConfigError("sweep-cz: scalings, grids and coefficients must all be nonempty");
    if (scalings.size() < 3 || grids.size() < 2)
        throw ConfigError("sweep-cz: need at least 3 scalings and 2 grid sizes");

    struct Row {
        CoefficientConfig coefficient;
        int grid = 0;
        double scaling = 1.0;
        std::string hash, status = "ok";
        double lp_f = 0.0, psi_norm = 0.0, u_norm = 0.0, ratio = 0.0;
    };
    std::vector<Row> rows;
    for (const CoefficientConfig& c : coefficients)
        for (int g : grids)
            for (double t : scalings) rows.push_back({c, g, t, "", "ok", 0, 0, 0, 0});

    const bool parabolic = base.parabolic();
    std::function<void(Row&)> work = [&](Row& row) {
        ProblemConfig cfg = base;
        cfg.domain.resolution = row.grid;
        cfg.coefficients = {row.coefficient};
        cfg.data_scale = row.scaling;
        try {
            RunResult r = run(cfg);
            row.hash = r.hash;
            row.lp_f = detail::norm_value(r, "lp_f");
            row.psi_norm = detail::norm_value(r, parabolic ? "w21p_psi" : "w2p_psi");
            row.u_norm = detail::norm_value(r, parabolic ? "w21p_u" : "w2p_u");
            row.ratio = detail::norm_value(r, "cz_ratio");
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
            row.hash = config_hash(cfg.to_json());
        }
    };
    detail::run_rows_concurrently(rows, jobs, work);

    std::string out = "config,coefficient,grid,scaling,lp_f,psi_norm,u_norm,ratio,status\n";
    for (const Row& row : rows) {
        std::string status = row.status;
        for (char& c : status)
            if (c == ',' || c == '\n') c = ';';
        out += row.hash + "," + row.coefficient.preset + "," + std::to_string(row.grid) + "," +
               format_value(row.scaling) + "," + format_value(row.lp_f) + "," +
               format_value(row.psi_norm) + "," + format_value(row.u_norm) + "," +
               format_value(row.ratio) + "," + status + "\n";
    }
    return out;
}

/// Gradient-regularity sweep: same boundedness report with the Hoelder
/// seminorm of Du at alpha = 1 - (n - theta)/p.  Requires p + theta > n.
inline std::string sweep_holder(const Json& sweep_config, int jobs = 1) {
    detail::reject_unknown_keys(sweep_config, {"base", "grids"}, "sweep-holder config");
    ProblemConfig base = ProblemConfig::parse(sweep_config.at("base"));
    base.validate();
    if (base.parabolic()) throw ConfigError("sweep-holder: elliptic runs only");
    if (!base.exponents.morrey_requested())
        throw ConfigError("sweep-holder: exponents.theta must be set");
    const int n = base.dim();
    if (!(base.exponents.p + base.exponents.theta > n))
        throw ConfigError("sweep-holder: the embedding gate requires p + theta > n, got p = " +
                          format_value(base.exponents.p) +
                          ", theta = " + format_value(base.exponents.theta) +
                          ", n = " + std::to_string(n));
    const double alpha = holder_alpha(n, base.exponents.p, base.exponents.theta);

    std::vector<int> grids;
    for (const Json& s : sweep_config.at("grids")) grids.push_back(s.get<int>());
    if (grids.empty()) throw ConfigError("sweep-holder: grids must be nonempty");

    struct Row {
        int grid = 0;
        std::string hash, status = "ok";
        double holder_du = 0.0, sm_ratio = 0.0;
    };
    std::vector<Row> rows;
    for (int g : grids) rows.push_back({g, "", "ok", 0, 0});

    std::function<void(Row&)> work = [&](Row& row) {
        ProblemConfig cfg = base;
        cfg.domain.resolution = row.grid;
        try {
            RunResult r = run(cfg);
            row.hash = r.hash;
            row.holder_du = detail::norm_value(r, "holder_du");
            row.sm_ratio = detail::norm_value(r, "sm_ratio");
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
            row.hash = config_hash(cfg.to_json());
        }
    };
    detail::run_rows_concurrently(rows, jobs, work);

    std::string out = "config,grid,alpha,holder_du,sm_ratio,status\n";
    for (const Row& row : rows) {
        std::string status = row.status;
        for (char& c : status)
            if (c == ',' || c == '\n') c = ';';
        out += row.hash + "," + std::to_string(row.grid) + "," + format_value(alpha) + "," +
               format_value(row.holder_du) + "," + format_value(row.sm_ratio) + "," + status +
               "\n";
    }
    return out;
}

/// Standalone norm table over the fields stored in a record, written from the
/// record's own config (weight, exponents, sampler).
inline std::string norms_on_record(const std::filesystem::path& record_dir) {
    Json record = Json::parse(detail::read_text(record_dir / "record.json"));
    ProblemConfig config = ProblemConfig::parse(record.at("config"));
    GridPtr grid = config.domain.build();
    Json sidecar = Json::parse(detail::read_text(record_dir / "u.json"));
    const int levels = sidecar.at("levels").get<int>();
    std::vector<ScalarField> u = detail::read_levels(record_dir / "u.f64", grid, levels);

    const ExponentsConfig& ex = config.exponents;
    BallSampler sampler = config.sampler.build(grid);
    WeightField w = config.weight.build(grid, ex.s);
    std::vector<CsvRow> rows;
    const std::string wtag = "p=" + format_value(ex.p) + ";weight=" + config.weight.preset;
    rows.push_back({"muckenhoupt_w", "s=" + format_value(ex.s), sampler.id,
                    muckenhoupt_constant(w, ex.s, sampler)});
    if (levels == 1) {
        rows.push_back({"lp_u", wtag, "-", weighted_lp_norm(u[0], w, ex.p)});
        rows.push_back({"w2p_u", wtag, "-", weighted_w2p_norm(u[0], w, ex.p)});
        if (ex.morrey_requested()) {
            rows.push_back({"sm_u", "p=" + format_value(ex.p) + ";theta=" + format_value(ex.theta),
                            sampler.id, sobolev_morrey_norm(u[0], ex.p, ex.theta, sampler)});
            if (ex.p + ex.theta > grid->dim()) {
                double alpha = holder_alpha(grid->dim(), ex.p, ex.theta);
                rows.push_back({"holder_du", "alpha=" + format_value(alpha), "-",
                                detail::gradient_holder_seminorm(u[0], alpha)});
            }
        }
    } else {
        SpaceTimeGrid st(grid, config.time->horizon / config.time->steps, config.time->steps);
        rows.push_back({"lp_u", wtag, "-", detail::slab_lp_norm(u, st, w, ex.p)});
        rows.push_back({"w21p_u", wtag, "-", weighted_w21p_norm(u, st, w, ex.p)});
    }
    return csv_text(config_hash(config.to_json()), rows);
}

} // namespace obskit
