#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "obskit/elliptic.hpp"
#include "obskit/norms.hpp"

namespace obskit {

using Json = nlohmann::json;

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace detail {

/// Unknown keys are config errors; silent typos in exponents would
/// invalidate experiments.
inline void reject_unknown_keys(const Json& obj, const std::vector<std::string>& allowed,
                                const std::string& where) {
    if (!obj.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const std::string& k : allowed)
            if (it.key() == k) known = true;
        if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

template <typename T>
T get_or(const Json& obj, const std::string& key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return obj.at(key).get<T>();
}

} // namespace detail

struct DomainConfig {
    DomainPreset preset = DomainPreset::interval;
    int resolution = 64;

    static DomainConfig parse(const Json& j) {
        detail::reject_unknown_keys(j, {"preset", "resolution"}, "domain");
        DomainConfig d;
        d.preset = domain_preset_from_name(j.at("preset").get<std::string>());
        d.resolution = j.at("resolution").get<int>();
        return d;
    }

    Json to_json() const {
        return Json{{"preset", domain_preset_name(preset)}, {"resolution", resolution}};
    }

    GridPtr build() const { return build_grid(preset, resolution); }
};

struct TimeConfig {
    double horizon = 1.0;
    int steps = 20;
    double ramp = 0.0; // obstacle ramp-in time; 0 applies the preset from t = 0

    static TimeConfig parse(const Json& j) {
        detail::reject_unknown_keys(j, {"horizon", "steps", "ramp"}, "time");
        TimeConfig t{j.at("horizon").get<double>(), j.at("steps").get<int>(), 0.0};
        t.ramp = detail::get_or(j, "ramp", 0.0);
        return t;
    }

    Json to_json() const {
        Json j{{"horizon", horizon}, {"steps", steps}};
        if (ramp > 0.0) j["ramp"] = ramp;
        return j;
    }
};

/// Coefficient presets: identity, rotated-anisotropic(angle, ratio),
/// checkerboard(period, jump), oscillatory(frequency, amplitude).  The
/// checkerboard is realized with smooth plateau transitions so that its
/// small-scale mean oscillation genuinely vanishes below the period.
struct CoefficientConfig {
    std::string preset = "identity";
    double angle = 0.0;
    double ratio = 2.0;
    double period = 0.5;
    double jump = 1.0;
    double frequency = 1.0;
    double amplitude = 0.5;

    static CoefficientConfig parse(const Json& j) {
        detail::reject_unknown_keys(
            j, {"preset", "angle", "ratio", "period", "jump", "frequency", "amplitude"},
            "coefficients");
        CoefficientConfig c;
        c.preset = j.at("preset").get<std::string>();
        c.angle = detail::get_or(j, "angle", c.angle);
        c.ratio = detail::get_or(j, "ratio", c.ratio);
        c.period = detail::get_or(j, "period", c.period);
        c.jump = detail::get_or(j, "jump", c.jump);
        c.frequency = detail::get_or(j, "frequency", c.frequency);
        c.amplitude = detail::get_or(j, "amplitude", c.amplitude);
        return c;
    }

    Json to_json() const {
        Json j{{"preset", preset}};
        if (preset == "rotated-anisotropic") {
            j["angle"] = angle;
            j["ratio"] = ratio;
        } else if (preset == "checkerboard") {
            j["period"] = period;
            j["jump"] = jump;
        } else if (preset == "oscillatory") {
            j["frequency"] = frequency;
            j["amplitude"] = amplitude;
        }
        return j;
    }

    void validate(std::vector<std::string>& errors) const {
        if (preset != "identity" && preset != "rotated-anisotropic" && preset != "checkerboard" &&
            preset != "oscillatory")
            errors.push_back("coefficients.preset: unknown preset '" + preset + "'");
        if (preset == "rotated-anisotropic" && !(ratio > 0.0))
            errors.push_back("coefficients.ratio: must be positive");
        if (preset == "checkerboard" && (!(period > 0.0) || !(jump > -1.0)))
            errors.push_back("coefficients: checkerboard needs period > 0 and jump > -1");
        if (preset == "oscillatory" && !(std::abs(amplitude) < 1.0))
            errors.push_back("coefficients.amplitude: |amplitude| must stay below 1");
    }

    MatrixField build(const GridPtr& grid) const {
        if (preset == "identity") return MatrixField::identity(grid);
        if (preset == "rotated-anisotropic") {
            double c = std::cos(angle), s = std::sin(angle);
            Sym2 m{c * c + ratio * s * s, (ratio - 1.0) * c * s, s * s + ratio * c * c};
            if (grid->dim() == 1) m = Sym2{1.0 + (ratio - 1.0) * s * s, 0.0, 0.0};
            return MatrixField(grid, m);
        }
        if (preset == "checkerboard") {
            const double tau = period, J = jump;
            return MatrixField::sample(
                [&](double x, double y) {
                    double sx = std::tanh(1.5 * std::sin(2.0 * pi_const() * x / tau));
                    double sy = grid->dim() == 2
                                    ? std::tanh(1.5 * std::sin(2.0 * pi_const() * y / tau))
                                    : 1.0;
                    double a = 1.0 + 0.5 * J * (1.0 + sx * sy);
                    return Sym2{a, 0.0, a};
                },
                grid);
        }
        // oscillatory
        return MatrixField::sample(
            [&](double x, double y) {
                double a = 1.0 + amplitude * std::sin(2.0 * pi_const() * frequency * x) *
                                     std::cos(2.0 * pi_const() * frequency * y);
                return Sym2{a, 0.0, a};
            },
            grid);
    }

private:
    static constexpr double pi_const() { return 3.14159265358979323846; }
};

/// Scalar data presets for f, the obstacle, and stored-field analysis:
///   constant(value), paraboloid(peak - curvature |x|^2),
///   sine-product(amplitude, frequency), power-distance(scale |x|^gamma),
///   tilted-plane(gx, gy, offset).
struct ScalarPresetConfig {
    std::string preset = "constant";
    double value = 0.0;
    double peak = 0.5;
    double curvature = 1.0;
    double amplitude = 1.0;
    double frequency = 1.0;
    double gamma = 1.0;
    double scale = 1.0;
    double gx = 0.0, gy = 0.0, offset = 0.0;

    static ScalarPresetConfig parse(const Json& j, const std::string& where) {
        detail::reject_unknown_keys(j,
                                    {"preset", "value", "peak", "curvature", "amplitude",
                                     "frequency", "gamma", "scale", "gx", "gy", "offset"},
                                    where);
        ScalarPresetConfig c;
        c.preset = j.at("preset").get<std::string>();
        c.value = detail::get_or(j, "value", c.value);
        c.peak = detail::get_or(j, "peak", c.peak);
        c.curvature = detail::get_or(j, "curvature", c.curvature);
        c.amplitude = detail::get_or(j, "amplitude", c.amplitude);
        c.frequency = detail::get_or(j, "frequency", c.frequency);
        c.gamma = detail::get_or(j, "gamma", c.gamma);
        c.scale = detail::get_or(j, "scale", c.scale);
        c.gx = detail::get_or(j, "gx", c.gx);
        c.gy = detail::get_or(j, "gy", c.gy);
        c.offset = detail::get_or(j, "offset", c.offset);
        return c;
    }

    Json to_json() const {
        Json j{{"preset", preset}};
        if (preset == "constant") j["value"] = value;
        if (preset == "paraboloid") {
            j["peak"] = peak;
            j["curvature"] = curvature;
        }
        if (preset == "sine-product") {
            j["amplitude"] = amplitude;
            j["frequency"] = frequency;
        }
        if (preset == "power-distance") {
            j["gamma"] = gamma;
            j["scale"] = scale;
        }
        if (preset == "tilted-plane") {
            j["gx"] = gx;
            j["gy"] = gy;
            j["offset"] = offset;
        }
        return j;
    }

    void validate(std::vector<std::string>& errors, const std::string& where) const {
        if (preset != "constant" && preset != "paraboloid" && preset != "sine-product" &&
            preset != "power-distance" && preset != "tilted-plane")
            errors.push_back(where + ".preset: unknown preset '" + preset + "'");
    }

    std::function<double(double, double)> evaluator() const {
        const double pi = 3.14159265358979323846;
        if (preset == "constant") {
            double v = value;
            return [v](double, double) { return v; };
        }
        if (preset == "paraboloid") {
            double p = peak, c = curvature;
            return [p, c](double x, double y) { return p - c * (x * x + y * y); };
        }
        if (preset == "sine-product") {
            double a = amplitude, fr = frequency;
            return [a, fr, pi](double x, double y) {
                return a * std::sin(fr * pi * 0.5 * (x + 1.0)) *
                       std::sin(fr * pi * 0.5 * (y + 1.0));
            };
        }
        if (preset == "power-distance") {
            double gexp = gamma, sc = scale;
            return [gexp, sc](double x, double y) {
                return sc * std::pow(std::hypot(x, y), gexp);
            };
        }
        double a = gx, b = gy, c = offset;
        return [a, b, c](double x, double y) { return a * x + b * y + c; };
    }
};

struct WeightConfig {
    std::string preset = "constant";
    double gamma = 0.5;

    static WeightConfig parse(const Json& j) {
        detail::reject_unknown_keys(j, {"preset", "gamma"}, "weight");
        WeightConfig w;
        w.preset = j.at("preset").get<std::string>();
        w.gamma = detail::get_or(j, "gamma", w.gamma);
        return w;
    }

    Json to_json() const {
        Json j{{"preset", preset}};
        if (preset == "power") j["gamma"] = gamma;
        return j;
    }

    void validate(std::vector<std::string>& errors) const {
        if (preset != "constant" && preset != "power")
            errors.push_back("weight.preset: unknown preset '" + preset + "'");
    }

    WeightField build(const GridPtr& grid, double s) const {
        if (preset == "constant")
            return WeightField(sample_field([](double, double) { return 1.0; }, grid), s);
        double gexp = gamma;
        try {
            return WeightField(
                sample_field(
                    [gexp](double x, double y) { return std::pow(std::hypot(x, y), gexp); },
                    grid),
                s);
        } catch (const std::exception&) {
            throw ConfigError("weight: power preset hits a node where |x|^gamma is not finite and "
                              "strictly positive; use a resolution whose lattice misses the origin");
        }
    }
};

struct ExponentsConfig {
    double p = 4.0;
    double theta = -1.0; // negative means "not requested"
    double s = 2.0;
    double sigma = 0.5;

    static ExponentsConfig parse(const Json& j) {
        detail::reject_unknown_keys(j, {"p", "theta", "s", "sigma"}, "exponents");
        ExponentsConfig e;
        e.p = detail::get_or(j, "p", e.p);
        e.theta = detail::get_or(j, "theta", e.theta);
        e.s = detail::get_or(j, "s", e.s);
        e.sigma = detail::get_or(j, "sigma", e.sigma);
        return e;
    }

    Json to_json() const {
        Json j{{"p", p}, {"s", s}, {"sigma", sigma}};
        if (theta >= 0.0) j["theta"] = theta;
        return j;
    }

    bool morrey_requested() const { return theta > 0.0; }
};

struct SamplerConfig {
    int centers = 64;
    int levels = 6;

    static SamplerConfig parse(const Json& j) {
        detail::reject_unknown_keys(j, {"centers", "levels"}, "sampler");
        SamplerConfig s;
        s.centers = detail::get_or(j, "centers", s.centers);
        s.levels = detail::get_or(j, "levels", s.levels);
        return s;
    }

    Json to_json() const { return Json{{"centers", centers}, {"levels", levels}}; }

    BallSampler build(const GridPtr& grid) const {
        return BallSampler::dyadic(grid, centers, levels);
    }
};

/// One harness run: problem kind, geometry, data presets, weight, exponent
/// set, penalty ladder, sampler, pipeline and seed.  data_scale multiplies f,
/// the obstacle and eps0 together, which keeps scaled runs exactly
/// proportional (the sweep relies on that).
struct ProblemConfig {
    std::string kind = "linear-elliptic";
    DomainConfig domain;
    std::optional<TimeConfig> time;
    std::vector<CoefficientConfig> coefficients{CoefficientConfig{}};
    ScalarPresetConfig f;
    ScalarPresetConfig obstacle;
    WeightConfig weight;
    ExponentsConfig exponents;
    EpsSchedule schedule;
    SamplerConfig sampler;
    bool mollified = false;
    double mollify_radius = 0.0;
    double data_scale = 1.0;
    std::uint64_t seed = 1;
    double omega = 0.5;
    double tol_scale = 1e-8;
    int max_iters = 30000;

    static ProblemConfig parse(const Json& j) {
        detail::reject_unknown_keys(
            j, {"kind", "domain", "time", "coefficients", "f", "obstacle", "weight", "exponents",
                "eps_schedule", "sampler", "pipeline", "data_scale", "seed", "tolerances"},
            "config");
        ProblemConfig c;
        c.kind = j.at("kind").get<std::string>();
        c.domain = DomainConfig::parse(j.at("domain"));
        if (j.contains("time")) c.time = TimeConfig::parse(j.at("time"));
        if (j.contains("coefficients")) {
            c.coefficients.clear();
            const Json& coef = j.at("coefficients");
            if (coef.is_array())
                for (const Json& one : coef) c.coefficients.push_back(CoefficientConfig::parse(one));
            else
                c.coefficients.push_back(CoefficientConfig::parse(coef));
        }
        if (j.contains("f")) c.f = ScalarPresetConfig::parse(j.at("f"), "f");
        if (j.contains("obstacle"))
            c.obstacle = ScalarPresetConfig::parse(j.at("obstacle"), "obstacle");
        if (j.contains("weight")) c.weight = WeightConfig::parse(j.at("weight"));
        if (j.contains("exponents")) c.exponents = ExponentsConfig::parse(j.at("exponents"));
        if (j.contains("eps_schedule")) {
            const Json& e = j.at("eps_schedule");
            detail::reject_unknown_keys(e, {"eps0", "factor", "count"}, "eps_schedule");
            c.schedule.eps0 = e.at("eps0").get<double>();
            c.schedule.factor = e.at("factor").get<double>();
            c.schedule.count = e.at("count").get<int>();
        }
        if (j.contains("sampler")) c.sampler = SamplerConfig::parse(j.at("sampler"));
        if (j.contains("pipeline")) {
            const Json& p = j.at("pipeline");
            if (p.is_string()) {
                if (p.get<std::string>() != "raw")
                    throw ConfigError("pipeline: expected \"raw\" or {\"mollified\": {...}}");
            } else {
                detail::reject_unknown_keys(p, {"mollified"}, "pipeline");
                detail::reject_unknown_keys(p.at("mollified"), {"radius"}, "pipeline.mollified");
                c.mollified = true;
                c.mollify_radius = p.at("mollified").at("radius").get<double>();
            }
        }
        if (j.contains("tolerances")) {
            const Json& t = j.at("tolerances");
            detail::reject_unknown_keys(t, {"omega", "tol_scale", "max_iters"}, "tolerances");
            c.omega = detail::get_or(t, "omega", c.omega);
            c.tol_scale = detail::get_or(t, "tol_scale", c.tol_scale);
            c.max_iters = detail::get_or(t, "max_iters", c.max_iters);
        }
        c.data_scale = detail::get_or(j, "data_scale", 1.0);
        c.seed = detail::get_or(j, "seed", std::uint64_t(1));
        return c;
    }

    Json to_json() const {
        Json j;
        j["kind"] = kind;
        j["domain"] = domain.to_json();
        if (time) j["time"] = time->to_json();
        Json coef = Json::array();
        for (const CoefficientConfig& c : coefficients) coef.push_back(c.to_json());
        j["coefficients"] = coef;
        j["f"] = f.to_json();
        j["obstacle"] = obstacle.to_json();
        j["weight"] = weight.to_json();
        j["exponents"] = exponents.to_json();
        j["eps_schedule"] =
            Json{{"eps0", schedule.eps0}, {"factor", schedule.factor}, {"count", schedule.count}};
        j["sampler"] = sampler.to_json();
        if (mollified) j["pipeline"] = Json{{"mollified", Json{{"radius", mollify_radius}}}};
        else j["pipeline"] = "raw";
        j["data_scale"] = data_scale;
        j["seed"] = seed;
        j["tolerances"] = Json{{"omega", omega}, {"tol_scale", tol_scale}, {"max_iters", max_iters}};
        return j;
    }

    bool parabolic() const { return kind == "linear-parabolic"; }
    bool bellman() const { return kind == "bellman-elliptic"; }

    int dim() const { return domain.preset == DomainPreset::interval ? 1 : 2; }

    /// Collects every violated field instead of stopping at the first.
    void validate() const {
        std::vector<std::string> errors;
        if (kind != "linear-elliptic" && kind != "bellman-elliptic" && kind != "linear-parabolic")
            errors.push_back("kind: must be linear-elliptic, bellman-elliptic or linear-parabolic");
        if (domain.resolution < 4) errors.push_back("domain.resolution: must be at least 4");
        if (parabolic()) {
            if (!time) errors.push_back("time: required for parabolic runs");
            else {
                if (!(time->horizon > 0.0)) errors.push_back("time.horizon: must be positive");
                if (time->steps < 1) errors.push_back("time.steps: need at least one step");
            }
            if (coefficients.size() != 1)
                errors.push_back("coefficients: parabolic runs take a single coefficient field");
        } else if (time) {
            errors.push_back("time: only meaningful for parabolic runs");
        }
        if (kind == "bellman-elliptic" && coefficients.empty())
            errors.push_back("coefficients: bellman runs need at least one member");
        if (kind == "linear-elliptic" && coefficients.size() != 1)
            errors.push_back("coefficients: linear runs take a single coefficient field");
        if ((kind == "linear-elliptic" || kind == "linear-parabolic") && !(exponents.p > 2.0))
            errors.push_back("exponents.p: linear and parabolic runs need p > 2");
        if (kind == "bellman-elliptic" && !(exponents.p > 1.0))
            errors.push_back("exponents.p: must exceed 1");
        if (exponents.theta >= 0.0 &&
            (!(exponents.theta > 0.0) || !(exponents.theta < dim())))
            errors.push_back("exponents.theta: Morrey exponent must satisfy 0 < theta < n");
        if (!(exponents.s > 1.0)) errors.push_back("exponents.s: Muckenhoupt class needs s > 1");
        if (!(exponents.sigma > 0.0) || !(exponents.sigma <= 1.0))
            errors.push_back("exponents.sigma: must lie in (0, 1]");
        if (!(schedule.eps0 > 0.0)) errors.push_back("eps_schedule.eps0: must be positive");
        if (!(schedule.factor > 0.0) || !(schedule.factor < 1.0))
            errors.push_back("eps_schedule.factor: must lie in (0, 1), the ladder must decrease");
        if (schedule.count < 1) errors.push_back("eps_schedule.count: must be at least 1");
        if (sampler.centers < 1) errors.push_back("sampler.centers: must be at least 1");
        if (sampler.levels < 1) errors.push_back("sampler.levels: must be at least 1");
        if (mollified && !(mollify_radius > 0.0))
            errors.push_back("pipeline.mollified.radius: must be positive");
        if (!(data_scale > 0.0)) errors.push_back("data_scale: must be positive");
        for (const CoefficientConfig& c : coefficients) c.validate(errors);
        f.validate(errors, "f");
        obstacle.validate(errors, "obstacle");
        weight.validate(errors);
        if (!errors.empty()) {
            std::string msg = "config validation failed:";
            for (const std::string& e : errors) msg += "\n  - " + e;
            throw ConfigError(msg);
        }
    }
};

/// alpha = 1 - (n - theta)/p, the Hoelder exponent the gradient inherits
/// from Morrey data when p + theta > n.
inline double holder_alpha(int dim, double p, double theta) { return 1.0 - (dim - theta) / p; }

} // namespace obskit
