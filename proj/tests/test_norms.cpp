#include <doctest.h>

#include <cmath>

#include "obskit/norms.hpp"
#include "obskit/oracle.hpp"
#include "test_support.hpp"

using namespace obskit;
using testsupport::pi;

namespace {

WeightField unit_weight(const GridPtr& g, double s = 2.0) {
    return WeightField(sample_field([](double, double) { return 1.0; }, g), s);
}

} // namespace

TEST_CASE("weighted Lp norm of the constant and its scalings") {
    auto g = build_grid(DomainPreset::interval, 16);
    WeightField w = unit_weight(g);
    ScalarField one = sample_field([](double, double) { return 1.0; }, g);
    double norm = weighted_lp_norm(one, w, 2.0);
    CHECK(norm == doctest::Approx(std::sqrt(2.0)).epsilon(0.05)); // quadrature-level agreement

    Rng rng(1);
    ScalarField gfield = sample_field(testsupport::random_smooth(rng, 2.0), g);
    double base = weighted_lp_norm(gfield, w, 3.0);
    ScalarField scaled = 2.5 * gfield;
    CHECK(weighted_lp_norm(scaled, w, 3.0) == doctest::Approx(2.5 * base).epsilon(1e-12));

    WeightField w2(2.0 * w.w, 2.0);
    CHECK(weighted_lp_norm(gfield, w2, 2.0) ==
          doctest::Approx(std::sqrt(2.0) * weighted_lp_norm(gfield, w, 2.0)).epsilon(1e-12));

    CHECK_THROWS_AS(weighted_lp_norm(gfield, w, 1.0), std::invalid_argument);
}

TEST_CASE("weighted Sobolev norm term structure") {
    auto g = build_grid(DomainPreset::square, 8);
    WeightField w = unit_weight(g);
    CHECK(weighted_w2p_norm(ScalarField(g), w, 2.0) == 0.0);

    // linear field: only the value and first-difference terms contribute
    ScalarField lin = sample_field([](double x, double) { return x; }, g);
    const double vol = g->cell_volume();
    double expected = 0.0;
    g->for_each_value([&](int i, int, int) { expected += g->x(i) * g->x(i) * vol; });
    g->for_each_interior([&](int, int) { expected += vol; });
    CHECK(weighted_w2p_norm(lin, w, 2.0) == doctest::Approx(std::sqrt(expected)).epsilon(1e-12));

    // quadratic: the Hessian term is flat |D11|^p over the interior
    ScalarField quad = sample_field([](double x, double) { return 0.5 * x * x; }, g);
    double interior_vol = g->interior_count() * vol;
    double d2_term = std::pow(1.0, 2.0) * interior_vol;
    double val_term = 0.0, d1_term = 0.0;
    g->for_each_value(
        [&](int i, int, int) { val_term += std::pow(0.5 * g->x(i) * g->x(i), 2.0) * vol; });
    g->for_each_interior([&](int i, int) { d1_term += std::pow(g->x(i), 2.0) * vol; });
    CHECK(weighted_w2p_norm(quad, w, 2.0) ==
          doctest::Approx(std::sqrt(val_term + d1_term + d2_term)).epsilon(1e-12));
}

TEST_CASE("muckenhoupt product of a constant weight is exactly one") {
    auto g = build_grid(DomainPreset::interval, 32);
    WeightField w = unit_weight(g);
    BallSampler sampler = BallSampler::dyadic(g, 16, 5);
    CHECK(muckenhoupt_constant(w, 2.0, sampler) == 1.0);
    CHECK(muckenhoupt_constant(w, 3.5, sampler) == 1.0);

    WeightField wc(sample_field([](double, double) { return 3.7; }, g), 2.0);
    CHECK(muckenhoupt_constant(wc, 2.0, sampler) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("muckenhoupt estimate separates admissible from inadmissible powers") {
    // grids with an odd node count dodge the singular point x = 0
    auto estimate = [](int res, double gamma) {
        auto g = build_grid(DomainPreset::interval, res);
        WeightField w(
            sample_field([&](double x, double) { return std::pow(std::abs(x), gamma); }, g), 2.0);
        int levels = static_cast<int>(std::lround(std::log2(1.0 / g->h())));
        BallSampler sampler = BallSampler::dyadic(g, 64, levels);
        return muckenhoupt_constant(w, 2.0, sampler);
    };
    double in_lo = estimate(65, 0.5), in_hi = estimate(1025, 0.5);
    CHECK(in_hi <= 1.6);                 // stabilizes near the continuum value 4/3
    CHECK(in_hi / in_lo <= 1.25);
    double out_lo = estimate(65, -2.0), out_hi = estimate(1025, -2.0);
    CHECK(out_hi / out_lo >= 10.0);      // blows up under refinement
}

TEST_CASE("muckenhoupt class monotonicity ball by ball") {
    auto g = build_grid(DomainPreset::interval, 64);
    WeightField w(
        sample_field([](double x, double) { return 0.5 + std::sqrt(std::abs(x)); }, g), 2.0);
    for (int c : {5, 17, 40, 60}) {
        for (int lv = 0; lv < 4; ++lv) {
            BallSampler one{{{c, 0}}, {g->h() * std::pow(2.0, lv)}, "single"};
            double p2 = muckenhoupt_constant(w, 2.0, one);
            double p3 = muckenhoupt_constant(w, 3.0, one);
            CHECK(p3 <= p2 + 1e-12);
        }
    }
}

TEST_CASE("maximal function of a ball: values in [0,1], one at the center") {
    auto g = build_grid(DomainPreset::square, 16);
    auto center = g->node_nearest_origin();
    ScalarField m = maximal_char_ball(g, center, 0.25);
    g->for_each_value([&](int i, int j, int) {
        CHECK(m.at(i, j) <= 1.0 + 1e-12);
        CHECK(m.at(i, j) >= 0.0);
    });
    CHECK(m.at(center.first, center.second) == doctest::Approx(1.0));
}

TEST_CASE("maximal function obeys the dyadic annulus decay bound") {
    auto g = build_grid(DomainPreset::square, 32);
    auto center = g->node_nearest_origin();
    const double r = 0.125;
    ScalarField m = maximal_char_ball(g, center, r);
    for (int k : {2, 3}) {
        double bound = std::pow(2.0, -g->dim() * (k - 1)) * 1.05;
        g->for_each_value([&](int i, int j, int) {
            double d = std::hypot(g->x(i) - g->x(center.first), g->y(j) - g->y(center.second));
            if (d > std::pow(2.0, k) * r && d <= std::pow(2.0, k + 1) * r)
                CHECK(m.at(i, j) <= bound);
        });
    }
}

TEST_CASE("maximal function powers: sigma < 1 stays A1-bounded, sigma = 1 degrades") {
    auto g = build_grid(DomainPreset::interval, 256);
    auto center = g->node_nearest_origin();

    auto a1_ratio = [&](double r, double sigma, int centers, int levels) {
        ScalarField m = maximal_char_ball(g, center, r);
        BallSampler sampler = BallSampler::dyadic(g, centers, levels);
        double worst = 0.0;
        for (auto [ci, cj] : sampler.centers)
            for (double rad : sampler.radii) {
                double mean = 0.0, lo = 1e300;
                long count = 0;
                for_each_node_in_ball(*g, g->x(ci), g->y(cj), rad, [&](int i, int j) {
                    double v = std::pow(m.at(i, j), sigma);
                    mean += v;
                    lo = std::min(lo, v);
                    ++count;
                });
                if (count == 0 || lo <= 0.0) continue;
                worst = std::max(worst, mean / count / lo);
            }
        return worst;
    };

    // sigma in (0,1): refining the sampler leaves the ratio bounded
    double coarse = a1_ratio(0.25, 0.5, 16, 5);
    double fine = a1_ratio(0.25, 0.5, 64, 7);
    CHECK(fine <= coarse * 1.15 + 1e-12);
    CHECK(fine <= 50.0);

    // sigma = 1: shrinking the ball makes the ratio grow
    double r1 = a1_ratio(0.25, 1.0, 32, 7);
    double r2 = a1_ratio(0.25 / 4, 1.0, 32, 7);
    CHECK(r2 > r1 * 1.05);
}

TEST_CASE("morrey norm basics") {
    auto g = build_grid(DomainPreset::square, 16);
    BallSampler sampler = BallSampler::dyadic(g, 32, 5);
    CHECK(morrey_norm(ScalarField(g), 2.0, 1.0, sampler) == 0.0);

    Rng rng(2);
    ScalarField f = sample_field(testsupport::random_smooth(rng, 1.5), g);
    double base = morrey_norm(f, 2.0, 1.0, sampler);
    CHECK(morrey_norm(3.0 * f, 2.0, 1.0, sampler) == doctest::Approx(3.0 * base).epsilon(1e-12));

    CHECK_THROWS_AS(morrey_norm(f, 2.0, 2.5, sampler), std::invalid_argument);
    CHECK_THROWS_AS(morrey_norm(f, 2.0, 0.0, sampler), std::invalid_argument);
}

TEST_CASE("morrey norm of the unit-disk constant approaches sqrt(pi)") {
    auto g = build_grid(DomainPreset::disk, 32);
    ScalarField one = sample_field([](double, double) { return 1.0; }, g);
    BallSampler sampler = BallSampler::dyadic(g, 64, 6); // radii reach h*32 = 2
    double norm = morrey_norm(one, 2.0, 1.0, sampler);
    CHECK(norm == doctest::Approx(std::sqrt(pi)).epsilon(0.05));
}

TEST_CASE("morrey norm at tiny theta approaches the Lp norm") {
    auto g = build_grid(DomainPreset::square, 16);
    Rng rng(3);
    ScalarField f = sample_field(testsupport::random_smooth(rng, 1.0), g);
    BallSampler sampler{{g->node_nearest_origin()}, {4.0}, "big-ball"};
    double mr = morrey_norm(f, 2.0, 1e-3, sampler);
    double lp = weighted_lp_norm(f, unit_weight(g), 2.0);
    CHECK(mr == doctest::Approx(lp).epsilon(0.01));
}

TEST_CASE("norm estimators are monotone in the sampler") {
    auto g = build_grid(DomainPreset::square, 16);
    Rng rng(4);
    ScalarField f = sample_field(testsupport::random_smooth(rng, 1.0), g);
    WeightField w(sample_field([](double x, double y) { return 1.0 + x * x + y * y; }, g), 2.0);
    BallSampler coarse = BallSampler::dyadic(g, 8, 3);
    BallSampler fine = BallSampler::dyadic(g, 64, 5);
    CHECK(morrey_norm(f, 2.0, 1.0, fine) >= morrey_norm(f, 2.0, 1.0, coarse) - 1e-15);
    CHECK(muckenhoupt_constant(w, 2.0, fine) >= muckenhoupt_constant(w, 2.0, coarse) - 1e-15);
}

TEST_CASE("bmo modulus: constants vanish, scale separation on smooth checkerboards") {
    auto g = build_grid(DomainPreset::square, 256);
    MatrixField constant(g, Sym2{2.0, 0.3, 1.5});
    BallSampler sampler = BallSampler::dyadic(g, 48, 7);
    CHECK(bmo_vanishing_modulus(constant, 0.5, sampler) <= 1e-13);

    const double period = 1.0, jump = 1.0;
    MatrixField checker = MatrixField::sample(
        [&](double x, double y) {
            double sx = std::tanh(1.5 * std::sin(2 * pi * x / period));
            double sy = std::tanh(1.5 * std::sin(2 * pi * y / period));
            double a = 1.0 + 0.5 * jump * (1.0 + sx * sy);
            return Sym2{a, 0.0, a};
        },
        g);
    double small_scale = bmo_vanishing_modulus(checker, 0.02, sampler);
    double large_scale = bmo_vanishing_modulus(checker, 0.5, sampler);
    CHECK(small_scale <= 0.25 * jump);
    CHECK(large_scale >= 0.25 * jump);
    CHECK(large_scale <= 1.2 * jump);
    CHECK(small_scale <= 0.5 * large_scale);
}

TEST_CASE("oscillation modulus: frozen coefficients have no oscillation") {
    auto g = build_grid(DomainPreset::square, 12);
    std::vector<MatrixField> members{MatrixField::identity(g), MatrixField(g, Sym2{1, 0, 4})};
    OperatorFamily family(std::move(members), 1.0, 4.0);
    BallSampler sampler = BallSampler::dyadic(g, 16, 3);
    CHECK(beta_oscillation_modulus(family, 4 * g->h(), sampler) == 0.0);
}

TEST_CASE("pointwise oscillation brackets the coefficient distance (linear case)") {
    auto g = build_grid(DomainPreset::square, 12);
    MatrixField A = MatrixField::sample(
        [](double x, double y) {
            double t = 0.3 * x + 0.2 * y;
            double c = std::cos(t), s = std::sin(t);
            double l1 = 1.0, l2 = 2.0 + x;
            return Sym2{l1 * c * c + l2 * s * s, (l1 - l2) * c * s, l1 * s * s + l2 * c * c};
        },
        g);
    OperatorFamily family = OperatorFamily::single(A);
    auto probes = oscillation_probes(2, 7);
    const int d = 2;
    int checked = 0;
    g->for_each_value([&](int i, int j, int) {
        if ((i + j) % 7 != 0) return;
        double b = beta_oscillation(family, i, j, 3, 4, probes);
        double dist = (A.at(i, j) - A.at(3, 4)).norm(d);
        CHECK(b >= dist - 1e-12);
        CHECK(b <= d * dist + 1e-12);
        ++checked;
    });
    CHECK(checked > 10);
}

TEST_CASE("oscillation modulus is monotone in its scale") {
    auto g = build_grid(DomainPreset::square, 16);
    MatrixField A = MatrixField::sample(
        [](double x, double y) {
            double a = 2.0 + std::sin(2 * x) * std::cos(y);
            return Sym2{a, 0.0, a};
        },
        g);
    OperatorFamily family = OperatorFamily::single(A);
    BallSampler sampler = BallSampler::dyadic(g, 24, 5);
    double m1 = beta_oscillation_modulus(family, 2 * g->h(), sampler);
    double m2 = beta_oscillation_modulus(family, 4 * g->h(), sampler);
    double m3 = beta_oscillation_modulus(family, 8 * g->h(), sampler);
    CHECK(m1 <= m2 + 1e-15);
    CHECK(m2 <= m3 + 1e-15);
}

TEST_CASE("holder seminorm basics") {
    auto g = build_grid(DomainPreset::square, 10);
    CHECK(holder_seminorm(ScalarField(g), 0.75) == 0.0);
    ScalarField lin = sample_field([](double x, double) { return x; }, g);
    CHECK(holder_seminorm(lin, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS_AS(holder_seminorm(lin, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(holder_seminorm(lin, 1.5), std::invalid_argument);
}

TEST_CASE("complementarity residual components") {
    auto g = build_grid(DomainPreset::interval, 16);
    auto family = OperatorFamily::single(MatrixField::identity(g));
    ScalarField f(g);

    // u = psi with L psi <= f: obstacle and product residuals vanish
    ScalarField psi = sample_field([](double x, double) { return 0.3 * (1.0 - x * x); }, g);
    ScalarField Lpsi = apply_operator(family, psi);
    auto r1 = complementarity_residual(psi, psi, Lpsi, f);
    CHECK(r1.obstacle == 0.0);
    CHECK(r1.product == 0.0);
    CHECK(r1.equation <= 1e-12); // L psi = -0.6 stays on the feasible side

    // u dipping below the obstacle by 0.1 shows up as the obstacle residual
    ScalarField u = psi;
    u.at(8, 0) -= 0.1;
    auto r2 = complementarity_residual(u, psi, Lpsi, f);
    CHECK(r2.obstacle == doctest::Approx(0.1));
}

TEST_CASE("parabolic weighted norm reduces to the stationary pieces") {
    auto g = build_grid(DomainPreset::interval, 8);
    SpaceTimeGrid st(g, 0.25, 4); // T = 1
    WeightField w = unit_weight(g);
    std::vector<ScalarField> slabs;
    for (int m = 0; m <= st.steps; ++m)
        slabs.push_back(sample_field([](double x, double) { return x; }, g));
    // time-constant field: u_t = 0 and the space terms integrate to T = 1
    double pw = weighted_w21p_norm(slabs, st, w, 2.0);
    double ew = weighted_w2p_norm(slabs[0], w, 2.0);
    CHECK(pw == doctest::Approx(ew).epsilon(1e-12));
}

TEST_CASE("parabolic bmo modulus sees jumps across time") {
    auto g = build_grid(DomainPreset::interval, 32);
    SpaceTimeGrid st(g, 0.05, 20);
    std::vector<MatrixField> steady(21, MatrixField::identity(g));
    BallSampler sampler = BallSampler::dyadic(g, 16, 4);
    CHECK(bmo_vanishing_modulus(steady, st, 0.25, sampler) <= 1e-13);

    std::vector<MatrixField> flicker;
    for (int m = 0; m <= 20; ++m)
        flicker.push_back(MatrixField(g, Sym2{m % 2 == 0 ? 1.0 : 2.0, 0.0, 0.0}));
    CHECK(bmo_vanishing_modulus(flicker, st, 0.25, sampler) > 0.3);
}
