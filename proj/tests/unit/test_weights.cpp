#include <doctest.h>

#include <cmath>

#include "hardylab/grid.hpp"
#include "hardylab/weights.hpp"

using namespace hardylab;

namespace {

// ∫_{-r}^{r} |x|^{-1/2} dx with x = u²: 2 ∫_0^{√r} 2 du.
double power_half_ball(double r) { return 4.0 * std::sqrt(r); }

}  // namespace

TEST_CASE("measure_ball closed forms and quadrature agree") {
    CHECK(measure_ball(Weight::constant(1.0), {{0.0, 0.0}, 1.0}, 1) == doctest::Approx(2.0));
    for (double r : {0.25, 1.0, 4.0}) {
        const double v = measure_ball(Weight::power(-0.5), {{0.0, 0.0}, r}, 1);
        CHECK(v == doctest::Approx(power_half_ball(r)).epsilon(1e-12));
        const GridSpec g = GridSpec::covering(1, {{0.0, 0.0}, r}, 1.0 / 256);
        CHECK(measure_ball(Weight::power(-0.5), {{0.0, 0.0}, r}, g) == doctest::Approx(v).epsilon(1e-3));
    }
    // shifted centre: quadrature against a direct substitution
    const Ball b{{0.5, 0.0}, 1.0};
    const double exact = 2.0 * std::sqrt(1.5) + 2.0 * std::sqrt(0.5);
    CHECK(measure_ball(Weight::power(-0.5), b, 1) == doctest::Approx(exact).epsilon(1e-6));
}

TEST_CASE("measure_ball is additive over annuli") {
    const Weight w = Weight::power(-0.5);
    const Point c{0.3, 0.0};
    double sum = measure_ball(w, {c, 0.1}, 1);
    for (int k = 1; k <= 6; ++k)
        sum += measure_ball(w, {c, 0.1 * std::ldexp(1.0, k)}, 1) - measure_ball(w, {c, 0.1 * std::ldexp(1.0, k - 1)}, 1);
    CHECK(sum == doctest::Approx(measure_ball(w, {c, 6.4}, 1)).epsilon(1e-6));
}

TEST_CASE("A1 and Aq constants") {
    const BallFamily fam = BallFamily::standard(1, -2.0, 2.0, 0.05, 2.0, 12, 9, 40, 7);
    CHECK(std::fabs(estimate_a1_constant(Weight::constant(1.0), fam, 1) - 1.0) < 1e-9);
    CHECK(std::fabs(estimate_a1_constant(Weight::constant(5.0), fam, 1) - 1.0) < 1e-9);
    CHECK(std::fabs(estimate_aq_constant(Weight::constant(1.0), 2.0, fam, 1) - 1.0) < 1e-9);
    CHECK(std::fabs(estimate_aq_constant(Weight::constant(3.0), 4.0, fam, 1) - 1.0) < 1e-9);

    const Weight w = Weight::power(-0.5);
    const double a1 = estimate_a1_constant(w, fam, 1);
    CHECK(std::isfinite(a1));
    CHECK(a1 >= 1.0);
    // scale invariance
    CHECK(estimate_a1_constant(w.scaled(7.0), fam, 1) == doctest::Approx(a1).epsilon(1e-9));
    // sup over a larger family is monotone
    BallFamily bigger = fam;
    bigger.add({{0.0, 0.0}, 0.01});
    CHECK(estimate_a1_constant(w, bigger, 1) >= a1);
    // A_q constants decrease in q
    const double a2 = estimate_aq_constant(w, 2.0, fam, 1), a3 = estimate_aq_constant(w, 3.0, fam, 1);
    CHECK(std::isfinite(a2));
    CHECK(a2 >= a3 - 1e-12);
    CHECK(a3 >= 1.0 - 1e-9);
}

TEST_CASE("A1 ratio refuses vanishing weights") {
    CHECK_THROWS_AS(a1_ratio(Weight::power(0.5), {{0.0, 0.0}, 1.0}, 1), Error);
}

TEST_CASE("critical index") {
    const BallFamily fam = BallFamily::standard(1, -2.0, 2.0, 0.05, 2.0, 8, 9, 20, 3, {{0.0, 0.0}});
    const auto c1 = critical_index_estimate(Weight::constant(1.0), fam, 1);
    CHECK(c1.lo <= 1.0);
    CHECK(c1.hi >= 1.0);
    const auto c2 = critical_index_estimate(Weight::power(-0.5), fam, 1);
    CHECK(c2.lo <= 1.0);
    CHECK(c2.hi >= 1.0);
    const auto c3 = critical_index_estimate(Weight::power(0.5), fam, 1);
    CHECK(c3.lo <= 1.5 + 1e-12);
    CHECK(c3.hi >= 1.5 - 1e-12);
    CHECK(c3.hi - c3.lo <= 0.05 + 1e-12);
}

TEST_CASE("doubling profile") {
    const auto flat = doubling_profile(Weight::constant(1.0), {{0.3, 0.0}, 0.7}, 1, 6, 1.0);
    for (const auto& s : flat) {
        CHECK(s.ratio == doctest::Approx(std::ldexp(1.0, s.k)));
        CHECK(s.exponent == doctest::Approx(1.0));
        CHECK(s.upper_holds);
    }
    const auto origin = doubling_profile(Weight::power(-0.5), {{0.0, 0.0}, 1.0}, 1, 3, 2.0);
    CHECK(origin[0].k == 1);
    CHECK(origin[0].ratio == doctest::Approx(std::sqrt(2.0)).epsilon(1e-9));
    CHECK(origin[0].exponent == doctest::Approx(0.5).epsilon(1e-9));
    CHECK_FALSE(origin[0].lower_holds);  // logged, never asserted
    const auto far = doubling_profile(Weight::power(-0.5), {{10.0, 0.0}, 1.0}, 1, 1, 2.0);
    CHECK(far[0].ratio >= 1.9);
    CHECK(far[0].ratio <= 2.1);
}

TEST_CASE("doubling upper bound on seeded A1 balls") {
    const Weight w = Weight::power(-0.5);
    const BallFamily fam = BallFamily::standard(1, -2.0, 2.0, 0.01, 2.0, 10, 9, 60, 11, {{0.0, 0.0}});
    const double a1 = estimate_a1_constant(w, fam, 1);
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const Ball b{{rng.uniform(-2.0, 2.0), 0.0}, rng.log_uniform(0.01, 2.0)};
        for (const auto& s : doubling_profile(w, b, 1, 6, a1)) CHECK(s.upper_holds);
    }
}

TEST_CASE("averaged bound") {
    const GridSpec g = GridSpec::make(1, {-2.0, 0.0}, {2.0, 0.0}, 1.0 / 256);
    const Ball b{{0.0, 0.0}, 1.0};
    const auto one = GridFunction::sample(g, [](const Point&) { return 1.0; });
    const auto r1 = avg_bound_check(Weight::power(-0.5), one, b, 1.0, 1.0);
    CHECK(r1.lhs == doctest::Approx(1.0));
    CHECK(r1.slack >= -1e-12);
    const auto half = GridFunction::sample(g, [](const Point& x) { return x[0] > 0 && x[0] < 1 ? 1.0 : 0.0; });
    const auto r2 = avg_bound_check(Weight::constant(1.0), half, b, 2.0, 1.0);
    CHECK(r2.lhs == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(r2.rhs == doctest::Approx(std::sqrt(0.5)).epsilon(1e-3));
    CHECK(r2.slack > 0);
    const auto r3 = avg_bound_check(Weight::constant(1.0), GridFunction(g), b, 2.0, 1.0);
    CHECK(r3.lhs == 0.0);
    CHECK(r3.rhs == 0.0);
}
