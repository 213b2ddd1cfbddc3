#include <doctest.h>

#include <cmath>

#include "hardylab/atoms.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/mollifier.hpp"
#include "hardylab/weights.hpp"

using namespace hardylab;

namespace {

AtomCandidate step_candidate(double r, double h, double scale = 1.0) {
    const Ball B{{0.0, 0.0}, r};
    const GridSpec g = GridSpec::covering(1, B, h);
    auto f = GridFunction::sample(g, [&](const Point& x) {
        if (x[0] > 0 && x[0] < r) return scale / (2 * r);
        if (x[0] < 0 && x[0] > -r) return -scale / (2 * r);
        return 0.0;
    });
    return {f, B, HardyParams::make(1, 1.0, 2.0, 1.0, std::nullopt, 1.0, 1.0, 0), Weight::constant(1.0), 0, "atom"};
}

const ConditionRecord& rec(const ValidationReport& r, Condition c) {
    const ConditionRecord* p = r.find(c);
    REQUIRE(p != nullptr);
    return *p;
}

}  // namespace

TEST_CASE("params: derived values and invariants") {
    const HardyParams a = HardyParams::make(1, 1.0, 2.0);
    CHECK(a.gamma_p == 0.0);
    CHECK(a.s == 0);
    CHECK(a.beta == doctest::Approx(a.eta + 1.0));
    CHECK(a.lambda > a.lambda_floor());
    CHECK_THROWS_AS(HardyParams::make(1, 1.0, 2.0, 1.0, 0.5), Error);  // λ below n(q/p − 1)
    CHECK_THROWS_AS(HardyParams::make(1, 1.5, 2.0), Error);
    const HardyParams b = HardyParams::make(1, 2.0 / 3.0, 2.0);
    CHECK(b.gamma_p == doctest::Approx(0.5));
    CHECK(b.s == 0);
    CHECK_FALSE(b.two_branch());
    CHECK(b.cz_admissible());
    // branch selection is a function of (n, p)
    const double ps[] = {1.0, 2.0 / 3.0, 0.5, 1.0 / 3.0};
    const bool integer[] = {true, false, true, true};
    const int ss[] = {0, 0, 1, 2};
    for (int i = 0; i < 4; ++i) {
        const HardyParams h = HardyParams::make(1, ps[i], 2.0);
        CHECK(h.two_branch() == integer[i]);
        CHECK(h.s == ss[i]);
    }
    const auto w = a.lambda_window();
    CHECK(w.first == doctest::Approx(1.0));
    CHECK(w.second == doctest::Approx(3.0));
}

TEST_CASE("validate_atom on the step atom") {
    const auto c = step_candidate(0.5, 1.0 / 256);
    const auto r = validate_atom(c);
    CHECK(r.all_pass());
    const auto& a2 = rec(r, Condition::A2);
    CHECK(a2.measured == doctest::Approx(1.0).epsilon(1e-12));  // (2r)^{-1/2}
    CHECK(a2.budget == doctest::Approx(1.0).epsilon(1e-12));

    auto zero = c;
    zero.f = GridFunction(c.f.spec);
    CHECK(validate_atom(zero).all_pass());

    const auto big = validate_atom(step_candidate(0.5, 1.0 / 256, 10.0));
    CHECK_FALSE(big.all_pass());
    CHECK(rec(big, Condition::A2).min_passing_constant == doctest::Approx(10.0).epsilon(1e-9));
}

TEST_CASE("validate_approx_atom budgets") {
    // p = 1, r = 0.5, η = 1: mean perturbation with ∫a = 0.5 (2r)^η against (|B|/ω(B))^β ω(B)^η = 1
    auto c = step_candidate(0.5, 1.0 / 256);
    for (std::size_t i = 0; i < c.f.values.size(); ++i)
        if (std::fabs(c.f.spec.node(i)[0]) < 0.5) c.f.values[i] += 0.5;
    const auto r = validate_approx_atom(c, 1.0);
    const auto& a3 = rec(r, Condition::A3p);
    CHECK(a3.measured == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(a3.budget == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a3.pass);
    CHECK(a3.note == "branch two");

    // p = 2/3: only α = 0, branch one, C (|B|/ω(B))^{3/2}
    const HardyParams p23 = HardyParams::make(1, 2.0 / 3.0, 2.0);
    const Ball B{{0.2, 0.0}, 0.3};
    const AtomCandidate a = make_approx_atom(GridSpec::covering(1, B, 1.0 / 256), B, p23, Weight::power(-0.5), 3, 0.4);
    const auto ra = validate_approx_atom(a, 1.0);
    int moments = 0;
    for (const auto& x : ra.records)
        if (x.id == Condition::A3p) {
            ++moments;
            const double wb = measure_ball(Weight::power(-0.5), B, 1);
            CHECK(x.budget == doctest::Approx(std::pow(0.6 / wb, 1.5)).epsilon(1e-9));
            CHECK(x.note == "branch one");
        }
    CHECK(moments == 1);
}

TEST_CASE("generators round-trip through their validators") {
    const Weight ws[] = {Weight::constant(1.0), Weight::power(-0.5)};
    const double ps[] = {1.0, 2.0 / 3.0, 0.5};
    Rng rng(99);
    int n = 0;
    for (int i = 0; i < 100; ++i) {
        const Weight& w = ws[i % 2];
        const HardyParams prm = HardyParams::make(1, ps[i % 3], 2.0);
        const Ball B{{rng.uniform(-1.0, 1.0), 0.0}, rng.log_uniform(0.05, 0.9)};
        const GridSpec g = GridSpec::covering(1, B, 1.0 / 256);
        const AtomCandidate a = make_atom(g, B, prm, w, derive_seed(99, i));
        const double fill = rng.uniform(0.2, 1.0);
        const AtomCandidate b = make_approx_atom(g, B, prm, w, derive_seed(99, i), fill);
        CHECK(validate_atom(a).all_pass());
        CHECK(validate_approx_atom(a, 1.0 + 1e-9).all_pass());
        CHECK(validate_approx_atom(b, 1.0).all_pass());
        if (b.moment_fill > 1e-6) {
            CHECK_FALSE(validate_atom(b).all_pass());
            ++n;
        }
    }
    CHECK(n > 50);
}

TEST_CASE("make_atom is deterministic and handles large balls") {
    const HardyParams prm = HardyParams::make(1, 1.0, 2.0);
    const Ball B{{0.0, 0.0}, 0.5};
    const GridSpec g = GridSpec::covering(1, B, 1.0 / 128);
    const auto a = make_atom(g, B, prm, Weight::constant(1.0), 7);
    const auto b = make_atom(g, B, prm, Weight::constant(1.0), 7);
    CHECK(a.f.values == b.f.values);
    CHECK(validate_atom(a).all_pass());
    const Ball L{{0.0, 0.0}, 2.0};
    const auto big = make_atom(GridSpec::covering(1, L, 1.0 / 64), L, prm, Weight::constant(1.0), 7);
    CHECK(validate_atom(big).all_pass());
    CHECK(std::fabs(moment(big.f, L.center, MultiIndex{})) > 1e-6);  // no subtraction for r ≥ 1
}

TEST_CASE("moment fill extremes") {
    const HardyParams prm = HardyParams::make(1, 1.0, 2.0);
    const Ball B{{0.0, 0.0}, 0.4};
    const GridSpec g = GridSpec::covering(1, B, 1.0 / 256);
    const auto zero = make_approx_atom(g, B, prm, Weight::constant(1.0), 5, 0.0);
    CHECK(validate_atom(zero).all_pass());
    const auto nine = make_approx_atom(g, B, prm, Weight::constant(1.0), 5, 0.9);
    CHECK(validate_approx_atom(nine, 1.0).all_pass());
    CHECK_FALSE(rec(validate_atom(nine), Condition::A3).pass);
    const auto full = make_approx_atom(g, B, prm, Weight::constant(1.0), 5, 1.0);
    const auto& r = rec(validate_approx_atom(full, 1.0), Condition::A3p);
    CHECK(full.moment_fill > 0.5);
    CHECK(r.measured / r.budget == doctest::Approx(full.moment_fill).epsilon(0.01));
}

TEST_CASE("budgets scale with the weight") {
    const HardyParams prm = HardyParams::make(1, 2.0 / 3.0, 2.0);
    const Ball B{{0.3, 0.0}, 0.4};
    const Weight w = Weight::power(-0.5);
    const double c = 3.0;
    CHECK(size_budget(w.scaled(c), B, prm) ==
          doctest::Approx(size_budget(w, B, prm) * std::pow(c, 1.0 / prm.q - 1.0 / prm.p)).epsilon(1e-9));
    CHECK(ball_control_budget(w.scaled(c), B, prm, 0) ==
          doctest::Approx(ball_control_budget(w, B, prm, 0) * std::pow(c, -1.0 / prm.p)).epsilon(1e-9));

    auto a = make_approx_atom(GridSpec::covering(1, B, 1.0 / 256), B, prm, w, 4, 0.7);
    const bool before = validate_approx_atom(a, 1.0).all_pass();
    a.weight = w.scaled(c);
    a.f *= std::pow(c, -1.0 / prm.p);
    CHECK(validate_approx_atom(a, 1.0).all_pass() == before);
}

TEST_CASE("large-r moment implication") {
    const HardyParams prm = HardyParams::make(1, 1.0, 2.0);
    const Ball B{{0.0, 0.0}, 2.0};
    const GridSpec g = GridSpec::covering(1, B, 1.0 / 64);
    auto step = GridFunction::sample(g, [](const Point& x) { return x[0] > 0 && x[0] < 2 ? 0.5 : 0.0; });
    AtomCandidate c{step, B, prm, Weight::constant(1.0), 0, "atom"};
    c.f *= 1.0 / weighted_lq_norm(c.f, c.weight, 2.0) * size_budget(c.weight, B, prm);
    CHECK(check_large_r_implication(c).holds());
    c.f = GridFunction(g);
    const auto z = check_large_r_implication(c);
    CHECK(z.holds());
    for (const auto& row : z.rows) CHECK(row.lhs == 0.0);

    const HardyParams p12 = HardyParams::make(1, 0.5, 2.0);
    const Weight w = Weight::shifted_power(-0.5, {5.0, 0.0});
    for (int i = 0; i < 50; ++i) {
        const Ball b{{3.0 + 0.05 * i, 0.0}, 1.5};
        const auto a = make_atom(GridSpec::covering(1, b, 1.0 / 64), b, p12, w, derive_seed(3, i));
        CHECK(check_large_r_implication(a).holds());
    }
    const Ball small{{0.0, 0.0}, 0.5};
    CHECK_THROWS_AS(check_large_r_implication(make_atom(GridSpec::covering(1, small, 1.0 / 64), small, prm,
                                                        Weight::constant(1.0), 1)),
                    Error);
}

TEST_CASE("molecules") {
    const HardyParams prm = HardyParams::make(1, 1.0, 2.0, 1.0, 3.0);
    const Ball B{{0.0, 0.0}, 0.5};
    const double h = 1.0 / 64;
    const GridSpec g = molecule_grid(1, B, 12, h, Mollifier::gaussian(1).radius() + 2 * h);

    const auto zero_tail = make_molecule(g, B, prm, Weight::constant(1.0), 3, 0.0);
    CHECK(validate_molecule(zero_tail, 1.0).all_pass());
    CHECK(validate_atom({crop(zero_tail.f, B), B, prm, zero_tail.weight, 3, "atom"}).all_pass());
    CHECK(rec(validate_molecule(zero_tail, 1.0), Condition::M2).measured == 0.0);

    const auto half = make_molecule(g, B, prm, Weight::constant(1.0), 3, 0.5);
    const auto again = make_molecule(g, B, prm, Weight::constant(1.0), 3, 0.5);
    CHECK(half.f.values == again.f.values);
    const auto rep = validate_molecule(half, 1.0);
    CHECK(rep.all_pass());
    CHECK(std::isfinite(rec(rep, Condition::M1).literal_measured));

    // the moment bound on a small family
    std::vector<std::vector<MomentBoundRow>> fam;
    for (double r : {0.1, 0.2, 0.4}) {
        const Ball b{{0.0, 0.0}, r};
        const auto m = make_molecule(molecule_grid(1, b, 12, h, Mollifier::gaussian(1).radius() + 2 * h), b, prm,
                                     Weight::constant(1.0), 11, 0.5);
        fam.push_back(molecule_moment_bound(m));
    }
    const double C = fit_moment_constant(fam);
    CHECK(std::isfinite(C));
    for (const auto& rows : fam)
        for (const auto& row : rows) CHECK(row.ratio <= C);

    // |x|^{-e} with e q < λ + n: the annular sums grow, so (M2) cannot hold
    const double e = (prm.lambda + prm.n) / prm.q - 0.2;
    GridFunction slow(g);
    for_each_node(g, Region::annulus(B.center, B.radius, std::ldexp(B.radius, 12)), [&](std::size_t i) {
        slow.values[i] = std::pow(B.radius / distance(g.node(i), B.center), e);
    });
    const auto m2 = rec(validate_molecule({slow, B, prm, Weight::constant(1.0), 0, "molecule"}, 1.0), Condition::M2);
    CHECK_FALSE(m2.pass);
    CHECK(std::isinf(m2.measured));
    MoleculeOptions opt;
    opt.tail_exponent = e;
    CHECK_THROWS_AS(make_molecule(g, B, prm, Weight::constant(1.0), 3, 0.5, opt), Error);
}
