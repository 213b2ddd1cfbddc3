#include <doctest.h>

#include <cmath>

#include "hardylab/decompose.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/mollifier.hpp"

using namespace hardylab;

namespace {

constexpr double kH = 1.0 / 64;

GridSpec mgrid(const Ball& B, int k_max = 12, double h = kH) {
    return molecule_grid(1, B, k_max, h, Mollifier::gaussian(1).radius() + 2 * h);
}

const HardyParams& p1() {
    static const HardyParams p = HardyParams::make(1, 1.0, 2.0, 1.0, 3.0);
    return p;
}

}  // namespace

TEST_CASE("dual polynomials on intervals and annuli") {
    const GridSpec g = GridSpec::make(1, {-4.0, 0.0}, {4.0, 0.0}, 1.0 / 512);
    const Point c{0.0, 0.0};
    const auto e0 = nodes_in(g, Region::ball({c, 1.0}));
    const DualBasis d0 = DualBasis::build(g, e0, c, 1.0, 0);
    CHECK(d0.dual(0)({0.3, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));
    const DualBasis d1 = DualBasis::build(g, e0, c, 1.0, 1);
    CHECK(d1.dual(0)({0.7, 0.0}) == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(d1.dual(1)({0.5, 0.0}) == doctest::Approx(1.5).epsilon(1e-4));  // 3x
    CHECK(d1.biorthogonality_residual() <= 1e-8);
    const auto e1 = nodes_in(g, Region::annulus(c, 1.0, 2.0));
    const DualBasis a0 = DualBasis::build(g, e1, c, 2.0, 0);
    CHECK(a0.dual(0)({1.5, 0.0}) == doctest::Approx(1.0).epsilon(1e-12));

    // uniform bound across k
    const GridSpec wide = GridSpec::make(1, {-70.0, 0.0}, {70.0, 0.0}, 1.0 / 64);
    const AnnularSystem sys = AnnularSystem::build(wide, {c, 0.5}, 7);
    double lo = kInf, hi = 0.0;
    for (const auto& d : dual_polynomials(sys, 2)) {
        CHECK(d.biorthogonality_residual() <= 1e-8);
        lo = std::min(lo, d.uniform_bound());
        hi = std::max(hi, d.uniform_bound());
    }
    CHECK(hi / lo < 3.0);
}

TEST_CASE("pbs projection") {
    const GridSpec g = GridSpec::make(1, {-2.0, 0.0}, {2.0, 0.0}, 1.0 / 1024);
    const Ball B{{0.0, 0.0}, 1.0};
    const auto x2 = GridFunction::sample(g, [](const Point& x) { return x[0] * x[0]; });
    const Polynomial P = pbs_projection(x2, B, 1);
    CHECK(P({0.0, 0.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    CHECK(P({0.8, 0.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
    const auto lin = GridFunction::sample(g, [](const Point& x) { return 2 - x[0]; });
    const Polynomial L = pbs_projection(lin, B, 1);
    CHECK(std::fabs(L({0.4, 0.0}) - 1.6) < 1e-8);
    const Polynomial M = pbs_projection(x2, B, 0);
    CHECK(M({0.9, 0.0}) == doctest::Approx(1.0 / 3.0).epsilon(1e-5));
}

TEST_CASE("annular system and moments") {
    const Ball B{{0.25, 0.0}, 0.5};
    const AnnularSystem sys = AnnularSystem::build(mgrid(B), B, 12);
    double total = 0.0;
    for (int k = 0; k < sys.count(); ++k) {
        CHECK(sys.measure[static_cast<std::size_t>(k)] ==
              doctest::Approx(sys.closed_measure[static_cast<std::size_t>(k)]).epsilon(1e-6));
        total += sys.measure[static_cast<std::size_t>(k)];
    }
    CHECK(total == doctest::Approx(ball_volume(1, std::ldexp(0.5, 12))).epsilon(1e-9));

    const auto ind = GridFunction::sample(sys.grid, [&](const Point& x) { return B.contains(x) ? 1.0 : 0.0; });
    const MomentTable m = annular_moments(ind, sys, 0);
    CHECK(m[0][0] == doctest::Approx(1.0).epsilon(1e-12));
    for (int k = 1; k < sys.count(); ++k) CHECK(m[static_cast<std::size_t>(k)][0] == 0.0);
    const TailMoments t = tail_and_total_moments(m, sys);
    for (const auto& row : t.N) CHECK(row[0] == 0.0);
    CHECK(t.nu[0] == doctest::Approx(integrate(ind).value).epsilon(1e-12));
}

TEST_CASE("molecule tails: telescoping and decay") {
    const Ball B{{0.0, 0.0}, 0.5};
    const AnnularSystem sys = AnnularSystem::build(mgrid(B), B, 12);
    const auto M = make_molecule(sys.grid, B, p1(), Weight::constant(1.0), 9, 0.5);
    const MomentTable m = annular_moments(M.f, sys, 1);
    const TailMoments t = tail_and_total_moments(m, sys);
    for (int k = 1; k < sys.count(); ++k)
        for (std::size_t a = 0; a < m[0].size(); ++a)
            CHECK(std::fabs(t.N[static_cast<std::size_t>(k - 1)][a] - t.N[static_cast<std::size_t>(k)][a] -
                            sys.measure[static_cast<std::size_t>(k)] * m[static_cast<std::size_t>(k)][a]) <=
                  1e-12 * (std::fabs(t.nu[a]) + 1e-300) + 1e-15);
    double sum0 = 0.0;
    for (int k = 0; k < sys.count(); ++k)
        sum0 += sys.measure[static_cast<std::size_t>(k)] * m[static_cast<std::size_t>(k)][0];
    CHECK(sum0 == doctest::Approx(integrate(M.f, Region::ball(sys.ball(12))).value).epsilon(1e-9));

    // the tail (r/|x|)^{λ+n+1} gives consecutive annular averages in ratio 2^{-(λ+n+1)}
    const double expect = std::pow(2.0, -(p1().lambda + 2.0));
    for (int k = 3; k <= 8; ++k) {
        const double ratio = m[static_cast<std::size_t>(k + 1)][0] / m[static_cast<std::size_t>(k)][0];
        CHECK(std::fabs(ratio / expect - 1.0) <= 0.1);
    }
    // |N_0^k| decays at least as fast as 2^{k(n(1−1/q) − λ/q)}
    const double bound = std::pow(2.0, 1.0 * (1 - 1 / p1().q) - p1().lambda / p1().q);
    for (int k = 2; k <= 8; ++k) {
        const double r = std::fabs(t.N[static_cast<std::size_t>(k + 1)][0] / t.N[static_cast<std::size_t>(k)][0]);
        CHECK(r <= bound);
    }
}

TEST_CASE("decomposition of a molecule") {
    const Ball B{{0.0, 0.0}, 0.5};
    const AnnularSystem sys = AnnularSystem::build(mgrid(B), B, 12);
    const auto M = make_molecule(sys.grid, B, p1(), Weight::constant(1.0), 9, 0.5);
    REQUIRE(validate_molecule(M, 1.0).all_pass());
    const Decomposition d = decompose_molecule(M, sys, 1.0);
    CHECK(d.a.size() == 13);
    CHECK(d.b.size() == 12);
    CHECK(reconstruct(d).relative_error <= 1e-3);
    CHECK(d.max_biorthogonality <= 1e-8);
    CHECK(d.telescoping_error <= 1e-8);
    CHECK(std::fabs(d.sum_t_p - d.closed_t_p) <= 0.05 * d.closed_t_p);
    for (int k = 0; k <= 12; ++k) CHECK(validate_atom(atom_candidate(d, k)).all_pass());
    for (int k = 0; k < 12; ++k) CHECK(validate_atom(b_candidate(d, k)).all_pass());
    CHECK(validate_approx_atom(residual_candidate(d), 1.0).all_pass());
    CHECK_THROWS_AS(atom_candidate(d, 13), Error);
    CHECK_THROWS_AS(b_candidate(d, 12), Error);

    // log2 t_k has slope −λ/q
    std::vector<double> ks, lt;
    for (int k = 2; k <= 10; ++k) {
        ks.push_back(k);
        lt.push_back(std::log2(d.t[static_cast<std::size_t>(k)]));
    }
    CHECK(std::fabs(regression_slope(ks, lt) + p1().lambda / p1().q) <= 0.1);

    // linearity in M
    auto M3 = M;
    M3.f *= -3.0;
    const Decomposition d3 = decompose_molecule(M3.f, p1(), M.weight, sys);
    for (std::size_t k = 0; k < d.t.size(); ++k) CHECK(d3.t[k] == doctest::Approx(3.0 * d.t[k]).epsilon(1e-9));
    for (std::size_t i = 0; i < d.a[2].values.size(); ++i)
        CHECK(std::fabs(d3.a[2].values[i] + d.a[2].values[i]) <= 1e-9 * (std::fabs(d.a[2].values[i]) + 1e-12));

    // molecule refused when it fails (M1)
    auto big = M;
    big.f *= 10.0;
    CHECK_THROWS_AS(decompose_molecule(big, sys, 1.0), Error);
}

TEST_CASE("degenerate inputs") {
    const Ball B{{0.0, 0.0}, 0.5};
    const AnnularSystem sys = AnnularSystem::build(mgrid(B), B, 12);
    MoleculeOptions classical;
    classical.moment_fill = 0.0;
    const auto A = make_molecule(sys.grid, B, p1(), Weight::constant(1.0), 4, 0.0, classical);
    const Decomposition d = decompose_molecule(A.f, p1(), A.weight, sys);
    CHECK(reconstruct(d).relative_error <= 1e-8);
    for (std::size_t k = 1; k < d.a.size(); ++k) CHECK(d.a[k].is_zero());
    CHECK(std::fabs(d.tails.nu[0]) <= 1e-10);

    const Decomposition z = decompose_molecule(GridFunction(sys.grid), p1(), A.weight, sys);
    CHECK(z.empty());
    CHECK(reconstruct(z).f.is_zero());
}

TEST_CASE("reconstruction error shrinks with h") {
    const Ball B{{0.0, 0.0}, 0.5};
    double prev = 0.0;
    for (double h : {1.0 / 32, 1.0 / 64}) {
        const AnnularSystem sys = AnnularSystem::build(mgrid(B, 12, h), B, 12);
        const auto M = make_molecule(sys.grid, B, p1(), Weight::constant(1.0), 9, 0.5);
        const double e = reconstruct(decompose_molecule(M.f, p1(), M.weight, sys)).relative_error;
        CHECK(e <= 1e-3);
        if (prev > 1e-12) CHECK(e <= prev * 1.3);
        prev = e;
    }
}
