#include "hardylab/czop.hpp"

#include <Eigen/Dense>
#include <algorithm>

#include "hardylab/weights.hpp"

namespace hardylab {

KernelSpec KernelSpec::zero(int dim) {
    KernelSpec k;
    k.family = Family::zero;
    k.dim = dim;
    return k;
}

KernelSpec KernelSpec::odd_min(int dim, double mu, double delta) {
    KernelSpec k;
    k.family = Family::odd_min;
    k.dim = dim;
    k.mu = mu;
    k.delta = delta;
    return k;
}

KernelSpec KernelSpec::smoothed_odd_min(int dim, double mu, double epsilon) {
    KernelSpec k = odd_min(dim, mu);
    k.family = Family::smoothed_odd_min;
    k.epsilon = epsilon;
    return k;
}

KernelSpec KernelSpec::gaussian_identity(int dim, double epsilon) {
    KernelSpec k;
    k.family = Family::gaussian_identity;
    k.dim = dim;
    k.epsilon = epsilon;
    return k;
}

KernelSpec KernelSpec::pure_inverse(int dim) {
    KernelSpec k;
    k.family = Family::pure_inverse;
    k.dim = dim;
    return k;
}

KernelSpec KernelSpec::from_name(const std::string& name, int dim, double mu, double delta, double epsilon) {
    if (name == "zero") return zero(dim);
    if (name == "odd_min") return odd_min(dim, mu, delta);
    if (name == "smoothed_odd_min") return smoothed_odd_min(dim, mu, epsilon);
    if (name == "gaussian_identity") return gaussian_identity(dim, epsilon);
    if (name == "pure_inverse") return pure_inverse(dim);
    throw Error(ErrorCode::invalid_argument, "unknown kernel family: " + name);
}

std::string KernelSpec::name() const {
    switch (family) {
        case Family::zero: return "zero";
        case Family::odd_min: return "odd_min";
        case Family::smoothed_odd_min: return "smoothed_odd_min";
        case Family::gaussian_identity: return "gaussian_identity";
        case Family::pure_inverse: return "pure_inverse";
    }
    return "?";
}

double KernelSpec::operator()(const Point& x, const Point& y) const {
    const double d = distance(x, y);
    if (family == Family::zero) return 0.0;
    if (family == Family::gaussian_identity) {
        const double e2 = epsilon * epsilon;
        return std::pow(2.0 * kPi * e2, -0.5 * dim) * std::exp(-0.5 * d * d / e2);
    }
    if (d == 0.0) return 0.0;
    if (family == Family::pure_inverse) return std::pow(d, -dim);
    const double odd = dim == 1 ? (x[0] > y[0] ? 1.0 : -1.0) : (x[0] - y[0]) / d;
    const double mag = d < 1.0 ? std::pow(d, -dim) : std::pow(d, -dim - mu);
    if (family == Family::odd_min) return odd * mag;
    return odd * mag * (1.0 - std::exp(-d * d / (epsilon * epsilon)));
}

namespace {

Point random_direction(int dim, Rng& rng) {
    if (dim == 1) return {rng.sign() * 1.0, 0.0};
    const double th = rng.uniform(0.0, 2.0 * kPi);
    return {std::cos(th), std::sin(th)};
}

}  // namespace

SampleCloud SampleCloud::make(int dim, int count, std::uint64_t seed, double d_min, double d_max) {
    SampleCloud c;
    Rng rng(seed);
    for (int i = 0; i < count; ++i) {
        const Point x{rng.uniform(-2.0, 2.0), dim == 2 ? rng.uniform(-2.0, 2.0) : 0.0};
        const double d = rng.log_uniform(d_min, d_max);
        const Point e = random_direction(dim, rng);
        c.pairs.push_back({x, {x[0] + d * e[0], x[1] + d * e[1]}});

        // z, then x at distance d, y at ρd with ρ ≤ 1/2 (the edge case ρ = 1/2 every 8th sample)
        const Point z{rng.uniform(-2.0, 2.0), dim == 2 ? rng.uniform(-2.0, 2.0) : 0.0};
        const Point ex = random_direction(dim, rng);
        const Point ey = random_direction(dim, rng);
        const double rho = i % 8 == 0 ? 0.5 : rng.log_uniform(1e-3, 0.5);
        const Point xx{z[0] + d * ex[0], z[1] + d * ex[1]};
        const Point yy{z[0] + rho * d * ey[0], z[1] + rho * d * ey[1]};
        c.triples.push_back({xx, yy, z});
    }
    // extremal sweep at ρ = 1/2 over directions, so the sup is not left to chance
    const int n_ang = dim == 1 ? 2 : 16;
    constexpr int n_d = 64;
    for (int id = 0; id < n_d; ++id) {
        const double d = d_min * std::pow(d_max / d_min, (id + 0.5) / n_d);
        for (int ia = 0; ia < n_ang; ++ia)
            for (int ib = 0; ib < 2 * n_ang; ++ib) {
                const double ta = kPi * ia / n_ang, tb = kPi * ib / n_ang;
                const Point ex = dim == 1 ? Point{ia == 0 ? 1.0 : -1.0, 0.0} : Point{std::cos(ta), std::sin(ta)};
                const Point ey = dim == 1 ? Point{ib % 2 == 0 ? 1.0 : -1.0, 0.0} : Point{std::cos(tb), std::sin(tb)};
                const Point z{0.0, 0.0};
                c.triples.push_back({Point{d * ex[0], d * ex[1]}, Point{0.5 * d * ey[0], 0.5 * d * ey[1]}, z});
            }
    }
    return c;
}

double size_constant(const KernelSpec& k, const SampleCloud& cloud) {
    double c = 0.0;
    for (const auto& [x, y] : cloud.pairs) {
        const double d = distance(x, y);
        const double env = std::min(std::pow(d, -k.dim), std::pow(d, -k.dim - k.mu));
        c = std::max(c, std::fabs(k(x, y)) / env);
    }
    return c;
}

double smoothness_constant(const KernelSpec& k, const SampleCloud& cloud) {
    double c = 0.0;
    for (const auto& [x, y, z] : cloud.triples) {
        const double dyz = distance(y, z), dxz = distance(x, z);
        const double env = std::pow(dyz, k.delta) / std::pow(dxz, k.dim + k.delta);
        const double diff = std::fabs(k(x, y) - k(x, z)) + std::fabs(k(y, x) - k(z, x));
        c = std::max(c, diff / env);
    }
    return c;
}

KernelValidation validate_kernel(const KernelSpec& k, int count, std::uint64_t seed, double d_min, double d_max) {
    KernelValidation v;
    v.kernel = k;
    const SampleCloud base = SampleCloud::make(k.dim, count, seed, d_min, d_max);
    const SampleCloud big = SampleCloud::make(k.dim, 2 * count, derive_seed(seed, 1), d_min / 2, d_max * 2);
    v.C_size = size_constant(k, base);
    v.C_sm = smoothness_constant(k, base);
    v.C_size_enlarged = std::max(v.C_size, size_constant(k, big));
    v.C_sm_enlarged = std::max(v.C_sm, smoothness_constant(k, big));
    auto steady = [](double a, double b) { return a == b || (a > 0 && b <= 1.1 * a); };
    v.stable = steady(v.C_size, v.C_size_enlarged) && steady(v.C_sm, v.C_sm_enlarged);
    v.pass = std::isfinite(v.C_size_enlarged) && std::isfinite(v.C_sm_enlarged) && v.stable;
    return v;
}

namespace {

void require_valid(const KernelValidation& k) {
    if (!k.pass) throw Error(ErrorCode::unvalidated_kernel, "kernel " + k.kernel.name() + " did not pass validation");
}

// ∫ K(x, x+u) u₁ du over the excised cells, for the odd kernels (0 otherwise).
// The u₂ component vanishes by symmetry.
double band_moment(const KernelSpec& K, double h) {
    if (K.family != KernelSpec::Family::odd_min) return 0.0;
    const double eps = K.excision * h;
    const long m = static_cast<long>(std::floor(K.excision + 1e-12));
    if (K.dim == 1) return -static_cast<double>(2 * m + 1) * h;  // K·u ≡ −1 near the diagonal
    // 2D: −∫ u₁²/|u|³ over the excised cells; the centre cell is done in closed form.
    constexpr int sub = 64;
    double acc = -2.0 * h * std::log(1.0 + std::sqrt(2.0));
    for (long i = -m; i <= m; ++i)
        for (long j = -m; j <= m; ++j) {
            if ((i == 0 && j == 0) || std::hypot(double(i), double(j)) * h > eps) continue;
            for (int a = 0; a < sub; ++a)
                for (int b = 0; b < sub; ++b) {
                    const double u1 = (i - 0.5 + (a + 0.5) / sub) * h, u2 = (j - 0.5 + (b + 0.5) / sub) * h;
                    const double d = std::hypot(u1, u2);
                    acc -= u1 * u1 / (d * d * d) * (h * h) / (sub * sub);
                }
        }
    return acc;
}

// Centered x₁-difference of f at an arbitrary aligned node, zero outside f's grid.
struct Gradient {
    const GridFunction& f;
    double at(const Point& x) const {
        const GridSpec& s = f.spec;
        const double fx = (x[0] - s.lo[0]) / s.h - 0.5;
        const double fy = s.dim == 2 ? (x[1] - s.lo[1]) / s.h - 0.5 : 0.0;
        const long ix = std::lround(fx), iy = std::lround(fy);
        if (std::fabs(fx - ix) > 1e-6 || std::fabs(fy - iy) > 1e-6)
            throw Error(ErrorCode::invalid_argument, "output grid must be aligned with the input grid");
        auto val = [&](long jx) {
            if (jx < 0 || jx >= static_cast<long>(s.count[0]) || iy < 0 || iy >= static_cast<long>(s.count[1]))
                return 0.0;
            return f.values[s.index(static_cast<std::size_t>(jx), static_cast<std::size_t>(iy))];
        };
        return (val(ix + 1) - val(ix - 1)) / (2.0 * s.h);
    }
};

double max_second_difference(const GridFunction& f) {
    const GridSpec& s = f.spec;
    double D = 0.0;
    auto at = [&](long ix, long iy) {
        if (ix < 0 || iy < 0 || ix >= static_cast<long>(s.count[0]) || iy >= static_cast<long>(s.count[1])) return 0.0;
        return f.values[s.index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy))];
    };
    for (long iy = 0; iy < static_cast<long>(s.count[1]); ++iy)
        for (long ix = 0; ix < static_cast<long>(s.count[0]); ++ix) {
            const double v = 2.0 * at(ix, iy);
            D = std::max(D, std::fabs(at(ix + 1, iy) - v + at(ix - 1, iy)));
            if (s.dim == 2) D = std::max(D, std::fabs(at(ix, iy + 1) - v + at(ix, iy - 1)));
        }
    return D / (s.h * s.h);
}

ApplyResult apply_impl(const KernelValidation& kv, const GridFunction& f, std::optional<GridSpec> out, bool adjoint) {
    require_valid(kv);
    const KernelSpec& K = kv.kernel;
    const GridSpec gout = out ? *out : f.spec;
    if (gout.dim != f.spec.dim || K.dim != f.spec.dim) throw Error(ErrorCode::invalid_argument, "dimension mismatch");
    ApplyResult res;
    res.Tf = GridFunction(gout);
    std::vector<std::size_t> src;
    for (std::size_t j = 0; j < f.values.size(); ++j)
        if (f.values[j] != 0.0) src.push_back(j);
    if (src.empty() || K.family == KernelSpec::Family::zero) return res;
    std::vector<Point> ys(src.size());
    std::vector<double> fy(src.size());
    const double hv = f.spec.cell_volume();
    for (std::size_t j = 0; j < src.size(); ++j) {
        ys[j] = f.spec.node(src[j]);
        fy[j] = f.values[src[j]] * hv;
    }
    const double band = K.excises() ? K.excision * f.spec.h : -1.0;
    // first-order part of the excised band, added back: ∂₁f(x) ∫_band K(x, x+u) u₁ du
    // (K(x+u, x) = −K(x, x+u) flips the sign for the adjoint)
    const double m1 = (adjoint ? -1.0 : 1.0) * band_moment(K, f.spec.h);
    if (m1 != 0.0 && gout.h != f.spec.h) throw Error(ErrorCode::invalid_argument, "output grid must share h");
    const Gradient grad{f};
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(gout.size()); ++i) {
        const Point x = gout.node(static_cast<std::size_t>(i));
        double acc = 0.0;
        for (std::size_t j = 0; j < src.size(); ++j) {
            if (distance(x, ys[j]) <= band) continue;
            acc += (adjoint ? K(ys[j], x) : K(x, ys[j])) * fy[j];
        }
        if (m1 != 0.0) acc += m1 * grad.at(x);
        res.Tf.values[static_cast<std::size_t>(i)] = acc;
    }
    if (K.excises()) {
        const double eps = K.excision * f.spec.h;
        const double moment2 = f.spec.dim == 1 ? eps * eps : 4.0 * eps * eps;
        res.excision_bound = 0.5 * max_second_difference(f) * std::max(1.0, kv.C_size) * moment2;
    }
    return res;
}

}  // namespace

ApplyResult apply_operator(const KernelValidation& k, const GridFunction& f, std::optional<GridSpec> out) {
    return apply_impl(k, f, out, false);
}

ApplyResult apply_adjoint(const KernelValidation& k, const GridFunction& g, std::optional<GridSpec> out) {
    return apply_impl(k, g, out, true);
}

double l2_norm_estimate(const KernelValidation& kv, const GridSpec& grid, int probe_count, std::uint64_t seed,
                        int iterations) {
    require_valid(kv);
    const KernelSpec& K = kv.kernel;
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
    if (K.family == KernelSpec::Family::zero) return 0.0;
    const double hv = grid.cell_volume();
    const double band = K.excises() ? K.excision * grid.h : -1.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) {
            const Point x = grid.node(static_cast<std::size_t>(i)), y = grid.node(static_cast<std::size_t>(j));
            if (distance(x, y) <= band) continue;
            A(i, j) = K(x, y) * hv;
        }
    const double m1 = band_moment(K, grid.h);
    if (m1 != 0.0) {
        const auto nx = static_cast<Eigen::Index>(grid.count[0]);
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index ix = i % nx;
            if (ix + 1 < nx) A(i, i + 1) += m1 / (2.0 * grid.h);
            if (ix > 0) A(i, i - 1) -= m1 / (2.0 * grid.h);
        }
    }
    Rng rng(seed);
    double best = 0.0;
    for (int p = 0; p < probe_count; ++p) {
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = rng.uniform(-1.0, 1.0);
        double est = 0.0;
        for (int it = 0; it < iterations; ++it) {
            const double nv = v.norm();
            if (nv == 0.0) break;
            v /= nv;
            const Eigen::VectorXd Av = A * v;
            est = Av.norm();
            v = A.transpose() * Av;
        }
        best = std::max(best, est);
    }
    return best;
}

AdjointProjectionResult adjoint_projection_check(const KernelValidation& kv, const Ball& b, const MultiIndex& alpha, const HardyParams& prm,
                      const Weight& w, double C_budget, double h, double tol, int max_doublings) {
    require_valid(kv);
    const KernelSpec& K = kv.kernel;
    const int n = prm.n;
    const double q = prm.q;
    AdjointProjectionResult res;
    const double wb = measure_ball(w, b, n);
    const double vb = ball_volume(n, b.radius);
    const double inv_q = std::isinf(q) ? 0.0 : 1.0 / q;
    if (prm.two_branch() && alpha.order() == prm.s) {
        res.branch = "branch two";
        res.budget_unit = std::pow(vb, prm.eta + 1.0 / prm.p) * std::pow(wb, -inv_q);
        res.omega_normalized_unit = std::pow(wb, prm.eta + 1.0 / prm.p - inv_q);
    } else {
        res.branch = "branch one";
        res.budget_unit = std::pow(wb, -inv_q) * std::pow(vb, 1.0 / prm.p);
        res.omega_normalized_unit = std::pow(wb, 1.0 / prm.p - inv_q);
    }
    res.budget = C_budget * res.budget_unit;

    auto lhs_at = [&](double W) {
        const GridSpec g = GridSpec::covering(n, {b.center, W}, h);
        const auto inside = nodes_in(g, Region::ball(b));
        const double band = K.excises() ? K.excision * h : -1.0;
        const double m1 = band_moment(K, h);
        GridFunction f(g);
        const double hv = g.cell_volume();
        std::vector<std::size_t> window = nodes_in(g, Region::ball({b.center, W}));
        for (std::size_t yi : inside) {
            const Point y = g.node(yi);
            double acc = 0.0;
            for (std::size_t xi : window) {
                const Point x = g.node(xi);
                if (distance(x, y) <= band) continue;
                acc += monomial(x, b.center, alpha) * K(x, y) * hv;
            }
            if (m1 != 0.0 && alpha.e[0] > 0) {
                MultiIndex lower = alpha;
                lower.e[0] -= 1;
                acc -= m1 * alpha.e[0] * monomial(y, b.center, lower);
            }
            f.values[yi] = acc;
        }
        const Polynomial P = pbs_projection(f, b, prm.s);
        // (∫_B |f − P|^{q'} ω^{-q'/q})^{1/q'}
        double s = 0.0;
        if (q == 1.0) {
            for (std::size_t yi : inside) s = std::max(s, std::fabs(f.values[yi] - P(g.node(yi))) / w(g.node(yi)));
            return s;
        }
        const double qp = std::isinf(q) ? 1.0 : q / (q - 1.0);
        const double gamma = std::isinf(q) ? 0.0 : -qp / q;
        for (std::size_t yi : inside)
            s += std::pow(std::fabs(f.values[yi] - P(g.node(yi))), qp) * cell_mass(g, w, yi, gamma);
        return std::pow(s, 1.0 / qp);
    };

    double W = std::max(4.0 * b.radius, 4.0);
    double prev = lhs_at(W);
    for (int d = 0; d <= max_doublings; ++d) {
        const double next = lhs_at(2.0 * W);
        const double change = std::fabs(next - prev);
        if (change <= tol * std::max(res.budget_unit, next)) {
            res.lhs = next;
            res.window = 2.0 * W;
            res.exterior_bound = change;
            res.pass = res.lhs <= res.budget * (1 + kBudgetTolerance);
            res.min_passing_constant = res.budget_unit > 0 ? res.lhs / res.budget_unit : kInf;
            return res;
        }
        prev = next;
        W *= 2.0;
    }
    throw Error(ErrorCode::window_too_small, "adjoint moment did not settle within the window doublings");
}

MoleculeReport atom_image_report(const KernelValidation& kv, const AtomCandidate& a, const ImageOptions& opt) {
    require_valid(kv);
    const HardyParams& prm = a.params;
    MoleculeReport rep;
    rep.lambda_window = prm.lambda_window();
    if (!prm.cz_admissible())
        throw Error(ErrorCode::inadmissible_parameters, "min{mu, delta} must exceed gamma_p");
    if (!(prm.lambda > rep.lambda_window.first && prm.lambda < rep.lambda_window.second))
        throw Error(ErrorCode::inadmissible_parameters,
                    "lambda outside the admissible window (" + std::to_string(rep.lambda_window.first) + ", " +
                        std::to_string(rep.lambda_window.second) + ")");
    const auto pre = validate_atom(a);
    if (!pre.all_pass()) throw Error(ErrorCode::invalid_argument, "input is not an atom");

    rep.molecule_ball = a.ball.dilated(2.0);
    const double W = std::ldexp(rep.molecule_ball.radius, opt.k_max) + 2.0 * a.f.spec.h;
    const GridSpec window = GridSpec::covering(prm.n, {a.ball.center, W}, a.f.spec.h);
    auto applied = apply_operator(kv, a.f, window);
    rep.image = std::move(applied.Tf);
    rep.excision_bound = applied.excision_bound;
    AtomCandidate m{rep.image, rep.molecule_ball, prm, a.weight, a.seed, "image", 0.0, 0.0, 0.0};
    rep.report = validate_molecule(m, opt.C_budget, {opt.k_max, opt.size_constant});
    for (const auto& al : multi_indices(prm.n, prm.s))
        rep.moments.push_back({al, moment(rep.image, a.ball.center, al)});
    return rep;
}

}  // namespace hardylab
