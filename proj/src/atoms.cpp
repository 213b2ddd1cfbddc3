#include "hardylab/atoms.hpp"

#include <algorithm>

#include "hardylab/dual_basis.hpp"
#include "hardylab/weights.hpp"

namespace hardylab {

HardyParams HardyParams::make(int n, double p, double q, double eta, std::optional<double> lambda, double mu,
                              double delta, std::optional<int> s0, double q_omega) {
    HardyParams h;
    h.n = n;
    h.p = p;
    h.q = q;
    h.eta = eta;
    h.mu = mu;
    h.delta = delta;
    h.gamma_p = n * (1.0 / p - 1.0);
    h.s = static_cast<int>(std::floor(h.gamma_p + 1e-9));
    h.beta = eta + 1.0 / p;
    h.lambda = lambda ? *lambda : (std::isinf(q) ? 0.0 : h.lambda_floor() + 1.0);
    h.s0 = s0 ? *s0 : std::max(0, static_cast<int>(std::floor(n * (q_omega / p - 1.0) + 1e-9)));
    h.check();
    return h;
}

void HardyParams::check() const {
    auto bad = [](const std::string& m) { throw Error(ErrorCode::inadmissible_parameters, m); };
    if (n != 1 && n != 2) bad("n must be 1 or 2");
    if (!(p > 0 && p <= 1)) bad("p must lie in (0, 1]");
    if (!(q >= 1)) bad("q must be ≥ 1");
    if (!(eta > 0)) bad("η must be positive");
    if (!(mu > 0)) bad("μ must be positive");
    if (!(delta > 0 && delta <= 1)) bad("δ must lie in (0, 1]");
    if (std::fabs(gamma_p - n * (1.0 / p - 1.0)) > 1e-12) bad("γ_p inconsistent");
    if (s != static_cast<int>(std::floor(gamma_p + 1e-9))) bad("s inconsistent with γ_p");
    if (std::fabs(beta - (eta + 1.0 / p)) > 1e-12) bad("β inconsistent");
    if (s0 < s) bad("s0 must be at least s");
    if (s0 > kMaxMomentOrder) bad("s0 above the moment cap");
    if (std::isfinite(q) && !(lambda > lambda_floor())) bad("λ must exceed n(q/p − 1)");
}

bool HardyParams::two_branch() const { return std::fabs(gamma_p - std::round(gamma_p)) < 1e-9; }

std::pair<double, double> HardyParams::lambda_window() const {
    return {lambda_floor(), q * (n + std::min(mu, delta)) - n};
}

HardyParams HardyParams::with_q(double q_new) const {
    HardyParams h = *this;
    h.q = q_new;
    if (std::isinf(q_new)) h.lambda = 0.0;
    return h;
}

HardyParams HardyParams::with_s0(int s0_new) const {
    HardyParams h = *this;
    h.s0 = s0_new;
    return h;
}

const char* to_string(Condition c) {
    switch (c) {
        case Condition::A1: return "A1";
        case Condition::A2: return "A2";
        case Condition::A3: return "A3";
        case Condition::A3p: return "A3'";
        case Condition::M1: return "M1";
        case Condition::M2: return "M2";
        case Condition::M3: return "M3";
    }
    return "?";
}

bool ValidationReport::all_pass() const {
    return std::all_of(records.begin(), records.end(), [](const ConditionRecord& r) { return r.pass; });
}

const ConditionRecord* ValidationReport::find(Condition id) const {
    for (const auto& r : records)
        if (r.id == id) return &r;
    return nullptr;
}

double ValidationReport::worst_constant(Condition id) const {
    double m = 0.0;
    for (const auto& r : records)
        if (r.id == id) m = std::max(m, r.min_passing_constant);
    return m;
}

double size_budget(const Weight& w, const Ball& b, const HardyParams& prm) {
    const double wb = measure_ball(w, b, prm.n);
    const double inv_q = std::isinf(prm.q) ? 0.0 : 1.0 / prm.q;
    return std::pow(wb, inv_q - 1.0 / prm.p);
}

double ball_control_budget(const Weight& w, const Ball& b, const HardyParams& prm, int order) {
    const double wb = measure_ball(w, b, prm.n);
    const double vb = ball_volume(prm.n, b.radius);
    if (prm.two_branch() && order == prm.s) return std::pow(vb / wb, prm.beta) * std::pow(wb, prm.eta);
    return std::pow(vb / wb, 1.0 / prm.p);
}

namespace {

bool within(double measured, double budget) { return measured <= budget * (1.0 + kBudgetTolerance) + 1e-300; }

double safe_ratio(double a, double b) {
    if (a == 0.0) return 0.0;
    return b > 0 ? a / b : kInf;
}

ConditionRecord support_record(const AtomCandidate& c) {
    ConditionRecord r;
    r.id = Condition::A1;
    double far = 0.0;
    for (std::size_t i = 0; i < c.f.values.size(); ++i)
        if (c.f.values[i] != 0.0) far = std::max(far, distance(c.f.spec.node(i), c.ball.center));
    r.measured = far;
    r.budget = c.ball.radius;
    r.pass = far < c.ball.radius;
    r.min_passing_constant = far / c.ball.radius;
    r.note = "max distance of nonzero nodes from x_B";
    return r;
}

ConditionRecord size_record(const AtomCandidate& c) {
    ConditionRecord r;
    r.id = Condition::A2;
    r.measured = weighted_lq_norm(c.f, c.weight, c.params.q);
    r.budget = size_budget(c.weight, c.ball, c.params);
    r.pass = within(r.measured, r.budget);
    r.min_passing_constant = safe_ratio(r.measured, r.budget);
    return r;
}

double l1_norm(const GridFunction& f) {
    double s = 0.0;
    for (double v : f.values) s += std::fabs(v);
    return s * f.spec.cell_volume();
}

}  // namespace

ValidationReport validate_atom(const AtomCandidate& c, const AtomCheckOptions& opt) {
    c.params.check();
    ValidationReport rep;
    rep.records.push_back(support_record(c));
    rep.records.push_back(size_record(c));
    ConditionRecord m;
    m.id = Condition::A3;
    if (c.ball.radius < 1.0) {
        double worst = 0.0;
        for (const auto& a : multi_indices(c.params.n, c.params.s0))
            worst = std::max(worst, std::fabs(moment(c.f, c.ball.center, a)));
        const double h = c.f.spec.h;
        m.measured = worst;
        m.budget = opt.moment_constant * h * h * l1_norm(c.f);
        m.pass = within(m.measured, m.budget);
        m.min_passing_constant = safe_ratio(worst, h * h * l1_norm(c.f));
        m.note = "max |moment| over |alpha| <= s0 against c h^2 |a|_1";
    } else {
        m.required = false;
        m.note = "r >= 1: no moment condition";
    }
    rep.records.push_back(m);
    return rep;
}

ValidationReport validate_approx_atom(const AtomCandidate& c, double C_budget) {
    c.params.check();
    ValidationReport rep;
    rep.records.push_back(support_record(c));
    rep.records.push_back(size_record(c));
    if (c.ball.radius >= 1.0) {
        ConditionRecord m;
        m.id = Condition::A3p;
        m.required = false;
        m.note = "r >= 1: only (A1),(A2) required";
        rep.records.push_back(m);
        return rep;
    }
    for (const auto& a : multi_indices(c.params.n, c.params.s)) {
        ConditionRecord m;
        m.id = Condition::A3p;
        m.alpha = a;
        const double unit = ball_control_budget(c.weight, c.ball, c.params, a.order());
        m.measured = std::fabs(moment(c.f, c.ball.center, a));
        m.budget = C_budget * unit;
        m.pass = within(m.measured, m.budget);
        m.min_passing_constant = safe_ratio(m.measured, unit);
        m.note = c.params.two_branch() && a.order() == c.params.s ? "branch two" : "branch one";
        rep.records.push_back(m);
    }
    return rep;
}

ValidationReport validate_molecule(const AtomCandidate& c, double C_budget, const MoleculeCheckOptions& opt) {
    const HardyParams& prm = c.params;
    prm.check();
    if (std::isinf(prm.q)) throw Error(ErrorCode::invalid_argument, "molecules need finite q");
    const double q = prm.q;
    const Ball& B = c.ball;
    const double r = B.radius;
    const double budget = size_budget(c.weight, B, prm);
    ValidationReport rep;

    ConditionRecord m1;
    m1.id = Condition::M1;
    const double i1 = weighted_lq_integral(c.f, c.weight, q, Region::ball(B));
    m1.measured = std::pow(i1, 1.0 / q);
    m1.budget = opt.size_constant * budget;
    m1.pass = within(m1.measured, m1.budget);
    m1.min_passing_constant = safe_ratio(m1.measured, budget);
    m1.literal_measured = i1;
    m1.literal_budget = budget;
    rep.records.push_back(m1);

    // Exterior by dyadic annuli up to the largest B_K inside the grid.
    int K = 0;
    while (K < opt.k_max && c.f.spec.contains(B.dilated(std::ldexp(1.0, K + 1)))) ++K;
    std::vector<double> ann(static_cast<std::size_t>(K) + 1, 0.0);
    for (int k = 1; k <= K; ++k) {
        const Region reg = Region::annulus(B.center, std::ldexp(r, k - 1), std::ldexp(r, k));
        std::vector<std::size_t> idx;
        for_each_node(c.f.spec, reg, [&](std::size_t i) {
            if (c.f.values[i] != 0.0) idx.push_back(i);
        });
        ann[k] = ordered_sum(idx.size(), [&](std::size_t j) {
            const std::size_t i = idx[j];
            return std::pow(std::fabs(c.f.values[i]), q) * std::pow(distance(c.f.spec.node(i), B.center), prm.lambda) *
                   cell_mass(c.f.spec, c.weight, i);
        });
    }
    double tail = 0.0;
    bool divergent = false;
    if (K >= 2 && ann[K] > 0.0) {
        const double rho = ann[K - 1] > 0 ? ann[K] / ann[K - 1] : kInf;
        if (rho < 1.0) tail = ann[K] * rho / (1.0 - rho);
        else divergent = true;
    } else if (K < 2) {
        // no room to measure decay; anything beyond B_1 is unknown
        double outside = weighted_lq_integral(c.f, c.weight, q, Region::exterior(B.dilated(2.0)));
        divergent = outside > 0.0;
    }
    double ext = 0.0;
    for (double v : ann) ext += v;
    ConditionRecord m2;
    m2.id = Condition::M2;
    m2.tail_bound = tail;
    const double b2 = std::pow(r, prm.lambda / q) * budget;
    m2.measured = divergent ? kInf : std::pow(ext + tail, 1.0 / q);
    m2.budget = opt.size_constant * b2;
    m2.pass = !divergent && within(m2.measured, m2.budget);
    m2.min_passing_constant = safe_ratio(m2.measured, b2);
    m2.literal_measured = divergent ? kInf : ext + tail;
    m2.literal_budget = b2;
    m2.note = divergent ? "exterior integrand does not decay across the outer annuli"
                        : "annuli up to 2^" + std::to_string(K) + "B plus extrapolated tail";
    if (r >= 1.0) m2.note += "; r >= 1 clause '(M1) and (M1)' read as (M1),(M2)";
    rep.records.push_back(m2);

    if (r >= 1.0) {
        ConditionRecord m3;
        m3.id = Condition::M3;
        m3.required = false;
        m3.note = "r >= 1: only size conditions required";
        rep.records.push_back(m3);
        return rep;
    }
    for (const auto& a : multi_indices(prm.n, prm.s)) {
        ConditionRecord m3;
        m3.id = Condition::M3;
        m3.alpha = a;
        const double unit = ball_control_budget(c.weight, B, prm, a.order());
        m3.measured = std::fabs(moment(c.f, B.center, a));
        m3.budget = C_budget * unit;
        m3.pass = within(m3.measured, m3.budget);
        m3.min_passing_constant = safe_ratio(m3.measured, unit);
        m3.note = prm.two_branch() && a.order() == prm.s ? "branch two" : "branch one";
        rep.records.push_back(m3);
    }
    return rep;
}

bool LargeRReport::holds() const {
    return std::all_of(rows.begin(), rows.end(), [](const LargeRRow& r) { return r.holds; });
}

LargeRReport check_large_r_implication(const AtomCandidate& c) {
    const Ball& B = c.ball;
    if (!(B.radius > 1.0)) throw Error(ErrorCode::invalid_argument, "large-r check needs r > 1");
    const auto pre = validate_atom(c);
    if (!pre.find(Condition::A1)->pass || !pre.find(Condition::A2)->pass)
        throw Error(ErrorCode::invalid_argument, "candidate fails (A1)/(A2)");
    const HardyParams& prm = c.params;
    const int n = prm.n;
    const double q = prm.q;
    const double r = B.radius;
    const double wb = measure_ball(c.weight, B, n);
    const double vb = ball_volume(n, r);
    const double norm = weighted_lq_norm(c.f, c.weight, q);

    LargeRReport rep;
    double dual_factor = 0.0;  // (∫_B ω^{-q'/q})^{1/q'}
    if (std::isinf(q)) {
        rep.aq_constant = 1.0;
        dual_factor = vb;
    } else if (q == 1.0) {
        rep.aq_constant = a1_ratio(c.weight, B, n);
        dual_factor = 1.0 / c.weight.ball_infimum(B, n);
    } else {
        rep.aq_constant = aq_ratio(c.weight, q, B, n);
        dual_factor = std::pow(c.weight.ball_integral(B, n, 1.0 / (1.0 - q)), (q - 1.0) / q);
    }
    for (const auto& a : multi_indices(n, prm.s)) {
        LargeRRow row;
        row.alpha = a;
        row.lhs = std::fabs(moment(c.f, B.center, a));
        const double ra = std::pow(r, a.order());
        row.holder = ra * norm * dual_factor;
        row.rhs = rep.aq_constant * ra * vb * std::pow(wb, -1.0 / prm.p);
        row.rhs_literal = rep.aq_constant * std::pow(r, a.order() + n) * std::pow(wb, -1.0 / prm.p);
        row.holds = within(row.lhs, row.rhs);
        row.literal_holds = within(row.lhs, row.rhs_literal);
        rep.rows.push_back(row);
    }
    return rep;
}

namespace {

struct BallNodes {
    std::vector<std::size_t> idx;
    std::vector<double> psi;  // (1 − |u|²)^3
};

BallNodes ball_nodes(const GridSpec& g, const Ball& b) {
    BallNodes bn;
    for_each_node(g, Region::ball(b), [&](std::size_t i) {
        const double u = distance(g.node(i), b.center) / b.radius;
        const double v = 1.0 - u * u;
        bn.idx.push_back(i);
        bn.psi.push_back(v * v * v);
    });
    return bn;
}

// Smooth random profile ψ(u) g(u) on the nodes of B.
std::vector<double> random_bump(const GridSpec& g, const Ball& b, const BallNodes& bn, Rng& rng) {
    const auto terms = multi_indices(g.dim, 3);
    std::vector<double> c(terms.size());
    for (auto& v : c) v = rng.uniform(-1.0, 1.0);
    c[0] = rng.uniform(0.5, 1.5) * rng.sign();
    const double amp = rng.uniform(0.2, 0.8);
    const double freq = rng.uniform(1.0, 3.0);
    const double phase = rng.uniform(0.0, 2.0 * kPi);
    const double dir = rng.uniform(0.0, 2.0 * kPi);
    std::vector<double> out(bn.idx.size());
    for (std::size_t k = 0; k < bn.idx.size(); ++k) {
        const Point x = g.node(bn.idx[k]);
        const Point u{(x[0] - b.center[0]) / b.radius, (x[1] - b.center[1]) / b.radius};
        double v = 0.0;
        for (std::size_t t = 0; t < terms.size(); ++t) v += c[t] * monomial(u, {0.0, 0.0}, terms[t]);
        const double proj = g.dim == 1 ? u[0] : u[0] * std::cos(dir) + u[1] * std::sin(dir);
        v += amp * std::sin(2.0 * kPi * freq * proj + phase);
        out[k] = bn.psi[k] * v;
    }
    return out;
}

// ψ-weighted dual basis on B for moments up to `order`.
DualBasis envelope_duals(const GridSpec& g, const Ball& b, const BallNodes& bn, int order) {
    return DualBasis::build(g, bn.idx, b.center, b.radius, order, bn.psi);
}

// ψ · Σ_α target_α φ_α / |E|_ψ: moments equal `target` up to `order`.
std::vector<double> moment_correction(const GridSpec& g, const BallNodes& bn, const DualBasis& d,
                                      const std::vector<double>& target) {
    std::vector<double> out(bn.idx.size(), 0.0);
    for (std::size_t k = 0; k < bn.idx.size(); ++k) {
        const Point x = g.node(bn.idx[k]);
        double v = 0.0;
        for (std::size_t a = 0; a < d.size(); ++a)
            if (target[a] != 0.0) v += target[a] * d.dual(a)(x);
        out[k] = bn.psi[k] * v / d.measure();
    }
    return out;
}

std::vector<double> node_moments(const GridSpec& g, const BallNodes& bn, const std::vector<double>& vals,
                                 const Point& c, const std::vector<MultiIndex>& idx) {
    std::vector<double> m(idx.size(), 0.0);
    const double hv = g.cell_volume();
    for (std::size_t a = 0; a < idx.size(); ++a) {
        double s = 0.0;
        for (std::size_t k = 0; k < bn.idx.size(); ++k) s += vals[k] * monomial(g.node(bn.idx[k]), c, idx[a]);
        m[a] = s * hv;
    }
    return m;
}

void project_out_moments(const GridSpec& g, const Ball& b, const BallNodes& bn, std::vector<double>& vals, int order) {
    const DualBasis d = envelope_duals(g, b, bn, order);
    const auto mom = node_moments(g, bn, vals, b.center, d.indices());
    const auto corr = moment_correction(g, bn, d, mom);
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] -= corr[k];
}

GridFunction scatter(const GridSpec& g, const BallNodes& bn, const std::vector<double>& vals, const Ball& hint) {
    GridFunction f(g);
    for (std::size_t k = 0; k < bn.idx.size(); ++k) f.values[bn.idx[k]] = vals[k];
    f.support_hint = hint;
    return f;
}

double ball_norm(const GridSpec& g, const BallNodes& bn, const std::vector<double>& vals, const Weight& w, double q) {
    if (std::isinf(q)) {
        double m = 0.0;
        for (double v : vals) m = std::max(m, std::fabs(v));
        return m;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < vals.size(); ++k)
        if (vals[k] != 0.0) s += std::pow(std::fabs(vals[k]), q) * cell_mass(g, w, bn.idx[k]);
    return std::pow(s, 1.0 / q);
}

// Smallest c ≥ 0 with ‖c·core + extra‖ = target (norm convex in c).
double solve_core_scale(const GridSpec& g, const BallNodes& bn, const std::vector<double>& core,
                        const std::vector<double>& extra, const Weight& w, double q, double target) {
    auto norm_at = [&](double c) {
        std::vector<double> v(core.size());
        for (std::size_t k = 0; k < v.size(); ++k) v[k] = c * core[k] + extra[k];
        return ball_norm(g, bn, v, w, q);
    };
    const double core_norm = ball_norm(g, bn, core, w, q);
    if (!(core_norm > 0)) throw Error(ErrorCode::ill_conditioned, "degenerate generated profile; increase resolution");
    double lo = 0.0, hi = (target + ball_norm(g, bn, extra, w, q)) / core_norm;
    while (norm_at(hi) < target) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (norm_at(mid) < target ? lo : hi) = mid;
    }
    return lo;
}

void require_inside(const GridSpec& g, const Ball& b) {
    if (!(b.radius > 0)) throw Error(ErrorCode::invalid_argument, "ball radius must be positive");
    if (!g.contains(b)) throw Error(ErrorCode::out_of_domain, "ball not inside the grid");
}

}  // namespace

AtomCandidate make_atom(const GridSpec& grid, const Ball& b, const HardyParams& prm, const Weight& w,
                        std::uint64_t seed) {
    prm.check();
    require_inside(grid, b);
    Rng rng(seed);
    const BallNodes bn = ball_nodes(grid, b);
    auto vals = random_bump(grid, b, bn, rng);
    if (b.radius < 1.0) project_out_moments(grid, b, bn, vals, prm.s0);
    const double theta = rng.uniform(0.5, 1.0);
    const double norm = ball_norm(grid, bn, vals, w, prm.q);
    if (!(norm > 0)) throw Error(ErrorCode::ill_conditioned, "degenerate generated atom; increase resolution");
    const double scale = theta * size_budget(w, b, prm) / norm;
    for (auto& v : vals) v *= scale;
    AtomCandidate c{scatter(grid, bn, vals, b), b, prm, w, seed, "atom", theta, 0.0, 0.0};
    return c;
}

AtomCandidate make_approx_atom(const GridSpec& grid, const Ball& b, const HardyParams& prm, const Weight& w,
                               std::uint64_t seed, double moment_fill) {
    prm.check();
    require_inside(grid, b);
    if (!(moment_fill >= 0.0 && moment_fill <= 1.0)) throw Error(ErrorCode::invalid_argument, "moment_fill must lie in [0,1]");
    if (!(b.radius < 1.0)) {
        // no moment conditions for large balls; moment_fill has nothing to act on
        AtomCandidate c = make_atom(grid, b, prm, w, seed);
        c.kind = "approx_atom";
        return c;
    }
    Rng rng(seed);
    const BallNodes bn = ball_nodes(grid, b);
    auto core = random_bump(grid, b, bn, rng);
    project_out_moments(grid, b, bn, core, prm.s0);
    const double theta = rng.uniform(0.5, 1.0);
    const double target = theta * size_budget(w, b, prm);

    const DualBasis d = envelope_duals(grid, b, bn, prm.s);
    std::vector<double> want(d.size());
    for (std::size_t a = 0; a < d.size(); ++a)
        want[a] = moment_fill * ball_control_budget(w, b, prm, d.indices()[a].order()) * rng.sign();
    auto corr = moment_correction(grid, bn, d, want);
    double kappa = 1.0;
    const double cn = ball_norm(grid, bn, corr, w, prm.q);
    if (cn > 0.9 * target) {
        kappa = 0.9 * target / cn;
        for (auto& v : corr) v *= kappa;
    }
    const double c1 = solve_core_scale(grid, bn, core, corr, w, prm.q, target);
    std::vector<double> vals(core.size());
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = c1 * core[k] + corr[k];
    AtomCandidate c{scatter(grid, bn, vals, b), b, prm, w, seed, "approx_atom", theta, moment_fill * kappa, 0.0};
    return c;
}

GridSpec molecule_grid(int dim, const Ball& b, int k_max, double h, double margin) {
    return GridSpec::covering(dim, {b.center, std::ldexp(b.radius, k_max) + margin}, h);
}

AtomCandidate make_molecule(const GridSpec& grid, const Ball& b, const HardyParams& prm, const Weight& w,
                            std::uint64_t seed, double tail_fill, const MoleculeOptions& opt) {
    prm.check();
    require_inside(grid, b);
    if (std::isinf(prm.q)) throw Error(ErrorCode::invalid_argument, "molecules need finite q");
    if (!(tail_fill >= 0.0 && tail_fill <= 1.0)) throw Error(ErrorCode::invalid_argument, "tail_fill must lie in [0,1]");
    const Ball outer = b.dilated(std::ldexp(1.0, opt.k_max));
    if (!grid.contains(outer)) throw Error(ErrorCode::domain_too_small, "grid does not cover B_{k_max}");
    const double e = std::isnan(opt.tail_exponent) ? prm.lambda + prm.n + 1.0 : opt.tail_exponent;
    const double fill = std::isnan(opt.moment_fill) ? tail_fill : opt.moment_fill;
    const double r = b.radius;

    Rng rng(seed);
    const BallNodes bn = ball_nodes(grid, b);
    auto core = random_bump(grid, b, bn, rng);
    if (r < 1.0) project_out_moments(grid, b, bn, core, std::max(prm.s0, prm.s));
    const double theta = rng.uniform(0.5, 1.0);
    const double budget1 = size_budget(w, b, prm);

    // Tail (r/|x − x_B|)^e on B_{k_max} \ B, scaled to make (M2) tail_fill-tight.
    GridFunction tail(grid);
    for_each_node(grid, Region::annulus(b.center, r, outer.radius), [&](std::size_t i) {
        tail.values[i] = std::pow(r / distance(grid.node(i), b.center), e);
    });
    tail.support_hint = outer;
    AtomCandidate probe{tail, b, prm, w, seed, "molecule", 0.0, 0.0, 0.0};
    const auto tail_rep = validate_molecule(probe, 1.0, {opt.k_max, 1.0});
    const ConditionRecord* m2 = tail_rep.find(Condition::M2);
    if (tail_fill > 0 && !std::isfinite(m2->measured))
        throw Error(ErrorCode::invalid_argument, "tail exponent too small: the (M2) sum diverges");
    const double c2 = tail_fill > 0 && m2->measured > 0 ? tail_fill * m2->budget / m2->measured : 0.0;

    std::vector<double> corr(bn.idx.size(), 0.0);
    double kappa = 1.0;
    if (r < 1.0) {
        const DualBasis d = envelope_duals(grid, b, bn, prm.s);
        std::vector<double> want(d.size());
        for (std::size_t a = 0; a < d.size(); ++a) {
            const double tail_mom = c2 * moment(tail, b.center, d.indices()[a]);
            want[a] = fill * ball_control_budget(w, b, prm, d.indices()[a].order()) * rng.sign() - tail_mom;
        }
        corr = moment_correction(grid, bn, d, want);
        const double cn = ball_norm(grid, bn, corr, w, prm.q);
        if (cn > 0.9 * theta * budget1) {
            kappa = 0.9 * theta * budget1 / cn;
            for (auto& v : corr) v *= kappa;
        }
    }
    const double c1 = solve_core_scale(grid, bn, core, corr, w, prm.q, theta * budget1);
    GridFunction M = c2 * tail;
    for (std::size_t k = 0; k < bn.idx.size(); ++k) M.values[bn.idx[k]] = c1 * core[k] + corr[k];
    M.support_hint = outer;
    return {M, b, prm, w, seed, "molecule", theta, fill * kappa, tail_fill};
}

std::vector<MomentBoundRow> molecule_moment_bound(const AtomCandidate& m) {
    const HardyParams& prm = m.params;
    const double r = m.ball.radius;
    const double wb = measure_ball(m.weight, m.ball, prm.n);
    std::vector<MomentBoundRow> out;
    for (const auto& a : multi_indices(prm.n, prm.s)) {
        MomentBoundRow row;
        row.alpha = a;
        row.measured = std::fabs(moment(m.f, m.ball.center, a));
        row.unit_bound = std::pow(r, prm.n + a.order()) * std::pow(wb, -1.0 / prm.p);
        row.ratio = row.measured / row.unit_bound;
        out.push_back(row);
    }
    return out;
}

double fit_moment_constant(const std::vector<std::vector<MomentBoundRow>>& family) {
    double c = 0.0;
    for (const auto& rows : family)
        for (const auto& r : rows) c = std::max(c, r.ratio);
    return c;
}

std::vector<std::pair<double, double>> size_implied_moment_bound(const AtomCandidate& m) {
    const HardyParams& prm = m.params;
    if (!(prm.q > 1.0) || std::isinf(prm.q)) throw Error(ErrorCode::invalid_argument, "needs 1 < q < ∞");
    const double q = prm.q, qp = q / (q - 1.0);
    const GridSpec& g = m.f.spec;
    const Ball& B = m.ball;
    const double gdual = 1.0 / (1.0 - q);
    std::vector<std::pair<double, double>> out;
    for (const auto& a : multi_indices(prm.n, prm.s)) {
        double in_size = 0.0, in_dual = 0.0, out_size = 0.0, out_dual = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            const Point x = g.node(i);
            const double d = distance(x, B.center);
            const double v = std::fabs(m.f.values[i]);
            if (d < B.radius) {
                if (v != 0.0) in_size += std::pow(v, q) * cell_mass(g, m.weight, i);
                in_dual += std::pow(d, a.order() * qp) * cell_mass(g, m.weight, i, gdual);
            } else {
                if (v != 0.0) out_size += std::pow(v, q) * std::pow(d, prm.lambda) * cell_mass(g, m.weight, i);
                out_dual += std::pow(d, (a.order() - prm.lambda / q) * qp) * cell_mass(g, m.weight, i, gdual);
            }
        }
        const double bound = std::pow(in_size, 1.0 / q) * std::pow(in_dual, 1.0 / qp) +
                             std::pow(out_size, 1.0 / q) * std::pow(out_dual, 1.0 / qp);
        out.push_back({std::fabs(moment(m.f, B.center, a)), bound});
    }
    return out;
}

}  // namespace hardylab
