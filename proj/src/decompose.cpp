#include "hardylab/decompose.hpp"

#include <algorithm>

#include "hardylab/weights.hpp"

namespace hardylab {

AnnularSystem AnnularSystem::build(const GridSpec& grid, const Ball& base, int k_max) {
    if (k_max < 0) throw Error(ErrorCode::invalid_argument, "k_max must be ≥ 0");
    AnnularSystem sys;
    sys.base = base;
    sys.k_max = k_max;
    sys.grid = grid;
    if (!grid.contains(sys.ball(k_max))) throw Error(ErrorCode::domain_too_small, "grid does not cover B_{k_max}");
    sys.nodes.assign(static_cast<std::size_t>(k_max) + 1, {});
    const double r = base.radius;
    const Ball outer = sys.ball(k_max);
    for_each_node(grid, Region::ball(outer), [&](std::size_t i) {
        const double d = distance(grid.node(i), base.center);
        int k = 0;
        while (d >= std::ldexp(r, k)) ++k;
        sys.nodes[static_cast<std::size_t>(k)].push_back(i);
    });
    const double hv = grid.cell_volume();
    for (int k = 0; k <= k_max; ++k) {
        const auto& nk = sys.nodes[static_cast<std::size_t>(k)];
        if (nk.size() < 32) throw Error(ErrorCode::ill_conditioned, "annulus resolved by fewer than 32 cells; refine grid");
        sys.measure.push_back(static_cast<double>(nk.size()) * hv);
        const double outer_v = ball_volume(grid.dim, std::ldexp(r, k));
        const double inner_v = k == 0 ? 0.0 : ball_volume(grid.dim, std::ldexp(r, k - 1));
        sys.closed_measure.push_back(outer_v - inner_v);
    }
    return sys;
}

std::vector<DualBasis> dual_polynomials(const AnnularSystem& sys, int s) {
    if (s < 0 || s > 3) throw Error(ErrorCode::invalid_argument, "dual order must lie in [0, 3]");
    std::vector<DualBasis> out(static_cast<std::size_t>(sys.count()));
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < sys.count(); ++k)
        out[static_cast<std::size_t>(k)] = DualBasis::build(sys.grid, sys.nodes[static_cast<std::size_t>(k)],
                                                            sys.base.center, std::ldexp(sys.base.radius, k), s);
    return out;
}

MomentTable annular_moments(const GridFunction& M, const AnnularSystem& sys, int s) {
    if (!(M.spec == sys.grid)) throw Error(ErrorCode::invalid_argument, "function and annular system grids differ");
    const auto idx = multi_indices(sys.grid.dim, s);
    MomentTable m(static_cast<std::size_t>(sys.count()), std::vector<double>(idx.size(), 0.0));
    const double hv = sys.grid.cell_volume();
#pragma omp parallel for schedule(dynamic)
    for (int k = 0; k < sys.count(); ++k) {
        const auto& nk = sys.nodes[static_cast<std::size_t>(k)];
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const double sum = ordered_sum(nk.size(), [&](std::size_t j) {
                const std::size_t i = nk[j];
                return M.values[i] * monomial(sys.grid.node(i), sys.base.center, idx[a]);
            });
            m[static_cast<std::size_t>(k)][a] = sum * hv / sys.measure[static_cast<std::size_t>(k)];
        }
    }
    return m;
}

TailMoments tail_and_total_moments(const MomentTable& m, const AnnularSystem& sys) {
    const std::size_t K = static_cast<std::size_t>(sys.k_max);
    const std::size_t na = m.empty() ? 0 : m[0].size();
    TailMoments t;
    t.N.assign(K + 1, std::vector<double>(na, 0.0));
    t.nu.assign(na, 0.0);
    t.beyond.assign(na, 0.0);
    for (std::size_t a = 0; a < na; ++a) {
        double acc = 0.0;
        for (std::size_t k = K + 1; k-- > 0;) {
            t.N[k][a] = acc;
            acc += sys.measure[k] * m[k][a];
        }
        t.nu[a] = acc;
        // geometric extrapolation from the last two annuli
        double peak = 0.0;
        for (std::size_t k = 0; k <= K; ++k) peak = std::max(peak, std::fabs(sys.measure[k] * m[k][a]));
        if (K >= 1) {
            const double last = std::fabs(sys.measure[K] * m[K][a]);
            const double prev = std::fabs(sys.measure[K - 1] * m[K - 1][a]);
            if (last > 1e-12 * peak && last > 0.0) {
                const double rho = prev > 0 ? last / prev : kInf;
                if (!(rho < 1.0))
                    throw Error(ErrorCode::molecule_condition_violated, "annular moments do not decay");
                t.beyond[a] = last * rho / (1.0 - rho);
            }
        }
    }
    return t;
}

namespace {

GridFunction on_ball(const GridSpec& g, const Ball& b, const std::vector<std::size_t>& nodes,
                     const std::vector<double>& vals) {
    GridFunction f(g);
    for (std::size_t j = 0; j < nodes.size(); ++j) f.values[nodes[j]] = vals[j];
    f.support_hint = b;
    return crop(f, b);
}

}  // namespace

Decomposition decompose_molecule(const GridFunction& M, const HardyParams& prm, const Weight& w,
                                 const AnnularSystem& sys) {
    prm.check();
    if (!(prm.q > 1.0) || std::isinf(prm.q)) throw Error(ErrorCode::invalid_argument, "decomposition needs 1 < q < ∞");
    const int K = sys.k_max;
    const int n = prm.n;
    const double q = prm.q, p = prm.p, lam = prm.lambda;
    const GridSpec& g = sys.grid;
    Decomposition d;
    d.base = sys.base;
    d.k_max = K;
    d.params = prm;
    d.weight = w;
    d.original = M;
    d.residual = GridFunction(g);
    if (M.is_zero()) {
        d.residual = crop(d.residual, sys.base);
        return d;
    }

    const auto duals = dual_polynomials(sys, prm.s);
    const auto idx = multi_indices(n, prm.s);
    for (const auto& db : duals) {
        d.max_biorthogonality = std::max(d.max_biorthogonality, db.biorthogonality_residual());
        d.max_condition = std::max(d.max_condition, db.condition_number());
        d.max_dual_bound = std::max(d.max_dual_bound, db.uniform_bound());
    }
    d.moments = annular_moments(M, sys, prm.s);
    d.tails = tail_and_total_moments(d.moments, sys);

    // M_k − P_k on each annulus, and its normalization on B_k.
    std::vector<std::vector<double>> diff(static_cast<std::size_t>(K) + 1);
    std::vector<double> diff_norm(static_cast<std::size_t>(K) + 1, 0.0);
    std::vector<double> P_values;
    for (int k = 0; k <= K; ++k) {
        const auto& nk = sys.nodes[static_cast<std::size_t>(k)];
        auto& dk = diff[static_cast<std::size_t>(k)];
        dk.resize(nk.size());
        double sup_p = 0.0, mk_q = 0.0, lq = 0.0;
        for (std::size_t j = 0; j < nk.size(); ++j) {
            const Point x = g.node(nk[j]);
            double P = 0.0;
            for (std::size_t a = 0; a < idx.size(); ++a)
                P += d.moments[static_cast<std::size_t>(k)][a] * duals[static_cast<std::size_t>(k)].dual(a)(x);
            dk[j] = M.values[nk[j]] - P;
            const double cm = cell_mass(g, w, nk[j]);
            sup_p = std::max(sup_p, std::fabs(P));
            mk_q += std::pow(std::fabs(M.values[nk[j]]), q) * cm;
            lq += std::pow(std::fabs(dk[j]), q) * cm;
        }
        diff_norm[static_cast<std::size_t>(k)] = std::pow(lq, 1.0 / q);
        if (mk_q > 0)
            d.polynomial_bound = std::max(d.polynomial_bound,
                                          std::pow(sup_p, q) * measure_ball(w, sys.ball(k), n) / mk_q);
    }

    // C_t: smallest constant making every a_k pass (A2) on B_k.
    const double budget0 = size_budget(w, sys.base, prm);
    for (int k = 0; k <= K; ++k) {
        const double grow = std::exp2(k * lam / q);
        const double bk = size_budget(w, sys.ball(k), prm);
        d.C_t = std::max(d.C_t, grow * diff_norm[static_cast<std::size_t>(k)] / bk);
        d.C_t_base_normalized = std::max(d.C_t_base_normalized, grow * diff_norm[static_cast<std::size_t>(k)] / budget0);
    }
    for (int k = 0; k <= K; ++k) {
        const double tk = d.C_t * std::exp2(-k * lam / q);
        d.t.push_back(tk);
        std::vector<double> vals = diff[static_cast<std::size_t>(k)];
        for (auto& v : vals) v = tk > 0 ? v / tk : 0.0;
        d.a.push_back(on_ball(g, sys.ball(k), sys.nodes[static_cast<std::size_t>(k)], vals));
        d.sum_t_p += std::pow(tk, p);
        d.closed_t_p += std::pow(d.C_t, p) * std::exp2(-k * p * lam / q);
    }

    // Σ_α Φ_α^k on E_k ∪ E_{k+1}, k < K.
    std::vector<std::vector<double>> phi(static_cast<std::size_t>(K));
    std::vector<double> phi_sup(static_cast<std::size_t>(K), 0.0);
    for (int k = 0; k < K; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const auto& n0 = sys.nodes[ku];
        const auto& n1 = sys.nodes[ku + 1];
        auto& v = phi[ku];
        v.assign(n0.size() + n1.size(), 0.0);
        for (std::size_t a = 0; a < idx.size(); ++a) {
            const double Nk = d.tails.N[ku][a];
            if (Nk == 0.0) continue;
            for (std::size_t j = 0; j < n0.size(); ++j)
                v[j] -= Nk * duals[ku].dual(a)(g.node(n0[j])) / sys.measure[ku];
            for (std::size_t j = 0; j < n1.size(); ++j)
                v[n0.size() + j] += Nk * duals[ku + 1].dual(a)(g.node(n1[j])) / sys.measure[ku + 1];
        }
        for (double x : v) phi_sup[ku] = std::max(phi_sup[ku], std::fabs(x));
        const double wb = measure_ball(w, sys.ball(k + 1), n);
        d.C_s = std::max(d.C_s, std::exp2(k * (n + lam) / q) * phi_sup[ku] * std::pow(wb, 1.0 / p));
    }
    for (int k = 0; k < K; ++k) {
        const auto ku = static_cast<std::size_t>(k);
        const double sk = d.C_s * std::exp2(-k * (n + lam) / q);
        d.s.push_back(sk);
        std::vector<std::size_t> nodes = sys.nodes[ku];
        nodes.insert(nodes.end(), sys.nodes[ku + 1].begin(), sys.nodes[ku + 1].end());
        std::vector<double> vals = phi[ku];
        for (auto& v : vals) v = sk > 0 ? v / sk : 0.0;
        d.b.push_back(on_ball(g, sys.ball(k + 1), nodes, vals));
        d.sum_s_p += std::pow(sk, p);
        d.closed_s_p += std::pow(d.C_s, p) * std::exp2(-k * p * (n + lam) / q);
    }

    // Residual Σ_α ν_α φ_α^0 / |E_0| on B.
    const auto& n0 = sys.nodes[0];
    std::vector<double> res(n0.size(), 0.0);
    for (std::size_t j = 0; j < n0.size(); ++j)
        for (std::size_t a = 0; a < idx.size(); ++a) res[j] += d.tails.nu[a] * duals[0].dual(a)(g.node(n0[j])) / sys.measure[0];
    GridFunction resf = on_ball(g, sys.base, n0, res);
    const double rn = weighted_lq_norm(resf, w, q);
    d.residual_multiple = std::max(1.0, rn / budget0);
    d.residual = resf;

    // Σ_k P_k = Σ_k Σ_α Φ_α^k + residual, node-wise.
    GridFunction lhs(g), rhs(g);
    for (int k = 0; k <= K; ++k) {
        const auto& nk = sys.nodes[static_cast<std::size_t>(k)];
        for (std::size_t j = 0; j < nk.size(); ++j)
            lhs.values[nk[j]] = M.values[nk[j]] - diff[static_cast<std::size_t>(k)][j];
    }
    for (int k = 0; k < K; ++k) accumulate(rhs, d.b[static_cast<std::size_t>(k)], d.s[static_cast<std::size_t>(k)]);
    accumulate(rhs, d.residual, 1.0);
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < lhs.values.size(); ++i) {
        scale = std::max(scale, std::fabs(lhs.values[i]));
        err = std::max(err, std::fabs(lhs.values[i] - rhs.values[i]));
    }
    d.telescoping_error = scale > 0 ? err / scale : err;
    return d;
}

Decomposition decompose_molecule(const AtomCandidate& M, const AnnularSystem& sys, double C_budget) {
    const auto rep = validate_molecule(M, C_budget, {sys.k_max, 1.0});
    if (!rep.all_pass()) throw Error(ErrorCode::molecule_condition_violated, "input fails validate_molecule");
    return decompose_molecule(M.f, M.params, M.weight, sys);
}

Reconstruction reconstruct(const Decomposition& d) {
    Reconstruction r;
    r.f = GridFunction(d.original.spec);
    for (std::size_t k = 0; k < d.a.size(); ++k) accumulate(r.f, d.a[k], d.t[k]);
    for (std::size_t k = 0; k < d.b.size(); ++k) accumulate(r.f, d.b[k], d.s[k]);
    accumulate(r.f, d.residual, 1.0);
    const double base = weighted_lq_norm(d.original, d.weight, d.params.q);
    const double err = weighted_lq_norm(r.f - d.original, d.weight, d.params.q);
    r.relative_error = base > 0 ? err / base : err;
    return r;
}

AtomCandidate atom_candidate(const Decomposition& d, int k) {
    if (k < 0 || k >= static_cast<int>(d.a.size())) throw Error(ErrorCode::out_of_domain, "no a_k at this index");
    const Ball bk = d.base.dilated(std::ldexp(1.0, k));
    return {d.a[static_cast<std::size_t>(k)], bk, d.params.with_s0(d.params.s), d.weight, 0, "a_k", 0.0, 0.0, 0.0};
}

AtomCandidate b_candidate(const Decomposition& d, int k) {
    if (k < 0 || k >= static_cast<int>(d.b.size())) throw Error(ErrorCode::out_of_domain, "no b_k at this index");
    const Ball bk = d.base.dilated(std::ldexp(1.0, k + 1));
    return {d.b[static_cast<std::size_t>(k)], bk, d.params.with_q(kInf).with_s0(d.params.s), d.weight, 0, "b_k",
            0.0, 0.0, 0.0};
}

AtomCandidate residual_candidate(const Decomposition& d) {
    GridFunction f = (1.0 / d.residual_multiple) * d.residual;
    return {f, d.base, d.params, d.weight, 0, "residual", 0.0, 0.0, 0.0};
}

}  // namespace hardylab
