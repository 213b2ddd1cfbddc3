#include "hardylab/weights.hpp"

#include <algorithm>

namespace hardylab {

double measure_ball(const Weight& w, const Ball& b, int dim) {
    if (!(b.radius > 0)) throw Error(ErrorCode::invalid_argument, "ball radius must be positive");
    return w.ball_integral(b, dim, 1.0);
}

double measure_ball(const Weight& w, const Ball& b, const GridSpec& grid) {
    if (!grid.intersects(b)) throw Error(ErrorCode::out_of_domain, "ball outside the quadrature domain");
    double m = 0.0;
    for_each_node(grid, Region::ball(b), [&](std::size_t i) { m += cell_mass(grid, w, i); });
    return m;
}

BallFamily BallFamily::standard(int dim, double center_lo, double center_hi, double r_lo, double r_hi, int n_radii,
                                int n_centers, int n_random, std::uint64_t seed,
                                const std::vector<Point>& extra_centers) {
    BallFamily fam;
    std::vector<Point> centers;
    for (int i = 0; i < n_centers; ++i) {
        const double u = n_centers == 1 ? 0.5 : static_cast<double>(i) / (n_centers - 1);
        const double c = center_lo + (center_hi - center_lo) * u;
        if (dim == 1) {
            centers.push_back({c, 0.0});
        } else {
            for (int j = 0; j < n_centers; ++j) {
                const double v = n_centers == 1 ? 0.5 : static_cast<double>(j) / (n_centers - 1);
                centers.push_back({c, center_lo + (center_hi - center_lo) * v});
            }
        }
    }
    centers.insert(centers.end(), extra_centers.begin(), extra_centers.end());
    for (const auto& c : centers)
        for (int k = 0; k < n_radii; ++k) {
            const double u = n_radii == 1 ? 0.0 : static_cast<double>(k) / (n_radii - 1);
            fam.balls.push_back({c, r_lo * std::pow(r_hi / r_lo, u)});
        }
    Rng rng(seed);
    for (int i = 0; i < n_random; ++i) {
        Point c{rng.uniform(center_lo, center_hi), dim == 2 ? rng.uniform(center_lo, center_hi) : 0.0};
        fam.balls.push_back({c, rng.log_uniform(r_lo, r_hi)});
    }
    return fam;
}

BallFamily BallFamily::refined() const {
    BallFamily f = *this;
    for (const auto& b : balls) {
        f.balls.push_back({b.center, b.radius / 4});
        f.balls.push_back({b.center, b.radius / 16});
    }
    return f;
}

double a1_ratio(const Weight& w, const Ball& b, int dim) {
    const double inf = w.ball_infimum(b, dim);
    if (!(inf > 0)) throw Error(ErrorCode::degenerate_weight, "weight vanishes on a tested ball");
    return measure_ball(w, b, dim) / ball_volume(dim, b.radius) / inf;
}

double aq_ratio(const Weight& w, double q, const Ball& b, int dim) {
    if (!(q > 1)) throw Error(ErrorCode::invalid_argument, "A_q ratio needs q > 1");
    const double vol = ball_volume(dim, b.radius);
    const double avg = measure_ball(w, b, dim) / vol;
    const double dual = w.ball_integral(b, dim, 1.0 / (1.0 - q)) / vol;
    if (!std::isfinite(dual)) return kInf;
    return avg * std::pow(dual, q - 1.0);
}

double estimate_a1_constant(const Weight& w, const BallFamily& fam, int dim) {
    if (fam.balls.empty()) throw Error(ErrorCode::invalid_argument, "empty ball family");
    std::vector<double> r(fam.balls.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(r.size()); ++i)
        r[i] = w.ball_infimum(fam.balls[i], dim) > 0 ? a1_ratio(w, fam.balls[i], dim) : -1.0;
    for (double v : r)
        if (v < 0) throw Error(ErrorCode::degenerate_weight, "weight vanishes on a tested ball");
    return *std::max_element(r.begin(), r.end());
}

double estimate_aq_constant(const Weight& w, double q, const BallFamily& fam, int dim) {
    if (fam.balls.empty()) throw Error(ErrorCode::invalid_argument, "empty ball family");
    std::vector<double> r(fam.balls.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(r.size()); ++i)
        r[i] = aq_ratio(w, q, fam.balls[i], dim);
    return *std::max_element(r.begin(), r.end());
}

namespace {

// "ω ∈ A_q" as seen by the family: finite estimate that does not grow (beyond 25%)
// when small balls are added.
bool bounded_at(const Weight& w, double q, const BallFamily& fam, const BallFamily& fine, int dim) {
    if (q == 1.0) {
        try {
            const double a = estimate_a1_constant(w, fam, dim);
            const double b = estimate_a1_constant(w, fine, dim);
            return std::isfinite(a) && b <= 1.25 * a;
        } catch (const Error& e) {
            if (e.code() == ErrorCode::degenerate_weight) return false;
            throw;
        }
    }
    const double a = estimate_aq_constant(w, q, fam, dim);
    const double b = estimate_aq_constant(w, q, fine, dim);
    return std::isfinite(a) && std::isfinite(b) && b <= 1.25 * a;
}

}  // namespace

CriticalIndexInterval critical_index_estimate(const Weight& w, const BallFamily& fam, int dim, double width) {
    CriticalIndexInterval out;
    const BallFamily fine = fam.refined();
    const bool a1 = bounded_at(w, 1.0, fam, fine, dim);
    out.trace.push_back({1.0, a1});
    if (a1) {
        out.lo = out.hi = 1.0;
        return out;
    }
    double lo = 1.0, hi = 2.0;
    while (true) {
        const bool ok = bounded_at(w, hi, fam, fine, dim);
        out.trace.push_back({hi, ok});
        if (ok) break;
        lo = hi;
        hi *= 2.0;
        if (hi > 64.0) throw Error(ErrorCode::non_convergent, "no bounded A_q found up to q = 64");
    }
    while (hi - lo > width) {
        const double mid = 0.5 * (lo + hi);
        const bool ok = bounded_at(w, mid, fam, fine, dim);
        out.trace.push_back({mid, ok});
        (ok ? hi : lo) = mid;
    }
    out.lo = lo;
    out.hi = hi;
    return out;
}

std::vector<DoublingStep> doubling_profile(const Weight& w, const Ball& b, int dim, int k_max, double a1_constant) {
    if (k_max < 1 || k_max > 12) throw Error(ErrorCode::invalid_argument, "k_max must lie in [1, 12]");
    std::vector<DoublingStep> out;
    const double base = measure_ball(w, b, dim);
    double prev = base;
    for (int k = 1; k <= k_max; ++k) {
        const double cur = measure_ball(w, b.dilated(std::ldexp(1.0, k)), dim);
        DoublingStep s;
        s.k = k;
        s.ratio = cur / base;
        s.exponent = std::log2(cur / prev);
        if (!std::isnan(a1_constant)) {
            s.upper_bound = a1_constant * std::ldexp(1.0, k * dim);
            s.upper_holds = s.ratio <= s.upper_bound * (1 + 1e-12);
        }
        s.lower_bound = std::ldexp(1.0, k * dim);
        s.lower_holds = s.ratio >= s.lower_bound * (1 - 1e-12);
        out.push_back(s);
        prev = cur;
    }
    return out;
}

AvgBound avg_bound_check(const Weight& w, const GridFunction& f, const Ball& b, double q, double constant) {
    if (!f.spec.contains(b)) throw Error(ErrorCode::out_of_domain, "ball leaves the grid");
    double vol = 0.0, l1 = 0.0, lq = 0.0, wb = 0.0;
    const double hv = f.spec.cell_volume();
    for_each_node(f.spec, Region::ball(b), [&](std::size_t i) {
        const double m = cell_mass(f.spec, w, i);
        vol += hv;
        wb += m;
        l1 += std::fabs(f.values[i]) * hv;
        lq += std::pow(std::fabs(f.values[i]), q) * m;
    });
    AvgBound r;
    r.lhs = vol > 0 ? l1 / vol : 0.0;
    r.rhs = wb > 0 ? std::pow(constant / wb * lq, 1.0 / q) : 0.0;
    r.slack = r.rhs - r.lhs;
    return r;
}

WeightReport weight_report(const Weight& w, const BallFamily& fam, int dim, const std::vector<double>& qs,
                           const Ball& doubling_ball, int k_max) {
    WeightReport rep;
    rep.weight = w.describe();
    try {
        rep.a1_constant_est = estimate_a1_constant(w, fam, dim);
    } catch (const Error&) {
        rep.a1_constant_est = kInf;
    }
    for (double q : qs) rep.aq_constant_est[q] = estimate_aq_constant(w, q, fam, dim);
    rep.critical_index = critical_index_estimate(w, fam, dim);
    for (const auto& s : doubling_profile(w, doubling_ball, dim, k_max, std::nan("")))
        rep.doubling_exponents.push_back({s.k, s.exponent});
    return rep;
}

}  // namespace hardylab
