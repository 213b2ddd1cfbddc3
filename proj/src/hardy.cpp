#include "hardylab/hardy.hpp"

#include <algorithm>

namespace hardylab {

ScaleGrid ScaleGrid::dyadic(double h) { return dense(h, 1); }

ScaleGrid ScaleGrid::dense(double h, int per_octave) {
    if (!(h > 0) || per_octave < 1) throw Error(ErrorCode::invalid_argument, "bad scale grid parameters");
    int J = 0;
    while (std::ldexp(1.0, -J) > 0.5 * h) ++J;
    ScaleGrid s;
    for (int j = 0; j <= J * per_octave; ++j) s.t.push_back(std::exp2(-static_cast<double>(j) / per_octave));
    return s;
}

void ScaleGrid::check(double h) const {
    if (t.empty()) throw Error(ErrorCode::invalid_argument, "empty scale grid");
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!(t[i] > 0 && t[i] <= 1.0)) throw Error(ErrorCode::invalid_argument, "scale outside (0,1]");
        if (i && !(t[i] < t[i - 1])) throw Error(ErrorCode::invalid_argument, "scales must decrease");
    }
    if (t.back() < 0.25 * h * (1 - 1e-12)) throw Error(ErrorCode::invalid_argument, "smallest scale below h/4");
}

MaximalResult local_maximal(const GridFunction& f, const Mollifier& phi, const ScaleGrid& scales) {
    if (scales.t.empty()) throw Error(ErrorCode::invalid_argument, "empty scale grid");
    MaximalResult r;
    r.m = GridFunction(f.spec);
    for (double t : scales.t) {
        auto c = convolve_scale(f, phi, t);
        r.sub_grid_scale = r.sub_grid_scale || c.sub_grid_scale;
        for (std::size_t i = 0; i < r.m.values.size(); ++i)
            r.m.values[i] = std::max(r.m.values[i], std::fabs(c.g.values[i]));
    }
    return r;
}

HpNormReport hp_norm(const GridFunction& f, const Weight& w, double p, const Mollifier& phi,
                     const ScaleGrid& scales) {
    if (!(p > 0 && p <= 1)) throw Error(ErrorCode::invalid_argument, "p must lie in (0, 1]");
    scales.check(f.spec.h);
    HpNormReport rep;
    rep.h = f.spec.h;
    rep.scale_count = static_cast<int>(scales.t.size());
    rep.margin = phi.radius() * scales.t.front();
    const auto box = f.nonzero_box();
    if (!box) return rep;

    // m_φ f vanishes beyond the support enlarged by the mollifier reach; that set
    // must sit inside the grid or mass would be lost at the boundary.
    const long reach = static_cast<long>(std::ceil(rep.margin / f.spec.h + 0.5));
    for (int k = 0; k < f.spec.dim; ++k) {
        const auto [a, b] = (*box)[k];
        if (a - reach < 0 || b + reach >= static_cast<long>(f.spec.count[k]))
            throw Error(ErrorCode::domain_too_small, "support plus mollifier margin exceeds the grid");
    }

    const auto mr = local_maximal(f, phi, scales);
    rep.sub_grid_scale = mr.sub_grid_scale;
    const GridFunction& m = mr.m;
    rep.integral = weighted_lq_integral(m, w, p);
    rep.value = std::pow(rep.integral, 1.0 / p);

    // Outer-annulus extrapolation of the exterior share.
    Point c{0.0, 0.0};
    if (f.support_hint) {
        c = f.support_hint->center;
    } else {
        for (int k = 0; k < f.spec.dim; ++k)
            c[k] = f.spec.lo[k] + 0.5 * static_cast<double>((*box)[k].first + (*box)[k].second + 1) * f.spec.h;
    }
    double rmax = 0.0;
    for (std::size_t i = 0; i < m.values.size(); ++i)
        if (m.values[i] != 0.0) rmax = std::max(rmax, distance(m.spec.node(i), c));
    if (rmax > 0) {
        const double i1 = weighted_lq_integral(m, w, p, Region::annulus(c, rmax / 4, rmax / 2));
        const double i2 = weighted_lq_integral(m, w, p, Region::annulus(c, rmax / 2, 2 * rmax));
        if (i1 > 0 && i2 < i1) {
            const double rho = i2 / i1;
            rep.tail_estimate = i2 * rho / (1 - rho);
        } else {
            rep.tail_estimate = i2;
        }
    }
    return rep;
}

HpNormReport hp_norm(const GridFunction& f, const Weight& w, double p) {
    return hp_norm(f, w, p, Mollifier::gaussian(f.spec.dim), ScaleGrid::dyadic(f.spec.h));
}

GridFunction pad_for_norm(const GridFunction& f) {
    const Mollifier phi = Mollifier::gaussian(f.spec.dim);
    return pad(f, phi.radius() + 2.0 * f.spec.h);
}

double atomic_norm_upper(const std::vector<double>& coeffs, double p) {
    if (!(p > 0)) throw Error(ErrorCode::invalid_argument, "p must be positive");
    double s = 0.0;
    for (double c : coeffs) s += std::pow(std::fabs(c), p);
    return std::pow(s, 1.0 / p);
}

}  // namespace hardylab
