#include "hardylab/grid.hpp"

#include <algorithm>
#include <sstream>

#include "hardylab/mollifier.hpp"

namespace hardylab {

GridSpec GridSpec::make(int dim, Point lo, Point hi, double h) {
    if (dim != 1 && dim != 2) throw Error(ErrorCode::invalid_argument, "dim must be 1 or 2");
    if (!(h > 0)) throw Error(ErrorCode::invalid_argument, "h must be positive");
    GridSpec s;
    s.dim = dim;
    s.lo = lo;
    s.hi = hi;
    s.h = h;
    if (dim == 1) {
        s.lo[1] = s.hi[1] = 0.0;
    }
    for (int k = 0; k < dim; ++k) {
        const double m = (hi[k] - lo[k]) / h;
        const double rm = std::round(m);
        if (std::fabs(m - rm) > 1e-12 * std::max(1.0, std::fabs(m)) * 16)
            throw Error(ErrorCode::invalid_argument, "box length is not a multiple of h");
        if (rm < 8) throw Error(ErrorCode::invalid_argument, "need at least 8 nodes per axis");
        s.count[k] = static_cast<std::size_t>(rm);
    }
    s.count[1] = dim == 1 ? 1 : s.count[1];
    return s;
}

GridSpec GridSpec::covering(int dim, const Ball& b, double h) {
    Point lo{0.0, 0.0}, hi{0.0, 0.0};
    for (int k = 0; k < dim; ++k) {
        double a = std::floor((b.center[k] - b.radius) / h);
        double c = std::ceil((b.center[k] + b.radius) / h);
        if (c - a < 8) {
            const double extra = std::ceil((8 - (c - a)) / 2.0);
            a -= extra;
            c += extra;
        }
        lo[k] = a * h;
        hi[k] = c * h;
    }
    return make(dim, lo, hi, h);
}

Point GridSpec::cell_lo(std::size_t idx) const {
    Point x = node(idx);
    x[0] -= 0.5 * h;
    if (dim == 2) x[1] -= 0.5 * h;
    return x;
}

Point GridSpec::cell_hi(std::size_t idx) const {
    Point x = node(idx);
    x[0] += 0.5 * h;
    if (dim == 2) x[1] += 0.5 * h;
    return x;
}

bool GridSpec::contains(const Ball& b) const {
    for (int k = 0; k < dim; ++k)
        if (b.center[k] - b.radius < lo[k] - 1e-12 || b.center[k] + b.radius > hi[k] + 1e-12) return false;
    return true;
}

bool GridSpec::intersects(const Ball& b) const {
    double d2 = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = 0.0;
        if (b.center[k] < lo[k]) d = lo[k] - b.center[k];
        else if (b.center[k] > hi[k]) d = b.center[k] - hi[k];
        d2 += d * d;
    }
    return std::sqrt(d2) < b.radius;
}

GridSpec GridSpec::refined() const { return make(dim, lo, hi, 0.5 * h); }

std::pair<long, long> GridSpec::axis_range(int axis, double a, double b) const {
    const long n = static_cast<long>(count[axis]);
    long first = static_cast<long>(std::ceil((a - lo[axis]) / h - 0.5));
    long last = static_cast<long>(std::floor((b - lo[axis]) / h - 0.5));
    first = std::max(first, 0L);
    last = std::min(last, n - 1);
    return {first, last};
}

GridFunction GridFunction::sample(const GridSpec& s, const std::function<double(const Point&)>& fn,
                                  std::optional<Ball> hint) {
    GridFunction f(s);
    for (std::size_t i = 0; i < s.size(); ++i) f.values[i] = fn(s.node(i));
    f.support_hint = hint;
    return f;
}

void GridFunction::check_invariants() const {
    if (values.size() != spec.size()) throw Error(ErrorCode::invalid_argument, "value count does not match grid");
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw Error(ErrorCode::invalid_argument, "non-finite grid value");
        if (support_hint && values[i] != 0.0 &&
            distance(spec.node(i), support_hint->center) >= support_hint->radius + 2.0 * spec.h)
            throw Error(ErrorCode::invalid_argument, "value outside the support hint");
    }
}

bool GridFunction::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

std::optional<std::array<std::pair<long, long>, 2>> GridFunction::nonzero_box() const {
    long x0 = -1, x1 = -1, y0 = -1, y1 = -1;
    const std::size_t nx = spec.count[0];
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (values[i] == 0.0) continue;
        const long ix = static_cast<long>(i % nx), iy = static_cast<long>(i / nx);
        if (x0 < 0) {
            x0 = x1 = ix;
            y0 = y1 = iy;
        } else {
            x0 = std::min(x0, ix);
            x1 = std::max(x1, ix);
            y0 = std::min(y0, iy);
            y1 = std::max(y1, iy);
        }
    }
    if (x0 < 0) return std::nullopt;
    return std::array<std::pair<long, long>, 2>{std::pair{x0, x1}, std::pair{y0, y1}};
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
    if (!(o.spec == spec)) throw Error(ErrorCode::invalid_argument, "grid mismatch in +=");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] += o.values[i];
    if (support_hint && o.support_hint) {
        const double r = std::max(support_hint->radius,
                                  distance(support_hint->center, o.support_hint->center) + o.support_hint->radius);
        support_hint->radius = r;
    } else {
        support_hint.reset();
    }
    return *this;
}

GridFunction& GridFunction::operator*=(double c) {
    for (auto& v : values) v *= c;
    return *this;
}

GridFunction operator*(double c, const GridFunction& f) {
    GridFunction g = f;
    g *= c;
    return g;
}

GridFunction operator+(const GridFunction& a, const GridFunction& b) {
    GridFunction g = a;
    g += b;
    return g;
}

GridFunction operator-(const GridFunction& a, const GridFunction& b) {
    GridFunction g = a;
    g += -1.0 * b;
    return g;
}

namespace {

long aligned_offset(double from, double to, double h) {
    const double m = (from - to) / h;
    const double r = std::round(m);
    if (std::fabs(m - r) > 1e-6) throw Error(ErrorCode::invalid_argument, "grids are not aligned");
    return static_cast<long>(r);
}

}  // namespace

void accumulate(GridFunction& target, const GridFunction& source, double coeff) {
    const GridSpec& t = target.spec;
    const GridSpec& s = source.spec;
    if (t.dim != s.dim || std::fabs(t.h - s.h) > 1e-12 * t.h)
        throw Error(ErrorCode::invalid_argument, "accumulate needs equal spacing");
    const long ox = aligned_offset(s.lo[0], t.lo[0], t.h);
    const long oy = s.dim == 2 ? aligned_offset(s.lo[1], t.lo[1], t.h) : 0;
    for (std::size_t iy = 0; iy < s.count[1]; ++iy)
        for (std::size_t ix = 0; ix < s.count[0]; ++ix) {
            const double v = source.values[s.index(ix, iy)];
            if (v == 0.0) continue;
            const long tx = static_cast<long>(ix) + ox, ty = static_cast<long>(iy) + oy;
            if (tx < 0 || ty < 0 || tx >= static_cast<long>(t.count[0]) || ty >= static_cast<long>(t.count[1]))
                throw Error(ErrorCode::out_of_domain, "source support leaves the target grid");
            target.values[t.index(static_cast<std::size_t>(tx), static_cast<std::size_t>(ty))] += coeff * v;
        }
}

GridFunction pad(const GridFunction& f, double margin) {
    const GridSpec& s = f.spec;
    const double grow = std::ceil(margin / s.h) * s.h;
    Point lo = s.lo, hi = s.hi;
    for (int k = 0; k < s.dim; ++k) {
        lo[k] -= grow;
        hi[k] += grow;
    }
    GridFunction out(GridSpec::make(s.dim, lo, hi, s.h));
    out.support_hint = f.support_hint;
    accumulate(out, f, 1.0);
    return out;
}

GridFunction crop(const GridFunction& f, const Ball& keep) {
    const GridSpec& s = f.spec;
    std::array<std::pair<long, long>, 2> r{};
    for (int k = 0; k < 2; ++k) r[k] = {0, 0};
    for (int k = 0; k < s.dim; ++k) {
        r[k] = s.axis_range(k, keep.center[k] - keep.radius - s.h, keep.center[k] + keep.radius + s.h);
        // at least 8 nodes per axis
        while (r[k].second - r[k].first + 1 < 8) {
            if (r[k].first > 0) --r[k].first;
            if (r[k].second - r[k].first + 1 < 8 && r[k].second + 1 < static_cast<long>(s.count[k])) ++r[k].second;
            if (r[k].first == 0 && r[k].second + 1 == static_cast<long>(s.count[k])) break;
        }
    }
    Point lo{s.lo[0] + static_cast<double>(r[0].first) * s.h, 0.0};
    Point hi{s.lo[0] + static_cast<double>(r[0].second + 1) * s.h, 0.0};
    if (s.dim == 2) {
        lo[1] = s.lo[1] + static_cast<double>(r[1].first) * s.h;
        hi[1] = s.lo[1] + static_cast<double>(r[1].second + 1) * s.h;
    }
    GridSpec sub = GridSpec::make(s.dim, lo, hi, s.h);
    GridFunction g(sub);
    g.support_hint = f.support_hint;
    for (std::size_t iy = 0; iy < s.count[1]; ++iy)
        for (std::size_t ix = 0; ix < s.count[0]; ++ix) {
            const double v = f.values[s.index(ix, iy)];
            const long lx = static_cast<long>(ix) - r[0].first, ly = static_cast<long>(iy) - r[1].first;
            const bool inside = lx >= 0 && ly >= 0 && lx < static_cast<long>(sub.count[0]) &&
                                ly < static_cast<long>(sub.count[1]);
            if (inside) g.values[sub.index(static_cast<std::size_t>(lx), static_cast<std::size_t>(ly))] = v;
            else if (v != 0.0) throw Error(ErrorCode::invalid_argument, "crop would drop nonzero values");
        }
    return g;
}

void for_each_node(const GridSpec& s, const Region& region, const std::function<void(std::size_t)>& fn) {
    std::pair<long, long> rx{0, static_cast<long>(s.count[0]) - 1}, ry{0, static_cast<long>(s.count[1]) - 1};
    if (region.kind != Region::Kind::all && std::isfinite(region.outer)) {
        rx = s.axis_range(0, region.center[0] - region.outer, region.center[0] + region.outer);
        if (s.dim == 2) ry = s.axis_range(1, region.center[1] - region.outer, region.center[1] + region.outer);
    }
    for (long iy = ry.first; iy <= ry.second; ++iy)
        for (long ix = rx.first; ix <= rx.second; ++ix) {
            const std::size_t idx = s.index(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy));
            if (region.contains(s.node(idx))) fn(idx);
        }
}

std::vector<std::size_t> nodes_in(const GridSpec& s, const Region& region) {
    std::vector<std::size_t> out;
    for_each_node(s, region, [&](std::size_t i) { out.push_back(i); });
    return out;
}

QuadratureResult integrate(const GridFunction& f, const Region& region) {
    const auto idx = nodes_in(f.spec, region);
    QuadratureResult r;
    if (region.kind != Region::Kind::all && std::isfinite(region.outer) &&
        !f.spec.intersects({region.center, region.outer})) {
        r.degenerate = true;
        return r;
    }
    const double hv = f.spec.cell_volume();
    r.value = ordered_sum(idx.size(), [&](std::size_t k) { return f.values[idx[k]]; }) * hv;
    return r;
}

double cell_mass(const GridSpec& s, const Weight& w, std::size_t idx, double gamma) {
    if (w.factors().empty()) return std::pow(w.scale(), gamma) * s.cell_volume();
    return w.box_integral(s.cell_lo(idx), s.cell_hi(idx), s.dim, gamma);
}

double weighted_lq_integral(const GridFunction& f, const Weight& w, double q, const Region& region) {
    std::vector<std::size_t> idx;
    for_each_node(f.spec, region, [&](std::size_t i) {
        if (f.values[i] != 0.0) idx.push_back(i);
    });
    return ordered_sum(idx.size(), [&](std::size_t k) {
        const std::size_t i = idx[k];
        return std::pow(std::fabs(f.values[i]), q) * cell_mass(f.spec, w, i);
    });
}

double weighted_lq_norm(const GridFunction& f, const Weight& w, double q, const Region& region) {
    if (!(q >= 1.0)) throw Error(ErrorCode::invalid_argument, "q must be ≥ 1");
    if (std::isinf(q)) {
        double m = 0.0;
        for_each_node(f.spec, region, [&](std::size_t i) { m = std::max(m, std::fabs(f.values[i])); });
        return m;
    }
    return std::pow(weighted_lq_integral(f, w, q, region), 1.0 / q);
}

double moment(const GridFunction& f, const Point& center, const MultiIndex& alpha, const Region& region) {
    if (alpha.order() > kMaxMomentOrder) throw Error(ErrorCode::invalid_argument, "moment order above cap");
    std::vector<std::size_t> idx;
    for_each_node(f.spec, region, [&](std::size_t i) {
        if (f.values[i] != 0.0) idx.push_back(i);
    });
    const double hv = f.spec.cell_volume();
    return ordered_sum(idx.size(), [&](std::size_t k) {
               const std::size_t i = idx[k];
               return f.values[i] * monomial(f.spec.node(i), center, alpha);
           }) *
           hv;
}

namespace {

// out[i] = Σ_k w[k+K] in[i+k] over i ∈ [ilo, ihi], with in supported on [jlo, jhi].
void convolve_line(const double* in, long jlo, long jhi, const std::vector<double>& w, long K, double* out,
                   long ilo, long ihi) {
    const double* wc = w.data() + K;
#pragma omp parallel for schedule(static) if (ihi - ilo > 4096)
    for (long i = ilo; i <= ihi; ++i) {
        const long k0 = std::max(-K, jlo - i), k1 = std::min(K, jhi - i);
        double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
        long k = k0;
        for (; k + 3 <= k1; k += 4) {
            a0 += wc[k] * in[i + k];
            a1 += wc[k + 1] * in[i + k + 1];
            a2 += wc[k + 2] * in[i + k + 2];
            a3 += wc[k + 3] * in[i + k + 3];
        }
        for (; k <= k1; ++k) a0 += wc[k] * in[i + k];
        out[i] = (a0 + a1) + (a2 + a3);
    }
}

}  // namespace

ConvolutionResult convolve_scale(const GridFunction& f, const Mollifier& phi, double t) {
    if (!(t > 0.0 && t <= 1.0)) throw Error(ErrorCode::invalid_argument, "scale t must lie in (0, 1]");
    if (phi.dim() != f.spec.dim) throw Error(ErrorCode::invalid_argument, "mollifier dimension mismatch");
    const GridSpec& s = f.spec;
    ConvolutionResult res;
    res.sub_grid_scale = t <= 0.25 * s.h;
    res.g = GridFunction(s);
    const auto box = f.nonzero_box();
    if (!box) return res;
    const long nx = static_cast<long>(s.count[0]), ny = static_cast<long>(s.count[1]);

    if (s.dim == 1) {
        const auto w = phi.taps_1d(s.h, t);
        const long K = static_cast<long>(w.size() / 2);
        const auto [jlo, jhi] = (*box)[0];
        convolve_line(f.values.data(), jlo, jhi, w, K, res.g.values.data(), std::max(0L, jlo - K),
                      std::min(nx - 1, jhi + K));
        return res;
    }

    const auto [xlo, xhi] = (*box)[0];
    const auto [ylo, yhi] = (*box)[1];
    if (phi.separable()) {
        const auto w = phi.taps_1d(s.h, t);
        const long K = static_cast<long>(w.size() / 2);
        const long oxlo = std::max(0L, xlo - K), oxhi = std::min(nx - 1, xhi + K);
        const long oylo = std::max(0L, ylo - K), oyhi = std::min(ny - 1, yhi + K);
        // pass along x on the nonzero rows
        std::vector<double> tmp(s.size(), 0.0);
        for (long iy = ylo; iy <= yhi; ++iy) {
            const double* row = f.values.data() + iy * nx;
            convolve_line(row, xlo, xhi, w, K, tmp.data() + iy * nx, oxlo, oxhi);
        }
        // pass along y, column by column through a contiguous buffer
        std::vector<double> col(static_cast<std::size_t>(ny)), out(static_cast<std::size_t>(ny));
        for (long ix = oxlo; ix <= oxhi; ++ix) {
            for (long iy = ylo; iy <= yhi; ++iy) col[iy] = tmp[iy * nx + ix];
            convolve_line(col.data(), ylo, yhi, w, K, out.data(), oylo, oyhi);
            for (long iy = oylo; iy <= oyhi; ++iy) res.g.values[iy * nx + ix] = out[iy];
        }
        return res;
    }

    int Ki = 0;
    const auto w = phi.taps_2d(s.h, t, Ki);
    const long K = Ki, n = 2 * K + 1;
    const long oxlo = std::max(0L, xlo - K), oxhi = std::min(nx - 1, xhi + K);
    const long oylo = std::max(0L, ylo - K), oyhi = std::min(ny - 1, yhi + K);
    for (long iy = oylo; iy <= oyhi; ++iy)
        for (long ix = oxlo; ix <= oxhi; ++ix) {
            double acc = 0.0;
            const long ky0 = std::max(-K, ylo - iy), ky1 = std::min(K, yhi - iy);
            const long kx0 = std::max(-K, xlo - ix), kx1 = std::min(K, xhi - ix);
            for (long ky = ky0; ky <= ky1; ++ky)
                for (long kx = kx0; kx <= kx1; ++kx)
                    acc += w[(ky + K) * n + (kx + K)] * f.values[(iy + ky) * nx + (ix + kx)];
            res.g.values[iy * nx + ix] = acc;
        }
    return res;
}

}  // namespace hardylab
