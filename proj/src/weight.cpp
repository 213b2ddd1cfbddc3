#include "hardylab/weight.hpp"

#include <algorithm>
#include <sstream>

namespace hardylab {

namespace {

// 6-point Gauss-Legendre on [-1, 1].
constexpr double kGlNode[6] = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969,
                               0.2386191860831969,  0.6612093864662645,  0.9324695142031521};
constexpr double kGlWeight[6] = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910,
                                 0.4679139345726910, 0.3607615730481386, 0.1713244923791704};

// Antiderivative of |u|^b, odd in u.
double power_antiderivative(double u, double b) {
    const double m = std::pow(std::fabs(u), b + 1.0) / (b + 1.0);
    return u < 0 ? -m : m;
}

double box_distance(const Point& lo, const Point& hi, const Point& x, int dim) {
    double d2 = 0.0;
    for (int k = 0; k < dim; ++k) {
        double d = 0.0;
        if (x[k] < lo[k]) d = lo[k] - x[k];
        else if (x[k] > hi[k]) d = x[k] - hi[k];
        d2 += d * d;
    }
    return std::sqrt(d2);
}

double box_diameter(const Point& lo, const Point& hi, int dim) {
    double d2 = 0.0;
    for (int k = 0; k < dim; ++k) d2 += (hi[k] - lo[k]) * (hi[k] - lo[k]);
    return std::sqrt(d2);
}

double box_volume(const Point& lo, const Point& hi, int dim) {
    double v = 1.0;
    for (int k = 0; k < dim; ++k) v *= hi[k] - lo[k];
    return v;
}

}  // namespace

Weight Weight::constant(double c) {
    if (!(c > 0) || !std::isfinite(c)) throw Error(ErrorCode::invalid_argument, "constant weight needs c > 0");
    Weight w;
    w.family_ = Family::constant;
    w.scale_ = c;
    return w;
}

Weight Weight::power(double a) {
    Weight w;
    w.family_ = Family::power;
    w.factors_.push_back({a, {0.0, 0.0}});
    return w;
}

Weight Weight::shifted_power(double a, Point x0) {
    Weight w;
    w.family_ = Family::shifted_power;
    w.factors_.push_back({a, x0});
    return w;
}

Weight Weight::product(const Weight& u, const Weight& v) {
    if (u.factors_.size() + v.factors_.size() > 2)
        throw Error(ErrorCode::invalid_argument, "product weights take at most two factors");
    Weight w;
    w.scale_ = u.scale_ * v.scale_;
    w.factors_ = u.factors_;
    w.factors_.insert(w.factors_.end(), v.factors_.begin(), v.factors_.end());
    if (w.factors_.empty()) w.family_ = Family::constant;
    else if (w.factors_.size() == 1) w.family_ = (u.factors_.empty() ? v : u).family_;
    else w.family_ = Family::product;
    return w;
}

Weight Weight::scaled(double c) const {
    if (!(c > 0)) throw Error(ErrorCode::invalid_argument, "weight scale must be positive");
    Weight w = *this;
    w.scale_ *= c;
    return w;
}

bool Weight::locally_integrable(int dim) const {
    return std::all_of(factors_.begin(), factors_.end(), [dim](const Factor& f) { return f.a > -dim; });
}

double Weight::value_pow(const Point& x, double gamma) const {
    double v = std::pow(scale_, gamma);
    for (const auto& f : factors_) {
        const double b = f.a * gamma;
        if (b == 0.0) continue;
        const double d = distance(x, f.x0);
        if (d == 0.0) return b < 0 ? kInf : 0.0;
        v *= std::pow(d, b);
    }
    return v;
}

namespace {

struct BoxQuad {
    const Weight& w;
    int dim;
    double gamma;

    double gauss(const Point& lo, const Point& hi) const {
        const double cx = 0.5 * (lo[0] + hi[0]), hx = 0.5 * (hi[0] - lo[0]);
        if (dim == 1) {
            double acc = 0.0;
            for (int i = 0; i < 6; ++i) acc += kGlWeight[i] * w.value_pow({cx + hx * kGlNode[i], 0.0}, gamma);
            return acc * hx;
        }
        const double cy = 0.5 * (lo[1] + hi[1]), hy = 0.5 * (hi[1] - lo[1]);
        double acc = 0.0;
        for (int i = 0; i < 6; ++i)
            for (int j = 0; j < 6; ++j)
                acc += kGlWeight[i] * kGlWeight[j] *
                       w.value_pow({cx + hx * kGlNode[i], cy + hy * kGlNode[j]}, gamma);
        return acc * hx * hy;
    }

    // Tiny box containing a singular point: integrate the singular factor exactly
    // (1D) or over the equal-area disk (2D), other factors frozen at the center.
    double singular_cell(const Point& lo, const Point& hi, const Weight::Factor& s) const {
        const double b = s.a * gamma;
        Point c{0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])};
        double others = std::pow(w.scale(), gamma);
        for (const auto& f : w.factors())
            if (&f != &s && f.a * gamma != 0.0) others *= std::pow(distance(c, f.x0), f.a * gamma);
        if (dim == 1) {
            if (b <= -1.0) return kInf;
            return others * (power_antiderivative(hi[0] - s.x0[0], b) - power_antiderivative(lo[0] - s.x0[0], b));
        }
        if (b <= -2.0) return kInf;
        const double rho = std::sqrt(box_volume(lo, hi, dim) / kPi);
        return others * 2.0 * kPi * std::pow(rho, b + 2.0) / (b + 2.0);
    }

    double adaptive(const Point& lo, const Point& hi, int depth) const {
        const double diam = box_diameter(lo, hi, dim);
        const Weight::Factor* near = nullptr;
        for (const auto& f : w.factors()) {
            if (f.a * gamma == 0.0) continue;
            if (box_distance(lo, hi, f.x0, dim) < diam) near = &f;
        }
        if (!near) return gauss(lo, hi);
        const int max_depth = dim == 1 ? 48 : 18;
        if (depth >= max_depth) return singular_cell(lo, hi, *near);
        double acc = 0.0;
        if (dim == 1) {
            const double m = 0.5 * (lo[0] + hi[0]);
            acc += adaptive(lo, {m, 0.0}, depth + 1);
            acc += adaptive({m, 0.0}, hi, depth + 1);
        } else {
            const double mx = 0.5 * (lo[0] + hi[0]), my = 0.5 * (lo[1] + hi[1]);
            acc += adaptive({lo[0], lo[1]}, {mx, my}, depth + 1);
            acc += adaptive({mx, lo[1]}, {hi[0], my}, depth + 1);
            acc += adaptive({lo[0], my}, {mx, hi[1]}, depth + 1);
            acc += adaptive({mx, my}, {hi[0], hi[1]}, depth + 1);
        }
        return acc;
    }
};

}  // namespace

double Weight::box_integral(const Point& lo, const Point& hi, int dim, double gamma) const {
    const double sg = std::pow(scale_, gamma);
    bool trivial = true;
    for (const auto& f : factors_) trivial = trivial && f.a * gamma == 0.0;
    if (trivial) return sg * box_volume(lo, hi, dim);
    if (dim == 1 && factors_.size() == 1) {
        const auto& f = factors_[0];
        const double b = f.a * gamma;
        if (b <= -1.0 && lo[0] <= f.x0[0] && f.x0[0] <= hi[0]) return kInf;
        return sg * (power_antiderivative(hi[0] - f.x0[0], b) - power_antiderivative(lo[0] - f.x0[0], b));
    }
    for (const auto& f : factors_) {
        const double b = f.a * gamma;
        if (b <= -dim && box_distance(lo, hi, f.x0, dim) == 0.0) return kInf;
    }
    return BoxQuad{*this, dim, gamma}.adaptive(lo, hi, 0);
}

std::optional<double> Weight::ball_integral_closed(const Ball& ball, int dim, double gamma) const {
    const double r = ball.radius;
    const double sg = std::pow(scale_, gamma);
    bool trivial = true;
    for (const auto& f : factors_) trivial = trivial && f.a * gamma == 0.0;
    if (trivial) return sg * ball_volume(dim, r);
    if (factors_.size() != 1) {
        if (dim == 1) return box_integral({ball.center[0] - r, 0.0}, {ball.center[0] + r, 0.0}, 1, gamma);
        return std::nullopt;
    }
    const auto& f = factors_[0];
    const double b = f.a * gamma;
    if (dim == 1) return box_integral({ball.center[0] - r, 0.0}, {ball.center[0] + r, 0.0}, 1, gamma);
    const double d = distance(ball.center, f.x0);
    if (d == 0.0) {
        if (b <= -2.0) return kInf;
        return sg * 2.0 * kPi * std::pow(r, b + 2.0) / (b + 2.0);
    }
    if (d < r) {
        if (b <= -2.0) return kInf;
        // Polar coordinates about the singular point; the boundary distance R(θ)
        // is analytic and periodic, so the trapezoid rule converges spectrally.
        const int m = 512;
        double acc = 0.0;
        for (int i = 0; i < m; ++i) {
            const double th = 2.0 * kPi * (i + 0.5) / m;
            // ray from x0 along θ; the ball center sits at offset (c − x0)
            const double ux = ball.center[0] - f.x0[0], uy = ball.center[1] - f.x0[1];
            const double proj = ux * std::cos(th) + uy * std::sin(th);
            const double R = proj + std::sqrt(std::max(0.0, r * r - (d * d - proj * proj)));
            acc += std::pow(R, b + 2.0) / (b + 2.0);
        }
        return sg * acc * 2.0 * kPi / m;
    }
    return std::nullopt;
}

double Weight::ball_integral(const Ball& ball, int dim, double gamma) const {
    if (auto v = ball_integral_closed(ball, dim, gamma)) return *v;
    // 2D fallback: polar Gauss about the ball center with radial panels split near
    // the singular radii.
    const double r = ball.radius;
    std::vector<double> breaks{0.0, r};
    for (const auto& f : factors_) {
        const double d = distance(ball.center, f.x0);
        if (d > 0 && d < r) breaks.push_back(d);
    }
    std::sort(breaks.begin(), breaks.end());
    const int m = 256;
    double acc = 0.0;
    for (std::size_t p = 0; p + 1 < breaks.size(); ++p) {
        const int panels = 16;
        for (int q = 0; q < panels; ++q) {
            const double a = breaks[p] + (breaks[p + 1] - breaks[p]) * q / panels;
            const double bb = breaks[p] + (breaks[p + 1] - breaks[p]) * (q + 1) / panels;
            const double c = 0.5 * (a + bb), hr = 0.5 * (bb - a);
            for (int i = 0; i < 6; ++i) {
                const double rho = c + hr * kGlNode[i];
                double ring = 0.0;
                for (int j = 0; j < m; ++j) {
                    const double th = 2.0 * kPi * (j + 0.5) / m;
                    ring += value_pow({ball.center[0] + rho * std::cos(th), ball.center[1] + rho * std::sin(th)}, gamma);
                }
                acc += kGlWeight[i] * hr * rho * ring * 2.0 * kPi / m;
            }
        }
    }
    return acc;
}

double Weight::ball_infimum(const Ball& ball, int dim) const {
    if (factors_.empty()) return scale_;
    if (factors_.size() == 1) {
        const auto& f = factors_[0];
        const double d = distance(ball.center, f.x0);
        if (f.a == 0.0) return scale_;
        if (f.a < 0.0) return scale_ * std::pow(d + ball.radius, f.a);
        const double near = std::max(0.0, d - ball.radius);
        return near == 0.0 ? 0.0 : scale_ * std::pow(near, f.a);
    }
    double m = kInf;
    const Point c = ball.center;
    const double r = ball.radius;
    if (dim == 1) {
        const int n = 4096;
        for (int i = 0; i <= n; ++i) m = std::min(m, value_pow({c[0] - r + 2.0 * r * i / n, 0.0}, 1.0));
    } else {
        const int nr = 64, nt = 128;
        for (int i = 0; i <= nr; ++i)
            for (int j = 0; j < nt; ++j) {
                const double rho = r * i / nr, th = 2.0 * kPi * j / nt;
                m = std::min(m, value_pow({c[0] + rho * std::cos(th), c[1] + rho * std::sin(th)}, 1.0));
            }
    }
    // an interior factor with positive exponent vanishes at its center
    for (const auto& f : factors_)
        if (f.a > 0 && distance(c, f.x0) < r) m = 0.0;
    return m;
}

std::string Weight::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (factors_.empty()) {
        os << "constant(" << scale_ << ")";
        return os.str();
    }
    if (scale_ != 1.0) os << scale_ << "*";
    for (std::size_t i = 0; i < factors_.size(); ++i) {
        if (i) os << "*";
        const auto& f = factors_[i];
        if (f.x0[0] == 0.0 && f.x0[1] == 0.0) os << "|x|^" << f.a;
        else os << "|x-(" << f.x0[0] << "," << f.x0[1] << ")|^" << f.a;
    }
    return os.str();
}

}  // namespace hardylab
