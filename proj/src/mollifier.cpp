#include "hardylab/mollifier.hpp"

#include <algorithm>

namespace hardylab {

namespace {

// ∫_0^x (1 − u²)^4 du
double bump_antiderivative(double x) {
    x = std::clamp(x, -1.0, 1.0);
    const double x2 = x * x;
    return x * (1.0 + x2 * (-4.0 / 3.0 + x2 * (6.0 / 5.0 + x2 * (-4.0 / 7.0 + x2 / 9.0))));
}

int tap_count(double radius, double h, double t) {
    // cells k with (|k| − 1/2) h < R t
    return std::max(0, static_cast<int>(std::ceil(radius * t / h + 0.5)) - 1);
}

}  // namespace

Mollifier Mollifier::gaussian(int dim) {
    Mollifier m;
    m.kind_ = Kind::gaussian;
    m.dim_ = dim;
    m.radius_ = dim == 1 ? 6.5 : 7.0;
    m.norm_ = std::pow(2.0 * kPi, -0.5 * dim);
    return m;
}

Mollifier Mollifier::bump(int dim) {
    Mollifier m;
    m.kind_ = Kind::bump;
    m.dim_ = dim;
    m.radius_ = 1.0;
    // ∫_{-1}^{1} (1-x²)^4 = 256/315, ∫_{|x|<1} (1-|x|²)^4 = π/5
    m.norm_ = dim == 1 ? 315.0 / 256.0 : 5.0 / kPi;
    return m;
}

double Mollifier::operator()(const Point& x) const {
    const double r2 = x[0] * x[0] + (dim_ == 2 ? x[1] * x[1] : 0.0);
    if (kind_ == Kind::gaussian) {
        // box truncation, which in 1D is the interval (-R, R)
        if (std::fabs(x[0]) >= radius_ || (dim_ == 2 && std::fabs(x[1]) >= radius_)) return 0.0;
        return norm_ * std::exp(-0.5 * r2);
    }
    if (r2 >= 1.0) return 0.0;
    const double u = 1.0 - r2;
    return norm_ * u * u * u * u;
}

std::vector<double> Mollifier::taps_1d(double h, double t) const {
    const int K = tap_count(radius_, h, t);
    std::vector<double> w(2 * K + 1);
    const double R = radius_;
    for (int k = -K; k <= K; ++k) {
        const double a = std::max((k - 0.5) * h / t, -R);
        const double b = std::min((k + 0.5) * h / t, R);
        double v = 0.0;
        if (b > a) {
            if (kind_ == Kind::gaussian) {
                v = 0.5 * (std::erf(b / std::sqrt(2.0)) - std::erf(a / std::sqrt(2.0)));
            } else {
                v = norm_ * (bump_antiderivative(b) - bump_antiderivative(a));
            }
        }
        w[k + K] = v;
    }
    return w;
}

std::vector<double> Mollifier::taps_2d(double h, double t, int& K) const {
    K = tap_count(radius_, h, t);
    const int n = 2 * K + 1;
    std::vector<double> w(static_cast<std::size_t>(n) * n);
    // 4x4 sub-cells with 3x3 Gauss points each
    const double gn[3] = {-0.7745966692414834, 0.0, 0.7745966692414834};
    const double gw[3] = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
    const int sub = 4;
    double total = 0.0;
    for (int ky = -K; ky <= K; ++ky)
        for (int kx = -K; kx <= K; ++kx) {
            double acc = 0.0;
            const double hs = h / t / sub;
            for (int sy = 0; sy < sub; ++sy)
                for (int sx = 0; sx < sub; ++sx) {
                    const double cx = (kx - 0.5) * h / t + (sx + 0.5) * hs;
                    const double cy = (ky - 0.5) * h / t + (sy + 0.5) * hs;
                    for (int i = 0; i < 3; ++i)
                        for (int j = 0; j < 3; ++j)
                            acc += gw[i] * gw[j] * (*this)({cx + 0.5 * hs * gn[i], cy + 0.5 * hs * gn[j]});
                }
            acc *= 0.25 * hs * hs;
            w[static_cast<std::size_t>(ky + K) * n + (kx + K)] = acc;
            total += acc;
        }
    if (total > 0)
        for (auto& v : w) v /= total;
    return w;
}

double Mollifier::mass_by_quadrature() const {
    const double h = radius_ / 2000.0;
    if (dim_ == 1) {
        const auto w = taps_1d(h, 1.0);
        double s = 0.0;
        for (double v : w) s += v;
        return s;
    }
    if (kind_ == Kind::gaussian) {
        const auto w = taps_1d(h, 1.0);
        double s = 0.0;
        for (double v : w) s += v;
        return s * s;
    }
    // radial profile ρ φ(ρ) is a degree-9 polynomial: 5-point Gauss on [0,1] is exact
    const double gn[5] = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831, 0.9061798459386640};
    const double gw[5] = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
                          0.2369268850561891};
    double s = 0.0;
    for (int i = 0; i < 5; ++i) {
        const double rho = 0.5 * (gn[i] + 1.0);
        s += 0.5 * gw[i] * rho * (*this)({rho, 0.0});
    }
    return 2.0 * kPi * s;
}

double Mollifier::decay_constant(int N) const {
    double c = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double r = radius_ * 1.5 * i / 4000.0;
        c = std::max(c, std::fabs((*this)({r, 0.0})) * std::pow(1.0 + r, N));
    }
    return c;
}

}  // namespace hardylab
