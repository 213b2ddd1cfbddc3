#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hardylab/core.hpp"

namespace hardylab {

// ω(x) = scale · Π |x − x_i|^{a_i}, at most two factors.
class Weight {
public:
    enum class Family { constant, power, shifted_power, product };

    struct Factor {
        double a = 0.0;
        Point x0{0.0, 0.0};
        bool operator==(const Factor&) const = default;
    };

    static Weight constant(double c = 1.0);
    static Weight power(double a);
    static Weight shifted_power(double a, Point x0);
    static Weight product(const Weight& u, const Weight& v);

    Family family() const { return family_; }
    double scale() const { return scale_; }
    const std::vector<Factor>& factors() const { return factors_; }
    Weight scaled(double c) const;

    // Local integrability in dimension dim (every exponent > −dim).
    bool locally_integrable(int dim) const;

    double operator()(const Point& x) const { return value_pow(x, 1.0); }
    double value_pow(const Point& x, double gamma) const;

    // ∫_box ω^γ; closed form for single-factor 1D weights, adaptive Gauss otherwise.
    double box_integral(const Point& lo, const Point& hi, int dim, double gamma = 1.0) const;

    // ∫_B ω^γ where a closed form (or spectrally accurate formula) exists.
    std::optional<double> ball_integral_closed(const Ball& b, int dim, double gamma = 1.0) const;
    double ball_integral(const Ball& b, int dim, double gamma = 1.0) const;

    // inf_B ω: exact for single-factor weights, sampled for products.
    double ball_infimum(const Ball& b, int dim) const;

    std::string describe() const;
    bool operator==(const Weight&) const = default;

private:
    Family family_ = Family::constant;
    double scale_ = 1.0;
    std::vector<Factor> factors_;
};

}  // namespace hardylab
