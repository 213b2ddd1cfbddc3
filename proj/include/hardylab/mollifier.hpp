#pragma once

#include <string>
#include <vector>

#include "hardylab/core.hpp"

namespace hardylab {

// Unit-mass Schwartz mollifier, truncated at radius R_φ (discarded Gaussian mass < 1e-10).
class Mollifier {
public:
    enum class Kind { gaussian, bump };

    static Mollifier gaussian(int dim);
    static Mollifier bump(int dim);  // c (1 − |x|²)^4 on the unit ball

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    double radius() const { return radius_; }
    bool separable() const { return kind_ == Kind::gaussian; }
    std::string name() const { return kind_ == Kind::gaussian ? "gaussian" : "bump"; }

    double operator()(const Point& x) const;

    // Taps w[k + K] = ∫_{cell k} φ_t for |k| ≤ K along one axis. For the Gaussian these
    // are the 1D marginal factors (the 2D kernel is their tensor product); for the bump
    // in 1D they are exact.
    std::vector<double> taps_1d(double h, double t) const;
    // Full (2K+1)² tap table for the 2D bump, row-major, normalized to unit sum.
    std::vector<double> taps_2d(double h, double t, int& K) const;

    // ∫φ by fine quadrature (checks the unit-mass invariant).
    double mass_by_quadrature() const;
    // max over sampled x of |φ(x)| (1 + |x|)^N.
    double decay_constant(int N) const;

private:
    Kind kind_ = Kind::gaussian;
    int dim_ = 1;
    double radius_ = 6.5;
    double norm_ = 1.0;
};

}  // namespace hardylab
