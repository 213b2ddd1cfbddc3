#pragma once

#include <vector>

#include "hardylab/core.hpp"
#include "hardylab/grid.hpp"

namespace hardylab {

// p(x) = Σ_β c_β ((x − center)/scale)^β
struct Polynomial {
    int dim = 1;
    Point center{0.0, 0.0};
    double scale = 1.0;
    std::vector<MultiIndex> terms;
    std::vector<double> coeffs;

    double operator()(const Point& x) const;
    // Coefficients in the unscaled monomials (x − center)^β.
    std::vector<double> raw_coeffs() const;
};

// Polynomials φ_α (|α| ≤ order) on a node set E with
// (1/|E|) Σ_{i∈E} ρ_i φ_α(x_i)(x_i − c)^β hⁿ = δ_{αβ}, where ρ is an optional density
// and |E| = Σ ρ_i hⁿ.
class DualBasis {
public:
    static constexpr double kMaxCondition = 1e10;

    static DualBasis build(const GridSpec& grid, const std::vector<std::size_t>& nodes, const Point& center,
                           double scale, int order, const std::vector<double>& density = {});

    const std::vector<MultiIndex>& indices() const { return indices_; }
    const Polynomial& dual(std::size_t a) const { return duals_[a]; }
    std::size_t size() const { return duals_.size(); }
    double measure() const { return measure_; }
    double condition_number() const { return condition_; }
    // max |(1/|E|) Σ ρ φ_α (x−c)^β hⁿ − δ_{αβ}| recomputed from the nodes.
    double biorthogonality_residual() const { return residual_; }
    // max_α scale^{|α|} max_E |φ_α|
    double uniform_bound() const { return uniform_bound_; }

private:
    std::vector<MultiIndex> indices_;
    std::vector<Polynomial> duals_;
    double measure_ = 0.0;
    double condition_ = 1.0;
    double residual_ = 0.0;
    double uniform_bound_ = 0.0;
};

// Projection onto polynomials of degree ≤ s matching the moments of f over B.
Polynomial pbs_projection(const GridFunction& f, const Ball& b, int s);

}  // namespace hardylab
