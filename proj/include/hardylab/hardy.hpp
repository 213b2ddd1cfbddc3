#pragma once

#include <vector>

#include "hardylab/grid.hpp"
#include "hardylab/mollifier.hpp"
#include "hardylab/weight.hpp"

namespace hardylab {

struct ScaleGrid {
    std::vector<double> t;  // strictly decreasing, in (0, 1]

    // t_j = 2^{-j}, j = 0..J with 2^{-J} ∈ (h/4, h/2].
    static ScaleGrid dyadic(double h);
    // per_octave scales per factor of two down to the same floor.
    static ScaleGrid dense(double h, int per_octave);
    void check(double h) const;
};

struct MaximalResult {
    GridFunction m;
    bool sub_grid_scale = false;
};

MaximalResult local_maximal(const GridFunction& f, const Mollifier& phi, const ScaleGrid& scales);

struct HpNormReport {
    double value = 0.0;        // ‖m_φ f‖_{L^p_ω}
    double integral = 0.0;     // ∫ (m_φ f)^p ω
    double h = 0.0;
    int scale_count = 0;
    double margin = 0.0;       // support enlargement R_φ · t_max
    double tail_estimate = 0.0;  // extrapolated exterior share of `integral` (outer annuli)
    bool sub_grid_scale = false;
};

HpNormReport hp_norm(const GridFunction& f, const Weight& w, double p, const Mollifier& phi,
                     const ScaleGrid& scales);
// Defaults: Gaussian mollifier, dyadic scales for f's grid.
HpNormReport hp_norm(const GridFunction& f, const Weight& w, double p);

// f moved onto a grid large enough for hp_norm with the default mollifier.
GridFunction pad_for_norm(const GridFunction& f);

double atomic_norm_upper(const std::vector<double>& coeffs, double p);

}  // namespace hardylab
