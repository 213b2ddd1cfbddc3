#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "hardylab/grid.hpp"
#include "hardylab/weight.hpp"

namespace hardylab {

// ω(B): closed form where available, adaptive quadrature otherwise.
double measure_ball(const Weight& w, const Ball& b, int dim);
// ω(B) on a grid (cell masses of nodes with centers in B).
double measure_ball(const Weight& w, const Ball& b, const GridSpec& grid);

struct BallFamily {
    std::vector<Ball> balls;

    // Log-spaced radii × lattice centers (plus each extra point as a center) and a
    // seeded random batch.
    static BallFamily standard(int dim, double center_lo, double center_hi, double r_lo, double r_hi, int n_radii,
                               int n_centers, int n_random, std::uint64_t seed,
                               const std::vector<Point>& extra_centers = {});
    // Adds balls of radius r/4 around every center: the refinement used by the
    // critical-index test.
    BallFamily refined() const;
    BallFamily& add(const Ball& b) {
        balls.push_back(b);
        return *this;
    }
};

// (avg_B ω) / inf_B ω; throws degenerate_weight when inf_B ω = 0.
double a1_ratio(const Weight& w, const Ball& b, int dim);
// (avg_B ω)(avg_B ω^{1/(1−q)})^{q−1}; infinite if the dual power is not integrable.
double aq_ratio(const Weight& w, double q, const Ball& b, int dim);

double estimate_a1_constant(const Weight& w, const BallFamily& fam, int dim);
double estimate_aq_constant(const Weight& w, double q, const BallFamily& fam, int dim);

struct CriticalIndexInterval {
    double lo = 1.0;
    double hi = 1.0;
    std::vector<std::pair<double, bool>> trace;  // (q, bounded?)
};

CriticalIndexInterval critical_index_estimate(const Weight& w, const BallFamily& fam, int dim, double width = 0.05);

struct DoublingStep {
    int k = 0;
    double ratio = 0.0;         // ω(2^k B) / ω(B)
    double exponent = 0.0;      // log2(ω(2^k B) / ω(2^{k−1} B))
    double upper_bound = kInf;  // [ω]_{A1} 2^{kn}
    bool upper_holds = true;
    double lower_bound = 0.0;  // 2^{kn/q} with q = 1, logged only
    bool lower_holds = true;
};

// a1_constant: [ω]_{A1} estimate to use in the upper bound (NaN skips the check).
std::vector<DoublingStep> doubling_profile(const Weight& w, const Ball& b, int dim, int k_max, double a1_constant);

struct AvgBound {
    double lhs = 0.0;
    double rhs = 0.0;
    double slack = 0.0;
};

// (1/|B|)∫_B|f| against ((C/ω(B)) ∫_B |f|^q ω)^{1/q}, all on f's grid.
AvgBound avg_bound_check(const Weight& w, const GridFunction& f, const Ball& b, double q, double constant);

struct WeightReport {
    std::string weight;
    double a1_constant_est = kInf;
    std::map<double, double> aq_constant_est;
    CriticalIndexInterval critical_index;
    std::vector<std::pair<int, double>> doubling_exponents;
};

WeightReport weight_report(const Weight& w, const BallFamily& fam, int dim, const std::vector<double>& qs,
                           const Ball& doubling_ball, int k_max);

}  // namespace hardylab
