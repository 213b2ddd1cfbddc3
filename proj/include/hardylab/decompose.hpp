#pragma once

#include <vector>

#include "hardylab/atoms.hpp"
#include "hardylab/dual_basis.hpp"
#include "hardylab/grid.hpp"

namespace hardylab {

// B_k = B(x_B, 2^k r), E_0 = B, E_k = B_k \ B_{k−1}, k ≤ k_max.
struct AnnularSystem {
    Ball base;
    int k_max = 12;
    GridSpec grid;
    std::vector<std::vector<std::size_t>> nodes;  // per annulus
    std::vector<double> measure;                  // discrete |E_k|
    std::vector<double> closed_measure;           // |B_k| − |B_{k−1}|

    static AnnularSystem build(const GridSpec& grid, const Ball& base, int k_max);
    Ball ball(int k) const { return base.dilated(std::ldexp(1.0, k)); }
    int count() const { return k_max + 1; }
};

std::vector<DualBasis> dual_polynomials(const AnnularSystem& sys, int s);

// m[k][α] = (1/|E_k|) Σ_{E_k} M (x − x_B)^α hⁿ
using MomentTable = std::vector<std::vector<double>>;
MomentTable annular_moments(const GridFunction& M, const AnnularSystem& sys, int s);

struct TailMoments {
    MomentTable N;               // N[k][α] = Σ_{j>k} |E_j| m[j][α] (truncated at k_max)
    std::vector<double> nu;      // ν_α = Σ_j |E_j| m[j][α]
    std::vector<double> beyond;  // extrapolated |Σ_{j>k_max} |E_j| m[j][α]|
};

TailMoments tail_and_total_moments(const MomentTable& m, const AnnularSystem& sys);

struct Decomposition {
    Ball base;
    int k_max = 0;
    HardyParams params;
    Weight weight;
    GridFunction original;

    std::vector<GridFunction> a;  // a_k on B_k
    std::vector<double> t;        // t_k = C_t 2^{-kλ/q}
    double C_t = 0.0;
    std::vector<GridFunction> b;  // b_k on B_{k+1}
    std::vector<double> s;        // s_k = C_s 2^{-k(n+λ)/q}
    double C_s = 0.0;
    GridFunction residual;        // c_a · ã
    double residual_multiple = 1.0;

    MomentTable moments;
    TailMoments tails;
    double sum_t_p = 0.0;
    double sum_s_p = 0.0;
    double closed_t_p = 0.0;  // C_t^p Σ_{k≤K} 2^{-kpλ/q}
    double closed_s_p = 0.0;
    double max_biorthogonality = 0.0;
    double max_condition = 0.0;
    double max_dual_bound = 0.0;
    double telescoping_error = 0.0;
    double polynomial_bound = 0.0;  // max_k sup|P_k|^q ω(B_k) / ‖M_k‖^q
    double C_t_base_normalized = 0.0;  // C_t measured against ω(B) instead of ω(B_k)
    bool empty() const { return a.empty(); }
};

Decomposition decompose_molecule(const GridFunction& M, const HardyParams& prm, const Weight& w,
                                 const AnnularSystem& sys);
// Refuses inputs that fail validate_molecule.
Decomposition decompose_molecule(const AtomCandidate& M, const AnnularSystem& sys, double C_budget);

struct Reconstruction {
    GridFunction f;
    double relative_error = 0.0;
};

Reconstruction reconstruct(const Decomposition& d);

// Per-atom candidates for validation.
AtomCandidate atom_candidate(const Decomposition& d, int k);
AtomCandidate b_candidate(const Decomposition& d, int k);
AtomCandidate residual_candidate(const Decomposition& d);  // the normalized ã

}  // namespace hardylab
