#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/atoms.hpp"
#include "hardylab/dual_basis.hpp"
#include "hardylab/grid.hpp"

namespace hardylab {

struct KernelSpec {
    enum class Family { zero, odd_min, smoothed_odd_min, gaussian_identity, pure_inverse };

    Family family = Family::odd_min;
    int dim = 1;
    double mu = 1.0;
    double delta = 1.0;
    double epsilon = 0.05;   // smoothing width (smoothed / identity families)
    double excision = 1.5;   // diagonal band |x − y| ≤ excision · h is summed analytically to first order

    static KernelSpec zero(int dim);
    // sign(x−y) min(|x−y|^{-n}, |x−y|^{-n-μ}); in 2D the sign becomes (x₁−y₁)/|x−y|.
    static KernelSpec odd_min(int dim, double mu = 1.0, double delta = 1.0);
    static KernelSpec smoothed_odd_min(int dim, double mu, double epsilon);
    static KernelSpec gaussian_identity(int dim, double epsilon);
    static KernelSpec pure_inverse(int dim);
    static KernelSpec from_name(const std::string& name, int dim, double mu, double delta, double epsilon);

    double operator()(const Point& x, const Point& y) const;
    bool excises() const { return family == Family::odd_min || family == Family::pure_inverse; }
    std::string name() const;
};

struct SampleCloud {
    std::vector<std::pair<Point, Point>> pairs;  // (x, y), x ≠ y
    std::vector<std::array<Point, 3>> triples;   // (x, y, z), |x−z| ≥ 2|y−z| > 0

    static SampleCloud make(int dim, int count, std::uint64_t seed, double d_min, double d_max);
};

struct KernelValidation {
    KernelSpec kernel;
    double C_size = 0.0;
    double C_sm = 0.0;
    double C_size_enlarged = 0.0;
    double C_sm_enlarged = 0.0;
    bool stable = true;
    bool pass = false;
};

// Constants on `cloud` and on an enlarged cloud (twice the samples over a
// range widened by 2 on both ends); pass iff finite and stable within 10%.
KernelValidation validate_kernel(const KernelSpec& k, int count, std::uint64_t seed, double d_min, double d_max);
double size_constant(const KernelSpec& k, const SampleCloud& cloud);
double smoothness_constant(const KernelSpec& k, const SampleCloud& cloud);

struct ApplyResult {
    GridFunction Tf;
    // ½ max|D²f| · C_size · ∫_{band} |u|^{2−n} du, left over once the first-order band term is restored
    double excision_bound = 0.0;
};

// Tf on `out` (defaults to f's grid). Refuses kernels that did not pass validation.
ApplyResult apply_operator(const KernelValidation& k, const GridFunction& f, std::optional<GridSpec> out = std::nullopt);
// T*g(y) = Σ_x K(x, y) g(x) hⁿ
ApplyResult apply_adjoint(const KernelValidation& k, const GridFunction& g, std::optional<GridSpec> out = std::nullopt);

double l2_norm_estimate(const KernelValidation& k, const GridSpec& grid, int probe_count, std::uint64_t seed,
                        int iterations = 60);

struct AdjointProjectionResult {
    double lhs = 0.0;
    double budget_unit = 0.0;     // branch bound at C = 1, verbatim
    double budget = 0.0;          // C_budget · budget_unit
    double omega_normalized_unit = 0.0;
    bool pass = true;
    double min_passing_constant = 0.0;
    double window = 0.0;
    double exterior_bound = 0.0;
    std::string branch;
};

AdjointProjectionResult adjoint_projection_check(const KernelValidation& k, const Ball& b, const MultiIndex& alpha, const HardyParams& prm,
                      const Weight& w, double C_budget, double h, double tol = 0.05, int max_doublings = 6);

struct MoleculeReport {
    ValidationReport report;
    GridFunction image;  // T a on the window grid
    Ball molecule_ball;  // 2B
    double excision_bound = 0.0;
    std::pair<double, double> lambda_window;
    std::vector<std::pair<MultiIndex, double>> moments;  // ∫ T a (x − x_B)^α
};

struct ImageOptions {
    int k_max = 6;              // dyadic annuli of 2B covered by the window
    double size_constant = 10.0;
    double C_budget = 10.0;     // (M3)
};

MoleculeReport atom_image_report(const KernelValidation& k, const AtomCandidate& a, const ImageOptions& opt = {});

}  // namespace hardylab
