#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/grid.hpp"
#include "hardylab/weight.hpp"

namespace hardylab {

struct HardyParams {
    int n = 1;
    double p = 1.0;
    double q = 2.0;  // kInf for sup-norm atoms
    int s0 = 0;
    int s = 0;
    double gamma_p = 0.0;
    double eta = 1.0;
    double beta = 2.0;
    double lambda = 0.0;
    double mu = 1.0;
    double delta = 1.0;

    // Derives γ_p, s, β; λ defaults to n(q/p − 1) + 1 (or 0 for q = ∞), s0 to
    // [n(q_ω/p − 1)].
    static HardyParams make(int n, double p, double q, double eta = 1.0, std::optional<double> lambda = std::nullopt,
                            double mu = 1.0, double delta = 1.0, std::optional<int> s0 = std::nullopt,
                            double q_omega = 1.0);
    void check() const;
    bool two_branch() const;  // γ_p ∈ ℤ
    double lambda_floor() const { return n * (q / p - 1.0); }
    bool cz_admissible() const { return std::min(mu, delta) > gamma_p; }
    // Open interval (n(q/p − 1), q(n + min{μ,δ}) − n).
    std::pair<double, double> lambda_window() const;
    HardyParams with_q(double q_new) const;
    HardyParams with_s0(int s0_new) const;
};

enum class Condition { A1, A2, A3, A3p, M1, M2, M3 };
const char* to_string(Condition c);

inline constexpr double kBudgetTolerance = 1e-9;

struct ConditionRecord {
    Condition id = Condition::A1;
    std::optional<MultiIndex> alpha;
    double measured = 0.0;
    double budget = 0.0;
    bool pass = true;
    bool required = true;
    double min_passing_constant = 0.0;  // measured / (budget at constant 1)
    // Literal q-th-power reading of (M1)/(M2), reported only.
    double literal_measured = std::nan("");
    double literal_budget = std::nan("");
    double tail_bound = 0.0;
    std::string note;
};

struct ValidationReport {
    std::vector<ConditionRecord> records;

    bool all_pass() const;
    const ConditionRecord* find(Condition id) const;
    // Largest min-passing constant among records with this id.
    double worst_constant(Condition id) const;
};

struct AtomCandidate {
    GridFunction f;
    Ball ball;
    HardyParams params;
    Weight weight;
    std::uint64_t seed = 0;
    std::string kind = "atom";
    double theta = 0.0;         // size fill ‖a‖ / budget
    double moment_fill = 0.0;   // achieved moment fill
    double tail_fill = 0.0;
};

// ω(B)^{1/q − 1/p}
double size_budget(const Weight& w, const Ball& b, const HardyParams& prm);
// (A3') / (M3) budget at C = 1 for a moment of order |α|.
double ball_control_budget(const Weight& w, const Ball& b, const HardyParams& prm, int order);

struct AtomCheckOptions {
    double moment_constant = 1.0;  // c in ε_mom = c h² ‖a‖₁
};

ValidationReport validate_atom(const AtomCandidate& c, const AtomCheckOptions& opt = {});
ValidationReport validate_approx_atom(const AtomCandidate& c, double C_budget);

struct MoleculeCheckOptions {
    int k_max = 12;
    double size_constant = 1.0;  // multiplies the (M1)/(M2) budgets
};

ValidationReport validate_molecule(const AtomCandidate& m, double C_budget, const MoleculeCheckOptions& opt = {});

struct LargeRRow {
    MultiIndex alpha;
    double lhs = 0.0;
    double holder = 0.0;       // r^{|α|} ‖a‖ (∫_B ω^{1/(1−q)})^{(q−1)/q}
    double rhs = 0.0;          // [ω]_{A_q} r^{|α|} |B| ω(B)^{-1/p}
    double rhs_literal = 0.0;  // [ω]_{A_q} r^{|α|+n} ω(B)^{-1/p}
    bool holds = true;
    bool literal_holds = true;
};

struct LargeRReport {
    double aq_constant = 1.0;
    std::vector<LargeRRow> rows;
    bool holds() const;
};

LargeRReport check_large_r_implication(const AtomCandidate& c);

AtomCandidate make_atom(const GridSpec& grid, const Ball& b, const HardyParams& prm, const Weight& w,
                        std::uint64_t seed);
AtomCandidate make_approx_atom(const GridSpec& grid, const Ball& b, const HardyParams& prm, const Weight& w,
                               std::uint64_t seed, double moment_fill);

struct MoleculeOptions {
    int k_max = 12;
    double tail_exponent = std::nan("");  // default λ + n + 1
    double moment_fill = std::nan("");    // default: tail_fill
};

// Grid covering B_{k_max} plus `margin` on every side, faces on multiples of h.
GridSpec molecule_grid(int dim, const Ball& b, int k_max, double h, double margin);

AtomCandidate make_molecule(const GridSpec& grid, const Ball& b, const HardyParams& prm, const Weight& w,
                            std::uint64_t seed, double tail_fill, const MoleculeOptions& opt = {});

struct MomentBoundRow {
    MultiIndex alpha;
    double measured = 0.0;
    double unit_bound = 0.0;  // r^{n+|α|} ω(B)^{-1/p}
    double ratio = 0.0;
};

std::vector<MomentBoundRow> molecule_moment_bound(const AtomCandidate& m);
// Max ratio over a family: the fitted constant.
double fit_moment_constant(const std::vector<std::vector<MomentBoundRow>>& family);

// Hölder bound on |∫M (x−x_B)^α| from size quantities alone (inside / outside B).
std::vector<std::pair<double, double>> size_implied_moment_bound(const AtomCandidate& m);

}  // namespace hardylab
