#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hardylab/io.hpp"

namespace hardylab {

struct KernelConfig {
    std::string family = "odd_min";
    double mu = 1.0;
    double delta = 1.0;
    double epsilon = 0.05;
    int cloud = 2000;
    double d_min = 1e-3;
    double d_max = 1e3;
};

struct Tolerances {
    double measure = 1e-2;
    double a1 = 1e-9;
    double max_over_median = 10.0;
    double slope = 0.3;
    double refine = 0.25;
    double reconstruction = 1e-3;
    double closed_form = 0.05;
    double biorthogonality = 1e-8;
    double bound = 0.05;
    double truncation = 0.01;
    double adjoint = 1e-6;
    double kernel_stability = 0.10;
    double l2_stability = 0.15;
    double image_refine = 0.20;
};

// HardyParams inputs; λ and s0 default per p when unset.
struct ParamSpec {
    double p = 1.0;
    double q = 2.0;
    double eta = 1.0;
    std::optional<double> lambda;
    double mu = 1.0;
    double delta = 1.0;
    std::optional<int> s0;

    HardyParams make(int n, std::optional<double> p_override = std::nullopt) const;
};

struct ExperimentConfig {
    std::string experiment = "approx-atoms";
    int dim = 1;
    std::uint64_t seed = 1;
    double h = 1.0 / 256;
    bool refine = true;  // repeat at h/2
    std::vector<Weight> weights{Weight::constant(1.0)};
    ParamSpec params;
    std::vector<double> p_values;  // sweep; empty means params.p only
    int family_size = 50;
    double r_min = 0.05;
    double r_max = 4.0;
    int k_max = 12;
    double C_budget = 1.0;       // (A3') / (M3) constant
    double size_constant = 1.0;  // (M1) / (M2) constant
    Tolerances tol;
    KernelConfig kernel;
    std::string out_dir = "runs";

    static ExperimentConfig defaults(const std::string& id);
    static ExperimentConfig from_json(const json& j);
    json to_json() const;
    // Every swept HardyParams must satisfy its invariants.
    void validate() const;
};

const std::vector<std::string>& experiment_ids();

struct ReportRow {
    std::string id;
    std::string kind;  // case | assert | info
    std::uint64_t seed = 0;
    std::string inputs;
    double measured = std::nan("");
    double budget = std::nan("");
    std::string verdict;  // pass | fail | info
    std::string note;
};

struct RunReport {
    std::string experiment;
    json config;
    json environment;
    std::vector<ReportRow> rows;
    std::vector<std::pair<std::string, double>> summary;
    double seconds = 0.0;  // wall time; kept out of the CSV

    int failures() const;
    bool passed() const { return failures() == 0; }
    const ReportRow* find(const std::string& id) const;
};

// `only`: a case id (e.g. "approx-atoms/case-017") runs that case alone; a summary row id
// runs everything and keeps just that row.
RunReport run_experiment(const ExperimentConfig& cfg, const std::optional<std::string>& only = std::nullopt);
RunReport run_weights(const ExperimentConfig& cfg, const std::optional<std::string>& only = std::nullopt);
RunReport run_atoms(const ExperimentConfig& cfg, const std::optional<std::string>& only = std::nullopt);
RunReport run_approx_atom_norms(const ExperimentConfig& cfg, const std::optional<std::string>& only = std::nullopt);
RunReport run_atomic_sums(const ExperimentConfig& cfg, const std::optional<std::string>& only = std::nullopt);
RunReport run_molecule_norms(const ExperimentConfig& cfg, const std::optional<std::string>& only = std::nullopt);
RunReport run_cz_images(const ExperimentConfig& cfg, const std::optional<std::string>& only = std::nullopt);
RunReport run_kernel(const ExperimentConfig& cfg, const std::optional<std::string>& only = std::nullopt);

enum class ReportFormat { csv, json, both };

std::string report_rows_csv(const RunReport& r);
json report_to_json(const RunReport& r);
RunReport report_from_json(const json& j);
std::vector<ReportRow> rows_from_csv(const std::string& text);

// Writes <dir>/<experiment>.csv and/or <dir>/<experiment>.json; returns the paths.
std::vector<std::filesystem::path> emit_report(const RunReport& r, const std::filesystem::path& dir,
                                               ReportFormat format = ReportFormat::both);

}  // namespace hardylab
