// hardylab command line: candidate checks, decomposition, CZ images and experiment runs.
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hardylab/czop.hpp"
#include "hardylab/decompose.hpp"
#include "hardylab/experiments.hpp"
#include "hardylab/hardy.hpp"
#include "hardylab/io.hpp"
#include "hardylab/mollifier.hpp"

namespace fs = std::filesystem;
using namespace hardylab;

namespace {

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<double> grid_h;
    std::string out;
    std::string only;
};

// --out beats HARDYLAB_OUT, which beats the config file.
fs::path out_dir(const Common& c, const std::string& fallback) {
    if (!c.out.empty()) return c.out;
    if (const char* env = std::getenv("HARDYLAB_OUT"); env && *env) return env;
    return fallback;
}

int verdict(const ValidationReport& r, const Common& c, const std::string& name) {
    const fs::path dir = c.out.empty() ? fs::path{} : out_dir(c, "");
    if (dir.empty()) {
        std::cout << report_csv(r);
    } else {
        write_text(dir / (name + ".csv"), report_csv(r));
        write_text(dir / (name + ".json"), report_json(r).dump(2) + "\n");
    }
    return r.all_pass() ? 0 : 1;
}

ExperimentConfig load_config(const std::string& id, const Common& c) {
    ExperimentConfig cfg;
    if (!c.config.empty()) {
        cfg = ExperimentConfig::from_json(json::parse(read_text(c.config)));
        if (!id.empty() && id != cfg.experiment)
            throw Error(ErrorCode::invalid_argument,
                        "config is for experiment '" + cfg.experiment + "', not '" + id + "'");
    } else {
        cfg = ExperimentConfig::defaults(id);
    }
    if (c.seed) cfg.seed = *c.seed;
    if (c.grid_h) cfg.h = *c.grid_h;
    cfg.validate();
    return cfg;
}

void add_common(CLI::App* app, Common& c, bool with_only) {
    app->add_option("--config", c.config, "experiment config (JSON)")->check(CLI::ExistingFile);
    app->add_option("--seed", c.seed, "override the seed");
    app->add_option("--grid-h", c.grid_h, "override the grid spacing")->check(CLI::PositiveNumber);
    app->add_option("--out", c.out, "output directory or stem");
    if (with_only) app->add_option("--only", c.only, "reproduce a single row id");
}

ReportFormat parse_format(const std::string& s) {
    if (s == "csv") return ReportFormat::csv;
    if (s == "json") return ReportFormat::json;
    return ReportFormat::both;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hardylab: weighted local Hardy space atoms, molecules and CZ operators on grids"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hardylab 0.1.0");

    // run <experiment-id>
    Common run_opts;
    std::string run_id, run_format = "both";
    bool run_quiet = false;
    auto* run = app.add_subcommand("run", "run an experiment suite and write <out>/<id>.csv/.json");
    run->add_option("experiment", run_id, "experiment id")
        ->required()
        ->check(CLI::IsMember(experiment_ids()));
    run->add_option("--format", run_format, "csv, json or both")->check(CLI::IsMember({"csv", "json", "both"}));
    run->add_flag("--quiet", run_quiet, "no per-row output");
    add_common(run, run_opts, true);

    // report <file>
    std::string report_path, report_to;
    auto* report = app.add_subcommand("report", "summarise a saved report; exit 1 if any assertion failed");
    report->add_option("file", report_path, "<id>.csv or <id>.json")->required()->check(CLI::ExistingFile);
    report->add_option("--to", report_to, "re-emit the rows as csv or json")->check(CLI::IsMember({"csv", "json"}));

    // config <experiment-id>
    std::string cfg_id;
    auto* cfgc = app.add_subcommand("config", "print the default config of an experiment");
    cfgc->add_option("experiment", cfg_id)->required()->check(CLI::IsMember(experiment_ids()));

    // verify-atom <candidate>
    Common va_opts;
    std::optional<double> va_approx;
    double va_moment_constant = 1.0;
    bool va_large_r = false;
    auto* va = app.add_subcommand("verify-atom", "check (A1)-(A3) or, with --approx C, (A1)-(A3')");
    std::string va_path;
    va->add_option("candidate", va_path, "<stem>.candidate.json")->required()->check(CLI::ExistingFile);
    va->add_option("--approx", va_approx, "validate as an approximate atom with this constant");
    va->add_option("--moment-constant", va_moment_constant, "c in the h^2-scaled moment tolerance");
    va->add_flag("--large-r", va_large_r, "also report the moment implication for r >= 1");
    add_common(va, va_opts, false);

    // verify-molecule <candidate>
    Common vm_opts;
    double vm_C = 1.0, vm_size = 1.0;
    int vm_k = 12;
    std::string vm_path;
    auto* vm = app.add_subcommand("verify-molecule", "check (M1)-(M3) over dyadic annuli");
    vm->add_option("candidate", vm_path, "<stem>.candidate.json")->required()->check(CLI::ExistingFile);
    vm->add_option("--C-budget", vm_C, "(M3) constant");
    vm->add_option("--size-constant", vm_size, "(M1)/(M2) constant");
    vm->add_option("--k-max", vm_k, "last annulus")->check(CLI::Range(0, 30));
    add_common(vm, vm_opts, false);

    // decompose <candidate>
    Common dc_opts;
    double dc_C = 1.0;
    int dc_k = 12;
    bool dc_unchecked = false;
    std::string dc_path, dc_encoding = "csv";
    auto* dc = app.add_subcommand("decompose", "split a molecule into atoms a_k, b_k and a residual");
    dc->add_option("candidate", dc_path, "<stem>.candidate.json")->required()->check(CLI::ExistingFile);
    dc->add_option("--C-budget", dc_C, "(M3) constant used by the molecule check");
    dc->add_option("--k-max", dc_k, "last annulus")->check(CLI::Range(0, 30));
    dc->add_flag("--no-check", dc_unchecked, "skip the molecule check");
    dc->add_option("--encoding", dc_encoding, "csv or f64le")->check(CLI::IsMember({"csv", "f64le"}));
    add_common(dc, dc_opts, false);

    // apply-cz <grid>
    Common cz_opts;
    std::string cz_path, cz_kernel = "odd_min", cz_encoding = "csv";
    double cz_mu = 1.0, cz_delta = 1.0, cz_eps = 0.05;
    int cz_cloud = 2000;
    bool cz_adjoint = false;
    std::optional<double> cz_window;
    auto* cz = app.add_subcommand("apply-cz", "validate a kernel and apply it to a grid function");
    cz->add_option("grid", cz_path, "grid header <stem>.json")->required()->check(CLI::ExistingFile);
    cz->add_option("--kernel", cz_kernel, "zero, odd_min, smoothed_odd_min, gaussian_identity, pure_inverse");
    cz->add_option("--mu", cz_mu);
    cz->add_option("--delta", cz_delta);
    cz->add_option("--epsilon", cz_eps);
    cz->add_option("--cloud", cz_cloud, "sample pairs for the kernel check");
    cz->add_option("--window", cz_window, "half-width of the output grid (default: input grid)");
    cz->add_flag("--adjoint", cz_adjoint, "apply T* instead of T");
    cz->add_option("--encoding", cz_encoding, "csv or f64le")->check(CLI::IsMember({"csv", "f64le"}));
    add_common(cz, cz_opts, false);

    // generate atom|approx|molecule
    Common gen_opts;
    std::string gen_kind = "atom", gen_weight = "1", gen_encoding = "csv";
    double gen_x = 0.0, gen_r = 0.5, gen_p = 1.0, gen_q = 2.0, gen_fill = 0.5;
    std::optional<double> gen_lambda;
    int gen_k = 12;
    auto* gen = app.add_subcommand("generate", "write a seeded candidate for the verify/decompose commands");
    gen->add_option("kind", gen_kind)->check(CLI::IsMember({"atom", "approx", "molecule"}));
    gen->add_option("--center", gen_x);
    gen->add_option("--radius", gen_r)->check(CLI::PositiveNumber);
    gen->add_option("--p", gen_p);
    gen->add_option("--q", gen_q);
    gen->add_option("--lambda", gen_lambda);
    gen->add_option("--fill", gen_fill, "moment fill (approx) or tail fill (molecule)");
    gen->add_option("--k-max", gen_k);
    gen->add_option("--weight", gen_weight, "'1', 'c:<value>' or 'pow:<a>'");
    gen->add_option("--encoding", gen_encoding)->check(CLI::IsMember({"csv", "f64le"}));
    add_common(gen, gen_opts, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // --help and --version exit 0; usage errors share the exception code
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (*run) {
            const ExperimentConfig cfg = load_config(run_id, run_opts);
            const std::optional<std::string> only =
                run_opts.only.empty() ? std::nullopt : std::optional<std::string>(run_opts.only);
            const RunReport r = run_experiment(cfg, only);
            const fs::path dir = out_dir(run_opts, cfg.out_dir);
            for (const auto& p : emit_report(r, dir, parse_format(run_format))) std::cerr << "wrote " << p.string() << "\n";
            if (!run_quiet)
                for (const auto& row : r.rows)
                    if (row.kind != "case" || row.verdict == "fail")
                        std::cout << row.verdict << "  " << row.id << "  measured=" << fmt17(row.measured)
                                  << " budget=" << fmt17(row.budget) << "\n";
            std::cout << r.experiment << ": " << r.rows.size() << " rows, " << r.failures() << " failed\n";
            return r.passed() ? 0 : 1;
        }
        if (*cfgc) {
            std::cout << ExperimentConfig::defaults(cfg_id).to_json().dump(2) << "\n";
            return 0;
        }
        if (*report) {
            RunReport r;
            const std::string text = read_text(report_path);
            if (fs::path(report_path).extension() == ".json") {
                r = report_from_json(json::parse(text));
            } else {
                r.rows = rows_from_csv(text);
                r.experiment = fs::path(report_path).stem().string();
            }
            if (report_to == "csv") std::cout << report_rows_csv(r);
            if (report_to == "json") std::cout << report_to_json(r).dump(2) << "\n";
            int cases = 0, asserts = 0, infos = 0;
            for (const auto& row : r.rows) {
                cases += row.kind == "case";
                asserts += row.kind == "assert";
                infos += row.kind == "info";
                if (row.verdict == "fail") std::cerr << "FAIL " << row.id << "  " << row.note << "\n";
            }
            std::cerr << r.experiment << ": " << cases << " cases, " << asserts << " assertions, " << infos
                      << " info rows, " << r.failures() << " failed\n";
            return r.passed() ? 0 : 1;
        }
        if (*va) {
            const AtomCandidate c = read_candidate(va_path);
            const ValidationReport rep = va_approx ? validate_approx_atom(c, *va_approx)
                                                   : validate_atom(c, AtomCheckOptions{va_moment_constant});
            if (va_large_r) {
                const LargeRReport lr = check_large_r_implication(c);
                for (const auto& row : lr.rows)
                    std::cerr << "large-r alpha=" << to_string(row.alpha, c.params.n) << " lhs=" << fmt17(row.lhs)
                              << " rhs=" << fmt17(row.rhs) << (row.holds ? " holds" : " violated") << "\n";
            }
            return verdict(rep, va_opts, "verify-atom");
        }
        if (*vm) {
            const AtomCandidate c = read_candidate(vm_path);
            return verdict(validate_molecule(c, vm_C, MoleculeCheckOptions{vm_k, vm_size}), vm_opts, "verify-molecule");
        }
        if (*dc) {
            const AtomCandidate c = read_candidate(dc_path);
            const AnnularSystem sys = AnnularSystem::build(c.f.spec, c.ball, dc_k);
            const Decomposition d =
                dc_unchecked ? decompose_molecule(c.f, c.params, c.weight, sys) : decompose_molecule(c, sys, dc_C);
            const fs::path dir = out_dir(dc_opts, "decomposition");
            write_decomposition(dir, d, dc_encoding == "f64le" ? Encoding::f64le : Encoding::csv);
            const Reconstruction rec = reconstruct(d);
            std::cout << "atoms=" << d.a.size() << " C_t=" << fmt17(d.C_t) << " C_s=" << fmt17(d.C_s)
                      << " sum_t_p=" << fmt17(d.sum_t_p) << " reconstruction=" << fmt17(rec.relative_error)
                      << " biorthogonality=" << fmt17(d.max_biorthogonality) << "\n";
            std::cerr << "wrote " << dir.string() << "\n";
            return 0;
        }
        if (*cz) {
            const GridFunction f = read_grid_function(cz_path);
            const KernelSpec K = KernelSpec::from_name(cz_kernel, f.spec.dim, cz_mu, cz_delta, cz_eps);
            const KernelValidation kv = validate_kernel(K, cz_cloud, cz_opts.seed.value_or(1), 1e-3, 1e3);
            std::cerr << "kernel " << K.name() << " C_size=" << fmt17(kv.C_size) << " C_sm=" << fmt17(kv.C_sm)
                      << (kv.pass ? " pass" : " fail") << "\n";
            if (!kv.pass) return 1;
            std::optional<GridSpec> out;
            if (cz_window) {
                out = GridSpec::covering(f.spec.dim, Ball{{0.0, 0.0}, *cz_window}, f.spec.h);
            }
            const ApplyResult res = cz_adjoint ? apply_adjoint(kv, f, out) : apply_operator(kv, f, out);
            write_grid_function(out_dir(cz_opts, ".") / "image", res.Tf,
                                cz_encoding == "f64le" ? Encoding::f64le : Encoding::csv);
            std::cout << "excision_bound=" << fmt17(res.excision_bound) << "\n";
            return 0;
        }
        if (*gen) {
            Weight w = Weight::constant(1.0);
            if (gen_weight.rfind("c:", 0) == 0) w = Weight::constant(std::stod(gen_weight.substr(2)));
            else if (gen_weight.rfind("pow:", 0) == 0) w = Weight::power(std::stod(gen_weight.substr(4)));
            else if (gen_weight != "1") throw Error(ErrorCode::invalid_argument, "unknown weight: " + gen_weight);
            const std::uint64_t seed = gen_opts.seed.value_or(1);
            const double h = gen_opts.grid_h.value_or(1.0 / 256);
            const HardyParams prm = HardyParams::make(1, gen_p, gen_q, 1.0, gen_lambda);
            const Ball B{{gen_x, 0.0}, gen_r};
            AtomCandidate c;
            if (gen_kind == "atom") {
                c = make_atom(GridSpec::covering(1, B, h), B, prm, w, seed);
            } else if (gen_kind == "approx") {
                c = make_approx_atom(GridSpec::covering(1, B, h), B, prm, w, seed, gen_fill);
            } else {
                const double margin = Mollifier::gaussian(1).radius() + 2 * h;
                c = make_molecule(molecule_grid(1, B, gen_k, h, margin), B, prm, w, seed, gen_fill,
                                  MoleculeOptions{gen_k});
            }
            const fs::path stem = out_dir(gen_opts, ".") / gen_kind;
            write_candidate(stem, c, gen_encoding == "f64le" ? Encoding::f64le : Encoding::csv);
            std::cout << stem.string() << ".candidate.json\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
