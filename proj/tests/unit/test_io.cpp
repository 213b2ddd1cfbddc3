#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "hardylab/experiments.hpp"
#include "hardylab/mollifier.hpp"

using namespace hardylab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("hardylab_unit_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("grid function files round-trip") {
    const fs::path dir = scratch("grid");
    const GridSpec g = GridSpec::make(2, {-1.0, -0.5}, {1.0, 0.5}, 1.0 / 8);
    const auto f = GridFunction::sample(g, [](const Point& x) { return std::sin(x[0]) * std::exp(x[1]) / 3.0; });
    for (Encoding e : {Encoding::csv, Encoding::f64le}) {
        write_grid_function(dir / "f", f, e);
        const auto back = read_grid_function(dir / "f.json");
        CHECK(back.spec == f.spec);
        CHECK(back.values == f.values);
    }
}

TEST_CASE("candidates round-trip") {
    const fs::path dir = scratch("cand");
    const HardyParams prm = HardyParams::make(1, 2.0 / 3.0, 2.0, 1.5, 2.5);
    const Ball B{{0.25, 0.0}, 0.375};
    const Weight w = Weight::product(Weight::power(-0.5), Weight::shifted_power(-0.25, {1.0, 0.0}));
    const auto a = make_approx_atom(GridSpec::covering(1, B, 1.0 / 64), B, prm, w, 12, 0.6);
    write_candidate(dir / "a", a);
    const auto b = read_candidate(dir / "a.candidate.json");
    CHECK(b.f.values == a.f.values);
    CHECK(b.weight == a.weight);
    CHECK(b.params.p == a.params.p);
    CHECK(b.params.lambda == a.params.lambda);
    CHECK(b.params.eta == a.params.eta);
    CHECK(b.kind == a.kind);
    CHECK(b.seed == a.seed);
    CHECK(validate_approx_atom(b, 1.0).all_pass());

    const HardyParams inf = HardyParams::make(1, 1.0, kInf);
    CHECK(std::isinf(params_from_json(to_json(inf)).q));
}

TEST_CASE("decomposition files") {
    const fs::path dir = scratch("dec");
    const HardyParams prm = HardyParams::make(1, 1.0, 2.0, 1.0, 3.0);
    const Ball B{{0.0, 0.0}, 0.5};
    const double h = 1.0 / 32;
    const auto g = molecule_grid(1, B, 6, h, Mollifier::gaussian(1).radius() + 2 * h);
    const auto M = make_molecule(g, B, prm, Weight::constant(1.0), 3, 0.5, MoleculeOptions{6});
    const auto d = decompose_molecule(M.f, prm, M.weight, AnnularSystem::build(g, B, 6));
    write_decomposition(dir, d);
    CHECK(fs::exists(dir / "coefficients.csv"));
    CHECK(fs::exists(dir / "manifest.json"));
    const auto a3 = read_grid_function(dir / "a_3.json");
    CHECK(a3.values.size() > 0);
    const json man = json::parse(read_text(dir / "manifest.json"));
    CHECK(man.contains("C_t"));
}

TEST_CASE("config round-trips for every experiment") {
    for (const auto& id : experiment_ids()) {
        const ExperimentConfig c = ExperimentConfig::defaults(id);
        CHECK_NOTHROW(c.validate());
        const json j = c.to_json();
        const ExperimentConfig back = ExperimentConfig::from_json(json::parse(j.dump()));
        CHECK(back.to_json() == j);
    }
    json bad = ExperimentConfig::defaults("molecules").to_json();
    bad["params"]["lambda"] = 0.5;
    CHECK_THROWS_AS(ExperimentConfig::from_json(bad).validate(), Error);
    CHECK_THROWS_AS(ExperimentConfig::defaults("nope"), Error);
}

TEST_CASE("report formats round-trip") {
    RunReport r;
    r.experiment = "demo";
    r.rows.push_back({"demo/a", "case", 3, "x=1;r=0.5", 0.1, 1.0, "pass", "ok"});
    r.rows.push_back({"demo/b", "assert", 0, "", std::nan(""), kInf, "fail", "needs, \"quotes\""});
    r.rows.push_back({"demo/c", "info", 0, "p=1/2", -2.5e-300, std::nan(""), "info", ""});
    const auto back = report_from_json(json::parse(report_to_json(r).dump()));
    REQUIRE(back.rows.size() == 3);
    CHECK(report_rows_csv(back) == report_rows_csv(r));
    const auto rows = rows_from_csv(report_rows_csv(r));
    REQUIRE(rows.size() == 3);
    CHECK(rows[1].note == r.rows[1].note);
    CHECK(std::isnan(rows[1].measured));
    CHECK(std::isinf(rows[1].budget));
    CHECK(rows[2].measured == r.rows[2].measured);
    CHECK(r.failures() == 1);

    const fs::path dir = scratch("report");
    const auto files = emit_report(r, dir, ReportFormat::both);
    CHECK(files.size() == 2);
    CHECK(read_text(dir / "demo.csv") == report_rows_csv(r));
}

TEST_CASE("experiments are deterministic and rows reproduce alone") {
    ExperimentConfig c = ExperimentConfig::defaults("atoms");
    c.family_size = 6;
    const auto a = run_experiment(c), b = run_experiment(c);
    CHECK(report_rows_csv(a) == report_rows_csv(b));
    CHECK(a.passed());
    const ReportRow* row = a.find("atoms/case-004");
    REQUIRE(row != nullptr);
    const auto one = run_experiment(c, std::string("atoms/case-004"));
    REQUIRE(one.rows.size() == 1);
    CHECK(report_rows_csv(one).substr(report_rows_csv(one).find('\n') + 1) ==
          report_rows_csv(RunReport{"", {}, {}, {*row}, {}, 0.0}).substr(
              report_rows_csv(RunReport{"", {}, {}, {*row}, {}, 0.0}).find('\n') + 1));
    const auto summary = run_experiment(c, std::string("atoms/failures"));
    REQUIRE(summary.rows.size() == 1);
    CHECK(summary.rows[0].id == "atoms/failures");
    CHECK_THROWS_AS(run_experiment(c, std::string("atoms/unknown")), Error);
}

TEST_CASE("cz images with the zero kernel") {
    ExperimentConfig c = ExperimentConfig::defaults("cz-images");
    c.family_size = 2;
    c.h = 1.0 / 32;
    const auto r = run_experiment(c, std::string("cz-images/zero-kernel"));
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].measured == 0.0);
    CHECK(r.rows[0].verdict == "pass");
}

TEST_CASE("shipped configs match the built-in defaults") {
    for (const auto& id : experiment_ids()) {
        const fs::path file = fs::path(HARDYLAB_SOURCE_DIR) / "configs" / (id + ".json");
        REQUIRE(fs::exists(file));
        const ExperimentConfig c = ExperimentConfig::from_json(json::parse(read_text(file)));
        CHECK(c.to_json() == ExperimentConfig::defaults(id).to_json());
    }
}
