#include "hardylab/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hardylab {

namespace fs = std::filesystem;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json to_json(const Point& p) { return json::array({p[0], p[1]}); }

json to_json(const Ball& b) { return {{"center", to_json(b.center)}, {"radius", b.radius}}; }

json to_json(const GridSpec& s) {
    return {{"dim", s.dim}, {"lo", to_json(s.lo)}, {"hi", to_json(s.hi)}, {"h", s.h},
            {"count", json::array({s.count[0], s.count[1]})}};
}

namespace {

const char* family_name(Weight::Family f) {
    switch (f) {
        case Weight::Family::constant: return "constant";
        case Weight::Family::power: return "power";
        case Weight::Family::shifted_power: return "shifted_power";
        case Weight::Family::product: return "product";
    }
    return "?";
}

// JSON has no infinity; q = ∞ travels as the string "inf".
json number(double v) { return std::isinf(v) ? json("inf") : json(v); }
double number_from(const json& j) { return j.is_string() ? kInf : j.get<double>(); }

}  // namespace

json to_json(const Weight& w) {
    json fs_ = json::array();
    for (const auto& f : w.factors()) fs_.push_back({{"a", f.a}, {"x0", to_json(f.x0)}});
    return {{"family", family_name(w.family())}, {"scale", w.scale()}, {"factors", fs_}};
}

json to_json(const HardyParams& p) {
    return {{"n", p.n},           {"p", p.p},         {"q", number(p.q)}, {"s0", p.s0},
            {"eta", p.eta},       {"lambda", p.lambda}, {"mu", p.mu},     {"delta", p.delta}};
}

Point point_from_json(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

Ball ball_from_json(const json& j) { return {point_from_json(j.at("center")), j.at("radius").get<double>()}; }

GridSpec grid_spec_from_json(const json& j) {
    GridSpec s = GridSpec::make(j.at("dim").get<int>(), point_from_json(j.at("lo")), point_from_json(j.at("hi")),
                                j.at("h").get<double>());
    if (j.contains("count")) {
        const auto c = j.at("count");
        if (c.at(0).get<std::size_t>() != s.count[0] || c.at(1).get<std::size_t>() != s.count[1])
            throw Error(ErrorCode::io, "grid header count disagrees with its box");
    }
    return s;
}

Weight weight_from_json(const json& j) {
    const std::string fam = j.at("family").get<std::string>();
    const double scale = j.value("scale", 1.0);
    std::vector<Weight> parts;
    for (const auto& f : j.value("factors", json::array())) {
        const double a = f.at("a").get<double>();
        const Point x0 = f.contains("x0") ? point_from_json(f.at("x0")) : Point{0.0, 0.0};
        parts.push_back(fam == "power" ? Weight::power(a) : Weight::shifted_power(a, x0));
    }
    Weight w = Weight::constant(scale);
    if (fam == "constant") return w;
    if (parts.empty()) throw Error(ErrorCode::io, "weight family " + fam + " needs factors");
    Weight out = parts[0];
    if (parts.size() == 2) out = Weight::product(parts[0], parts[1]);
    return scale == 1.0 ? out : out.scaled(scale);
}

HardyParams params_from_json(const json& j) {
    std::optional<double> lambda;
    if (j.contains("lambda") && !j.at("lambda").is_null()) lambda = j.at("lambda").get<double>();
    std::optional<int> s0;
    if (j.contains("s0") && !j.at("s0").is_null()) s0 = j.at("s0").get<int>();
    return HardyParams::make(j.value("n", 1), j.at("p").get<double>(), number_from(j.at("q")), j.value("eta", 1.0),
                             lambda, j.value("mu", 1.0), j.value("delta", 1.0), s0);
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(ErrorCode::io, "write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_grid_function(const fs::path& stem, const GridFunction& f, Encoding enc) {
    const fs::path data = fs::path(stem).replace_extension(enc == Encoding::csv ? ".csv" : ".bin");
    json header = to_json(f.spec);
    header["format"] = "hardylab-grid";
    header["version"] = 1;
    header["encoding"] = enc == Encoding::csv ? "csv" : "f64le";
    header["data"] = data.filename().string();
    if (f.support_hint) header["support_hint"] = to_json(*f.support_hint);
    write_text(fs::path(stem).replace_extension(".json"), header.dump(2) + "\n");
    if (enc == Encoding::csv) {
        std::string body;
        body.reserve(f.values.size() * 24);
        for (double v : f.values) body += fmt17(v) + "\n";
        write_text(data, body);
    } else {
        static_assert(std::endian::native == std::endian::little, "f64le writer assumes a little-endian host");
        std::string body(f.values.size() * sizeof(double), '\0');
        std::memcpy(body.data(), f.values.data(), body.size());
        write_text(data, body);
    }
}

GridFunction read_grid_function(const fs::path& header_path) {
    const json header = json::parse(read_text(header_path));
    if (header.value("format", "") != "hardylab-grid") throw Error(ErrorCode::io, "not a grid header");
    GridFunction f(grid_spec_from_json(header));
    if (header.contains("support_hint")) f.support_hint = ball_from_json(header.at("support_hint"));
    const fs::path data = header_path.parent_path() / header.at("data").get<std::string>();
    const std::string body = read_text(data);
    if (header.at("encoding") == "csv") {
        std::istringstream in(body);
        std::string line;
        std::size_t i = 0;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            if (i >= f.values.size()) throw Error(ErrorCode::io, "too many values in " + data.string());
            f.values[i++] = std::stod(line);
        }
        if (i != f.values.size()) throw Error(ErrorCode::io, "too few values in " + data.string());
    } else {
        if (body.size() != f.values.size() * sizeof(double)) throw Error(ErrorCode::io, "binary size mismatch");
        std::memcpy(f.values.data(), body.data(), body.size());
    }
    return f;
}

void write_candidate(const fs::path& stem, const AtomCandidate& c, Encoding enc) {
    write_grid_function(stem, c.f, enc);
    json side{{"format", "hardylab-candidate"},
              {"grid", fs::path(stem).replace_extension(".json").filename().string()},
              {"ball", to_json(c.ball)},
              {"params", to_json(c.params)},
              {"weight", to_json(c.weight)},
              {"seed", c.seed},
              {"kind", c.kind},
              {"theta", c.theta},
              {"moment_fill", c.moment_fill},
              {"tail_fill", c.tail_fill}};
    write_text(fs::path(stem.string() + ".candidate.json"), side.dump(2) + "\n");
}

AtomCandidate read_candidate(const fs::path& sidecar) {
    const json side = json::parse(read_text(sidecar));
    if (side.value("format", "") != "hardylab-candidate") throw Error(ErrorCode::io, "not a candidate sidecar");
    AtomCandidate c{read_grid_function(sidecar.parent_path() / side.at("grid").get<std::string>()),
                    ball_from_json(side.at("ball")),
                    params_from_json(side.at("params")),
                    weight_from_json(side.at("weight")),
                    side.value("seed", std::uint64_t{0}),
                    side.value("kind", std::string("atom")),
                    side.value("theta", 0.0),
                    side.value("moment_fill", 0.0),
                    side.value("tail_fill", 0.0)};
    return c;
}

std::string report_csv(const ValidationReport& r) {
    std::string out = "condition,alpha,measured,budget,pass,required,min_passing_constant,literal_measured,"
                      "literal_budget,tail_bound,note\n";
    for (const auto& rec : r.records) {
        out += std::string(to_string(rec.id)) + "," + (rec.alpha ? to_string(*rec.alpha, 2) : "") + "," +
               fmt17(rec.measured) + "," + fmt17(rec.budget) + "," + (rec.pass ? "1" : "0") + "," +
               (rec.required ? "1" : "0") + "," + fmt17(rec.min_passing_constant) + "," +
               fmt17(rec.literal_measured) + "," + fmt17(rec.literal_budget) + "," + fmt17(rec.tail_bound) + ",\"" +
               rec.note + "\"\n";
    }
    return out;
}

json report_json(const ValidationReport& r) {
    json rows = json::array();
    for (const auto& rec : r.records) {
        json row{{"condition", to_string(rec.id)},
                 {"measured", rec.measured},
                 {"budget", rec.budget},
                 {"pass", rec.pass},
                 {"required", rec.required},
                 {"min_passing_constant", rec.min_passing_constant},
                 {"note", rec.note}};
        if (rec.alpha) row["alpha"] = to_string(*rec.alpha, 2);
        if (!std::isnan(rec.literal_measured)) row["literal_measured"] = rec.literal_measured;
        if (!std::isnan(rec.literal_budget)) row["literal_budget"] = rec.literal_budget;
        rows.push_back(row);
    }
    return {{"all_pass", r.all_pass()}, {"records", rows}};
}

void write_decomposition(const fs::path& dir, const Decomposition& d, Encoding enc) {
    fs::create_directories(dir);
    std::string coeffs = "k,t_k,s_k\n";
    for (std::size_t k = 0; k < d.t.size(); ++k)
        coeffs += std::to_string(k) + "," + fmt17(d.t[k]) + "," + (k < d.s.size() ? fmt17(d.s[k]) : "") + "\n";
    write_text(dir / "coefficients.csv", coeffs);
    json files = json::array();
    for (std::size_t k = 0; k < d.a.size(); ++k) {
        write_grid_function(dir / ("a_" + std::to_string(k)), d.a[k], enc);
        files.push_back("a_" + std::to_string(k) + ".json");
    }
    for (std::size_t k = 0; k < d.b.size(); ++k) {
        write_grid_function(dir / ("b_" + std::to_string(k)), d.b[k], enc);
        files.push_back("b_" + std::to_string(k) + ".json");
    }
    if (!d.residual.values.empty()) {
        write_grid_function(dir / "residual", d.residual, enc);
        files.push_back("residual.json");
    }
    json manifest{{"format", "hardylab-decomposition"},
                  {"base", to_json(d.base)},
                  {"k_max", d.k_max},
                  {"params", to_json(d.params)},
                  {"weight", to_json(d.weight)},
                  {"C_t", d.C_t},
                  {"C_s", d.C_s},
                  {"residual_multiple", d.residual_multiple},
                  {"sum_t_p", d.sum_t_p},
                  {"sum_s_p", d.sum_s_p},
                  {"closed_t_p", d.closed_t_p},
                  {"closed_s_p", d.closed_s_p},
                  {"max_biorthogonality", d.max_biorthogonality},
                  {"max_condition", d.max_condition},
                  {"max_dual_bound", d.max_dual_bound},
                  {"telescoping_error", d.telescoping_error},
                  {"polynomial_bound", d.polynomial_bound},
                  {"C_t_base_normalized", d.C_t_base_normalized},
                  {"files", files}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace hardylab
