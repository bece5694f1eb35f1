#include "wpgeo/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "wpgeo/errors.hpp"

namespace wpgeo::cli {

using nlohmann::ordered_json;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const InvalidSpec*>(&e) || dynamic_cast<const InvalidFN*>(&e) ||
        dynamic_cast<const OutOfRegime*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e)) {
        return kInvalidSpec;
    }
    if (dynamic_cast<const DiscretenessSuspect*>(&e) || dynamic_cast<const MeshFailure*>(&e) ||
        dynamic_cast<const BudgetExceeded*>(&e)) {
        return kNonDiscrete;
    }
    if (dynamic_cast<const RankDeficient*>(&e) || dynamic_cast<const RankExcess*>(&e)) {
        return kRankDeficient;
    }
    if (dynamic_cast<const ThinSurface*>(&e)) {
        return kThin;
    }
    return kNonConvergence;
}

// ---- surfaces and configuration ----

FuchsianSurface SurfaceSpec::build() const {
    if (name == "bolza") {
        return build_bolza();
    }
    return build_fn();
}

FuchsianSurface SurfaceSpec::build_fn() const {
    const FenchelNielsenCoords c = coordinates();
    FuchsianSurface s = build_genus2_fn(c.lengths, c.twists);
    if (name == "bolza") {
        s.label = "bolza-fn";
    }
    return s;
}

FenchelNielsenCoords SurfaceSpec::coordinates() const {
    if (name == "bolza") {
        return bolza_fn_coordinates();
    }
    if (!fn) {
        throw InvalidSpec("fn surface without coordinates");
    }
    return *fn;
}

namespace {

std::array<double, 3> triple(const nlohmann::json& j, const char* what) {
    if (!j.is_array() || j.size() != 3) {
        throw InvalidSpec(std::string(what) + " must be an array of three numbers");
    }
    std::array<double, 3> a{};
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number()) {
            throw InvalidSpec(std::string(what) + " must be an array of three numbers");
        }
        a[i] = j[i].get<double>();
    }
    return a;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidSpec("cannot read " + path);
    }
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

SurfaceSpec parse_surface(const nlohmann::json& j, const std::string& base_dir, int depth = 0) {
    SurfaceSpec s;
    if (j.is_string()) {
        const std::string name = j.get<std::string>();
        if (name != "bolza") {
            throw InvalidSpec("unknown surface '" + name + "'");
        }
        return s;
    }
    if (!j.is_object()) {
        throw InvalidSpec("surface must be \"bolza\" or an object");
    }
    if (j.contains("file")) {
        if (depth > 0 || !j["file"].is_string()) {
            throw InvalidSpec("surface file must be a path and cannot nest");
        }
        std::filesystem::path p(j["file"].get<std::string>());
        if (p.is_relative()) {
            p = std::filesystem::path(base_dir) / p;
        }
        return parse_surface(nlohmann::json::parse(read_file(p.string())), p.parent_path().string(), depth + 1);
    }
    if (j.contains("genus") && j["genus"] != 2) {
        throw InvalidSpec("only genus 2 surfaces are supported");
    }
    if (j.contains("kind")) {
        // surface description files: {"genus": 2, "kind": "bolza" | "fenchel-nielsen", ...}
        const auto& kind = j["kind"];
        if (kind == "bolza") {
            return s;
        }
        if (kind != "fenchel-nielsen") {
            throw InvalidSpec("unknown surface kind " + kind.dump());
        }
    } else if (j.contains("name") && j["name"] == "bolza") {
        return s;
    }
    if (!j.contains("lengths")) {
        throw InvalidSpec("surface object needs lengths (and optional twists), a name or a file");
    }
    s.name = "fn";
    FenchelNielsenCoords c;
    c.lengths = triple(j["lengths"], "lengths");
    if (j.contains("twists")) {
        c.twists = triple(j["twists"], "twists");
    }
    s.fn = c;
    return s;
}

template <class T>
T number(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) {
        return fallback;
    }
    if (!j[key].is_number()) {
        throw InvalidSpec(std::string(key) + " must be a number");
    }
    return j[key].get<T>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidSpec(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw InvalidSpec("config must be a JSON object");
    }
    static const std::vector<std::string> known{"surface", "h", "N", "samples", "seed", "r0",
                                                "refine", "out", "sweep", "harmonic"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw InvalidSpec("unknown config key '" + key + "'");
        }
    }
    ExperimentConfig c;
    if (j.contains("surface")) {
        c.surface = parse_surface(j["surface"], base_dir);
    }
    c.h = number(j, "h", c.h);
    c.N = number(j, "N", c.N);
    c.samples = number(j, "samples", c.samples);
    c.seed = number(j, "seed", c.seed);
    c.r0 = number(j, "r0", c.r0);
    if (j.contains("refine")) {
        if (!j["refine"].is_boolean()) {
            throw InvalidSpec("refine must be a boolean");
        }
        c.refine = j["refine"].get<bool>();
    }
    if (j.contains("out")) {
        if (!j["out"].is_string()) {
            throw InvalidSpec("out must be a path");
        }
        c.out = j["out"].get<std::string>();
    }
    if (j.contains("sweep")) {
        const auto& s = j["sweep"];
        if (s.contains("lengths")) {
            const auto& L = s["lengths"];
            if (!L.is_array() || L.empty()) {
                throw InvalidSpec("sweep.lengths must be a non-empty array");
            }
            if (L[0].is_array()) {
                if (L.size() != 3) {
                    throw InvalidSpec("sweep.lengths needs one list per cuff");
                }
                for (int i = 0; i < 3; ++i) {
                    c.sweep.lengths[i] = L[i].get<std::vector<double>>();
                }
            } else {
                const auto v = L.get<std::vector<double>>();
                c.sweep.lengths = {v, v, v};
            }
        }
        if (s.contains("twists")) {
            c.sweep.twists = triple(s["twists"], "sweep.twists");
        }
        c.sweep.samples = number(s, "samples", c.sweep.samples);
        c.sweep.t = number(s, "t", c.sweep.t);
    }
    if (j.contains("harmonic")) {
        c.t = number(j["harmonic"], "t", c.t);
        c.direction = number(j["harmonic"], "direction", c.direction);
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    return parse_config(read_file(path), std::filesystem::path(path).parent_path().string());
}

void validate(const ExperimentConfig& c) {
    if (!(c.h >= 0.005 && c.h <= 0.5)) {
        throw InvalidSpec("h must lie in [0.005, 0.5]");
    }
    if (c.N < 3 || c.N > 10) {
        throw InvalidSpec("N must lie in [3, 10]");
    }
    if (c.samples < 1 || c.sweep.samples < 1) {
        throw InvalidSpec("sample counts must be positive");
    }
    if (!(c.r0 > 0.0)) {
        throw InvalidSpec("r0 must be positive");
    }
    if (!(std::abs(c.t) <= 0.5) || !(std::abs(c.sweep.t) <= 0.5)) {
        throw InvalidSpec("harmonic t must satisfy |t| <= 0.5");
    }
    if (c.direction < 0 || c.direction > 2) {
        throw InvalidSpec("harmonic direction must be 0, 1 or 2");
    }
    for (const auto& L : c.sweep.lengths) {
        if (L.empty()) {
            throw InvalidSpec("empty sweep length list");
        }
    }
}

std::string ExperimentConfig::canonical() const {
    ordered_json j;
    if (surface.name == "bolza") {
        j["surface"] = "bolza";
    } else {
        j["surface"] = {{"lengths", surface.fn->lengths}, {"twists", surface.fn->twists}};
    }
    j["h"] = h;
    j["N"] = N;
    j["samples"] = samples;
    j["seed"] = seed;
    j["r0"] = r0;
    j["refine"] = refine;
    j["sweep"] = {{"lengths", sweep.lengths}, {"twists", sweep.twists}, {"samples", sweep.samples}, {"t", sweep.t}};
    j["harmonic"] = {{"t", t}, {"direction", direction}};
    return j.dump();
}

std::string ExperimentConfig::hash() const {
    std::uint64_t x = 1469598103934665603ull;
    for (const unsigned char ch : canonical()) {
        x ^= ch;
        x *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
    return buf;
}

// ---- commands ----

namespace {

ordered_json meta(const std::string& command, const ExperimentConfig& c) {
    ordered_json j;
    j["tool"] = "wpgeo";
    j["version"] = kVersion;
    j["command"] = command;
    j["config_hash"] = c.hash();
    j["seed"] = c.seed;
    j["h"] = c.h;
    j["N"] = c.N;
    return j;
}

ordered_json fn_json(const FenchelNielsenCoords& c) {
    return {{"lengths", c.lengths}, {"twists", c.twists}};
}

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

}  // namespace

CommandResult surface_info(const ExperimentConfig& c) {
    const FuchsianSurface s = c.surface.build();
    const SystoleResult sys = systole(s, 6);
    const SurfaceMesh m = build_mesh(s, c.h);
    const double expected = 4.0 * std::numbers::pi * (s.genus - 1);

    ordered_json j;
    j["meta"] = meta("surface-info", c);
    j["surface"] = s.label;
    j["genus"] = s.genus;
    if (s.fn) {
        j["fn"] = fn_json(*s.fn);
    }
    j["generators"] = s.generators.size();
    j["relator_residual"] = s.relator_residual();
    j["systole"] = sys.length;
    j["systole_certified"] = sys.certified;
    j["r0"] = c.r0;
    j["thick"] = sys.length >= c.r0;
    j["dirichlet_sides"] = m.domain.sides.size();
    j["domain_area"] = m.domain.area;
    j["mesh_area"] = m.total_area;
    j["area_expected"] = expected;
    j["area_relative_error"] = std::abs(m.total_area - expected) / expected;
    j["mesh_h"] = m.h;
    j["mesh_vertices"] = m.size();
    j["mesh_triangles"] = m.triangles.size();

    CommandResult r;
    r.json = j.dump(2);
    r.summary = s.label + ": systole " + fmt(sys.length) + (sys.length >= c.r0 ? " (thick)" : " (thin)") + ", area " +
                fmt(m.total_area);
    return r;
}

CommandResult curvature(const ExperimentConfig& c) {
    const FuchsianSurface s = c.surface.build();
    const CurvatureContext ctx = build_context(s, c.h, c.N, c.r0);
    std::optional<CurvatureContext> fine;
    if (c.refine) {
        fine.emplace(build_context(s, std::max(0.005, c.h / 2.0), c.N, c.r0));
    }
    const BoundReport rep = bound_report(ctx, c.samples, c.seed, fine ? &*fine : nullptr);

    ordered_json j;
    j["meta"] = meta("curvature", c);
    j["report"] = ordered_json::parse(to_json(rep));
    CommandResult r;
    r.json = j.dump(2);
    r.csv = to_csv(rep);
    r.exit_code = rep.violated() ? kBoundViolation : kOk;
    r.summary = s.label + ": K_h in [" + fmt(rep.Kh_min) + ", " + fmt(rep.Kh_max) + "], scalar " + fmt(rep.scalar) +
                ", status " + rep.status();
    return r;
}

double SweepResult::max_relative_change() const {
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), 1e-300); };
    return std::max({rel(C1, C1_h2), rel(C2, C2_h2), rel(h0, h0_h2), rel(C1, C1_N1), rel(C2, C2_N1), rel(h0, h0_N1)});
}

namespace {

double sup_H_of_wolf(const CurvatureContext& ctx, double t) {
    if (t == 0.0) {
        return 1.0;
    }
    const WolfResult w = wolf_map(ctx.basis.phi[0], ctx.surface, *ctx.mesh, ctx.basis, t);
    const EnergyDensities d = energy_densities(w.state);
    return *std::max_element(d.H.values.begin(), d.H.values.end());
}

SweepRow sweep_point(const ExperimentConfig& c, int index, const FenchelNielsenCoords& fn) {
    SweepRow row;
    row.index = index;
    row.fn = fn;
    try {
        const FuchsianSurface s = build_genus2_fn(fn.lengths, fn.twists);
        row.systole = systole(s, 6).length;
        if (row.systole < c.r0) {
            row.status = "thin";
            return row;
        }
        const CurvatureContext base = build_context(s, c.h, c.N, c.r0);
        const CurvatureContext fine_h = build_context(s, std::max(0.005, c.h / 2.0), c.N, c.r0);
        const CurvatureContext more_n = build_context(s, c.h, std::min(10, c.N + 1), c.r0);
        const BoundReport a = bound_report(base, c.sweep.samples, c.seed, &fine_h);
        const BoundReport b = bound_report(base, c.sweep.samples, c.seed, &more_n);
        row.Kh_min = a.Kh_min;
        row.Kh_max = a.Kh_max;
        row.K_min = a.K_min;
        row.K_max = a.K_max;
        row.sup_mu = a.sup_mu;
        row.C1 = a.C1;
        row.C2 = a.C2;
        row.chain_violation = a.chain_violation;
        for (std::size_t i = 0; i < a.rows.size(); ++i) {
            row.C1_h2 = std::max(row.C1_h2, std::abs(a.rows[i].Kh_refined));
            row.C2_h2 = std::max(row.C2_h2, std::abs(a.rows[i].K_refined));
            row.C1_N1 = std::max(row.C1_N1, std::abs(b.rows[i].Kh_refined));
            row.C2_N1 = std::max(row.C2_N1, std::abs(b.rows[i].K_refined));
        }
        row.h0_h2 = sphere_sup(fine_h.basis);
        row.h0_N1 = sphere_sup(more_n.basis);
        row.sup_H = sup_H_of_wolf(base, c.sweep.t);
        if (a.violated()) {
            row.status = "violated";
        }
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    return row;
}

}  // namespace

SweepResult run_sweep(const ExperimentConfig& c) {
    std::vector<FenchelNielsenCoords> grid;
    for (double a : c.sweep.lengths[0]) {
        for (double b : c.sweep.lengths[1]) {
            for (double d : c.sweep.lengths[2]) {
                grid.push_back({{a, b, d}, c.sweep.twists});
            }
        }
    }
    SweepResult out;
    out.rows.resize(grid.size());
    std::atomic<std::size_t> next{0};
    std::mutex log;
    auto worker = [&] {
        for (std::size_t i = next++; i < grid.size(); i = next++) {
            out.rows[i] = sweep_point(c, static_cast<int>(i), grid[i]);
            if (out.rows[i].status != "ok") {
                const std::lock_guard<std::mutex> lock(log);
                std::fprintf(stderr, "sweep point %zu: %s\n", i, out.rows[i].status.c_str());
            }
        }
    };
    const std::size_t threads =
        std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, std::max<std::size_t>(1, grid.size()));
    std::vector<std::thread> pool;
    for (std::size_t k = 1; k < threads; ++k) {
        pool.emplace_back(worker);
    }
    worker();
    for (auto& th : pool) {
        th.join();
    }

    for (const SweepRow& r : out.rows) {
        if (r.status == "thin") {
            ++out.thin;
            continue;
        }
        if (r.status.rfind("error", 0) == 0) {
            ++out.failed;
            continue;
        }
        if (r.status == "violated") {
            ++out.violated;
        }
        ++out.computed;
        out.C1 = std::max(out.C1, r.C1);
        out.C2 = std::max(out.C2, r.C2);
        out.h0 = std::max(out.h0, r.sup_mu);
        out.C1_h2 = std::max(out.C1_h2, r.C1_h2);
        out.C2_h2 = std::max(out.C2_h2, r.C2_h2);
        out.h0_h2 = std::max(out.h0_h2, r.h0_h2);
        out.C1_N1 = std::max(out.C1_N1, r.C1_N1);
        out.C2_N1 = std::max(out.C2_N1, r.C2_N1);
        out.h0_N1 = std::max(out.h0_N1, r.h0_N1);
        out.sup_H = std::max(out.sup_H, r.sup_H);
    }
    return out;
}

CommandResult sweep(const ExperimentConfig& c) {
    const SweepResult s = run_sweep(c);
    std::ostringstream csv;
    csv << "index,l1,l2,l3,t1,t2,t3,status,systole,Kh_min,Kh_max,K_min,K_max,sup_mu,sup_H,"
           "C1,C2,C1_h2,C2_h2,h0_h2,C1_N1,C2_N1,h0_N1,chain_violation\n";
    for (const SweepRow& r : s.rows) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        csv << r.index;
        for (double v : r.fn.lengths) {
            csv << ',' << fmt(v);
        }
        for (double v : r.fn.twists) {
            csv << ',' << fmt(v);
        }
        csv << ',' << status;
        for (double v : {r.systole, r.Kh_min, r.Kh_max, r.K_min, r.K_max, r.sup_mu, r.sup_H, r.C1, r.C2, r.C1_h2,
                         r.C2_h2, r.h0_h2, r.C1_N1, r.C2_N1, r.h0_N1, r.chain_violation}) {
            csv << ',' << fmt(v);
        }
        csv << '\n';
    }
    ordered_json j;
    j["meta"] = meta("sweep", c);
    j["grid_points"] = s.rows.size();
    j["computed"] = s.computed;
    j["thin"] = s.thin;
    j["failed"] = s.failed;
    j["violated"] = s.violated;
    j["C1"] = s.C1;
    j["C2"] = s.C2;
    j["h0"] = s.h0;
    j["sup_H"] = s.sup_H;
    j["refined_h"] = {{"C1", s.C1_h2}, {"C2", s.C2_h2}, {"h0", s.h0_h2}};
    j["refined_N"] = {{"C1", s.C1_N1}, {"C2", s.C2_N1}, {"h0", s.h0_N1}};
    j["max_relative_change"] = s.max_relative_change();
    j["stable"] = s.stable();

    CommandResult r;
    r.json = j.dump(2);
    r.csv = csv.str();
    r.exit_code = s.violated > 0 ? kBoundViolation : kOk;
    r.summary = "sweep: " + std::to_string(s.computed) + " computed, " + std::to_string(s.thin) + " thin, " +
                std::to_string(s.failed) + " failed; C1 " + fmt(s.C1) + ", C2 " + fmt(s.C2) + ", h0 " + fmt(s.h0) +
                (s.stable() ? ", stable" : ", NOT stable");
    return r;
}

// ---- harmonic suite ----

bool HarmonicSuite::bochner_ok() const {
    // the subsolution defect must shrink and be below 1e-3 on the finer mesh
    const bool sub = bochner_fine.subsolution_min >= -1e-3 && bochner_fine.subsolution_min >= bochner.subsolution_min;
    if (t == 0.0) {
        return sub && bochner_fine.residual <= bochner.residual;
    }
    return sub && bochner_ratio >= 2.0;
}

bool HarmonicSuite::dbar_ok() const { return t == 0.0 || dbar_ratio >= 1.5; }

bool HarmonicSuite::ok() const {
    return wolf_ok() && report.all_ok() && bochner_ok() && dbar_ok() && min_jacobian > 0.0 && H_minus_L_min > 0.0 &&
           equivariance_defect < 1e-8 && gradient_norm < 1e-9 && automorphy < 1e-6 && uniqueness < 1e-6 &&
           zeros_violation == 0.0;
}

HarmonicSuite run_harmonic_suite(const ExperimentConfig& c) {
    const FuchsianSurface src = c.surface.build_fn();
    const SystoleResult sys = systole(src, 6);
    if (sys.length < c.r0) {
        throw ThinSurface("source systole " + std::to_string(sys.length) + " below r0");
    }
    HarmonicSuite out;
    out.mesh = std::make_shared<const SurfaceMesh>(build_mesh(src, c.h));
    const SurfaceMesh& m = *out.mesh;
    const Basis basis = build_onb(src, m, c.N);

    out.t = c.t;
    out.direction = c.direction;
    out.source_fn = *src.fn;
    out.h = c.h;
    out.h_fine = std::max(0.005, c.h / 2.0);

    const WolfResult w = wolf_map(basis.phi[c.direction], src, m, basis, c.t);
    out.target_fn = w.fn;
    out.wolf_residual = w.residual;
    out.wolf_iterations = w.iterations;
    const HarmonicMapState& st = w.state;
    out.gradient_norm = st.gradient_norm;
    out.equivariance_defect = st.equivariance_defect;
    out.min_jacobian = st.min_jacobian;

    const QuadDiff hopf = hopf_differential(st);
    const BeltramiField hopf_mu = to_beltrami(m, hopf);
    BeltramiField unit = basis.mu[c.direction];
    const double norm = wp_norm(m, hopf_mu);
    if (c.t != 0.0 && norm > 0.0) {
        unit = hopf_mu;
        for (auto& v : unit.values) {
            v /= norm;
        }
    }
    out.report = energy_report(st, unit);
    out.automorphy = automorphy_residual(m, hopf);

    const EnergyDensities d = energy_densities(st);
    out.H_minus_L_min = std::numeric_limits<double>::infinity();
    for (std::size_t v = 0; v < m.size(); ++v) {
        out.H_minus_L_min = std::min(out.H_minus_L_min, d.H[v] - d.L[v]);
        const double eps = 1e-8;
        if (d.L[v] < eps && !(std::abs(hopf_mu.values[v]) < std::sqrt(d.H[v] * eps))) {
            out.zeros_violation += 1.0;
        }
    }

    // Second initialization: identity coordinates with an equivariant jitter.
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> jitter(-0.01, 0.01);
    std::vector<Complex> start(m.quotient_size());
    for (std::size_t q = 0; q < start.size(); ++q) {
        start[q] = m.vertices[m.representative[q]] + Complex(jitter(rng), jitter(rng));
    }
    const HarmonicMapState other = solve_harmonic(src, w.target, m, &start);
    for (std::size_t v = 0; v < m.size(); ++v) {
        out.uniqueness = std::max(out.uniqueness, std::abs(other.w[v] - st.w[v]));
    }

    const LaplaceOperator L(m);
    out.bochner = bochner_residual(st, L);
    out.dbar = c.t == 0.0 ? 0.0 : dbar_residual(m, hopf);

    const SurfaceMesh fine = build_mesh(src, out.h_fine);
    const HarmonicMapState st_fine = solve_harmonic(src, w.target, fine);
    const LaplaceOperator L_fine(fine);
    out.bochner_fine = bochner_residual(st_fine, L_fine);
    out.dbar_fine = c.t == 0.0 ? 0.0 : dbar_residual(fine, hopf_differential(st_fine));
    out.bochner_ratio = out.bochner.residual / std::max(out.bochner_fine.residual, 1e-300);
    out.dbar_ratio = c.t == 0.0 ? 0.0 : out.dbar / std::max(out.dbar_fine, 1e-300);
    out.state = w.state;
    return out;
}

CommandResult harmonic(const ExperimentConfig& c) {
    const HarmonicSuite s = run_harmonic_suite(c);

    ordered_json j;
    j["meta"] = meta("harmonic", c);
    j["t"] = s.t;
    j["direction"] = s.direction;
    j["source_fn"] = fn_json(s.source_fn);
    j["target_fn"] = fn_json(s.target_fn);
    j["wolf"] = {{"residual", s.wolf_residual}, {"iterations", s.wolf_iterations}, {"ok", s.wolf_ok()}};
    j["energy_report"] = ordered_json::parse(to_json(s.report));
    j["map"] = {{"gradient_norm", s.gradient_norm},
                {"equivariance_defect", s.equivariance_defect},
                {"min_jacobian", s.min_jacobian},
                {"min_H_minus_L", s.H_minus_L_min},
                {"hopf_automorphy", s.automorphy},
                {"uniqueness", s.uniqueness},
                {"zeros_violations", s.zeros_violation}};
    auto boch = [](const BochnerResult& b) {
        return ordered_json{{"residual", b.residual},
                            {"subsolution_min", b.subsolution_min},
                            {"pointwise_residual", b.pointwise_residual},
                            {"pointwise_subsolution_min", b.pointwise_subsolution_min}};
    };
    j["refinement"] = {{"h", s.h},
                       {"h_fine", s.h_fine},
                       {"bochner", boch(s.bochner)},
                       {"bochner_fine", boch(s.bochner_fine)},
                       {"bochner_ratio", s.bochner_ratio},
                       {"dbar", s.dbar},
                       {"dbar_fine", s.dbar_fine},
                       {"dbar_ratio", s.dbar_ratio},
                       {"bochner_ok", s.bochner_ok()},
                       {"dbar_ok", s.dbar_ok()}};
    j["ok"] = s.ok();

    const SurfaceMesh& m = *s.mesh;
    const HarmonicMapState& st = s.state;
    const EnergyDensities d = energy_densities(st);
    const QuadDiff hopf = hopf_differential(st);
    std::ostringstream csv;
    csv << "vertex,x,y,wx,wy,H,L,J,hopf_re,hopf_im\n";
    for (std::size_t v = 0; v < m.size(); ++v) {
        csv << v << ',' << fmt(m.vertices[v].real()) << ',' << fmt(m.vertices[v].imag()) << ',' << fmt(st.w[v].real())
            << ',' << fmt(st.w[v].imag()) << ',' << fmt(d.H[v]) << ',' << fmt(d.L[v]) << ',' << fmt(d.J[v]) << ','
            << fmt(hopf.values[v].real()) << ',' << fmt(hopf.values[v].imag()) << '\n';
    }

    CommandResult r;
    r.json = j.dump(2);
    r.csv = csv.str();
    r.map_json = map_to_json(st);
    r.exit_code = s.ok() ? kOk : kBoundViolation;
    r.summary = "harmonic t=" + fmt(s.t) + ": int J " + fmt(s.report.integral_J) + ", E " + fmt(s.report.energy) +
                ", min H " + fmt(s.report.min_H) + ", Bochner ratio " + fmt(s.bochner_ratio) +
                (s.ok() ? ", all checks pass" : ", CHECK FAILED");
    return r;
}

CommandResult run(const std::string& command, const ExperimentConfig& c) {
    try {
        if (command == "surface-info") {
            return surface_info(c);
        }
        if (command == "curvature") {
            return curvature(c);
        }
        if (command == "sweep") {
            return sweep(c);
        }
        if (command == "harmonic") {
            return harmonic(c);
        }
        throw InvalidSpec("unknown command '" + command + "'");
    } catch (const std::exception& e) {
        CommandResult r;
        r.exit_code = exit_code_for(e);
        r.summary = std::string("error: ") + e.what();
        ordered_json j;
        j["meta"] = meta(command, c);
        j["error"] = e.what();
        j["exit_code"] = r.exit_code;
        r.json = j.dump(2);
        return r;
    }
}

}  // namespace wpgeo::cli
