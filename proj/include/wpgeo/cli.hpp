#pragma once

// Batch experiment driver behind the wpgeo tool. Every command returns its
// report as strings plus an exit code; writing files is left to the caller.

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wpgeo/hmap.hpp"
#include "wpgeo/wpcurv.hpp"

namespace wpgeo::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kOk = 0,
    kInvalidSpec = 2,
    kNonDiscrete = 3,
    kRankDeficient = 4,
    kBoundViolation = 5,
    kThin = 6,
    kNonConvergence = 7,
};

/// Exit code for an exception escaping a command.
int exit_code_for(const std::exception& e);

struct SurfaceSpec {
    std::string name = "bolza";  // "bolza" or "fn"
    std::optional<FenchelNielsenCoords> fn;

    FuchsianSurface build() const;
    /// Fenchel-Nielsen realization; for the Bolza surface the isometric FN surface.
    FuchsianSurface build_fn() const;
    FenchelNielsenCoords coordinates() const;
};

struct SweepGrid {
    std::array<std::vector<double>, 3> lengths{{{2.0, 3.0, 4.0}, {2.0, 3.0, 4.0}, {2.0, 3.0, 4.0}}};
    std::array<double, 3> twists{};
    int samples = 50;
    double t = 0.1;  // Wolf parameter for the sup H column; 0 skips the harmonic map
};

struct ExperimentConfig {
    SurfaceSpec surface;
    double h = 0.1;
    int N = 6;
    int samples = 200;
    unsigned long long seed = 42;
    double r0 = 0.5;
    bool refine = true;  // curvature: error estimates from h/2
    std::string out;
    SweepGrid sweep;
    double t = 0.1;      // harmonic
    int direction = 0;   // harmonic: basis index of phi

    /// Canonical JSON of the effective settings (output path excluded).
    std::string canonical() const;
    /// FNV-1a of canonical(), 16 hex digits.
    std::string hash() const;
};

/// Parses and validates a JSON config. Throws InvalidSpec.
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
void validate(const ExperimentConfig& c);

struct CommandResult {
    int exit_code = kOk;
    std::string json;
    std::string csv;       // empty when the command has no table
    std::string map_json;  // harmonic only
    std::string summary;   // one line for the terminal
};

CommandResult surface_info(const ExperimentConfig& c);
CommandResult curvature(const ExperimentConfig& c);
CommandResult sweep(const ExperimentConfig& c);
CommandResult harmonic(const ExperimentConfig& c);

/// Dispatches by name and maps escaping exceptions onto exit codes.
CommandResult run(const std::string& command, const ExperimentConfig& c);

struct SweepRow {
    int index = 0;
    FenchelNielsenCoords fn;
    std::string status = "ok";  // ok, thin, violated, error: ...
    double systole = 0.0;
    double Kh_min = 0.0, Kh_max = 0.0, K_min = 0.0, K_max = 0.0;
    double sup_mu = 0.0, sup_H = 0.0;
    double C1 = 0.0, C2 = 0.0;
    double C1_h2 = 0.0, C2_h2 = 0.0, h0_h2 = 0.0;  // same directions at h/2
    double C1_N1 = 0.0, C2_N1 = 0.0, h0_N1 = 0.0;  // same directions at N+1
    double chain_violation = 0.0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double C1 = 0.0, C2 = 0.0, h0 = 0.0;
    double C1_h2 = 0.0, C2_h2 = 0.0, h0_h2 = 0.0;
    double C1_N1 = 0.0, C2_N1 = 0.0, h0_N1 = 0.0;
    double sup_H = 0.0;
    int computed = 0, thin = 0, failed = 0, violated = 0;
    /// Largest relative change of C1, C2, h0 under h -> h/2 and N -> N+1.
    double max_relative_change() const;
    bool stable(double tol = 0.05) const { return computed > 0 && max_relative_change() < tol; }
};

/// Grid points run in parallel; rows come back in grid order.
SweepResult run_sweep(const ExperimentConfig& c);

struct HarmonicSuite {
    double t = 0.0;
    int direction = 0;
    FenchelNielsenCoords source_fn, target_fn;
    double wolf_residual = 0.0;
    int wolf_iterations = 0;

    EnergyReport report;
    double gradient_norm = 0.0;
    double equivariance_defect = 0.0;
    double min_jacobian = 0.0;
    double H_minus_L_min = 0.0;      // min (H - L) over vertices
    double automorphy = 0.0;         // of the Hopf differential
    double uniqueness = 0.0;         // sup |w1 - w2| from a jittered start
    double zeros_violation = 0.0;    // vertices with L < eps but |mu| >= sqrt(H eps)

    double h = 0.0, h_fine = 0.0;
    BochnerResult bochner, bochner_fine;
    double dbar = 0.0, dbar_fine = 0.0;
    double bochner_ratio = 0.0, dbar_ratio = 0.0;

    std::shared_ptr<const SurfaceMesh> mesh;  // owns the mesh `state` points into
    HarmonicMapState state;

    bool wolf_ok() const { return t == 0.0 || wolf_residual < 1e-5; }
    bool bochner_ok() const;
    bool dbar_ok() const;
    bool ok() const;
};

/// Wolf target from the config surface, harmonic map at h and h/2, and every check.
HarmonicSuite run_harmonic_suite(const ExperimentConfig& c);

}  // namespace wpgeo::cli
