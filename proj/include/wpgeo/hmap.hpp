#pragma once

#include <array>
#include <string>
#include <vector>

#include "wpgeo/elliptic.hpp"
#include "wpgeo/forms.hpp"

namespace wpgeo {

// Equivariant piecewise-linear map from the source mesh into the target disk.
// The unknowns are the images of the quotient vertices; a boundary copy v is
// slaved to its representative by w(v) = rho(T_v)^{-1} w(rep), T_v = to_rep[v].
// The state keeps a pointer to the mesh, which must outlive it.
struct HarmonicMapState {
    const SurfaceMesh* mesh = nullptr;
    FuchsianSurface source;
    FuchsianSurface target;
    std::vector<Complex> image;       // per quotient vertex
    std::vector<Complex> w;           // per mesh vertex
    std::vector<Mobius> image_maps;   // per mesh vertex, rho(T_v)^{-1}

    double energy = 0.0;              // discrete Dirichlet energy
    double gradient_norm = 0.0;       // sup norm of the discrete Euler-Lagrange residual
    double equivariance_defect = 0.0;
    double min_jacobian = 0.0;        // smallest triangle J
    int iterations = 0;
};

struct HarmonicOptions {
    double tolerance = 1e-9;
    int max_iterations = 60;
};

/// Damped Newton on the discrete energy. `init` holds quotient-vertex images;
/// without it the identity coordinates are used (folds in the start are
/// allowed and must be gone at convergence), falling back to continuation in
/// the Fenchel-Nielsen coordinates when both surfaces carry them.
/// Throws NonConvergence or FoldedTriangle.
HarmonicMapState solve_harmonic(const FuchsianSurface& src, const FuchsianSurface& tgt, const SurfaceMesh& m,
                                const std::vector<Complex>* init = nullptr, const HarmonicOptions& opts = {});

struct EnergyDensities {
    ScalarField H, L, e, J;
    std::vector<Complex> wz, wzbar;  // recovered derivatives in each vertex's own chart
};

/// Vertex values from a quadratic least-squares fit of w over the two-ring of
/// each quotient vertex (all copies, carried to the representative's chart).
EnergyDensities energy_densities(const HarmonicMapState& st);

/// rho(w) w_z conj(w_zbar) per mesh vertex.
QuadDiff hopf_differential(const HarmonicMapState& st);

struct BochnerResult {
    /// sup |D(Delta log H - 2H + 2L + 2)|: the identity tested against the
    /// kernel of D, using D Delta = 2D - 2.
    double residual = 0.0;
    /// min D(Delta H - 2JH + 2H); D preserves nonnegativity.
    double subsolution_min = 0.0;
    /// The same two quantities with the pointwise discrete Laplacian.
    double pointwise_residual = 0.0;
    double pointwise_subsolution_min = 0.0;
};
BochnerResult bochner_residual(const HarmonicMapState& st, const LaplaceOperator& L);

struct EnergyReport {
    double integral_L = 0.0;
    double integral_HL = 0.0;
    double integral_J = 0.0;
    double image_area = 0.0;   // sum of exact hyperbolic areas of the image triangles
    double energy = 0.0;       // int (H + L) dA
    double sup_mu = 0.0;       // of the given unit mu
    double sup_hopf_mu = 0.0;  // of the Hopf Beltrami field
    double sup_H = 0.0;
    double min_H = 0.0;
    double hl_mismatch = 0.0;  // max |HL - |mu_hopf|^2| / max(|mu_hopf|^2)
    double energy_identity = 0.0;

    bool integral_L_ok = false;
    bool integral_J_ok = false;
    bool energy_ok = false;
    bool mu_below_H = false;
    bool H_lower_ok = false;
    bool all_ok() const { return integral_L_ok && integral_J_ok && energy_ok && mu_below_H && H_lower_ok; }
};

/// `mu` is the unit-norm Beltrami field along the Hopf differential of `st`
/// (NormMismatch otherwise; for the identity map any unit mu is accepted).
EnergyReport energy_report(const HarmonicMapState& st, const BeltramiField& mu, double tol = 1e-3);

struct WolfResult {
    FuchsianSurface target;
    HarmonicMapState state;
    FenchelNielsenCoords fn;
    double residual = 0.0;  // |P(Hopf) - t phi| / |t| in the basis coordinates
    int iterations = 0;
};

/// Target surface whose harmonic map from `src` has Hopf differential t phi,
/// projected on `basis`. Newton on the six Fenchel-Nielsen coordinates with a
/// finite-difference Jacobian. Throws OutOfRegime for |t| > 0.5, NewtonFailure.
WolfResult wolf_map(const QuadDiff& phi, const FuchsianSurface& src, const SurfaceMesh& m, const Basis& basis,
                    double t, double tolerance = 1e-7);

/// Coordinates <hopf, phi_k> of a quadratic differential on the basis.
Eigen::VectorXcd project(const SurfaceMesh& m, const Basis& basis, const QuadDiff& q);

std::string to_json(const EnergyReport& r);
std::string map_to_json(const HarmonicMapState& st);

}  // namespace wpgeo
