#pragma once

#include <Eigen/Dense>
#include <vector>

#include "wpgeo/mesh.hpp"

namespace wpgeo {

// phi dz^2 sampled at every mesh vertex (boundary copies included).
struct QuadDiff {
    std::vector<Complex> values;
    std::vector<Complex> previous;  // depth N-1 values, empty when unknown
    int seed = -1;     // -1 when not a single Poincare series
    int depth = 0;     // truncation parameter N
    double tail = 0.0; // relative sup of phi_N - phi_{N-1}
    std::size_t size() const { return values.size(); }
};

// mu = conj(phi) / sigma, a (-1, 1) tensor; |mu| is Gamma-invariant.
struct BeltramiField {
    std::vector<Complex> values;
    std::size_t size() const { return values.size(); }
};

/// Hyperbolic cutoff radius of truncation depth N: a term g enters at z iff
/// d(0, g z) <= N + 4. Exactly automorphic for every N.
double series_radius(int N);

// Relative Poincare series sum_g f_m(g z) g'(z)^2, f_m(z) = z^m, for all seeds
// m < seeds at once.
class SeriesEvaluator {
public:
    SeriesEvaluator(const FuchsianSurface& s, const DirichletDomain& dom, int N, int seeds);

    int depth() const { return N_; }
    int seeds() const { return seeds_; }
    std::size_t element_count() const { return ar_.size(); }

    /// Values of all seeds at z (z inside the Dirichlet domain); `coarse`
    /// receives the depth N-1 sums when non-null.
    void evaluate(Complex z, Complex* out, Complex* coarse = nullptr) const;
    /// One QuadDiff per seed, sampled on the mesh vertices.
    std::vector<QuadDiff> sample(const SurfaceMesh& m) const;

private:
    struct Anchor {
        Complex centre;
        double reach;
    };
    void evaluate_with(const std::vector<double>& ar, const std::vector<double>& ai, const std::vector<double>& br,
                       const std::vector<double>& bi, Complex z, Complex* out, Complex* coarse) const;

    int N_;
    int seeds_;
    double radius_;
    std::vector<double> ar_, ai_, br_, bi_;
    std::vector<Complex> inverse_orbit_;  // g^{-1}(0)
};

QuadDiff poincare_series(const FuchsianSurface& s, const SurfaceMesh& m, int seed, int N);

/// Cometric pairing sum_v w_v phi1 conj(phi2) / sigma^2.
Complex wp_cometric(const SurfaceMesh& m, const QuadDiff& phi1, const QuadDiff& phi2);
BeltramiField to_beltrami(const SurfaceMesh& m, const QuadDiff& phi);
/// sum_v w_v mu1 conj(mu2).
Complex wp_inner(const SurfaceMesh& m, const BeltramiField& mu1, const BeltramiField& mu2);
double wp_norm(const SurfaceMesh& m, const BeltramiField& mu);
/// Re int phi mu dx dy (Euclidean area element of the disk coordinate).
double natural_pairing(const SurfaceMesh& m, const QuadDiff& phi, const BeltramiField& mu);

/// max over identified copies of |phi(v) - phi(rep) g'(v)^2| / max(1, |phi(v)|).
double automorphy_residual(const SurfaceMesh& m, const QuadDiff& phi);

struct Basis {
    std::vector<QuadDiff> phi;        // WP-orthonormal
    std::vector<BeltramiField> mu;    // mu[k] = conj(phi[k]) / sigma
    Eigen::MatrixXcd gram;            // of the returned mu's
    std::vector<QuadDiff> seed_fields;
    Eigen::MatrixXcd coefficients;    // phi[k] = sum_i coefficients(i, k) seed_fields[i]
    Eigen::VectorXd seed_spectrum;    // Gram eigenvalues of the seed fields, descending
    int seeds_used = 0;
    int depth = 0;
    double tail = 0.0;                // worst basis tail estimate
};

/// WP-orthonormal basis of HB from seeds 0..5 (escalating to 0..9). Throws
/// RankDeficient or RankExcess when the 1e-8 relative Gram rank is not 3g-3.
Basis build_onb(const FuchsianSurface& s, const SurfaceMesh& m, int N);

/// Coordinates in `target` of the field sum_i seed_coeffs(i) target.seed_fields[i],
/// i.e. its cometric projections onto target.phi.
Eigen::VectorXcd transplant(const SurfaceMesh& target_mesh, const Basis& target, const Eigen::VectorXcd& seed_coeffs);

/// Numerical rank of the Gram matrix of the given fields, threshold relative to
/// the largest eigenvalue.
int gram_rank(const Eigen::MatrixXcd& gram, double rel_threshold, Eigen::VectorXd* eigenvalues = nullptr);
Eigen::MatrixXcd gram_matrix(const SurfaceMesh& m, const std::vector<BeltramiField>& mu);

/// Discrete d-bar residual of phi: RMS of the triangle-wise d-bar derivative of
/// the P1 interpolant, relative to the RMS of |phi|, both in sigma-normalized units.
double dbar_residual(const SurfaceMesh& m, const QuadDiff& phi);

}  // namespace wpgeo
