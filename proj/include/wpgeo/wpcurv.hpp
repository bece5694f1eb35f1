#pragma once

#include <Eigen/Dense>
#include <memory>
#include <string>
#include <vector>

#include "wpgeo/elliptic.hpp"
#include "wpgeo/forms.hpp"

namespace wpgeo {

// R_{a b' c d'} over a WP-orthonormal basis. All integrals use the quotient
// quadrature of the Laplace operator, so D is exactly self-adjoint in it.
struct CurvatureTensor {
    int dim = 0;
    std::vector<Complex> I;  // I(a,b,c,d) = int D(mu_a conj mu_b) mu_c conj mu_d dA
    std::vector<Complex> R;

    std::size_t index(int a, int b, int c, int d) const {
        return ((static_cast<std::size_t>(a) * dim + b) * dim + c) * dim + d;
    }
    Complex operator()(int a, int b, int c, int d) const { return R[index(a, b, c, d)]; }
    Complex integral(int a, int b, int c, int d) const { return I[index(a, b, c, d)]; }

    /// max |R_{ab'cd'} - R_{cd'ab'}|
    double pair_symmetry_defect() const;
    /// max |R_{ab'cd'} - conj R_{ba'dc'}|
    double hermitian_defect() const;
};

CurvatureTensor riemann_tensor(const Basis& basis, const LaplaceOperator& L);

/// Quotient values of a mesh field (representative copies).
Eigen::VectorXcd restrict_complex(const LaplaceOperator& L, const BeltramiField& mu);
/// sum_a x_a mu_a
BeltramiField combine(const Basis& basis, const Eigen::VectorXcd& x);
/// int |mu|^2 dA in the quotient quadrature.
double quotient_norm2(const LaplaceOperator& L, const BeltramiField& mu);

/// -2 int D(|mu|^2) |mu|^2 dA, one D-solve. Throws NotUnitNorm.
double holo_sectional(const BeltramiField& mu, const LaplaceOperator& L);
/// Same quantity from the tensor: -R(x, x, x, x) for unit x, since R_{aa'aa'} = 2 int D(|mu_a|^2)|mu_a|^2.
double holo_sectional(const CurvatureTensor& T, const Eigen::VectorXcd& x);

struct SectionalTerms {
    double K = 0.0;
    double cross = 0.0;        // Re int D(mu0 conj mu1) mu0 conj mu1
    double cross_conj = 0.0;   // Re int D(mu0 conj mu1) mu1 conj mu0
    double mixed = 0.0;        // int D(|mu1|^2) |mu0|^2
    double chain_bound() const { return 2.0 * mixed; }
};

/// Curvature of the plane spanned by an orthonormal pair. Throws NotOrthonormal.
SectionalTerms sectional_terms(const BeltramiField& mu0, const BeltramiField& mu1, const LaplaceOperator& L);
double sectional(const BeltramiField& mu0, const BeltramiField& mu1, const LaplaceOperator& L);
/// (R(x,y,x,y) - R(x,y,y,x) - R(y,x,x,y) + R(y,x,y,x)) / 4 for coordinate vectors.
double sectional(const CurvatureTensor& T, const Eigen::VectorXcd& x, const Eigen::VectorXcd& y);
/// int D(|mu_y|^2) |mu_x|^2 dA from the tensor integrals.
double mixed_term(const CurvatureTensor& T, const Eigen::VectorXcd& x, const Eigen::VectorXcd& y);

struct RicciScalar {
    std::vector<double> ricci;  // Ric_{aa'} = -sum_d R_{aa'dd'}
    double scalar = 0.0;        // 2 sum_a Ric_{aa'}
};
RicciScalar ricci_and_scalar(const CurvatureTensor& T);
/// -sum_{a,b,d} x_a conj(x_b) R_{ab'dd'}
double ricci_form(const CurvatureTensor& T, const Eigen::VectorXcd& x);

/// Largest |sum_a x_a mu_a(v)| over unit x and mesh vertices v.
double sphere_sup(const Basis& basis);

// Everything needed to evaluate curvature on one surface at one resolution.
struct CurvatureContext {
    FuchsianSurface surface;
    double h = 0.0;
    int N = 0;
    std::unique_ptr<SurfaceMesh> mesh;
    Basis basis;
    std::unique_ptr<LaplaceOperator> L;
    CurvatureTensor tensor;
    double systole = 0.0;
};

/// Mesh, basis, operator and tensor. Throws ThinSurface when the systole is below r0.
CurvatureContext build_context(const FuchsianSurface& s, double h, int N, double r0 = 0.5);

/// Coordinates in `to` of the unit direction with coordinates x in `from`,
/// matched through the shared Poincare series seeds.
Eigen::VectorXcd carry_direction(const CurvatureContext& from, const CurvatureContext& to, const Eigen::VectorXcd& x);

struct SampleRow {
    int index = 0;
    double Kh = 0.0;
    double Kh_direct = 0.0;
    double Kh_refined = 0.0;
    double K = 0.0;
    double K_direct = 0.0;
    double K_refined = 0.0;
    double chain_bound = 0.0;
};

struct BoundReport {
    std::string surface;
    double h = 0.0;
    int N = 0;
    unsigned long long seed = 0;
    int samples = 0;
    double systole = 0.0;

    double Kh_min = 0.0, Kh_max = 0.0;
    double K_min = 0.0, K_max = 0.0;
    std::vector<double> ricci;
    double scalar = 0.0;
    double C1 = 0.0;           // max |K_h| observed
    double C2 = 0.0;           // max |K| observed
    double sup_mu = 0.0;       // sup over the unit sphere of HB and the surface

    // margins to the upper bounds (positive = bound holds)
    double kh_margin = 0.0;
    double ricci_margin = 0.0;
    double scalar_margin = 0.0;
    double sectional_margin = 0.0;   // -K_max

    // discretization error estimates from the refined context (0 when absent)
    bool refined = false;
    double Kh_error = 0.0;
    double K_error = 0.0;
    double ric_error = 0.0;
    double scalar_error = 0.0;

    double chain_violation = 0.0;  // max(|K| - 2 int D(|mu1|^2)|mu0|^2, 0)
    double h0_violation = 0.0;     // max(|K_h| - 2 sup|mu|^2, 0)
    double path_discrepancy = 0.0; // direct D-solve vs tensor contraction
    double tensor_symmetry = 0.0;

    std::vector<SampleRow> rows;

    bool violated() const;
    /// Every bound holds with margin above three times the discretization error.
    bool confirmed() const;
    std::string status() const;
};

/// Samples unit directions and orthonormal pairs (Gaussian coordinates in the
/// ONB, fixed seed). With `refined` (same surface, finer h), every direction
/// is carried over to estimate the discretization error sample by sample.
BoundReport bound_report(const CurvatureContext& ctx, int samples, unsigned long long seed,
                         const CurvatureContext* refined = nullptr);

std::string to_json(const BoundReport& r);
std::string to_csv(const BoundReport& r);

}  // namespace wpgeo
