#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <memory>

#include "wpgeo/mesh.hpp"

namespace wpgeo {

// Cotangent stiffness S and sigma-weighted lumped mass M on the quotient
// vertices; the discrete Laplacian is -M^{-1} S.
class LaplaceOperator {
public:
    explicit LaplaceOperator(const SurfaceMesh& m);

    const SurfaceMesh& mesh() const { return *mesh_; }
    const Eigen::SparseMatrix<double>& stiffness() const { return S_; }
    const Eigen::VectorXd& mass() const { return M_; }
    Eigen::Index size() const { return M_.size(); }
    /// Off-diagonal stiffness entries that are positive (non-Delaunay edges).
    int positive_offdiagonals() const { return positive_offdiag_; }

    /// u = D f, i.e. (S + 2M) u = 2 M f.
    Eigen::VectorXd apply_D(const Eigen::VectorXd& f) const;
    Eigen::VectorXcd apply_D(const Eigen::VectorXcd& f) const;
    /// Delta u = -M^{-1} S u.
    Eigen::VectorXd laplacian(const Eigen::VectorXd& u) const;

    /// Quotient-vertex values of a Gamma-invariant mesh field (representative copy).
    Eigen::VectorXd restrict(const ScalarField& f) const;
    ScalarField expand(const Eigen::VectorXd& u) const;
    double integrate(const Eigen::VectorXd& u) const { return M_.dot(u); }
    double inner(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const { return u.dot(M_.cwiseProduct(v)); }

    /// Smallest nonzero eigenvalue of S x = lambda M x by shifted inverse iteration.
    double first_eigenvalue(int iterations = 400) const;

private:
    const SurfaceMesh* mesh_;
    Eigen::SparseMatrix<double> S_;
    Eigen::VectorXd M_;
    int positive_offdiag_ = 0;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> direct_;
    std::shared_ptr<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>> iterative_;
    Eigen::SparseMatrix<double> system_;
};

LaplaceOperator assemble(const SurfaceMesh& m);
ScalarField apply_D(const LaplaceOperator& L, const ScalarField& f);
/// |<Df, g> - <f, Dg>| / (|f| |g|) in the M-weighted inner product.
double check_self_adjoint(const LaplaceOperator& L, const ScalarField& f, const ScalarField& g);

}  // namespace wpgeo
