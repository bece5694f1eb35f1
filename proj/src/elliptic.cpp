#include "wpgeo/elliptic.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <cmath>

#include "wpgeo/errors.hpp"

namespace wpgeo {

namespace {

constexpr Eigen::Index kDirectLimit = 200000;

double cot_at(Complex apex, Complex p, Complex q) {
    const Complex u = p - apex;
    const Complex v = q - apex;
    const double cr = u.real() * v.imag() - u.imag() * v.real();
    return (u.real() * v.real() + u.imag() * v.imag()) / std::abs(cr);
}

}  // namespace

LaplaceOperator::LaplaceOperator(const SurfaceMesh& m) : mesh_(&m) {
    const auto n = static_cast<Eigen::Index>(m.quotient_size());
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m.triangles.size() * 9);
    for (const auto& t : m.triangles) {
        const Complex z[3] = {m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]};
        const double area2 = std::abs((z[1] - z[0]).real() * (z[2] - z[0]).imag() -
                                      (z[1] - z[0]).imag() * (z[2] - z[0]).real());
        if (!(area2 > 1e-300)) {
            throw MeshFailure("degenerate triangle in stiffness assembly");
        }
        for (int e = 0; e < 3; ++e) {
            const int a = m.quotient[t[(e + 1) % 3]];
            const int b = m.quotient[t[(e + 2) % 3]];
            const double w = 0.5 * cot_at(z[e], z[(e + 1) % 3], z[(e + 2) % 3]);
            trip.emplace_back(a, a, w);
            trip.emplace_back(b, b, w);
            trip.emplace_back(a, b, -w);
            trip.emplace_back(b, a, -w);
        }
    }
    S_.resize(n, n);
    S_.setFromTriplets(trip.begin(), trip.end());
    S_.makeCompressed();
    for (Eigen::Index k = 0; k < S_.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(S_, k); it; ++it) {
            if (it.row() != it.col() && it.value() > 1e-12) {
                ++positive_offdiag_;
            }
        }
    }
    M_ = Eigen::Map<const Eigen::VectorXd>(m.quotient_weights.data(), n);
    if ((M_.array() <= 0.0).any()) {
        throw MeshFailure("non-positive lumped mass");
    }

    system_ = S_;
    for (Eigen::Index i = 0; i < n; ++i) {
        system_.coeffRef(i, i) += 2.0 * M_(i);
    }
    if (n <= kDirectLimit) {
        direct_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>(system_);
        if (direct_->info() != Eigen::Success) {
            throw SolverFailure("factorization of S + 2M failed");
        }
    } else {
        iterative_ = std::make_shared<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>>();
        iterative_->setTolerance(1e-12);
        iterative_->compute(system_);
    }
}

Eigen::VectorXd LaplaceOperator::apply_D(const Eigen::VectorXd& f) const {
    if (f.size() != size()) {
        throw FieldMeshMismatch("field size does not match the operator");
    }
    const Eigen::VectorXd rhs = 2.0 * M_.cwiseProduct(f);
    Eigen::VectorXd u = direct_ ? Eigen::VectorXd(direct_->solve(rhs)) : Eigen::VectorXd(iterative_->solve(rhs));
    const double res = (system_ * u - rhs).norm();
    if (!(res <= 1e-10 * std::max(1.0, rhs.norm()))) {
        throw SolverFailure("D solve residual " + std::to_string(res));
    }
    return u;
}

Eigen::VectorXcd LaplaceOperator::apply_D(const Eigen::VectorXcd& f) const {
    const Eigen::VectorXd re = apply_D(Eigen::VectorXd(f.real()));
    const Eigen::VectorXd im = apply_D(Eigen::VectorXd(f.imag()));
    Eigen::VectorXcd out(f.size());
    out.real() = re;
    out.imag() = im;
    return out;
}

Eigen::VectorXd LaplaceOperator::laplacian(const Eigen::VectorXd& u) const {
    return -(S_ * u).cwiseQuotient(M_);
}

Eigen::VectorXd LaplaceOperator::restrict(const ScalarField& f) const {
    if (f.size() != mesh_->size()) {
        throw FieldMeshMismatch("field size does not match the mesh");
    }
    Eigen::VectorXd u(size());
    for (Eigen::Index q = 0; q < size(); ++q) {
        u(q) = f[mesh_->representative[q]];
    }
    return u;
}

ScalarField LaplaceOperator::expand(const Eigen::VectorXd& u) const {
    ScalarField f;
    f.values.resize(mesh_->size());
    for (std::size_t v = 0; v < mesh_->size(); ++v) {
        f[v] = u(mesh_->quotient[v]);
    }
    return f;
}

double LaplaceOperator::first_eigenvalue(int iterations) const {
    // Inverse iteration with (S + 2M)^{-1} M, constants projected out.
    Eigen::VectorXd x(size());
    for (Eigen::Index i = 0; i < size(); ++i) {
        x(i) = std::sin(0.7 * static_cast<double>(i) + 0.3) + std::cos(1.3 * static_cast<double>(i));
    }
    const double area = M_.sum();
    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        x.array() -= M_.dot(x) / area;
        x /= std::sqrt(inner(x, x));
        x = 0.5 * apply_D(x);
        x.array() -= M_.dot(x) / area;
        const double rq = x.dot(S_ * x) / inner(x, x);
        if (it > 10 && std::abs(rq - lambda) < 1e-13 * rq) {
            return rq;
        }
        lambda = rq;
    }
    return lambda;
}

LaplaceOperator assemble(const SurfaceMesh& m) { return LaplaceOperator(m); }

ScalarField apply_D(const LaplaceOperator& L, const ScalarField& f) { return L.expand(L.apply_D(L.restrict(f))); }

double check_self_adjoint(const LaplaceOperator& L, const ScalarField& f, const ScalarField& g) {
    const Eigen::VectorXd a = L.restrict(f);
    const Eigen::VectorXd b = L.restrict(g);
    const double lhs = L.inner(L.apply_D(a), b);
    const double rhs = L.inner(a, L.apply_D(b));
    const double scale = std::sqrt(L.inner(a, a) * L.inner(b, b));
    return scale > 0.0 ? std::abs(lhs - rhs) / scale : 0.0;
}

}  // namespace wpgeo
