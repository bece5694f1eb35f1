#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "wpgeo/elliptic.hpp"
#include "wpgeo/errors.hpp"

using namespace wpgeo;

namespace {

struct Fixture {
    FuchsianSurface s = build_bolza();
    SurfaceMesh m = build_mesh(s, 0.1);
    LaplaceOperator L{m};
};

const Fixture& bolza() {
    static const Fixture f;
    return f;
}

Eigen::VectorXd random_vector(Eigen::Index n, std::mt19937_64& rng, bool nonnegative = false) {
    std::normal_distribution<double> g;
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = nonnegative ? std::abs(g(rng)) : g(rng);
    return v;
}

}  // namespace

TEST_CASE("stiffness annihilates constants and is positive semidefinite") {
    const auto& L = bolza().L;
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(L.size());
    CHECK((L.stiffness() * one).cwiseAbs().maxCoeff() < 1e-10);
    const Eigen::SparseMatrix<double> S = L.stiffness();
    CHECK((Eigen::MatrixXd(S) - Eigen::MatrixXd(S.transpose())).cwiseAbs().maxCoeff() < 1e-12);
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i) {
        const Eigen::VectorXd u = random_vector(L.size(), rng);
        CHECK(u.dot(S * u) >= -1e-10 * u.squaredNorm());
    }
    CHECK(L.mass().minCoeff() > 0.0);
    CHECK(L.mass().sum() == doctest::Approx(bolza().m.total_area).epsilon(1e-12));
}

TEST_CASE("D fixes constants and preserves integrals") {
    const auto& L = bolza().L;
    const Eigen::VectorXd one = Eigen::VectorXd::Ones(L.size());
    CHECK((L.apply_D(one) - one).cwiseAbs().maxCoeff() < 1e-10);
    std::mt19937_64 rng(8);
    for (int i = 0; i < 10; ++i) {
        const Eigen::VectorXd f = random_vector(L.size(), rng);
        CHECK(std::abs(L.integrate(L.apply_D(f)) - L.integrate(f)) < 1e-8 * (1.0 + L.integrate(f.cwiseAbs())));
    }
}

TEST_CASE("D is self-adjoint") {
    const auto& f = bolza();
    std::mt19937_64 rng(12);
    for (int i = 0; i < 10; ++i) {
        ScalarField a, b;
        a.values.resize(f.m.size());
        b.values.resize(f.m.size());
        const Eigen::VectorXd x = random_vector(f.L.size(), rng), y = random_vector(f.L.size(), rng);
        a = f.L.expand(x);
        b = f.L.expand(y);
        CHECK(check_self_adjoint(f.L, a, b) < 1e-10);
    }
}

TEST_CASE("D preserves nonnegativity") {
    const auto& L = bolza().L;
    std::mt19937_64 rng(16);
    for (int i = 0; i < 100; ++i) {
        const Eigen::VectorXd f = random_vector(L.size(), rng, true);
        CHECK(L.apply_D(f).minCoeff() >= -1e-12);
    }
    // a point mass stays nonnegative and spreads everywhere
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(L.size());
    delta(0) = 1.0;
    CHECK(L.apply_D(delta).minCoeff() > 0.0);
}

TEST_CASE("D contracts the sup norm") {
    const auto& L = bolza().L;
    std::mt19937_64 rng(20);
    for (int i = 0; i < 10; ++i) {
        const Eigen::VectorXd f = random_vector(L.size(), rng);
        CHECK(L.apply_D(f).cwiseAbs().maxCoeff() <= f.cwiseAbs().maxCoeff() * (1 + 1e-12));
    }
}

TEST_CASE("D inverts 1 - Delta / 2") {
    const auto& L = bolza().L;
    std::mt19937_64 rng(24);
    const Eigen::VectorXd f = random_vector(L.size(), rng);
    const Eigen::VectorXd u = L.apply_D(f);
    CHECK((u - 0.5 * L.laplacian(u) - f).cwiseAbs().maxCoeff() < 1e-8 * f.cwiseAbs().maxCoeff());
    const Eigen::VectorXcd z = f.cast<Complex>() * Complex(0.3, -1.2);
    CHECK((L.apply_D(z) - u.cast<Complex>() * Complex(0.3, -1.2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("first eigenvalue of the Bolza surface") {
    // the known value lambda_1 = 3.8388872588... for the Bolza surface; P1 elements overestimate it
    const double exact = 3.8388872588;
    const FuchsianSurface s = build_bolza();
    const SurfaceMesh coarse = build_mesh(s, 0.2);
    const double l_coarse = LaplaceOperator(coarse).first_eigenvalue();
    const double l_fine = bolza().L.first_eigenvalue();
    CHECK(std::abs(l_fine - exact) / exact < 0.01);
    CHECK(std::abs(l_fine - exact) < std::abs(l_coarse - exact));
}

TEST_CASE("restriction and expansion") {
    const auto& f = bolza();
    Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(f.L.size(), 0.0, 1.0);
    const ScalarField e = f.L.expand(u);
    CHECK(e.size() == f.m.size());
    CHECK(invariance_defect(f.m, e) == 0.0);
    CHECK((f.L.restrict(e) - u).cwiseAbs().maxCoeff() == 0.0);
    ScalarField one;
    one.values.assign(f.m.size(), 1.0);
    CHECK(integrate(f.m, one) == doctest::Approx(4 * std::numbers::pi).epsilon(1e-3));
}

TEST_CASE("apply_D on fields checks sizes") {
    const auto& f = bolza();
    ScalarField bad;
    bad.values.assign(3, 1.0);
    CHECK_THROWS_AS(apply_D(f.L, bad), FieldMeshMismatch);
}
