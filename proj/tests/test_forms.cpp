#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "wpgeo/errors.hpp"
#include "wpgeo/forms.hpp"

using namespace wpgeo;

namespace {

struct Fixture {
    FuchsianSurface s = build_bolza();
    SurfaceMesh m = build_mesh(s, 0.1);
    Basis basis = build_onb(s, m, 6);
};

const Fixture& bolza() {
    static const Fixture f;
    return f;
}

}  // namespace

TEST_CASE("series radius") {
    CHECK(series_radius(6) == 10.0);
    CHECK(series_radius(0) == 4.0);
}

TEST_CASE("Poincare series are automorphic") {
    const auto& f = bolza();
    for (int seed = 0; seed < 4; ++seed) {
        const QuadDiff q = poincare_series(f.s, f.m, seed, 6);
        CHECK(q.seed == seed);
        CHECK(q.depth == 6);
        CHECK(automorphy_residual(f.m, q) < 1e-4);
        // odd seeds cancel to nothing under z -> -z, so only even ones have a meaningful relative tail
        if (seed % 2 == 0) CHECK(q.tail < 1e-3);
    }
    CHECK(f.basis.tail < 1e-3);
}

TEST_CASE("seed evaluator agrees with pointwise evaluation") {
    const auto& f = bolza();
    SeriesEvaluator ev(f.s, f.m.domain, 5, 4);
    const auto fields = ev.sample(f.m);
    REQUIRE(fields.size() == 4);
    Complex out[4];
    for (std::size_t v = 0; v < f.m.size(); v += 97) {
        ev.evaluate(f.m.vertices[v], out);
        for (int k = 0; k < 4; ++k) CHECK(std::abs(out[k] - fields[k].values[v]) <= 1e-12 * (1 + std::abs(out[k])));
    }
}

TEST_CASE("orthonormal basis on Bolza") {
    const auto& f = bolza();
    const Basis& b = f.basis;
    REQUIRE(b.phi.size() == 3);
    REQUIRE(b.mu.size() == 3);
    CHECK((b.gram - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(gram_rank(gram_matrix(f.m, b.mu), 1e-8) == 3);
    // three significant seed directions, then a gap of many orders
    REQUIRE(b.seed_spectrum.size() >= 4);
    CHECK(b.seed_spectrum(3) / b.seed_spectrum(0) < 1e-8);
    CHECK(b.seed_spectrum(2) / b.seed_spectrum(0) > 1e-6);
    for (int k = 0; k < 3; ++k) {
        CHECK(automorphy_residual(f.m, b.phi[k]) < 1e-4);
        CHECK(wp_norm(f.m, b.mu[k]) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("cometric and metric are dual") {
    const auto& f = bolza();
    const Basis& b = f.basis;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const Complex c = wp_cometric(f.m, b.phi[i], b.phi[j]);
            CHECK(std::abs(c - std::conj(wp_inner(f.m, b.mu[i], b.mu[j]))) < 1e-12);
        }
        // <phi, conj(phi)/sigma> = |phi|^2
        CHECK(natural_pairing(f.m, b.phi[i], b.mu[i]) == doctest::Approx(wp_cometric(f.m, b.phi[i], b.phi[i]).real()).epsilon(1e-12));
        const BeltramiField mu = to_beltrami(f.m, b.phi[i]);
        for (std::size_t v = 0; v < f.m.size(); v += 31) CHECK(std::abs(mu.values[v] - b.mu[i].values[v]) < 1e-12);
    }
}

TEST_CASE("Cauchy-Schwarz for the WP inner product") {
    const auto& f = bolza();
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n;
    auto random_field = [&] {
        BeltramiField mu;
        mu.values.assign(f.m.size(), Complex(0, 0));
        for (int k = 0; k < 3; ++k) {
            const Complex c(n(rng), n(rng));
            for (std::size_t v = 0; v < f.m.size(); ++v) mu.values[v] += c * f.basis.mu[k].values[v];
        }
        return mu;
    };
    for (int i = 0; i < 20; ++i) {
        const BeltramiField a = random_field(), b = random_field();
        CHECK(std::abs(wp_inner(f.m, a, b)) <= wp_norm(f.m, a) * wp_norm(f.m, b) * (1 + 1e-12));
        CHECK(std::abs(wp_inner(f.m, a, b) - std::conj(wp_inner(f.m, b, a))) < 1e-12 * std::abs(wp_inner(f.m, a, b)));
    }
}

TEST_CASE("transplanting a seed field onto its own basis") {
    const auto& f = bolza();
    const Basis& b = f.basis;
    // phi_k = sum_i C(i,k) seed_i, so the seed combination C(:,k) has coordinates e_k
    for (int k = 0; k < 3; ++k) {
        const Eigen::VectorXcd x = transplant(f.m, b, b.coefficients.col(k));
        CHECK((x - Eigen::VectorXcd::Unit(3, k)).norm() < 1e-8);
    }
}

TEST_CASE("holomorphy residual decreases under refinement") {
    const FuchsianSurface s = build_bolza();
    const SurfaceMesh coarse = build_mesh(s, 0.2);
    const QuadDiff qc = poincare_series(s, coarse, 0, 6);
    const double rc = dbar_residual(coarse, qc);
    const QuadDiff qf = poincare_series(s, bolza().m, 0, 6);
    const double rf = dbar_residual(bolza().m, qf);
    CHECK(rf < rc);
    CHECK(rf < 0.1);
}

TEST_CASE("rank three on thick Fenchel-Nielsen surfaces") {
    const std::array<std::array<double, 6>, 2> points{{{2.2, 2.6, 3.0, 0.3, -0.4, 0.5}, {3, 3, 3, 0, 0, 0}}};
    for (const auto& p : points) {
        const FuchsianSurface s = build_genus2_fn({p[0], p[1], p[2]}, {p[3], p[4], p[5]});
        const SurfaceMesh m = build_mesh(s, 0.2);
        const Basis b = build_onb(s, m, 6);
        CHECK(b.phi.size() == 3);
        CHECK((b.gram - Eigen::MatrixXcd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);
    }
}

TEST_CASE("size mismatches are rejected") {
    const auto& f = bolza();
    QuadDiff q;
    q.values.assign(5, Complex(1, 0));
    CHECK_THROWS_AS(automorphy_residual(f.m, q), FieldMeshMismatch);
    CHECK_THROWS_AS(wp_cometric(f.m, q, q), FieldMeshMismatch);
}
