#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "wpgeo/errors.hpp"
#include "wpgeo/hmap.hpp"

using namespace wpgeo;

namespace {

constexpr double kArea = 4.0 * std::numbers::pi;

struct Fixture {
    FuchsianSurface src;
    SurfaceMesh m;
    Basis basis;
    Fixture() {
        const FenchelNielsenCoords c = bolza_fn_coordinates();
        src = build_genus2_fn(c.lengths, c.twists);
        m = build_mesh(src, 0.1);
        basis = build_onb(src, m, 6);
    }
};

const Fixture& fixture() {
    static const Fixture f;
    return f;
}

BeltramiField unit_hopf_mu(const HarmonicMapState& st) {
    BeltramiField mu = to_beltrami(*st.mesh, hopf_differential(st));
    const double n = wp_norm(*st.mesh, mu);
    for (auto& v : mu.values) v /= n;
    return mu;
}

FuchsianSurface perturbed_target() {
    FenchelNielsenCoords c = bolza_fn_coordinates();
    c.lengths[0] += 0.1;
    c.twists[1] += 0.1;
    return build_genus2_fn(c.lengths, c.twists);
}

}  // namespace

TEST_CASE("identity map") {
    const auto& f = fixture();
    const HarmonicMapState st = solve_harmonic(f.src, f.src, f.m);
    CHECK(st.gradient_norm < 1e-9);
    CHECK(st.equivariance_defect < 1e-10);
    CHECK(st.min_jacobian > 0.0);
    // the discrete minimizer sits within O(h^2) of the vertex positions
    double shift = 0.0;
    for (std::size_t v = 0; v < f.m.size(); ++v) shift = std::max(shift, std::abs(st.w[v] - f.m.vertices[v]));
    CHECK(shift < 1e-4);
    const EnergyDensities d = energy_densities(st);
    for (std::size_t v = 0; v < f.m.size(); ++v) {
        CHECK(d.H[v] == doctest::Approx(1.0).epsilon(2e-3));
        CHECK(d.L[v] < 1e-4);
    }
    const EnergyReport r = energy_report(st, f.basis.mu[0]);
    CHECK(r.integral_J == doctest::Approx(kArea).epsilon(1e-3));
    CHECK(r.energy == doctest::Approx(kArea).epsilon(1e-3));
    CHECK(r.image_area == doctest::Approx(f.m.total_area).epsilon(1e-6));
}

TEST_CASE("harmonic map to a nearby surface") {
    const auto& f = fixture();
    const FuchsianSurface tgt = perturbed_target();
    const HarmonicMapState st = solve_harmonic(f.src, tgt, f.m);
    CHECK(st.gradient_norm < 1e-9);
    CHECK(st.equivariance_defect < 1e-8);
    CHECK(st.min_jacobian > 0.0);

    const EnergyReport r = energy_report(st, unit_hopf_mu(st));
    // Gauss-Bonnet for the image and the pointwise identity e = J + 2L
    CHECK(r.image_area == doctest::Approx(kArea).epsilon(1e-3));
    CHECK(r.integral_J == doctest::Approx(kArea).epsilon(1e-3));
    CHECK(r.energy_identity < 1e-10 * r.energy);
    CHECK(r.energy > kArea);  // not conformal
    CHECK(r.energy <= kArea + 2.0);
    CHECK(r.min_H >= 1.0 - 1e-3);
    CHECK(r.mu_below_H);
    // HL = |mu_hopf|^2 up to the derivative recovery error
    CHECK(r.hl_mismatch < 0.05);

    // the Hopf differential is holomorphic and automorphic to discretization accuracy
    const QuadDiff hopf = hopf_differential(st);
    CHECK(automorphy_residual(f.m, hopf) < 1e-6);
    CHECK(dbar_residual(f.m, hopf) < 0.2);
}

TEST_CASE("uniqueness of the harmonic map") {
    const auto& f = fixture();
    const FuchsianSurface tgt = perturbed_target();
    const HarmonicMapState a = solve_harmonic(f.src, tgt, f.m);
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(-0.01, 0.01);
    std::vector<Complex> start(f.m.quotient_size());
    for (std::size_t q = 0; q < start.size(); ++q) start[q] = a.image[q] + Complex(u(rng), u(rng));
    const HarmonicMapState b = solve_harmonic(f.src, tgt, f.m, &start);
    double diff = 0.0;
    for (std::size_t v = 0; v < f.m.size(); ++v) diff = std::max(diff, std::abs(a.w[v] - b.w[v]));
    CHECK(diff < 1e-6);
    CHECK(b.energy == doctest::Approx(a.energy).epsilon(1e-12));
}

TEST_CASE("Bochner residual of the identity") {
    const auto& f = fixture();
    const HarmonicMapState st = solve_harmonic(f.src, f.src, f.m);
    const BochnerResult b = bochner_residual(st, LaplaceOperator(f.m));
    CHECK(b.residual < 1e-2);
    CHECK(b.subsolution_min > -1e-2);
}

TEST_CASE("Wolf map round trip") {
    const auto& f = fixture();
    const FenchelNielsenCoords c0 = bolza_fn_coordinates();
    const WolfResult w1 = wolf_map(f.basis.phi[1], f.src, f.m, f.basis, 0.05);
    const WolfResult w2 = wolf_map(f.basis.phi[1], f.src, f.m, f.basis, 0.1);
    CHECK(w1.residual < 1e-5);
    CHECK(w2.residual < 1e-5);
    // the target moves linearly in t to first order
    double d1 = 0.0, d2 = 0.0;
    for (int i = 0; i < 3; ++i) {
        d1 += std::pow(w1.fn.lengths[i] - c0.lengths[i], 2) + std::pow(w1.fn.twists[i] - c0.twists[i], 2);
        d2 += std::pow(w2.fn.lengths[i] - c0.lengths[i], 2) + std::pow(w2.fn.twists[i] - c0.twists[i], 2);
    }
    CHECK(std::sqrt(d2 / d1) == doctest::Approx(2.0).epsilon(0.05));
    // the recovered Hopf differential points along phi
    const Eigen::VectorXcd p = project(f.m, f.basis, hopf_differential(w2.state));
    CHECK(std::abs(p(1) - 0.1) < 1e-6);

    const WolfResult w0 = wolf_map(f.basis.phi[0], f.src, f.m, f.basis, 0.0);
    CHECK(w0.residual == 0.0);
    CHECK_THROWS_AS(wolf_map(f.basis.phi[0], f.src, f.m, f.basis, 0.6), OutOfRegime);
}

TEST_CASE("energy report rejects fields that are not unit norm") {
    const auto& f = fixture();
    const HarmonicMapState st = solve_harmonic(f.src, f.src, f.m);
    BeltramiField mu = f.basis.mu[0];
    for (auto& v : mu.values) v *= 2.0;
    CHECK_THROWS_AS(energy_report(st, mu), NormMismatch);
}

TEST_CASE("initial guess size is checked") {
    const auto& f = fixture();
    const std::vector<Complex> bad(3);
    CHECK_THROWS_AS(solve_harmonic(f.src, f.src, f.m, &bad), FieldMeshMismatch);
}
