#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "wpgeo/errors.hpp"
#include "wpgeo/hypgeo.hpp"

using namespace wpgeo;

namespace {

Complex random_point(std::mt19937_64& rng, double rmax = 0.9) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double r = rmax * std::sqrt(u(rng));
    return std::polar(r, 2.0 * M_PI * u(rng));
}

Mobius random_isometry(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 2.0 * M_PI);
    return compose(Mobius::rotation(u(rng)), Mobius::to_origin(random_point(rng, 0.8)));
}

}  // namespace

TEST_CASE("distance from the origin is 2 artanh r") {
    for (double r : {0.0, 0.1, 0.5, 0.9, 0.999}) {
        CHECK(hyperbolic_distance(Complex(0, 0), Complex(r, 0)) == doctest::Approx(std::log((1 + r) / (1 - r))).epsilon(1e-12));
        CHECK(hyperbolic_distance(Complex(0, 0), std::polar(r, 1.3)) == doctest::Approx(2 * std::atanh(r)).epsilon(1e-12));
    }
}

TEST_CASE("metric density") {
    CHECK(metric_density(Complex(0, 0)) == 4.0);
    CHECK(metric_density(Complex(0.5, 0)) == doctest::Approx(4.0 / (0.75 * 0.75)));
    // isometries pull back sigma: sigma(g z) |g'(z)|^2 = sigma(z)
    std::mt19937_64 rng(3);
    for (int i = 0; i < 50; ++i) {
        const Mobius g = random_isometry(rng);
        const Complex z = random_point(rng);
        CHECK(metric_density(g(z)) * std::norm(g.derivative(z)) == doctest::Approx(metric_density(z)).epsilon(1e-9));
    }
}

TEST_CASE("isometries preserve distance and the disk") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 200; ++i) {
        const Mobius g = random_isometry(rng);
        REQUIRE(g.is_disk_form());
        const Complex z = random_point(rng), w = random_point(rng);
        CHECK(hyperbolic_distance(g(z), g(w)) == doctest::Approx(hyperbolic_distance(z, w)).epsilon(1e-9));
        CHECK(std::abs(g(z)) < 1.0);
        const Complex b = std::polar(1.0, 0.1 * i);
        CHECK(std::abs(g(b)) == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("composition and inverse") {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        const Mobius f = random_isometry(rng), g = random_isometry(rng);
        const Complex z = random_point(rng);
        const Mobius fg = compose(f, g);
        CHECK(std::abs(fg(z) - f(g(z))) < 1e-12);
        CHECK(fg.is_disk_form(1e-12));
        CHECK(compose(f, f.inverse()).distance_to_identity() < 1e-12);
        CHECK(std::abs(fg.derivative(z) - f.derivative(g(z)) * g.derivative(z)) < 1e-10);
    }
    const Mobius r = Mobius::rotation(0.7);
    CHECK(r.equals_up_to_sign(Mobius(-r.a(), -r.b(), -r.c(), -r.d())));
}

TEST_CASE("translation length") {
    for (double L : {0.1, 1.0, 3.0571418, 7.0}) {
        const Mobius T = Mobius::translation(L);
        CHECK(translation_length(T) == doctest::Approx(L).epsilon(1e-12));
        CHECK(displacement_of_origin(T) == doctest::Approx(L).epsilon(1e-12));
        CHECK(T(Complex(0, 0)).real() == doctest::Approx(std::tanh(L / 2)));
        // conjugation does not change it
        const Mobius c = Mobius::to_origin(Complex(0.3, -0.4));
        CHECK(translation_length(compose(c, compose(T, c.inverse()))) == doctest::Approx(L).epsilon(1e-10));
    }
    CHECK_THROWS_AS(translation_length(Mobius::rotation(0.5)), ElementNotHyperbolic);
    CHECK_THROWS_AS(translation_length(Mobius::identity()), ElementNotHyperbolic);
    const Mobius parabolic(Complex(1, 1), Complex(-1, 0), Complex(-1, 0), Complex(1, -1));
    CHECK_THROWS_AS(translation_length(parabolic), ElementNotHyperbolic);
}

TEST_CASE("disk points reject the boundary") {
    CHECK_NOTHROW(DiskPoint(Complex(0.99, 0)));
    CHECK_THROWS(DiskPoint(Complex(1.0, 0)));
    CHECK_THROWS(DiskPoint(Complex(0.8, 0.8)));
    CHECK_THROWS(Mobius(1, 1, 1, 1));
}

TEST_CASE("geodesics") {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 50; ++i) {
        const Complex p = random_point(rng), q = random_point(rng);
        const double d = hyperbolic_distance(p, q);
        const Complex m = geodesic_point(p, q, 0.3);
        CHECK(hyperbolic_distance(p, m) == doctest::Approx(0.3 * d).epsilon(1e-9));
        CHECK(hyperbolic_distance(m, q) == doctest::Approx(0.7 * d).epsilon(1e-9));
        CHECK(std::abs(geodesic_point(p, q, 1.0) - q) < 1e-12);
        CHECK(std::abs(geodesic_direction(p, q)) == doctest::Approx(1.0));
        // the direction is the tangent of the parametrized geodesic
        const Complex step = geodesic_point(p, q, 1e-6) - p;
        CHECK(std::abs(step / std::abs(step) - geodesic_direction(p, q)) < 1e-5);
    }
}

TEST_CASE("Klein model round trip") {
    std::mt19937_64 rng(23);
    for (int i = 0; i < 100; ++i) {
        const Complex z = random_point(rng, 0.99);
        CHECK(std::abs(klein_to_poincare(poincare_to_klein(z)) - z) < 1e-12);
    }
    // geodesics through 0 are straight in both models; radial distance in Klein is artanh |k|
    const Complex k(0.6, 0.0);
    CHECK(hyperbolic_distance(Complex(0, 0), klein_to_poincare(k)) == doctest::Approx(std::atanh(0.6)).epsilon(1e-12));
}
