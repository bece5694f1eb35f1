#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "wpgeo/errors.hpp"
#include "wpgeo/mesh.hpp"

using namespace wpgeo;

namespace {

constexpr double kArea = 4.0 * std::numbers::pi;

double bolza_systole() { return 2.0 * std::acosh(1.0 + std::sqrt(2.0)); }

void check_same_spectrum(const std::vector<double>& a, const std::vector<double>& b, double cutoff) {
    // entries close to the cutoff may fall on either side
    std::vector<double> x, y;
    for (double v : a) if (v < cutoff - 1e-4) x.push_back(v);
    for (double v : b) if (v < cutoff - 1e-4) y.push_back(v);
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(x[i] == doctest::Approx(y[i]).epsilon(1e-6));
}

}  // namespace

TEST_CASE("words") {
    const Word w{1, 2, -1, 3};
    CHECK(inverse_word(w) == Word{-3, 1, -2, -1});
    CHECK(reduce_word(concat(w, inverse_word(w))).empty());
    CHECK(reduce_word(Word{1, -1, 2, 2, -2}) == Word{2});
}

TEST_CASE("Bolza group") {
    const FuchsianSurface s = build_bolza();
    CHECK(s.generators.size() == 4);
    CHECK(s.relator.size() == 8);
    CHECK(s.relator_residual() < 1e-10);
    for (const Mobius& g : s.generators) {
        CHECK(g.is_disk_form());
        // the octagon side pairings all translate by 2 arccosh(1 + sqrt 2)
        CHECK(translation_length(g) == doctest::Approx(bolza_systole()).epsilon(1e-10));
    }
    const SystoleResult sy = systole(s, 6);
    CHECK(sy.length == doctest::Approx(3.0571418).epsilon(1e-7));
    CHECK(sy.length == doctest::Approx(bolza_systole()).epsilon(1e-9));
    CHECK(sy.certified);

    const DirichletDomain dom = dirichlet_domain(s);
    CHECK(dom.sides.size() == 8);
    CHECK(dom.area == doctest::Approx(kArea).epsilon(1e-10));
    for (const auto& side : dom.sides) {
        REQUIRE(side.partner >= 0);
        CHECK(dom.sides[side.partner].partner != -1);
    }
}

TEST_CASE("enumeration counts") {
    const FuchsianSurface s = build_bolza();
    // no relation shorter than the length-8 relator: 1 + 8 sum 7^(k-1)
    CHECK(enumerate_group(s, 0).size() == 1);
    CHECK(enumerate_group(s, 1).size() == 9);
    CHECK(enumerate_group(s, 2).size() == 65);
    CHECK(enumerate_group(s, 3).size() == 457);
    const ElementSet e = enumerate_group(s, 3);
    for (std::size_t i = 0; i < e.size(); i += 17) {
        CHECK(s.evaluate(e.word(i)).equals_up_to_sign(e[i], 1e-9));
        CHECK(e.word_length(i) == static_cast<int>(e.word(i).size()));
    }
}

TEST_CASE("Fenchel-Nielsen cuffs") {
    const std::array<double, 3> lengths{2.2, 2.6, 3.0};
    const FuchsianSurface s = build_genus2_fn(lengths, {0.3, -0.4, 0.5});
    CHECK(s.relator_residual() < 1e-9);
    REQUIRE(s.cuff_words.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(translation_length(s.evaluate(s.cuff_words[i])) == doctest::Approx(lengths[i]).epsilon(1e-9));
    CHECK(dirichlet_domain(s).area == doctest::Approx(kArea).epsilon(1e-9));

    CHECK_THROWS_AS(build_genus2_fn({0.05, 2, 2}, {0, 0, 0}), InvalidFN);
    CHECK_THROWS_AS(build_genus2_fn({2, 9, 2}, {0, 0, 0}), InvalidFN);
}

TEST_CASE("thin surface systole") {
    const FuchsianSurface s = build_genus2_fn({0.3, 2, 2}, {0, 0, 0});
    // acosh near 1 costs digits
    CHECK(systole(s, 6).length == doctest::Approx(0.3).epsilon(1e-7));
}

TEST_CASE("Bolza Fenchel-Nielsen coordinates give an isometric surface") {
    const FenchelNielsenCoords c = bolza_fn_coordinates();
    const FuchsianSurface fn = build_genus2_fn(c.lengths, c.twists);
    const FuchsianSurface b = build_bolza();
    CHECK(systole(fn, 6).length == doctest::Approx(bolza_systole()).epsilon(1e-9));
    const double cutoff = 6.5;
    check_same_spectrum(length_spectrum(b, dirichlet_domain(b), cutoff), length_spectrum(fn, dirichlet_domain(fn), cutoff), cutoff);
}

TEST_CASE("a full Dehn twist does not change the surface") {
    const std::array<double, 3> lengths{2.2, 2.6, 3.0};
    const std::array<double, 3> twists{0.3, -0.4, 0.5};
    const FuchsianSurface s = build_genus2_fn(lengths, twists);
    const double cutoff = 6.0;
    const auto base = length_spectrum(s, dirichlet_domain(s), cutoff);
    CHECK(base.size() > 3);
    for (int i = 0; i < 3; ++i) {
        auto tw = twists;
        tw[i] += lengths[i];
        const FuchsianSurface t = build_genus2_fn(lengths, tw);
        check_same_spectrum(base, length_spectrum(t, dirichlet_domain(t), cutoff), cutoff);
    }
    // while a half twist generally does
    auto tw = twists;
    tw[0] += 0.5 * lengths[0];
    const FuchsianSurface t = build_genus2_fn(lengths, tw);
    CHECK(length_spectrum(t, dirichlet_domain(t), cutoff) != base);
}

TEST_CASE("certified ball contains every short orbit point") {
    const FuchsianSurface s = build_bolza();
    const DirichletDomain dom = dirichlet_domain(s);
    const double r = 6.0;
    const ElementSet ball = certified_ball(s, dom, r);
    const ElementSet words = enumerate_group(s, 3);
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (displacement_of_origin(words[i]) > r) continue;
        bool found = false;
        for (std::size_t j = 0; j < ball.size() && !found; ++j) found = ball[j].equals_up_to_sign(words[i], 1e-8);
        CHECK(found);
    }
}

TEST_CASE("mesh area and identification") {
    const FuchsianSurface s = build_bolza();
    double err[3];
    int k = 0;
    for (double h : {0.2, 0.1, 0.05}) {
        const SurfaceMesh m = build_mesh(s, h);
        err[k++] = std::abs(m.total_area - kArea) / kArea;
        CHECK(m.h <= h * 1.0001);
        double closure = 0.0;
        for (std::size_t v = 0; v < m.size(); ++v) {
            closure = std::max(closure, std::abs(m.to_rep[v](m.vertices[v]) - m.vertices[m.representative[m.quotient[v]]]));
            CHECK(s.evaluate(m.to_rep_word[v]).equals_up_to_sign(m.to_rep[v], 1e-8));
        }
        CHECK(closure < 1e-10);
        double w = 0.0;
        for (double q : m.quotient_weights) w += q;
        CHECK(w == doctest::Approx(m.total_area).epsilon(1e-12));
    }
    CHECK(err[2] < 1e-3);
    // second order: the error drops by about 4 per halving
    CHECK(err[0] / err[1] > 3.0);
    CHECK(err[1] / err[2] > 3.0);
}

TEST_CASE("mesh rejects out of range spacing") {
    CHECK_THROWS(build_mesh(build_bolza(), 0.001));
    CHECK_THROWS(build_mesh(build_bolza(), 0.9));
}

TEST_CASE("hyperbolic triangle area") {
    // small triangle at the origin: sigma = 4 there
    const double e = 1e-3;
    CHECK(hyperbolic_triangle_area(0, e, Complex(0, e)) == doctest::Approx(4.0 * 0.5 * e * e).epsilon(1e-5));
    // the area is additive under subdivision
    const Complex a(0.1, 0.2), b(0.6, 0.1), c(0.3, 0.7), m = (a + b) / 2.0;
    CHECK(hyperbolic_triangle_area(a, b, c) == doctest::Approx(hyperbolic_triangle_area(a, m, c) + hyperbolic_triangle_area(m, b, c)).epsilon(1e-12));
}
