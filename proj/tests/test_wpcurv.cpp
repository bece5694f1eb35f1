#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "wpgeo/errors.hpp"
#include "wpgeo/wpcurv.hpp"

using namespace wpgeo;

namespace {

const CurvatureContext& bolza() {
    static const CurvatureContext c = build_context(build_bolza(), 0.1, 6);
    return c;
}

Eigen::VectorXcd unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::VectorXcd x(3);
    for (int a = 0; a < 3; ++a) x(a) = {n(rng), n(rng)};
    return x.normalized();
}

// y orthogonal to x and to i x, i.e. a real-orthonormal pair spanning a totally real plane
Eigen::VectorXcd partner(const Eigen::VectorXcd& x, std::mt19937_64& rng) {
    Eigen::VectorXcd y = unit(rng);
    y -= x.dot(y) * x;
    return y.normalized();
}

constexpr double kKhBound = -1.0 / (2.0 * std::numbers::pi);
constexpr double kScalarBound = -3.0 / std::numbers::pi;

}  // namespace

TEST_CASE("tensor symmetries") {
    const CurvatureTensor& T = bolza().tensor;
    CHECK(T.dim == 3);
    CHECK(T.pair_symmetry_defect() < 1e-12);
    CHECK(T.hermitian_defect() < 1e-12);
}

TEST_CASE("holomorphic sectional curvature: direct solve and tensor agree") {
    const auto& c = bolza();
    std::mt19937_64 rng(1);
    for (int i = 0; i < 10; ++i) {
        const Eigen::VectorXcd x = unit(rng);
        const double direct = holo_sectional(combine(c.basis, x), *c.L);
        const double tensor = holo_sectional(c.tensor, x);
        CHECK(direct == doctest::Approx(tensor).epsilon(1e-9));
        CHECK(tensor < kKhBound);
        // depends on the complex line only
        CHECK(holo_sectional(c.tensor, x * std::polar(1.0, 0.7)) == doctest::Approx(tensor).epsilon(1e-12));
    }
    BeltramiField twice = combine(c.basis, 2.0 * Eigen::VectorXcd::Unit(3, 0));
    CHECK_THROWS_AS(holo_sectional(twice, *c.L), NotUnitNorm);
}

TEST_CASE("sectional curvature: direct solve and tensor agree, negative, chain bound") {
    const auto& c = bolza();
    std::mt19937_64 rng(2);
    for (int i = 0; i < 10; ++i) {
        const Eigen::VectorXcd x = unit(rng), y = partner(x, rng);
        const SectionalTerms t = sectional_terms(combine(c.basis, x), combine(c.basis, y), *c.L);
        CHECK(t.K == doctest::Approx(sectional(c.tensor, x, y)).epsilon(1e-8));
        CHECK(t.K < 0.0);
        CHECK(std::abs(t.K) <= t.chain_bound() + 1e-6);
        CHECK(t.mixed == doctest::Approx(mixed_term(c.tensor, x, y)).epsilon(1e-8));
        // K(x, x) along the complex line equals the holomorphic sectional curvature
        CHECK(sectional(c.tensor, x, Complex(0, 1) * x) == doctest::Approx(holo_sectional(c.tensor, x)).epsilon(1e-10));
    }
    const Eigen::VectorXcd x = Eigen::VectorXcd::Unit(3, 0);
    CHECK_THROWS_AS(sectional_terms(combine(c.basis, x), combine(c.basis, x), *c.L), NotOrthonormal);
}

TEST_CASE("scalar curvature is the sum of sectional curvatures over a real frame") {
    const CurvatureTensor& T = bolza().tensor;
    std::vector<Eigen::VectorXcd> frame;
    for (int a = 0; a < 3; ++a) {
        frame.push_back(Eigen::VectorXcd::Unit(3, a));
        frame.push_back(Complex(0, 1) * Eigen::VectorXcd::Unit(3, a));
    }
    double s = 0.0;
    for (std::size_t i = 0; i < frame.size(); ++i)
        for (std::size_t j = 0; j < frame.size(); ++j)
            if (i != j) s += sectional(T, frame[i], frame[j]);
    const RicciScalar rs = ricci_and_scalar(T);
    CHECK(rs.scalar == doctest::Approx(s).epsilon(1e-10));
    double ric = 0.0;
    for (double r : rs.ricci) ric += r;
    CHECK(rs.scalar == doctest::Approx(2.0 * ric).epsilon(1e-12));
    for (int a = 0; a < 3; ++a) CHECK(ricci_form(T, Eigen::VectorXcd::Unit(3, a)) == doctest::Approx(rs.ricci[a]).epsilon(1e-12));
    // trace is basis independent
    Eigen::MatrixXcd Q = Eigen::MatrixXcd::Random(3, 3).householderQr().householderQ();
    double ric_q = 0.0;
    for (int a = 0; a < 3; ++a) ric_q += ricci_form(T, Q.col(a));
    CHECK(ric_q == doctest::Approx(ric).epsilon(1e-10));
}

TEST_CASE("Bolza curvature bounds and regression values") {
    const auto& c = bolza();
    const RicciScalar rs = ricci_and_scalar(c.tensor);
    for (double r : rs.ricci) CHECK(r < kKhBound);
    CHECK(rs.scalar < kScalarBound);
    // frozen from this discretization (h = 0.1, N = 6); the h -> 0 limit is about -2.1958
    CHECK(rs.scalar == doctest::Approx(-2.1948).epsilon(2e-4));
    // Bolza's symmetry makes the Ricci form a multiple of the identity
    CHECK(rs.ricci[0] == doctest::Approx(rs.ricci[1]).epsilon(1e-3));
    CHECK(rs.ricci[0] == doctest::Approx(rs.ricci[2]).epsilon(1e-3));
}

TEST_CASE("pointwise Cauchy-Schwarz for D") {
    const auto& c = bolza();
    const LaplaceOperator& L = *c.L;
    std::mt19937_64 rng(4);
    for (int i = 0; i < 5; ++i) {
        const Eigen::VectorXcd m0 = restrict_complex(L, combine(c.basis, unit(rng)));
        const Eigen::VectorXcd m1 = restrict_complex(L, combine(c.basis, unit(rng)));
        const Eigen::VectorXcd cross = L.apply_D(Eigen::VectorXcd(m0.cwiseProduct(m1.conjugate())));
        const Eigen::VectorXd d0 = L.apply_D(Eigen::VectorXd(m0.cwiseAbs2()));
        const Eigen::VectorXd d1 = L.apply_D(Eigen::VectorXd(m1.cwiseAbs2()));
        double worst = -1.0;
        for (Eigen::Index v = 0; v < L.size(); ++v) worst = std::max(worst, std::abs(cross(v)) - std::sqrt(d0(v) * d1(v)));
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("sphere supremum") {
    const auto& c = bolza();
    const double s = sphere_sup(c.basis);
    CHECK(s > 0.0);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 20; ++i) {
        const BeltramiField mu = combine(c.basis, unit(rng));
        for (const Complex& v : mu.values) CHECK(std::abs(v) <= s * (1 + 1e-9));
    }
}

TEST_CASE("bound report is deterministic and consistent") {
    const auto& c = bolza();
    const BoundReport a = bound_report(c, 30, 7);
    const BoundReport b = bound_report(c, 30, 7);
    CHECK(to_json(a) == to_json(b));
    CHECK(to_csv(a) == to_csv(b));
    CHECK(a.rows.size() == 30);
    CHECK_FALSE(a.violated());
    CHECK(a.status() == "inconclusive");  // no refined context
    CHECK(a.Kh_max < kKhBound);
    CHECK(a.K_max < 0.0);
    CHECK(a.C1 == doctest::Approx(-a.Kh_min));
    CHECK(a.path_discrepancy < 1e-8);
    CHECK(a.chain_violation == 0.0);
    CHECK(a.h0_violation == 0.0);
    const BoundReport other = bound_report(c, 30, 8);
    CHECK(to_json(other) != to_json(a));
    const std::string csv = to_csv(a);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 31);
}

TEST_CASE("directions carry across resolutions") {
    const auto& c = bolza();
    const CurvatureContext fine = build_context(build_bolza(), 0.07, 6);
    std::mt19937_64 rng(6);
    for (int i = 0; i < 5; ++i) {
        const Eigen::VectorXcd x = unit(rng);
        const Eigen::VectorXcd y = carry_direction(c, fine, x);
        CHECK(y.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(holo_sectional(fine.tensor, y) == doctest::Approx(holo_sectional(c.tensor, x)).epsilon(2e-3));
    }
    const Eigen::VectorXcd x = unit(rng);
    CHECK((carry_direction(c, c, x) - x).norm() < 1e-8);
}

TEST_CASE("thin surfaces are refused") {
    CHECK_THROWS_AS(build_context(build_genus2_fn({0.3, 2, 2}, {0, 0, 0}), 0.2, 6, 0.5), ThinSurface);
}
