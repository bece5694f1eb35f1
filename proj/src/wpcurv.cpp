#include "wpgeo/wpcurv.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "wpgeo/errors.hpp"

namespace wpgeo {

namespace {

constexpr double kUnitTol = 1e-8;

// int f g dA over the quotient
Complex quad(const LaplaceOperator& L, const Eigen::VectorXcd& f, const Eigen::VectorXcd& g) {
    return (L.mass().array().cast<Complex>() * f.array() * g.array()).sum();
}

Complex contract(const CurvatureTensor& T, const std::vector<Complex>& A, const Eigen::VectorXcd& x,
                 const Eigen::VectorXcd& y, const Eigen::VectorXcd& z, const Eigen::VectorXcd& w) {
    Complex sum(0.0, 0.0);
    for (int a = 0; a < T.dim; ++a) {
        for (int b = 0; b < T.dim; ++b) {
            const Complex ab = x(a) * std::conj(y(b));
            for (int c = 0; c < T.dim; ++c) {
                const Complex abc = ab * z(c);
                for (int d = 0; d < T.dim; ++d) {
                    sum += abc * std::conj(w(d)) * A[T.index(a, b, c, d)];
                }
            }
        }
    }
    return sum;
}

Eigen::VectorXcd gaussian_unit(std::mt19937_64& rng, int dim) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::VectorXcd x(dim);
    for (int a = 0; a < dim; ++a) {
        const double re = n(rng);
        const double im = n(rng);
        x(a) = Complex(re, im);
    }
    return x.normalized();
}

}  // namespace

double CurvatureTensor::pair_symmetry_defect() const {
    double worst = 0.0;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            for (int c = 0; c < dim; ++c)
                for (int d = 0; d < dim; ++d)
                    worst = std::max(worst, std::abs((*this)(a, b, c, d) - (*this)(c, d, a, b)));
    return worst;
}

double CurvatureTensor::hermitian_defect() const {
    double worst = 0.0;
    for (int a = 0; a < dim; ++a)
        for (int b = 0; b < dim; ++b)
            for (int c = 0; c < dim; ++c)
                for (int d = 0; d < dim; ++d)
                    worst = std::max(worst, std::abs((*this)(a, b, c, d) - std::conj((*this)(b, a, d, c))));
    return worst;
}

Eigen::VectorXcd restrict_complex(const LaplaceOperator& L, const BeltramiField& mu) {
    const SurfaceMesh& m = L.mesh();
    if (mu.size() != m.size()) {
        throw FieldMeshMismatch("Beltrami field size does not match the mesh");
    }
    Eigen::VectorXcd u(L.size());
    for (Eigen::Index q = 0; q < L.size(); ++q) {
        u(q) = mu.values[m.representative[q]];
    }
    return u;
}

BeltramiField combine(const Basis& basis, const Eigen::VectorXcd& x) {
    BeltramiField out;
    out.values.assign(basis.mu.front().size(), Complex(0.0, 0.0));
    for (std::size_t a = 0; a < basis.mu.size(); ++a) {
        const Complex c = x(static_cast<Eigen::Index>(a));
        for (std::size_t v = 0; v < out.size(); ++v) {
            out.values[v] += c * basis.mu[a].values[v];
        }
    }
    return out;
}

double quotient_norm2(const LaplaceOperator& L, const BeltramiField& mu) {
    const Eigen::VectorXcd u = restrict_complex(L, mu);
    return L.mass().dot(u.cwiseAbs2());
}

CurvatureTensor riemann_tensor(const Basis& basis, const LaplaceOperator& L) {
    const int n = static_cast<int>(basis.mu.size());
    std::vector<Eigen::VectorXcd> mu;
    for (const auto& field : basis.mu) {
        mu.push_back(restrict_complex(L, field));
    }
    // P_ab = mu_a conj(mu_b); D is real, so D(P_ba) = conj D(P_ab).
    std::vector<Eigen::VectorXcd> P(n * n), DP(n * n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            P[a * n + b] = mu[a].cwiseProduct(mu[b].conjugate());
        }
    }
    for (int a = 0; a < n; ++a) {
        DP[a * n + a] = L.apply_D(Eigen::VectorXd(P[a * n + a].real())).cast<Complex>();
        for (int b = a + 1; b < n; ++b) {
            DP[a * n + b] = L.apply_D(P[a * n + b]);
            DP[b * n + a] = DP[a * n + b].conjugate();
        }
    }
    CurvatureTensor T;
    T.dim = n;
    T.I.resize(static_cast<std::size_t>(n) * n * n * n);
    T.R.resize(T.I.size());
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d)
                    T.I[T.index(a, b, c, d)] = quad(L, DP[a * n + b], P[c * n + d]);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
                for (int d = 0; d < n; ++d)
                    T.R[T.index(a, b, c, d)] = T.I[T.index(a, b, c, d)] + T.I[T.index(a, d, c, b)];
    return T;
}

double holo_sectional(const BeltramiField& mu, const LaplaceOperator& L) {
    const Eigen::VectorXcd u = restrict_complex(L, mu);
    const Eigen::VectorXd abs2 = u.cwiseAbs2();
    const double norm2 = L.mass().dot(abs2);
    if (std::abs(norm2 - 1.0) > kUnitTol) {
        throw NotUnitNorm("holomorphic sectional curvature needs a unit direction");
    }
    return -2.0 * L.inner(L.apply_D(abs2), abs2);
}

double holo_sectional(const CurvatureTensor& T, const Eigen::VectorXcd& x) {
    return -contract(T, T.R, x, x, x, x).real();
}

SectionalTerms sectional_terms(const BeltramiField& mu0, const BeltramiField& mu1, const LaplaceOperator& L) {
    const Eigen::VectorXcd u0 = restrict_complex(L, mu0);
    const Eigen::VectorXcd u1 = restrict_complex(L, mu1);
    const double n0 = L.mass().dot(u0.cwiseAbs2());
    const double n1 = L.mass().dot(u1.cwiseAbs2());
    const Complex c01 = quad(L, u0, u1.conjugate());
    if (std::abs(n0 - 1.0) > kUnitTol || std::abs(n1 - 1.0) > kUnitTol || std::abs(c01) > kUnitTol) {
        throw NotOrthonormal("sectional curvature needs an orthonormal pair");
    }
    const Eigen::VectorXcd F = u0.cwiseProduct(u1.conjugate());
    const Eigen::VectorXcd DF = L.apply_D(F);
    const Eigen::VectorXd D1 = L.apply_D(Eigen::VectorXd(u1.cwiseAbs2()));
    SectionalTerms t;
    t.cross = quad(L, DF, F).real();
    t.cross_conj = quad(L, DF, F.conjugate()).real();
    t.mixed = L.inner(D1, u0.cwiseAbs2());
    t.K = t.cross - 0.5 * t.cross_conj - 0.5 * t.mixed;
    return t;
}

double sectional(const BeltramiField& mu0, const BeltramiField& mu1, const LaplaceOperator& L) {
    return sectional_terms(mu0, mu1, L).K;
}

double sectional(const CurvatureTensor& T, const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    const Complex s = contract(T, T.R, x, y, x, y) - contract(T, T.R, x, y, y, x) - contract(T, T.R, y, x, x, y) +
                      contract(T, T.R, y, x, y, x);
    return 0.25 * s.real();
}

double mixed_term(const CurvatureTensor& T, const Eigen::VectorXcd& x, const Eigen::VectorXcd& y) {
    return contract(T, T.I, y, y, x, x).real();
}

RicciScalar ricci_and_scalar(const CurvatureTensor& T) {
    RicciScalar out;
    for (int a = 0; a < T.dim; ++a) {
        double r = 0.0;
        for (int d = 0; d < T.dim; ++d) {
            r -= T(a, a, d, d).real();
        }
        out.ricci.push_back(r);
        out.scalar += 2.0 * r;
    }
    return out;
}

double ricci_form(const CurvatureTensor& T, const Eigen::VectorXcd& x) {
    Complex sum(0.0, 0.0);
    for (int a = 0; a < T.dim; ++a)
        for (int b = 0; b < T.dim; ++b)
            for (int d = 0; d < T.dim; ++d)
                sum -= x(a) * std::conj(x(b)) * T(a, b, d, d);
    return sum.real();
}

double sphere_sup(const Basis& basis) {
    double best = 0.0;
    for (std::size_t v = 0; v < basis.mu.front().size(); ++v) {
        double s = 0.0;
        for (const auto& mu : basis.mu) {
            s += std::norm(mu.values[v]);
        }
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

CurvatureContext build_context(const FuchsianSurface& s, double h, int N, double r0) {
    CurvatureContext ctx;
    ctx.surface = s;
    ctx.h = h;
    ctx.N = N;
    ctx.systole = systole(s, 6).length;
    if (ctx.systole < r0) {
        std::ostringstream msg;
        msg << "systole " << ctx.systole << " below thick-part threshold " << r0;
        throw ThinSurface(msg.str());
    }
    ctx.mesh = std::make_unique<SurfaceMesh>(build_mesh(s, h));
    ctx.basis = build_onb(s, *ctx.mesh, N);
    ctx.L = std::make_unique<LaplaceOperator>(*ctx.mesh);
    ctx.tensor = riemann_tensor(ctx.basis, *ctx.L);
    return ctx;
}

Eigen::VectorXcd carry_direction(const CurvatureContext& from, const CurvatureContext& to, const Eigen::VectorXcd& x) {
    // mu = sum x_a mu_a is dual to phi = sum conj(x_a) phi_a.
    const Eigen::VectorXcd seeds = from.basis.coefficients * x.conjugate();
    return transplant(*to.mesh, to.basis, seeds).conjugate().normalized();
}

bool BoundReport::violated() const {
    return kh_margin <= 0.0 || ricci_margin <= 0.0 || scalar_margin <= 0.0 ||
           sectional_margin <= 0.0 || chain_violation > 1e-6;
}

bool BoundReport::confirmed() const {
    if (violated() || !refined) {
        return false;
    }
    return kh_margin > 3.0 * Kh_error && ricci_margin > 3.0 * ric_error &&
           scalar_margin > 3.0 * scalar_error && sectional_margin > 3.0 * K_error;
}

std::string BoundReport::status() const {
    if (violated()) {
        return "violated";
    }
    return confirmed() ? "confirmed" : "inconclusive";
}

BoundReport bound_report(const CurvatureContext& ctx, int samples, unsigned long long seed,
                         const CurvatureContext* refined) {
    const int g = ctx.surface.genus;
    const double kh_bound = -1.0 / (2.0 * std::numbers::pi * (g - 1));
    const double scalar_bound = -3.0 * (3.0 * g - 2.0) / (4.0 * std::numbers::pi);
    const CurvatureTensor& T = ctx.tensor;
    const LaplaceOperator& L = *ctx.L;

    BoundReport r;
    r.surface = ctx.surface.label;
    r.h = ctx.h;
    r.N = ctx.N;
    r.seed = seed;
    r.samples = samples;
    r.systole = ctx.systole;
    r.refined = refined != nullptr;
    r.sup_mu = sphere_sup(ctx.basis);
    r.tensor_symmetry = std::max(T.pair_symmetry_defect(), T.hermitian_defect());

    std::mt19937_64 rng(seed);
    r.Kh_min = r.K_min = std::numeric_limits<double>::infinity();
    r.Kh_max = r.K_max = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        SampleRow row;
        row.index = i;
        const Eigen::VectorXcd x = gaussian_unit(rng, T.dim);
        Eigen::VectorXcd p = gaussian_unit(rng, T.dim);
        Eigen::VectorXcd q = gaussian_unit(rng, T.dim);
        q = (q - p.dot(q) * p).normalized();  // Eigen's dot conjugates the first argument

        row.Kh = holo_sectional(T, x);
        row.Kh_direct = holo_sectional(combine(ctx.basis, x), L);
        row.K = sectional(T, p, q);
        const SectionalTerms st = sectional_terms(combine(ctx.basis, p), combine(ctx.basis, q), L);
        row.K_direct = st.K;
        row.chain_bound = st.chain_bound();
        if (refined) {
            const Eigen::VectorXcd x2 = carry_direction(ctx, *refined, x);
            const Eigen::VectorXcd p2 = carry_direction(ctx, *refined, p);
            Eigen::VectorXcd q2 = carry_direction(ctx, *refined, q);
            q2 = (q2 - p2.dot(q2) * p2).normalized();
            row.Kh_refined = holo_sectional(refined->tensor, x2);
            row.K_refined = sectional(refined->tensor, p2, q2);
            r.Kh_error = std::max(r.Kh_error, std::abs(row.Kh - row.Kh_refined));
            r.K_error = std::max(r.K_error, std::abs(row.K - row.K_refined));
        }
        r.Kh_min = std::min(r.Kh_min, row.Kh);
        r.Kh_max = std::max(r.Kh_max, row.Kh);
        r.K_min = std::min(r.K_min, row.K);
        r.K_max = std::max(r.K_max, row.K);
        r.C1 = std::max(r.C1, std::abs(row.Kh));
        r.C2 = std::max(r.C2, std::abs(row.K));
        r.chain_violation = std::max(r.chain_violation, std::abs(row.K_direct) - row.chain_bound);
        r.h0_violation = std::max(r.h0_violation, std::abs(row.Kh) - 2.0 * r.sup_mu * r.sup_mu);
        r.path_discrepancy =
            std::max({r.path_discrepancy, std::abs(row.Kh - row.Kh_direct), std::abs(row.K - row.K_direct)});
        r.rows.push_back(row);
    }
    r.chain_violation = std::max(r.chain_violation, 0.0);
    r.h0_violation = std::max(r.h0_violation, 0.0);

    const RicciScalar rs = ricci_and_scalar(T);
    r.ricci = rs.ricci;
    r.scalar = rs.scalar;
    r.kh_margin = kh_bound - r.Kh_max;
    r.ricci_margin = kh_bound - *std::max_element(rs.ricci.begin(), rs.ricci.end());
    r.scalar_margin = scalar_bound - rs.scalar;
    r.sectional_margin = -r.K_max;
    if (refined) {
        for (int a = 0; a < T.dim; ++a) {
            const Eigen::VectorXcd e = Eigen::VectorXcd::Unit(T.dim, a);
            const double ric2 = ricci_form(refined->tensor, carry_direction(ctx, *refined, e));
            r.ric_error = std::max(r.ric_error, std::abs(rs.ricci[a] - ric2));
        }
        r.scalar_error = std::abs(rs.scalar - ricci_and_scalar(refined->tensor).scalar);
    }
    return r;
}

std::string to_json(const BoundReport& r) {
    nlohmann::ordered_json j;
    j["surface"] = r.surface;
    j["mesh h"] = r.h;
    j["N"] = r.N;
    j["seed"] = r.seed;
    j["samples"] = r.samples;
    j["systole"] = r.systole;
    j["Kh_min"] = r.Kh_min;
    j["Kh_max"] = r.Kh_max;
    j["K_min"] = r.K_min;
    j["K_max"] = r.K_max;
    j["ricci"] = r.ricci;
    j["scalar"] = r.scalar;
    j["C1"] = r.C1;
    j["C2"] = r.C2;
    j["sup_mu"] = r.sup_mu;
    j["bounds"] = {{"kh_margin", r.kh_margin},
                   {"ricci_margin", r.ricci_margin},
                   {"scalar_margin", r.scalar_margin},
                   {"sectional_margin", r.sectional_margin}};
    j["discretization_error"] = {{"refined", r.refined},
                                 {"Kh", r.Kh_error},
                                 {"K", r.K_error},
                                 {"ricci", r.ric_error},
                                 {"scalar", r.scalar_error}};
    j["checks"] = {{"chain_violation", r.chain_violation},
                   {"h0_violation", r.h0_violation},
                   {"path_discrepancy", r.path_discrepancy},
                   {"tensor_symmetry", r.tensor_symmetry}};
    j["status"] = r.status();
    return j.dump(2);
}

std::string to_csv(const BoundReport& r) {
    std::ostringstream out;
    out.precision(12);
    out << "index,Kh,Kh_direct,Kh_refined,K,K_direct,K_refined,chain_bound\n";
    for (const auto& row : r.rows) {
        out << row.index << ',' << row.Kh << ',' << row.Kh_direct << ',' << row.Kh_refined << ',' << row.K << ','
            << row.K_direct << ',' << row.K_refined << ',' << row.chain_bound << '\n';
    }
    return out.str();
}

}  // namespace wpgeo
