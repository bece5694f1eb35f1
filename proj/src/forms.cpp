#include "wpgeo/forms.hpp"

#include <algorithm>
#include <cmath>

#include "wpgeo/errors.hpp"
#include "wpgeo/kernels.hpp"

namespace wpgeo {

namespace {

constexpr double kAnchorSpacing = 0.35;

void check_size(const SurfaceMesh& m, std::size_t n) {
    if (n != m.size()) {
        throw FieldMeshMismatch("field size does not match the mesh");
    }
}

}  // namespace

double series_radius(int N) { return N + 4.0; }

namespace {

double relative_tail(const SurfaceMesh& m, const QuadDiff& phi) {
    if (phi.previous.size() != phi.values.size()) {
        return 0.0;
    }
    double diff = 0.0;
    double value = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v) {
        const double scale = 1.0 / metric_density(m.vertices[v]);
        diff = std::max(diff, std::abs(phi.values[v] - phi.previous[v]) * scale);
        value = std::max(value, std::abs(phi.values[v]) * scale);
    }
    return value > 0.0 ? diff / value : 0.0;
}

}  // namespace

SeriesEvaluator::SeriesEvaluator(const FuchsianSurface& s, const DirichletDomain& dom, int N, int seeds)
    : N_(N), seeds_(seeds), radius_(series_radius(N)) {
    if (N < 1 || N > 10) {
        throw InvalidSpec("series depth N must lie in [1, 10]");
    }
    if (seeds < 1 || seeds > kernels::kMaxSeeds) {
        throw InvalidSpec("seed count must lie in [1, 10]");
    }
    const ElementSet ball = certified_ball(s, dom, radius_ + 1e-6);
    const std::size_t n = ball.size();
    ar_.reserve(n);
    ai_.reserve(n);
    br_.reserve(n);
    bi_.reserve(n);
    inverse_orbit_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Mobius& g = ball[i];
        ar_.push_back(g.a().real());
        ai_.push_back(g.a().imag());
        br_.push_back(g.b().real());
        bi_.push_back(g.b().imag());
        inverse_orbit_.push_back(-g.b() / g.a());
    }
}

void SeriesEvaluator::evaluate_with(const std::vector<double>& ar, const std::vector<double>& ai,
                                    const std::vector<double>& br, const std::vector<double>& bi, Complex z,
                                    Complex* out, Complex* coarse) const {
    Complex inner[kernels::kMaxSeeds] = {};
    Complex shell[kernels::kMaxSeeds] = {};
    const double t_in = std::tanh(0.5 * (radius_ - 1.0));
    const double t_out = std::tanh(0.5 * radius_);
    const kernels::ElementArrays arrays{ar.data(), ai.data(), br.data(), bi.data(), ar.size()};
    kernels::series_terms(arrays, z, t_in * t_in, t_out * t_out, seeds_, inner, shell);
    for (int m = 0; m < seeds_; ++m) {
        out[m] = inner[m] + shell[m];
        if (coarse != nullptr) {
            coarse[m] = inner[m];
        }
    }
}

void SeriesEvaluator::evaluate(Complex z, Complex* out, Complex* coarse) const {
    evaluate_with(ar_, ai_, br_, bi_, z, out, coarse);
}

std::vector<QuadDiff> SeriesEvaluator::sample(const SurfaceMesh& m) const {
    const std::size_t nv = m.size();
    // Greedy covering of the vertices by anchors; each anchor keeps only the
    // elements that can reach any of its vertices.
    std::vector<Anchor> anchors;
    std::vector<int> owner(nv, -1);
    for (std::size_t v = 0; v < nv; ++v) {
        const Complex z = m.vertices[v];
        double best = 1e300;
        int best_id = -1;
        for (std::size_t a = 0; a < anchors.size(); ++a) {
            const double d = hyperbolic_distance(z, anchors[a].centre);
            if (d < best) {
                best = d;
                best_id = static_cast<int>(a);
            }
        }
        if (best > kAnchorSpacing) {
            anchors.push_back({z, 0.0});
            best_id = static_cast<int>(anchors.size()) - 1;
            best = 0.0;
        }
        owner[v] = best_id;
        anchors[best_id].reach = std::max(anchors[best_id].reach, best);
    }

    std::vector<QuadDiff> out(seeds_);
    for (int k = 0; k < seeds_; ++k) {
        out[k].values.assign(nv, Complex(0.0, 0.0));
        out[k].previous.assign(nv, Complex(0.0, 0.0));
        out[k].seed = k;
        out[k].depth = N_;
    }
    std::vector<double> ar, ai, br, bi;
    std::vector<std::vector<std::size_t>> by_anchor(anchors.size());
    for (std::size_t v = 0; v < nv; ++v) {
        by_anchor[owner[v]].push_back(v);
    }
    for (std::size_t a = 0; a < anchors.size(); ++a) {
        ar.clear();
        ai.clear();
        br.clear();
        bi.clear();
        const double limit = radius_ + anchors[a].reach + 1e-9;
        for (std::size_t i = 0; i < ar_.size(); ++i) {
            if (hyperbolic_distance(inverse_orbit_[i], anchors[a].centre) <= limit) {
                ar.push_back(ar_[i]);
                ai.push_back(ai_[i]);
                br.push_back(br_[i]);
                bi.push_back(bi_[i]);
            }
        }
        Complex full[kernels::kMaxSeeds];
        Complex coarse[kernels::kMaxSeeds];
        for (std::size_t v : by_anchor[a]) {
            const Complex z = m.vertices[v];
            evaluate_with(ar, ai, br, bi, z, full, coarse);
            for (int k = 0; k < seeds_; ++k) {
                out[k].values[v] = full[k];
                out[k].previous[v] = coarse[k];
            }
        }
    }
    for (auto& q : out) {
        q.tail = relative_tail(m, q);
    }
    return out;
}

QuadDiff poincare_series(const FuchsianSurface& s, const SurfaceMesh& m, int seed, int N) {
    const SeriesEvaluator eval(s, m.domain, N, seed + 1);
    return std::move(eval.sample(m)[seed]);
}

Complex wp_cometric(const SurfaceMesh& m, const QuadDiff& phi1, const QuadDiff& phi2) {
    check_size(m, phi1.size());
    check_size(m, phi2.size());
    std::vector<double> w(m.size());
    for (std::size_t v = 0; v < m.size(); ++v) {
        const double s = metric_density(m.vertices[v]);
        w[v] = m.vertex_weights[v] / (s * s);
    }
    return kernels::weighted_inner(w.data(), phi1.values.data(), phi2.values.data(), m.size());
}

BeltramiField to_beltrami(const SurfaceMesh& m, const QuadDiff& phi) {
    check_size(m, phi.size());
    BeltramiField mu;
    mu.values.resize(phi.size());
    for (std::size_t v = 0; v < phi.size(); ++v) {
        mu.values[v] = std::conj(phi.values[v]) / metric_density(m.vertices[v]);
    }
    return mu;
}

Complex wp_inner(const SurfaceMesh& m, const BeltramiField& mu1, const BeltramiField& mu2) {
    check_size(m, mu1.size());
    check_size(m, mu2.size());
    return kernels::weighted_inner(m.vertex_weights.data(), mu1.values.data(), mu2.values.data(), m.size());
}

double wp_norm(const SurfaceMesh& m, const BeltramiField& mu) { return std::sqrt(wp_inner(m, mu, mu).real()); }

double natural_pairing(const SurfaceMesh& m, const QuadDiff& phi, const BeltramiField& mu) {
    check_size(m, phi.size());
    check_size(m, mu.size());
    double sum = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v) {
        const double euclidean_weight = m.vertex_weights[v] / metric_density(m.vertices[v]);
        sum += euclidean_weight * (phi.values[v] * mu.values[v]).real();
    }
    return sum;
}

double automorphy_residual(const SurfaceMesh& m, const QuadDiff& phi) {
    check_size(m, phi.size());
    double worst = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v) {
        if (!m.is_boundary(v)) {
            continue;
        }
        const int r = m.representative[m.quotient[v]];
        const Complex gp = m.to_rep[v].derivative(m.vertices[v]);
        const Complex pulled = phi.values[r] * gp * gp;
        worst = std::max(worst, std::abs(phi.values[v] - pulled) / std::max(1.0, std::abs(phi.values[v])));
    }
    return worst;
}

Eigen::MatrixXcd gram_matrix(const SurfaceMesh& m, const std::vector<BeltramiField>& mu) {
    const auto n = static_cast<Eigen::Index>(mu.size());
    Eigen::MatrixXcd g(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i; j < n; ++j) {
            g(i, j) = wp_inner(m, mu[i], mu[j]);
            g(j, i) = std::conj(g(i, j));
        }
        g(i, i) = g(i, i).real();
    }
    return g;
}

int gram_rank(const Eigen::MatrixXcd& gram, double rel_threshold, Eigen::VectorXd* eigenvalues) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(gram);
    Eigen::VectorXd ev = es.eigenvalues().reverse();
    const double top = ev.size() > 0 ? ev(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) > rel_threshold * top) {
            ++rank;
        }
    }
    if (eigenvalues != nullptr) {
        *eigenvalues = ev;
    }
    return rank;
}

Basis build_onb(const FuchsianSurface& s, const SurfaceMesh& m, int N) {
    const int dim = 3 * s.genus - 3;
    const SeriesEvaluator eval(s, m.domain, N, kernels::kMaxSeeds);
    const std::vector<QuadDiff> all = eval.sample(m);

    for (int seeds = 6; seeds <= kernels::kMaxSeeds; ++seeds) {
        std::vector<BeltramiField> mu;
        for (int k = 0; k < seeds; ++k) {
            mu.push_back(to_beltrami(m, all[k]));
        }
        const Eigen::MatrixXcd g = gram_matrix(m, mu);
        Eigen::VectorXd ev;
        const int rank = gram_rank(g, 1e-8, &ev);
        if (rank > dim) {
            throw RankExcess("Gram rank " + std::to_string(rank) + " exceeds 3g-3");
        }
        if (rank < dim) {
            continue;
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(g);
        Basis b;
        b.seed_spectrum = ev;
        b.seeds_used = seeds;
        b.depth = N;
        b.coefficients = Eigen::MatrixXcd::Zero(seeds, dim);
        for (int k = 0; k < dim; ++k) {
            const Eigen::Index col = seeds - 1 - k;  // eigenvalues ascend
            const double scale = 1.0 / std::sqrt(es.eigenvalues()(col));
            QuadDiff phi;
            phi.values.assign(m.size(), Complex(0.0, 0.0));
            phi.previous.assign(m.size(), Complex(0.0, 0.0));
            phi.depth = N;
            for (int i = 0; i < seeds; ++i) {
                const Complex c = std::conj(es.eigenvectors()(i, col)) * scale;
                b.coefficients(i, k) = c;
                for (std::size_t v = 0; v < m.size(); ++v) {
                    phi.values[v] += c * all[i].values[v];
                    phi.previous[v] += c * all[i].previous[v];
                }
            }
            b.phi.push_back(std::move(phi));
        }
        // One Gram-Schmidt sweep removes the residual rounding in the eigenbasis.
        for (int k = 0; k < dim; ++k) {
            for (int j = 0; j < k; ++j) {
                const Complex c = wp_cometric(m, b.phi[k], b.phi[j]);
                b.coefficients.col(k) -= c * b.coefficients.col(j);
                for (std::size_t v = 0; v < m.size(); ++v) {
                    b.phi[k].values[v] -= c * b.phi[j].values[v];
                    b.phi[k].previous[v] -= c * b.phi[j].previous[v];
                }
            }
            const double norm = std::sqrt(wp_cometric(m, b.phi[k], b.phi[k]).real());
            b.coefficients.col(k) /= norm;
            for (std::size_t v = 0; v < m.size(); ++v) {
                b.phi[k].values[v] /= norm;
                b.phi[k].previous[v] /= norm;
            }
            b.phi[k].tail = relative_tail(m, b.phi[k]);
            b.tail = std::max(b.tail, b.phi[k].tail);
        }
        for (const auto& phi : b.phi) {
            b.mu.push_back(to_beltrami(m, phi));
        }
        b.gram = gram_matrix(m, b.mu);
        b.seed_fields.assign(all.begin(), all.begin() + seeds);
        return b;
    }
    throw RankDeficient("Gram rank below 3g-3 with seeds 0..9");
}

Eigen::VectorXcd transplant(const SurfaceMesh& target_mesh, const Basis& target, const Eigen::VectorXcd& seed_coeffs) {
    const auto dim = static_cast<Eigen::Index>(target.phi.size());
    const auto seeds = std::min<Eigen::Index>(seed_coeffs.size(), static_cast<Eigen::Index>(target.seed_fields.size()));
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(dim);
    for (Eigen::Index i = 0; i < seeds; ++i) {
        if (seed_coeffs(i) == Complex(0.0, 0.0)) {
            continue;
        }
        for (Eigen::Index k = 0; k < dim; ++k) {
            x(k) += seed_coeffs(i) * wp_cometric(target_mesh, target.seed_fields[i], target.phi[k]);
        }
    }
    return x;
}

double dbar_residual(const SurfaceMesh& m, const QuadDiff& phi) {
    check_size(m, phi.size());
    double num = 0.0;
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        const Complex z0 = m.vertices[tri[0]], z1 = m.vertices[tri[1]], z2 = m.vertices[tri[2]];
        const Complex f0 = phi.values[tri[0]], f1 = phi.values[tri[1]], f2 = phi.values[tri[2]];
        // Linear f = f0 + A (z - z0) + B conj(z - z0); B is the d-bar derivative.
        const Complex e1 = z1 - z0, e2 = z2 - z0;
        const Complex det = e1 * std::conj(e2) - e2 * std::conj(e1);
        const Complex dbar = (e1 * (f2 - f0) - e2 * (f1 - f0)) / det;
        const Complex c = (z0 + z1 + z2) / 3.0;
        const double s = metric_density(c);
        num += m.triangle_areas[t] * std::norm(dbar) / (s * s * s);
    }
    double den = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v) {
        const double s = metric_density(m.vertices[v]);
        den += m.vertex_weights[v] * std::norm(phi.values[v]) / (s * s);
    }
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace wpgeo
