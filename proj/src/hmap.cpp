#include "wpgeo/hmap.hpp"

#include <Eigen/Sparse>
#include <Eigen/IterativeLinearSolvers>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <type_traits>

#include "json.hpp"
#include "wpgeo/errors.hpp"

namespace wpgeo {

namespace {

// Second-order forward mode over the six real coordinates of one triangle.
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

struct D2 {
    double v = 0.0;
    Vec6 g = Vec6::Zero();
    Mat6 H = Mat6::Zero();
};

D2 operator+(const D2& a, const D2& b) { return {a.v + b.v, a.g + b.g, a.H + b.H}; }
D2 operator-(const D2& a, const D2& b) { return {a.v - b.v, a.g - b.g, a.H - b.H}; }
D2 operator*(double s, const D2& a) { return {s * a.v, s * a.g, s * a.H}; }
D2 operator+(double s, const D2& a) { return {s + a.v, a.g, a.H}; }
D2 operator*(const D2& a, const D2& b) {
    const Mat6 outer = a.g * b.g.transpose();
    return {a.v * b.v, a.v * b.g + b.v * a.g, a.v * b.H + b.v * a.H + outer + outer.transpose()};
}
D2 reciprocal(const D2& a) {
    const double r = 1.0 / a.v;
    return {r, -r * r * a.g, -r * r * a.H + 2.0 * r * r * r * (a.g * a.g.transpose())};
}

template <class T>
struct Cx {
    T re, im;
};

template <class T>
Cx<T> operator+(const Cx<T>& a, const Cx<T>& b) { return {a.re + b.re, a.im + b.im}; }
template <class T>
Cx<T> operator-(const Cx<T>& a, const Cx<T>& b) { return {a.re - b.re, a.im - b.im}; }
template <class T>
Cx<T> operator*(const Cx<T>& a, const Cx<T>& b) { return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re}; }
template <class T>
Cx<T> operator*(Complex c, const Cx<T>& a) { return {c.real() * a.re - c.imag() * a.im, c.real() * a.im + c.imag() * a.re}; }
template <class T>
Cx<T> operator+(Complex c, const Cx<T>& a) { return {c.real() + a.re, c.imag() + a.im}; }
template <class T>
T norm2(const Cx<T>& a) { return a.re * a.re + a.im * a.im; }
template <class T>
Cx<T> divide(const Cx<T>& a, const Cx<T>& b) {
    T inv;
    if constexpr (std::is_same_v<T, double>) {
        inv = 1.0 / norm2(b);
    } else {
        inv = reciprocal(norm2(b));
    }
    const Cx<T> num{a.re * b.re + a.im * b.im, a.im * b.re - a.re * b.im};
    return {num.re * inv, num.im * inv};
}
template <class T>
Cx<T> apply_mobius(const Mobius& M, const Cx<T>& w) {
    return divide(M.b() + M.a() * w, M.d() + M.c() * w);
}

// Degree-5 seven-point rule on a triangle: (barycentric coordinates, weight).
struct QuadPoint {
    std::array<double, 3> bary;
    double weight;
};
const std::array<QuadPoint, 7>& triangle_rule() {
    static const std::array<QuadPoint, 7> rule = [] {
        const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
        const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
        return std::array<QuadPoint, 7>{{{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225},
                                         {{a1, b1, b1}, w1},
                                         {{b1, a1, b1}, w1},
                                         {{b1, b1, a1}, w1},
                                         {{a2, b2, b2}, w2},
                                         {{b2, a2, b2}, w2},
                                         {{b2, b2, a2}, w2}}};
    }();
    return rule;
}

template <class T>
T mean_density(const std::array<Cx<T>, 3>& w) {
    T sum{};
    for (const auto& q : triangle_rule()) {
        Cx<T> p{q.bary[0] * w[0].re + q.bary[1] * w[1].re + q.bary[2] * w[2].re,
                q.bary[0] * w[0].im + q.bary[1] * w[1].im + q.bary[2] * w[2].im};
        const T s = 1.0 + (-1.0) * norm2(p);
        T inv;
        if constexpr (std::is_same_v<T, double>) {
            inv = 1.0 / (s * s);
        } else {
            inv = reciprocal(s * s);
        }
        sum = sum + (4.0 * q.weight) * inv;
    }
    return sum;
}

double mean_density(Complex a, Complex b, Complex c) {
    return mean_density<double>({Cx<double>{a.real(), a.imag()}, {b.real(), b.imag()}, {c.real(), c.imag()}});
}

double cross(Complex a, Complex b) { return a.real() * b.imag() - a.imag() * b.real(); }

struct SourceTriangle {
    std::array<int, 3> v;
    std::array<int, 3> q;
    Eigen::Matrix3d K;  // area * grad(lambda_i) . grad(lambda_j)
    double area = 0.0;  // Euclidean
    double sigma = 0.0; // mean source density, same rule as the target
};

// Energy of one triangle: mean rho(w) * (1/2) int |grad w|^2 dx dy.
template <class T>
T triangle_energy(const SourceTriangle& t, const std::array<Cx<T>, 3>& w) {
    T quad{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            quad = quad + (0.5 * t.K(i, j)) * (w[i].re * w[j].re + w[i].im * w[j].im);
        }
    }
    return mean_density(w) * quad;
}

class Problem {
public:
    Problem(const SurfaceMesh& m, const FuchsianSurface& src, const FuchsianSurface& tgt) : m_(m) {
        image_maps_.resize(m.size());
        identity_.resize(m.size());
        for (std::size_t v = 0; v < m.size(); ++v) {
            if (m.is_boundary(v)) {
                const Mobius rho = tgt.evaluate(m.to_rep_word[v]);
                image_maps_[v] = rho.inverse();
                identity_[v] = false;
            } else {
                identity_[v] = true;
            }
        }
        (void)src;
        for (const auto& tri : m.triangles) {
            SourceTriangle t;
            t.v = tri;
            const Complex z[3] = {m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]};
            t.area = 0.5 * cross(z[1] - z[0], z[2] - z[0]);
            Complex grad[3];
            for (int i = 0; i < 3; ++i) {
                t.q[i] = m.quotient[tri[i]];
                const Complex e = z[(i + 2) % 3] - z[(i + 1) % 3];
                grad[i] = Complex(-e.imag(), e.real()) / (2.0 * t.area);  // grad of lambda_i
            }
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    t.K(i, j) = t.area * (grad[i].real() * grad[j].real() + grad[i].imag() * grad[j].imag());
                }
            }
            t.sigma = mean_density(z[0], z[1], z[2]);
            tris_.push_back(t);
        }
    }

    const std::vector<SourceTriangle>& triangles() const { return tris_; }
    const std::vector<Mobius>& image_maps() const { return image_maps_; }
    Eigen::Index unknowns() const { return 2 * static_cast<Eigen::Index>(m_.quotient_size()); }

    Complex image_of(std::size_t v, const Eigen::VectorXd& x) const {
        const int q = m_.quotient[v];
        const Complex w(x(2 * q), x(2 * q + 1));
        return identity_[v] ? w : image_maps_[v](w);
    }

    /// Mesh-vertex images and the smallest triangle Jacobian determinant;
    /// false when a point leaves the disk.
    bool images(const Eigen::VectorXd& x, std::vector<Complex>& w, double& min_det) const {
        w.resize(m_.size());
        for (std::size_t v = 0; v < m_.size(); ++v) {
            w[v] = image_of(v, x);
            if (!(std::norm(w[v]) < 1.0 - 1e-12)) {
                return false;
            }
        }
        min_det = std::numeric_limits<double>::infinity();
        for (const auto& t : tris_) {
            min_det = std::min(min_det, cross(w[t.v[1]] - w[t.v[0]], w[t.v[2]] - w[t.v[0]]) / t.area);
        }
        return true;
    }

    double energy(const std::vector<Complex>& w) const {
        double e = 0.0;
        for (const auto& t : tris_) {
            std::array<Cx<double>, 3> c;
            for (int i = 0; i < 3; ++i) {
                c[i] = {w[t.v[i]].real(), w[t.v[i]].imag()};
            }
            e += triangle_energy(t, c);
        }
        return e;
    }

    double assemble(const Eigen::VectorXd& x, Eigen::VectorXd& grad, Eigen::SparseMatrix<double>& hess) const {
        grad = Eigen::VectorXd::Zero(unknowns());
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(tris_.size() * 36);
        double e = 0.0;
        for (const auto& t : tris_) {
            std::array<Cx<D2>, 3> w;
            for (int i = 0; i < 3; ++i) {
                Cx<D2> var;
                var.re.v = x(2 * t.q[i]);
                var.re.g(2 * i) = 1.0;
                var.im.v = x(2 * t.q[i] + 1);
                var.im.g(2 * i + 1) = 1.0;
                w[i] = identity_[t.v[i]] ? var : apply_mobius(image_maps_[t.v[i]], var);
            }
            const D2 et = triangle_energy(t, w);
            e += et.v;
            for (int a = 0; a < 6; ++a) {
                const int ia = 2 * t.q[a / 2] + a % 2;
                grad(ia) += et.g(a);
                for (int b = 0; b < 6; ++b) {
                    trip.emplace_back(ia, 2 * t.q[b / 2] + b % 2, et.H(a, b));
                }
            }
        }
        hess.resize(unknowns(), unknowns());
        hess.setFromTriplets(trip.begin(), trip.end());
        return e;
    }

private:
    const SurfaceMesh& m_;
    std::vector<Mobius> image_maps_;
    std::vector<bool> identity_;
    std::vector<SourceTriangle> tris_;
};

struct NewtonOutcome {
    Eigen::VectorXd x;
    double energy = 0.0;
    double gradient = 0.0;
    int iterations = 0;
    bool converged = false;
};

NewtonOutcome newton(const Problem& P, Eigen::VectorXd x, const HarmonicOptions& opts) {
    NewtonOutcome out;
    std::vector<Complex> w;
    double det = 0.0;
    if (!P.images(x, w, det)) {
        throw FoldedTriangle("initial map leaves the disk");
    }
    // A folded start (e.g. the identity against a moved target) is allowed;
    // once the map is unfolded no step may fold it again.
    bool guard = det > 0.0;
    Eigen::VectorXd g;
    Eigen::SparseMatrix<double> H;
    Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper, Eigen::IncompleteCholesky<double>> cg;
    cg.setTolerance(1e-10);
    cg.setMaxIterations(4000);
    for (int it = 0; it <= opts.max_iterations; ++it) {
        const double E = P.assemble(x, g, H);
        out.x = x;
        out.energy = E;
        out.gradient = g.lpNorm<Eigen::Infinity>();
        out.iterations = it;
        if (out.gradient < opts.tolerance) {
            if (!guard) {
                throw FoldedTriangle("discrete harmonic map has a folded triangle");
            }
            out.converged = true;
            return out;
        }
        double shift = 0.0;
        const double diag = H.diagonal().cwiseAbs().maxCoeff();
        bool stepped = false;
        for (int attempt = 0; attempt < 12 && !stepped; ++attempt) {
            Eigen::SparseMatrix<double> A = H;
            if (shift > 0.0) {
                for (Eigen::Index i = 0; i < A.rows(); ++i) {
                    A.coeffRef(i, i) += shift;
                }
            }
            cg.compute(A);
            Eigen::VectorXd dx;
            if (cg.info() == Eigen::Success) {
                dx = cg.solve(-g);
            }
            const bool descent = cg.info() == Eigen::Success && g.dot(dx) < 0.0;
            if (descent) {
                const double slope = g.dot(dx);
                for (double alpha = 1.0; alpha > 1e-10; alpha *= 0.5) {
                    const Eigen::VectorXd trial = x + alpha * dx;
                    if (!P.images(trial, w, det) || (guard && det <= 0.0)) {
                        continue;
                    }
                    if (P.energy(w) <= E + 1e-4 * alpha * slope + 1e-13 * std::abs(E)) {
                        x = trial;
                        guard = guard || det > 0.0;
                        stepped = true;
                        break;
                    }
                }
            }
            shift = shift == 0.0 ? 1e-8 * diag : shift * 10.0;
        }
        if (!stepped) {
            break;
        }
    }
    return out;
}

HarmonicMapState make_state(const Problem& P, const SurfaceMesh& m, const FuchsianSurface& src,
                            const FuchsianSurface& tgt, const NewtonOutcome& r) {
    HarmonicMapState st;
    st.mesh = &m;
    st.source = src;
    st.target = tgt;
    st.image.resize(m.quotient_size());
    for (std::size_t q = 0; q < m.quotient_size(); ++q) {
        st.image[q] = Complex(r.x(2 * q), r.x(2 * q + 1));
    }
    P.images(r.x, st.w, st.min_jacobian);
    st.image_maps = P.image_maps();
    st.energy = r.energy;
    st.gradient_norm = r.gradient;
    st.iterations = r.iterations;
    // equivariance: rho(T_v) w(v) must reproduce the representative's image
    for (std::size_t v = 0; v < m.size(); ++v) {
        const Complex back = st.image_maps[v].inverse()(st.w[v]);
        st.equivariance_defect = std::max(st.equivariance_defect, std::abs(back - st.image[m.quotient[v]]));
    }
    return st;
}

Eigen::VectorXd pack(const std::vector<Complex>& image) {
    Eigen::VectorXd x(2 * image.size());
    for (std::size_t q = 0; q < image.size(); ++q) {
        x(2 * q) = image[q].real();
        x(2 * q + 1) = image[q].imag();
    }
    return x;
}

std::vector<Complex> identity_images(const SurfaceMesh& m) {
    std::vector<Complex> image(m.quotient_size());
    for (std::size_t q = 0; q < m.quotient_size(); ++q) {
        image[q] = m.vertices[m.representative[q]];
    }
    return image;
}

FenchelNielsenCoords blend(const FenchelNielsenCoords& a, const FenchelNielsenCoords& b, double s) {
    FenchelNielsenCoords c;
    for (int i = 0; i < 3; ++i) {
        c.lengths[i] = (1.0 - s) * a.lengths[i] + s * b.lengths[i];
        c.twists[i] = (1.0 - s) * a.twists[i] + s * b.twists[i];
    }
    return c;
}

// Piecewise-linear interpolation of a solved map at the representative
// vertices of another mesh of the same domain.
std::vector<Complex> prolong(const HarmonicMapState& coarse, const SurfaceMesh& fine) {
    const SurfaceMesh& c = *coarse.mesh;
    double lo_x = 1.0, lo_y = 1.0, hi_x = -1.0, hi_y = -1.0;
    for (const Complex& z : c.vertices) {
        lo_x = std::min(lo_x, z.real());
        lo_y = std::min(lo_y, z.imag());
        hi_x = std::max(hi_x, z.real());
        hi_y = std::max(hi_y, z.imag());
    }
    const int cells = std::max(1, static_cast<int>(std::sqrt(static_cast<double>(c.triangles.size()) / 2.0)));
    const double dx = (hi_x - lo_x) / cells + 1e-12, dy = (hi_y - lo_y) / cells + 1e-12;
    auto cell = [&](double x, double y) {
        const int i = std::clamp(static_cast<int>((x - lo_x) / dx), 0, cells - 1);
        const int j = std::clamp(static_cast<int>((y - lo_y) / dy), 0, cells - 1);
        return std::pair{i, j};
    };
    std::vector<std::vector<int>> bins(static_cast<std::size_t>(cells) * cells);
    for (std::size_t t = 0; t < c.triangles.size(); ++t) {
        const auto& tri = c.triangles[t];
        double x0 = 1.0, y0 = 1.0, x1 = -1.0, y1 = -1.0;
        for (int v : tri) {
            x0 = std::min(x0, c.vertices[v].real());
            y0 = std::min(y0, c.vertices[v].imag());
            x1 = std::max(x1, c.vertices[v].real());
            y1 = std::max(y1, c.vertices[v].imag());
        }
        const auto [i0, j0] = cell(x0, y0);
        const auto [i1, j1] = cell(x1, y1);
        for (int i = i0; i <= i1; ++i) {
            for (int j = j0; j <= j1; ++j) {
                bins[static_cast<std::size_t>(i) * cells + j].push_back(static_cast<int>(t));
            }
        }
    }
    auto barycentric = [&](int t, Complex z) {
        const auto& tri = c.triangles[t];
        const Complex a = c.vertices[tri[0]], b = c.vertices[tri[1]], d = c.vertices[tri[2]];
        const double det = cross(b - a, d - a);
        const double l1 = cross(z - a, d - a) / det, l2 = cross(b - a, z - a) / det;
        return std::array<double, 3>{1.0 - l1 - l2, l1, l2};
    };
    std::vector<Complex> out(fine.quotient_size());
    for (std::size_t q = 0; q < out.size(); ++q) {
        const Complex z = fine.vertices[fine.representative[q]];
        const auto [ci, cj] = cell(z.real(), z.imag());
        int best = -1;
        double best_score = -std::numeric_limits<double>::infinity();
        std::array<double, 3> best_l{};
        // the containing triangle, or the least violated one near the boundary
        for (int r = 0; r < cells && best_score < -1e-12; ++r) {
            for (int i = std::max(0, ci - r); i <= std::min(cells - 1, ci + r); ++i) {
                for (int j = std::max(0, cj - r); j <= std::min(cells - 1, cj + r); ++j) {
                    for (int t : bins[static_cast<std::size_t>(i) * cells + j]) {
                        const auto l = barycentric(t, z);
                        const double score = std::min({l[0], l[1], l[2]});
                        if (score > best_score) {
                            best_score = score;
                            best = t;
                            best_l = l;
                        }
                    }
                }
            }
            if (best >= 0 && r >= 1) {
                break;
            }
        }
        const auto& tri = c.triangles[best];
        out[q] = best_l[0] * coarse.w[tri[0]] + best_l[1] * coarse.w[tri[1]] + best_l[2] * coarse.w[tri[2]];
    }
    return out;
}

HarmonicMapState solve_direct(const FuchsianSurface& src, const FuchsianSurface& tgt, const SurfaceMesh& m,
                              const std::vector<Complex>& start, bool fallback, const HarmonicOptions& opts) {
    const Problem P(m, src, tgt);
    try {
        const NewtonOutcome r = newton(P, pack(start), opts);
        if (r.converged) {
            return make_state(P, m, src, tgt, r);
        }
        if (!fallback) {
            throw NonConvergence("harmonic map Newton stalled at gradient " + std::to_string(r.gradient));
        }
    } catch (const FoldedTriangle&) {
        if (!fallback) {
            throw;
        }
    }
    // Walk the target in from the source along a straight Fenchel-Nielsen path.
    std::vector<Complex> current = identity_images(m);
    const int steps = 8;
    for (int k = 1; k <= steps; ++k) {
        const FenchelNielsenCoords c = blend(*src.fn, *tgt.fn, double(k) / steps);
        const FuchsianSurface mid = build_genus2_fn(c.lengths, c.twists);
        const Problem Pm(m, src, mid);
        const NewtonOutcome r = newton(Pm, pack(current), opts);
        if (!r.converged) {
            throw NonConvergence("continuation stalled at gradient " + std::to_string(r.gradient));
        }
        for (std::size_t q = 0; q < current.size(); ++q) {
            current[q] = Complex(r.x(2 * q), r.x(2 * q + 1));
        }
        if (k == steps) {
            return make_state(Pm, m, src, tgt, r);
        }
    }
    throw NonConvergence("continuation did not reach the target");
}

}  // namespace

HarmonicMapState solve_harmonic(const FuchsianSurface& src, const FuchsianSurface& tgt, const SurfaceMesh& m,
                                const std::vector<Complex>* init, const HarmonicOptions& opts) {
    if (init && init->size() != m.quotient_size()) {
        throw FieldMeshMismatch("initial map size does not match the mesh");
    }
    const bool fallback = !init && src.fn && tgt.fn;
    if (init) {
        return solve_direct(src, tgt, m, *init, false, opts);
    }
    if (m.h > 0.08) {
        return solve_direct(src, tgt, m, identity_images(m), fallback, opts);
    }
    // Fine meshes start from the interpolated solution on a mesh twice as coarse.
    const SurfaceMesh coarse_mesh = build_mesh(src, std::min(0.5, 2.0 * m.h));
    const HarmonicMapState coarse = solve_harmonic(src, tgt, coarse_mesh, nullptr, opts);
    try {
        return solve_direct(src, tgt, m, prolong(coarse, m), false, opts);
    } catch (const Error&) {
        return solve_direct(src, tgt, m, identity_images(m), fallback, opts);
    }
}

namespace {

// Quadratic least-squares fit of w over the two-ring of each quotient vertex,
// gathered across all copies and expressed in the representative's chart.
// Returns (w_z, w_zbar) there.
void recover_gradients(const HarmonicMapState& st, std::vector<Complex>& A, std::vector<Complex>& B) {
    const SurfaceMesh& m = *st.mesh;
    const std::size_t nq = m.quotient_size();
    std::vector<std::vector<int>> nbr(m.size()), copies(nq);
    for (const auto& t : m.triangles) {
        for (int i = 0; i < 3; ++i) {
            nbr[t[i]].push_back(t[(i + 1) % 3]);
            nbr[t[i]].push_back(t[(i + 2) % 3]);
        }
    }
    for (auto& n : nbr) {
        std::sort(n.begin(), n.end());
        n.erase(std::unique(n.begin(), n.end()), n.end());
    }
    for (std::size_t v = 0; v < m.size(); ++v) {
        copies[m.quotient[v]].push_back(static_cast<int>(v));
    }
    A.assign(nq, Complex(0.0, 0.0));
    B.assign(nq, Complex(0.0, 0.0));

    std::vector<std::pair<Complex, Complex>> pts;
    auto add = [&](Complex z, Complex w) {
        for (const auto& p : pts) {
            if (std::abs(p.first - z) < 1e-11) {
                return;
            }
        }
        pts.emplace_back(z, w);
    };
    for (std::size_t q = 0; q < nq; ++q) {
        const Complex z0 = m.vertices[m.representative[q]];
        pts.clear();
        add(z0, st.w[m.representative[q]]);
        for (int v : copies[q]) {
            const Mobius S = m.to_rep[v], P = st.image_maps[v].inverse();
            for (int u : nbr[v]) {
                add(S(m.vertices[u]), P(st.w[u]));
                const Mobius G = S * m.to_rep[u].inverse(), Q = P * st.image_maps[u];
                for (int v2 : copies[m.quotient[u]]) {
                    const Mobius S2 = G * m.to_rep[v2], P2 = Q * st.image_maps[v2].inverse();
                    for (int u2 : nbr[v2]) {
                        add(S2(m.vertices[u2]), P2(st.w[u2]));
                    }
                }
            }
        }
        double scale = 0.0;
        for (const auto& p : pts) {
            scale = std::max(scale, std::abs(p.first - z0));
        }
        const int n = static_cast<int>(pts.size());
        Eigen::MatrixXd X(n, 6);
        Eigen::MatrixXd Y(n, 2);
        for (int i = 0; i < n; ++i) {
            const Complex d = (pts[i].first - z0) / scale;
            const double x = d.real(), y = d.imag();
            X.row(i) << 1.0, x, y, x * x, x * y, y * y;
            Y.row(i) << pts[i].second.real(), pts[i].second.imag();
        }
        const Eigen::MatrixXd c = X.colPivHouseholderQr().solve(Y);
        const Complex wx(c(1, 0) / scale, c(1, 1) / scale), wy(c(2, 0) / scale, c(2, 1) / scale);
        const Complex I(0.0, 1.0);
        A[q] = 0.5 * (wx - I * wy);
        B[q] = 0.5 * (wx + I * wy);
    }
}

}  // namespace

EnergyDensities energy_densities(const HarmonicMapState& st) {
    const SurfaceMesh& m = *st.mesh;
    std::vector<Complex> A, B;
    recover_gradients(st, A, B);
    EnergyDensities d;
    d.H.values.resize(m.size());
    d.L.values.resize(m.size());
    d.e.values.resize(m.size());
    d.J.values.resize(m.size());
    d.wz.resize(m.size());
    d.wzbar.resize(m.size());
    for (std::size_t v = 0; v < m.size(); ++v) {
        const int q = m.quotient[v];
        const Complex a = A[q], b = B[q];
        const int r = m.representative[q];
        const double ratio = metric_density(st.w[r]) / metric_density(m.vertices[r]);
        d.H[v] = ratio * std::norm(a);
        d.L[v] = ratio * std::norm(b);
        d.e[v] = d.H[v] + d.L[v];
        d.J[v] = d.H[v] - d.L[v];
        const Complex dt = m.to_rep[v].derivative(m.vertices[v]);
        const Complex dp = st.image_maps[v].inverse().derivative(st.w[v]);
        d.wz[v] = a * dt / dp;
        d.wzbar[v] = b * std::conj(dt) / dp;
    }
    return d;
}

QuadDiff hopf_differential(const HarmonicMapState& st) {
    const EnergyDensities d = energy_densities(st);
    QuadDiff phi;
    phi.values.resize(st.mesh->size());
    for (std::size_t v = 0; v < phi.size(); ++v) {
        phi.values[v] = metric_density(st.w[v]) * d.wz[v] * std::conj(d.wzbar[v]);
    }
    return phi;
}

BochnerResult bochner_residual(const HarmonicMapState& st, const LaplaceOperator& L) {
    const EnergyDensities d = energy_densities(st);
    const Eigen::VectorXd H = L.restrict(d.H), Lq = L.restrict(d.L), J = L.restrict(d.J);
    const Eigen::VectorXd logH = H.array().log().matrix();
    const Eigen::VectorXd rhs = 2.0 * H - 2.0 * Lq - 2.0 * Eigen::VectorXd::Ones(H.size());
    const Eigen::VectorXd sub_rhs = 2.0 * J.cwiseProduct(H) - 2.0 * H;

    BochnerResult r;
    r.pointwise_residual = (L.laplacian(logH) - rhs).lpNorm<Eigen::Infinity>();
    r.pointwise_subsolution_min = (L.laplacian(H) - sub_rhs).minCoeff();
    // D Delta f = 2 D f - 2 f holds exactly for the discrete operators.
    const Eigen::VectorXd weak = 2.0 * L.apply_D(logH) - 2.0 * logH - L.apply_D(rhs);
    const Eigen::VectorXd weak_sub = 2.0 * L.apply_D(H) - 2.0 * H - L.apply_D(sub_rhs);
    r.residual = weak.lpNorm<Eigen::Infinity>();
    r.subsolution_min = weak_sub.minCoeff();
    return r;
}

EnergyReport energy_report(const HarmonicMapState& st, const BeltramiField& mu, double tol) {
    const SurfaceMesh& m = *st.mesh;
    if (std::abs(wp_norm(m, mu) - 1.0) > 1e-6) {
        throw NormMismatch("energy report needs a unit-norm Beltrami field");
    }
    const EnergyDensities d = energy_densities(st);
    const BeltramiField hopf_mu = to_beltrami(m, hopf_differential(st));
    const double area = 4.0 * std::numbers::pi * (st.source.genus - 1);

    EnergyReport r;
    r.min_H = std::numeric_limits<double>::infinity();
    double peak = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v) {
        const double w = m.vertex_weights[v];
        const double hm2 = std::norm(hopf_mu.values[v]);
        r.integral_L += w * d.L[v];
        r.integral_HL += w * d.H[v] * d.L[v];
        r.integral_J += w * d.J[v];
        r.energy += w * d.e[v];
        r.sup_mu = std::max(r.sup_mu, std::abs(mu.values[v]));
        r.sup_hopf_mu = std::max(r.sup_hopf_mu, std::sqrt(hm2));
        r.sup_H = std::max(r.sup_H, d.H[v]);
        r.min_H = std::min(r.min_H, d.H[v]);
        r.hl_mismatch = std::max(r.hl_mismatch, std::abs(d.H[v] * d.L[v] - hm2));
        peak = std::max(peak, hm2);
    }
    if (peak > 0.0) {
        r.hl_mismatch /= peak;
    }
    for (const auto& tri : m.triangles) {
        r.image_area += hyperbolic_triangle_area(st.w[tri[0]], st.w[tri[1]], st.w[tri[2]]);
    }
    r.energy_identity = std::abs(r.energy - r.integral_J - 2.0 * r.integral_L);

    r.integral_L_ok = r.integral_L <= 1.0 + tol && r.integral_L <= r.integral_HL + tol;
    r.integral_J_ok = std::abs(r.integral_J - area) <= tol * area;
    r.energy_ok = r.energy <= area + 2.0 + tol;
    r.mu_below_H = true;
    for (std::size_t v = 0; v < m.size(); ++v) {
        if (!(std::abs(mu.values[v]) < d.H[v]) || !(std::abs(hopf_mu.values[v]) < d.H[v])) {
            r.mu_below_H = false;
        }
    }
    r.H_lower_ok = r.min_H >= 1.0 - tol;
    return r;
}

Eigen::VectorXcd project(const SurfaceMesh& m, const Basis& basis, const QuadDiff& q) {
    Eigen::VectorXcd c(static_cast<Eigen::Index>(basis.phi.size()));
    for (std::size_t k = 0; k < basis.phi.size(); ++k) {
        c(static_cast<Eigen::Index>(k)) = wp_cometric(m, q, basis.phi[k]);
    }
    return c;
}

WolfResult wolf_map(const QuadDiff& phi, const FuchsianSurface& src, const SurfaceMesh& m, const Basis& basis,
                    double t, double tolerance) {
    if (std::abs(t) > 0.5) {
        throw OutOfRegime("wolf_map is limited to |t| <= 0.5");
    }
    if (!src.fn) {
        throw InvalidSpec("wolf_map needs a source with Fenchel-Nielsen coordinates");
    }
    const Eigen::VectorXcd goal = t * project(m, basis, phi);
    HarmonicOptions opts;
    opts.tolerance = 1e-11;

    using Vec = Eigen::Matrix<double, 6, 1>;
    auto coords = [](const Vec& p) {
        FenchelNielsenCoords c;
        for (int i = 0; i < 3; ++i) {
            c.lengths[i] = p(i);
            c.twists[i] = p(3 + i);
        }
        return c;
    };
    auto residual_of = [&](const HarmonicMapState& st) {
        const Eigen::VectorXcd c = project(m, basis, hopf_differential(st)) - goal;
        Vec f;
        for (int k = 0; k < 3; ++k) {
            f(k) = c(k).real();
            f(3 + k) = c(k).imag();
        }
        return f;
    };
    struct Point {
        Vec p;
        FuchsianSurface surface;
        HarmonicMapState state;
        Vec f;
    };
    auto evaluate = [&](const Vec& p, const std::vector<Complex>* init) {
        Point pt;
        pt.p = p;
        const FenchelNielsenCoords c = coords(p);
        pt.surface = build_genus2_fn(c.lengths, c.twists);
        pt.state = solve_harmonic(src, pt.surface, m, init, opts);
        pt.f = residual_of(pt.state);
        return pt;
    };

    Vec p0;
    for (int i = 0; i < 3; ++i) {
        p0(i) = src.fn->lengths[i];
        p0(3 + i) = src.fn->twists[i];
    }
    Point cur = evaluate(p0, nullptr);
    const double scale = std::max(std::abs(t), 1e-300);
    WolfResult out;
    // Chord iterations: the finite-difference Jacobian is rebuilt only when
    // the residual stops contracting fast.
    Eigen::Matrix<double, 6, 6> Jac;
    bool fresh = false, have = false;
    for (int it = 0;; ++it) {
        out.iterations = it;
        if (cur.f.norm() / scale < tolerance || t == 0.0) {
            break;
        }
        if (it == 25) {
            throw NewtonFailure("Wolf inversion did not reach the tolerance");
        }
        if (!have) {
            const double step = 1e-5;
            for (int j = 0; j < 6; ++j) {
                Vec q = cur.p;
                q(j) += step;
                Jac.col(j) = (evaluate(q, &cur.state.image).f - cur.f) / step;
            }
            have = fresh = true;
        }
        const Eigen::ColPivHouseholderQR<Eigen::Matrix<double, 6, 6>> qr(Jac);
        if (qr.rank() < 6) {
            throw NewtonFailure("singular Jacobian in the Wolf inversion");
        }
        const Vec dp = qr.solve(-cur.f);
        bool accepted = false;
        for (double alpha = 1.0; alpha > 1e-3; alpha *= 0.5) {
            try {
                Point next = evaluate(cur.p + alpha * dp, &cur.state.image);
                if (next.f.norm() < cur.f.norm()) {
                    if (next.f.norm() > 0.25 * cur.f.norm()) {
                        have = false;
                    }
                    cur = std::move(next);
                    accepted = true;
                    break;
                }
            } catch (const Error&) {
            }
        }
        if (!accepted) {
            if (fresh) {
                throw NewtonFailure("Wolf inversion stalled");
            }
            have = false;
            continue;
        }
        fresh = false;
    }
    out.fn = coords(cur.p);
    out.residual = cur.f.norm() / scale;
    if (t == 0.0) {
        out.residual = 0.0;
    }
    out.target = std::move(cur.surface);
    out.state = std::move(cur.state);
    return out;
}

std::string to_json(const EnergyReport& r) {
    nlohmann::ordered_json j;
    j["integral_L"] = r.integral_L;
    j["integral_HL"] = r.integral_HL;
    j["integral_J"] = r.integral_J;
    j["image_area"] = r.image_area;
    j["energy"] = r.energy;
    j["sup_mu"] = r.sup_mu;
    j["sup_hopf_mu"] = r.sup_hopf_mu;
    j["sup_H"] = r.sup_H;
    j["min_H"] = r.min_H;
    j["hl_mismatch"] = r.hl_mismatch;
    j["energy_identity"] = r.energy_identity;
    j["flags"] = {{"integral_L", r.integral_L_ok},
                  {"integral_J", r.integral_J_ok},
                  {"energy", r.energy_ok},
                  {"mu_below_H", r.mu_below_H},
                  {"H_lower", r.H_lower_ok}};
    return j.dump(2);
}

std::string map_to_json(const HarmonicMapState& st) {
    nlohmann::json j;
    auto& pts = j["points"] = nlohmann::json::array();
    for (std::size_t v = 0; v < st.w.size(); ++v) {
        const Complex z = st.mesh->vertices[v];
        pts.push_back({z.real(), z.imag(), st.w[v].real(), st.w[v].imag()});
    }
    j["energy"] = st.energy;
    j["gradient_norm"] = st.gradient_norm;
    return j.dump();
}

}  // namespace wpgeo
