#include "wpgeo/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "json.hpp"
#include "wpgeo/errors.hpp"

namespace wpgeo {

namespace {

double cross(Complex u, Complex v) { return u.real() * v.imag() - u.imag() * v.real(); }

// Point at fraction t of hyperbolic arclength along the diameter ray from 0 to p.
Complex radial_point(Complex p, double t) {
    const double r = std::abs(p);
    if (r == 0.0) {
        return p;
    }
    return p / r * std::tanh(t * std::atanh(r));
}

struct Ring {
    std::vector<double> u;  // boundary parameter of each point
    std::vector<int> ids;
};

double ring_length(const DirichletSide& side, double t) {
    constexpr int kSamples = 48;
    double len = 0.0;
    Complex prev = radial_point(side.start, t);
    for (int j = 1; j <= kSamples; ++j) {
        const Complex cur = radial_point(geodesic_point(side.start, side.end, static_cast<double>(j) / kSamples), t);
        len += hyperbolic_distance(prev, cur);
        prev = cur;
    }
    return len;
}

class MeshBuilder {
public:
    MeshBuilder(const DirichletDomain& dom, double spacing) : dom_(dom), s_(spacing) {}

    void build(SurfaceMesh& m) {
        const std::size_t n = dom_.sides.size();
        layers_ = std::max(2, static_cast<int>(std::ceil(dom_.circumradius / s_)));
        verts_.push_back(Complex(0.0, 0.0));

        // Rays through the polygon corners are shared by neighbouring sectors.
        corner_ids_.assign(n, std::vector<int>(layers_ + 1, 0));
        for (std::size_t i = 0; i < n; ++i) {
            for (int k = 1; k <= layers_; ++k) {
                const Complex p = (k == layers_) ? dom_.sides[i].start
                                                 : radial_point(dom_.sides[i].start, static_cast<double>(k) / layers_);
                corner_ids_[i][k] = add(p);
            }
        }
        side_count_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            const auto p = static_cast<std::size_t>(dom_.sides[i].partner);
            const double len = std::max(dom_.sides[i].length, dom_.sides[p].length);
            side_count_[i] = std::max(1, static_cast<int>(std::ceil(len / s_)));
        }
        boundary_ids_.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            build_sector(i);
        }
        m.vertices = verts_;
        m.triangles = tris_;
    }

    const std::vector<std::vector<int>>& boundary_ids() const { return boundary_ids_; }

private:
    int add(Complex z) {
        verts_.push_back(z);
        return static_cast<int>(verts_.size()) - 1;
    }

    Ring make_ring(std::size_t i, int k) {
        const DirichletSide& side = dom_.sides[i];
        const std::size_t next = (i + 1) % dom_.sides.size();
        const double t = static_cast<double>(k) / layers_;
        const int q = (k == layers_) ? side_count_[i]
                                     : std::max(1, static_cast<int>(std::ceil(ring_length(side, t) / s_)));
        Ring ring;
        for (int j = 0; j <= q; ++j) {
            const double u = static_cast<double>(j) / q;
            ring.u.push_back(u);
            if (j == 0) {
                ring.ids.push_back(corner_ids_[i][k]);
            } else if (j == q) {
                ring.ids.push_back(corner_ids_[next][k]);
            } else {
                const Complex b = geodesic_point(side.start, side.end, u);
                ring.ids.push_back(add(k == layers_ ? b : radial_point(b, t)));
            }
        }
        return ring;
    }

    void triangle(int a, int b, int c) {
        if (cross(verts_[b] - verts_[a], verts_[c] - verts_[a]) < 0.0) {
            std::swap(b, c);
        }
        tris_.push_back({a, b, c});
    }

    void build_sector(std::size_t i) {
        Ring inner = make_ring(i, 1);
        for (std::size_t j = 0; j + 1 < inner.ids.size(); ++j) {
            triangle(0, inner.ids[j], inner.ids[j + 1]);
        }
        for (int k = 2; k <= layers_; ++k) {
            Ring outer = make_ring(i, k);
            std::size_t a = 0;
            std::size_t b = 0;
            const std::size_t qa = inner.ids.size() - 1;
            const std::size_t qb = outer.ids.size() - 1;
            while (a < qa || b < qb) {
                const bool advance_inner = a < qa && (b == qb || inner.u[a + 1] <= outer.u[b + 1]);
                if (advance_inner) {
                    triangle(inner.ids[a], outer.ids[b], inner.ids[a + 1]);
                    ++a;
                } else {
                    triangle(inner.ids[a], outer.ids[b], outer.ids[b + 1]);
                    ++b;
                }
            }
            inner = std::move(outer);
        }
        boundary_ids_[i] = inner.ids;
    }

    const DirichletDomain& dom_;
    double s_;
    int layers_ = 0;
    std::vector<Complex> verts_;
    std::vector<std::array<int, 3>> tris_;
    std::vector<std::vector<int>> corner_ids_;
    std::vector<int> side_count_;
    std::vector<std::vector<int>> boundary_ids_;
};

double opposite_angle_cot(Complex apex, Complex p, Complex q) {
    const Complex u = p - apex;
    const Complex v = q - apex;
    return (u.real() * v.real() + u.imag() * v.imag()) / std::abs(cross(u, v));
}

// Lawson flips on edges interior to the domain until every such edge is
// locally Delaunay in disk coordinates.
void delaunay_flips(std::vector<Complex>& verts, std::vector<std::array<int, 3>>& tris) {
    for (int pass = 0; pass < 100; ++pass) {
        std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> edges;  // edge -> (triangle, opposite slot)
        for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
            for (int e = 0; e < 3; ++e) {
                const int a = tris[t][(e + 1) % 3];
                const int b = tris[t][(e + 2) % 3];
                edges[{std::min(a, b), std::max(a, b)}].push_back({t, e});
            }
        }
        std::vector<char> touched(tris.size(), 0);
        int flips = 0;
        for (const auto& [edge, adj] : edges) {
            if (adj.size() != 2) {
                continue;
            }
            const auto [t1, e1] = adj[0];
            const auto [t2, e2] = adj[1];
            if (touched[t1] || touched[t2]) {
                continue;
            }
            const int c = tris[t1][e1];
            const int d = tris[t2][e2];
            const Complex za = verts[edge.first];
            const Complex zb = verts[edge.second];
            const double cot_sum = opposite_angle_cot(verts[c], za, zb) + opposite_angle_cot(verts[d], za, zb);
            if (cot_sum >= -1e-12) {
                continue;
            }
            // Replace (a, b) by (c, d).
            auto orient = [&](int x, int y, int z) -> std::array<int, 3> {
                if (cross(verts[y] - verts[x], verts[z] - verts[x]) < 0.0) {
                    return {x, z, y};
                }
                return {x, y, z};
            };
            tris[t1] = orient(c, d, edge.first);
            tris[t2] = orient(c, d, edge.second);
            touched[t1] = touched[t2] = 1;
            ++flips;
        }
        if (flips == 0) {
            return;
        }
    }
}

int find_root(std::vector<int>& parent, int v) {
    while (parent[v] != v) {
        parent[v] = parent[parent[v]];
        v = parent[v];
    }
    return v;
}

double max_edge(const SurfaceMesh& m) {
    double h = 0.0;
    for (const auto& t : m.triangles) {
        for (int e = 0; e < 3; ++e) {
            h = std::max(h, hyperbolic_distance(m.vertices[t[e]], m.vertices[t[(e + 1) % 3]]));
        }
    }
    return h;
}

}  // namespace

double hyperbolic_triangle_area(Complex a, Complex b, Complex c) {
    // sigma = Laplacian of -log(1 - |z|^2); integrate its normal derivative
    // over the three straight edges.
    double area = 0.0;
    const Complex pts[3] = {a, b, c};
    const double orient = cross(b - a, c - a) > 0.0 ? 1.0 : -1.0;
    for (int e = 0; e < 3; ++e) {
        const Complex p = pts[e];
        const Complex q = pts[(e + 1) % 3];
        const Complex tangent = (q - p) / std::abs(q - p);
        const Complex normal = orient * Complex(tangent.imag(), -tangent.real());
        const double dist = p.real() * normal.real() + p.imag() * normal.imag();
        const double half = std::sqrt(1.0 - dist * dist);
        const double t0 = p.real() * tangent.real() + p.imag() * tangent.imag();
        const double t1 = q.real() * tangent.real() + q.imag() * tangent.imag();
        area += 2.0 * dist / half * (std::atanh(t1 / half) - std::atanh(t0 / half));
    }
    return area;
}

SurfaceMesh build_mesh(const FuchsianSurface& s, double h) {
    if (!(h >= 0.005 && h <= 0.5)) {
        throw InvalidSpec("mesh size h must lie in [0.005, 0.5]");
    }
    const DirichletDomain dom = dirichlet_domain(s);
    SurfaceMesh m;

    double spacing = h / 1.18;
    std::vector<std::vector<int>> boundary;
    for (int attempt = 0;; ++attempt) {
        MeshBuilder builder(dom, spacing);
        m = SurfaceMesh{};
        m.domain = dom;
        builder.build(m);
        delaunay_flips(m.vertices, m.triangles);
        m.h = max_edge(m);
        boundary = builder.boundary_ids();
        if (m.h <= h) {
            break;
        }
        if (attempt == 30) {
            throw MeshFailure("could not reach the requested mesh size");
        }
        spacing *= 0.98 * h / m.h;
    }

    const std::size_t nv = m.vertices.size();
    m.triangle_areas.resize(m.triangles.size());
    m.vertex_weights.assign(nv, 0.0);
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
        const auto& tri = m.triangles[t];
        const double a = hyperbolic_triangle_area(m.vertices[tri[0]], m.vertices[tri[1]], m.vertices[tri[2]]);
        if (!(a > 1e-14) || cross(m.vertices[tri[1]] - m.vertices[tri[0]], m.vertices[tri[2]] - m.vertices[tri[0]]) <= 0.0) {
            throw MeshFailure("degenerate or inverted triangle");
        }
        m.triangle_areas[t] = a;
        for (int v : tri) {
            m.vertex_weights[v] += a / 3.0;
        }
    }
    m.total_area = std::accumulate(m.vertex_weights.begin(), m.vertex_weights.end(), 0.0);

    // Side i point j is carried by element_i^{-1} onto partner point n - j.
    struct Link {
        int to;
        std::size_t side;  // to_rep(to) = to_rep(from) * element_side
    };
    std::vector<std::vector<Link>> links(nv);
    std::vector<int> parent(nv);
    std::iota(parent.begin(), parent.end(), 0);
    for (std::size_t i = 0; i < dom.sides.size(); ++i) {
        const auto& mine = boundary[i];
        const auto& theirs = boundary[static_cast<std::size_t>(dom.sides[i].partner)];
        if (mine.size() != theirs.size()) {
            throw MeshFailure("paired sides subdivided differently");
        }
        const std::size_t n = mine.size() - 1;
        for (std::size_t j = 0; j <= n; ++j) {
            const int a = mine[j];
            const int b = theirs[n - j];
            links[a].push_back({b, i});
            parent[find_root(parent, a)] = find_root(parent, b);
        }
    }

    m.quotient.assign(nv, -1);
    m.to_rep.assign(nv, Mobius::identity());
    m.to_rep_word.assign(nv, Word{});
    std::vector<char> seen(nv, 0);
    for (std::size_t v = 0; v < nv; ++v) {
        if (m.quotient[v] >= 0) {
            continue;
        }
        // The first vertex of a class is its representative.
        const int q = static_cast<int>(m.representative.size());
        m.representative.push_back(static_cast<int>(v));
        m.quotient[v] = q;
        std::vector<int> stack = {static_cast<int>(v)};
        seen[v] = 1;
        while (!stack.empty()) {
            const int a = stack.back();
            stack.pop_back();
            for (const Link& l : links[a]) {
                // to_rep(b) = to_rep(a) * element: b = element^{-1}(a).
                const DirichletSide& side = dom.sides[l.side];
                if (!seen[l.to]) {
                    seen[l.to] = 1;
                    m.quotient[l.to] = q;
                    m.to_rep[l.to] = m.to_rep[a] * side.element;
                    m.to_rep_word[l.to] = concat(m.to_rep_word[a], side.element_word);
                    stack.push_back(l.to);
                }
            }
        }
    }
    m.quotient_weights.assign(m.representative.size(), 0.0);
    for (std::size_t v = 0; v < nv; ++v) {
        m.quotient_weights[m.quotient[v]] += m.vertex_weights[v];
    }
    return m;
}

double integrate(const SurfaceMesh& m, const ScalarField& f) {
    if (f.size() != m.size()) {
        throw FieldMeshMismatch("field size does not match the mesh");
    }
    double sum = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v) {
        sum += m.vertex_weights[v] * f[v];
    }
    return sum;
}

double invariance_defect(const SurfaceMesh& m, const ScalarField& f) {
    if (f.size() != m.size()) {
        throw FieldMeshMismatch("field size does not match the mesh");
    }
    double worst = 0.0;
    for (std::size_t v = 0; v < m.size(); ++v) {
        worst = std::max(worst, std::abs(f[v] - f[m.representative[m.quotient[v]]]));
    }
    return worst;
}

std::string mesh_to_json(const SurfaceMesh& m) {
    nlohmann::json j;
    j["h"] = m.h;
    j["area"] = m.total_area;
    auto& verts = j["vertices"] = nlohmann::json::array();
    for (const auto& z : m.vertices) {
        verts.push_back({z.real(), z.imag()});
    }
    j["triangles"] = m.triangles;
    j["weights"] = m.vertex_weights;
    j["quotient"] = m.quotient;
    return j.dump();
}

}  // namespace wpgeo
