#pragma once

#include <array>
#include <string>
#include <vector>

#include "wpgeo/surface.hpp"

namespace wpgeo {

// Triangulated Dirichlet domain. Vertices on the domain boundary are copies of
// a quotient vertex; to_rep[v] maps vertex v onto the representative copy.
struct SurfaceMesh {
    std::vector<Complex> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<double> triangle_areas;  // exact hyperbolic area of each flat triangle
    std::vector<double> vertex_weights;  // lumped hyperbolic area per mesh vertex

    std::vector<int> quotient;           // mesh vertex -> quotient vertex
    std::vector<int> representative;     // quotient vertex -> mesh vertex
    std::vector<Mobius> to_rep;
    std::vector<Word> to_rep_word;
    std::vector<double> quotient_weights;

    DirichletDomain domain;
    double h = 0.0;  // longest hyperbolic edge
    double total_area = 0.0;

    std::size_t size() const { return vertices.size(); }
    std::size_t quotient_size() const { return representative.size(); }
    bool is_boundary(std::size_t v) const { return static_cast<int>(v) != representative[quotient[v]]; }
};

/// 0.005 <= h <= 0.5. Throws MeshFailure when the Dirichlet domain does not close.
SurfaceMesh build_mesh(const FuchsianSurface& s, double h);

/// Per-mesh-vertex real field.
struct ScalarField {
    std::vector<double> values;
    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
};

double integrate(const SurfaceMesh& m, const ScalarField& f);
/// Largest mismatch of f between identified copies of a quotient vertex.
double invariance_defect(const SurfaceMesh& m, const ScalarField& f);

/// Exact integral of the hyperbolic area density over the Euclidean triangle (a, b, c).
double hyperbolic_triangle_area(Complex a, Complex b, Complex c);

std::string mesh_to_json(const SurfaceMesh& m);

}  // namespace wpgeo
