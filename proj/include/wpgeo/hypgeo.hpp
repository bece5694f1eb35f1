#pragma once

// Isometries and metric primitives of the Poincare disk with curvature -1,
// metric sigma(z)|dz|^2 where sigma(z) = 4 / (1 - |z|^2)^2.

#include <complex>

namespace wpgeo {

using Complex = std::complex<double>;

/// A point of the open unit disk. Construction rejects |z| >= 1 - 1e-14.
class DiskPoint {
public:
    DiskPoint() = default;
    explicit DiskPoint(Complex z);

    Complex z() const { return z_; }
    double abs() const { return std::abs(z_); }

private:
    Complex z_{0.0, 0.0};
};

/// Unit-determinant 2x2 complex matrix [[a, b], [c, d]] acting by
/// z -> (a z + b) / (c z + d). Matrices differing by sign are the same map.
class Mobius {
public:
    Mobius() = default;
    /// Normalizes to unit determinant; throws std::domain_error when det ~ 0.
    Mobius(Complex a, Complex b, Complex c, Complex d);

    static Mobius identity() { return {}; }
    /// z -> e^{i angle} z.
    static Mobius rotation(double angle);
    /// Hyperbolic translation of length `length` along the real diameter,
    /// moving 0 towards +1.
    static Mobius translation(double length);
    /// Disk automorphism sending p to 0 and fixing the direction of p.
    static Mobius to_origin(Complex p);

    Complex a() const { return a_; }
    Complex b() const { return b_; }
    Complex c() const { return c_; }
    Complex d() const { return d_; }

    Complex operator()(Complex z) const { return (a_ * z + b_) / (c_ * z + d_); }
    /// gamma'(z) = 1 / (c z + d)^2.
    Complex derivative(Complex z) const {
        const Complex den = c_ * z + d_;
        return 1.0 / (den * den);
    }

    Mobius inverse() const { return Mobius(d_, -b_, -c_, a_, Raw{}); }
    Complex trace() const { return a_ + d_; }

    /// True when d = conj(a) and c = conj(b) up to `tol`, i.e. the map
    /// preserves the unit disk.
    bool is_disk_form(double tol = 1e-9) const;
    /// Entrywise comparison modulo the global sign.
    bool equals_up_to_sign(const Mobius& other, double tol = 1e-9) const;
    /// Largest entrywise distance to +I or -I.
    double distance_to_identity() const;

    friend Mobius operator*(const Mobius& lhs, const Mobius& rhs);

private:
    struct Raw {};
    Mobius(Complex a, Complex b, Complex c, Complex d, Raw)
        : a_(a), b_(b), c_(c), d_(d) {}

    Complex a_{1.0, 0.0};
    Complex b_{0.0, 0.0};
    Complex c_{0.0, 0.0};
    Complex d_{1.0, 0.0};
};

DiskPoint apply(const Mobius& T, DiskPoint z);
Complex derivative(const Mobius& T, DiskPoint z);
/// Matrix product T1 * T2 (apply T2 first). Disk-form inputs are
/// re-symmetrized so long products do not drift off the disk group.
Mobius compose(const Mobius& T1, const Mobius& T2);

double hyperbolic_distance(Complex z1, Complex z2);
inline double hyperbolic_distance(DiskPoint z1, DiskPoint z2) {
    return hyperbolic_distance(z1.z(), z2.z());
}
/// Distance from 0 of g(0), computed from |a| without cancellation.
double displacement_of_origin(const Mobius& g);

inline double metric_density(Complex z) {
    const double s = 1.0 - std::norm(z);
    return 4.0 / (s * s);
}
inline double metric_density(DiskPoint z) { return metric_density(z.z()); }

/// 2 arccosh(|trace| / 2); throws ElementNotHyperbolic when |trace| <= 2 + 1e-12.
double translation_length(const Mobius& T);

/// Point at hyperbolic arclength fraction `t` in [0, 1] along the geodesic from p to q.
Complex geodesic_point(Complex p, Complex q, double t);
/// Unit tangent direction (as a complex number) at p of the geodesic towards q.
Complex geodesic_direction(Complex p, Complex q);

inline Complex poincare_to_klein(Complex w) { return 2.0 * w / (1.0 + std::norm(w)); }
Complex klein_to_poincare(Complex k);

}  // namespace wpgeo
