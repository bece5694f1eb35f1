#include "wpgeo/hypgeo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wpgeo/errors.hpp"

namespace wpgeo {

DiskPoint::DiskPoint(Complex z) : z_(z) {
    if (!(std::abs(z) < 1.0 - 1e-14)) {
        throw std::domain_error("DiskPoint outside the open unit disk");
    }
}

Mobius::Mobius(Complex a, Complex b, Complex c, Complex d) {
    const Complex det = a * d - b * c;
    if (std::abs(det) < 1e-300) {
        throw std::domain_error("Mobius: singular matrix");
    }
    const Complex s = std::sqrt(det);
    a_ = a / s;
    b_ = b / s;
    c_ = c / s;
    d_ = d / s;
}

Mobius Mobius::rotation(double angle) {
    const Complex h = std::polar(1.0, 0.5 * angle);
    return Mobius(h, 0.0, 0.0, std::conj(h), Raw{});
}

Mobius Mobius::translation(double length) {
    const double ch = std::cosh(0.5 * length);
    const double sh = std::sinh(0.5 * length);
    return Mobius(ch, sh, sh, ch, Raw{});
}

Mobius Mobius::to_origin(Complex p) {
    const double s = 1.0 / std::sqrt(1.0 - std::norm(p));
    return Mobius(s, -p * s, -std::conj(p) * s, s, Raw{});
}

bool Mobius::is_disk_form(double tol) const {
    const double scale = std::max(1.0, std::abs(a_));
    return std::abs(d_ - std::conj(a_)) <= tol * scale &&
           std::abs(c_ - std::conj(b_)) <= tol * scale;
}

bool Mobius::equals_up_to_sign(const Mobius& o, double tol) const {
    const double scale = std::max({1.0, std::abs(a_), std::abs(b_), std::abs(c_), std::abs(d_)});
    auto close = [&](double sgn) {
        return std::abs(a_ - sgn * o.a_) <= tol * scale && std::abs(b_ - sgn * o.b_) <= tol * scale &&
               std::abs(c_ - sgn * o.c_) <= tol * scale && std::abs(d_ - sgn * o.d_) <= tol * scale;
    };
    return close(1.0) || close(-1.0);
}

double Mobius::distance_to_identity() const {
    auto dist = [&](double sgn) {
        return std::max({std::abs(a_ - sgn), std::abs(b_), std::abs(c_), std::abs(d_ - sgn)});
    };
    return std::min(dist(1.0), dist(-1.0));
}

Mobius operator*(const Mobius& l, const Mobius& r) {
    Complex a = l.a_ * r.a_ + l.b_ * r.c_;
    Complex b = l.a_ * r.b_ + l.b_ * r.d_;
    Complex c = l.c_ * r.a_ + l.d_ * r.c_;
    Complex d = l.c_ * r.b_ + l.d_ * r.d_;
    if (l.is_disk_form(1e-6) && r.is_disk_form(1e-6)) {
        a = 0.5 * (a + std::conj(d));
        b = 0.5 * (b + std::conj(c));
        // |a|^2 - |b|^2 cancels catastrophically for large entries; only
        // renormalize where it is well conditioned.
        if (std::norm(a) < 1e6) {
            const double s = 1.0 / std::sqrt(std::norm(a) - std::norm(b));
            a *= s;
            b *= s;
        }
        return Mobius(a, b, std::conj(b), std::conj(a), Mobius::Raw{});
    }
    return Mobius(a, b, c, d);
}

DiskPoint apply(const Mobius& T, DiskPoint z) { return DiskPoint(T(z.z())); }

Complex derivative(const Mobius& T, DiskPoint z) { return T.derivative(z.z()); }

Mobius compose(const Mobius& T1, const Mobius& T2) { return T1 * T2; }

double hyperbolic_distance(Complex z1, Complex z2) {
    const Complex num = z1 - z2;
    const Complex den = 1.0 - std::conj(z2) * z1;
    const double r = std::abs(num) / std::abs(den);
    return 2.0 * std::atanh(std::min(r, 1.0 - 1e-17));
}

double displacement_of_origin(const Mobius& g) {
    // For disk form, cosh(d/2) = |a| = |d|; use |d| which is exact in both forms
    // up to the determinant normalization.
    const double ad = std::max(1.0, std::abs(g.d()));
    return 2.0 * std::acosh(ad);
}

double translation_length(const Mobius& T) {
    const double tr = std::abs(T.trace());
    if (!(tr > 2.0 + 1e-12)) {
        throw ElementNotHyperbolic("element is not hyperbolic: |trace| = " + std::to_string(tr));
    }
    return 2.0 * std::acosh(0.5 * tr);
}

Complex geodesic_point(Complex p, Complex q, double t) {
    const Mobius to0 = Mobius::to_origin(p);
    const Complex qq = to0(q);
    const double r = std::abs(qq);
    if (r == 0.0) {
        return p;
    }
    const double d = 2.0 * std::atanh(r);
    const Complex u = (qq / r) * std::tanh(0.5 * t * d);
    return to0.inverse()(u);
}

Complex geodesic_direction(Complex p, Complex q) {
    // to_origin(p) has derivative (1 - |p|^2)^{-1} > 0 at p, so directions at p
    // and at 0 agree.
    const Complex qq = Mobius::to_origin(p)(q);
    return qq / std::abs(qq);
}

Complex klein_to_poincare(Complex k) {
    const double n = std::norm(k);
    return k / (1.0 + std::sqrt(std::max(0.0, 1.0 - n)));
}

}  // namespace wpgeo
