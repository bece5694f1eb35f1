#pragma once

#include <complex>
#include <cstddef>

// Hot loops with a portable reference implementation and an AVX2/FMA variant.
// The variant is picked at runtime from the CPU; WPGEO_SIMD=scalar forces the
// reference path.

namespace wpgeo::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
void set_backend(Backend b);
bool avx2_available();
const char* backend_name(Backend b);

// Disk-form group elements in structure-of-arrays layout:
// g(z) = (a z + b) / (conj(b) z + conj(a)).
struct ElementArrays {
    const double* ar;
    const double* ai;
    const double* br;
    const double* bi;
    std::size_t count;
};

// For every element with |g(z)|^2 <= outer_r2 adds g'(z)^2 g(z)^m, m < seeds,
// into `inner` when |g(z)|^2 <= inner_r2 and into `shell` otherwise.
void series_terms(const ElementArrays& g, std::complex<double> z, double inner_r2, double outer_r2, int seeds,
                  std::complex<double>* inner, std::complex<double>* shell);

// sum_i w_i a_i conj(b_i)
std::complex<double> weighted_inner(const double* w, const std::complex<double>* a, const std::complex<double>* b,
                                    std::size_t n);

namespace detail {
void series_terms_scalar(const ElementArrays& g, std::complex<double> z, double inner_r2, double outer_r2, int seeds,
                         std::complex<double>* inner, std::complex<double>* shell);
void series_terms_avx2(const ElementArrays& g, std::complex<double> z, double inner_r2, double outer_r2, int seeds,
                       std::complex<double>* inner, std::complex<double>* shell);
std::complex<double> weighted_inner_scalar(const double* w, const std::complex<double>* a,
                                           const std::complex<double>* b, std::size_t n);
std::complex<double> weighted_inner_avx2(const double* w, const std::complex<double>* a,
                                         const std::complex<double>* b, std::size_t n);
}  // namespace detail

constexpr int kMaxSeeds = 10;

}  // namespace wpgeo::kernels
