#include "wpgeo/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

namespace wpgeo::kernels {

namespace {

Backend detect() {
    const char* env = std::getenv("WPGEO_SIMD");
    if (env != nullptr && std::strcmp(env, "scalar") == 0) {
        return Backend::Scalar;
    }
    return avx2_available() ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& selected() {
    static std::atomic<Backend> b{detect()};
    return b;
}

Backend current() { return selected().load(std::memory_order_relaxed); }

}  // namespace

bool avx2_available() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend active_backend() { return current(); }

void set_backend(Backend b) { selected() = (b == Backend::Avx2 && !avx2_available()) ? Backend::Scalar : b; }

const char* backend_name(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

void series_terms(const ElementArrays& g, std::complex<double> z, double inner_r2, double outer_r2, int seeds,
                  std::complex<double>* inner, std::complex<double>* shell) {
    if (current() == Backend::Avx2) {
        detail::series_terms_avx2(g, z, inner_r2, outer_r2, seeds, inner, shell);
    } else {
        detail::series_terms_scalar(g, z, inner_r2, outer_r2, seeds, inner, shell);
    }
}

std::complex<double> weighted_inner(const double* w, const std::complex<double>* a, const std::complex<double>* b,
                                    std::size_t n) {
    if (current() == Backend::Avx2) {
        return detail::weighted_inner_avx2(w, a, b, n);
    }
    return detail::weighted_inner_scalar(w, a, b, n);
}

namespace detail {

void series_terms_scalar(const ElementArrays& g, std::complex<double> z, double inner_r2, double outer_r2, int seeds,
                         std::complex<double>* inner, std::complex<double>* shell) {
    const double zr = z.real();
    const double zi = z.imag();
    for (std::size_t k = 0; k < g.count; ++k) {
        const double ar = g.ar[k], ai = g.ai[k], br = g.br[k], bi = g.bi[k];
        const double dr = br * zr + bi * zi + ar;
        const double di = br * zi - bi * zr - ai;
        const double nr = ar * zr - ai * zi + br;
        const double ni = ar * zi + ai * zr + bi;
        const double inv = 1.0 / (dr * dr + di * di);
        // 1 / den
        const double er = dr * inv;
        const double ei = -di * inv;
        const double wr = nr * er - ni * ei;
        const double wi = nr * ei + ni * er;
        const double r2 = wr * wr + wi * wi;
        if (r2 > outer_r2) {
            continue;
        }
        std::complex<double>* acc = r2 <= inner_r2 ? inner : shell;
        // g'(z)^2 = den^{-4}
        const double sr = er * er - ei * ei;
        const double si = 2.0 * er * ei;
        double tr = sr * sr - si * si;
        double ti = 2.0 * sr * si;
        for (int m = 0; m < seeds; ++m) {
            acc[m] += std::complex<double>(tr, ti);
            const double nr2 = tr * wr - ti * wi;
            ti = tr * wi + ti * wr;
            tr = nr2;
        }
    }
}

std::complex<double> weighted_inner_scalar(const double* w, const std::complex<double>* a,
                                           const std::complex<double>* b, std::size_t n) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ar = a[i].real(), ai = a[i].imag(), br = b[i].real(), bi = b[i].imag();
        re += w[i] * (ar * br + ai * bi);
        im += w[i] * (ai * br - ar * bi);
    }
    return {re, im};
}

}  // namespace detail

}  // namespace wpgeo::kernels
