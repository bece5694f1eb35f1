#include <immintrin.h>

#include "wpgeo/kernels.hpp"

namespace wpgeo::kernels::detail {

namespace {

double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void series_terms_avx2(const ElementArrays& g, std::complex<double> z, double inner_r2, double outer_r2, int seeds,
                       std::complex<double>* inner, std::complex<double>* shell) {
    const __m256d zr = _mm256_set1_pd(z.real());
    const __m256d zi = _mm256_set1_pd(z.imag());
    const __m256d rin = _mm256_set1_pd(inner_r2);
    const __m256d rout = _mm256_set1_pd(outer_r2);
    const __m256d one = _mm256_set1_pd(1.0);
    __m256d in_re[kMaxSeeds], in_im[kMaxSeeds], sh_re[kMaxSeeds], sh_im[kMaxSeeds];
    for (int m = 0; m < seeds; ++m) {
        in_re[m] = in_im[m] = sh_re[m] = sh_im[m] = _mm256_setzero_pd();
    }
    const std::size_t n4 = g.count / 4 * 4;
    for (std::size_t k = 0; k < n4; k += 4) {
        const __m256d ar = _mm256_loadu_pd(g.ar + k);
        const __m256d ai = _mm256_loadu_pd(g.ai + k);
        const __m256d br = _mm256_loadu_pd(g.br + k);
        const __m256d bi = _mm256_loadu_pd(g.bi + k);
        const __m256d dr = _mm256_fmadd_pd(br, zr, _mm256_fmadd_pd(bi, zi, ar));
        const __m256d di = _mm256_sub_pd(_mm256_fmsub_pd(br, zi, _mm256_mul_pd(bi, zr)), ai);
        const __m256d nr = _mm256_add_pd(_mm256_fmsub_pd(ar, zr, _mm256_mul_pd(ai, zi)), br);
        const __m256d ni = _mm256_add_pd(_mm256_fmadd_pd(ar, zi, _mm256_mul_pd(ai, zr)), bi);
        const __m256d inv = _mm256_div_pd(one, _mm256_fmadd_pd(dr, dr, _mm256_mul_pd(di, di)));
        const __m256d er = _mm256_mul_pd(dr, inv);
        const __m256d ei = _mm256_sub_pd(_mm256_setzero_pd(), _mm256_mul_pd(di, inv));
        const __m256d wr = _mm256_fmsub_pd(nr, er, _mm256_mul_pd(ni, ei));
        const __m256d wi = _mm256_fmadd_pd(nr, ei, _mm256_mul_pd(ni, er));
        const __m256d r2 = _mm256_fmadd_pd(wr, wr, _mm256_mul_pd(wi, wi));
        const __m256d keep = _mm256_cmp_pd(r2, rout, _CMP_LE_OQ);
        if (_mm256_movemask_pd(keep) == 0) {
            continue;
        }
        const __m256d is_in = _mm256_cmp_pd(r2, rin, _CMP_LE_OQ);
        const __m256d is_sh = _mm256_andnot_pd(is_in, keep);
        const __m256d sr = _mm256_fmsub_pd(er, er, _mm256_mul_pd(ei, ei));
        const __m256d si = _mm256_mul_pd(_mm256_add_pd(er, er), ei);
        __m256d tr = _mm256_fmsub_pd(sr, sr, _mm256_mul_pd(si, si));
        __m256d ti = _mm256_mul_pd(_mm256_add_pd(sr, sr), si);
        for (int m = 0; m < seeds; ++m) {
            in_re[m] = _mm256_add_pd(in_re[m], _mm256_and_pd(tr, is_in));
            in_im[m] = _mm256_add_pd(in_im[m], _mm256_and_pd(ti, is_in));
            sh_re[m] = _mm256_add_pd(sh_re[m], _mm256_and_pd(tr, is_sh));
            sh_im[m] = _mm256_add_pd(sh_im[m], _mm256_and_pd(ti, is_sh));
            const __m256d nr2 = _mm256_fmsub_pd(tr, wr, _mm256_mul_pd(ti, wi));
            ti = _mm256_fmadd_pd(tr, wi, _mm256_mul_pd(ti, wr));
            tr = nr2;
        }
    }
    for (int m = 0; m < seeds; ++m) {
        inner[m] += std::complex<double>(hsum(in_re[m]), hsum(in_im[m]));
        shell[m] += std::complex<double>(hsum(sh_re[m]), hsum(sh_im[m]));
    }
    if (n4 < g.count) {
        const ElementArrays tail{g.ar + n4, g.ai + n4, g.br + n4, g.bi + n4, g.count - n4};
        series_terms_scalar(tail, z, inner_r2, outer_r2, seeds, inner, shell);
    }
}

std::complex<double> weighted_inner_avx2(const double* w, const std::complex<double>* a,
                                         const std::complex<double>* b, std::size_t n) {
    const auto* pa = reinterpret_cast<const double*>(a);
    const auto* pb = reinterpret_cast<const double*>(b);
    __m256d re = _mm256_setzero_pd();
    __m256d im = _mm256_setzero_pd();
    const std::size_t n2 = n / 2 * 2;
    for (std::size_t i = 0; i < n2; i += 2) {
        // [ar0 ai0 ar1 ai1], [br0 bi0 br1 bi1]
        const __m256d va = _mm256_loadu_pd(pa + 2 * i);
        const __m256d vb = _mm256_loadu_pd(pb + 2 * i);
        const __m256d vw = _mm256_set_pd(w[i + 1], w[i + 1], w[i], w[i]);
        const __m256d wb = _mm256_mul_pd(vw, vb);
        // re: ar br + ai bi ; im: ai br - ar bi
        re = _mm256_fmadd_pd(va, wb, re);
        const __m256d swapped = _mm256_permute_pd(wb, 0b0101);  // [bi br bi br]
        im = _mm256_fmadd_pd(va, swapped, im);                  // [ar bi, ai br, ...]
    }
    alignas(32) double r[4];
    alignas(32) double s[4];
    _mm256_store_pd(r, re);
    _mm256_store_pd(s, im);
    std::complex<double> out(r[0] + r[1] + r[2] + r[3], (s[1] - s[0]) + (s[3] - s[2]));
    if (n2 < n) {
        out += weighted_inner_scalar(w + n2, a + n2, b + n2, n - n2);
    }
    return out;
}

}  // namespace wpgeo::kernels::detail
