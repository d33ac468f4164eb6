// AVX2+FMA variants of the flat-array kernels. This is the only translation
// unit compiled with vector ISA flags; callers reach it through ops() so the
// binary still runs on CPUs without AVX2.

#include <immintrin.h>

#include <cmath>
#include <cstdint>

#include "sagp/simd/ops.hpp"

namespace sagp::simd {
namespace {

// ---- vector exp/log, Cephes polynomials (~1 ulp over the ranges used) ----

inline __m256d polevl4(__m256d x, double c0, double c1, double c2, double c3) {
    __m256d y = _mm256_set1_pd(c0);
    y = _mm256_fmadd_pd(y, x, _mm256_set1_pd(c1));
    y = _mm256_fmadd_pd(y, x, _mm256_set1_pd(c2));
    return _mm256_fmadd_pd(y, x, _mm256_set1_pd(c3));
}

inline __m256d exp_pd(__m256d x) {
    const __m256d log2e = _mm256_set1_pd(1.4426950408889634073599);
    const __m256d c1 = _mm256_set1_pd(6.93145751953125e-1);
    const __m256d c2 = _mm256_set1_pd(1.42860682030941723212e-6);

    const __m256d underflow = _mm256_set1_pd(-708.396418532264106224);
    const __m256d x_clamped = _mm256_max_pd(x, underflow);

    __m256d n = _mm256_round_pd(_mm256_mul_pd(x_clamped, log2e),
                                _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, c1, x_clamped);
    r = _mm256_fnmadd_pd(n, c2, r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_set1_pd(1.26177193074810590878e-4);
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300e-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910e-1));
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_set1_pd(3.00198505138664455042e-6);
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192e-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766e-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000005e0));
    const __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    __m256d result = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

    // scale by 2^n through the exponent field; n is in [-1022, 1025] here
    const __m128i n32 = _mm256_cvtpd_epi32(n);
    const __m256i n64 = _mm256_cvtepi32_epi64(n32);
    const __m256i scale_bits =
        _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    result = _mm256_mul_pd(result, _mm256_castsi256_pd(scale_bits));

    // arguments at or below the underflow cutoff flush to zero
    const __m256d tiny = _mm256_cmp_pd(x, underflow, _CMP_LE_OQ);
    return _mm256_andnot_pd(tiny, result);
}

// valid for positive normal doubles only (callers guarantee var > 0)
inline __m256d log_pd(__m256d x) {
    const __m256i bits = _mm256_castpd_si256(x);
    const __m256i exp_raw = _mm256_srli_epi64(bits, 52);
    // exponent as int32 in the low 4 lanes: pick dwords 0,2,4,6
    const __m256i pick = _mm256_setr_epi32(0, 2, 4, 6, 0, 0, 0, 0);
    const __m128i e32 = _mm256_castsi256_si128(_mm256_permutevar8x32_epi32(exp_raw, pick));
    __m256d e = _mm256_cvtepi32_pd(_mm_sub_epi32(e32, _mm_set1_epi32(1022)));

    // mantissa remapped into [0.5, 1)
    const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
    const __m256i half_exp = _mm256_set1_epi64x(0x3FE0000000000000LL);
    __m256d m = _mm256_castsi256_pd(
        _mm256_or_si256(_mm256_and_si256(bits, mant_mask), half_exp));

    const __m256d sqrth = _mm256_set1_pd(0.70710678118654752440);
    const __m256d below = _mm256_cmp_pd(m, sqrth, _CMP_LT_OQ);
    e = _mm256_sub_pd(e, _mm256_and_pd(below, _mm256_set1_pd(1.0)));
    const __m256d m2 = _mm256_add_pd(m, _mm256_and_pd(below, m));  // 2m where below
    const __m256d xf = _mm256_sub_pd(m2, _mm256_set1_pd(1.0));

    __m256d p = _mm256_set1_pd(1.01875663804580931796e-4);
    p = _mm256_fmadd_pd(p, xf, _mm256_set1_pd(4.97494994976747001425e-1));
    p = _mm256_fmadd_pd(p, xf, _mm256_set1_pd(4.70579119878881725854e0));
    p = _mm256_fmadd_pd(p, xf, _mm256_set1_pd(1.44989225341610930846e1));
    p = _mm256_fmadd_pd(p, xf, _mm256_set1_pd(1.79368678507819816313e1));
    p = _mm256_fmadd_pd(p, xf, _mm256_set1_pd(7.70838733755885391666e0));
    __m256d q = _mm256_add_pd(xf, _mm256_set1_pd(1.12873587189167450590e1));
    q = _mm256_fmadd_pd(q, xf, _mm256_set1_pd(4.52279145837532221105e1));
    q = _mm256_fmadd_pd(q, xf, _mm256_set1_pd(8.29875266912776603211e1));
    q = _mm256_fmadd_pd(q, xf, _mm256_set1_pd(7.11544750618563894466e1));
    q = _mm256_fmadd_pd(q, xf, _mm256_set1_pd(2.31251620126765340583e1));

    const __m256d z = _mm256_mul_pd(xf, xf);
    __m256d y = _mm256_mul_pd(xf, _mm256_div_pd(_mm256_mul_pd(z, p), q));
    y = _mm256_fnmadd_pd(e, _mm256_set1_pd(2.121944400546905827679e-4), y);
    y = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), z, y);
    __m256d out = _mm256_add_pd(xf, y);
    return _mm256_fmadd_pd(e, _mm256_set1_pd(0.693359375), out);
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// ---- kernels ----

void sq_dist_avx2(const double* centers, std::size_t m, std::size_t stride,
                  const double* x, std::size_t d, double* dst) {
    std::size_t k = 0;
    for (; k + 4 <= m; k += 4) {
        __m256d acc = _mm256_setzero_pd();
        for (std::size_t l = 0; l < d; ++l) {
            const __m256d c = _mm256_loadu_pd(centers + l * stride + k);
            const __m256d diff = _mm256_sub_pd(c, _mm256_set1_pd(x[l]));
            acc = _mm256_fmadd_pd(diff, diff, acc);
        }
        _mm256_storeu_pd(dst + k, acc);
    }
    for (; k < m; ++k) {
        double acc = 0.0;
        for (std::size_t l = 0; l < d; ++l) {
            const double diff = centers[l * stride + k] - x[l];
            acc += diff * diff;
        }
        dst[k] = acc;
    }
}

void exp_scale_avx2(const double* sq, std::size_t m, double ln_rho, double inv_eta,
                    double* dst) {
    const __m256d lr = _mm256_set1_pd(ln_rho);
    const __m256d ie = _mm256_set1_pd(inv_eta);
    std::size_t k = 0;
    for (; k + 4 <= m; k += 4) {
        const __m256d arg = _mm256_mul_pd(lr, _mm256_loadu_pd(sq + k));
        _mm256_storeu_pd(dst + k, _mm256_mul_pd(ie, exp_pd(arg)));
    }
    for (; k < m; ++k) dst[k] = inv_eta * std::exp(ln_rho * sq[k]);
}

double loglik_avx2(const double* resid, const double* var, std::size_t n) {
    constexpr double ln_two_pi = 1.8378770664093454836;
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d v = _mm256_loadu_pd(var + i);
        const __m256d r = _mm256_loadu_pd(resid + i);
        __m256d term = _mm256_add_pd(log_pd(v), _mm256_set1_pd(ln_two_pi));
        term = _mm256_add_pd(term, _mm256_div_pd(_mm256_mul_pd(r, r), v));
        acc = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), term, acc);
    }
    double total = hsum(acc);
    for (; i < n; ++i)
        total += -0.5 * (ln_two_pi + std::log(var[i])) - 0.5 * resid[i] * resid[i] / var[i];
    return total;
}

}  // namespace

const Ops* ops_avx2() {
    static const Ops table{"avx2", &sq_dist_avx2, &exp_scale_avx2, &loglik_avx2};
    return &table;
}

}  // namespace sagp::simd
