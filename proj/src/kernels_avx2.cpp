#if defined(CHAC_HAVE_AVX2)

#include <immintrin.h>

#include <cstddef>

// Compiled with -mavx2 -mfma; only reached through the dispatch table after
// a runtime CPU check.
namespace chac::simd {

namespace {

inline double reduce_add_pd(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

}  // namespace

double l2_sq_avx2(const double* a, const double* b, std::size_t n) {
    const std::size_t n8 = n & ~std::size_t{7};
    __m256d sum0 = _mm256_setzero_pd();
    __m256d sum1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i < n8; i += 8) {
        __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        __m256d d1 = _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
        sum0 = _mm256_fmadd_pd(d0, d0, sum0);
        sum1 = _mm256_fmadd_pd(d1, d1, sum1);
    }
    const std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        sum0 = _mm256_fmadd_pd(d, d, sum0);
    }
    double acc = reduce_add_pd(_mm256_add_pd(sum0, sum1));
    for (; i < n; ++i) {
        const double diff = a[i] - b[i];
        acc += diff * diff;
    }
    return acc;
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
    const std::size_t n8 = n & ~std::size_t{7};
    __m256d sum0 = _mm256_setzero_pd();
    __m256d sum1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i < n8; i += 8) {
        sum0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), sum0);
        sum1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), sum1);
    }
    const std::size_t n4 = n & ~std::size_t{3};
    for (; i < n4; i += 4) {
        sum0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), sum0);
    }
    double acc = reduce_add_pd(_mm256_add_pd(sum0, sum1));
    for (; i < n; ++i) {
        acc += a[i] * b[i];
    }
    return acc;
}

}  // namespace chac::simd

#endif  // CHAC_HAVE_AVX2
