// Compiled with -mavx2 -mfma; only reached after a CPUID check in dispatch.cpp.

#include "blindpoly/kernels.hpp"

#include <immintrin.h>

#include <cmath>

namespace blindpoly::kernels::detail {
namespace {

constexpr std::size_t kLanes = 4;

double horizontal_sum(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, swapped));
}

void multiply(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
    }
    for (; i < n; ++i) out[i] = a[i] * b[i];
}

void multiply_accumulate(double* acc, const double* a, const double* b, std::size_t n) {
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d r = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i),
                                    _mm256_loadu_pd(acc + i));
        _mm256_storeu_pd(acc + i, r);
    }
    for (; i < n; ++i) acc[i] = std::fma(a[i], b[i], acc[i]);
}

void axpby(double alpha, const double* a, double beta, const double* b, double* out,
           std::size_t n) {
    const __m256d va = _mm256_set1_pd(alpha);
    const __m256d vb = _mm256_set1_pd(beta);
    std::size_t i = 0;
    for (; i + kLanes <= n; i += kLanes) {
        __m256d pa = _mm256_mul_pd(va, _mm256_loadu_pd(a + i));
        __m256d pb = _mm256_mul_pd(vb, _mm256_loadu_pd(b + i));
        _mm256_storeu_pd(out + i, _mm256_add_pd(pa, pb));
    }
    for (; i < n; ++i) {
        const double pa = alpha * a[i];
        const double pb = beta * b[i];
        out[i] = pa + pb;
    }
}

double dot(const double* a, const double* b, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
        s1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + kLanes), _mm256_loadu_pd(b + i + kLanes), s1);
    }
    for (; i + kLanes <= n; i += kLanes) {
        s0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), s0);
    }
    double s = horizontal_sum(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) s = std::fma(a[i], b[i], s);
    return s;
}

double sum_squares(const double* a, std::size_t n) {
    __m256d s0 = _mm256_setzero_pd();
    __m256d s1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 2 * kLanes <= n; i += 2 * kLanes) {
        __m256d x0 = _mm256_loadu_pd(a + i);
        __m256d x1 = _mm256_loadu_pd(a + i + kLanes);
        s0 = _mm256_fmadd_pd(x0, x0, s0);
        s1 = _mm256_fmadd_pd(x1, x1, s1);
    }
    for (; i + kLanes <= n; i += kLanes) {
        __m256d x0 = _mm256_loadu_pd(a + i);
        s0 = _mm256_fmadd_pd(x0, x0, s0);
    }
    double s = horizontal_sum(_mm256_add_pd(s0, s1));
    for (; i < n; ++i) s = std::fma(a[i], a[i], s);
    return s;
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable t{multiply, multiply_accumulate, axpby, dot, sum_squares};
    return t;
}

}  // namespace blindpoly::kernels::detail
