#include "hq/simd.hpp"

#include <atomic>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#define HQ_X86 1
#endif

namespace hq::simd {

namespace {
std::atomic<Mode> g_mode{Mode::Auto};
}

void set_mode(Mode m) { g_mode = m; }

bool avx2_available() {
#ifdef HQ_X86
  static const bool ok = __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
  return ok;
#else
  return false;
#endif
}

bool avx2_active() { return g_mode == Mode::Auto && avx2_available(); }

cplx cdot_split_scalar(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n) {
  double re = 0.0, im = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    re += ar[k] * br[k] - ai[k] * bi[k];
    im += ar[k] * bi[k] + ai[k] * br[k];
  }
  return {re, im};
}

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += a[k] * b[k];
  return s;
}

#ifdef HQ_X86

namespace {
__attribute__((target("avx2,fma"))) double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v), hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}
}  // namespace

__attribute__((target("avx2,fma"))) cplx cdot_split_avx2(const double* ar, const double* ai, const double* br,
                                                          const double* bi, std::size_t n) {
  __m256d re = _mm256_setzero_pd(), im = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d a_r = _mm256_loadu_pd(ar + k), a_i = _mm256_loadu_pd(ai + k);
    const __m256d b_r = _mm256_loadu_pd(br + k), b_i = _mm256_loadu_pd(bi + k);
    re = _mm256_fmadd_pd(a_r, b_r, re);
    re = _mm256_fnmadd_pd(a_i, b_i, re);
    im = _mm256_fmadd_pd(a_r, b_i, im);
    im = _mm256_fmadd_pd(a_i, b_r, im);
  }
  cplx tail = cdot_split_scalar(ar + k, ai + k, br + k, bi + k, n - k);
  return {hsum(re) + tail.real(), hsum(im) + tail.imag()};
}

__attribute__((target("avx2,fma"))) double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d s = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) s = _mm256_fmadd_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k), s);
  return hsum(s) + dot_scalar(a + k, b + k, n - k);
}

#else

cplx cdot_split_avx2(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n) {
  return cdot_split_scalar(ar, ai, br, bi, n);
}
double dot_avx2(const double* a, const double* b, std::size_t n) { return dot_scalar(a, b, n); }

#endif

cplx cdot_split(const double* ar, const double* ai, const double* br, const double* bi, std::size_t n) {
  return avx2_active() ? cdot_split_avx2(ar, ai, br, bi, n) : cdot_split_scalar(ar, ai, br, bi, n);
}

double dot(const double* a, const double* b, std::size_t n) {
  return avx2_active() ? dot_avx2(a, b, n) : dot_scalar(a, b, n);
}

}  // namespace hq::simd
