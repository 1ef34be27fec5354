#include <immintrin.h>

#include <algorithm>

#include "posred/kernels.hpp"

namespace posred::kernels::detail {
namespace {

double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256d y0 = _mm256_loadu_pd(y + i);
    __m256d y1 = _mm256_loadu_pd(y + i + 4);
    y0 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), y0);
    y1 = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i + 4), y1);
    _mm256_storeu_pd(y + i, y0);
    _mm256_storeu_pd(y + i + 4, y1);
  }
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_add_avx2(const double* a, std::size_t rows, std::size_t cols, const double* x,
                   double* y) {
  for (std::size_t j = 0; j < cols; ++j) axpy_avx2(x[j], a + j * rows, y, rows);
}

double masked_penalty_avx2(const double* v, const double* lambda, const double* gamma,
                           const double* nn, const double* z, double inv_rho, double* u,
                           std::size_t n) {
  const __m256d vinv = _mm256_set1_pd(inv_rho);
  const __m256d zero = _mm256_setzero_pd();
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d vv = _mm256_loadu_pd(v + i);
    const __m256d ui = _mm256_max_pd(zero, _mm256_fmsub_pd(_mm256_loadu_pd(lambda + i), vinv, vv));
    const __m256d ue = _mm256_fmsub_pd(_mm256_loadu_pd(gamma + i), vinv, vv);
    const __m256d mn = _mm256_loadu_pd(nn + i);
    const __m256d mz = _mm256_loadu_pd(z + i);
    const __m256d un = _mm256_mul_pd(mn, ui);
    const __m256d uz = _mm256_mul_pd(mz, ue);
    _mm256_storeu_pd(u + i, _mm256_add_pd(un, uz));
    acc = _mm256_fmadd_pd(un, ui, acc);
    acc = _mm256_fmadd_pd(uz, ue, acc);
  }
  double sum = hsum(acc);
  for (; i < n; ++i) {
    const double ui = std::max(0.0, lambda[i] * inv_rho - v[i]);
    const double ue = gamma[i] * inv_rho - v[i];
    u[i] = nn[i] * ui + z[i] * ue;
    sum += nn[i] * ui * ui + z[i] * ue * ue;
  }
  return sum;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{gemv_add_avx2, axpy_avx2, masked_penalty_avx2};
  return &table;
}

}  // namespace posred::kernels::detail
