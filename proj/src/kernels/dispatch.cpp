#include <atomic>
#include <cassert>
#include <stdexcept>

#include "posred/errors.hpp"
#include "posred/kernels.hpp"

namespace posred::kernels {

#ifndef POSRED_HAVE_AVX2_TU
namespace detail {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace detail
#endif

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect() { return backend_available(Backend::kAvx2) ? Backend::kAvx2 : Backend::kScalar; }

std::atomic<int> g_forced{-1};

const detail::KernelTable& table() {
  static const Backend detected = detect();
  const int forced = g_forced.load(std::memory_order_relaxed);
  const Backend b = forced >= 0 ? static_cast<Backend>(forced) : detected;
  return b == Backend::kAvx2 ? *detail::avx2_table() : detail::scalar_table();
}

}  // namespace

std::string_view backend_name(Backend backend) {
  return backend == Backend::kAvx2 ? "avx2" : "scalar";
}

bool backend_available(Backend backend) {
  if (backend == Backend::kScalar) return true;
  static const bool avx2 = detail::avx2_table() != nullptr && cpu_has_avx2();
  return avx2;
}

Backend active_backend() {
  return &table() == &detail::scalar_table() ? Backend::kScalar : Backend::kAvx2;
}

void force_backend(std::optional<Backend> backend) {
  if (backend && !backend_available(*backend)) {
    throw ValidationError("force_backend: backend not available on this CPU");
  }
  g_forced.store(backend ? static_cast<int>(*backend) : -1);
}

void gemv_add(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<const double> x, std::span<double> y) {
  assert(a.size() >= rows * cols && x.size() >= cols && y.size() >= rows);
  table().gemv_add(a.data(), rows, cols, x.data(), y.data());
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  table().axpy(alpha, x.data(), y.data(), y.size());
}

double masked_penalty(const PenaltyBlock& block, double inv_rho, std::span<double> u) {
  const std::size_t n = block.values.size();
  if (block.lambda.size() != n || block.gamma.size() != n || block.nonneg_mask.size() != n ||
      block.zero_mask.size() != n || u.size() != n) {
    throw ValidationError("masked_penalty: block spans differ in length");
  }
  return table().masked_penalty(block.values.data(), block.lambda.data(), block.gamma.data(),
                                block.nonneg_mask.data(), block.zero_mask.data(), inv_rho,
                                u.data(), n);
}

}  // namespace posred::kernels
