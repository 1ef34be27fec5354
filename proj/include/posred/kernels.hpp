#pragma once

// Data-parallel inner loops with a portable scalar reference and an AVX2/FMA
// variant chosen at runtime from the CPU feature flags. The two variants
// agree up to floating-point reassociation in reductions.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace posred::kernels {

enum class Backend { kScalar, kAvx2 };

std::string_view backend_name(Backend backend);

// True if the backend was compiled in and the running CPU supports it.
bool backend_available(Backend backend);

// Backend currently used by the dispatching entry points.
Backend active_backend();

// Pins dispatch to `backend` (must be available) or, with nullopt, restores
// automatic selection. Intended for equivalence tests and benchmarks.
void force_backend(std::optional<Backend> backend);

// y += A x with A stored column-major (rows x cols).
void gemv_add(std::span<const double> a, std::size_t rows, std::size_t cols,
              std::span<const double> x, std::span<double> y);

// y += alpha x
void axpy(double alpha, std::span<const double> x, std::span<double> y);

// Elementwise augmented-Lagrangian penalty over one matrix block.
//
// For every entry, with g = -v:
//   u_nn = max(0, lambda * inv_rho + g)   (inequality part)
//   u_z  = gamma * inv_rho + g            (equality part)
//   u    = nn * u_nn + z * u_z
// and the return value is sum(nn * u_nn^2 + z * u_z^2). Mask entries are 0/1.
struct PenaltyBlock {
  std::span<const double> values;
  std::span<const double> lambda;
  std::span<const double> gamma;
  std::span<const double> nonneg_mask;
  std::span<const double> zero_mask;
};

double masked_penalty(const PenaltyBlock& block, double inv_rho, std::span<double> u);

namespace detail {

struct KernelTable {
  void (*gemv_add)(const double* a, std::size_t rows, std::size_t cols, const double* x,
                   double* y);
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  double (*masked_penalty)(const double* v, const double* lambda, const double* gamma,
                           const double* nn, const double* z, double inv_rho, double* u,
                           std::size_t n);
};

const KernelTable& scalar_table();
// nullptr when the AVX2 translation unit was not compiled in.
const KernelTable* avx2_table();

}  // namespace detail
}  // namespace posred::kernels
