#include <algorithm>

#include "posred/kernels.hpp"

namespace posred::kernels::detail {
namespace {

void gemv_add_scalar(const double* a, std::size_t rows, std::size_t cols, const double* x,
                     double* y) {
  for (std::size_t j = 0; j < cols; ++j) {
    const double xj = x[j];
    const double* col = a + j * rows;
    for (std::size_t i = 0; i < rows; ++i) y[i] += col[i] * xj;
  }
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

double masked_penalty_scalar(const double* v, const double* lambda, const double* gamma,
                             const double* nn, const double* z, double inv_rho, double* u,
                             std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double ui = std::max(0.0, lambda[i] * inv_rho - v[i]);
    const double ue = gamma[i] * inv_rho - v[i];
    u[i] = nn[i] * ui + z[i] * ue;
    sum += nn[i] * ui * ui + z[i] * ue * ue;
  }
  return sum;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{gemv_add_scalar, axpy_scalar, masked_penalty_scalar};
  return table;
}

}  // namespace posred::kernels::detail
