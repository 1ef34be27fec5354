#include "support.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace posred::testing {

double h2_squared_by_quadrature(const StateSpaceSystem& sys) {
  auto integrand = [&](double theta) {
    const double c = std::cos(theta);
    if (c <= 0.0) return 0.0;
    const double w = std::tan(theta);
    return frequency_response(sys, w).squaredNorm() / (c * c);
  };
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      integrand, 0.0, std::numbers::pi / 2, 25, 1e-12, &error);
  return integral / std::numbers::pi;
}

double hinf_by_grid(const StateSpaceSystem& sys, int points, double lo, double hi) {
  double best = sigma_max(sys, 0.0);
  const double span = std::log10(hi / lo);
  for (int k = 0; k < points; ++k) {
    const double w = lo * std::pow(10.0, span * k / (points - 1));
    best = std::max(best, sigma_max(sys, w));
  }
  return best;
}

}  // namespace posred::testing
