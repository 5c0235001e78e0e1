#include <cmath>

#include "ibw/errors.hpp"
#include "ibw/nuisance.hpp"

namespace ibw::nuisance {

namespace {
void check_rho(double rho) {
  if (!(std::fabs(rho) < 1.0)) throw DomainError("correlation must satisfy |rho| < 1");
}
}  // namespace

PairSamples synthetic_correlated_gaussian(double rho, std::size_t n, Rng& rng) {
  check_rho(rho);
  PairSamples out{Tensor({n, 1}), Tensor({n, 1})};
  const double c = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.normal();
    const double b = rng.normal();
    out.z[i] = a;
    out.n[i] = rho * a + c * b;
  }
  return out;
}

double true_gaussian_mi(double rho) {
  check_rho(rho);
  return -0.5 * std::log1p(-rho * rho);
}

}  // namespace ibw::nuisance
