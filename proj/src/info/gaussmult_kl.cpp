#include <algorithm>
#include <array>
#include <cmath>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ibw/errors.hpp"
#include "ibw/info.hpp"

namespace ibw::info {

namespace {

constexpr std::size_t kKnots = 1024;
constexpr double kTail = 40.0;  // phi(40) underflows

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw DomainError("Gaussian multiplicative KL needs alpha in (0, 1]");
}

// E[log|1 + sigma t|], t ~ N(0, 1); log singularity at t = -1/sigma.
// The singular point is made an endpoint of both pieces; near it the
// distance |t - t0| comes from the integrator's complement argument so the
// logarithm never sees a rounded-to-zero difference.
double expected_log_abs(double alpha) {
  if (alpha == 0.0) return 0.0;
  const double sigma = std::sqrt(alpha);
  const double inv_sqrt_2pi = 0.3989422804014327;
  const double t0 = -1.0 / sigma;
  auto density = [&](double t) { return inv_sqrt_2pi * std::exp(-0.5 * t * t); };
  boost::math::quadrature::tanh_sinh<double> integrator;
  const double tol = 1e-13;
  if (t0 <= -kTail) {
    // split at the mode; one piece over the whole range can stop early
    auto f = [&](double t) { return std::log1p(sigma * t) * density(t); };
    return integrator.integrate(f, -kTail, 0.0, tol) + integrator.integrate(f, 0.0, kTail, tol);
  }
  // 1 + sigma t = sigma (t - t0)
  const double mid_left = 0.5 * (t0 - kTail), mid_right = 0.5 * t0;
  auto left = [&](double t, double tc) {
    const double d = t > mid_left ? std::fabs(tc) : t0 - t;
    return std::log(sigma * d) * density(t);
  };
  auto right = [&](double t, double tc) {
    const double d = t < mid_right ? std::fabs(tc) : t - t0;
    return std::log(sigma * d) * density(t);
  };
  auto tail = [&](double t) { return std::log1p(sigma * t) * density(t); };
  return integrator.integrate(left, -kTail, t0, tol) + integrator.integrate(right, t0, 0.0, tol) +
         integrator.integrate(tail, 0.0, kTail, tol);
}

// Knot k sits at alpha = k / (kKnots - 1); values are E[log|eps|], which is
// smooth on [0, 1] (the -1/2 log alpha part is added analytically).
class Table {
 public:
  Table() {
    for (std::size_t k = 0; k < kKnots; ++k) values_[k] = expected_log_abs(static_cast<double>(k) * step());
  }

  double operator()(double alpha) const {
    // 4-point Lagrange interpolation on the surrounding knots
    const double pos = alpha / step();
    auto i = static_cast<std::ptrdiff_t>(std::floor(pos)) - 1;
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(kKnots) - 4);
    const double t = pos - static_cast<double>(i);
    double out = 0.0;
    for (int a = 0; a < 4; ++a) {
      double l = 1.0;
      for (int b = 0; b < 4; ++b)
        if (b != a) l *= (t - b) / static_cast<double>(a - b);
      out += l * values_[static_cast<std::size_t>(i + a)];
    }
    return out;
  }

 private:
  static constexpr double step() { return 1.0 / static_cast<double>(kKnots - 1); }
  std::array<double, kKnots> values_{};
};

}  // namespace

double kl_gaussmult_quadrature(double alpha) {
  check_alpha(alpha);
  return -0.5 * std::log(alpha) + expected_log_abs(alpha);
}

double kl_gaussmult_numeric(double alpha) {
  check_alpha(alpha);
  static const Table table;
  return -0.5 * std::log(alpha) + table(alpha);
}

}  // namespace ibw::info
