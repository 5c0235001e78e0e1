#include <cmath>

#include "ibw/errors.hpp"
#include "ibw/info.hpp"

namespace ibw::info {

std::vector<double> hessian_diagonal(const GradientFn& grad, std::span<const double> params, double delta) {
  if (!(delta > 0.0)) throw DomainError("hessian_diagonal needs delta > 0");
  std::vector<double> w(params.begin(), params.end());
  std::vector<double> h(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double saved = w[i];
    w[i] = saved + delta;
    const double plus = grad(w).at(i);
    w[i] = saved - delta;
    const double minus = grad(w).at(i);
    w[i] = saved;
    h[i] = (plus - minus) / (2.0 * delta);
  }
  return h;
}

std::vector<std::optional<double>> optimal_alpha_quadratic(std::span<const double> w,
                                                           std::span<const double> h_diag, double beta) {
  if (w.size() != h_diag.size()) throw DimensionError("weights and curvatures differ in length");
  if (!(beta > 0.0)) throw DomainError("optimal alpha needs beta > 0");
  std::vector<std::optional<double>> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i)
    if (w[i] != 0.0 && h_diag[i] > 0.0) out[i] = beta / (2.0 * w[i] * w[i] * h_diag[i]);
  return out;
}

double flat_minima_bound(std::span<const double> w, std::span<const double> h_diag, double beta) {
  if (w.size() != h_diag.size()) throw DimensionError("weights and curvatures differ in length");
  if (w.empty()) throw DomainError("flat minima bound needs at least one weight");
  if (!(beta > 0.0)) throw DomainError("flat minima bound needs beta > 0");
  double w2 = 0.0, trace = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    w2 += w[i] * w[i];
    trace += h_diag[i];
  }
  if (!(w2 > 0.0)) throw DomainError("flat minima bound needs a nonzero weight vector");
  if (!(trace > 0.0)) throw DomainError("flat minima bound needs positive total curvature");
  const double k = static_cast<double>(w.size());
  return 0.5 * k * (std::log(w2) + std::log(trace) - std::log(k * k * beta / 2.0));
}

}  // namespace ibw::info
