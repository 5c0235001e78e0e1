#include <algorithm>
#include <cmath>
#include <limits>

#include "ibw/errors.hpp"
#include "ibw/info.hpp"

namespace ibw::info {

double info_in_weights(std::span<const double> log_alphas) {
  double s = 0.0;
  for (double la : log_alphas) s += la;
  return -0.5 * s;
}

double info_in_weights(const vnn::VariationalDense& layer) { return info_in_weights(layer.log_alpha.data()); }

double effective_alpha(double info_nats, std::size_t dim) {
  if (dim == 0) throw DomainError("effective_alpha needs dim >= 1");
  return std::exp(-info_nats / static_cast<double>(dim));
}

double bound_fn(double alpha) {
  if (!(alpha > 0.0)) throw DomainError("bound function needs alpha > 0");
  // log1p keeps the large-alpha tail accurate (and positive)
  if (alpha > 0.6931471805599453) return -0.5 * std::log1p(-std::exp(-alpha));
  return -0.5 * std::log(-std::expm1(-alpha));
}

double bound_fn_stated(double alpha) { return -bound_fn(alpha); }

LayerBound single_layer_bound_at(double alpha, std::size_t dim_z) {
  LayerBound b;
  b.alpha = alpha;
  b.lower = bound_fn(alpha);
  b.upper = b.lower + 1.0;
  b.dim_z = dim_z;
  b.total_lower = static_cast<double>(dim_z) * b.lower;
  b.total_upper = static_cast<double>(dim_z) * b.upper;
  return b;
}

LayerBound single_layer_bound(const vnn::VariationalDense& layer, std::size_t dim_x) {
  if (dim_x == 0) throw DomainError("single_layer_bound needs dim_x >= 1");
  const double alpha = effective_alpha(info_in_weights(layer), layer.num_weights());
  return single_layer_bound_at(alpha, layer.out_dim());
}

double multilayer_bound(const vnn::NetworkState& net) {
  double best = std::numeric_limits<double>::infinity();
  bool any = false;
  for (auto d : net.dense_layers()) {
    if (!d->noise.stochastic()) continue;
    any = true;
    best = std::min(best, single_layer_bound(*d, d->in_dim()).total_upper);
  }
  if (!any) throw DomainError("multilayer bound needs at least one stochastic layer");
  return best;
}

double gaussian_kl(double mu0, double v0, double mu1, double v1) {
  if (!(v0 > 0.0) || !(v1 > 0.0)) throw DomainError("gaussian_kl needs positive variances");
  const double d = mu0 - mu1;
  return 0.5 * (v0 / v1 + d * d / v1 - 1.0 + std::log(v1 / v0));
}

double pac_bayes_bound(double ce_total_nats, double kl_nats, double n, double lambda, double l_max) {
  if (!(lambda > 0.5)) throw DomainError("PAC-Bayes bound needs lambda > 1/2");
  if (!(n >= 1.0)) throw DomainError("PAC-Bayes bound needs N >= 1");
  if (!(l_max > 0.0)) throw DomainError("PAC-Bayes bound needs L_max > 0");
  return (ce_total_nats + lambda * l_max * kl_nats) / (n * (1.0 - 1.0 / (2.0 * lambda)));
}

InfoReport info_report(const vnn::NetworkState& net, std::size_t n_samples) {
  InfoReport r;
  for (auto d : net.dense_layers()) {
    if (!d->noise.stochastic()) continue;
    const double i = info_in_weights(*d);
    r.layer_info_nats.push_back(i);
    r.layer_effective_alpha.push_back(effective_alpha(i, d->num_weights()));
    r.total_info_nats += i;
  }
  r.info_nats_per_sample = n_samples ? r.total_info_nats / static_cast<double>(n_samples) : 0.0;
  return r;
}

BoundReport bound_report(const vnn::NetworkState& net) {
  BoundReport r;
  for (auto d : net.dense_layers())
    if (d->noise.stochastic()) r.layers.push_back(single_layer_bound(*d, d->in_dim()));
  r.multilayer_bound_nats = multilayer_bound(net);
  return r;
}

}  // namespace ibw::info
