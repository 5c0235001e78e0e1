#pragma once

// Information quantities and bounds for networks with multiplicative weight
// noise. All values are in nats. Information in the weights is defined modulo
// an additive constant C coming from the improper log-uniform prior; only
// differences and optimisation against it are meaningful.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ibw/rng.hpp"
#include "ibw/tensor.hpp"
#include "ibw/vnn.hpp"

namespace ibw::info {

struct MIEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n_samples = 0;
  double discriminator_loss = 0.0;  // only set by the density-ratio estimator
  std::size_t clipped = 0;          // discriminator outputs clipped into [1e-6, 1-1e-6]
};

// -1/2 sum_i log(alpha_i), given log(alpha_i). Modulo C.
double info_in_weights(std::span<const double> log_alphas);
double info_in_weights(const vnn::VariationalDense& layer);

// exp(-info / dim)
double effective_alpha(double info_nats, std::size_t dim);

// B(alpha) = 1/2 log(1 + 1/(e^alpha - 1)) = -1/2 log(1 - e^-alpha).
// Positive, strictly decreasing, -> inf as alpha -> 0+, -> 0 as alpha -> inf.
// Throws DomainError for alpha <= 0.
double bound_fn(double alpha);

// The closed form written in the statement of the one-layer bound,
// 1/2 log(1 - e^-alpha) = -B(alpha). Kept for reports only.
double bound_fn_stated(double alpha);

struct LayerBound {
  double alpha = 0.0;        // effective alpha of the layer
  double lower = 0.0;        // B(alpha), per output component
  double upper = 0.0;        // B(alpha) + 1
  std::size_t dim_z = 0;
  double total_lower = 0.0;  // dim_z * lower
  double total_upper = 0.0;  // dim_z * upper
};

// Uniform bound on (I(x;z) + TC(z)) / dim(z) for one layer, with c = 1.
LayerBound single_layer_bound(const vnn::VariationalDense& layer, std::size_t dim_x);
LayerBound single_layer_bound_at(double alpha, std::size_t dim_z);

// min over stochastic dense layers k of dim(z_k) * (B(alpha_k) + 1).
// Throws DomainError if the network has no stochastic layer.
double multilayer_bound(const vnn::NetworkState& net);

// KL(N(mu0, v0) || N(mu1, v1)). Throws DomainError for non-positive variances.
double gaussian_kl(double mu0, double v0, double mu1, double v1);

// Closed-form I(z;x) + TC(z) for z = (eps * W) x with per-row log-normal
// noise parameter alphas[i], using sample Cov(x), E[x^2] and the sample
// average for E_x. w is [dim_z x dim_x], x_samples is [n x dim_x].
MIEstimate duality_closed_form(const Tensor& w, std::span<const double> alphas, const Tensor& x_samples);

// Independent Monte Carlo route to the same quantity: draws explicit
// per-weight log-normal noise to estimate the marginal moments of each z_i,
// then averages KL(q(z_i|x) || q(z_i)) over the x samples.
MIEstimate mc_mi_gaussian(const Tensor& w, std::span<const double> alphas, const Tensor& x_samples, Rng& rng);

// H_ii ~ [g_i(w + delta e_i) - g_i(w - delta e_i)] / (2 delta) from the
// analytic gradient g.
using GradientFn = std::function<std::vector<double>(std::span<const double>)>;
std::vector<double> hessian_diagonal(const GradientFn& grad, std::span<const double> params, double delta);

// alpha_i = beta / (2 w_i^2 H_ii); nullopt where w_i == 0 or H_ii <= 0.
std::vector<std::optional<double>> optimal_alpha_quadratic(std::span<const double> w,
                                                           std::span<const double> h_diag, double beta);

// Jensen upper bound on Ĩ(w;D) at the optimal posterior:
//   1/2 K [log ||w||^2 + log tr(H) - log(K^2 beta / 2)]
// The nuclear norm of the diagonal surrogate is its trace.
double flat_minima_bound(std::span<const double> w, std::span<const double> h_diag, double beta);

// Expected test loss bound
//   (ce_total + lambda * l_max * kl) / (N (1 - 1/(2 lambda))).
double pac_bayes_bound(double ce_total_nats, double kl_nats, double n, double lambda, double l_max);

// KL(q(w|D) || log-uniform) per weight for w = eps * w_mean, eps ~ N(1, alpha),
// under the same constant convention as info_in_weights:
//   -1/2 log(alpha) + E[log|eps|].
// Served from a 1024-knot interpolation table; alpha must lie in (0, 1].
double kl_gaussmult_numeric(double alpha);
// Same quantity by direct adaptive quadrature.
double kl_gaussmult_quadrature(double alpha);

struct InfoReport {
  std::vector<double> layer_info_nats;  // stochastic dense layers only
  std::vector<double> layer_effective_alpha;
  double total_info_nats = 0.0;
  double info_nats_per_sample = 0.0;
};

InfoReport info_report(const vnn::NetworkState& net, std::size_t n_samples);

struct BoundReport {
  std::vector<LayerBound> layers;
  double multilayer_bound_nats = 0.0;
  std::optional<double> flat_minima_bound_nats;
  std::optional<double> pac_bayes_bound;
};

BoundReport bound_report(const vnn::NetworkState& net);

}  // namespace ibw::info
