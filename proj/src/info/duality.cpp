#include <cmath>

#include "ibw/errors.hpp"
#include "ibw/info.hpp"
#include "ibw/kernels.hpp"

namespace ibw::info {

namespace kp = ibw::kernels::parallel;
using kernels::Trans;

namespace {

struct Layout {
  std::size_t n;
  std::size_t dim_x;
  std::size_t dim_z;
};

Layout check(const Tensor& w, std::span<const double> alphas, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 2 || w.dim(1) != x.dim(1))
    throw DimensionError("weights " + shape_string(w.shape()) + " and samples " + shape_string(x.shape()) +
                         " do not line up");
  if (alphas.size() != w.dim(0)) throw DimensionError("need one alpha per weight row");
  if (x.dim(0) < 2) throw DomainError("need at least 2 input samples");
  for (double a : alphas)
    if (!(a > 0.0)) throw DomainError("alpha must be positive");
  return {x.dim(0), x.dim(1), w.dim(0)};
}

// [n x dim_z] of sum_j w_ij^2 x_bj^2
Tensor weighted_square_norms(const Tensor& w, const Tensor& x) {
  Tensor w2 = map(UnaryOp::Square, w);
  Tensor x2 = map(UnaryOp::Square, x);
  Tensor out({x.dim(0), w.dim(0)});
  kp::gemm({.trans_b = Trans::Yes, .m = x.dim(0), .n = w.dim(0), .k = w.dim(1)}, x2.data(), w2.data(),
           out.data());
  return out;
}

Tensor projections(const Tensor& w, const Tensor& x) {
  Tensor out({x.dim(0), w.dim(0)});
  kp::gemm({.trans_b = Trans::Yes, .m = x.dim(0), .n = w.dim(0), .k = w.dim(1)}, x.data(), w.data(),
           out.data());
  return out;
}

MIEstimate summarize(const std::vector<double>& per_sample) {
  const auto n = static_cast<double>(per_sample.size());
  double mean = 0.0;
  for (double v : per_sample) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : per_sample) ss += (v - mean) * (v - mean);
  MIEstimate e;
  e.value = mean;
  e.std_error = std::sqrt(ss / (n - 1.0) / n);
  e.n_samples = per_sample.size();
  return e;
}

}  // namespace

MIEstimate duality_closed_form(const Tensor& w, std::span<const double> alphas, const Tensor& x) {
  const auto [n, dim_x, dim_z] = check(w, alphas, x);

  std::vector<double> ex2(dim_x, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    auto row = x.row(b);
    for (std::size_t j = 0; j < dim_x; ++j) ex2[j] += row[j] * row[j];
  }
  for (auto& v : ex2) v /= static_cast<double>(n);

  const Tensor proj = projections(w, x);
  const Tensor q = weighted_square_norms(w, x);

  std::vector<double> denom(dim_z);
  for (std::size_t i = 0; i < dim_z; ++i) {
    // w_i . Cov(x) w_i as the unbiased sample variance of w_i . x
    double mean = 0.0;
    for (std::size_t b = 0; b < n; ++b) mean += proj(b, i);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t b = 0; b < n; ++b) ss += (proj(b, i) - mean) * (proj(b, i) - mean);
    const double cov_term = ss / static_cast<double>(n - 1);
    double w2ex2 = 0.0;
    for (std::size_t j = 0; j < dim_x; ++j) w2ex2 += w(i, j) * w(i, j) * ex2[j];
    denom[i] = cov_term + std::expm1(alphas[i]) * w2ex2;
  }

  std::vector<double> per_sample(n, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < dim_z; ++i) {
      const double num = std::expm1(alphas[i]) * q(b, i);
      if (!(num > 0.0) || !(denom[i] > 0.0))
        throw DomainError("degenerate input sample: conditional variance is zero");
      per_sample[b] -= 0.5 * std::log(num / denom[i]);
    }
  }
  return summarize(per_sample);
}

MIEstimate mc_mi_gaussian(const Tensor& w, std::span<const double> alphas, const Tensor& x, Rng& rng) {
  const auto [n, dim_x, dim_z] = check(w, alphas, x);

  // Marginal moments of z_i from explicit draws of the multiplicative noise,
  // eps_ij ~ logN(-alpha_i / 2, alpha_i), one fresh matrix per sample.
  std::vector<std::vector<double>> z(dim_z, std::vector<double>(n));
  for (std::size_t b = 0; b < n; ++b) {
    auto xb = x.row(b);
    for (std::size_t i = 0; i < dim_z; ++i) {
      const double sd = std::sqrt(alphas[i]);
      const double loc = -0.5 * alphas[i];
      double acc = 0.0;
      for (std::size_t j = 0; j < dim_x; ++j) acc += std::exp(loc + sd * rng.normal()) * w(i, j) * xb[j];
      z[i][b] = acc;
    }
  }
  std::vector<double> mu1(dim_z), v1(dim_z);
  for (std::size_t i = 0; i < dim_z; ++i) {
    double mean = 0.0;
    for (double v : z[i]) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : z[i]) ss += (v - mean) * (v - mean);
    mu1[i] = mean;
    v1[i] = ss / static_cast<double>(n - 1);
  }

  const Tensor proj = projections(w, x);
  const Tensor q = weighted_square_norms(w, x);
  std::vector<double> per_sample(n, 0.0);
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t i = 0; i < dim_z; ++i) {
      const double v0 = std::expm1(alphas[i]) * q(b, i);
      if (!(v0 > 0.0)) throw DomainError("degenerate input sample: conditional variance is zero");
      per_sample[b] += gaussian_kl(proj(b, i), v0, mu1[i], v1[i]);
    }
  }
  return summarize(per_sample);
}

}  // namespace ibw::info
