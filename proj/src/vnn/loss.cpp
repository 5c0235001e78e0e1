#include <algorithm>
#include <cmath>

#include "ibw/errors.hpp"
#include "ibw/kernels.hpp"
#include "ibw/vnn.hpp"
#include "internal.hpp"

namespace ibw::vnn {

namespace kp = ibw::kernels::parallel;
using kernels::Trans;

double network_info_nats(const NetworkState& net) {
  double info = 0.0;
  for (auto d : net.dense_layers()) {
    if (!d->noise.stochastic()) continue;
    for (double la : d->log_alpha.data()) info -= 0.5 * la;
  }
  return info;
}

namespace {

// Backward through one dense layer. `upstream` is dL/d(output). Fills grad
// and returns dL/d(input) when want_input_grad is set.
Tensor dense_backward(const VariationalDense& layer, const LayerTrace& t, const Tensor& upstream,
                      DenseGrad& grad, bool want_input_grad) {
  const std::size_t batch = upstream.dim(0);
  const std::size_t in = layer.in_dim();
  const std::size_t out = layer.out_dim();
  const Tensor& x = t.input;

  grad.w_mean = Tensor({out, in});
  grad.bias = Tensor({out});
  grad.log_alpha = Tensor({out, in});
  if (batch == 0) return Tensor({0, in});

  kp::gemm({.trans_a = Trans::Yes, .m = out, .n = in, .k = batch}, upstream.data(), x.data(),
           grad.w_mean.data());
  kp::column_sums(batch, out, upstream.data(), grad.bias.data());

  Tensor dx;
  if (want_input_grad) {
    dx = Tensor({batch, in});
    kp::gemm({.m = batch, .n = in, .k = out}, upstream.data(), layer.w_mean.data(), dx.data());
  }

  if (!layer.noise.stochastic()) return dx;

  // d/d(var) of (mean + sqrt(var) * eps) is eps / (2 sqrt(var)); a zero
  // stddev means every contributing x_i or w_i is zero, and the chain
  // through var vanishes.
  Tensor dvar({batch, out});
  for (std::size_t i = 0; i < dvar.size(); ++i) {
    const double s = t.stddev[i];
    dvar[i] = s > 0.0 ? upstream[i] * t.noise[i] / (2.0 * s) : 0.0;
  }
  Tensor x2 = map(UnaryOp::Square, x);
  Tensor p({out, in});  // sum_b dvar[b, j] * x[b, i]^2
  kp::gemm({.trans_a = Trans::Yes, .m = out, .n = in, .k = batch}, dvar.data(), x2.data(), p.data());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double w = layer.w_mean[i];
    const double la = layer.log_alpha[i];
    grad.w_mean[i] += 2.0 * layer.noise.variance(la) * w * p[i];
    grad.log_alpha[i] = layer.noise.variance_derivative(la) * w * w * p[i];
  }

  if (want_input_grad) {
    Tensor wv = weight_variance(layer);
    Tensor q({batch, in});  // dvar * (Var(eps) w^2)
    kp::gemm({.m = batch, .n = in, .k = out}, dvar.data(), wv.data(), q.data());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += 2.0 * x[i] * q[i];
  }
  return dx;
}

Tensor activation_backward(Activation a, const LayerTrace& t, const Tensor& upstream) {
  Tensor g(upstream.shape());
  switch (a) {
    case Activation::ReLU:
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = t.input[i] > 0.0 ? upstream[i] : 0.0;
      break;
    case Activation::ELU:
      for (std::size_t i = 0; i < g.size(); ++i)
        g[i] = t.input[i] > 0.0 ? upstream[i] : upstream[i] * (t.output[i] + 1.0);
      break;
    case Activation::SoftmaxHead:
      g = upstream;
      break;
  }
  return g;
}

}  // namespace

LossResult loss_and_grad_with_noise(const NetworkState& net, const Tensor& x, std::span<const int> y,
                                    double beta, double n_total, const std::vector<Tensor>& noise) {
  if (x.rank() != 2 || x.dim(0) != y.size())
    throw DimensionError("batch has " + std::to_string(y.size()) + " labels for features " +
                         shape_string(x.shape()));
  const int classes = static_cast<int>(net.output_dim());
  for (int label : y)
    if (label < 0 || label >= classes)
      throw InputError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");

  ForwardTrace trace = forward_with_noise(net, x, noise);
  const Tensor& logits = trace.logits();
  const std::size_t batch = y.size();

  LossResult res;
  Tensor upstream(logits.shape());
  if (batch > 0) {
    Tensor p = softmax(logits);
    double ce = 0.0;
    const double scale = n_total / static_cast<double>(batch);
    for (std::size_t r = 0; r < batch; ++r) {
      auto pr = p.row(r);
      auto lr = logits.row(r);
      const auto label = static_cast<std::size_t>(y[r]);
      // log-sum-exp form keeps tiny probabilities accurate
      const double mx = *std::max_element(lr.begin(), lr.end());
      double z = 0.0;
      for (double v : lr) z += std::exp(v - mx);
      ce += mx + std::log(z) - lr[label];
      if (static_cast<std::size_t>(std::max_element(lr.begin(), lr.end()) - lr.begin()) == label)
        ++res.correct;
      auto ur = upstream.row(r);
      for (std::size_t j = 0; j < pr.size(); ++j) ur[j] = scale * (pr[j] - (j == label ? 1.0 : 0.0));
    }
    res.mean_ce = ce / static_cast<double>(batch);
  }
  res.ce_sum_estimate = n_total * res.mean_ce;
  res.info_nats = network_info_nats(net);
  res.total_loss = res.ce_sum_estimate + beta * res.info_nats;

  const auto dense_idx = net.dense_indices();
  res.grads.resize(dense_idx.size());
  std::size_t dense_pos = dense_idx.size();
  Tensor g = std::move(upstream);
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const auto& l = net.layers[li];
    if (const auto* d = std::get_if<VariationalDense>(&l)) {
      --dense_pos;
      g = dense_backward(*d, trace.layers[li], g, res.grads[dense_pos], dense_pos > 0);
    } else {
      g = activation_backward(std::get<Activation>(l), trace.layers[li], g);
    }
  }

  // beta * (-1/2 sum log alpha): interior slope -beta/2, zero on the clamp.
  std::size_t k = 0;
  for (auto d : net.dense_layers()) {
    if (d->noise.stochastic()) {
      auto& gla = res.grads[k].log_alpha;
      for (std::size_t i = 0; i < gla.size(); ++i) {
        const double la = d->log_alpha[i];
        if (la > kMinLogAlpha && la < kMaxLogAlpha) gla[i] -= 0.5 * beta;
      }
    }
    ++k;
  }
  return res;
}

LossResult loss_and_grad(const NetworkState& net, const Tensor& x, std::span<const int> y, double beta,
                         double n_total, Rng& rng) {
  if (x.rank() != 2) throw DimensionError("batch features must be a matrix");
  return loss_and_grad_with_noise(net, x, y, beta, n_total, draw_noise(net, x.dim(0), rng));
}

}  // namespace ibw::vnn
