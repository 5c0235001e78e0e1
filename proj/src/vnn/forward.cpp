#include <algorithm>
#include <cmath>
#include <limits>

#include "ibw/errors.hpp"
#include "ibw/kernels.hpp"
#include "ibw/vnn.hpp"
#include "internal.hpp"

namespace ibw::vnn {

namespace kp = ibw::kernels::parallel;
using kernels::GemmArgs;
using kernels::Trans;

namespace {

void check_input(const NetworkState& net, const Tensor& x) {
  if (x.rank() != 2 || x.dim(1) != net.input_dim())
    throw DimensionError("input batch " + shape_string(x.shape()) + " does not match network input width " +
                         std::to_string(net.input_dim()));
}

// x W^T + b
Tensor affine(const VariationalDense& layer, const Tensor& x) {
  const std::size_t batch = x.dim(0);
  Tensor out({batch, layer.out_dim()});
  kp::gemm({.trans_b = Trans::Yes, .m = batch, .n = layer.out_dim(), .k = layer.in_dim()}, x.data(),
           layer.w_mean.data(), out.data());
  const auto b = layer.bias.data();
  for (std::size_t r = 0; r < batch; ++r) {
    auto row = out.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  }
  return out;
}

Tensor apply_activation(Activation a, const Tensor& in) {
  Tensor out(in.shape());
  switch (a) {
    case Activation::ReLU:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case Activation::ELU:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > 0.0 ? in[i] : std::expm1(in[i]);
      break;
    case Activation::SoftmaxHead:
      out = in;
      break;
  }
  return out;
}

}  // namespace

// Var(eps) * w_mean^2, the per-weight variance multiplier of x^2.
Tensor weight_variance(const VariationalDense& layer) {
  Tensor out(layer.w_mean.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double w = layer.w_mean[i];
    out[i] = layer.noise.variance(layer.log_alpha[i]) * w * w;
  }
  return out;
}

std::vector<Tensor> draw_noise(const NetworkState& net, std::size_t batch, Rng& rng) {
  std::vector<Tensor> noise;
  for (auto d : net.dense_layers()) {
    if (d->noise.stochastic())
      noise.push_back(sample_standard_normal(rng, {batch, d->out_dim()}));
    else
      noise.emplace_back();
  }
  return noise;
}

ForwardTrace forward_with_noise(const NetworkState& net, const Tensor& x, const std::vector<Tensor>& noise) {
  check_input(net, x);
  const std::size_t batch = x.dim(0);
  ForwardTrace trace;
  trace.layers.reserve(net.layers.size());
  Tensor h = x;
  std::size_t dense_pos = 0;
  for (const auto& l : net.layers) {
    LayerTrace t;
    t.input = h;
    if (const auto* d = std::get_if<VariationalDense>(&l)) {
      Tensor z = affine(*d, h);
      if (d->noise.stochastic()) {
        if (dense_pos >= noise.size() || noise[dense_pos].shape() != Tensor::Shape{batch, d->out_dim()})
          throw DimensionError("noise tensor for dense layer " + std::to_string(dense_pos) +
                               " must be [batch x out]");
        Tensor x2 = map(UnaryOp::Square, h);
        Tensor wv = weight_variance(*d);
        Tensor var({batch, d->out_dim()});
        kp::gemm({.trans_b = Trans::Yes, .m = batch, .n = d->out_dim(), .k = d->in_dim()}, x2.data(),
                 wv.data(), var.data());
        t.stddev = Tensor(var.shape());
        const auto& eps = noise[dense_pos];
        for (std::size_t i = 0; i < var.size(); ++i) {
          const double s = std::sqrt(std::max(var[i], 0.0));
          t.stddev[i] = s;
          z[i] += s * eps[i];
        }
        t.noise = eps;
      }
      ++dense_pos;
      h = std::move(z);
    } else {
      h = apply_activation(std::get<Activation>(l), h);
    }
    t.output = h;
    trace.layers.push_back(std::move(t));
  }
  return trace;
}

ForwardTrace forward_stochastic(const NetworkState& net, const Tensor& x, Rng& rng) {
  check_input(net, x);
  return forward_with_noise(net, x, draw_noise(net, x.dim(0), rng));
}

std::vector<Tensor> forward_deterministic_all(const NetworkState& net, const Tensor& x) {
  check_input(net, x);
  std::vector<Tensor> outs;
  outs.reserve(net.layers.size());
  Tensor h = x;
  for (const auto& l : net.layers) {
    if (const auto* d = std::get_if<VariationalDense>(&l))
      h = affine(*d, h);
    else
      h = apply_activation(std::get<Activation>(l), h);
    outs.push_back(h);
  }
  return outs;
}

Tensor forward_deterministic(const NetworkState& net, const Tensor& x) {
  check_input(net, x);
  Tensor h = x;
  for (const auto& l : net.layers) {
    if (const auto* d = std::get_if<VariationalDense>(&l))
      h = affine(*d, h);
    else
      h = apply_activation(std::get<Activation>(l), h);
  }
  return h;
}

Tensor softmax(const Tensor& logits) {
  Tensor p(logits.shape());
  const std::size_t rows = logits.rank() == 2 ? logits.dim(0) : 0;
  for (std::size_t r = 0; r < rows; ++r) {
    auto in = logits.row(r);
    auto out = p.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double z = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) z += (out[j] = std::exp(in[j] - mx));
    for (auto& v : out) v /= z;
  }
  return p;
}

}  // namespace ibw::vnn
