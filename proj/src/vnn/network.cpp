#include <cmath>
#include <stdexcept>

#include "ibw/errors.hpp"
#include "ibw/vnn.hpp"

namespace ibw::vnn {

double NoiseModel::variance(double log_alpha) const {
  switch (kind) {
    case NoiseKind::LogNormal: return std::expm1(std::exp(log_alpha));
    case NoiseKind::GaussianMultiplicative: return std::exp(log_alpha);
    case NoiseKind::None: return 0.0;
  }
  return 0.0;
}

double NoiseModel::variance_derivative(double log_alpha) const {
  switch (kind) {
    case NoiseKind::LogNormal: {
      const double alpha = std::exp(log_alpha);
      return std::exp(alpha) * alpha;
    }
    case NoiseKind::GaussianMultiplicative: return std::exp(log_alpha);
    case NoiseKind::None: return 0.0;
  }
  return 0.0;
}

std::string_view NoiseModel::name() const {
  switch (kind) {
    case NoiseKind::LogNormal: return "log-normal";
    case NoiseKind::GaussianMultiplicative: return "gaussian-multiplicative";
    case NoiseKind::None: return "none";
  }
  return "none";
}

NoiseModel NoiseModel::parse(std::string_view name) {
  if (name == "log-normal" || name == "lognormal") return {NoiseKind::LogNormal};
  if (name == "gaussian-multiplicative" || name == "gaussian") return {NoiseKind::GaussianMultiplicative};
  if (name == "none") return {NoiseKind::None};
  throw ConfigError("unknown noise model '" + std::string(name) + "'");
}

std::string_view activation_name(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::ELU: return "elu";
    case Activation::SoftmaxHead: return "softmax-head";
  }
  return "relu";
}

Activation parse_activation(std::string_view name) {
  if (name == "relu") return Activation::ReLU;
  if (name == "elu") return Activation::ELU;
  if (name == "softmax-head") return Activation::SoftmaxHead;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

std::size_t NetworkState::input_dim() const {
  for (const auto& l : layers)
    if (auto d = std::get_if<VariationalDense>(&l)) return d->in_dim();
  return 0;
}

std::size_t NetworkState::output_dim() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it)
    if (auto d = std::get_if<VariationalDense>(&*it)) return d->out_dim();
  return 0;
}

std::vector<std::size_t> NetworkState::dense_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < layers.size(); ++i)
    if (std::holds_alternative<VariationalDense>(layers[i])) out.push_back(i);
  return out;
}

std::vector<const VariationalDense*> NetworkState::dense_layers() const {
  std::vector<const VariationalDense*> out;
  for (const auto& l : layers)
    if (auto d = std::get_if<VariationalDense>(&l)) out.push_back(d);
  return out;
}

std::vector<VariationalDense*> NetworkState::dense_layers() {
  std::vector<VariationalDense*> out;
  for (auto& l : layers)
    if (auto d = std::get_if<VariationalDense>(&l)) out.push_back(d);
  return out;
}

std::size_t NetworkState::num_weights() const {
  std::size_t n = 0;
  for (auto d : dense_layers()) n += d->num_weights();
  return n;
}

void validate(const NetworkState& net) {
  if (net.layers.empty()) throw DimensionError("network has no layers");
  std::size_t width = 0;
  bool seen_dense = false;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const auto& l = net.layers[i];
    if (auto d = std::get_if<VariationalDense>(&l)) {
      if (d->w_mean.rank() != 2 || d->bias.shape() != Tensor::Shape{d->out_dim()} ||
          d->log_alpha.shape() != d->w_mean.shape())
        throw DimensionError("dense layer " + std::to_string(i) + " has inconsistent parameter shapes");
      if (seen_dense && d->in_dim() != width)
        throw DimensionError("layer " + std::to_string(i) + " expects " + std::to_string(d->in_dim()) +
                             " inputs but previous layer produces " + std::to_string(width));
      width = d->out_dim();
      seen_dense = true;
    } else if (std::get<Activation>(l) == Activation::SoftmaxHead && i + 1 != net.layers.size()) {
      throw DimensionError("softmax head must be the last layer");
    }
  }
  if (!seen_dense) throw DimensionError("network has no dense layer");
  const auto* last = std::get_if<Activation>(&net.layers.back());
  if (!last || *last != Activation::SoftmaxHead)
    throw DimensionError("network must end with a softmax head");
}

NetworkSpec NetworkSpec::mlp(const std::vector<std::size_t>& sizes, Activation hidden, NoiseModel noise,
                             double init_log_alpha) {
  if (sizes.size() < 2) throw DimensionError("mlp needs at least input and output sizes");
  NetworkSpec spec;
  spec.noise = noise;
  spec.init_log_alpha = init_log_alpha;
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    spec.layers.emplace_back(DenseSpec{sizes[i], sizes[i + 1], std::nullopt});
    spec.layers.emplace_back(i + 2 < sizes.size() ? hidden : Activation::SoftmaxHead);
  }
  return spec;
}

NetworkState init_network(const NetworkSpec& spec, Rng& rng) {
  if (spec.init_log_alpha < kMinLogAlpha || spec.init_log_alpha > kMaxLogAlpha)
    throw ConfigError("init_log_alpha must lie in [-12, 0]");
  NetworkState net;
  std::size_t width = 0;
  bool seen_dense = false;
  for (const auto& ls : spec.layers) {
    if (const auto* d = std::get_if<DenseSpec>(&ls)) {
      if (d->in == 0 || d->out == 0) throw DimensionError("dense layer with zero extent");
      if (seen_dense && d->in != width)
        throw DimensionError("layer spec " + std::to_string(d->in) + "->" + std::to_string(d->out) +
                             " does not chain after width " + std::to_string(width));
      VariationalDense layer;
      layer.noise = d->noise.value_or(spec.noise);
      layer.w_mean = sample_standard_normal(rng, {d->out, d->in});
      const double scale = std::sqrt(2.0 / static_cast<double>(d->in));
      for (auto& v : layer.w_mean.data()) v *= scale;
      layer.bias = Tensor({d->out});
      layer.log_alpha = Tensor({d->out, d->in}, spec.init_log_alpha);
      width = d->out;
      seen_dense = true;
      net.layers.emplace_back(std::move(layer));
    } else {
      net.layers.emplace_back(std::get<Activation>(ls));
    }
  }
  validate(net);
  return net;
}

NetworkSpec spec_of(const NetworkState& net) {
  NetworkSpec spec;
  bool first = true;
  for (const auto& l : net.layers) {
    if (const auto* d = std::get_if<VariationalDense>(&l)) {
      if (first) spec.noise = d->noise;
      first = false;
      spec.layers.emplace_back(DenseSpec{d->in_dim(), d->out_dim(), d->noise});
    } else {
      spec.layers.emplace_back(std::get<Activation>(l));
    }
  }
  return spec;
}

}  // namespace ibw::vnn
