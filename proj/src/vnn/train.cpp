#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "ibw/errors.hpp"
#include "ibw/vnn.hpp"

namespace ibw::vnn {

namespace {
// Stream id of the training generator derived from TrainConfig::seed.
constexpr std::uint64_t kTrainStream = 0x7472616Eu;

void check_dataset(const NetworkState& net, const DatasetSplit& data) {
  if (data.size() == 0) throw InputError("dataset is empty");
  validate(data);
  if (data.features.rank() != 2 || data.features.dim(1) != net.input_dim())
    throw DimensionError("dataset features " + shape_string(data.features.shape()) +
                         " do not match network input width " + std::to_string(net.input_dim()));
}
}  // namespace

OptState init_opt_state(const NetworkState& net) {
  OptState s;
  for (auto d : net.dense_layers())
    s.velocity.push_back({Tensor(d->w_mean.shape()), Tensor(d->bias.shape()), Tensor(d->log_alpha.shape())});
  return s;
}

void sgd_step(NetworkState& net, const Gradients& grads, OptState& state, double lr, double momentum) {
  auto dense = net.dense_layers();
  if (grads.size() != dense.size() || state.velocity.size() != dense.size())
    throw DimensionError("gradient / optimizer state does not match the network");
  auto update = [&](Tensor& p, const Tensor& g, Tensor& v) {
    if (g.shape() != p.shape() || v.shape() != p.shape())
      throw DimensionError("gradient shape " + shape_string(g.shape()) + " vs parameter " +
                           shape_string(p.shape()));
    for (std::size_t i = 0; i < p.size(); ++i) {
      v[i] = momentum * v[i] - lr * g[i];
      p[i] += v[i];
    }
  };
  for (std::size_t k = 0; k < dense.size(); ++k) {
    auto& layer = *dense[k];
    update(layer.w_mean, grads[k].w_mean, state.velocity[k].w_mean);
    update(layer.bias, grads[k].bias, state.velocity[k].bias);
    if (!layer.noise.stochastic()) continue;
    update(layer.log_alpha, grads[k].log_alpha, state.velocity[k].log_alpha);
    for (auto& la : layer.log_alpha.data()) la = std::clamp(la, kMinLogAlpha, kMaxLogAlpha);
  }
}

double LrSchedule::at_epoch(std::size_t epoch) const {
  double lr = value;
  for (auto e : decay_epochs)
    if (epoch >= e) lr *= decay_factor;
  return lr;
}

void validate(const TrainConfig& c) {
  if (!(c.beta >= 0.0)) throw ConfigError("beta must be >= 0");
  if (c.batch_size == 0) throw ConfigError("batch_size must be >= 1");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (!(c.lr.value >= 0.0)) throw ConfigError("learning rate must be >= 0");
  if (c.init_log_alpha < kMinLogAlpha || c.init_log_alpha > kMaxLogAlpha)
    throw ConfigError("init_log_alpha must lie in [-12, 0]");
}

TrainResult train(NetworkState net, const DatasetSplit& data, const TrainConfig& config,
                  const EpochCallback& on_epoch) {
  validate(config);
  validate(net);
  check_dataset(net, data);

  using clock = std::chrono::steady_clock;
  Rng rng = Rng::derived(config.seed, kTrainStream);
  OptState opt = init_opt_state(net);
  const std::size_t n = data.size();
  const double n_total = static_cast<double>(n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  std::vector<int> batch_labels;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = clock::now();
    const double lr = config.lr.at_epoch(epoch);
    rng.shuffle(std::span<std::size_t>(order));

    double ce_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t end = std::min(n, start + config.batch_size);
      std::span<const std::size_t> rows(order.data() + start, end - start);
      Tensor x = data.features.gather_rows(rows);
      batch_labels.clear();
      for (auto r : rows) batch_labels.push_back(data.labels[r]);

      LossResult res = loss_and_grad(net, x, batch_labels, config.beta, n_total, rng);
      if (!std::isfinite(res.total_loss))
        throw TrainingDiverged("non-finite loss at epoch " + std::to_string(epoch));
      ce_sum += res.mean_ce * static_cast<double>(rows.size());
      correct += res.correct;

      for (auto& g : res.grads) {
        for (auto& v : g.w_mean.data()) v /= n_total;
        for (auto& v : g.bias.data()) v /= n_total;
        for (auto& v : g.log_alpha.data()) v *= config.log_alpha_lr_factor;
      }
      sgd_step(net, res.grads, opt, lr, config.momentum);
    }

    for (auto d : net.dense_layers())
      if (!d->w_mean.all_finite() || !d->bias.all_finite())
        throw TrainingDiverged("non-finite weights after epoch " + std::to_string(epoch));

    EpochRecord rec;
    rec.epoch = epoch;
    rec.ce_nats_per_sample = ce_sum / n_total;
    rec.train_acc = static_cast<double>(correct) / n_total;
    rec.info_nats = network_info_nats(net);
    rec.info_nats_per_sample = rec.info_nats / n_total;
    rec.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    result.history.epochs.push_back(rec);
    if (on_epoch) on_epoch(net, rec);

    const std::size_t w = config.plateau_window;
    const auto& h = result.history.epochs;
    if (w > 0 && h.size() >= 2 * w) {
      double recent = 0.0, before = 0.0;
      for (std::size_t i = 0; i < w; ++i) {
        recent += h[h.size() - 1 - i].ce_nats_per_sample;
        before += h[h.size() - 1 - w - i].ce_nats_per_sample;
      }
      if (std::fabs(recent - before) / static_cast<double>(w) < config.plateau_tol) {
        result.history.converged = true;
        break;
      }
    }
  }
  result.net = std::move(net);
  return result;
}

namespace {

template <typename LogitsFn>
EvalResult evaluate_with(const NetworkState& net, const DatasetSplit& data, LogitsFn&& probs_of) {
  check_dataset(net, data);
  constexpr std::size_t chunk = 1024;
  const std::size_t n = data.size();
  std::size_t correct = 0;
  double ce = 0.0;
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t end = std::min(n, start + chunk);
    Tensor p = probs_of(data.features.slice_rows(start, end));
    for (std::size_t r = 0; r < end - start; ++r) {
      auto pr = p.row(r);
      const auto label = static_cast<std::size_t>(data.labels[start + r]);
      const auto best = static_cast<std::size_t>(std::max_element(pr.begin(), pr.end()) - pr.begin());
      if (best == label) ++correct;
      ce -= std::log(std::max(pr[label], 1e-300));
    }
  }
  return {static_cast<double>(correct) / static_cast<double>(n), ce / static_cast<double>(n)};
}

}  // namespace

EvalResult evaluate(const NetworkState& net, const DatasetSplit& data) {
  return evaluate_with(net, data, [&](const Tensor& x) { return softmax(forward_deterministic(net, x)); });
}

EvalResult evaluate_stochastic(const NetworkState& net, const DatasetSplit& data, std::size_t k, Rng& rng) {
  if (k == 0) throw InputError("stochastic evaluation needs k >= 1");
  return evaluate_with(net, data, [&](const Tensor& x) {
    Tensor avg(Tensor::Shape{x.dim(0), net.output_dim()});
    for (std::size_t s = 0; s < k; ++s) {
      Tensor p = softmax(forward_stochastic(net, x, rng).logits());
      for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += p[i];
    }
    for (auto& v : avg.data()) v /= static_cast<double>(k);
    return avg;
  });
}

}  // namespace ibw::vnn
