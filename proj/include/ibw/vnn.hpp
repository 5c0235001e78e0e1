#pragma once

// Feed-forward networks whose dense weights carry multiplicative noise
// w = eps * w_mean. Training draws pre-activations directly from their
// Gaussian approximation (local reparameterization) and backpropagates
// through that sampling step exactly.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ibw/dataset.hpp"
#include "ibw/rng.hpp"
#include "ibw/tensor.hpp"

namespace ibw::vnn {

inline constexpr double kMinLogAlpha = -12.0;
inline constexpr double kMaxLogAlpha = 0.0;

enum class NoiseKind { LogNormal, GaussianMultiplicative, None };

// Mean-1 multiplicative noise with log-variance parameter log(alpha).
//   LogNormal:              eps ~ logN(-alpha/2, alpha), Var eps = exp(alpha) - 1
//   GaussianMultiplicative: eps ~ N(1, alpha),           Var eps = alpha
//   None:                   eps = 1
struct NoiseModel {
  NoiseKind kind = NoiseKind::LogNormal;

  // Var(eps) as a function of log(alpha).
  double variance(double log_alpha) const;
  // d Var(eps) / d log(alpha).
  double variance_derivative(double log_alpha) const;
  bool stochastic() const { return kind != NoiseKind::None; }

  std::string_view name() const;
  static NoiseModel parse(std::string_view name);
  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

enum class Activation { ReLU, ELU, SoftmaxHead };
std::string_view activation_name(Activation a);
Activation parse_activation(std::string_view name);

struct VariationalDense {
  Tensor w_mean;     // [out x in]
  Tensor bias;       // [out]
  Tensor log_alpha;  // [out x in], clamped to [kMinLogAlpha, kMaxLogAlpha]
  NoiseModel noise;

  std::size_t in_dim() const { return w_mean.dim(1); }
  std::size_t out_dim() const { return w_mean.dim(0); }
  std::size_t num_weights() const { return w_mean.size(); }
};

using Layer = std::variant<VariationalDense, Activation>;

struct NetworkState {
  std::vector<Layer> layers;

  std::size_t input_dim() const;
  std::size_t output_dim() const;
  // Indices into `layers` of the dense layers, in order.
  std::vector<std::size_t> dense_indices() const;
  std::vector<const VariationalDense*> dense_layers() const;
  std::vector<VariationalDense*> dense_layers();
  std::size_t num_weights() const;
};

// Throws DimensionError unless dense layers chain and the last layer is the
// only softmax head.
void validate(const NetworkState& net);

struct DenseSpec {
  std::size_t in = 0;
  std::size_t out = 0;
  // Overrides NetworkSpec::noise for this layer (None makes it deterministic).
  std::optional<NoiseModel> noise;
};

using LayerSpec = std::variant<DenseSpec, Activation>;

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  NoiseModel noise;
  double init_log_alpha = -6.0;

  // sizes {784, 128, 10} -> dense 784x128, hidden, dense 128x10, head.
  static NetworkSpec mlp(const std::vector<std::size_t>& sizes, Activation hidden = Activation::ReLU,
                         NoiseModel noise = {}, double init_log_alpha = -6.0);
};

// w_mean ~ N(0, 2 / fan_in), bias = 0, log_alpha = init_log_alpha.
NetworkState init_network(const NetworkSpec& spec, Rng& rng);

// Spec that rebuilds the same architecture (init_log_alpha is not recoverable
// and is left at its default).
NetworkSpec spec_of(const NetworkState& net);

// ---- forward ----

struct LayerTrace {
  Tensor input;
  Tensor output;
  Tensor stddev;  // dense layers only: sqrt of the pre-activation variance
  Tensor noise;   // dense layers only: standard-normal draw behind `output`
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  const Tensor& logits() const { return layers.back().output; }
};

// One standard-normal [batch x out] tensor per dense layer, in dense order.
// Deterministic layers get an empty tensor.
std::vector<Tensor> draw_noise(const NetworkState& net, std::size_t batch, Rng& rng);

// Pre-activation of dense unit j for row b is
//   mean + stddev * noise,  mean = w_mean x + bias,
//   stddev^2 = sum_i Var(eps_ji) w_mean_ji^2 x_i^2.
ForwardTrace forward_with_noise(const NetworkState& net, const Tensor& x,
                                const std::vector<Tensor>& noise);
ForwardTrace forward_stochastic(const NetworkState& net, const Tensor& x, Rng& rng);

// eps replaced by its mean 1.
Tensor forward_deterministic(const NetworkState& net, const Tensor& x);
// Output of every layer under the deterministic pass.
std::vector<Tensor> forward_deterministic_all(const NetworkState& net, const Tensor& x);

// Softmax probabilities of a logits batch.
Tensor softmax(const Tensor& logits);

// ---- loss ----

struct DenseGrad {
  Tensor w_mean;
  Tensor bias;
  Tensor log_alpha;
};

// One entry per dense layer, in dense order.
using Gradients = std::vector<DenseGrad>;

struct LossResult {
  double mean_ce = 0.0;          // nats per sample on the batch
  double ce_sum_estimate = 0.0;  // n_total * mean_ce
  double info_nats = 0.0;        // -1/2 sum log alpha over stochastic layers (mod C)
  double total_loss = 0.0;       // ce_sum_estimate + beta * info_nats
  std::size_t correct = 0;       // argmax hits on the sampled logits
  Gradients grads;               // d total_loss / d parameters
};

// Information term -1/2 sum log(alpha) over the stochastic dense layers.
double network_info_nats(const NetworkState& net);

LossResult loss_and_grad_with_noise(const NetworkState& net, const Tensor& x, std::span<const int> y,
                                    double beta, double n_total, const std::vector<Tensor>& noise);
LossResult loss_and_grad(const NetworkState& net, const Tensor& x, std::span<const int> y,
                         double beta, double n_total, Rng& rng);

// ---- optimisation ----

struct OptState {
  Gradients velocity;
};

OptState init_opt_state(const NetworkState& net);

// v <- momentum * v - lr * g;  p <- p + v;  log_alpha re-clamped.
// Updates net and state in place.
void sgd_step(NetworkState& net, const Gradients& grads, OptState& state, double lr, double momentum);

struct LrSchedule {
  double value = 0.02;
  std::vector<std::size_t> decay_epochs{40};  // 0-based epochs at which lr is multiplied
  double decay_factor = 0.1;
  double at_epoch(std::size_t epoch) const;
};

struct TrainConfig {
  double beta = 0.0;
  std::size_t epochs = 60;
  std::size_t batch_size = 128;
  LrSchedule lr;
  double momentum = 0.9;
  std::uint64_t seed = 0;
  double init_log_alpha = -6.0;
  NoiseModel noise;
  // Weights and biases step on the per-sample objective (total / N); the
  // log-variances step on the per-dataset objective, scaled by this factor.
  double log_alpha_lr_factor = 1.0;
  // Stop once the epoch cross-entropy has plateaued: means of the last two
  // windows of this many epochs differ by less than plateau_tol. 0 disables.
  std::size_t plateau_window = 0;
  double plateau_tol = 1e-3;
};

// Throws ConfigError on beta < 0, batch_size == 0, momentum outside [0, 1).
void validate(const TrainConfig& config);

struct EpochRecord {
  std::size_t epoch = 0;
  double ce_nats_per_sample = 0.0;
  double train_acc = 0.0;  // sampled forward passes seen during the epoch
  double info_nats = 0.0;
  double info_nats_per_sample = 0.0;
  double seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  bool converged = false;  // plateau criterion met before config.epochs
};

struct TrainResult {
  NetworkState net;
  TrainHistory history;
};

using EpochCallback = std::function<void(const NetworkState&, const EpochRecord&)>;

// Deterministic in (config.seed, data). Throws InputError on an empty
// dataset and TrainingDiverged if the loss turns non-finite.
TrainResult train(NetworkState net, const DatasetSplit& data, const TrainConfig& config,
                  const EpochCallback& on_epoch = {});

struct EvalResult {
  double accuracy = 0.0;
  double mean_ce = 0.0;
};

EvalResult evaluate(const NetworkState& net, const DatasetSplit& data);
// Averages k sampled softmax outputs per row before the argmax.
EvalResult evaluate_stochastic(const NetworkState& net, const DatasetSplit& data, std::size_t k, Rng& rng);

}  // namespace ibw::vnn
