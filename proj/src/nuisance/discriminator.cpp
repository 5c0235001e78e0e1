#include <algorithm>
#include <cmath>
#include <numeric>

#include "ibw/errors.hpp"
#include "ibw/nuisance.hpp"

namespace ibw::nuisance {

namespace {

constexpr double kClip = 1e-6;

void check_pairs(const PairSamples& s, const char* what) {
  if (s.z.rank() != 2 || s.n.rank() != 2) throw DimensionError(std::string(what) + ": z and n must be matrices");
  if (s.z.dim(0) != s.n.dim(0)) throw DimensionError(std::string(what) + ": z and n row counts differ");
  if (s.z.dim(0) == 0) throw InputError(std::string(what) + ": no samples");
}

Tensor concat(const PairSamples& s) {
  const std::size_t rows = s.size(), dz = s.z.dim(1), dn = s.n.dim(1);
  Tensor out({rows, dz + dn});
  for (std::size_t r = 0; r < rows; ++r) {
    auto o = out.row(r);
    const auto z = s.z.row(r);
    const auto n = s.n.row(r);
    std::copy(z.begin(), z.end(), o.begin());
    std::copy(n.begin(), n.end(), o.begin() + static_cast<std::ptrdiff_t>(dz));
  }
  return out;
}

void standardize(Tensor& x, const Tensor& mean, const Tensor& sd) {
  const std::size_t d = x.row_size();
  for (std::size_t r = 0; r < x.dim(0); ++r) {
    auto row = x.row(r);
    for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] - mean[j]) / sd[j];
  }
}

PairSamples take(const PairSamples& s, std::span<const std::size_t> rows) {
  return {s.z.gather_rows(rows), s.n.gather_rows(rows)};
}

// Joint rows labelled 0, product rows labelled 1.
DatasetSplit labelled(const Tensor& joint, const Tensor& product) {
  DatasetSplit d;
  const std::size_t a = joint.dim(0), b = product.dim(0), w = joint.row_size();
  std::vector<double> values(joint.data().begin(), joint.data().end());
  values.insert(values.end(), product.data().begin(), product.data().end());
  d.features = Tensor({a + b, w}, std::move(values));
  d.labels.assign(a, 0);
  d.labels.insert(d.labels.end(), b, 1);
  d.num_classes = 2;
  return d;
}

std::vector<std::size_t> permutation(std::size_t n, Rng& rng) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(p));
  return p;
}

}  // namespace

void validate(const DiscriminatorConfig& c) {
  if (c.epochs == 0) throw ConfigError("discriminator needs at least one epoch");
  if (c.batch_size == 0) throw ConfigError("discriminator batch_size must be >= 1");
  if (!(c.holdout_fraction > 0.0 && c.holdout_fraction < 1.0))
    throw ConfigError("holdout_fraction must lie in (0, 1)");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("discriminator momentum must lie in [0, 1)");
  for (auto h : c.hidden)
    if (h == 0) throw ConfigError("discriminator hidden widths must be positive");
}

PairSamples product_samples(const PairSamples& joint, Rng& rng) {
  check_pairs(joint, "product samples");
  const auto perm = permutation(joint.size(), rng);
  return {joint.z, joint.n.gather_rows(perm)};
}

std::vector<double> Discriminator::log_ratio(const PairSamples& samples, std::size_t* clipped) const {
  check_pairs(samples, "discriminator input");
  Tensor x = concat(samples);
  if (x.row_size() != mean.size()) throw DimensionError("discriminator input width does not match training");
  standardize(x, mean, sd);
  const Tensor logits = vnn::forward_deterministic(net, x);
  const double bound = std::log((1.0 - kClip) / kClip);
  std::vector<double> out(samples.size());
  std::size_t n_clipped = 0;
  for (std::size_t r = 0; r < out.size(); ++r) {
    // D = P(product) = sigmoid(l1 - l0)
    double v = logits(r, 0) - logits(r, 1);
    if (std::fabs(v) > bound) {
      v = std::copysign(bound, v);
      ++n_clipped;
    }
    out[r] = v;
  }
  if (clipped) *clipped = n_clipped;
  return out;
}

Discriminator train_discriminator(const PairSamples& joint, const PairSamples& product,
                                  const DiscriminatorConfig& config, Rng& rng) {
  validate(config);
  check_pairs(joint, "joint samples");
  check_pairs(product, "product samples");
  if (joint.size() != product.size()) throw InputError("joint and product sample counts differ");
  if (joint.z.dim(1) != product.z.dim(1) || joint.n.dim(1) != product.n.dim(1))
    throw DimensionError("joint and product sample widths differ");

  const std::size_t n = joint.size();
  const auto n_hold = static_cast<std::size_t>(std::llround(config.holdout_fraction * static_cast<double>(n)));
  if (n_hold == 0 || n_hold >= n) throw InputError("too few samples for a held-out split");
  const auto pj = permutation(n, rng);
  const auto pp = permutation(n, rng);
  const std::span<const std::size_t> tj(pj.data() + n_hold, n - n_hold), hj(pj.data(), n_hold);
  const std::span<const std::size_t> tp(pp.data() + n_hold, n - n_hold), hp(pp.data(), n_hold);

  Tensor train_joint = concat(take(joint, tj)), train_prod = concat(take(product, tp));
  Tensor hold_joint = concat(take(joint, hj)), hold_prod = concat(take(product, hp));

  Discriminator disc;
  const std::size_t d = train_joint.row_size();
  disc.mean = Tensor({d});
  disc.sd = Tensor({d});
  const double m = 2.0 * static_cast<double>(n - n_hold);
  for (const Tensor* t : {&train_joint, &train_prod})
    for (std::size_t r = 0; r < t->dim(0); ++r) {
      const auto row = t->row(r);
      for (std::size_t j = 0; j < d; ++j) disc.mean[j] += row[j] / m;
    }
  for (const Tensor* t : {&train_joint, &train_prod})
    for (std::size_t r = 0; r < t->dim(0); ++r) {
      const auto row = t->row(r);
      for (std::size_t j = 0; j < d; ++j) disc.sd[j] += (row[j] - disc.mean[j]) * (row[j] - disc.mean[j]);
    }
  for (std::size_t j = 0; j < d; ++j) {
    const double sd = std::sqrt(disc.sd[j] / (m - 1.0));
    disc.sd[j] = sd > 1e-12 ? sd : 1.0;
  }
  for (Tensor* t : {&train_joint, &train_prod, &hold_joint, &hold_prod}) standardize(*t, disc.mean, disc.sd);

  const DatasetSplit train_set = labelled(train_joint, train_prod);
  const DatasetSplit hold_set = labelled(hold_joint, hold_prod);

  std::vector<std::size_t> sizes{d};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(2);
  Rng init = Rng::derived(rng.next_u64(), 1);
  vnn::NetworkState net = vnn::init_network(
      vnn::NetworkSpec::mlp(sizes, vnn::Activation::ReLU, vnn::NoiseModel{vnn::NoiseKind::None}), init);

  vnn::TrainConfig tc;
  tc.beta = 0.0;
  tc.epochs = config.epochs;
  tc.batch_size = config.batch_size;
  tc.lr.value = config.learning_rate;
  tc.lr.decay_epochs = {};
  tc.momentum = config.momentum;
  tc.seed = rng.next_u64();

  bool have_best = false;
  auto keep_best = [&](const vnn::NetworkState& current, const vnn::EpochRecord& rec) {
    const auto eval = vnn::evaluate(current, hold_set);
    if (!have_best || eval.mean_ce < disc.holdout_loss) {
      have_best = true;
      disc.net = current;
      disc.holdout_loss = eval.mean_ce;
      disc.holdout_accuracy = eval.accuracy;
      disc.selected_epoch = rec.epoch;
    }
  };
  vnn::train(std::move(net), train_set, tc, keep_best);
  return disc;
}

info::MIEstimate estimate_mi_density_ratio(const Discriminator& disc, const PairSamples& joint) {
  info::MIEstimate est;
  const auto r = disc.log_ratio(joint, &est.clipped);
  const double n = static_cast<double>(r.size());
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  var = r.size() > 1 ? var / (n - 1.0) : 0.0;
  est.value = mean;
  est.std_error = std::sqrt(var / n);
  est.n_samples = r.size();
  est.discriminator_loss = disc.holdout_loss;
  return est;
}

info::MIEstimate estimate_mi_density_ratio(const Discriminator& disc, const PairSamples& joint,
                                           const PairSamples& product) {
  info::MIEstimate est = estimate_mi_density_ratio(disc, joint);
  std::size_t clipped = 0;
  const auto r = disc.log_ratio(product, &clipped);
  if (r.empty()) throw InputError("no product samples to normalise with");
  est.clipped += clipped;
  // log of the mean ratio, shifted by the largest term
  const double top = *std::max_element(r.begin(), r.end());
  const double n = static_cast<double>(r.size());
  double m = 0.0;
  for (double v : r) m += std::exp(v - top);
  m /= n;
  double var = 0.0;
  for (double v : r) var += (std::exp(v - top) - m) * (std::exp(v - top) - m);
  var = r.size() > 1 ? var / (n - 1.0) : 0.0;
  est.value -= top + std::log(m);
  est.std_error = std::sqrt(est.std_error * est.std_error + var / (n * m * m));
  return est;
}

info::MIEstimate estimate_mi(const PairSamples& joint, const DiscriminatorConfig& config, double eval_fraction,
                             Rng& rng) {
  check_pairs(joint, "joint samples");
  if (!(eval_fraction > 0.0 && eval_fraction < 1.0)) throw ConfigError("eval_fraction must lie in (0, 1)");
  const std::size_t n = joint.size();
  const auto n_eval = static_cast<std::size_t>(std::llround(eval_fraction * static_cast<double>(n)));
  if (n_eval == 0 || n_eval >= n) throw InputError("too few samples for an evaluation split");
  const auto p = permutation(n, rng);
  const PairSamples eval = take(joint, std::span<const std::size_t>(p.data(), n_eval));
  const PairSamples fit = take(joint, std::span<const std::size_t>(p.data() + n_eval, n - n_eval));
  const PairSamples prod = product_samples(fit, rng);
  const Discriminator disc = train_discriminator(fit, prod, config, rng);
  return estimate_mi_density_ratio(disc, eval, product_samples(eval, rng));
}

}  // namespace ibw::nuisance
