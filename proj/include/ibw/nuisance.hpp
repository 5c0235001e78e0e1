#pragma once

// Nuisance-perturbed data x = f(y, n) and density-ratio estimates of I(z;n).
//
// The estimator trains a classifier D(z, n) to tell product samples
// (z, n') with n' reshuffled from joint samples (z, n). At the optimum
// D = p(z) / (p(z) + p(z|n)), so log((1 - D) / D) = log p(z|n) / p(z), and
// its mean over joint samples estimates the mutual information. There are no
// guarantees on the quality of the approximation beyond that.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ibw/dataset.hpp"
#include "ibw/info.hpp"
#include "ibw/rng.hpp"
#include "ibw/tensor.hpp"
#include "ibw/vnn.hpp"

namespace ibw::nuisance {

struct ClutterConfig {
  int num_squares = 10;
  int square_size = 4;
  double intensity = 1.0;
  std::uint64_t seed = 0;
};

// Throws ConfigError for negative counts, square_size < 1, intensity outside
// [0, 1].
void validate(const ClutterConfig& config);

struct NuisanceSample {
  Tensor x;  // [H x W]
  int y = 0;
  Tensor n;  // [H x W] clutter mask, 0/1
};

struct ClutteredSet {
  DatasetSplit data;  // features [N x H x W] = max(clean, intensity * n)
  Tensor nuisance;    // [N x H x W]

  std::size_t size() const { return data.size(); }
  NuisanceSample sample(std::size_t i) const;
};

// Square corners uniform over [0, H - s] x [0, W - s]; squares may overlap
// each other and the digit. The clutter is drawn from `rng` only, so it is
// independent of the labels. Throws ConfigError if square_size > min(H, W).
ClutteredSet generate_cluttered(const DatasetSplit& clean, const ClutterConfig& config, Rng& rng);

// Paired samples: row i of z goes with row i of n.
struct PairSamples {
  Tensor z;  // [N x dz]
  Tensor n;  // [N x dn]
  std::size_t size() const { return z.dim(0); }
};

// Same z, n rows permuted: a sample of p(z) p(n).
PairSamples product_samples(const PairSamples& joint, Rng& rng);

struct DiscriminatorConfig {
  std::vector<std::size_t> hidden{256, 256};
  std::size_t epochs = 30;
  std::size_t batch_size = 128;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double holdout_fraction = 0.2;
};

void validate(const DiscriminatorConfig& config);

struct Discriminator {
  vnn::NetworkState net;  // 2-way softmax; class 1 = product
  Tensor mean;            // per-feature standardisation of concat(z, n)
  Tensor sd;
  double holdout_loss = 0.0;  // nats per sample at the selected epoch
  double holdout_accuracy = 0.0;
  std::size_t selected_epoch = 0;

  // log((1 - D) / D) per row, with D clipped to [1e-6, 1 - 1e-6].
  // `clipped` counts rows where clipping was applied.
  std::vector<double> log_ratio(const PairSamples& samples, std::size_t* clipped = nullptr) const;
};

// Logistic-loss training with held-out selection of the best epoch.
// Throws InputError if either sample set is empty or their sizes differ.
Discriminator train_discriminator(const PairSamples& joint, const PairSamples& product,
                                  const DiscriminatorConfig& config, Rng& rng);

// Mean of log((1 - D) / D) over the joint samples, SE = sd / sqrt(n).
info::MIEstimate estimate_mi_density_ratio(const Discriminator& disc, const PairSamples& joint);

// Same, minus log of the mean ratio over product samples. The true ratio
// averages to 1 under the product, so this removes any constant offset in the
// discriminator's logit (its class prior is only learned up to noise).
info::MIEstimate estimate_mi_density_ratio(const Discriminator& disc, const PairSamples& joint,
                                           const PairSamples& product);

// Full pipeline: split joint samples into training and evaluation parts,
// build product samples by permutation, train, estimate on the evaluation
// part with the normalised form above.
info::MIEstimate estimate_mi(const PairSamples& joint, const DiscriminatorConfig& config, double eval_fraction,
                             Rng& rng);

// z ~ N(0, 1), n = rho z + sqrt(1 - rho^2) e. Throws DomainError for |rho| >= 1.
PairSamples synthetic_correlated_gaussian(double rho, std::size_t n, Rng& rng);

// -1/2 log(1 - rho^2). Throws DomainError for |rho| >= 1.
double true_gaussian_mi(double rho);

}  // namespace ibw::nuisance
