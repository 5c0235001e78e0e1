#include "ibw/errors.hpp"
#include "ibw/exp.hpp"

namespace ibw::exp {

namespace {
constexpr std::uint64_t kLabelStream = 0x6C61626C;
constexpr std::uint64_t kSyntheticStream = 0x73796E74;
constexpr std::size_t kSyntheticRows = 5000;
}  // namespace

DatasetSplit load_images(const ExperimentConfig& cfg) {
  if (cfg.dataset == "synthetic") {
    Rng rng = Rng::derived(cfg.seed, kSyntheticStream);
    return data::synthetic_gaussian_dataset(cfg.synthetic_dim, kSyntheticRows, cfg.synthetic_classes,
                                            cfg.synthetic_margin, rng);
  }
  if (cfg.dataset == "mnist5k") {
    const std::filesystem::path dir = std::filesystem::path(cfg.data_dir) / "mnist5k";
    return data::load_idx(dir / "images-idx3-ubyte.gz", dir / "labels-idx1-ubyte.gz");
  }
  throw ConfigError("unknown dataset '" + cfg.dataset + "'");
}

Splits load_splits(const ExperimentConfig& cfg, std::size_t n_train, double corruption) {
  const DatasetSplit all = flattened(load_images(cfg));
  if (n_train == 0 || n_train + cfg.n_test > all.size())
    throw ConfigError("n_train + n_test = " + std::to_string(n_train + cfg.n_test) + " exceeds the " +
                      std::to_string(all.size()) + " available rows");
  Splits s;
  s.train = subset(all, 0, n_train);
  s.test = cfg.n_test ? subset(all, all.size() - cfg.n_test, all.size()) : subset(all, 0, 0);

  Rng rng = Rng::derived(cfg.seed, kLabelStream);
  s.train.labels = data::corrupt_labels(s.train.labels, corruption, s.train.num_classes, rng);
  s.train.provenance.corruption = corruption;
  s.train.provenance.seed = cfg.seed;

  const auto scaler = FeatureScaler::fit(s.train.features);
  s.train.features = scaler.apply(s.train.features);
  s.test.features = scaler.apply(s.test.features);
  return s;
}

}  // namespace ibw::exp
