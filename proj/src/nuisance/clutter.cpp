#include <algorithm>

#include "ibw/errors.hpp"
#include "ibw/nuisance.hpp"

namespace ibw::nuisance {

void validate(const ClutterConfig& c) {
  if (c.num_squares < 0) throw ConfigError("num_squares must be >= 0");
  if (c.square_size < 1) throw ConfigError("square_size must be >= 1");
  if (!(c.intensity >= 0.0 && c.intensity <= 1.0)) throw ConfigError("intensity must lie in [0, 1]");
}

NuisanceSample ClutteredSet::sample(std::size_t i) const {
  const auto& shape = data.features.shape();
  const Tensor::Shape img{shape[1], shape[2]};
  const auto x = data.features.row(i);
  const auto n = nuisance.row(i);
  return {Tensor(img, std::vector<double>(x.begin(), x.end())), data.labels.at(i),
          Tensor(img, std::vector<double>(n.begin(), n.end()))};
}

ClutteredSet generate_cluttered(const DatasetSplit& clean, const ClutterConfig& config, Rng& rng) {
  validate(config);
  validate(clean);
  if (clean.features.rank() != 3) throw DimensionError("clutter needs [N x H x W] images");
  const std::size_t h = clean.features.dim(1), w = clean.features.dim(2);
  const auto s = static_cast<std::size_t>(config.square_size);
  if (s > std::min(h, w))
    throw ConfigError("square_size " + std::to_string(s) + " does not fit a " + std::to_string(h) + "x" +
                      std::to_string(w) + " image");

  ClutteredSet out;
  out.data = clean;
  out.nuisance = Tensor(clean.features.shape());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    auto n = out.nuisance.row(i);
    for (int q = 0; q < config.num_squares; ++q) {
      const auto top = static_cast<std::size_t>(rng.uniform_index(h - s + 1));
      const auto left = static_cast<std::size_t>(rng.uniform_index(w - s + 1));
      for (std::size_t r = top; r < top + s; ++r)
        for (std::size_t c = left; c < left + s; ++c) n[r * w + c] = 1.0;
    }
    auto x = out.data.features.row(i);
    for (std::size_t p = 0; p < x.size(); ++p) x[p] = std::max(x[p], config.intensity * n[p]);
  }
  out.data.provenance.source = clean.provenance.source + "+clutter";
  out.data.provenance.seed = config.seed;
  return out;
}

}  // namespace ibw::nuisance
