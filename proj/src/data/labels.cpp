#include "ibw/data.hpp"
#include "ibw/errors.hpp"

namespace ibw::data {

std::vector<int> corrupt_labels(const std::vector<int>& labels, double p, int num_classes, Rng& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("corruption probability must lie in [0, 1]");
  if (num_classes < 1) throw InputError("num_classes must be positive");
  std::vector<int> out(labels);
  const auto k = static_cast<std::uint64_t>(num_classes);
  for (auto& l : out) {
    // Both draws happen for every label so the stream does not depend on p.
    const double u = rng.uniform();
    const auto replacement = static_cast<int>(rng.uniform_index(k));
    if (u < p) l = replacement;
  }
  return out;
}

}  // namespace ibw::data
