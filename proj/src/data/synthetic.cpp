#include <cmath>

#include "ibw/data.hpp"
#include "ibw/errors.hpp"

namespace ibw::data {

DatasetSplit synthetic_gaussian_dataset(std::size_t d, std::size_t n, int num_classes, double margin, Rng& rng) {
  if (d < 1 || n < 1 || num_classes < 1) throw InputError("synthetic dataset needs d, N, num_classes >= 1");
  const auto k = static_cast<std::size_t>(num_classes);
  if (margin != 0.0 && k > d) throw InputError("need num_classes <= d for orthogonal class directions");

  // Gram-Schmidt on Gaussian vectors.
  std::vector<std::vector<double>> dirs;
  if (margin != 0.0) {
    while (dirs.size() < k) {
      std::vector<double> v(d);
      for (auto& x : v) x = rng.normal();
      for (const auto& u : dirs) {
        double dot = 0.0;
        for (std::size_t i = 0; i < d; ++i) dot += v[i] * u[i];
        for (std::size_t i = 0; i < d; ++i) v[i] -= dot * u[i];
      }
      double norm = 0.0;
      for (double x : v) norm += x * x;
      norm = std::sqrt(norm);
      if (norm < 1e-8) continue;
      for (auto& x : v) x /= norm;
      dirs.push_back(std::move(v));
    }
  }

  const double scale = margin / std::sqrt(2.0);
  DatasetSplit out;
  out.features = Tensor({n, d});
  out.labels.resize(n);
  out.num_classes = num_classes;
  for (std::size_t r = 0; r < n; ++r) {
    const auto c = static_cast<int>(rng.uniform_index(k));
    out.labels[r] = c;
    auto row = out.features.row(r);
    for (std::size_t i = 0; i < d; ++i) {
      row[i] = rng.normal();
      if (margin != 0.0) row[i] += scale * dirs[static_cast<std::size_t>(c)][i];
    }
  }
  out.provenance.source = "synthetic-gaussian";
  return out;
}

}  // namespace ibw::data
