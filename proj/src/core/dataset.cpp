#include "ibw/dataset.hpp"

#include <cmath>

#include "ibw/errors.hpp"

namespace ibw {

void validate(const DatasetSplit& data) {
  if (data.features.rank() == 0 || data.features.dim(0) != data.labels.size())
    throw InputError("dataset has " + std::to_string(data.labels.size()) + " labels but features " +
                     shape_string(data.features.shape()));
  for (std::size_t i = 0; i < data.labels.size(); ++i)
    if (data.labels[i] < 0 || data.labels[i] >= data.num_classes)
      throw InputError("label " + std::to_string(data.labels[i]) + " at row " + std::to_string(i) +
                       " outside [0, " + std::to_string(data.num_classes) + ")");
}

DatasetSplit flattened(const DatasetSplit& data) {
  DatasetSplit out = data;
  out.features = data.features.reshaped({data.size(), data.feature_dim()});
  return out;
}

DatasetSplit subset(const DatasetSplit& data, std::size_t begin, std::size_t end) {
  if (begin > end || end > data.size()) throw InputError("subset range out of bounds");
  DatasetSplit out;
  out.features = data.features.slice_rows(begin, end);
  out.labels.assign(data.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                    data.labels.begin() + static_cast<std::ptrdiff_t>(end));
  out.num_classes = data.num_classes;
  out.provenance = data.provenance;
  return out;
}

DatasetSplit gather(const DatasetSplit& data, std::span<const std::size_t> rows) {
  DatasetSplit out;
  out.features = data.features.gather_rows(rows);
  out.labels.reserve(rows.size());
  for (auto r : rows) out.labels.push_back(data.labels.at(r));
  out.num_classes = data.num_classes;
  out.provenance = data.provenance;
  return out;
}

FeatureScaler FeatureScaler::fit(const Tensor& features) {
  const auto d = features.data();
  if (d.size() < 2) return {};
  double mean = 0.0;
  for (double v : d) mean += v;
  mean /= static_cast<double>(d.size());
  double ss = 0.0;
  for (double v : d) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(d.size() - 1));
  return {mean, sd > 0.0 ? sd : 1.0};
}

Tensor FeatureScaler::apply(const Tensor& features) const {
  Tensor out(features.shape());
  const double inv = 1.0 / sd;
  for (std::size_t i = 0; i < features.size(); ++i) out[i] = (features[i] - mean) * inv;
  return out;
}

}  // namespace ibw
