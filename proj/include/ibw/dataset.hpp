#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ibw/tensor.hpp"

namespace ibw {

struct Provenance {
  std::string source;
  double corruption = 0.0;
  std::uint64_t seed = 0;
};

// features is [N x d] (or [N x H x W] before flattening); labels[i] is the
// class of row i.
struct DatasetSplit {
  Tensor features;
  std::vector<int> labels;
  int num_classes = 0;
  Provenance provenance;

  std::size_t size() const { return labels.size(); }
  std::size_t feature_dim() const { return features.row_size(); }
};

// Throws InputError if labels and feature rows disagree or a label is out of range.
void validate(const DatasetSplit& data);

DatasetSplit flattened(const DatasetSplit& data);
DatasetSplit subset(const DatasetSplit& data, std::size_t begin, std::size_t end);
DatasetSplit gather(const DatasetSplit& data, std::span<const std::size_t> rows);

// Single global mean and SD over all training features.
struct FeatureScaler {
  double mean = 0.0;
  double sd = 1.0;
  static FeatureScaler fit(const Tensor& features);
  Tensor apply(const Tensor& features) const;
};

}  // namespace ibw
