#pragma once

// Dataset ingestion, label corruption, synthetic data and checkpoints.
// Byte formats are described in docs/formats.md.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "ibw/dataset.hpp"
#include "ibw/rng.hpp"
#include "ibw/tensor.hpp"
#include "ibw/vnn.hpp"

namespace ibw::data {

// IDX images (magic 0x00000803, N x rows x cols unsigned bytes, scaled to
// [0, 1]) and labels (magic 0x00000801). Either file may be gzip-compressed.
// Result features are [N x rows x cols]. Throws FormatError with the byte
// offset of the problem.
DatasetSplit load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Same, from in-memory (uncompressed or gzip) bytes.
DatasetSplit parse_idx(const std::vector<std::uint8_t>& images, const std::vector<std::uint8_t>& labels);

// Writers used for fixtures and for re-exporting cluttered data.
std::vector<std::uint8_t> encode_idx_images(const Tensor& images);  // [N x H x W], values in [0, 1]
std::vector<std::uint8_t> encode_idx_labels(const std::vector<int>& labels);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

// Each label is, independently with probability p, replaced by a uniform draw
// over all classes (which may equal the original).
std::vector<int> corrupt_labels(const std::vector<int>& labels, double p, int num_classes, Rng& rng);

// Class k has mean (margin / sqrt 2) * u_k for orthonormal random u_k, so
// class means are `margin` apart; unit covariance. Needs num_classes <= d
// when margin > 0.
DatasetSplit synthetic_gaussian_dataset(std::size_t d, std::size_t n, int num_classes, double margin, Rng& rng);

inline constexpr int kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor tensor;
  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

// Single file: one line of JSON manifest, '\n', then the tensor blobs as
// little-endian f64 in row-major order.
struct Checkpoint {
  int version = kCheckpointVersion;
  std::string spec;  // JSON text; network architecture for model checkpoints
  std::vector<NamedTensor> tensors;
  std::map<std::string, std::string> provenance;

  const Tensor& tensor(const std::string& name) const;  // throws InputError
  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

Checkpoint network_checkpoint(const vnn::NetworkState& net, std::map<std::string, std::string> provenance = {});
vnn::NetworkState network_from_checkpoint(const Checkpoint& ckpt);

// Dataset container: tensors "features" and "labels" (labels stored as reals).
Checkpoint dataset_checkpoint(const DatasetSplit& data);
DatasetSplit dataset_from_checkpoint(const Checkpoint& ckpt);

}  // namespace ibw::data
