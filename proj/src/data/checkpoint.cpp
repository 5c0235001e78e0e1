#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ibw/data.hpp"
#include "ibw/errors.hpp"

namespace ibw::data {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint blobs are written in host order");

const Tensor& Checkpoint::tensor(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.name == name) return t.tensor;
  throw InputError("checkpoint has no tensor named '" + name + "'");
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  json manifest;
  manifest["version"] = ckpt.version;
  manifest["spec"] = ckpt.spec.empty() ? json() : json::parse(ckpt.spec);
  manifest["provenance"] = ckpt.provenance;
  json dir = json::array();
  std::size_t offset = 0;
  for (const auto& t : ckpt.tensors) {
    const std::size_t length = t.tensor.size() * sizeof(double);
    dir.push_back({{"name", t.name}, {"shape", t.tensor.shape()}, {"offset", offset}, {"length", length}});
    offset += length;
  }
  manifest["tensors"] = dir;
  const std::string head = manifest.dump() + "\n";

  std::vector<std::uint8_t> out(head.begin(), head.end());
  out.reserve(head.size() + offset);
  for (const auto& t : ckpt.tensors) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(t.tensor.data().data());
    out.insert(out.end(), p, p + t.tensor.size() * sizeof(double));
  }
  return out;
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw FormatError("checkpoint manifest has no terminating newline", bytes.size());
  const std::size_t blob_start = static_cast<std::size_t>(nl - bytes.begin()) + 1;

  json manifest;
  try {
    manifest = json::parse(bytes.begin(), nl);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint manifest is not valid JSON: ") + e.what(), e.byte);
  }
  if (!manifest.is_object() || !manifest.contains("version") || !manifest["version"].is_number_integer())
    throw FormatError("checkpoint manifest lacks an integer version", 0);
  const int version = manifest["version"].get<int>();
  if (version != kCheckpointVersion) throw UnsupportedVersion(version, 0);

  Checkpoint ckpt;
  ckpt.version = version;
  try {
    if (manifest.contains("spec") && !manifest["spec"].is_null()) ckpt.spec = manifest["spec"].dump();
    if (manifest.contains("provenance"))
      ckpt.provenance = manifest["provenance"].get<std::map<std::string, std::string>>();
    const auto& dir = manifest.at("tensors");
    if (!dir.is_array()) throw FormatError("checkpoint tensor directory is not a list", 0);
    std::size_t expected = 0;
    for (const auto& entry : dir) {
      NamedTensor nt;
      nt.name = entry.at("name").get<std::string>();
      const auto shape = entry.at("shape").get<Tensor::Shape>();
      const auto offset = entry.at("offset").get<std::size_t>();
      const auto length = entry.at("length").get<std::size_t>();
      const std::size_t count = shape_size(shape);
      if (length != count * sizeof(double) || offset != expected)
        throw FormatError("checkpoint directory entry for tensor '" + nt.name + "' is inconsistent",
                          blob_start + offset);
      if (bytes.size() < blob_start + offset + length)
        throw FormatError("checkpoint blob for tensor '" + nt.name + "' is truncated", bytes.size());
      std::vector<double> values(count);
      if (length) std::memcpy(values.data(), bytes.data() + blob_start + offset, length);
      nt.tensor = Tensor(shape, std::move(values));
      ckpt.tensors.push_back(std::move(nt));
      expected += length;
    }
    if (bytes.size() != blob_start + expected)
      throw FormatError("checkpoint has trailing bytes after the last tensor", blob_start + expected);
  } catch (const json::exception& e) {
    throw FormatError(std::string("corrupt checkpoint directory: ") + e.what(), 0);
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

namespace {

std::string layer_prefix(std::size_t i) { return "layer" + std::to_string(i) + "."; }

}  // namespace

Checkpoint network_checkpoint(const vnn::NetworkState& net, std::map<std::string, std::string> provenance) {
  vnn::validate(net);
  Checkpoint ckpt;
  json layers = json::array();
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    if (const auto* d = std::get_if<vnn::VariationalDense>(&net.layers[i])) {
      layers.push_back({{"type", "dense"}, {"in", d->in_dim()}, {"out", d->out_dim()},
                        {"noise", std::string(d->noise.name())}});
      ckpt.tensors.push_back({layer_prefix(i) + "w_mean", d->w_mean});
      ckpt.tensors.push_back({layer_prefix(i) + "bias", d->bias});
      ckpt.tensors.push_back({layer_prefix(i) + "log_alpha", d->log_alpha});
    } else {
      layers.push_back({{"type", std::string(vnn::activation_name(std::get<vnn::Activation>(net.layers[i])))}});
    }
  }
  ckpt.spec = json{{"kind", "network"}, {"layers", layers}}.dump();
  ckpt.provenance = std::move(provenance);
  return ckpt;
}

vnn::NetworkState network_from_checkpoint(const Checkpoint& ckpt) {
  vnn::NetworkState net;
  try {
    const json spec = json::parse(ckpt.spec);
    if (spec.at("kind") != "network") throw FormatError("checkpoint does not hold a network", 0);
    const auto& layers = spec.at("layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto type = layers[i].at("type").get<std::string>();
      if (type == "dense") {
        vnn::VariationalDense d;
        d.noise = vnn::NoiseModel::parse(layers[i].at("noise").get<std::string>());
        d.w_mean = ckpt.tensor(layer_prefix(i) + "w_mean");
        d.bias = ckpt.tensor(layer_prefix(i) + "bias");
        d.log_alpha = ckpt.tensor(layer_prefix(i) + "log_alpha");
        net.layers.emplace_back(std::move(d));
      } else {
        net.layers.emplace_back(vnn::parse_activation(type));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad network spec in checkpoint: ") + e.what(), 0);
  }
  vnn::validate(net);
  return net;
}

Checkpoint dataset_checkpoint(const DatasetSplit& data) {
  validate(data);
  Checkpoint ckpt;
  ckpt.spec = json{{"kind", "dataset"}, {"num_classes", data.num_classes}}.dump();
  std::vector<double> labels(data.labels.begin(), data.labels.end());
  ckpt.tensors.push_back({"features", data.features});
  ckpt.tensors.push_back({"labels", Tensor::vector(std::move(labels))});
  ckpt.provenance = {{"source", data.provenance.source},
                     {"corruption", json(data.provenance.corruption).dump()},
                     {"seed", std::to_string(data.provenance.seed)}};
  return ckpt;
}

DatasetSplit dataset_from_checkpoint(const Checkpoint& ckpt) {
  DatasetSplit out;
  try {
    const json spec = json::parse(ckpt.spec);
    if (spec.at("kind") != "dataset") throw FormatError("checkpoint does not hold a dataset", 0);
    out.num_classes = spec.at("num_classes").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad dataset spec in checkpoint: ") + e.what(), 0);
  }
  out.features = ckpt.tensor("features");
  for (double v : ckpt.tensor("labels").data()) out.labels.push_back(static_cast<int>(v));
  if (auto it = ckpt.provenance.find("source"); it != ckpt.provenance.end()) out.provenance.source = it->second;
  if (auto it = ckpt.provenance.find("corruption"); it != ckpt.provenance.end())
    out.provenance.corruption = std::stod(it->second);
  if (auto it = ckpt.provenance.find("seed"); it != ckpt.provenance.end())
    out.provenance.seed = std::stoull(it->second);
  validate(out);
  return out;
}

}  // namespace ibw::data
