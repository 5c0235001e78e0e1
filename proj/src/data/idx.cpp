#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "ibw/data.hpp"
#include "ibw/errors.hpp"

namespace ibw::data {

namespace {

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

bool is_gzip(const std::vector<std::uint8_t>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

std::vector<std::uint8_t> gunzip(const std::vector<std::uint8_t>& in, const char* what) {
  z_stream zs{};
  if (inflateInit2(&zs, 15 + 16) != Z_OK) throw FormatError(std::string(what) + ": zlib init failed", 0);
  std::vector<std::uint8_t> out;
  std::uint8_t buf[1 << 16];
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    zs.next_out = buf;
    zs.avail_out = sizeof buf;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      const std::size_t at = zs.total_in;
      inflateEnd(&zs);
      throw FormatError(std::string(what) + ": corrupt gzip stream", at);
    }
    out.insert(out.end(), buf, buf + (sizeof buf - zs.avail_out));
    if (rc == Z_OK && zs.avail_in == 0 && zs.avail_out != 0) {
      const std::size_t at = zs.total_in;
      inflateEnd(&zs);
      throw FormatError(std::string(what) + ": truncated gzip stream", at);
    }
  }
  inflateEnd(&zs);
  return out;
}

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, const char* what) : bytes_(bytes), what_(what) {}

  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + static_cast<std::size_t>(i)];
    pos_ += 4;
    return v;
  }

  const std::uint8_t* take(std::size_t n, const char* field) {
    need(n, field);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::size_t pos() const { return pos_; }
  std::size_t size() const { return bytes_.size(); }
  [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
    throw FormatError(std::string(what_) + ": " + msg, at);
  }

 private:
  void need(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n) fail(std::string("truncated while reading ") + field, bytes_.size());
  }
  const std::vector<std::uint8_t>& bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

DatasetSplit parse_idx(const std::vector<std::uint8_t>& images_raw, const std::vector<std::uint8_t>& labels_raw) {
  const auto images = is_gzip(images_raw) ? gunzip(images_raw, "images") : images_raw;
  const auto labels = is_gzip(labels_raw) ? gunzip(labels_raw, "labels") : labels_raw;

  Reader ri(images, "images");
  if (ri.u32("magic") != kImageMagic) ri.fail("bad magic, expected 0x00000803", 0);
  const std::size_t n = ri.u32("image count");
  const std::size_t rows = ri.u32("row count");
  const std::size_t cols = ri.u32("column count");
  if (rows == 0 || cols == 0) ri.fail("zero image extent", 8);
  const std::size_t pixels = rows * cols;
  if ((ri.size() - ri.pos()) / pixels < n) ri.fail("truncated pixel data", ri.size());
  const std::uint8_t* px = ri.take(n * pixels, "pixel data");
  if (ri.pos() != ri.size()) ri.fail("trailing bytes after pixel data", ri.pos());

  Reader rl(labels, "labels");
  if (rl.u32("magic") != kLabelMagic) rl.fail("bad magic, expected 0x00000801", 0);
  const std::size_t n_labels = rl.u32("label count");
  if (n_labels != n)
    rl.fail("label count " + std::to_string(n_labels) + " does not match image count " + std::to_string(n), 4);
  const std::uint8_t* lb = rl.take(n, "label data");
  if (rl.pos() != rl.size()) rl.fail("trailing bytes after label data", rl.pos());

  DatasetSplit out;
  std::vector<double> values(n * pixels);
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = px[i] / 255.0;
  out.features = n == 0 ? Tensor({0, rows, cols}) : Tensor({n, rows, cols}, std::move(values));
  out.labels.resize(n);
  int max_label = -1;
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = lb[i];
    max_label = std::max(max_label, out.labels[i]);
  }
  out.num_classes = std::max(10, max_label + 1);
  out.provenance.source = "idx";
  return out;
}

DatasetSplit load_idx(const std::filesystem::path& images, const std::filesystem::path& labels) {
  auto out = parse_idx(read_file(images), read_file(labels));
  out.provenance.source = images.string();
  return out;
}

namespace {
void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<std::uint8_t>(v >> s));
}
}  // namespace

std::vector<std::uint8_t> encode_idx_images(const Tensor& images) {
  if (images.rank() != 3) throw DimensionError("IDX images must be [N x H x W]");
  std::vector<std::uint8_t> out;
  put_u32(out, kImageMagic);
  for (std::size_t a = 0; a < 3; ++a) put_u32(out, static_cast<std::uint32_t>(images.dim(a)));
  for (double v : images.data()) {
    const double c = std::clamp(v, 0.0, 1.0);
    out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
  }
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(const std::vector<int>& labels) {
  std::vector<std::uint8_t> out;
  put_u32(out, kLabelMagic);
  put_u32(out, static_cast<std::uint32_t>(labels.size()));
  for (int l : labels) {
    if (l < 0 || l > 255) throw InputError("IDX labels must fit in one byte");
    out.push_back(static_cast<std::uint8_t>(l));
  }
  return out;
}

}  // namespace ibw::data
