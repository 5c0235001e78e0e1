#include <doctest.h>

#include <json.hpp>

#include "ibw/data.hpp"
#include "ibw/errors.hpp"
#include "ibw/exp.hpp"

using namespace ibw;
using namespace ibw::data;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(IBW_SOURCE_DIR) / "tests" / "fixtures" / "idx";

void put_u32(std::vector<std::uint8_t>& b, std::uint32_t v) {
  b.push_back(static_cast<std::uint8_t>(v >> 24));
  b.push_back(static_cast<std::uint8_t>(v >> 16));
  b.push_back(static_cast<std::uint8_t>(v >> 8));
  b.push_back(static_cast<std::uint8_t>(v));
}

std::vector<std::uint8_t> two_images() {
  std::vector<std::uint8_t> b;
  put_u32(b, 0x00000803);
  put_u32(b, 2);
  put_u32(b, 28);
  put_u32(b, 28);
  for (int i = 0; i < 2 * 28 * 28; ++i) b.push_back(static_cast<std::uint8_t>(i % 256));
  return b;
}

std::vector<std::uint8_t> label_bytes(std::vector<std::uint8_t> labels) {
  std::vector<std::uint8_t> b;
  put_u32(b, 0x00000801);
  put_u32(b, static_cast<std::uint32_t>(labels.size()));
  b.insert(b.end(), labels.begin(), labels.end());
  return b;
}

std::size_t error_offset(const std::vector<std::uint8_t>& im, const std::vector<std::uint8_t>& lb) {
  try {
    parse_idx(im, lb);
  } catch (const FormatError& e) {
    return e.offset();
  }
  FAIL("no FormatError");
  return 0;
}

}  // namespace

TEST_CASE("hand-built two-image fixture") {
  const auto d = parse_idx(two_images(), label_bytes({3, 9}));
  CHECK(d.features.shape() == Tensor::Shape{2, 28, 28});
  CHECK(d.labels == std::vector<int>{3, 9});
  CHECK(d.num_classes == 10);
  CHECK(d.features.data()[1] == 1.0 / 255.0);
  CHECK(d.features.data()[2 * 784 - 1] == static_cast<double>((2 * 784 - 1) % 256) / 255.0);
}

TEST_CASE("malformed bytes give offsets") {
  auto bad = two_images();
  bad[3] = 0x01;
  CHECK(error_offset(bad, label_bytes({3, 9})) == 0);
  CHECK(error_offset(two_images(), label_bytes({3, 9, 1})) == 4);
  auto cut = two_images();
  cut.resize(cut.size() - 1);
  CHECK(error_offset(cut, label_bytes({3, 9})) == cut.size());
  CHECK_THROWS_WITH_AS(parse_idx(two_images(), label_bytes({3})), doctest::Contains("does not match"),
                       FormatError);
}

TEST_CASE("writers round trip") {
  const auto d = parse_idx(two_images(), label_bytes({3, 9}));
  CHECK(encode_idx_images(d.features) == two_images());
  CHECK(encode_idx_labels(d.labels) == label_bytes({3, 9}));
}

TEST_CASE("fixture corpus") {
  const auto manifest = nlohmann::json::parse(exp::read_text(kFixtures / "manifest.json"));
  REQUIRE(manifest.size() >= 10);
  for (const auto& c : manifest) {
    const std::string name = c["name"];
    INFO(name);
    const auto im = kFixtures / c["images"].get<std::string>();
    const auto lb = kFixtures / c["labels"].get<std::string>();
    if (c["ok"].get<bool>()) {
      const auto d = load_idx(im, lb);
      CHECK(d.features.shape() == c["shape"].get<Tensor::Shape>());
      CHECK(d.labels == c["expected_labels"].get<std::vector<int>>());
    } else {
      bool thrown = false;
      try {
        load_idx(im, lb);
      } catch (const FormatError& e) {
        thrown = true;
        CHECK(std::string(e.what()).find(c["message"].get<std::string>()) != std::string::npos);
        CHECK(e.offset() == c["offset"].get<std::size_t>());
      }
      CHECK(thrown);
    }
  }
}

TEST_CASE("missing file") { CHECK_THROWS_AS(load_idx(kFixtures / "nope", kFixtures / "nope"), InputError); }

TEST_CASE("bundled MNIST subset") {
  const auto dir = std::filesystem::path(IBW_SOURCE_DIR) / "data" / "mnist5k";
  const auto d = load_idx(dir / "images-idx3-ubyte.gz", dir / "labels-idx1-ubyte.gz");
  CHECK(d.features.shape() == Tensor::Shape{5000, 28, 28});
  CHECK(d.num_classes == 10);
  std::vector<int> counts(10, 0);
  for (int l : d.labels) ++counts[static_cast<std::size_t>(l)];
  for (int c : counts) CHECK(c > 350);
}
