#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "core/error.hpp"
#include "core/feature_csv.hpp"
#include "core/image_codec.hpp"
#include "core/png_io.hpp"
#include "core/rng.hpp"

using namespace flowsentry;

namespace {

std::vector<FeatureVector> random_rows(std::size_t n, Label label, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<FeatureVector> rows(n);
  for (auto& row : rows) {
    row.label = label;
    for (auto& v : row.values) v = rng.uniform(-5.0, 1000.0);
  }
  return rows;
}

}  // namespace

TEST_CASE("a single row learns min == max == value") {
  std::vector<FeatureVector> rows(1);
  rows[0][FeatureId::DstPort] = 42.0;
  const NormalizationSpec spec = learn_normalization(rows);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    CHECK(spec.ranges[f].first == spec.ranges[f].second);
    CHECK(spec.ranges[f].first == rows[0].values[f]);
  }
}

TEST_CASE("two rows learn the column range") {
  std::vector<FeatureVector> rows(2);
  rows[0][FeatureId::FlowDuration] = 0.0;
  rows[1][FeatureId::FlowDuration] = 10.0;
  const NormalizationSpec spec = learn_normalization(rows);
  const auto [mn, mx] = spec.ranges[static_cast<std::size_t>(FeatureId::FlowDuration)];
  CHECK(mn == 0.0);
  CHECK(mx == 10.0);
}

TEST_CASE("learned spec equals an independent column scan on 3000 rows") {
  const auto rows = random_rows(3000, Label::Benign, 8);
  const NormalizationSpec spec = learn_normalization(rows);
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    double mn = rows[0].values[f], mx = rows[0].values[f];
    for (const auto& row : rows) {
      mn = std::min(mn, row.values[f]);
      mx = std::max(mx, row.values[f]);
    }
    CHECK(spec.ranges[f].first == mn);
    CHECK(spec.ranges[f].second == mx);
  }
}

TEST_CASE("learning from no rows is an error") {
  try {
    learn_normalization({});
    FAIL("expected EmptyInput");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::EmptyInput);
  }
}

TEST_CASE("1499 rows produce zero images; 3001 produce two") {
  const auto spec = learn_normalization(random_rows(10, Label::Benign, 1));
  CHECK(encode_images(random_rows(1499, Label::Benign, 2), spec).empty());
  CHECK(encode_images(random_rows(3001, Label::Benign, 3), spec).size() == 2);
}

TEST_CASE("rows at the spec maxima encode to an all-255 image") {
  auto rows = random_rows(kRowsPerImage, Label::Anomaly, 4);
  NormalizationSpec spec;
  for (std::size_t f = 0; f < kFeatureCount; ++f) spec.ranges[f] = {0.0, 1.0};
  for (auto& row : rows)
    for (auto& v : row.values) v = 1.0;
  const auto images = encode_images(rows, spec);
  REQUIRE(images.size() == 1);
  for (const unsigned char b : images[0].pixels) CHECK(b == 255);
}

TEST_CASE("mixed labels are rejected") {
  auto rows = random_rows(kRowsPerImage, Label::Benign, 5);
  rows[7].label = Label::Anomaly;
  const auto spec = learn_normalization(rows);
  try {
    encode_images(rows, spec);
    FAIL("expected MixedLabels");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::MixedLabels);
  }
}

TEST_CASE("an all-zero image decodes to the spec minima; byte 255 hits the max exactly") {
  NormalizationSpec spec;
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    spec.ranges[f] = {static_cast<double>(f) - 3.0, static_cast<double>(f) * 2.0 + 1.0};
  FlowImage img;
  img.label = Label::Benign;
  const auto rows = decode_image(img, spec);
  REQUIRE(rows.size() == kRowsPerImage);
  for (const auto& row : rows)
    for (std::size_t f = 0; f < kFeatureCount; ++f) CHECK(row.values[f] == spec.ranges[f].first);

  FlowImage bright;
  bright.pixels.fill(255);
  const auto top = decode_image(bright, spec);
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    CHECK(top[0].values[f] == spec.ranges[f].second);
}

TEST_CASE("encode/decode round-trip stays within half a quantization step") {
  const auto rows = random_rows(kRowsPerImage, Label::Benign, 6);
  const NormalizationSpec spec = learn_normalization(rows);
  const auto images = encode_images(rows, spec);
  REQUIRE(images.size() == 1);
  const auto decoded = decode_image(images[0], spec);
  for (std::size_t r = 0; r < kRowsPerImage; ++r) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto [mn, mx] = spec.ranges[f];
      const double bound = (mx - mn) / 510.0 + 1e-9;
      CHECK(std::abs(rows[r].values[f] - decoded[r].values[f]) <= bound);
    }
  }
}

TEST_CASE("encoding is monotone per feature") {
  NormalizationSpec spec;
  for (std::size_t f = 0; f < kFeatureCount; ++f) spec.ranges[f] = {0.0, 100.0};
  double prev = -1;
  for (double v = -10.0; v <= 110.0; v += 0.37) {
    const double b = encode_byte(v, 0.0, 100.0);
    CHECK(b >= prev);
    prev = b;
  }
  CHECK(encode_byte(-1.0, 0.0, 100.0) == 0);     // clamps below
  CHECK(encode_byte(200.0, 0.0, 100.0) == 255);  // clamps above
  CHECK(encode_byte(5.0, 3.0, 3.0) == 0);        // constant feature
}

TEST_CASE("identical rows and spec give byte-identical PNG files") {
  const auto rows = random_rows(kRowsPerImage, Label::Benign, 9);
  const NormalizationSpec spec = learn_normalization(rows);
  const auto images = encode_images(rows, spec);
  REQUIRE(images.size() == 1);
  const auto png1 = encode_png_rgb8(images[0].pixels.data(), kImageWidth, kImageHeight);
  const auto png2 = encode_png_rgb8(images[0].pixels.data(), kImageWidth, kImageHeight);
  CHECK(png1 == png2);
}

TEST_CASE("PNG write/read round-trips the pixel bytes") {
  const auto rows = random_rows(kRowsPerImage, Label::Anomaly, 10);
  const NormalizationSpec spec = learn_normalization(rows);
  const auto images = encode_images(rows, spec);
  const auto bytes = encode_png_rgb8(images[0].pixels.data(), kImageWidth, kImageHeight);
  const PngImage back = decode_png_rgb8(bytes);
  CHECK(back.width == kImageWidth);
  CHECK(back.height == kImageHeight);
  REQUIRE(back.pixels.size() == kImageBytes);
  CHECK(std::equal(back.pixels.begin(), back.pixels.end(), images[0].pixels.begin()));
}

TEST_CASE("normalization spec JSON round-trips") {
  const auto rows = random_rows(50, Label::Benign, 11);
  const NormalizationSpec spec = learn_normalization(rows);
  const NormalizationSpec back = normalization_from_json(normalization_to_json(spec));
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    CHECK(back.ranges[f].first == spec.ranges[f].first);
    CHECK(back.ranges[f].second == spec.ranges[f].second);
  }
}

TEST_CASE("image set writing produces label-named files and a readable manifest") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "fsn_img_test";
  fs::remove_all(dir);

  auto benign = random_rows(kRowsPerImage, Label::Benign, 12);
  auto anomaly = random_rows(kRowsPerImage, Label::Anomaly, 13);
  const auto spec = learn_normalization(benign);
  auto images = encode_images(benign, spec);
  const auto anomaly_images = encode_images(anomaly, spec);
  images.insert(images.end(), anomaly_images.begin(), anomaly_images.end());

  const auto manifest_path = (dir / "manifest.csv").string();
  fs::create_directories(dir);
  const auto manifest = write_image_set((dir / "images").string(), images, manifest_path);
  REQUIRE(manifest.size() == 2);
  CHECK(manifest[0].path.find("benign_0.png") != std::string::npos);
  CHECK(manifest[1].path.find("anomaly_0.png") != std::string::npos);

  const auto back = read_manifest(manifest_path);
  REQUIRE(back.size() == 2);
  const FlowImage loaded = load_flow_image(back[1]);
  CHECK(loaded.label == Label::Anomaly);
  CHECK(std::equal(loaded.pixels.begin(), loaded.pixels.end(), images[1].pixels.begin()));
  fs::remove_all(dir);
}
