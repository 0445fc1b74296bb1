#include "core/image_codec.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/feature_csv.hpp"
#include "core/png_io.hpp"

namespace flowsentry {

NormalizationSpec learn_normalization(std::span<const FeatureVector> rows) {
  if (rows.empty()) fail(Errc::EmptyInput, "cannot learn normalization from zero rows");
  NormalizationSpec spec;
  for (std::size_t f = 0; f < kFeatureCount; ++f)
    spec.ranges[f] = {rows[0].values[f], rows[0].values[f]};
  for (const auto& row : rows) {
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      spec.ranges[f].first = std::min(spec.ranges[f].first, row.values[f]);
      spec.ranges[f].second = std::max(spec.ranges[f].second, row.values[f]);
    }
  }
  return spec;
}

unsigned char encode_byte(double v, double min, double max) {
  if (max <= min) return 0;
  const double t = std::clamp((v - min) / (max - min), 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(255.0 * t));
}

std::vector<FlowImage> encode_images(std::span<const FeatureVector> rows,
                                     const NormalizationSpec& spec,
                                     std::uint64_t base_row_index) {
  for (const auto& row : rows) {
    if (row.label != rows.front().label)
      fail(Errc::MixedLabels, "encode requires rows of a single label");
  }
  const std::size_t n_images = rows.size() / kRowsPerImage;  // leftover discarded
  std::vector<FlowImage> images(n_images);
  for (std::size_t img = 0; img < n_images; ++img) {
    FlowImage& out = images[img];
    out.label = rows.empty() ? Label::Unlabeled : rows.front().label;
    out.first_row_index = base_row_index + img * kRowsPerImage;
    std::size_t byte_pos = 0;
    for (std::size_t r = 0; r < kRowsPerImage; ++r) {
      const auto& row = rows[img * kRowsPerImage + r];
      for (std::size_t f = 0; f < kFeatureCount; ++f) {
        const auto [mn, mx] = spec.ranges[f];
        out.pixels[byte_pos++] = encode_byte(row.values[f], mn, mx);
      }
    }
  }
  return images;
}

std::vector<FeatureVector> decode_image(const FlowImage& image, const NormalizationSpec& spec) {
  std::vector<FeatureVector> rows(kRowsPerImage);
  std::size_t byte_pos = 0;
  for (auto& row : rows) {
    row.label = image.label;
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto [mn, mx] = spec.ranges[f];
      const double b = static_cast<double>(image.pixels[byte_pos++]);
      row.values[f] = mx > mn ? mn + (mx - mn) * b / 255.0 : mn;
    }
  }
  return rows;
}

std::string normalization_to_json(const NormalizationSpec& spec) {
  nlohmann::json ranges = nlohmann::json::array();
  const auto& names = feature_column_names();
  for (std::size_t f = 0; f < kFeatureCount; ++f) {
    ranges.push_back({{"feature", names[f]},
                      {"min", spec.ranges[f].first},
                      {"max", spec.ranges[f].second}});
  }
  return nlohmann::json{{"ranges", ranges}}.dump(2);
}

NormalizationSpec normalization_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& ranges = j.at("ranges");
    if (ranges.size() != kFeatureCount)
      fail(Errc::MissingSpec, "normalization spec must cover all 20 features");
    NormalizationSpec spec;
    const auto& names = feature_column_names();
    for (std::size_t f = 0; f < kFeatureCount; ++f) {
      const auto& r = ranges.at(f);
      if (r.at("feature").get<std::string>() != names[f])
        fail(Errc::MissingSpec, "normalization spec feature order mismatch");
      spec.ranges[f] = {r.at("min").get<double>(), r.at("max").get<double>()};
      if (spec.ranges[f].first > spec.ranges[f].second)
        fail(Errc::Parse, "normalization spec has min > max");
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::Parse, std::string("bad normalization JSON: ") + e.what());
  }
}

void save_normalization_file(const std::string& path, const NormalizationSpec& spec) {
  std::ofstream out(path);
  if (!out) fail(Errc::Io, "cannot write normalization spec: " + path);
  out << normalization_to_json(spec) << '\n';
}

NormalizationSpec load_normalization_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open normalization spec: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return normalization_from_json(text);
}

std::vector<ManifestEntry> write_image_set(const std::string& dir,
                                           std::span<const FlowImage> images,
                                           const std::string& manifest_path) {
  std::filesystem::create_directories(dir);
  std::vector<ManifestEntry> manifest;
  manifest.reserve(images.size());
  std::size_t benign_idx = 0, anomaly_idx = 0;
  for (const auto& img : images) {
    const bool benign = img.label == Label::Benign;
    const std::size_t idx = benign ? benign_idx++ : anomaly_idx++;
    std::string name = std::string(benign ? "benign" : "anomaly") + "_" + std::to_string(idx) + ".png";
    const std::string path = (std::filesystem::path(dir) / name).string();
    write_png_rgb8(path, img.pixels.data(), kImageWidth, kImageHeight);
    manifest.push_back({path, img.label, img.first_row_index});
  }
  std::ofstream out(manifest_path);
  if (!out) fail(Errc::Io, "cannot write manifest: " + manifest_path);
  out << "path,label,first_row_index\n";
  for (const auto& e : manifest)
    out << e.path << ',' << label_name(e.label) << ',' << e.first_row_index << '\n';
  return manifest;
}

std::vector<ManifestEntry> read_manifest(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) fail(Errc::Io, "cannot open manifest: " + manifest_path);
  std::string line;
  if (!std::getline(in, line)) fail(Errc::EmptyInput, "empty manifest: " + manifest_path);
  std::vector<ManifestEntry> entries;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 3) fail(Errc::Parse, "bad manifest row: " + line);
    ManifestEntry e;
    e.path = cells[0];
    e.label = label_from_string(cells[1]);
    e.first_row_index = std::stoull(cells[2]);
    entries.push_back(std::move(e));
  }
  return entries;
}

FlowImage load_flow_image(const ManifestEntry& entry) {
  const PngImage png = read_png_rgb8(entry.path);
  if (png.width != kImageWidth || png.height != kImageHeight ||
      png.pixels.size() != kImageBytes)
    fail(Errc::ShapeMismatch, "image is not 100x100x3: " + entry.path);
  FlowImage img;
  std::copy(png.pixels.begin(), png.pixels.end(), img.pixels.begin());
  img.label = entry.label;
  img.first_row_index = entry.first_row_index;
  return img;
}

}  // namespace flowsentry
