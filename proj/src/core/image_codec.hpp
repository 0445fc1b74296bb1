#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace flowsentry {

inline constexpr int kImageWidth = 100;
inline constexpr int kImageHeight = 100;
inline constexpr int kImageChannels = 3;
inline constexpr std::size_t kImageBytes = 30'000;
inline constexpr std::size_t kRowsPerImage = kImageBytes / kFeatureCount;  // 1500

/// Per-feature (min, max) learned from training rows; values outside the
/// range clamp at encode time.
struct NormalizationSpec {
  std::array<std::pair<double, double>, kFeatureCount> ranges{};
};

struct FlowImage {
  std::array<unsigned char, kImageBytes> pixels{};  // row-major RGB interleaved
  Label label = Label::Unlabeled;
  std::uint64_t first_row_index = 0;
  std::uint64_t row_count = kRowsPerImage;
};

/// Column-wise min/max over the rows. Throws EmptyInput.
NormalizationSpec learn_normalization(std::span<const FeatureVector> rows);

/// Byte for one value: round(255 * clamp((v-min)/(max-min), 0, 1)), 0 when
/// min == max.
unsigned char encode_byte(double v, double min, double max);

/// Packs rows into images: bytes fill row-major, channels interleaved in
/// feature order; every full group of 1500 rows yields one image and a
/// trailing shorter group is discarded. All rows must share one label
/// (MixedLabels otherwise). base_row_index seeds the recorded source spans.
std::vector<FlowImage> encode_images(std::span<const FeatureVector> rows,
                                     const NormalizationSpec& spec,
                                     std::uint64_t base_row_index = 0);

/// Inverse of the byte mapping up to quantization: byte b maps back to
/// min + (max-min) * b / 255.
std::vector<FeatureVector> decode_image(const FlowImage& image, const NormalizationSpec& spec);

std::string normalization_to_json(const NormalizationSpec& spec);
NormalizationSpec normalization_from_json(const std::string& text);
void save_normalization_file(const std::string& path, const NormalizationSpec& spec);
NormalizationSpec load_normalization_file(const std::string& path);

struct ManifestEntry {
  std::string path;
  Label label = Label::Unlabeled;
  std::uint64_t first_row_index = 0;
};

/// Writes images as <label>_<index>.png under dir plus a manifest CSV
/// (path,label,first_row_index). Returns the manifest entries in write order.
std::vector<ManifestEntry> write_image_set(const std::string& dir,
                                           std::span<const FlowImage> images,
                                           const std::string& manifest_path);

std::vector<ManifestEntry> read_manifest(const std::string& manifest_path);
FlowImage load_flow_image(const ManifestEntry& entry);

}  // namespace flowsentry
