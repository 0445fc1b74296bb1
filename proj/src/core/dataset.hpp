#pragma once

#include <span>
#include <vector>

#include "core/cnn.hpp"
#include "core/image_codec.hpp"
#include "core/types.hpp"

namespace flowsentry {

/// Image corpus built from labeled feature rows without leakage: rows are
/// grouped into 1500-row images per label, images are split first, and the
/// normalization spec is learned from the training images' source rows only.
struct ImageDataset {
  std::vector<FlowImage> images;  // benign groups first, then anomaly groups
  NormalizationSpec spec;
  DatasetSplit split;
};

ImageDataset build_image_dataset(std::span<const FeatureVector> benign_rows,
                                 std::span<const FeatureVector> anomaly_rows, double train_frac,
                                 double val_frac, double test_frac, std::uint64_t seed);

}  // namespace flowsentry
