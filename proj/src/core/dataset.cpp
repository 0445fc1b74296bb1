#include "core/dataset.hpp"

#include <algorithm>

#include "core/error.hpp"

namespace flowsentry {

ImageDataset build_image_dataset(std::span<const FeatureVector> benign_rows,
                                 std::span<const FeatureVector> anomaly_rows, double train_frac,
                                 double val_frac, double test_frac, std::uint64_t seed) {
  for (const auto& r : benign_rows)
    if (r.label != Label::Benign) fail(Errc::MixedLabels, "benign row stream carries other labels");
  for (const auto& r : anomaly_rows)
    if (r.label != Label::Anomaly)
      fail(Errc::MixedLabels, "anomaly row stream carries other labels");

  const std::size_t n_benign = benign_rows.size() / kRowsPerImage;
  const std::size_t n_anomaly = anomaly_rows.size() / kRowsPerImage;
  if (n_benign + n_anomaly == 0)
    fail(Errc::EmptyInput, "not enough rows for a single image (1500 per label needed)");

  std::vector<Label> labels;
  labels.reserve(n_benign + n_anomaly);
  labels.insert(labels.end(), n_benign, Label::Benign);
  labels.insert(labels.end(), n_anomaly, Label::Anomaly);

  ImageDataset ds;
  ds.split = stratified_split(labels, train_frac, val_frac, test_frac, seed);

  // Normalization ranges from training images' source rows only; everything
  // else clamps into the learned range at encode time.
  std::vector<FeatureVector> train_rows;
  train_rows.reserve(ds.split.train.size() * kRowsPerImage);
  for (const std::size_t img : ds.split.train) {
    const bool benign = img < n_benign;
    const std::size_t group = benign ? img : img - n_benign;
    const auto& rows = benign ? benign_rows : anomaly_rows;
    for (std::size_t r = 0; r < kRowsPerImage; ++r)
      train_rows.push_back(rows[group * kRowsPerImage + r]);
  }
  if (train_rows.empty()) fail(Errc::EmptyInput, "training split is empty");
  ds.spec = learn_normalization(train_rows);

  const auto benign_images =
      encode_images(benign_rows.first(n_benign * kRowsPerImage), ds.spec, 0);
  const auto anomaly_images =
      encode_images(anomaly_rows.first(n_anomaly * kRowsPerImage), ds.spec, 0);
  ds.images.reserve(n_benign + n_anomaly);
  ds.images.insert(ds.images.end(), benign_images.begin(), benign_images.end());
  ds.images.insert(ds.images.end(), anomaly_images.begin(), anomaly_images.end());
  return ds;
}

}  // namespace flowsentry
