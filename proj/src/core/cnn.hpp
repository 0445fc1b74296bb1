#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/image_codec.hpp"
#include "core/types.hpp"

namespace flowsentry {

// Class indices used by the classifier throughout.
inline constexpr int kClassBenign = 0;
inline constexpr int kClassAnomaly = 1;

struct Tensor {
  std::vector<double> data;
  std::vector<int> shape;

  static Tensor zeros(std::vector<int> shape);
  std::size_t size() const { return data.size(); }
};

struct ConvLayer {
  int in_ch = 0, out_ch = 0;  // 3x3 kernel, stride 1, pad 1
  Tensor w;                   // {out_ch, in_ch, 3, 3}
  Tensor b;                   // {out_ch}
};

struct DenseLayer {
  int in_dim = 0, out_dim = 0;
  Tensor w;  // {out_dim, in_dim}
  Tensor b;  // {out_dim}
};

// Fixed two-block architecture: conv 3->16, ReLU, 2x2 maxpool; conv 16->32,
// ReLU, 2x2 maxpool; global average pool; dense 32->2; softmax. Parameters
// are kept on the float32 grid (checkpoints store float32 exactly) while all
// arithmetic runs in double.
struct CnnModel {
  ConvLayer conv1, conv2;
  DenseLayer fc;

  /// Seeded He-normal conv weights; the dense layer starts at zero, so a
  /// fresh model scores exactly 0.5.
  static CnnModel init(std::uint64_t seed);

  struct ParamBlock {
    std::string name;
    Tensor* tensor;
  };
  std::vector<ParamBlock> param_blocks();
};

struct Prediction {
  double anomaly_score = 0.0;  // softmax probability of the Anomaly class
  Label predicted = Label::Benign;
};

/// Converts pixel bytes to the {3, H, W} [0,1]-scaled input layout.
Tensor image_to_input(const FlowImage& image);
Tensor pixels_to_input(std::span<const unsigned char> rgb, int height, int width);

/// Softmax class probabilities for one input. Input must be {3, H, W} with
/// H and W multiples of 4 (two pooling stages); ShapeMismatch otherwise.
std::array<double, 2> forward_probs(const CnnModel& model, const Tensor& input);

Prediction forward(const CnnModel& model, const FlowImage& image, double threshold = 0.5);

std::vector<Prediction> predict_batch(const CnnModel& model, std::span<const FlowImage> images,
                                      double threshold = 0.5);

struct Gradients {
  Tensor conv1_w, conv1_b, conv2_w, conv2_b, fc_w, fc_b;
  std::vector<Tensor*> blocks();  // same order as CnnModel::param_blocks()
};

/// Mean cross-entropy loss over the batch and its gradients with respect to
/// every parameter tensor. labels are class indices. Throws ShapeMismatch on
/// bad input shapes and EmptyInput on an empty batch.
double loss_and_gradients(const CnnModel& model, std::span<const Tensor> inputs,
                          std::span<const int> labels, Gradients& grads);

double batch_loss(const CnnModel& model, std::span<const Tensor> inputs,
                  std::span<const int> labels);

struct TrainConfig {
  std::uint64_t seed = 1;
  int epochs = 5;
  int batch_size = 16;
  double learning_rate = 0.01;
  double momentum = 0.9;
  double train_frac = 0.7;
  double val_frac = 0.2;
  double test_frac = 0.1;
  double early_stop_val_acc = 0.0;  // <= 0 disables early stopping
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct DatasetSplit {
  std::vector<std::size_t> train, val, test;
};

/// Seeded stratified split; fractions must sum to 1.
DatasetSplit stratified_split(std::span<const Label> labels, double train_frac, double val_frac,
                              double test_frac, std::uint64_t seed);

struct TrainResult {
  CnnModel model;  // best-validation checkpoint
  std::vector<EpochLog> log;
  int best_epoch = 0;
  DatasetSplit split;
};

/// Minibatch SGD with momentum, deterministic under the config seed. The
/// split is stratified by label; the train split must contain both classes
/// (SingleClassDataset otherwise).
TrainResult train(std::span<const FlowImage> images, const TrainConfig& config);
TrainResult train(std::span<const FlowImage> images, const DatasetSplit& split,
                  const TrainConfig& config);

std::string training_log_csv_header();
std::string training_log_csv_row(const EpochLog& log);

// Versioned binary checkpoint: magic, architecture descriptor, then
// little-endian float32 tensors.
void save_checkpoint(const std::string& path, const CnnModel& model);
CnnModel load_checkpoint(const std::string& path);

}  // namespace flowsentry
