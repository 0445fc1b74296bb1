#include "core/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace flowsentry {

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  t.shape = std::move(shape);
  std::size_t n = 1;
  for (int d : t.shape) n *= static_cast<std::size_t>(d);
  t.data.assign(n, 0.0);
  return t;
}

namespace {

inline double snap_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

void snap_tensor(Tensor& t) {
  for (auto& v : t.data) v = snap_f32(v);
}

// im2col for a 3x3 kernel, stride 1, pad 1: col[(c*9 + ky*3 + kx)*HW + y*W + x]
// = in[c][y+ky-1][x+kx-1], zero outside. col must hold C*9*H*W doubles.
void im2col_3x3(const double* in, int C, int H, int W, double* col) {
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  std::fill(col, col + static_cast<std::size_t>(C) * 9 * hw, 0.0);
  for (int c = 0; c < C; ++c) {
    const double* chan = in + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        double* dst = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        const int x0 = std::max(0, 1 - kx);          // first valid output x
        const int x1 = W - 1 - std::max(0, kx - 1);  // last valid output x
        const int len = x1 - x0 + 1;
        if (len <= 0) continue;
        for (int y = 0; y < H; ++y) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= H) continue;
          std::memcpy(dst + static_cast<std::size_t>(y) * W + x0,
                      chan + static_cast<std::size_t>(iy) * W + x0 + (kx - 1),
                      static_cast<std::size_t>(len) * sizeof(double));
        }
      }
    }
  }
}

// Scatter-add transpose of im2col_3x3.
void col2im_3x3(const double* col, int C, int H, int W, double* in_grad) {
  const std::size_t hw = static_cast<std::size_t>(H) * W;
  std::fill(in_grad, in_grad + static_cast<std::size_t>(C) * hw, 0.0);
  for (int c = 0; c < C; ++c) {
    double* chan = in_grad + static_cast<std::size_t>(c) * hw;
    for (int ky = 0; ky < 3; ++ky) {
      for (int kx = 0; kx < 3; ++kx) {
        const double* src = col + (static_cast<std::size_t>(c) * 9 + ky * 3 + kx) * hw;
        const int x0 = std::max(0, 1 - kx);
        const int x1 = W - 1 - std::max(0, kx - 1);
        if (x1 < x0) continue;
        for (int y = 0; y < H; ++y) {
          const int iy = y + ky - 1;
          if (iy < 0 || iy >= H) continue;
          const double* s = src + static_cast<std::size_t>(y) * W + x0;
          double* d = chan + static_cast<std::size_t>(iy) * W + x0 + (kx - 1);
          for (int x = 0; x <= x1 - x0; ++x) d[x] += s[x];
        }
      }
    }
  }
}

// z[oc][i] = b[oc] + sum_j w[oc][j] * col[j][i]
void conv_gemm_forward(const double* w, const double* b, const double* col, int oc_n, int j_n,
                       std::size_t hw, double* z) {
  for (int oc = 0; oc < oc_n; ++oc) {
    double* zrow = z + static_cast<std::size_t>(oc) * hw;
    std::fill(zrow, zrow + hw, b[oc]);
    const double* wrow = w + static_cast<std::size_t>(oc) * j_n;
    for (int j = 0; j < j_n; ++j) {
      const double wj = wrow[j];
      if (wj == 0.0) continue;
      const double* crow = col + static_cast<std::size_t>(j) * hw;
      for (std::size_t i = 0; i < hw; ++i) zrow[i] += wj * crow[i];
    }
  }
}

void relu_inplace(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    if (x[i] < 0.0) x[i] = 0.0;
}

// 2x2 max pooling, stride 2; argmax stores the flat input index per output cell.
void maxpool2_forward(const double* in, int C, int H, int W, double* out, int* argmax) {
  const int oh = H / 2, ow = W / 2;
  for (int c = 0; c < C; ++c) {
    const double* chan = in + static_cast<std::size_t>(c) * H * W;
    double* orow = out + static_cast<std::size_t>(c) * oh * ow;
    int* arow = argmax + static_cast<std::size_t>(c) * oh * ow;
    for (int y = 0; y < oh; ++y) {
      for (int x = 0; x < ow; ++x) {
        const int base = (2 * y) * W + 2 * x;
        int best = base;
        double bv = chan[base];
        const int cands[3] = {base + 1, base + W, base + W + 1};
        for (int k = 0; k < 3; ++k) {
          if (chan[cands[k]] > bv) {
            bv = chan[cands[k]];
            best = cands[k];
          }
        }
        orow[y * ow + x] = bv;
        arow[y * ow + x] = best;
      }
    }
  }
}

struct ForwardCache {
  int H = 0, W = 0;          // input spatial dims
  int H2 = 0, W2 = 0;        // after pool1
  int H4 = 0, W4 = 0;        // after pool2
  std::vector<double> col1;  // 27 x H*W
  std::vector<double> a1;    // 16 x H*W (post-ReLU)
  std::vector<double> p1;    // 16 x H2*W2
  std::vector<int> arg1;
  std::vector<double> col2;  // 144 x H2*W2
  std::vector<double> a2;    // 32 x H2*W2 (post-ReLU)
  std::vector<double> p2;    // 32 x H4*W4
  std::vector<int> arg2;
  std::array<double, 32> gap{};
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};
};

void check_input_shape(const Tensor& input) {
  if (input.shape.size() != 3 || input.shape[0] != kImageChannels)
    fail(Errc::ShapeMismatch, "input must be {3, H, W}");
  const int h = input.shape[1], w = input.shape[2];
  if (h < 4 || w < 4 || h % 4 != 0 || w % 4 != 0)
    fail(Errc::ShapeMismatch, "input H and W must be multiples of 4");
}

void run_forward(const CnnModel& m, const Tensor& input, ForwardCache& c) {
  check_input_shape(input);
  c.H = input.shape[1];
  c.W = input.shape[2];
  c.H2 = c.H / 2;
  c.W2 = c.W / 2;
  c.H4 = c.H2 / 2;
  c.W4 = c.W2 / 2;
  const std::size_t hw = static_cast<std::size_t>(c.H) * c.W;
  const std::size_t hw2 = static_cast<std::size_t>(c.H2) * c.W2;
  const std::size_t hw4 = static_cast<std::size_t>(c.H4) * c.W4;

  c.col1.resize(27 * hw);
  im2col_3x3(input.data.data(), 3, c.H, c.W, c.col1.data());
  c.a1.resize(16 * hw);
  conv_gemm_forward(m.conv1.w.data.data(), m.conv1.b.data.data(), c.col1.data(), 16, 27, hw,
                    c.a1.data());
  relu_inplace(c.a1.data(), c.a1.size());

  c.p1.resize(16 * hw2);
  c.arg1.resize(16 * hw2);
  maxpool2_forward(c.a1.data(), 16, c.H, c.W, c.p1.data(), c.arg1.data());

  c.col2.resize(144 * hw2);
  im2col_3x3(c.p1.data(), 16, c.H2, c.W2, c.col2.data());
  c.a2.resize(32 * hw2);
  conv_gemm_forward(m.conv2.w.data.data(), m.conv2.b.data.data(), c.col2.data(), 32, 144, hw2,
                    c.a2.data());
  relu_inplace(c.a2.data(), c.a2.size());

  c.p2.resize(32 * hw4);
  c.arg2.resize(32 * hw4);
  maxpool2_forward(c.a2.data(), 32, c.H2, c.W2, c.p2.data(), c.arg2.data());

  for (int ch = 0; ch < 32; ++ch) {
    double sum = 0;
    const double* row = c.p2.data() + static_cast<std::size_t>(ch) * hw4;
    for (std::size_t i = 0; i < hw4; ++i) sum += row[i];
    c.gap[static_cast<std::size_t>(ch)] = sum / static_cast<double>(hw4);
  }

  for (int o = 0; o < 2; ++o) {
    double z = m.fc.b.data[static_cast<std::size_t>(o)];
    for (int i = 0; i < 32; ++i)
      z += m.fc.w.data[static_cast<std::size_t>(o) * 32 + i] * c.gap[static_cast<std::size_t>(i)];
    c.logits[static_cast<std::size_t>(o)] = z;
  }

  const double mx = std::max(c.logits[0], c.logits[1]);
  const double e0 = std::exp(c.logits[0] - mx), e1 = std::exp(c.logits[1] - mx);
  c.probs[0] = e0 / (e0 + e1);
  c.probs[1] = e1 / (e0 + e1);
}

// Accumulates one sample's gradients; dlogits already includes the batch mean factor.
void run_backward(const CnnModel& m, const Tensor& input, const ForwardCache& c,
                  const std::array<double, 2>& dlogits, Gradients& g) {
  const std::size_t hw = static_cast<std::size_t>(c.H) * c.W;
  const std::size_t hw2 = static_cast<std::size_t>(c.H2) * c.W2;
  const std::size_t hw4 = static_cast<std::size_t>(c.H4) * c.W4;

  std::array<double, 32> dgap{};
  for (int o = 0; o < 2; ++o) {
    g.fc_b.data[static_cast<std::size_t>(o)] += dlogits[static_cast<std::size_t>(o)];
    for (int i = 0; i < 32; ++i) {
      g.fc_w.data[static_cast<std::size_t>(o) * 32 + i] +=
          dlogits[static_cast<std::size_t>(o)] * c.gap[static_cast<std::size_t>(i)];
      dgap[static_cast<std::size_t>(i)] +=
          m.fc.w.data[static_cast<std::size_t>(o) * 32 + i] * dlogits[static_cast<std::size_t>(o)];
    }
  }

  // GAP spreads each channel gradient uniformly; then un-pool through arg2 and
  // gate by the ReLU mask to reach conv2 pre-activations.
  std::vector<double> dz2(32 * hw2, 0.0);
  for (int ch = 0; ch < 32; ++ch) {
    const double dv = dgap[static_cast<std::size_t>(ch)] / static_cast<double>(hw4);
    const int* arow = c.arg2.data() + static_cast<std::size_t>(ch) * hw4;
    const double* a2row = c.a2.data() + static_cast<std::size_t>(ch) * hw2;
    double* drow = dz2.data() + static_cast<std::size_t>(ch) * hw2;
    for (std::size_t i = 0; i < hw4; ++i) {
      const int src = arow[i];
      if (a2row[src] > 0.0) drow[src] += dv;
    }
  }

  // conv2: dW += dz2 . col2^T ; dcol2 = W^T . dz2 ; db += row sums
  std::vector<double> dcol2(144 * hw2, 0.0);
  for (int oc = 0; oc < 32; ++oc) {
    const double* drow = dz2.data() + static_cast<std::size_t>(oc) * hw2;
    double db = 0;
    for (std::size_t i = 0; i < hw2; ++i) db += drow[i];
    g.conv2_b.data[static_cast<std::size_t>(oc)] += db;
    for (int j = 0; j < 144; ++j) {
      const double* crow = c.col2.data() + static_cast<std::size_t>(j) * hw2;
      double* dcrow = dcol2.data() + static_cast<std::size_t>(j) * hw2;
      const double wj = m.conv2.w.data[static_cast<std::size_t>(oc) * 144 + j];
      double dw = 0;
      for (std::size_t i = 0; i < hw2; ++i) {
        dw += drow[i] * crow[i];
        dcrow[i] += wj * drow[i];
      }
      g.conv2_w.data[static_cast<std::size_t>(oc) * 144 + j] += dw;
    }
  }

  std::vector<double> dp1(16 * hw2, 0.0);
  col2im_3x3(dcol2.data(), 16, c.H2, c.W2, dp1.data());

  std::vector<double> dz1(16 * hw, 0.0);
  for (int ch = 0; ch < 16; ++ch) {
    const int* arow = c.arg1.data() + static_cast<std::size_t>(ch) * hw2;
    const double* dprow = dp1.data() + static_cast<std::size_t>(ch) * hw2;
    const double* a1row = c.a1.data() + static_cast<std::size_t>(ch) * hw;
    double* drow = dz1.data() + static_cast<std::size_t>(ch) * hw;
    for (std::size_t i = 0; i < hw2; ++i) {
      const int src = arow[i];
      if (a1row[src] > 0.0) drow[src] += dprow[i];
    }
  }

  for (int oc = 0; oc < 16; ++oc) {
    const double* drow = dz1.data() + static_cast<std::size_t>(oc) * hw;
    double db = 0;
    for (std::size_t i = 0; i < hw; ++i) db += drow[i];
    g.conv1_b.data[static_cast<std::size_t>(oc)] += db;
    for (int j = 0; j < 27; ++j) {
      const double* crow = c.col1.data() + static_cast<std::size_t>(j) * hw;
      double dw = 0;
      for (std::size_t i = 0; i < hw; ++i) dw += drow[i] * crow[i];
      g.conv1_w.data[static_cast<std::size_t>(oc) * 27 + j] += dw;
    }
  }
  (void)input;
}

Gradients make_gradients() {
  Gradients g;
  g.conv1_w = Tensor::zeros({16, 3, 3, 3});
  g.conv1_b = Tensor::zeros({16});
  g.conv2_w = Tensor::zeros({32, 16, 3, 3});
  g.conv2_b = Tensor::zeros({32});
  g.fc_w = Tensor::zeros({2, 32});
  g.fc_b = Tensor::zeros({2});
  return g;
}

}  // namespace

CnnModel CnnModel::init(std::uint64_t seed) {
  CnnModel m;
  m.conv1 = {3, 16, Tensor::zeros({16, 3, 3, 3}), Tensor::zeros({16})};
  m.conv2 = {16, 32, Tensor::zeros({32, 16, 3, 3}), Tensor::zeros({32})};
  m.fc = {32, 2, Tensor::zeros({2, 32}), Tensor::zeros({2})};

  Rng rng(seed);
  const double s1 = std::sqrt(2.0 / (3.0 * 9.0));
  for (auto& v : m.conv1.w.data) v = snap_f32(rng.normal() * s1);
  const double s2 = std::sqrt(2.0 / (16.0 * 9.0));
  for (auto& v : m.conv2.w.data) v = snap_f32(rng.normal() * s2);
  // dense layer deliberately zero: symmetric logits, score 0.5 out of the box
  return m;
}

std::vector<CnnModel::ParamBlock> CnnModel::param_blocks() {
  return {
      {"conv1.w", &conv1.w}, {"conv1.b", &conv1.b}, {"conv2.w", &conv2.w},
      {"conv2.b", &conv2.b}, {"fc.w", &fc.w},       {"fc.b", &fc.b},
  };
}

std::vector<Tensor*> Gradients::blocks() {
  return {&conv1_w, &conv1_b, &conv2_w, &conv2_b, &fc_w, &fc_b};
}

Tensor pixels_to_input(std::span<const unsigned char> rgb, int height, int width) {
  if (rgb.size() != static_cast<std::size_t>(height) * width * kImageChannels)
    fail(Errc::ShapeMismatch, "pixel buffer does not match dimensions");
  Tensor t = Tensor::zeros({kImageChannels, height, width});
  const std::size_t hw = static_cast<std::size_t>(height) * width;
  for (std::size_t i = 0; i < hw; ++i) {
    for (int ch = 0; ch < kImageChannels; ++ch)
      t.data[static_cast<std::size_t>(ch) * hw + i] =
          static_cast<double>(rgb[i * kImageChannels + static_cast<std::size_t>(ch)]) / 255.0;
  }
  return t;
}

Tensor image_to_input(const FlowImage& image) {
  return pixels_to_input(std::span<const unsigned char>(image.pixels.data(), image.pixels.size()),
                         kImageHeight, kImageWidth);
}

std::array<double, 2> forward_probs(const CnnModel& model, const Tensor& input) {
  ForwardCache cache;
  run_forward(model, input, cache);
  return cache.probs;
}

Prediction forward(const CnnModel& model, const FlowImage& image, double threshold) {
  const auto probs = forward_probs(model, image_to_input(image));
  Prediction p;
  p.anomaly_score = probs[kClassAnomaly];
  p.predicted = p.anomaly_score >= threshold ? Label::Anomaly : Label::Benign;
  return p;
}

std::vector<Prediction> predict_batch(const CnnModel& model, std::span<const FlowImage> images,
                                      double threshold) {
  std::vector<Prediction> out;
  out.reserve(images.size());
  for (const auto& img : images) out.push_back(forward(model, img, threshold));
  return out;
}

double loss_and_gradients(const CnnModel& model, std::span<const Tensor> inputs,
                          std::span<const int> labels, Gradients& grads) {
  if (inputs.empty()) fail(Errc::EmptyInput, "empty batch");
  if (inputs.size() != labels.size()) fail(Errc::LengthMismatch, "batch/label size mismatch");
  grads = make_gradients();
  const double inv_n = 1.0 / static_cast<double>(inputs.size());
  double loss = 0;
  ForwardCache cache;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    const int y = labels[s];
    if (y != kClassBenign && y != kClassAnomaly) fail(Errc::InvalidArgument, "label out of range");
    run_forward(model, inputs[s], cache);
    loss += -std::log(std::max(cache.probs[static_cast<std::size_t>(y)], 1e-300)) * inv_n;
    std::array<double, 2> dlogits = cache.probs;
    dlogits[static_cast<std::size_t>(y)] -= 1.0;
    dlogits[0] *= inv_n;
    dlogits[1] *= inv_n;
    run_backward(model, inputs[s], cache, dlogits, grads);
  }
  return loss;
}

double batch_loss(const CnnModel& model, std::span<const Tensor> inputs,
                  std::span<const int> labels) {
  if (inputs.empty()) fail(Errc::EmptyInput, "empty batch");
  if (inputs.size() != labels.size()) fail(Errc::LengthMismatch, "batch/label size mismatch");
  double loss = 0;
  ForwardCache cache;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    run_forward(model, inputs[s], cache);
    loss += -std::log(std::max(cache.probs[static_cast<std::size_t>(labels[s])], 1e-300));
  }
  return loss / static_cast<double>(inputs.size());
}

DatasetSplit stratified_split(std::span<const Label> labels, double train_frac, double val_frac,
                              double test_frac, std::uint64_t seed) {
  if (std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
    fail(Errc::InvalidArgument, "split fractions must sum to 1");
  if (train_frac < 0 || val_frac < 0 || test_frac < 0)
    fail(Errc::InvalidArgument, "split fractions must be non-negative");

  DatasetSplit split;
  Rng rng = Rng(seed).derive(0x591f7);
  for (const Label cls : {Label::Benign, Label::Anomaly, Label::Unlabeled}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    if (idx.empty()) continue;
    for (std::size_t i = idx.size() - 1; i > 0; --i)
      std::swap(idx[i], idx[static_cast<std::size_t>(
                            rng.uniform_int(0, static_cast<std::int64_t>(i)))]);
    const auto n = idx.size();
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(n)));
    auto n_val = static_cast<std::size_t>(std::llround(val_frac * static_cast<double>(n)));
    n_val = std::min(n_val, n - std::min(n, n_train));
    for (std::size_t i = 0; i < n; ++i) {
      if (i < n_train)
        split.train.push_back(idx[i]);
      else if (i < n_train + n_val)
        split.val.push_back(idx[i]);
      else
        split.test.push_back(idx[i]);
    }
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.val.begin(), split.val.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

struct ParamVec {
  std::vector<Tensor*> params;
  std::vector<Tensor> velocity;
};

CnnModel clone_model(const CnnModel& m) { return m; }

double validation_pass(const CnnModel& model, std::span<const FlowImage> images,
                       std::span<const std::size_t> idx, double* acc_out) {
  double loss = 0;
  std::size_t correct = 0;
  ForwardCache cache;
  for (const std::size_t i : idx) {
    const Tensor input = image_to_input(images[i]);
    run_forward(model, input, cache);
    const int y = images[i].label == Label::Anomaly ? kClassAnomaly : kClassBenign;
    loss += -std::log(std::max(cache.probs[static_cast<std::size_t>(y)], 1e-300));
    const int pred = cache.probs[kClassAnomaly] >= 0.5 ? kClassAnomaly : kClassBenign;
    if (pred == y) ++correct;
  }
  if (acc_out)
    *acc_out = idx.empty() ? 0.0 : static_cast<double>(correct) / static_cast<double>(idx.size());
  return idx.empty() ? 0.0 : loss / static_cast<double>(idx.size());
}

}  // namespace

TrainResult train(std::span<const FlowImage> images, const TrainConfig& config) {
  std::vector<Label> labels;
  labels.reserve(images.size());
  for (const auto& img : images) labels.push_back(img.label);
  const DatasetSplit split = stratified_split(labels, config.train_frac, config.val_frac,
                                              config.test_frac, config.seed);
  return train(images, split, config);
}

TrainResult train(std::span<const FlowImage> images, const DatasetSplit& split,
                  const TrainConfig& config) {
  if (config.epochs < 1 || config.batch_size < 1)
    fail(Errc::InvalidArgument, "epochs and batch size must be positive");
  bool has_benign = false, has_anomaly = false;
  for (const std::size_t i : split.train) {
    has_benign |= images[i].label == Label::Benign;
    has_anomaly |= images[i].label == Label::Anomaly;
  }
  if (!has_benign || !has_anomaly)
    fail(Errc::SingleClassDataset, "train split must contain both classes");

  TrainResult result;
  result.split = split;
  CnnModel model = CnnModel::init(config.seed);

  Gradients velocity = make_gradients();
  Rng shuffle_rng = Rng(config.seed).derive(0x7ab1e5);

  std::vector<std::size_t> order(split.train.begin(), split.train.end());
  CnnModel best = model;
  double best_acc = -1.0;
  int best_epoch = 0;

  std::vector<Tensor> batch_inputs;
  std::vector<int> batch_labels;
  Gradients grads = make_gradients();

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    for (std::size_t i = order.size() - 1; i > 0; --i)
      std::swap(order[i], order[static_cast<std::size_t>(
                              shuffle_rng.uniform_int(0, static_cast<std::int64_t>(i)))]);

    double epoch_loss = 0;
    std::size_t seen = 0;
    for (std::size_t pos = 0; pos < order.size(); pos += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), pos + static_cast<std::size_t>(config.batch_size));
      batch_inputs.clear();
      batch_labels.clear();
      for (std::size_t i = pos; i < end; ++i) {
        batch_inputs.push_back(image_to_input(images[order[i]]));
        batch_labels.push_back(images[order[i]].label == Label::Anomaly ? kClassAnomaly
                                                                        : kClassBenign);
      }
      const double loss = loss_and_gradients(model, batch_inputs, batch_labels, grads);
      epoch_loss += loss * static_cast<double>(batch_inputs.size());
      seen += batch_inputs.size();

      auto params = model.param_blocks();
      auto gblocks = grads.blocks();
      auto vblocks = velocity.blocks();
      for (std::size_t b = 0; b < params.size(); ++b) {
        Tensor& p = *params[b].tensor;
        Tensor& g = *gblocks[b];
        Tensor& v = *vblocks[b];
        for (std::size_t i = 0; i < p.data.size(); ++i) {
          v.data[i] = config.momentum * v.data[i] - config.learning_rate * g.data[i];
          p.data[i] = snap_f32(p.data[i] + v.data[i]);
        }
      }
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = seen ? epoch_loss / static_cast<double>(seen) : 0.0;
    log.val_loss = validation_pass(model, images, split.val, &log.val_acc);
    result.log.push_back(log);

    if (log.val_acc > best_acc) {
      best_acc = log.val_acc;
      best = clone_model(model);
      best_epoch = epoch;
    }
    if (config.early_stop_val_acc > 0.0 && log.val_acc >= config.early_stop_val_acc) break;
  }

  result.model = std::move(best);
  result.best_epoch = best_epoch;
  return result;
}

std::string training_log_csv_header() { return "epoch,train_loss,val_loss,val_acc"; }

std::string training_log_csv_row(const EpochLog& log) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f", log.epoch, log.train_loss, log.val_loss,
                log.val_acc);
  return buf;
}

namespace {

constexpr char kCheckpointMagic[8] = {'F', 'S', 'N', 'T', 'C', 'K', 'P', '1'};

nlohmann::json arch_descriptor() {
  return nlohmann::json{
      {"input_channels", 3},
      {"layers",
       {{{"type", "conv3x3"}, {"in", 3}, {"out", 16}, {"pad", 1}},
        {{"type", "relu"}},
        {{"type", "maxpool2"}},
        {{"type", "conv3x3"}, {"in", 16}, {"out", 32}, {"pad", 1}},
        {{"type", "relu"}},
        {{"type", "maxpool2"}},
        {{"type", "gap"}},
        {{"type", "dense"}, {"in", 32}, {"out", 2}},
        {{"type", "softmax"}}}},
  };
}

void write_u32(std::ostream& out, std::uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t read_u32(std::istream& in) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const CnnModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::Io, "cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, 8);
  const std::string arch = arch_descriptor().dump();
  write_u32(out, static_cast<std::uint32_t>(arch.size()));
  out.write(arch.data(), static_cast<std::streamsize>(arch.size()));

  auto blocks = const_cast<CnnModel&>(model).param_blocks();
  write_u32(out, static_cast<std::uint32_t>(blocks.size()));
  for (const auto& block : blocks) {
    write_u32(out, static_cast<std::uint32_t>(block.name.size()));
    out.write(block.name.data(), static_cast<std::streamsize>(block.name.size()));
    write_u32(out, static_cast<std::uint32_t>(block.tensor->shape.size()));
    for (int d : block.tensor->shape) write_u32(out, static_cast<std::uint32_t>(d));
    for (double v : block.tensor->data) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), 4);
    }
  }
  if (!out) fail(Errc::Io, "short write on checkpoint: " + path);
}

CnnModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::Io, "cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (in.gcount() != 8 || std::memcmp(magic, kCheckpointMagic, 8) != 0)
    fail(Errc::Parse, "bad checkpoint magic: " + path);

  const std::uint32_t arch_len = read_u32(in);
  if (arch_len > 1 << 20) fail(Errc::Parse, "implausible checkpoint architecture block");
  std::string arch(arch_len, '\0');
  in.read(arch.data(), arch_len);
  try {
    if (nlohmann::json::parse(arch) != arch_descriptor())
      fail(Errc::ShapeMismatch, "checkpoint architecture does not match this build");
  } catch (const nlohmann::json::exception&) {
    fail(Errc::Parse, "bad checkpoint architecture descriptor");
  }

  CnnModel model = CnnModel::init(0);
  auto blocks = model.param_blocks();
  const std::uint32_t n_tensors = read_u32(in);
  if (n_tensors != blocks.size()) fail(Errc::ShapeMismatch, "unexpected checkpoint tensor count");
  for (auto& block : blocks) {
    const std::uint32_t name_len = read_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (name != block.name) fail(Errc::ShapeMismatch, "unexpected tensor name: " + name);
    const std::uint32_t ndim = read_u32(in);
    std::vector<int> dims(ndim);
    for (auto& d : dims) d = static_cast<int>(read_u32(in));
    if (dims != block.tensor->shape) fail(Errc::ShapeMismatch, "tensor shape mismatch: " + name);
    for (auto& v : block.tensor->data) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), 4);
      if (!std::isfinite(f)) fail(Errc::Parse, "non-finite parameter in checkpoint");
      v = static_cast<double>(f);
    }
  }
  if (!in) fail(Errc::Parse, "truncated checkpoint: " + path);
  return model;
}

}  // namespace flowsentry
