#pragma once

// Independent brute-force oracles used by the unit and acceptance suites.
// These recompute expected values with plain loops, deliberately avoiding the
// library's own code paths.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "core/cnn.hpp"
#include "core/flow_meter.hpp"
#include "core/types.hpp"

namespace oracle {

struct Stats {
  double mean = 0, stddev = 0, max = 0, min = 0, total = 0;
};

inline Stats stats_of_diffs(const std::vector<std::int64_t>& ts) {
  Stats s;
  if (ts.size() < 2) return s;
  std::vector<double> diffs;
  for (std::size_t i = 1; i < ts.size(); ++i)
    diffs.push_back(static_cast<double>(ts[i] - ts[i - 1]));
  double sum = 0;
  for (double d : diffs) sum += d;
  s.total = sum;
  s.mean = sum / static_cast<double>(diffs.size());
  s.max = *std::max_element(diffs.begin(), diffs.end());
  s.min = *std::min_element(diffs.begin(), diffs.end());
  if (diffs.size() >= 2) {
    double ss = 0;
    for (double d : diffs) ss += (d - s.mean) * (d - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(diffs.size() - 1));
  }
  return s;
}

/// Recomputes all 20 features of a flow record from scratch.
inline std::array<double, 20> naive_features(const flowsentry::FlowRecord& flow) {
  std::vector<std::int64_t> merged(flow.fwd_timestamps);
  merged.insert(merged.end(), flow.bwd_timestamps.begin(), flow.bwd_timestamps.end());
  std::sort(merged.begin(), merged.end());

  std::array<double, 20> f{};
  const double duration =
      merged.empty() ? 0.0 : static_cast<double>(merged.back() - merged.front());
  f[0] = flow.key.dst_port;
  f[1] = flow.key.protocol;
  f[2] = duration;
  f[3] = static_cast<double>(flow.fwd_timestamps.size());
  f[4] = static_cast<double>(flow.bwd_timestamps.size());
  f[5] = duration > 0 ? static_cast<double>(merged.size()) / (duration / 1e6) : 0.0;
  const Stats flow_s = stats_of_diffs(merged);
  f[6] = flow_s.mean;
  f[7] = flow_s.stddev;
  f[8] = flow_s.max;
  f[9] = flow_s.min;
  f[10] = flow_s.total;
  const Stats fwd_s = stats_of_diffs(flow.fwd_timestamps);
  f[11] = fwd_s.mean;
  f[12] = fwd_s.stddev;
  f[13] = fwd_s.max;
  f[14] = fwd_s.min;
  const Stats bwd_s = stats_of_diffs(flow.bwd_timestamps);
  f[15] = bwd_s.total;
  f[16] = bwd_s.mean;
  f[17] = bwd_s.stddev;
  f[18] = bwd_s.max;
  f[19] = bwd_s.min;
  return f;
}

/// Plain nested-loop CNN forward (no im2col), double precision throughout.
inline std::array<double, 2> naive_forward(const flowsentry::CnnModel& m,
                                           const flowsentry::Tensor& input) {
  const int H = input.shape[1], W = input.shape[2];
  auto conv = [](const std::vector<double>& in, int C, int h, int w,
                 const flowsentry::Tensor& weight, const flowsentry::Tensor& bias, int OC) {
    std::vector<double> out(static_cast<std::size_t>(OC) * h * w, 0.0);
    for (int oc = 0; oc < OC; ++oc) {
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          double acc = bias.data[static_cast<std::size_t>(oc)];
          for (int c = 0; c < C; ++c) {
            for (int ky = 0; ky < 3; ++ky) {
              for (int kx = 0; kx < 3; ++kx) {
                const int iy = y + ky - 1, ix = x + kx - 1;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += weight.data[((static_cast<std::size_t>(oc) * C + c) * 3 + ky) * 3 + kx] *
                       in[(static_cast<std::size_t>(c) * h + iy) * w + ix];
              }
            }
          }
          out[(static_cast<std::size_t>(oc) * h + y) * w + x] = acc;
        }
      }
    }
    return out;
  };
  auto relu = [](std::vector<double>& v) {
    for (auto& x : v) x = std::max(0.0, x);
  };
  auto pool = [](const std::vector<double>& in, int C, int h, int w) {
    std::vector<double> out(static_cast<std::size_t>(C) * (h / 2) * (w / 2));
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < h / 2; ++y)
        for (int x = 0; x < w / 2; ++x) {
          double best = -1e300;
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx)
              best = std::max(best, in[(static_cast<std::size_t>(c) * h + 2 * y + dy) * w +
                                       2 * x + dx]);
          out[(static_cast<std::size_t>(c) * (h / 2) + y) * (w / 2) + x] = best;
        }
    return out;
  };

  auto a1 = conv(input.data, 3, H, W, m.conv1.w, m.conv1.b, 16);
  relu(a1);
  auto p1 = pool(a1, 16, H, W);
  auto a2 = conv(p1, 16, H / 2, W / 2, m.conv2.w, m.conv2.b, 32);
  relu(a2);
  auto p2 = pool(a2, 32, H / 2, W / 2);

  const int hw4 = (H / 4) * (W / 4);
  std::array<double, 32> gap{};
  for (int c = 0; c < 32; ++c) {
    double sum = 0;
    for (int i = 0; i < hw4; ++i) sum += p2[static_cast<std::size_t>(c) * hw4 + i];
    gap[static_cast<std::size_t>(c)] = sum / hw4;
  }
  std::array<double, 2> logits{};
  for (int o = 0; o < 2; ++o) {
    logits[static_cast<std::size_t>(o)] = m.fc.b.data[static_cast<std::size_t>(o)];
    for (int i = 0; i < 32; ++i)
      logits[static_cast<std::size_t>(o)] +=
          m.fc.w.data[static_cast<std::size_t>(o) * 32 + i] * gap[static_cast<std::size_t>(i)];
  }
  const double mx = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - mx), e1 = std::exp(logits[1] - mx);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

struct Counts {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Brute-force counting with anomaly positive, prediction = score >= threshold.
inline Counts count_outcomes(std::span<const double> scores, std::span<const flowsentry::Label> truth,
                             double threshold) {
  Counts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] >= threshold;
    const bool pos = truth[i] == flowsentry::Label::Anomaly;
    if (pos && pred) ++c.tp;
    if (!pos && pred) ++c.fp;
    if (!pos && !pred) ++c.tn;
    if (pos && !pred) ++c.fn;
  }
  return c;
}

}  // namespace oracle
