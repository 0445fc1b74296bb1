#include "core/weibull.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numeric>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace flowsentry {

namespace {

constexpr double kShapeTol = 1e-9;
constexpr int kMaxIterations = 200;
constexpr double kShapeUpperBound = 1e6;

struct ProfileTerms {
  double g;       // profile equation value
  double gprime;  // its derivative, strictly positive
};

// Profile MLE equation in the shape k, on log-transformed samples:
//   g(k) = sum(x^k ln x)/sum(x^k) - 1/k - mean(ln x)
// evaluated with a max-shift for stability. g is strictly increasing in k.
ProfileTerms profile(const std::vector<double>& logs, double mean_log, double k) {
  const double ymax = *std::max_element(logs.begin(), logs.end());
  double s0 = 0, s1 = 0, s2 = 0;
  for (double y : logs) {
    const double w = std::exp(k * (y - ymax));
    s0 += w;
    s1 += w * y;
    s2 += w * y * y;
  }
  ProfileTerms t;
  t.g = s1 / s0 - 1.0 / k - mean_log;
  t.gprime = (s2 * s0 - s1 * s1) / (s0 * s0) + 1.0 / (k * k);
  return t;
}

}  // namespace

WeibullParams fit_weibull(std::span<const double> samples) {
  std::vector<double> logs;
  logs.reserve(samples.size());
  for (double x : samples) {
    if (x < 0) fail(Errc::InvalidArgument, "negative sample in Weibull fit");
    if (x > 0) logs.push_back(std::log(x));
  }
  if (logs.size() < kMinFitSamples)
    fail(Errc::TooFewSamples, "Weibull fit needs at least " + std::to_string(kMinFitSamples) +
                                  " positive samples, got " + std::to_string(logs.size()));

  const double mean_log =
      std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());

  // Method-of-moments start from the log variance: Var(ln X) = pi^2 / (6 k^2).
  double var_log = 0;
  for (double y : logs) var_log += (y - mean_log) * (y - mean_log);
  var_log /= static_cast<double>(logs.size());
  double k = var_log > 1e-300 ? M_PI / std::sqrt(6.0 * var_log) : kShapeUpperBound;
  k = std::clamp(k, 1e-3, kShapeUpperBound);

  double lo = 1e-6, hi = kShapeUpperBound;
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    const ProfileTerms t = profile(logs, mean_log, k);
    if (t.g < 0)
      lo = k;
    else
      hi = k;
    double next = k - t.g / t.gprime;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // bisection safeguard
    const double dk = std::abs(next - k);
    k = next;
    if (dk < kShapeTol) {
      if (k >= kShapeUpperBound * 0.99)
        throw NoConvergenceError("Weibull shape diverged (degenerate samples); last iterate k=" +
                                     std::to_string(k),
                                 k);
      // ln(lambda) = (1/k) * (ln sum(x^k) - ln n), with the max-shift again.
      const double ymax = *std::max_element(logs.begin(), logs.end());
      double s0 = 0;
      for (double y : logs) s0 += std::exp(k * (y - ymax));
      const double log_scale =
          ymax + (std::log(s0) - std::log(static_cast<double>(logs.size()))) / k;
      return {k, std::exp(log_scale)};
    }
  }
  throw NoConvergenceError(
      "Weibull fit did not converge after " + std::to_string(kMaxIterations) +
          " iterations; last iterate k=" + std::to_string(k),
      k);
}

double weibull_cdf(double x, const WeibullParams& p) {
  if (x <= 0) return 0.0;
  return -std::expm1(-std::pow(x / p.scale, p.shape));
}

double weibull_log_likelihood(std::span<const double> samples, const WeibullParams& p) {
  double ll = 0;
  const double log_k = std::log(p.shape), log_lambda = std::log(p.scale);
  for (double x : samples) {
    if (x <= 0) continue;
    const double z = std::log(x) - log_lambda;
    ll += log_k - log_lambda + (p.shape - 1.0) * z - std::exp(p.shape * z);
  }
  return ll;
}

double ks_distance(std::span<const double> samples, const WeibullParams& p) {
  if (samples.empty()) fail(Errc::EmptySample, "KS distance of an empty sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  for (double x : sorted)
    if (x <= 0) fail(Errc::InvalidArgument, "KS distance requires positive samples");
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double d = 0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = weibull_cdf(sorted[i], p);
    const double below = f - static_cast<double>(i) / n;
    const double above = static_cast<double>(i + 1) / n - f;
    d = std::max({d, below, above});
  }
  return d;
}

double default_ks_threshold(std::size_t window) {
  return 1.36 / std::sqrt(static_cast<double>(window));
}

std::vector<DeviationScore> score_windows(std::span<const FeatureVector> flows,
                                          const WeibullParams& baseline, std::size_t window,
                                          double threshold) {
  if (window < kMinFitSamples) fail(Errc::InvalidArgument, "window must be >= 30");
  if (!(threshold > 0.0 && threshold < 1.0))
    fail(Errc::InvalidArgument, "threshold must lie in (0,1)");

  std::vector<DeviationScore> scores;
  std::vector<double> buf;
  buf.reserve(window);
  std::uint64_t window_id = 0;

  auto flush = [&](bool is_trailing_partial) {
    if (is_trailing_partial && buf.size() < kMinFitSamples) return;  // dropped
    DeviationScore s;
    s.window_id = window_id++;
    s.n = buf.size();
    s.ks_stat = ks_distance(buf, baseline);
    s.flagged = s.ks_stat > threshold;
    scores.push_back(s);
  };

  std::size_t in_window = 0;
  for (const auto& fv : flows) {
    const double iat_s = fv[FeatureId::FlowIatMean] / 1e6;
    if (iat_s > 0) buf.push_back(iat_s);  // zero IATs excluded, as in the fit
    if (++in_window == window) {
      flush(false);
      buf.clear();
      in_window = 0;
    }
  }
  if (in_window > 0) flush(true);
  return scores;
}

std::string baseline_to_json(const BaselineDoc& doc) {
  nlohmann::json j;
  j["shape"] = doc.params.shape;
  j["scale"] = doc.params.scale;
  j["fitted_n"] = doc.fitted_n;
  j["fitted_at"] = doc.fitted_at_us;
  return j.dump(2);
}

BaselineDoc baseline_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    BaselineDoc doc;
    doc.params.shape = j.at("shape").get<double>();
    doc.params.scale = j.at("scale").get<double>();
    doc.fitted_n = j.value("fitted_n", std::uint64_t{0});
    doc.fitted_at_us = j.value("fitted_at", std::int64_t{0});
    if (doc.params.shape <= 0 || doc.params.scale <= 0)
      fail(Errc::Parse, "baseline shape and scale must be positive");
    return doc;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::Parse, std::string("bad baseline JSON: ") + e.what());
  }
}

void save_baseline_file(const std::string& path, const BaselineDoc& doc) {
  std::ofstream out(path);
  if (!out) fail(Errc::Io, "cannot write baseline: " + path);
  out << baseline_to_json(doc) << '\n';
}

BaselineDoc load_baseline_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open baseline: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return baseline_from_json(text);
}

std::string deviation_csv_header() { return "window_id,ks_stat,n,flagged"; }

std::string deviation_csv_row(const DeviationScore& s) {
  std::string row = std::to_string(s.window_id);
  row += ',';
  row += format_fixed6(s.ks_stat);
  row += ',';
  row += std::to_string(s.n);
  row += ',';
  row += s.flagged ? "1" : "0";
  return row;
}

}  // namespace flowsentry
