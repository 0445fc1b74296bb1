#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"

namespace flowsentry {

/// Two-parameter Weibull, scale in the same unit as the fitted samples (seconds).
struct WeibullParams {
  double shape = 1.0;
  double scale = 1.0;
};

inline constexpr std::size_t kMinFitSamples = 30;

/// Maximum-likelihood fit. Zeros are dropped first (Weibull support is
/// (0, inf)); at least 30 strictly positive samples must remain. The shape is
/// solved by safeguarded Newton iteration on the profile equation, the scale
/// follows in closed form. Throws TooFewSamples, NoConvergence (with the last
/// iterate), or InvalidArgument on negative samples.
WeibullParams fit_weibull(std::span<const double> samples);

double weibull_cdf(double x, const WeibullParams& p);

double weibull_log_likelihood(std::span<const double> samples, const WeibullParams& p);

/// Exact Kolmogorov-Smirnov statistic sup|F_empirical - F_Weibull| via the
/// sorted-sample formula. Requires non-empty, strictly positive samples.
double ks_distance(std::span<const double> samples, const WeibullParams& p);

/// Asymptotic 5% critical value, 1.36/sqrt(n).
double default_ks_threshold(std::size_t window);

struct DeviationScore {
  std::uint64_t window_id = 0;
  double ks_stat = 0.0;
  std::size_t n = 0;  // positive samples actually scored
  bool flagged = false;
};

/// Scores consecutive windows of flow_iat_mean values (converted from
/// microseconds to seconds) against the baseline. Zero IATs are dropped per
/// window before scoring, mirroring the fit. The trailing partial window is
/// scored only if at least 30 positive samples remain.
std::vector<DeviationScore> score_windows(std::span<const FeatureVector> flows,
                                          const WeibullParams& baseline, std::size_t window,
                                          double threshold);

struct BaselineDoc {
  WeibullParams params;
  std::uint64_t fitted_n = 0;
  std::int64_t fitted_at_us = 0;  // logical time, kept deterministic
};

std::string baseline_to_json(const BaselineDoc& doc);
BaselineDoc baseline_from_json(const std::string& text);
void save_baseline_file(const std::string& path, const BaselineDoc& doc);
BaselineDoc load_baseline_file(const std::string& path);

std::string deviation_csv_header();
std::string deviation_csv_row(const DeviationScore& s);

}  // namespace flowsentry
