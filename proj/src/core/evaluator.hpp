#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/cnn.hpp"
#include "core/types.hpp"

namespace flowsentry {

/// Precision/recall/F1 with one class treated as positive. Zero-denominator
/// cases are reported as empty optionals, distinct from 0.
struct ClassMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;
};

struct EvalReport {
  // Counts with Anomaly as the positive class.
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  ClassMetrics benign;
  ClassMetrics anomaly;
  ClassMetrics macro;  // unweighted mean over the two classes
  // Row-normalized percentages, rows/cols ordered [Anomaly, Benign]; rows with
  // no true members hold empty optionals.
  std::array<std::array<std::optional<double>, 2>, 2> confusion{};
  std::vector<PrPoint> pr_curve;          // empty when truth is single-class
  std::optional<double> pr_auc;
  double threshold = 0.5;
};

/// Counts and per-class metrics at the given threshold; the PR curve and AUC
/// are filled in when both classes are present in the truth.
/// Throws LengthMismatch and EmptyInput.
EvalReport evaluate(std::span<const Prediction> predictions, std::span<const Label> truth,
                    double threshold = 0.5);

/// Threshold sweep over the distinct scores, descending; recall is
/// non-decreasing along the sweep. AUC by trapezoid on (recall, precision).
/// Throws SingleClassTruth when either class is missing.
std::pair<std::vector<PrPoint>, double> pr_curve(std::span<const double> scores,
                                                 std::span<const Label> truth);

/// Row-normalized confusion percentages, rows ordered [Anomaly, Benign].
std::array<std::array<std::optional<double>, 2>, 2> confusion_matrix(
    std::span<const Prediction> predictions, std::span<const Label> truth);

std::string report_to_json(const EvalReport& report);
/// Text table in the three-row Traffic Type / Precision / Recall / F1 layout.
std::string report_to_table(const EvalReport& report);
std::string pr_curve_csv(std::span<const PrPoint> points);

// predictions CSV (score,truth[,predicted]) used by the CLI evaluate stage
std::string predictions_csv_header();
std::string predictions_csv_row(const Prediction& p, Label truth);
void read_predictions_csv(std::istream& in, std::vector<Prediction>& predictions,
                          std::vector<Label>& truth, double threshold);

}  // namespace flowsentry
