#include "core/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <json.hpp>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace flowsentry {

namespace {

ClassMetrics metrics_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn) {
  ClassMetrics m;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0)
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

std::optional<double> mean_opt(const std::optional<double>& a, const std::optional<double>& b) {
  if (a && b) return 0.5 * (*a + *b);
  return std::nullopt;
}

nlohmann::json opt_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

nlohmann::json metrics_json(const ClassMetrics& m) {
  return {{"precision", opt_json(m.precision)},
          {"recall", opt_json(m.recall)},
          {"f1", opt_json(m.f1)}};
}

std::string fmt_opt(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

}  // namespace

EvalReport evaluate(std::span<const Prediction> predictions, std::span<const Label> truth,
                    double threshold) {
  if (predictions.size() != truth.size())
    fail(Errc::LengthMismatch, "predictions and truth differ in length");
  if (predictions.empty()) fail(Errc::EmptyInput, "nothing to evaluate");

  EvalReport r;
  r.threshold = threshold;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const bool pred_anomaly = predictions[i].anomaly_score >= threshold;
    const bool true_anomaly = truth[i] == Label::Anomaly;
    if (true_anomaly && pred_anomaly)
      ++r.tp;
    else if (!true_anomaly && pred_anomaly)
      ++r.fp;
    else if (!true_anomaly && !pred_anomaly)
      ++r.tn;
    else
      ++r.fn;
  }

  r.anomaly = metrics_from_counts(r.tp, r.fp, r.fn);
  // Benign as positive swaps the roles: tn are its true positives.
  r.benign = metrics_from_counts(r.tn, r.fn, r.fp);
  r.macro.precision = mean_opt(r.benign.precision, r.anomaly.precision);
  r.macro.recall = mean_opt(r.benign.recall, r.anomaly.recall);
  r.macro.f1 = mean_opt(r.benign.f1, r.anomaly.f1);
  r.confusion = confusion_matrix(predictions, truth);

  const bool has_pos = r.tp + r.fn > 0;
  const bool has_neg = r.fp + r.tn > 0;
  if (has_pos && has_neg) {
    std::vector<double> scores;
    scores.reserve(predictions.size());
    for (const auto& p : predictions) scores.push_back(p.anomaly_score);
    auto [curve, auc] = pr_curve(scores, truth);
    r.pr_curve = std::move(curve);
    r.pr_auc = auc;
  }
  return r;
}

std::pair<std::vector<PrPoint>, double> pr_curve(std::span<const double> scores,
                                                 std::span<const Label> truth) {
  if (scores.size() != truth.size())
    fail(Errc::LengthMismatch, "scores and truth differ in length");
  if (scores.empty()) fail(Errc::EmptyInput, "empty score list");

  std::uint64_t total_pos = 0;
  for (const Label l : truth)
    if (l == Label::Anomaly) ++total_pos;
  if (total_pos == 0 || total_pos == truth.size())
    fail(Errc::SingleClassTruth, "PR curve needs both classes in the truth");

  std::vector<std::size_t> order(scores.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  // Sweep thresholds at each distinct score; predicted positive means
  // score >= threshold, matching evaluate().
  std::vector<PrPoint> curve;
  std::uint64_t tp = 0, fp = 0;
  std::size_t i = 0;
  while (i < order.size()) {
    const double t = scores[order[i]];
    while (i < order.size() && scores[order[i]] == t) {
      if (truth[order[i]] == Label::Anomaly)
        ++tp;
      else
        ++fp;
      ++i;
    }
    PrPoint pt;
    pt.threshold = t;
    pt.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    pt.recall = static_cast<double>(tp) / static_cast<double>(total_pos);
    curve.push_back(pt);
  }

  double auc = 0;
  double prev_recall = 0, prev_precision = curve.front().precision;
  for (const auto& pt : curve) {
    auc += (pt.recall - prev_recall) * 0.5 * (pt.precision + prev_precision);
    prev_recall = pt.recall;
    prev_precision = pt.precision;
  }
  return {std::move(curve), auc};
}

std::array<std::array<std::optional<double>, 2>, 2> confusion_matrix(
    std::span<const Prediction> predictions, std::span<const Label> truth) {
  if (predictions.size() != truth.size())
    fail(Errc::LengthMismatch, "predictions and truth differ in length");
  if (predictions.empty()) fail(Errc::EmptyInput, "empty prediction list");

  // counts[true][pred], 0 = Anomaly, 1 = Benign
  std::array<std::array<std::uint64_t, 2>, 2> counts{};
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const std::size_t t = truth[i] == Label::Anomaly ? 0 : 1;
    const std::size_t p = predictions[i].predicted == Label::Anomaly ? 0 : 1;
    ++counts[t][p];
  }
  std::array<std::array<std::optional<double>, 2>, 2> out{};
  for (std::size_t t = 0; t < 2; ++t) {
    const std::uint64_t row = counts[t][0] + counts[t][1];
    if (row == 0) continue;
    for (std::size_t p = 0; p < 2; ++p)
      out[t][p] = 100.0 * static_cast<double>(counts[t][p]) / static_cast<double>(row);
  }
  return out;
}

std::string report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["threshold"] = report.threshold;
  j["counts"] = {{"tp", report.tp}, {"fp", report.fp}, {"tn", report.tn}, {"fn", report.fn}};
  j["benign"] = metrics_json(report.benign);
  j["anomaly"] = metrics_json(report.anomaly);
  j["average"] = metrics_json(report.macro);
  j["confusion_rows"] = {"Anomaly", "Benign"};
  j["confusion_percent"] = {
      {opt_json(report.confusion[0][0]), opt_json(report.confusion[0][1])},
      {opt_json(report.confusion[1][0]), opt_json(report.confusion[1][1])},
  };
  if (report.pr_auc) {
    j["pr_auc"] = *report.pr_auc;
  } else {
    j["pr_auc"] = nullptr;
  }
  return j.dump(2);
}

std::string report_to_table(const EvalReport& report) {
  std::string out;
  out += "Traffic Type  Precision  Recall  F1 Score\n";
  auto row = [&](const char* name, const ClassMetrics& m) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-13s %-10s %-7s %s\n", name, fmt_opt(m.precision).c_str(),
                  fmt_opt(m.recall).c_str(), fmt_opt(m.f1).c_str());
    out += buf;
  };
  row("Benign", report.benign);
  row("Anomaly", report.anomaly);
  row("Average", report.macro);
  return out;
}

std::string pr_curve_csv(std::span<const PrPoint> points) {
  std::string out = "threshold,precision,recall\n";
  for (const auto& pt : points) {
    out += format_fixed6(pt.threshold);
    out += ',';
    out += format_fixed6(pt.precision);
    out += ',';
    out += format_fixed6(pt.recall);
    out += '\n';
  }
  return out;
}

std::string predictions_csv_header() { return "score,truth"; }

std::string predictions_csv_row(const Prediction& p, Label truth) {
  return format_fixed6(p.anomaly_score) + "," + label_name(truth);
}

void read_predictions_csv(std::istream& in, std::vector<Prediction>& predictions,
                          std::vector<Label>& truth, double threshold) {
  std::string line;
  if (!std::getline(in, line)) fail(Errc::EmptyInput, "empty predictions file");
  const auto header = split_csv_line(line);
  int score_col = -1, truth_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "score") score_col = static_cast<int>(i);
    if (header[i] == "truth") truth_col = static_cast<int>(i);
  }
  if (score_col < 0 || truth_col < 0)
    fail(Errc::Parse, "predictions CSV must have score and truth columns");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() <= static_cast<std::size_t>(std::max(score_col, truth_col)))
      fail(Errc::Parse, "short predictions row: " + line);
    Prediction p;
    try {
      p.anomaly_score = std::stod(cells[static_cast<std::size_t>(score_col)]);
    } catch (const std::exception&) {
      fail(Errc::Parse, "bad score value: " + line);
    }
    p.predicted = p.anomaly_score >= threshold ? Label::Anomaly : Label::Benign;
    predictions.push_back(p);
    truth.push_back(label_from_string(cells[static_cast<std::size_t>(truth_col)]));
  }
}

}  // namespace flowsentry
