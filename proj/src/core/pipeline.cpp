#include "core/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>

#include "core/csv.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/feature_csv.hpp"
#include "core/rng.hpp"
#include "core/sds_policy.hpp"

namespace flowsentry {

namespace {

namespace fs = std::filesystem;

PolicyMatch match_from_rows(std::span<const FeatureVector> rows) {
  std::map<std::uint16_t, std::size_t> ports;
  std::map<std::uint8_t, std::size_t> protos;
  std::int64_t lo = INT64_MAX, hi = INT64_MIN;
  for (const auto& row : rows) {
    ++ports[static_cast<std::uint16_t>(row[FeatureId::DstPort])];
    ++protos[static_cast<std::uint8_t>(row[FeatureId::Protocol])];
    const auto iat = static_cast<std::int64_t>(std::llround(row[FeatureId::FlowIatMean]));
    if (iat > 0) {
      lo = std::min(lo, iat);
      hi = std::max(hi, iat);
    }
  }
  PolicyMatch m;
  // Dominant value wins; std::map iteration makes ties resolve to the smallest.
  std::size_t best = 0;
  for (const auto& [port, n] : ports)
    if (n > best) {
      best = n;
      m.dst_port = port;
    }
  best = 0;
  for (const auto& [proto, n] : protos)
    if (n > best) {
      best = n;
      m.protocol = proto;
    }
  if (lo <= hi) {
    m.iat_low_us = lo;
    m.iat_high_us = hi;
  }
  return m;
}

struct CycleOutput {
  std::vector<FeatureVector> rows;
};

CycleOutput run_meter_cycle(const PipelineConfig& cfg, int cycle, std::int64_t sim_start,
                            std::uint64_t& flow_base) {
  const bool with_attack = [&] {
    if (cfg.scenario == Scenario::Benign) return false;
    if (cfg.attack_cycles.empty()) return cfg.cycles == 1 || cycle >= 2;
    return std::find(cfg.attack_cycles.begin(), cfg.attack_cycles.end(), cycle) !=
           cfg.attack_cycles.end();
  }();

  const std::uint64_t cycle_seed = Rng(cfg.seed).derive(static_cast<std::uint64_t>(cycle)).next_u64();
  std::vector<FlowSpec> specs =
      gen_traffic(cfg.scenario, cfg.benign_flows_per_cycle,
                  with_attack ? cfg.attack_flows_per_cycle : 0, cycle_seed, cfg.profile,
                  flow_base, sim_start);
  flow_base += specs.size();

  std::unordered_map<std::string, Label> truth;
  truth.reserve(specs.size());
  for (const auto& s : specs) truth[s.key_string()] = s.label;

  CycleOutput out;
  out.rows.reserve(specs.size());
  FlowTable table(cfg.idle_timeout_us);
  auto emit_row = [&](const FlowRecord& flow) {
    FeatureVector fv = extract_features(flow);
    const auto it = truth.find(flow.key.to_string());
    fv.label = it == truth.end() ? Label::Unlabeled : it->second;
    out.rows.push_back(fv);
  };
  emit_packets(specs, [&](const PacketRecord& p) {
    for (const auto& flow : table.ingest(p)) emit_row(flow);
  });
  for (const auto& flow : table.finalize()) emit_row(flow);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.cycles < 1) fail(Errc::InvalidArgument, "pipeline needs at least one cycle");
  fs::create_directories(cfg.out_dir);
  const auto out_path = [&](const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
  };

  PolicyStore store(out_path("policies.jsonl"));
  const double threshold =
      cfg.ks_threshold > 0 ? cfg.ks_threshold : default_ks_threshold(cfg.window);

  PipelineResult result;
  std::vector<FeatureVector> benign_rows, anomaly_rows;
  std::optional<WeibullParams> baseline;
  std::uint64_t flow_base = 0;

  for (int cycle = 1; cycle <= cfg.cycles; ++cycle) {
    const std::int64_t sim_start = static_cast<std::int64_t>(cycle - 1) * cfg.interval_us;
    const std::int64_t sim_end = sim_start + cfg.interval_us;
    CycleOutput cycle_out = run_meter_cycle(cfg, cycle, sim_start, flow_base);

    write_feature_csv_file(out_path("features_cycle" + std::to_string(cycle) + ".csv"),
                           cycle_out.rows);

    CycleLogEntry entry;
    entry.cycle = cycle;
    entry.sim_time_us = sim_start;
    entry.flows = cycle_out.rows.size();
    for (const auto& row : cycle_out.rows) {
      if (row.label == Label::Benign) ++entry.benign_rows;
      if (row.label == Label::Anomaly) ++entry.anomaly_rows;
    }

    if (!baseline) {
      // First cycle doubles as the benign profile build.
      std::vector<double> samples;
      for (const auto& row : cycle_out.rows) {
        if (row.label != Label::Benign) continue;
        const double iat_s = row[FeatureId::FlowIatMean] / 1e6;
        if (iat_s > 0) samples.push_back(iat_s);
      }
      baseline = fit_weibull(samples);
      save_baseline_file(out_path("baseline.json"),
                         {*baseline, samples.size(), sim_start});
      result.baseline = *baseline;
    }

    const auto scores = score_windows(cycle_out.rows, *baseline, cfg.window, threshold);
    {
      std::ofstream scores_out(out_path("scores_cycle" + std::to_string(cycle) + ".csv"));
      if (!scores_out) fail(Errc::Io, "cannot write scores CSV");
      scores_out << deviation_csv_header() << '\n';
      for (const auto& s : scores) scores_out << deviation_csv_row(s) << '\n';
    }
    entry.windows = scores.size();

    const std::size_t policies_before = store.policies().size();
    for (const auto& s : scores) {
      if (!s.flagged) continue;
      ++entry.flagged;
      const std::size_t begin = static_cast<std::size_t>(s.window_id) * cfg.window;
      const std::size_t end = std::min(cycle_out.rows.size(), begin + cfg.window);
      Detection det;
      det.source = DetectionSource::WeibullDetector;
      det.evidence = "cycle" + std::to_string(cycle) + ":window" + std::to_string(s.window_id);
      det.match = match_from_rows(std::span<const FeatureVector>(cycle_out.rows).subspan(begin, end - begin));
      store.record_anomaly(det, sim_end);
    }
    entry.policies_added = store.policies().size() - policies_before;
    if (entry.policies_added > 0) store.push_rules(sim_end);
    entry.ruleset_version = store.version();
    result.run_log.push_back(entry);

    for (const auto& row : cycle_out.rows) {
      if (row.label == Label::Benign) benign_rows.push_back(row);
      if (row.label == Label::Anomaly) anomaly_rows.push_back(row);
    }
  }

  const std::int64_t sim_final = static_cast<std::int64_t>(cfg.cycles) * cfg.interval_us;

  if (cfg.run_cnn) {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    ImageDataset ds = build_image_dataset(benign_rows, anomaly_rows, tc.train_frac, tc.val_frac,
                                          tc.test_frac, cfg.seed);
    save_normalization_file(out_path("normalization.json"), ds.spec);
    const auto manifest =
        write_image_set(out_path("images"), ds.images, out_path("manifest.csv"));

    TrainResult trained = train(ds.images, ds.split, tc);
    save_checkpoint(out_path("model.ckpt"), trained.model);
    {
      std::ofstream log_out(out_path("train_log.csv"));
      log_out << training_log_csv_header() << '\n';
      for (const auto& e : trained.log) log_out << training_log_csv_row(e) << '\n';
    }

    std::vector<FlowImage> test_images;
    std::vector<Label> test_truth;
    std::vector<std::size_t> test_idx(trained.split.test.begin(), trained.split.test.end());
    for (const std::size_t i : test_idx) {
      test_images.push_back(ds.images[i]);
      test_truth.push_back(ds.images[i].label);
    }
    const auto predictions = predict_batch(trained.model, test_images, 0.5);
    {
      std::ofstream pred_out(out_path("predictions.csv"));
      pred_out << "path,score,predicted,truth\n";
      for (std::size_t i = 0; i < predictions.size(); ++i) {
        pred_out << manifest[test_idx[i]].path << ',' << format_fixed6(predictions[i].anomaly_score)
                 << ',' << label_name(predictions[i].predicted) << ','
                 << label_name(test_truth[i]) << '\n';
      }
    }

    EvalReport report = evaluate(predictions, test_truth, 0.5);
    {
      std::ofstream report_out(out_path("report.json"));
      report_out << report_to_json(report) << '\n';
      std::ofstream table_out(out_path("report.txt"));
      table_out << report_to_table(report);
      std::ofstream pr_out(out_path("pr_curve.csv"));
      pr_out << pr_curve_csv(report.pr_curve);
    }
    result.report = std::move(report);

    const std::size_t policies_before = store.policies().size();
    const std::size_t n_benign_groups = benign_rows.size() / kRowsPerImage;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      if (predictions[i].predicted != Label::Anomaly) continue;
      const std::size_t img_index = test_idx[i];
      const auto& img = ds.images[img_index];
      const auto& rows = img_index < n_benign_groups ? benign_rows : anomaly_rows;
      Detection det;
      det.source = DetectionSource::CnnDetector;
      det.evidence = manifest[img_index].path;
      det.match = match_from_rows(std::span<const FeatureVector>(rows).subspan(
          img.first_row_index, kRowsPerImage));
      store.record_anomaly(det, sim_final);
    }
    if (store.policies().size() > policies_before) store.push_rules(sim_final);
  }

  {
    std::ofstream log_out(out_path("run_log.csv"));
    log_out << run_log_csv_header() << '\n';
    for (const auto& e : result.run_log) log_out << run_log_csv_row(e) << '\n';
  }

  const IdsRuleSet rules = store.current_rules();
  save_ruleset_file(out_path("ruleset.json"), rules);
  {
    std::vector<FeatureVector> all_rows;
    all_rows.reserve(benign_rows.size() + anomaly_rows.size());
    all_rows.insert(all_rows.end(), benign_rows.begin(), benign_rows.end());
    all_rows.insert(all_rows.end(), anomaly_rows.begin(), anomaly_rows.end());
    const auto hits = apply_rules(rules, all_rows);
    std::ofstream hits_out(out_path("hits.csv"));
    hits_out << hits_csv(rules, hits);
  }

  result.total_policies = store.policies().size();
  result.final_ruleset_version = store.version();
  return result;
}

std::string run_log_csv_header() {
  return "cycle,sim_time_us,flows,benign_rows,anomaly_rows,windows,flagged,policies_added,"
         "ruleset_version";
}

std::string run_log_csv_row(const CycleLogEntry& e) {
  std::string row = std::to_string(e.cycle);
  row += ',' + std::to_string(e.sim_time_us);
  row += ',' + std::to_string(e.flows);
  row += ',' + std::to_string(e.benign_rows);
  row += ',' + std::to_string(e.anomaly_rows);
  row += ',' + std::to_string(e.windows);
  row += ',' + std::to_string(e.flagged);
  row += ',' + std::to_string(e.policies_added);
  row += ',' + std::to_string(e.ruleset_version);
  return row;
}

}  // namespace flowsentry
