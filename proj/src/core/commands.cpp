#include "core/commands.hpp"

#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "core/cnn.hpp"
#include "core/csv.hpp"
#include "core/dataset.hpp"
#include "core/error.hpp"
#include "core/evaluator.hpp"
#include "core/feature_csv.hpp"
#include "core/flow_meter.hpp"
#include "core/image_codec.hpp"
#include "core/packet_io.hpp"
#include "core/pipeline.hpp"
#include "core/sds_policy.hpp"
#include "core/traffic_synth.hpp"
#include "core/weibull.hpp"

namespace flowsentry {

namespace {

struct InStream {
  std::ifstream file;
  std::istream* stream = nullptr;

  InStream(const std::string& path, bool binary = false) {
    if (path == "-") {
      stream = &std::cin;
    } else {
      file.open(path, binary ? std::ios::binary : std::ios::in);
      if (!file) fail(Errc::Io, "cannot open input: " + path);
      stream = &file;
    }
  }
  std::istream& get() { return *stream; }
};

struct OutStream {
  std::ofstream file;
  std::ostream* stream = nullptr;

  explicit OutStream(const std::string& path) {
    if (path == "-") {
      stream = &std::cout;
    } else {
      file.open(path);
      if (!file) fail(Errc::Io, "cannot open output: " + path);
      stream = &file;
    }
  }
  std::ostream& get() { return *stream; }
  void finish(const std::string& path) {
    stream->flush();
    if (!*stream) fail(Errc::Io, "short write on output: " + path);
  }
};

SynthProfile profile_from_options(const Options& opts) {
  SynthProfile profile;
  profile.pacing.shape = opts.get_double("shape", profile.pacing.shape);
  profile.pacing.scale = opts.get_double("scale", profile.pacing.scale);
  profile.min_pkts = static_cast<int>(opts.get_int("min-pkts", profile.min_pkts));
  profile.max_pkts = static_cast<int>(opts.get_int("max-pkts", profile.max_pkts));
  profile.tcp_fraction = opts.get_double("tcp-fraction", profile.tcp_fraction);
  profile.arrival_mean_s = opts.get_double("arrival-mean", profile.arrival_mean_s);
  if (profile.pacing.shape <= 0 || profile.pacing.scale <= 0)
    fail(Errc::InvalidArgument, "shape and scale must be positive");
  if (profile.min_pkts < 1 || profile.max_pkts < profile.min_pkts)
    fail(Errc::InvalidArgument, "packet count bounds are inconsistent");
  return profile;
}

TrainConfig train_config_from_options(const Options& opts) {
  TrainConfig tc;
  tc.seed = opts.get_uint("seed", tc.seed);
  tc.epochs = static_cast<int>(opts.get_int("epochs", tc.epochs));
  tc.batch_size = static_cast<int>(opts.get_int("batch", tc.batch_size));
  tc.learning_rate = opts.get_double("lr", tc.learning_rate);
  tc.momentum = opts.get_double("momentum", tc.momentum);
  tc.train_frac = opts.get_double("train-frac", tc.train_frac);
  tc.val_frac = opts.get_double("val-frac", tc.val_frac);
  tc.test_frac = opts.get_double("test-frac", tc.test_frac);
  tc.early_stop_val_acc = opts.get_double("early-stop-val-acc", tc.early_stop_val_acc);
  return tc;
}

}  // namespace

void cmd_synth(const Options& opts) {
  const auto flows = opts.get_uint("flows", 10000);
  const auto seed = opts.get_uint("seed", 1);
  const Scenario scenario = scenario_from_string(opts.get("scenario", "benign"));
  const SynthProfile profile = profile_from_options(opts);

  const auto specs = gen_scenario(scenario, flows, seed, profile);

  const std::string out_path = opts.get("out", "-");
  OutStream out(out_path);
  out.get() << packet_csv_header() << '\n';
  emit_packets(specs, [&](const PacketRecord& p) { out.get() << packet_csv_row(p) << '\n'; });
  out.finish(out_path);

  if (const std::string truth_path = opts.get("truth-out"); !truth_path.empty()) {
    OutStream truth(truth_path);
    write_truth_csv(truth.get(), specs);
    truth.finish(truth_path);
  }
}

void cmd_meter(const Options& opts) {
  const std::string in_path = opts.get("in", "-");
  const std::string format = opts.get("format", "csv");
  const auto timeout = opts.get_int("timeout-us", kDefaultIdleTimeoutUs);
  const std::string out_path = opts.get("out", "-");

  FlowTable table(timeout);
  OutStream out(out_path);
  const auto sink = [&](const FlowRecord& flow) {
    out.get() << flow_record_to_jsonl(flow) << '\n';
  };

  PacketIoStats io_stats;
  if (format == "csv") {
    InStream in(in_path);
    PacketCsvReader reader(in.get());
    PacketRecord packet;
    while (reader.next(packet))
      for (const auto& flow : table.ingest(packet)) sink(flow);
    io_stats = reader.stats();
  } else if (format == "pcap") {
    InStream in(in_path, /*binary=*/true);
    read_pcap(in.get(), [&](const PacketRecord& packet) {
      for (const auto& flow : table.ingest(packet)) sink(flow);
    }, &io_stats);
  } else {
    fail(Errc::InvalidArgument, "format must be csv or pcap");
  }
  for (const auto& flow : table.finalize()) sink(flow);
  out.finish(out_path);

  if (const std::string stats_path = opts.get("stats-out"); !stats_path.empty()) {
    nlohmann::json j = {{"records_read", io_stats.records_read},
                        {"records_skipped", io_stats.records_skipped},
                        {"packets_seen", table.stats().packets_seen},
                        {"packets_metered", table.stats().packets_metered},
                        {"packets_skipped", table.stats().packets_skipped},
                        {"flows_emitted", table.stats().flows_emitted}};
    OutStream stats(stats_path);
    stats.get() << j.dump(2) << '\n';
    stats.finish(stats_path);
  }
}

void cmd_features(const Options& opts) {
  const std::string in_path = opts.get("in", "-");
  const std::string out_path = opts.get("out", "-");

  std::unordered_map<std::string, Label> truth;
  if (const std::string labels_path = opts.get("labels"); !labels_path.empty())
    truth = read_truth_csv_file(labels_path);

  InStream in(in_path);
  OutStream out(out_path);
  out.get() << feature_csv_header() << '\n';
  std::string line;
  while (std::getline(in.get(), line)) {
    if (line.empty()) continue;
    const FlowRecord flow = flow_record_from_jsonl(line);
    FeatureVector fv = extract_features(flow);
    if (!truth.empty()) {
      const auto it = truth.find(flow.key.to_string());
      fv.label = it == truth.end() ? Label::Unlabeled : it->second;
    }
    out.get() << feature_csv_row(fv) << '\n';
  }
  out.finish(out_path);
}

void cmd_fit_baseline(const Options& opts) {
  const std::string in_path = opts.get("in", "-");
  const std::string label_filter = opts.get("label", "Benign");
  const std::string out_path = opts.get("out", "baseline.json");

  InStream in(in_path);
  const auto rows = read_feature_csv(in.get());
  std::vector<double> samples;
  for (const auto& row : rows) {
    if (label_filter != "any" && row.label != label_from_string(label_filter)) continue;
    const double iat_s = row[FeatureId::FlowIatMean] / 1e6;
    if (iat_s > 0) samples.push_back(iat_s);
  }
  const WeibullParams params = fit_weibull(samples);
  save_baseline_file(out_path, {params, samples.size(), opts.get_int("now-us", 0)});
}

void cmd_detect_weibull(const Options& opts) {
  const std::string in_path = opts.get("in", "-");
  const std::string baseline_path = opts.get("baseline", "baseline.json");
  const auto window = static_cast<std::size_t>(opts.get_uint("window", 100));
  double threshold = opts.get_double("threshold", 0.0);
  if (threshold <= 0) threshold = default_ks_threshold(window);
  const std::string out_path = opts.get("out", "-");

  InStream in(in_path);
  const auto rows = read_feature_csv(in.get());
  const BaselineDoc baseline = load_baseline_file(baseline_path);
  const auto scores = score_windows(rows, baseline.params, window, threshold);

  OutStream out(out_path);
  out.get() << deviation_csv_header() << '\n';
  for (const auto& s : scores) out.get() << deviation_csv_row(s) << '\n';
  out.finish(out_path);
}

void cmd_encode(const Options& opts) {
  const std::string in_path = opts.get("in", "-");
  const std::string out_dir = opts.get("out-dir", "images");
  const std::string manifest_path = opts.get("manifest", "manifest.csv");

  InStream in(in_path);
  const auto rows = read_feature_csv(in.get());
  if (rows.empty()) fail(Errc::EmptyInput, "no feature rows to encode");

  std::vector<FeatureVector> benign, anomaly;
  for (const auto& row : rows) {
    if (row.label == Label::Benign)
      benign.push_back(row);
    else if (row.label == Label::Anomaly)
      anomaly.push_back(row);
    else
      fail(Errc::InvalidArgument, "encode needs labeled rows (run features with labels)");
  }

  NormalizationSpec spec;
  if (const std::string spec_path = opts.get("spec"); !spec_path.empty()) {
    spec = load_normalization_file(spec_path);
  } else {
    spec = learn_normalization(rows);
  }
  if (const std::string spec_out = opts.get("spec-out"); !spec_out.empty())
    save_normalization_file(spec_out, spec);

  std::vector<FlowImage> images;
  const auto benign_images = encode_images(benign, spec, 0);
  const auto anomaly_images = encode_images(anomaly, spec, 0);
  images.insert(images.end(), benign_images.begin(), benign_images.end());
  images.insert(images.end(), anomaly_images.begin(), anomaly_images.end());
  write_image_set(out_dir, images, manifest_path);
}

void cmd_train(const Options& opts) {
  const std::string manifest_path = opts.get("manifest", "manifest.csv");
  const std::string out_path = opts.get("out", "model.ckpt");
  const std::string log_path = opts.get("log");

  const auto manifest = read_manifest(manifest_path);
  if (manifest.empty()) fail(Errc::EmptyInput, "manifest lists no images");
  std::vector<FlowImage> images;
  images.reserve(manifest.size());
  for (const auto& entry : manifest) images.push_back(load_flow_image(entry));

  const TrainResult result = train(images, train_config_from_options(opts));
  save_checkpoint(out_path, result.model);
  if (!log_path.empty()) {
    OutStream log(log_path);
    log.get() << training_log_csv_header() << '\n';
    for (const auto& e : result.log) log.get() << training_log_csv_row(e) << '\n';
    log.finish(log_path);
  }
}

void cmd_predict(const Options& opts) {
  const std::string model_path = opts.get("model", "model.ckpt");
  const std::string manifest_path = opts.get("manifest", "manifest.csv");
  const double threshold = opts.get_double("threshold", 0.5);
  const std::string out_path = opts.get("out", "-");

  const CnnModel model = load_checkpoint(model_path);
  const auto manifest = read_manifest(manifest_path);
  OutStream out(out_path);
  out.get() << "path,score,predicted,truth\n";
  for (const auto& entry : manifest) {
    const FlowImage img = load_flow_image(entry);
    const Prediction p = forward(model, img, threshold);
    out.get() << entry.path << ',' << format_fixed6(p.anomaly_score) << ','
              << label_name(p.predicted) << ',' << label_name(entry.label) << '\n';
  }
  out.finish(out_path);
}

void cmd_evaluate(const Options& opts) {
  const std::string in_path = opts.get("in", "-");
  const double threshold = opts.get_double("threshold", 0.5);
  const std::string report_path = opts.get("out", "-");

  InStream in(in_path);
  std::vector<Prediction> predictions;
  std::vector<Label> truth;
  read_predictions_csv(in.get(), predictions, truth, threshold);
  const EvalReport report = evaluate(predictions, truth, threshold);

  OutStream out(report_path);
  out.get() << report_to_json(report) << '\n';
  out.finish(report_path);
  if (const std::string table_path = opts.get("table"); !table_path.empty()) {
    OutStream table(table_path);
    table.get() << report_to_table(report);
    table.finish(table_path);
  }
  if (const std::string pr_path = opts.get("pr-out"); !pr_path.empty()) {
    OutStream pr(pr_path);
    pr.get() << pr_curve_csv(report.pr_curve);
    pr.finish(pr_path);
  }
}

void cmd_push_rules(const Options& opts) {
  const std::string store_path = opts.get("store", "policies.jsonl");
  const std::string out_path = opts.get("out", "ruleset.json");
  PolicyStore store(store_path);
  const IdsRuleSet rules = store.push_rules(opts.get_int("now-us", 0));
  save_ruleset_file(out_path, rules);

  if (const std::string apply_path = opts.get("apply"); !apply_path.empty()) {
    const auto rows = read_feature_csv_file(apply_path);
    const auto hits = apply_rules(rules, rows);
    const std::string hits_path = opts.get("hits-out", "hits.csv");
    OutStream out(hits_path);
    out.get() << hits_csv(rules, hits);
    out.finish(hits_path);
  }
}

void cmd_pipeline(const Options& opts) {
  PipelineConfig cfg;
  cfg.scenario = scenario_from_string(opts.get("scenario", "flood"));
  cfg.seed = opts.get_uint("seed", cfg.seed);
  cfg.out_dir = opts.get("out-dir", cfg.out_dir);
  cfg.cycles = static_cast<int>(opts.get_int("cycles", cfg.cycles));
  cfg.benign_flows_per_cycle = opts.get_uint("benign-flows", cfg.benign_flows_per_cycle);
  cfg.attack_flows_per_cycle = opts.get_uint("attack-flows", cfg.attack_flows_per_cycle);
  cfg.interval_us = opts.get_int("interval-us", cfg.interval_us);
  cfg.window = opts.get_uint("window", cfg.window);
  cfg.ks_threshold = opts.get_double("threshold", cfg.ks_threshold);
  cfg.idle_timeout_us = opts.get_int("timeout-us", cfg.idle_timeout_us);
  cfg.profile = profile_from_options(opts);
  cfg.train = train_config_from_options(opts);
  cfg.train.seed = cfg.seed;
  cfg.train.epochs = static_cast<int>(opts.get_int("epochs", 3));
  cfg.train.batch_size = static_cast<int>(opts.get_int("batch", 8));
  cfg.run_cnn = opts.get_bool("cnn", cfg.run_cnn);
  if (const std::string cycles_list = opts.get("attack-cycles"); !cycles_list.empty()) {
    std::istringstream ss(cycles_list);
    std::string tok;
    while (std::getline(ss, tok, ','))
      cfg.attack_cycles.push_back(std::stoi(tok));
  }
  run_pipeline(cfg);
}

}  // namespace flowsentry
