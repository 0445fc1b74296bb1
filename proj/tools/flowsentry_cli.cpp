// flowsentry command line: thin adapters over the library's C command API.
// Subcommands mirror the pipeline stages; stages compose over stdin/stdout
// CSV so `synth | meter | features` style pipes work.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>
#include <string>

#include "flowsentry/flowsentry.h"

namespace {

struct SubcommandSpec {
  CLI::App* app = nullptr;
  fsn_status (*run)(const char*) = nullptr;
  std::map<std::string, std::string>* values = nullptr;
  std::string config_path;
};

int fail_with(fsn_status status) {
  nlohmann::json err = {
      {"error", {{"code", fsn_status_name(status)}, {"message", fsn_last_error()}}}};
  std::fprintf(stderr, "%s\n", err.dump().c_str());
  return status == FSN_ERR_INVALID_ARGUMENT ? 2 : 1;
}

std::string build_option_string(const SubcommandSpec& sub) {
  std::string text;
  if (!sub.config_path.empty()) {
    std::ifstream in(sub.config_path);
    if (!in) {
      std::fprintf(stderr,
                   "{\"error\":{\"code\":\"Io\",\"message\":\"cannot open config file\"}}\n");
      std::exit(1);
    }
    std::stringstream ss;
    ss << in.rdbuf();
    text = ss.str();
    text += '\n';
  }
  for (const auto& [key, value] : *sub.values) {
    text += key;
    text += '=';
    text += value;
    text += '\n';
  }
  return text;
}

class OptionCollector {
 public:
  OptionCollector(CLI::App* app, std::map<std::string, std::string>* values)
      : app_(app), values_(values) {}

  void add(const std::string& flag, const std::string& key, const std::string& help) {
    auto* values = values_;
    app_->add_option_function<std::string>(
        flag, [values, key](const std::string& v) { (*values)[key] = v; }, help);
  }

 private:
  CLI::App* app_;
  std::map<std::string, std::string>* values_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowsentry: flow metering, Weibull baselining, flow-image CNN "
               "classification and SDS policy simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(fsn_version()));

  std::vector<SubcommandSpec> subs;
  subs.reserve(11);
  std::vector<std::map<std::string, std::string>> value_maps(11);

  auto make_sub = [&](std::size_t i, const std::string& name, const std::string& desc,
                      fsn_status (*fn)(const char*)) {
    CLI::App* sub = app.add_subcommand(name, desc);
    subs.push_back({sub, fn, &value_maps[i], ""});
    SubcommandSpec& spec = subs.back();
    sub->add_option("--config", spec.config_path, "key=value config file, overridden by flags");
    OptionCollector collect(sub, spec.values);
    collect.add("--seed", "seed", "deterministic seed");
    collect.add("--out", "out", "output path ('-' for stdout)");
    return collect;
  };

  {
    auto c = make_sub(0, "synth", "generate a labeled synthetic packet stream", fsn_cmd_synth);
    c.add("--flows", "flows", "number of flows to generate");
    c.add("--scenario", "scenario", "benign|flood|bruteforce|infiltration|mixed");
    c.add("--shape", "shape", "benign pacing Weibull shape");
    c.add("--scale", "scale", "benign pacing Weibull scale, seconds");
    c.add("--min-pkts", "min-pkts", "minimum packets per benign flow");
    c.add("--max-pkts", "max-pkts", "maximum packets per benign flow");
    c.add("--tcp-fraction", "tcp-fraction", "fraction of benign flows using TCP");
    c.add("--arrival-mean", "arrival-mean", "mean flow inter-start gap, seconds");
    c.add("--truth-out", "truth-out", "write flow key -> label CSV here");
  }
  {
    auto c = make_sub(1, "meter", "assemble packets into bidirectional flows", fsn_cmd_meter);
    c.add("--in", "in", "packet input path ('-' for stdin)");
    c.add("--format", "format", "input format: csv or pcap");
    c.add("--timeout-us", "timeout-us", "idle flow timeout in microseconds");
    c.add("--stats-out", "stats-out", "write meter statistics JSON here");
  }
  {
    auto c = make_sub(2, "features", "compute the 20-feature rows for metered flows",
                      fsn_cmd_features);
    c.add("--in", "in", "flow JSONL input path ('-' for stdin)");
    c.add("--labels", "labels", "flow key -> label CSV for labeling");
  }
  {
    auto c = make_sub(3, "fit-baseline", "fit the benign Weibull IAT baseline",
                      fsn_cmd_fit_baseline);
    c.add("--in", "in", "feature CSV input");
    c.add("--label", "label", "label filter (default Benign; 'any' keeps all)");
    c.add("--now-us", "now-us", "logical fit timestamp recorded in the baseline");
  }
  {
    auto c = make_sub(4, "detect-weibull", "score flow windows against the baseline",
                      fsn_cmd_detect_weibull);
    c.add("--in", "in", "feature CSV input");
    c.add("--baseline", "baseline", "baseline JSON path");
    c.add("--window", "window", "flows per window (>= 30)");
    c.add("--threshold", "threshold", "KS flag threshold (default 1.36/sqrt(window))");
  }
  {
    auto c = make_sub(5, "encode", "pack labeled feature rows into 100x100x3 PNG images",
                      fsn_cmd_encode);
    c.add("--in", "in", "feature CSV input");
    c.add("--spec", "spec", "use an existing normalization spec JSON");
    c.add("--spec-out", "spec-out", "write the learned normalization spec here");
    c.add("--out-dir", "out-dir", "image output directory");
    c.add("--manifest", "manifest", "manifest CSV path");
  }
  {
    auto c = make_sub(6, "train", "train the CNN classifier on encoded images", fsn_cmd_train);
    c.add("--manifest", "manifest", "image manifest CSV");
    c.add("--epochs", "epochs", "training epochs");
    c.add("--batch", "batch", "minibatch size");
    c.add("--lr", "lr", "learning rate");
    c.add("--momentum", "momentum", "SGD momentum");
    c.add("--train-frac", "train-frac", "training split fraction");
    c.add("--val-frac", "val-frac", "validation split fraction");
    c.add("--test-frac", "test-frac", "test split fraction");
    c.add("--early-stop-val-acc", "early-stop-val-acc",
          "stop once validation accuracy reaches this (<=0 disables)");
    c.add("--log", "log", "write the per-epoch training log CSV here");
  }
  {
    auto c = make_sub(7, "predict", "score images with a trained checkpoint", fsn_cmd_predict);
    c.add("--model", "model", "checkpoint path");
    c.add("--manifest", "manifest", "image manifest CSV");
    c.add("--threshold", "threshold", "anomaly score threshold");
  }
  {
    auto c = make_sub(8, "evaluate", "compute the evaluation report from predictions",
                      fsn_cmd_evaluate);
    c.add("--in", "in", "predictions CSV (score,truth)");
    c.add("--threshold", "threshold", "anomaly score threshold");
    c.add("--table", "table", "write the text metrics table here");
    c.add("--pr-out", "pr-out", "write the PR curve CSV here");
  }
  {
    auto c = make_sub(9, "push-rules", "build a new IDS ruleset version from the policy store",
                      fsn_cmd_push_rules);
    c.add("--store", "store", "policy store JSONL path");
    c.add("--now-us", "now-us", "logical push timestamp");
    c.add("--apply", "apply", "feature CSV to apply the rules to");
    c.add("--hits-out", "hits-out", "per-rule hit counts CSV path");
  }
  {
    auto c = make_sub(10, "pipeline", "run the full simulated SDS loop end to end",
                      fsn_cmd_pipeline);
    c.add("--scenario", "scenario", "benign|flood|bruteforce|infiltration|mixed");
    c.add("--out-dir", "out-dir", "pipeline output directory");
    c.add("--cycles", "cycles", "number of scheduled cycles");
    c.add("--benign-flows", "benign-flows", "benign flows per cycle");
    c.add("--attack-flows", "attack-flows", "attack flows per attack cycle");
    c.add("--attack-cycles", "attack-cycles", "comma list of 1-based attack cycles");
    c.add("--window", "window", "flows per detection window");
    c.add("--threshold", "threshold", "KS flag threshold (default 1.36/sqrt(window))");
    c.add("--interval-us", "interval-us", "simulated cadence between cycles");
    c.add("--timeout-us", "timeout-us", "idle flow timeout in microseconds");
    c.add("--epochs", "epochs", "CNN training epochs");
    c.add("--batch", "batch", "CNN minibatch size");
    c.add("--cnn", "cnn", "run the CNN stage (true/false)");
    c.add("--shape", "shape", "benign pacing Weibull shape");
    c.add("--scale", "scale", "benign pacing Weibull scale, seconds");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);  // prints usage/help text
    return rc == 0 ? 0 : 2;     // any flag misuse is a usage error
  }

  for (const auto& sub : subs) {
    if (!sub.app->parsed()) continue;
    const std::string options = build_option_string(sub);
    const fsn_status status = sub.run(options.c_str());
    if (status != FSN_OK) return fail_with(status);
    return 0;
  }
  return 2;
}
