#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/cnn.hpp"
#include "core/evaluator.hpp"
#include "core/flow_meter.hpp"
#include "core/traffic_synth.hpp"
#include "core/weibull.hpp"

namespace flowsentry {

/// One meter -> features -> detect -> record -> push cycle per scheduled run,
/// driven by a simulated clock, then an optional CNN stage over the
/// accumulated corpus. Everything written under out_dir is a pure function of
/// the configuration.
struct PipelineConfig {
  Scenario scenario = Scenario::Flood;
  std::uint64_t seed = 7;
  std::string out_dir = "pipeline-out";
  int cycles = 3;
  std::vector<int> attack_cycles;  // 1-based; empty means every cycle after the first
  std::size_t benign_flows_per_cycle = 12000;
  std::size_t attack_flows_per_cycle = 5000;
  std::int64_t interval_us = 300'000'000;  // simulated cadence between runs
  std::size_t window = 100;
  double ks_threshold = 0.0;  // <= 0 picks the default 1.36/sqrt(window)
  std::int64_t idle_timeout_us = kDefaultIdleTimeoutUs;
  SynthProfile profile;
  TrainConfig train{.seed = 7, .epochs = 3, .batch_size = 8};
  bool run_cnn = true;
};

struct CycleLogEntry {
  int cycle = 0;
  std::int64_t sim_time_us = 0;
  std::size_t flows = 0;
  std::size_t benign_rows = 0;
  std::size_t anomaly_rows = 0;
  std::size_t windows = 0;
  std::size_t flagged = 0;
  std::size_t policies_added = 0;
  std::uint64_t ruleset_version = 0;
};

struct PipelineResult {
  std::vector<CycleLogEntry> run_log;
  WeibullParams baseline;
  std::optional<EvalReport> report;  // present when the CNN stage ran
  std::size_t total_policies = 0;
  std::uint64_t final_ruleset_version = 0;
};

PipelineResult run_pipeline(const PipelineConfig& config);

std::string run_log_csv_header();
std::string run_log_csv_row(const CycleLogEntry& e);

}  // namespace flowsentry
