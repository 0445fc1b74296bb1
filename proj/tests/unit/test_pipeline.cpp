#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "core/pipeline.hpp"
#include "core/rng.hpp"

using namespace flowsentry;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("fsn_pipe_") + tag);
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

PipelineConfig small_config(const std::string& out_dir) {
  PipelineConfig cfg;
  cfg.out_dir = out_dir;
  cfg.cycles = 3;
  cfg.benign_flows_per_cycle = 400;
  cfg.attack_flows_per_cycle = 170;
  cfg.window = 50;
  cfg.run_cnn = false;  // too little data for images at this scale
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("three cycles produce three run-log entries with monotone sim time") {
  TempDir dir("three");
  const PipelineResult r = run_pipeline(small_config(dir.str()));
  REQUIRE(r.run_log.size() == 3);
  for (std::size_t i = 0; i < r.run_log.size(); ++i) {
    CHECK(r.run_log[i].cycle == static_cast<int>(i + 1));
    if (i > 0) CHECK(r.run_log[i].sim_time_us > r.run_log[i - 1].sim_time_us);
  }
  CHECK(fs::exists(dir.path / "run_log.csv"));
  CHECK(fs::exists(dir.path / "baseline.json"));
  CHECK(fs::exists(dir.path / "ruleset.json"));
}

TEST_CASE("a cycle with no anomalies records no policies and keeps the version") {
  TempDir dir("quiet");
  PipelineConfig cfg = small_config(dir.str());
  cfg.scenario = Scenario::Benign;   // no attacks at all
  cfg.ks_threshold = 0.5;            // far above any null-window KS statistic
  const PipelineResult r = run_pipeline(cfg);
  REQUIRE(r.run_log.size() == 3);
  for (const auto& entry : r.run_log) {
    CHECK(entry.flagged == 0);
    CHECK(entry.policies_added == 0);
    CHECK(entry.ruleset_version == 0);  // never pushed
  }
  CHECK(r.total_policies == 0);
}

TEST_CASE("an attack injected only in cycle 2 first appears in cycle 2's log") {
  TempDir dir("inject");
  PipelineConfig cfg = small_config(dir.str());
  cfg.scenario = Scenario::Flood;
  cfg.attack_cycles = {2};
  cfg.ks_threshold = 0.5;  // benign cycles stay silent at this threshold
  const PipelineResult r = run_pipeline(cfg);
  REQUIRE(r.run_log.size() == 3);
  CHECK(r.run_log[0].policies_added == 0);
  CHECK(r.run_log[0].ruleset_version == 0);
  CHECK(r.run_log[1].policies_added > 0);
  CHECK(r.run_log[1].ruleset_version == 1);
  // cycle 3 is benign again under attack_cycles={2}
  CHECK(r.run_log[2].policies_added == 0);
  CHECK(r.run_log[2].ruleset_version == 1);
}

TEST_CASE("the flood scenario flags windows and stores at least one policy") {
  TempDir dir("flood");
  PipelineConfig cfg = small_config(dir.str());
  cfg.scenario = Scenario::Flood;
  const PipelineResult r = run_pipeline(cfg);
  CHECK(r.total_policies >= 1);
  CHECK(r.final_ruleset_version >= 1);
  bool attack_cycle_flagged = false;
  for (const auto& entry : r.run_log)
    if (entry.anomaly_rows > 0 && entry.flagged > 0) attack_cycle_flagged = true;
  CHECK(attack_cycle_flagged);
}

TEST_CASE("two runs with the same seed write byte-identical outputs") {
  TempDir dir_a("det_a");
  TempDir dir_b("det_b");
  PipelineConfig cfg = small_config(dir_a.str());
  cfg.scenario = Scenario::Flood;
  run_pipeline(cfg);
  cfg.out_dir = dir_b.str();
  run_pipeline(cfg);

  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir_a.path)) {
    if (!entry.is_regular_file()) continue;
    const auto other = dir_b.path / entry.path().filename();
    REQUIRE(fs::exists(other));
    CHECK(slurp(entry.path()) == slurp(other));
    ++compared;
  }
  CHECK(compared >= 8);
}

TEST_CASE("the CNN stage produces a report and checkpoint when data suffices") {
  TempDir dir("cnn");
  PipelineConfig cfg;
  cfg.out_dir = dir.str();
  cfg.scenario = Scenario::Flood;
  cfg.cycles = 2;
  cfg.benign_flows_per_cycle = 9000;   // 12 benign images after two cycles
  cfg.attack_flows_per_cycle = 9100;   // 6 anomaly images in the attack cycle
  cfg.window = 100;
  cfg.train.epochs = 2;
  cfg.train.batch_size = 4;
  const PipelineResult r = run_pipeline(cfg);
  REQUIRE(r.report.has_value());
  CHECK(fs::exists(dir.path / "model.ckpt"));
  CHECK(fs::exists(dir.path / "report.json"));
  CHECK(fs::exists(dir.path / "predictions.csv"));
  CHECK(fs::exists(dir.path / "manifest.csv"));
  CHECK(fs::exists(dir.path / "images"));
}
