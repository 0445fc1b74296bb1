// Exercises the shared-library C interface exactly as an external consumer
// would: only the public header, opaque handles, and status codes.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "flowsentry/flowsentry.h"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const char* tag) {
    path = fs::temp_directory_path() / (std::string("fsn_capi_") + tag);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const char* name) const { return (path / name).string(); }
};

void collect_flow(const fsn_flow_features* flow, void* user) {
  auto* flows = static_cast<std::vector<fsn_flow_features>*>(user);
  flows->push_back(*flow);
}

}  // namespace

TEST_CASE("version and status names are exposed") {
  CHECK(std::strlen(fsn_version()) > 0);
  CHECK(std::string(fsn_status_name(FSN_OK)) == "Ok");
  CHECK(std::string(fsn_status_name(FSN_ERR_TOO_FEW_SAMPLES)) == "TooFewSamples");
}

TEST_CASE("meter handle assembles flows and reports FIN teardown") {
  fsn_meter* meter = fsn_meter_new(0);
  REQUIRE(meter != nullptr);
  std::vector<fsn_flow_features> flows;

  fsn_packet p{};
  p.src = "10.0.0.1";
  p.dst = "10.0.0.2";
  p.src_port = 1111;
  p.dst_port = 80;
  p.protocol = 6;

  p.timestamp_us = 1000;
  p.tcp_flags = FSN_TCP_SYN;
  CHECK(fsn_meter_ingest(meter, &p, collect_flow, &flows) == FSN_OK);

  p.timestamp_us = 2000;
  p.tcp_flags = FSN_TCP_FIN;
  CHECK(fsn_meter_ingest(meter, &p, collect_flow, &flows) == FSN_OK);

  REQUIRE(flows.size() == 1);
  CHECK(flows[0].termination == FSN_TERM_TCP_FIN);
  CHECK(flows[0].values[0] == 80.0);    // dst port
  CHECK(flows[0].values[1] == 6.0);     // protocol
  CHECK(flows[0].values[2] == 1000.0);  // duration
  CHECK(std::string(flows[0].key) == "10.0.0.1:1111>10.0.0.2:80/6");

  CHECK(fsn_meter_finalize(meter, collect_flow, &flows) == FSN_OK);
  CHECK(flows.size() == 1);  // nothing left open
  fsn_meter_free(meter);
}

TEST_CASE("out-of-order ingestion returns the right status and message") {
  fsn_meter* meter = fsn_meter_new(0);
  fsn_packet p{};
  p.src = "10.0.0.1";
  p.dst = "10.0.0.2";
  p.src_port = 1;
  p.dst_port = 2;
  p.protocol = 17;
  p.timestamp_us = 500;
  CHECK(fsn_meter_ingest(meter, &p, nullptr, nullptr) == FSN_OK);
  p.timestamp_us = 400;
  CHECK(fsn_meter_ingest(meter, &p, nullptr, nullptr) == FSN_ERR_OUT_OF_ORDER_TIMESTAMP);
  CHECK(std::strlen(fsn_last_error()) > 0);
  fsn_meter_free(meter);
}

TEST_CASE("weibull fit and KS distance work through the C surface") {
  std::mt19937_64 gen(99);
  std::vector<double> samples(20'000);
  for (auto& x : samples) {
    const double u = static_cast<double>(gen() >> 11) * 0x1.0p-53;
    x = 2.0 * std::pow(-std::log(1.0 - u), 1.0 / 1.5);  // Weibull(1.5, 2.0)
  }
  fsn_weibull_params params{};
  REQUIRE(fsn_weibull_fit(samples.data(), samples.size(), &params) == FSN_OK);
  CHECK(std::abs(params.shape - 1.5) < 0.05);
  CHECK(std::abs(params.scale - 2.0) < 0.05);

  double d = 0;
  REQUIRE(fsn_ks_distance(samples.data(), samples.size(), params, &d) == FSN_OK);
  CHECK(d < fsn_default_ks_threshold(samples.size()));

  // error paths
  CHECK(fsn_weibull_fit(samples.data(), 5, &params) == FSN_ERR_TOO_FEW_SAMPLES);
  CHECK(fsn_ks_distance(samples.data(), 0, params, &d) == FSN_ERR_EMPTY_SAMPLE);
  fsn_weibull_params bad{-1.0, 1.0};
  CHECK(fsn_ks_distance(samples.data(), 10, bad, &d) == FSN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("evaluation counts match a hand tally") {
  const double scores[] = {0.9, 0.4, 0.6, 0.1};
  const int truth[] = {1, 1, 0, 0};
  fsn_eval_counts counts{};
  REQUIRE(fsn_evaluate_counts(scores, truth, 4, 0.5, &counts) == FSN_OK);
  CHECK(counts.tp == 1);
  CHECK(counts.fn == 1);
  CHECK(counts.fp == 1);
  CHECK(counts.tn == 1);
  CHECK(fsn_evaluate_counts(scores, truth, 0, 0.5, &counts) == FSN_ERR_EMPTY_INPUT);
}

TEST_CASE("the command layer drives the full file pipeline") {
  TempDir dir("cmd");
  const std::string synth_opts = "flows=400 seed=7 scenario=flood out=" + dir.file("pkts.csv") +
                                 " truth-out=" + dir.file("truth.csv");
  REQUIRE(fsn_cmd_synth(synth_opts.c_str()) == FSN_OK);
  REQUIRE(fs::exists(dir.file("pkts.csv")));

  const std::string meter_opts =
      "in=" + dir.file("pkts.csv") + " out=" + dir.file("flows.jsonl");
  REQUIRE(fsn_cmd_meter(meter_opts.c_str()) == FSN_OK);

  const std::string features_opts = "in=" + dir.file("flows.jsonl") +
                                    " labels=" + dir.file("truth.csv") +
                                    " out=" + dir.file("features.csv");
  REQUIRE(fsn_cmd_features(features_opts.c_str()) == FSN_OK);

  std::ifstream feat(dir.file("features.csv"));
  std::string header;
  std::getline(feat, header);
  CHECK(header.rfind("Dst Port,Protocol,", 0) == 0);
  CHECK(header.find(",Label") != std::string::npos);

  const std::string fit_opts =
      "in=" + dir.file("features.csv") + " out=" + dir.file("baseline.json");
  REQUIRE(fsn_cmd_fit_baseline(fit_opts.c_str()) == FSN_OK);

  const std::string detect_opts = "in=" + dir.file("features.csv") +
                                  " baseline=" + dir.file("baseline.json") +
                                  " window=50 out=" + dir.file("scores.csv");
  REQUIRE(fsn_cmd_detect_weibull(detect_opts.c_str()) == FSN_OK);
  std::ifstream scores(dir.file("scores.csv"));
  std::getline(scores, header);
  CHECK(header == "window_id,ks_stat,n,flagged");
}

TEST_CASE("command errors map to statuses with messages") {
  CHECK(fsn_cmd_meter("in=/no/such/file.csv") == FSN_ERR_IO);
  CHECK(std::string(fsn_last_error()).find("cannot open") != std::string::npos);
  CHECK(fsn_cmd_synth("scenario=warpdrive") == FSN_ERR_UNKNOWN_KIND);
  CHECK(fsn_cmd_synth("flows=abc") == FSN_ERR_INVALID_ARGUMENT);
}

TEST_CASE("a trained checkpoint loads and scores through the C surface") {
  TempDir dir("model");
  // tiny end-to-end corpus via the pipeline command, then load its checkpoint
  const std::string pipe_opts =
      "scenario=flood seed=9 cycles=2 benign-flows=9000 attack-flows=9100 epochs=1 "
      "batch=4 out-dir=" + dir.file("pipe");
  REQUIRE(fsn_cmd_pipeline(pipe_opts.c_str()) == FSN_OK);

  fsn_model* model = nullptr;
  REQUIRE(fsn_model_load((dir.path / "pipe" / "model.ckpt").string().c_str(), &model) == FSN_OK);
  REQUIRE(model != nullptr);

  std::vector<uint8_t> rgb(100 * 100 * 3, 40);
  double score = -1;
  REQUIRE(fsn_model_score(model, rgb.data(), 100, 100, &score) == FSN_OK);
  CHECK(score >= 0.0);
  CHECK(score <= 1.0);

  // shape errors surface as ShapeMismatch
  CHECK(fsn_model_score(model, rgb.data(), 10, 10, &score) == FSN_ERR_SHAPE_MISMATCH);
  fsn_model_free(model);

  fsn_model* missing = nullptr;
  CHECK(fsn_model_load(dir.file("nope.ckpt").c_str(), &missing) == FSN_ERR_IO);
}
