#include <doctest.h>

#include <sstream>

#include "core/error.hpp"
#include "core/feature_csv.hpp"
#include "core/flow_meter.hpp"
#include "core/rng.hpp"
#include "support/oracles.hpp"

using namespace flowsentry;

namespace {

PacketRecord pkt(std::int64_t ts, const char* src, const char* dst, std::uint16_t sport,
                 std::uint16_t dport, std::uint8_t proto, std::uint8_t flags = 0) {
  return {ts, src, dst, sport, dport, proto, flags};
}

}  // namespace

TEST_CASE("first packet opens a flow and returns nothing") {
  FlowTable table;
  const auto closed = table.ingest(pkt(100, "10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp,
                                       tcp_flag::kSyn));
  CHECK(closed.empty());
  CHECK(table.open_flows() == 1);
}

TEST_CASE("FIN closes a TCP flow with cause TcpFin") {
  FlowTable table;
  table.ingest(pkt(100, "10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp, tcp_flag::kSyn));
  table.ingest(pkt(200, "10.0.0.2", "10.0.0.1", 80, 1111, kProtoTcp, tcp_flag::kAck));
  const auto closed =
      table.ingest(pkt(300, "10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp, tcp_flag::kFin));
  REQUIRE(closed.size() == 1);
  CHECK(closed[0].cause == TerminationCause::TcpFin);
  // the FIN packet itself is part of the flow
  CHECK(closed[0].fwd_timestamps == std::vector<std::int64_t>{100, 300});
  CHECK(closed[0].bwd_timestamps == std::vector<std::int64_t>{200});
  CHECK(table.open_flows() == 0);
}

TEST_CASE("RST closes a TCP flow with cause TcpRst") {
  FlowTable table;
  table.ingest(pkt(100, "10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp, tcp_flag::kSyn));
  const auto closed =
      table.ingest(pkt(150, "10.0.0.2", "10.0.0.1", 80, 1111, kProtoTcp, tcp_flag::kRst));
  REQUIRE(closed.size() == 1);
  CHECK(closed[0].cause == TerminationCause::TcpRst);
}

TEST_CASE("idle UDP flow expires when the next packet for its key arrives") {
  FlowTable table(1'000'000);  // 1 s timeout
  table.ingest(pkt(0, "10.0.0.1", "10.0.0.2", 5000, 53, kProtoUdp));
  table.ingest(pkt(400'000, "10.0.0.2", "10.0.0.1", 53, 5000, kProtoUdp));
  // gap of 2 s > timeout: the old flow is emitted, a new one opened
  const auto closed = table.ingest(pkt(2'400'001, "10.0.0.1", "10.0.0.2", 5000, 53, kProtoUdp));
  REQUIRE(closed.size() == 1);
  CHECK(closed[0].cause == TerminationCause::Timeout);
  CHECK(closed[0].fwd_timestamps.size() == 1);
  CHECK(closed[0].bwd_timestamps.size() == 1);
  CHECK(table.open_flows() == 1);
}

TEST_CASE("timeout sweep also expires other idle flows") {
  FlowTable table(1'000'000);
  table.ingest(pkt(0, "10.0.0.1", "10.0.0.2", 5000, 53, kProtoUdp));
  table.ingest(pkt(10, "10.0.0.3", "10.0.0.4", 5001, 53, kProtoUdp));
  const auto closed = table.ingest(pkt(5'000'000, "10.0.0.5", "10.0.0.6", 5002, 53, kProtoUdp));
  CHECK(closed.size() == 2);
  for (const auto& flow : closed) CHECK(flow.cause == TerminationCause::Timeout);
}

TEST_CASE("out-of-order timestamps are rejected") {
  FlowTable table;
  table.ingest(pkt(1000, "10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp));
  try {
    table.ingest(pkt(999, "10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp));
    FAIL("expected OutOfOrderTimestamp");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::OutOfOrderTimestamp);
  }
}

TEST_CASE("non-TCP/UDP packets are counted and skipped, not fatal") {
  FlowTable table;
  const auto closed = table.ingest(pkt(100, "10.0.0.1", "10.0.0.2", 0, 0, 1 /* ICMP */));
  CHECK(closed.empty());
  CHECK(table.open_flows() == 0);
  CHECK(table.stats().packets_skipped == 1);
  CHECK(table.stats().packets_seen == 1);
  CHECK(table.stats().packets_metered == 0);
}

TEST_CASE("direction invariance: swapped src/dst matches the same flow as backward") {
  FlowTable table;
  table.ingest(pkt(100, "10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp));
  table.ingest(pkt(200, "10.0.0.2", "10.0.0.1", 80, 1111, kProtoTcp));
  CHECK(table.open_flows() == 1);
  const auto flows = table.finalize();
  REQUIRE(flows.size() == 1);
  CHECK(flows[0].key.src == "10.0.0.1");
  CHECK(flows[0].fwd_timestamps == std::vector<std::int64_t>{100});
  CHECK(flows[0].bwd_timestamps == std::vector<std::int64_t>{200});
}

TEST_CASE("finalize of an empty table returns nothing") {
  FlowTable table;
  CHECK(table.finalize().empty());
}

TEST_CASE("finalize emits all open flows and empties the table") {
  FlowTable table;
  table.ingest(pkt(1, "10.0.0.1", "10.0.0.2", 1, 80, kProtoTcp));
  table.ingest(pkt(2, "10.0.0.3", "10.0.0.4", 2, 80, kProtoTcp));
  const auto flows = table.finalize();
  CHECK(flows.size() == 2);
  CHECK(table.open_flows() == 0);
  for (const auto& f : flows) CHECK(f.cause == TerminationCause::CaptureEnd);
}

TEST_CASE("finalized flow replays exactly the packets ingested for its key") {
  FlowTable table;
  table.ingest(pkt(10, "10.0.0.1", "10.0.0.2", 1, 80, kProtoUdp));
  table.ingest(pkt(20, "10.0.0.2", "10.0.0.1", 80, 1, kProtoUdp));
  table.ingest(pkt(35, "10.0.0.1", "10.0.0.2", 1, 80, kProtoUdp));
  const auto flows = table.finalize();
  REQUIRE(flows.size() == 1);
  CHECK(flows[0].fwd_timestamps == std::vector<std::int64_t>{10, 35});
  CHECK(flows[0].bwd_timestamps == std::vector<std::int64_t>{20});
  CHECK(flows[0].first_ts == 10);
  CHECK(flows[0].last_ts == 35);
}

TEST_CASE("hand-computed feature example: fwd {0, 1s, 3s}, no bwd") {
  FlowRecord flow;
  flow.key = {"10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp};
  flow.fwd_timestamps = {0, 1'000'000, 3'000'000};
  flow.first_ts = 0;
  flow.last_ts = 3'000'000;
  const FeatureVector fv = extract_features(flow);

  CHECK(fv[FeatureId::FwdIatMean] == doctest::Approx(1'500'000.0));
  CHECK(fv[FeatureId::FwdIatMin] == 1'000'000.0);
  CHECK(fv[FeatureId::FwdIatMax] == 2'000'000.0);
  CHECK(fv[FeatureId::FwdIatStd] == doctest::Approx(707'106.78).epsilon(1e-6));
  CHECK(fv[FeatureId::FlowDuration] == 3'000'000.0);
  CHECK(fv[FeatureId::FlowPktsPerSec] == doctest::Approx(1.0));
  // degenerate backward direction: all-zero stats
  CHECK(fv[FeatureId::BwdIatTot] == 0.0);
  CHECK(fv[FeatureId::BwdIatMean] == 0.0);
  CHECK(fv[FeatureId::BwdIatStd] == 0.0);
}

TEST_CASE("single-packet flow yields zero duration and all-zero IAT stats") {
  FlowRecord flow;
  flow.key = {"10.0.0.1", "10.0.0.2", 1111, 80, kProtoTcp};
  flow.fwd_timestamps = {42};
  flow.first_ts = flow.last_ts = 42;
  const FeatureVector fv = extract_features(flow);
  CHECK(fv[FeatureId::FlowDuration] == 0.0);
  CHECK(fv[FeatureId::FlowPktsPerSec] == 0.0);
  for (const FeatureId id : {FeatureId::FlowIatMean, FeatureId::FlowIatStd, FeatureId::FlowIatMax,
                             FeatureId::FlowIatMin, FeatureId::FlowIatTot})
    CHECK(fv[id] == 0.0);
}

namespace {

// Random terminated flow with integer microsecond timestamps.
FlowRecord random_flow(Rng& rng) {
  FlowRecord flow;
  flow.key = {"10.1.0.1", "10.1.0.2", static_cast<std::uint16_t>(rng.uniform_int(1024, 60000)),
              443, kProtoTcp};
  const int n_fwd = static_cast<int>(rng.uniform_int(1, 8));
  const int n_bwd = static_cast<int>(rng.uniform_int(0, 8));
  std::int64_t ts = rng.uniform_int(0, 1'000'000);
  std::vector<std::int64_t> all;
  for (int i = 0; i < n_fwd + n_bwd; ++i) {
    all.push_back(ts);
    ts += rng.uniform_int(1, 500'000);
  }
  // first packet is forward; remaining direction assignment is random
  std::vector<bool> fwd(all.size(), false);
  fwd[0] = true;
  int remaining_fwd = n_fwd - 1;
  for (std::size_t i = 1; i < all.size(); ++i) {
    const int slots_left = static_cast<int>(all.size() - i);
    if (remaining_fwd > 0 && (remaining_fwd == slots_left || rng.uniform01() < 0.5)) {
      fwd[i] = true;
      --remaining_fwd;
    }
  }
  for (std::size_t i = 0; i < all.size(); ++i)
    (fwd[i] ? flow.fwd_timestamps : flow.bwd_timestamps).push_back(all[i]);
  flow.first_ts = all.front();
  flow.last_ts = all.back();
  flow.cause = TerminationCause::CaptureEnd;
  return flow;
}

}  // namespace

TEST_CASE("features match a brute-force recomputation on random flows") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const FlowRecord flow = random_flow(rng);
    const FeatureVector fv = extract_features(flow);
    const auto expected = oracle::naive_features(flow);
    for (std::size_t f = 0; f < kFeatureCount; ++f)
      CHECK(fv.values[f] == doctest::Approx(expected[f]).epsilon(1e-12));
  }
}

TEST_CASE("telescoping: flow IAT total equals duration for multi-packet flows") {
  Rng rng(99);
  for (int trial = 0; trial < 50; ++trial) {
    FlowRecord flow = random_flow(rng);
    if (flow.fwd_timestamps.size() + flow.bwd_timestamps.size() < 2) continue;
    const FeatureVector fv = extract_features(flow);
    CHECK(fv[FeatureId::FlowIatTot] == fv[FeatureId::FlowDuration]);
    CHECK(fv[FeatureId::FlowDuration] == static_cast<double>(flow.last_ts - flow.first_ts));
  }
}

TEST_CASE("packet counts are conserved between ingest and features") {
  Rng rng(7);
  FlowTable table;
  std::int64_t ts = 0;
  std::size_t sent = 0;
  std::vector<FlowRecord> flows;
  for (int i = 0; i < 500; ++i) {
    ts += rng.uniform_int(1, 1000);
    const auto sport = static_cast<std::uint16_t>(1000 + rng.uniform_int(0, 9));
    const bool forward = rng.uniform01() < 0.5;
    auto p = forward ? pkt(ts, "10.0.0.1", "10.0.0.9", sport, 80, kProtoUdp)
                     : pkt(ts, "10.0.0.9", "10.0.0.1", 80, sport, kProtoUdp);
    ++sent;
    for (auto& f : table.ingest(p)) flows.push_back(std::move(f));
  }
  for (auto& f : table.finalize()) flows.push_back(std::move(f));
  std::size_t counted = 0;
  for (const auto& f : flows) {
    const FeatureVector fv = extract_features(f);
    counted += static_cast<std::size_t>(fv[FeatureId::TotFwdPkts] + fv[FeatureId::TotBwdPkts]);
    CHECK(!f.fwd_timestamps.empty());  // a flow has at least one forward packet
  }
  CHECK(counted == sent);
}

TEST_CASE("metering is deterministic: same packets, byte-identical CSV") {
  auto run = [] {
    Rng rng(11);
    FlowTable table(2'000'000);
    std::int64_t ts = 0;
    std::ostringstream out;
    std::vector<FeatureVector> rows;
    for (int i = 0; i < 400; ++i) {
      ts += rng.uniform_int(1, 800'000);
      const auto sport = static_cast<std::uint16_t>(1000 + rng.uniform_int(0, 19));
      const std::uint8_t flags = rng.uniform01() < 0.1 ? tcp_flag::kFin : tcp_flag::kAck;
      for (const auto& f :
           table.ingest(pkt(ts, "10.0.0.1", "10.0.0.9", sport, 80, kProtoTcp, flags)))
        rows.push_back(extract_features(f));
    }
    for (const auto& f : table.finalize()) rows.push_back(extract_features(f));
    write_feature_csv(out, rows);
    return out.str();
  };
  CHECK(run() == run());
}
