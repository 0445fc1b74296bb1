#pragma once

#include <cstdint>
#include <list>
#include <unordered_map>
#include <vector>

#include "core/types.hpp"

namespace flowsentry {

inline constexpr std::int64_t kDefaultIdleTimeoutUs = 120'000'000;  // 120 s

struct MeterStats {
  std::uint64_t packets_seen = 0;
  std::uint64_t packets_metered = 0;
  std::uint64_t packets_skipped = 0;  // unsupported protocol, never metered
  std::uint64_t flows_emitted = 0;
};

// Assembles a non-decreasing packet stream into bidirectional flows. TCP flows
// close on the first FIN or RST seen in either direction; both TCP and UDP
// flows expire after the idle timeout, evaluated against each arriving
// packet's timestamp. Single writer; not thread safe.
class FlowTable {
 public:
  explicit FlowTable(std::int64_t idle_timeout_us = kDefaultIdleTimeoutUs);

  /// Feeds one packet; returns any flows terminated by it (timeouts swept
  /// against its timestamp first, then FIN/RST teardown).
  /// Throws Error(OutOfOrderTimestamp) when timestamps regress.
  std::vector<FlowRecord> ingest(const PacketRecord& packet);

  /// Emits all remaining open flows with cause CaptureEnd, in open order.
  std::vector<FlowRecord> finalize();

  const MeterStats& stats() const { return stats_; }
  std::size_t open_flows() const { return flows_.size(); }
  std::int64_t idle_timeout_us() const { return idle_timeout_us_; }

 private:
  struct CanonKey {
    std::string lo_addr, hi_addr;
    std::uint16_t lo_port = 0, hi_port = 0;
    std::uint8_t protocol = 0;
    bool operator==(const CanonKey&) const = default;
  };
  struct CanonKeyHash {
    std::size_t operator()(const CanonKey& k) const;
  };
  struct OpenFlow {
    FlowRecord record;
    std::list<CanonKey>::iterator lru_pos;
  };

  static CanonKey canonical(const PacketRecord& p);
  FlowRecord close_flow(std::unordered_map<CanonKey, OpenFlow, CanonKeyHash>::iterator it,
                        TerminationCause cause);
  void sweep_expired(std::int64_t now_us, std::vector<FlowRecord>& out);

  std::int64_t idle_timeout_us_;
  std::int64_t last_ingest_ts_ = INT64_MIN;
  std::uint64_t next_open_seq_ = 0;
  std::unordered_map<CanonKey, OpenFlow, CanonKeyHash> flows_;
  std::list<CanonKey> lru_;  // front = least recently active
  MeterStats stats_;
};

/// Computes the 20-feature row for a terminated flow. Degenerate directions
/// (fewer than two packets) yield all-zero IAT stats; never throws.
FeatureVector extract_features(const FlowRecord& flow);

}  // namespace flowsentry
