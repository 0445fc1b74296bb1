#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace flowsentry {

// TCP flag bits as carried on a PacketRecord; empty for non-TCP packets.
namespace tcp_flag {
inline constexpr std::uint8_t kSyn = 0x01;
inline constexpr std::uint8_t kFin = 0x02;
inline constexpr std::uint8_t kRst = 0x04;
inline constexpr std::uint8_t kAck = 0x08;
}  // namespace tcp_flag

inline constexpr std::uint8_t kProtoTcp = 6;
inline constexpr std::uint8_t kProtoUdp = 17;

/// One timestamped packet observation, the raw input unit.
struct PacketRecord {
  std::int64_t timestamp_us = 0;
  std::string src;
  std::string dst;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;
  std::uint8_t tcp_flags = 0;
};

enum class Label { Benign, Anomaly, Unlabeled };

const char* label_name(Label l);
Label label_from_string(const std::string& s);

enum class TerminationCause { TcpFin, TcpRst, Timeout, CaptureEnd };

const char* termination_cause_name(TerminationCause c);
TerminationCause termination_cause_from_string(const std::string& s);

/// Canonical 5-tuple with direction fixed by the first observed packet
/// (src/dst here are the forward direction).
struct FlowKey {
  std::string src;
  std::string dst;
  std::uint16_t src_port = 0;
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;

  /// "src:sport>dst:dport/proto", used for label joins and policy evidence.
  std::string to_string() const;
};

struct FlowRecord {
  FlowKey key;
  std::int64_t first_ts = 0;
  std::int64_t last_ts = 0;
  std::vector<std::int64_t> fwd_timestamps;
  std::vector<std::int64_t> bwd_timestamps;
  TerminationCause cause = TerminationCause::CaptureEnd;
  std::uint64_t open_seq = 0;  // order the flow was opened in, for stable output
};

// The 20 per-flow features, in the fixed column order of the feature CSV.
enum class FeatureId : int {
  DstPort = 0,
  Protocol,
  FlowDuration,
  TotFwdPkts,
  TotBwdPkts,
  FlowPktsPerSec,
  FlowIatMean,
  FlowIatStd,
  FlowIatMax,
  FlowIatMin,
  FlowIatTot,
  FwdIatMean,
  FwdIatStd,
  FwdIatMax,
  FwdIatMin,
  BwdIatTot,
  BwdIatMean,
  BwdIatStd,
  BwdIatMax,
  BwdIatMin,
};

inline constexpr std::size_t kFeatureCount = 20;

struct FeatureVector {
  std::array<double, kFeatureCount> values{};
  Label label = Label::Unlabeled;

  double operator[](FeatureId id) const { return values[static_cast<std::size_t>(id)]; }
  double& operator[](FeatureId id) { return values[static_cast<std::size_t>(id)]; }
};

}  // namespace flowsentry
