#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>

#include "core/types.hpp"

namespace flowsentry {

struct PacketIoStats {
  std::uint64_t records_read = 0;
  std::uint64_t records_skipped = 0;  // unparseable lines / frames
};

/// Streaming reader for the packet CSV format
/// (timestamp_us,src,dst,sport,dport,proto,flags). Unparseable lines are
/// counted and skipped. flags is a subset of the letters SFRA.
class PacketCsvReader {
 public:
  explicit PacketCsvReader(std::istream& in);
  /// Fills `out` with the next packet; false at end of stream.
  bool next(PacketRecord& out);
  const PacketIoStats& stats() const { return stats_; }

 private:
  std::istream& in_;
  PacketIoStats stats_;
  bool header_checked_ = false;
};

std::string packet_csv_header();
std::string packet_csv_row(const PacketRecord& p);
std::string tcp_flags_to_string(std::uint8_t flags);
std::uint8_t tcp_flags_from_string(const std::string& s);

/// Minimal pcap reader: classic pcap format, Ethernet link type,
/// IPv4, TCP or UDP. Anything else is counted and skipped. Handles both
/// byte orders and nanosecond-resolution magic.
void read_pcap(std::istream& in, const std::function<void(const PacketRecord&)>& sink,
               PacketIoStats* stats = nullptr);

// Flow records travel between `meter` and `features` as JSON lines.
std::string flow_record_to_jsonl(const FlowRecord& flow);
FlowRecord flow_record_from_jsonl(const std::string& line);

}  // namespace flowsentry
