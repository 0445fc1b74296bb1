#include "core/flow_meter.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace flowsentry {

namespace {

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::size_t FlowTable::CanonKeyHash::operator()(const CanonKey& k) const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(k.lo_addr.data(), k.lo_addr.size(), h);
  h = fnv1a(k.hi_addr.data(), k.hi_addr.size(), h);
  h = fnv1a(&k.lo_port, sizeof(k.lo_port), h);
  h = fnv1a(&k.hi_port, sizeof(k.hi_port), h);
  h = fnv1a(&k.protocol, sizeof(k.protocol), h);
  return static_cast<std::size_t>(h);
}

FlowTable::FlowTable(std::int64_t idle_timeout_us) : idle_timeout_us_(idle_timeout_us) {
  if (idle_timeout_us <= 0) fail(Errc::InvalidArgument, "idle timeout must be positive");
}

FlowTable::CanonKey FlowTable::canonical(const PacketRecord& p) {
  // Direction-independent form: endpoint (addr, port) pairs ordered so both
  // directions of a conversation map to the same key.
  const bool src_first =
      (p.src < p.dst) || (p.src == p.dst && p.src_port <= p.dst_port);
  CanonKey k;
  if (src_first) {
    k.lo_addr = p.src;
    k.hi_addr = p.dst;
    k.lo_port = p.src_port;
    k.hi_port = p.dst_port;
  } else {
    k.lo_addr = p.dst;
    k.hi_addr = p.src;
    k.lo_port = p.dst_port;
    k.hi_port = p.src_port;
  }
  k.protocol = p.protocol;
  return k;
}

FlowRecord FlowTable::close_flow(
    std::unordered_map<CanonKey, OpenFlow, CanonKeyHash>::iterator it, TerminationCause cause) {
  FlowRecord rec = std::move(it->second.record);
  rec.cause = cause;
  lru_.erase(it->second.lru_pos);
  flows_.erase(it);
  ++stats_.flows_emitted;
  return rec;
}

void FlowTable::sweep_expired(std::int64_t now_us, std::vector<FlowRecord>& out) {
  while (!lru_.empty()) {
    auto it = flows_.find(lru_.front());
    if (now_us - it->second.record.last_ts <= idle_timeout_us_) break;
    out.push_back(close_flow(it, TerminationCause::Timeout));
  }
}

std::vector<FlowRecord> FlowTable::ingest(const PacketRecord& packet) {
  if (packet.timestamp_us < 0) fail(Errc::InvalidArgument, "negative packet timestamp");
  if (packet.timestamp_us < last_ingest_ts_)
    fail(Errc::OutOfOrderTimestamp,
         "packet timestamp " + std::to_string(packet.timestamp_us) +
             " precedes previous " + std::to_string(last_ingest_ts_));
  last_ingest_ts_ = packet.timestamp_us;
  ++stats_.packets_seen;

  std::vector<FlowRecord> closed;
  sweep_expired(packet.timestamp_us, closed);

  if (packet.protocol != kProtoTcp && packet.protocol != kProtoUdp) {
    ++stats_.packets_skipped;
    return closed;
  }
  ++stats_.packets_metered;

  const CanonKey key = canonical(packet);
  auto it = flows_.find(key);
  if (it == flows_.end()) {
    OpenFlow flow;
    flow.record.key = {packet.src, packet.dst, packet.src_port, packet.dst_port, packet.protocol};
    flow.record.first_ts = flow.record.last_ts = packet.timestamp_us;
    flow.record.fwd_timestamps.push_back(packet.timestamp_us);
    flow.record.open_seq = next_open_seq_++;
    lru_.push_back(key);
    flow.lru_pos = std::prev(lru_.end());
    it = flows_.emplace(key, std::move(flow)).first;
  } else {
    FlowRecord& rec = it->second.record;
    const bool forward = packet.src == rec.key.src && packet.src_port == rec.key.src_port;
    (forward ? rec.fwd_timestamps : rec.bwd_timestamps).push_back(packet.timestamp_us);
    rec.last_ts = packet.timestamp_us;
    lru_.splice(lru_.end(), lru_, it->second.lru_pos);
  }

  if (packet.protocol == kProtoTcp) {
    // RST wins over FIN when a packet carries both.
    if (packet.tcp_flags & tcp_flag::kRst) {
      closed.push_back(close_flow(it, TerminationCause::TcpRst));
    } else if (packet.tcp_flags & tcp_flag::kFin) {
      closed.push_back(close_flow(it, TerminationCause::TcpFin));
    }
  }
  return closed;
}

std::vector<FlowRecord> FlowTable::finalize() {
  std::vector<FlowRecord> out;
  out.reserve(flows_.size());
  for (auto& [key, flow] : flows_) {
    flow.record.cause = TerminationCause::CaptureEnd;
    out.push_back(std::move(flow.record));
  }
  stats_.flows_emitted += out.size();
  flows_.clear();
  lru_.clear();
  std::sort(out.begin(), out.end(),
            [](const FlowRecord& a, const FlowRecord& b) { return a.open_seq < b.open_seq; });
  return out;
}

namespace {

struct IatStats {
  double mean = 0, std = 0, max = 0, min = 0, total = 0;
};

// diffs of consecutive timestamps; integer arithmetic until the final stats.
IatStats iat_stats(const std::vector<std::int64_t>& ts) {
  IatStats s;
  if (ts.size() < 2) return s;
  const std::size_t n = ts.size() - 1;
  std::int64_t total = 0;
  std::int64_t mn = INT64_MAX, mx = INT64_MIN;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const std::int64_t d = ts[i + 1] - ts[i];
    total += d;
    mn = std::min(mn, d);
    mx = std::max(mx, d);
  }
  const double mean = static_cast<double>(total) / static_cast<double>(n);
  double ss = 0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double d = static_cast<double>(ts[i + 1] - ts[i]) - mean;
    ss += d * d;
  }
  s.mean = mean;
  s.std = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;  // sample std
  s.max = static_cast<double>(mx);
  s.min = static_cast<double>(mn);
  s.total = static_cast<double>(total);
  return s;
}

}  // namespace

FeatureVector extract_features(const FlowRecord& flow) {
  FeatureVector fv;
  const auto& fwd = flow.fwd_timestamps;
  const auto& bwd = flow.bwd_timestamps;

  std::vector<std::int64_t> merged;
  merged.reserve(fwd.size() + bwd.size());
  std::merge(fwd.begin(), fwd.end(), bwd.begin(), bwd.end(), std::back_inserter(merged));

  const std::int64_t duration = merged.empty() ? 0 : merged.back() - merged.front();
  const auto total_pkts = static_cast<double>(merged.size());

  fv[FeatureId::DstPort] = static_cast<double>(flow.key.dst_port);
  fv[FeatureId::Protocol] = static_cast<double>(flow.key.protocol);
  fv[FeatureId::FlowDuration] = static_cast<double>(duration);
  fv[FeatureId::TotFwdPkts] = static_cast<double>(fwd.size());
  fv[FeatureId::TotBwdPkts] = static_cast<double>(bwd.size());
  fv[FeatureId::FlowPktsPerSec] =
      duration > 0 ? total_pkts / (static_cast<double>(duration) / 1e6) : 0.0;

  const IatStats flow_iat = iat_stats(merged);
  fv[FeatureId::FlowIatMean] = flow_iat.mean;
  fv[FeatureId::FlowIatStd] = flow_iat.std;
  fv[FeatureId::FlowIatMax] = flow_iat.max;
  fv[FeatureId::FlowIatMin] = flow_iat.min;
  fv[FeatureId::FlowIatTot] = flow_iat.total;

  const IatStats fwd_iat = iat_stats(fwd);
  fv[FeatureId::FwdIatMean] = fwd_iat.mean;
  fv[FeatureId::FwdIatStd] = fwd_iat.std;
  fv[FeatureId::FwdIatMax] = fwd_iat.max;
  fv[FeatureId::FwdIatMin] = fwd_iat.min;

  const IatStats bwd_iat = iat_stats(bwd);
  fv[FeatureId::BwdIatTot] = bwd_iat.total;
  fv[FeatureId::BwdIatMean] = bwd_iat.mean;
  fv[FeatureId::BwdIatStd] = bwd_iat.std;
  fv[FeatureId::BwdIatMax] = bwd_iat.max;
  fv[FeatureId::BwdIatMin] = bwd_iat.min;

  return fv;
}

}  // namespace flowsentry
