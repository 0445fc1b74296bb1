#include "core/traffic_synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>

#include "core/csv.hpp"
#include "core/error.hpp"
#include "core/packet_io.hpp"
#include "core/rng.hpp"

namespace flowsentry {

AttackKind attack_kind_from_string(const std::string& s) {
  if (s == "flood" || s == "Flood") return AttackKind::Flood;
  if (s == "bruteforce" || s == "BruteForce" || s == "brute-force") return AttackKind::BruteForce;
  if (s == "infiltration" || s == "Infiltration") return AttackKind::Infiltration;
  fail(Errc::UnknownKind, "unknown attack kind: " + s);
}

const char* attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::Flood: return "Flood";
    case AttackKind::BruteForce: return "BruteForce";
    case AttackKind::Infiltration: return "Infiltration";
  }
  return "Flood";
}

Scenario scenario_from_string(const std::string& s) {
  if (s == "benign" || s == "Benign") return Scenario::Benign;
  if (s == "flood" || s == "Flood") return Scenario::Flood;
  if (s == "bruteforce" || s == "BruteForce" || s == "brute-force") return Scenario::BruteForce;
  if (s == "infiltration" || s == "Infiltration") return Scenario::Infiltration;
  if (s == "mixed" || s == "Mixed") return Scenario::Mixed;
  fail(Errc::UnknownKind, "unknown scenario: " + s);
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Benign: return "benign";
    case Scenario::Flood: return "flood";
    case Scenario::BruteForce: return "bruteforce";
    case Scenario::Infiltration: return "infiltration";
    case Scenario::Mixed: return "mixed";
  }
  return "benign";
}

std::string FlowSpec::key_string() const {
  FlowKey key{src, dst, sport, dport, proto};
  return key.to_string();
}

namespace {

// Source addresses are unique per flow: 10.<tag|hi>.<mid>.<lo>. Benign flows
// use tag 0, attack kinds 64/128/192, so key spaces never collide.
std::string source_addr(std::uint64_t index, int tag) {
  const auto hi = static_cast<unsigned>((index >> 12) & 0x3f);
  const auto mid = static_cast<unsigned>((index >> 6) & 0x3f);
  const auto lo = static_cast<unsigned>(index & 0x3f);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "10.%u.%u.%u", static_cast<unsigned>(tag) + hi, mid, lo);
  return buf;
}

std::uint16_t source_port(std::uint64_t index) {
  return static_cast<std::uint16_t>(1024 + (index >> 18) % 60000);
}

std::int64_t pace_us(Rng& rng, const WeibullParams& pacing) {
  const double draw_s = rng.weibull(pacing.shape, pacing.scale);
  return std::max<std::int64_t>(1, std::llround(draw_s * 1e6));
}

}  // namespace

std::vector<FlowSpec> gen_benign(std::size_t n_flows, const WeibullParams& pacing,
                                 std::uint64_t seed, const SynthProfile& profile,
                                 std::uint64_t base_index, std::int64_t start_us) {
  if (n_flows < 1) fail(Errc::InvalidArgument, "n_flows must be >= 1");
  static const char* kTcpDst[] = {"172.16.0.1", "172.16.0.2", "172.16.0.3", "172.16.0.4"};
  static const std::uint16_t kTcpPorts[] = {443, 80, 8080, 25};
  static const char* kUdpDst[] = {"172.16.0.5", "172.16.0.6"};
  static const std::uint16_t kUdpPorts[] = {53, 123};

  Rng rng = Rng(seed).derive(0xbe9199);
  std::vector<FlowSpec> specs(n_flows);
  std::int64_t clock = start_us;
  for (std::size_t i = 0; i < n_flows; ++i) {
    FlowSpec& f = specs[i];
    const std::uint64_t id = base_index + i;
    clock += std::max<std::int64_t>(1, std::llround(rng.exponential(profile.arrival_mean_s) * 1e6));
    f.start_us = clock;
    f.gap_us = pace_us(rng, pacing);
    f.pkts = static_cast<int>(rng.uniform_int(profile.min_pkts, profile.max_pkts));
    f.src = source_addr(id, 0);
    f.sport = source_port(id);
    const bool tcp = rng.uniform01() < profile.tcp_fraction;
    if (tcp) {
      const auto pick = static_cast<std::size_t>(rng.uniform_int(0, 3));
      f.proto = kProtoTcp;
      f.dst = kTcpDst[pick];
      f.dport = kTcpPorts[pick];
    } else {
      const auto pick = static_cast<std::size_t>(rng.uniform_int(0, 1));
      f.proto = kProtoUdp;
      f.dst = kUdpDst[pick];
      f.dport = kUdpPorts[pick];
    }
    f.label = Label::Benign;
  }
  return specs;
}

std::vector<FlowSpec> gen_attack(AttackKind kind, std::size_t n_flows, std::uint64_t seed,
                                 const SynthProfile& profile, std::uint64_t base_index,
                                 std::int64_t start_us) {
  if (n_flows < 1) fail(Errc::InvalidArgument, "n_flows must be >= 1");
  Rng rng = Rng(seed).derive(0xa77ac4 + static_cast<std::uint64_t>(kind));
  std::vector<FlowSpec> specs(n_flows);
  std::int64_t clock = start_us;
  for (std::size_t i = 0; i < n_flows; ++i) {
    FlowSpec& f = specs[i];
    const std::uint64_t id = base_index + i;
    f.label = Label::Anomaly;
    f.kind = kind;
    f.proto = kProtoTcp;
    switch (kind) {
      case AttackKind::Flood:
        // High-volume one-way bursts at 1/100 of the benign pacing scale.
        clock += std::max<std::int64_t>(
            1, std::llround(rng.exponential(profile.arrival_mean_s / 4) * 1e6));
        f.gap_us = pace_us(rng, {profile.pacing.shape, profile.pacing.scale / 100.0});
        f.pkts = static_cast<int>(rng.uniform_int(20, 40));
        f.src = source_addr(id, 64);
        f.dst = "172.16.0.9";
        f.dport = 80;
        f.unidirectional = true;
        break;
      case AttackKind::BruteForce:
        // Many short credential-guessing flows against a single service port.
        clock += std::max<std::int64_t>(
            1, std::llround(rng.exponential(profile.arrival_mean_s / 2) * 1e6));
        f.gap_us = pace_us(rng, {profile.pacing.shape, profile.pacing.scale / 20.0});
        f.pkts = static_cast<int>(rng.uniform_int(3, 6));
        f.src = source_addr(id, 128);
        f.dst = "172.16.0.10";
        f.dport = 22;
        break;
      case AttackKind::Infiltration:
        // Few long-lived, low-rate flows.
        clock += std::max<std::int64_t>(
            1, std::llround(rng.exponential(profile.arrival_mean_s * 4) * 1e6));
        f.gap_us = pace_us(rng, {profile.pacing.shape, profile.pacing.scale * 10.0});
        f.pkts = static_cast<int>(rng.uniform_int(30, 60));
        f.src = source_addr(id, 192);
        f.dst = "172.16.0.11";
        f.dport = 8443;
        break;
    }
    f.sport = source_port(id);
    f.start_us = clock;
  }
  return specs;
}

std::vector<FlowSpec> gen_traffic(Scenario scenario, std::size_t n_benign, std::size_t n_attack,
                                  std::uint64_t seed, const SynthProfile& profile,
                                  std::uint64_t base_index, std::int64_t start_us) {
  if (n_benign < 1) fail(Errc::InvalidArgument, "n_benign must be >= 1");
  std::vector<FlowSpec> specs =
      gen_benign(n_benign, profile.pacing, seed, profile, base_index, start_us);
  if (scenario == Scenario::Benign || n_attack == 0) return specs;

  std::vector<FlowSpec> attacks;
  if (scenario == Scenario::Mixed) {
    const std::size_t per = std::max<std::size_t>(1, n_attack / 3);
    for (const AttackKind kind :
         {AttackKind::Flood, AttackKind::BruteForce, AttackKind::Infiltration}) {
      const std::size_t n =
          kind == AttackKind::Infiltration ? std::max<std::size_t>(1, n_attack - 2 * per) : per;
      auto batch = gen_attack(kind, n, seed, profile, base_index + specs.size() + attacks.size(),
                              start_us);
      attacks.insert(attacks.end(), batch.begin(), batch.end());
    }
  } else {
    AttackKind kind = AttackKind::Flood;
    if (scenario == Scenario::BruteForce) kind = AttackKind::BruteForce;
    if (scenario == Scenario::Infiltration) kind = AttackKind::Infiltration;
    attacks = gen_attack(kind, n_attack, seed, profile, base_index + specs.size(), start_us);
  }
  specs.insert(specs.end(), attacks.begin(), attacks.end());
  std::sort(specs.begin(), specs.end(), [](const FlowSpec& a, const FlowSpec& b) {
    if (a.start_us != b.start_us) return a.start_us < b.start_us;
    if (a.src != b.src) return a.src < b.src;
    return a.sport < b.sport;
  });
  return specs;
}

std::vector<FlowSpec> gen_scenario(Scenario scenario, std::size_t total_flows, std::uint64_t seed,
                                   const SynthProfile& profile, std::uint64_t base_index,
                                   std::int64_t start_us) {
  if (total_flows < 1) fail(Errc::InvalidArgument, "total_flows must be >= 1");
  if (scenario == Scenario::Benign)
    return gen_traffic(scenario, total_flows, 0, seed, profile, base_index, start_us);
  const auto n_benign = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(kBenignMixFraction *
                                               static_cast<double>(total_flows))));
  return gen_traffic(scenario, n_benign, total_flows - n_benign, seed, profile, base_index,
                     start_us);
}

namespace {

PacketRecord spec_packet(const FlowSpec& f, int j) {
  PacketRecord p;
  p.timestamp_us = f.start_us + static_cast<std::int64_t>(j) * f.gap_us;
  const bool forward = f.unidirectional || j % 2 == 0;
  if (forward) {
    p.src = f.src;
    p.dst = f.dst;
    p.src_port = f.sport;
    p.dst_port = f.dport;
  } else {
    p.src = f.dst;
    p.dst = f.src;
    p.src_port = f.dport;
    p.dst_port = f.sport;
  }
  p.protocol = f.proto;
  if (f.proto == kProtoTcp) {
    if (f.unidirectional) {
      p.tcp_flags = tcp_flag::kSyn;  // flood: nothing but SYNs
    } else if (j == 0) {
      p.tcp_flags = tcp_flag::kSyn;
    } else if (j == f.pkts - 1) {
      p.tcp_flags = tcp_flag::kFin | tcp_flag::kAck;
    } else {
      p.tcp_flags = tcp_flag::kAck;
    }
  }
  return p;
}

}  // namespace

void emit_packets(std::span<const FlowSpec> specs,
                  const std::function<void(const PacketRecord&)>& sink) {
  // Specs must already be sorted by start time (gen_* emit them that way;
  // gen_scenario re-sorts after merging).
  using HeapItem = std::tuple<std::int64_t, std::size_t, int>;  // (ts, spec idx, pkt idx)
  std::priority_queue<HeapItem, std::vector<HeapItem>, std::greater<>> heap;
  std::size_t next_spec = 0;
  while (next_spec < specs.size() || !heap.empty()) {
    if (!heap.empty() && next_spec < specs.size() &&
        specs[next_spec].start_us > std::get<0>(heap.top())) {
      const auto [ts, si, pj] = heap.top();
      heap.pop();
      sink(spec_packet(specs[si], pj));
      if (pj + 1 < specs[si].pkts) heap.emplace(ts + specs[si].gap_us, si, pj + 1);
    } else if (next_spec < specs.size()) {
      heap.emplace(specs[next_spec].start_us, next_spec, 0);
      ++next_spec;
    } else {
      const auto [ts, si, pj] = heap.top();
      heap.pop();
      sink(spec_packet(specs[si], pj));
      if (pj + 1 < specs[si].pkts) heap.emplace(ts + specs[si].gap_us, si, pj + 1);
    }
  }
}

std::vector<PacketRecord> specs_to_packets(std::span<const FlowSpec> specs) {
  std::vector<PacketRecord> out;
  emit_packets(specs, [&](const PacketRecord& p) { out.push_back(p); });
  return out;
}

std::string truth_csv_header() { return "key,label"; }

void write_truth_csv(std::ostream& out, std::span<const FlowSpec> specs) {
  out << truth_csv_header() << '\n';
  for (const auto& f : specs) out << f.key_string() << ',' << label_name(f.label) << '\n';
}

std::unordered_map<std::string, Label> read_truth_csv(std::istream& in) {
  std::unordered_map<std::string, Label> truth;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("key,", 0) == 0) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != 2) fail(Errc::Parse, "bad truth row: " + line);
    truth[cells[0]] = label_from_string(cells[1]);
  }
  return truth;
}

std::unordered_map<std::string, Label> read_truth_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open truth CSV: " + path);
  return read_truth_csv(in);
}

}  // namespace flowsentry
