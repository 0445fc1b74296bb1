#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/types.hpp"
#include "core/weibull.hpp"

namespace flowsentry {

enum class AttackKind { Flood, BruteForce, Infiltration };

AttackKind attack_kind_from_string(const std::string& s);
const char* attack_kind_name(AttackKind k);

enum class Scenario { Benign, Flood, BruteForce, Infiltration, Mixed };

Scenario scenario_from_string(const std::string& s);
const char* scenario_name(Scenario s);

// Paper traffic mix: 6584535 benign of 9332770 flows.
inline constexpr double kBenignMixFraction = 0.7055;

struct SynthProfile {
  WeibullParams pacing{1.5, 0.05};  // benign per-flow pacing draw, seconds
  int min_pkts = 4, max_pkts = 10;
  double tcp_fraction = 0.8;
  double arrival_mean_s = 0.002;  // exponential flow inter-start gap
};

// A generated flow: packets run at a constant pace drawn once per flow from
// the Weibull pacing distribution, so the metered flow IAT mean reproduces
// the draw exactly and refitting the metered stream recovers the parameters.
struct FlowSpec {
  std::int64_t start_us = 0;
  std::int64_t gap_us = 1;
  int pkts = 2;
  std::string src, dst;
  std::uint16_t sport = 0, dport = 0;
  std::uint8_t proto = kProtoTcp;
  Label label = Label::Benign;
  AttackKind kind = AttackKind::Flood;  // meaningful only for anomalies
  bool unidirectional = false;          // flood flows get no responses

  std::string key_string() const;
};

/// Benign flows with Weibull-drawn pacing. base_index keeps 5-tuples unique
/// across calls; start_us offsets the whole batch.
std::vector<FlowSpec> gen_benign(std::size_t n_flows, const WeibullParams& pacing,
                                 std::uint64_t seed, const SynthProfile& profile = {},
                                 std::uint64_t base_index = 0, std::int64_t start_us = 0);

/// Attack flows relative to the benign profile: Flood runs at 1/100 of the
/// benign pacing scale with no responses, BruteForce hammers one destination
/// port with short flows, Infiltration is few long sparse flows.
std::vector<FlowSpec> gen_attack(AttackKind kind, std::size_t n_flows, std::uint64_t seed,
                                 const SynthProfile& profile = {}, std::uint64_t base_index = 0,
                                 std::int64_t start_us = 0);

/// Explicit benign/attack composition, merged into one start-time-ordered
/// batch. Scenario::Mixed splits the attacks across all kinds; n_attack is
/// ignored for Scenario::Benign.
std::vector<FlowSpec> gen_traffic(Scenario scenario, std::size_t n_benign, std::size_t n_attack,
                                  std::uint64_t seed, const SynthProfile& profile = {},
                                  std::uint64_t base_index = 0, std::int64_t start_us = 0);

/// Scenario composition at the paper's 70.55/29.45 benign/anomaly balance
/// (Scenario::Benign is all benign; Mixed splits attacks across all kinds).
std::vector<FlowSpec> gen_scenario(Scenario scenario, std::size_t total_flows, std::uint64_t seed,
                                   const SynthProfile& profile = {}, std::uint64_t base_index = 0,
                                   std::int64_t start_us = 0);

/// Emits the specs' packets in global timestamp order (stable under ties)
/// without materializing the whole stream.
void emit_packets(std::span<const FlowSpec> specs,
                  const std::function<void(const PacketRecord&)>& sink);

std::vector<PacketRecord> specs_to_packets(std::span<const FlowSpec> specs);

std::string truth_csv_header();
void write_truth_csv(std::ostream& out, std::span<const FlowSpec> specs);
std::unordered_map<std::string, Label> read_truth_csv(std::istream& in);
std::unordered_map<std::string, Label> read_truth_csv_file(const std::string& path);

}  // namespace flowsentry
