#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "core/types.hpp"

namespace flowsentry {

enum class DetectionSource { CnnDetector, WeibullDetector };
enum class PolicyAction { Alert, Block };

const char* detection_source_name(DetectionSource s);
DetectionSource detection_source_from_string(const std::string& s);
const char* policy_action_name(PolicyAction a);
PolicyAction policy_action_from_string(const std::string& s);

/// Smallest match language an IDS could act on from the feature set:
/// destination port, protocol, and a band on the flow IAT mean.
struct PolicyMatch {
  std::uint16_t dst_port = 0;
  std::uint8_t protocol = 0;
  std::int64_t iat_low_us = 0;
  std::int64_t iat_high_us = 0;
  bool operator==(const PolicyMatch&) const = default;
};

struct PolicyRecord {
  std::string policy_id;  // deterministic digest of (source, evidence, match)
  std::int64_t created_at_us = 0;
  DetectionSource source = DetectionSource::WeibullDetector;
  PolicyMatch match;
  PolicyAction action = PolicyAction::Alert;
  std::string evidence;  // flagged window or image span reference
};

struct Detection {
  DetectionSource source = DetectionSource::WeibullDetector;
  std::string evidence;
  PolicyMatch match;
  PolicyAction action = PolicyAction::Alert;
};

struct IdsRule {
  PolicyMatch match;
  std::vector<std::string> policy_ids;  // policies backing this rule
};

struct IdsRuleSet {
  std::uint64_t version = 0;
  std::vector<IdsRule> rules;
};

/// Append-only JSON-lines policy store. Reopening replays the log, which
/// reconstructs both the policies and the ruleset version history.
class PolicyStore {
 public:
  /// Loads (or creates) the log at path. Throws StoreUnavailable.
  explicit PolicyStore(std::string path);

  /// Durably appends a policy derived from the detection. Idempotent:
  /// an identical detection maps to the same policy_id and is not re-stored.
  PolicyRecord record_anomaly(const Detection& detection, std::int64_t now_us);

  /// New ruleset version with one rule per unique policy match tuple.
  /// The push event is appended to the log.
  IdsRuleSet push_rules(std::int64_t now_us);

  const std::vector<PolicyRecord>& policies() const { return policies_; }
  std::uint64_t version() const { return version_; }
  /// Rebuilds the current ruleset without bumping the version.
  IdsRuleSet current_rules() const;
  const std::string& path() const { return path_; }

 private:
  void append_line(const std::string& line);

  std::string path_;
  std::vector<PolicyRecord> policies_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::uint64_t version_ = 0;
};

std::string policy_id_for(const Detection& detection);

/// Per-rule hit counts over a flow stream: a flow hits a rule when dst_port
/// and protocol match and its flow IAT mean falls inside the band.
std::vector<std::uint64_t> apply_rules(const IdsRuleSet& rules,
                                       std::span<const FeatureVector> flows);

bool rule_matches(const PolicyMatch& match, const FeatureVector& flow);

std::string ruleset_to_json(const IdsRuleSet& rules);
IdsRuleSet ruleset_from_json(const std::string& text);
void save_ruleset_file(const std::string& path, const IdsRuleSet& rules);

std::string hits_csv(const IdsRuleSet& rules, std::span<const std::uint64_t> hits);

}  // namespace flowsentry
