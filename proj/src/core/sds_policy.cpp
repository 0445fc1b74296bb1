#include "core/sds_policy.hpp"

#include <algorithm>
#include <fstream>
#include <json.hpp>

#include "core/error.hpp"

namespace flowsentry {

const char* detection_source_name(DetectionSource s) {
  return s == DetectionSource::CnnDetector ? "CnnDetector" : "WeibullDetector";
}

DetectionSource detection_source_from_string(const std::string& s) {
  if (s == "CnnDetector") return DetectionSource::CnnDetector;
  if (s == "WeibullDetector") return DetectionSource::WeibullDetector;
  fail(Errc::Parse, "unknown detection source: " + s);
}

const char* policy_action_name(PolicyAction a) {
  return a == PolicyAction::Block ? "Block" : "Alert";
}

PolicyAction policy_action_from_string(const std::string& s) {
  if (s == "Alert") return PolicyAction::Alert;
  if (s == "Block") return PolicyAction::Block;
  fail(Errc::Parse, "unknown policy action: " + s);
}

std::string policy_id_for(const Detection& d) {
  // FNV-1a over the identity of the detection; stable across runs.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::string src = detection_source_name(d.source);
  mix(src.data(), src.size());
  mix(d.evidence.data(), d.evidence.size());
  mix(&d.match.dst_port, sizeof(d.match.dst_port));
  mix(&d.match.protocol, sizeof(d.match.protocol));
  mix(&d.match.iat_low_us, sizeof(d.match.iat_low_us));
  mix(&d.match.iat_high_us, sizeof(d.match.iat_high_us));
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

nlohmann::json policy_to_json(const PolicyRecord& p) {
  return {
      {"event", "policy"},
      {"policy_id", p.policy_id},
      {"created_at", p.created_at_us},
      {"source", detection_source_name(p.source)},
      {"match",
       {{"dst_port", p.match.dst_port},
        {"protocol", p.match.protocol},
        {"iat_low_us", p.match.iat_low_us},
        {"iat_high_us", p.match.iat_high_us}}},
      {"action", policy_action_name(p.action)},
      {"evidence", p.evidence},
  };
}

PolicyRecord policy_from_json(const nlohmann::json& j) {
  PolicyRecord p;
  p.policy_id = j.at("policy_id").get<std::string>();
  p.created_at_us = j.at("created_at").get<std::int64_t>();
  p.source = detection_source_from_string(j.at("source").get<std::string>());
  const auto& m = j.at("match");
  p.match.dst_port = m.at("dst_port").get<std::uint16_t>();
  p.match.protocol = m.at("protocol").get<std::uint8_t>();
  p.match.iat_low_us = m.at("iat_low_us").get<std::int64_t>();
  p.match.iat_high_us = m.at("iat_high_us").get<std::int64_t>();
  p.action = policy_action_from_string(j.at("action").get<std::string>());
  p.evidence = j.at("evidence").get<std::string>();
  return p;
}

}  // namespace

PolicyStore::PolicyStore(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (in) {
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
        const std::string event = j.value("event", "policy");
        if (event == "push") {
          version_ = j.at("version").get<std::uint64_t>();
        } else {
          PolicyRecord p = policy_from_json(j);
          if (!by_id_.contains(p.policy_id)) {
            by_id_[p.policy_id] = policies_.size();
            policies_.push_back(std::move(p));
          }
        }
      } catch (const nlohmann::json::exception& e) {
        fail(Errc::StoreUnavailable, "corrupt policy log at " + path_ + ":" +
                                         std::to_string(lineno) + ": " + e.what());
      }
    }
  } else {
    // Create the file now so later appends cannot silently go nowhere.
    std::ofstream out(path_, std::ios::app);
    if (!out) fail(Errc::StoreUnavailable, "cannot open policy store: " + path_);
  }
}

void PolicyStore::append_line(const std::string& line) {
  std::ofstream out(path_, std::ios::app);
  if (!out) fail(Errc::StoreUnavailable, "cannot append to policy store: " + path_);
  out << line << '\n';
  out.flush();
  if (!out) fail(Errc::StoreUnavailable, "short append to policy store: " + path_);
}

PolicyRecord PolicyStore::record_anomaly(const Detection& detection, std::int64_t now_us) {
  if (detection.match.iat_low_us > detection.match.iat_high_us)
    fail(Errc::InvalidArgument, "policy IAT band low > high");
  const std::string id = policy_id_for(detection);
  if (auto it = by_id_.find(id); it != by_id_.end()) return policies_[it->second];

  PolicyRecord p;
  p.policy_id = id;
  p.created_at_us = now_us;
  p.source = detection.source;
  p.match = detection.match;
  p.action = detection.action;
  p.evidence = detection.evidence;
  append_line(policy_to_json(p).dump());
  by_id_[id] = policies_.size();
  policies_.push_back(p);
  return policies_.back();
}

IdsRuleSet PolicyStore::current_rules() const {
  IdsRuleSet rs;
  rs.version = version_;
  for (const auto& p : policies_) {
    auto it = std::find_if(rs.rules.begin(), rs.rules.end(),
                           [&](const IdsRule& r) { return r.match == p.match; });
    if (it == rs.rules.end()) {
      rs.rules.push_back({p.match, {p.policy_id}});
    } else {
      it->policy_ids.push_back(p.policy_id);
    }
  }
  return rs;
}

IdsRuleSet PolicyStore::push_rules(std::int64_t now_us) {
  IdsRuleSet rs = current_rules();
  rs.version = ++version_;
  nlohmann::json j = {{"event", "push"},
                      {"version", rs.version},
                      {"at", now_us},
                      {"rule_count", rs.rules.size()}};
  append_line(j.dump());
  return rs;
}

bool rule_matches(const PolicyMatch& match, const FeatureVector& flow) {
  if (static_cast<std::uint16_t>(flow[FeatureId::DstPort]) != match.dst_port) return false;
  if (static_cast<std::uint8_t>(flow[FeatureId::Protocol]) != match.protocol) return false;
  const auto iat = static_cast<std::int64_t>(std::llround(flow[FeatureId::FlowIatMean]));
  return iat >= match.iat_low_us && iat <= match.iat_high_us;
}

std::vector<std::uint64_t> apply_rules(const IdsRuleSet& rules,
                                       std::span<const FeatureVector> flows) {
  std::vector<std::uint64_t> hits(rules.rules.size(), 0);
  for (const auto& flow : flows) {
    for (std::size_t r = 0; r < rules.rules.size(); ++r)
      if (rule_matches(rules.rules[r].match, flow)) ++hits[r];
  }
  return hits;
}

std::string ruleset_to_json(const IdsRuleSet& rules) {
  nlohmann::json out;
  out["version"] = rules.version;
  auto arr = nlohmann::json::array();
  for (const auto& r : rules.rules) {
    arr.push_back({{"dst_port", r.match.dst_port},
                   {"protocol", r.match.protocol},
                   {"iat_low_us", r.match.iat_low_us},
                   {"iat_high_us", r.match.iat_high_us},
                   {"policy_ids", r.policy_ids}});
  }
  out["rules"] = arr;
  return out.dump(2);
}

IdsRuleSet ruleset_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    IdsRuleSet rs;
    rs.version = j.at("version").get<std::uint64_t>();
    for (const auto& r : j.at("rules")) {
      IdsRule rule;
      rule.match.dst_port = r.at("dst_port").get<std::uint16_t>();
      rule.match.protocol = r.at("protocol").get<std::uint8_t>();
      rule.match.iat_low_us = r.at("iat_low_us").get<std::int64_t>();
      rule.match.iat_high_us = r.at("iat_high_us").get<std::int64_t>();
      rule.policy_ids = r.at("policy_ids").get<std::vector<std::string>>();
      rs.rules.push_back(std::move(rule));
    }
    return rs;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::Parse, std::string("bad ruleset JSON: ") + e.what());
  }
}

void save_ruleset_file(const std::string& path, const IdsRuleSet& rules) {
  std::ofstream out(path);
  if (!out) fail(Errc::Io, "cannot write ruleset: " + path);
  out << ruleset_to_json(rules) << '\n';
}

std::string hits_csv(const IdsRuleSet& rules, std::span<const std::uint64_t> hits) {
  std::string out = "rule_index,dst_port,protocol,iat_low_us,iat_high_us,hits\n";
  for (std::size_t r = 0; r < rules.rules.size(); ++r) {
    const auto& m = rules.rules[r].match;
    out += std::to_string(r) + "," + std::to_string(m.dst_port) + "," +
           std::to_string(m.protocol) + "," + std::to_string(m.iat_low_us) + "," +
           std::to_string(m.iat_high_us) + "," + std::to_string(r < hits.size() ? hits[r] : 0) +
           "\n";
  }
  return out;
}

}  // namespace flowsentry
