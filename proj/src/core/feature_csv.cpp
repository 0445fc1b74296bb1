#include "core/feature_csv.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "core/csv.hpp"
#include "core/error.hpp"

namespace flowsentry {

const std::array<std::string, kFeatureCount>& feature_column_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "Dst Port",      "Protocol",     "Flow Duration", "Tot Fwd Pkts", "Tot Bwd Pkts",
      "Flow Pkts/s",   "Flow IAT Mean", "Flow IAT Std", "Flow IAT Max", "Flow IAT Min",
      "Flow IAT Tot",  "Fwd IAT Mean", "Fwd IAT Std",  "Fwd IAT Max",  "Fwd IAT Min",
      "Bwd IAT Tot",   "Bwd IAT Mean", "Bwd IAT Std",  "Bwd IAT Max",  "Bwd IAT Min",
  };
  return names;
}

std::string feature_csv_header() {
  std::string h;
  for (const auto& name : feature_column_names()) {
    h += name;
    h += ',';
  }
  h += "Label";
  return h;
}

std::string feature_csv_row(const FeatureVector& fv) {
  std::string row;
  row.reserve(kFeatureCount * 14 + 10);
  for (double v : fv.values) {
    row += format_fixed6(v);
    row += ',';
  }
  row += label_name(fv.label);
  return row;
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureVector>& rows) {
  out << feature_csv_header() << '\n';
  for (const auto& fv : rows) out << feature_csv_row(fv) << '\n';
}

namespace {

std::string normalize_header(std::string_view cell) {
  std::string out;
  bool pending_space = false;
  for (char c : cell) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

// Maps normalized header spellings (2018 short forms and 2017 long forms)
// onto feature slots.
const std::unordered_map<std::string, FeatureId>& header_aliases() {
  static const std::unordered_map<std::string, FeatureId> aliases = {
      {"dst port", FeatureId::DstPort},
      {"destination port", FeatureId::DstPort},
      {"protocol", FeatureId::Protocol},
      {"flow duration", FeatureId::FlowDuration},
      {"tot fwd pkts", FeatureId::TotFwdPkts},
      {"total fwd packets", FeatureId::TotFwdPkts},
      {"total fwd packet", FeatureId::TotFwdPkts},
      {"tot bwd pkts", FeatureId::TotBwdPkts},
      {"total backward packets", FeatureId::TotBwdPkts},
      {"total bwd packets", FeatureId::TotBwdPkts},
      {"flow pkts/s", FeatureId::FlowPktsPerSec},
      {"flow packets/s", FeatureId::FlowPktsPerSec},
      {"flow iat mean", FeatureId::FlowIatMean},
      {"flow iat std", FeatureId::FlowIatStd},
      {"flow iat max", FeatureId::FlowIatMax},
      {"flow iat min", FeatureId::FlowIatMin},
      {"flow iat tot", FeatureId::FlowIatTot},
      {"flow iat total", FeatureId::FlowIatTot},
      {"fwd iat mean", FeatureId::FwdIatMean},
      {"fwd iat std", FeatureId::FwdIatStd},
      {"fwd iat max", FeatureId::FwdIatMax},
      {"fwd iat min", FeatureId::FwdIatMin},
      {"bwd iat tot", FeatureId::BwdIatTot},
      {"bwd iat total", FeatureId::BwdIatTot},
      {"bwd iat mean", FeatureId::BwdIatMean},
      {"bwd iat std", FeatureId::BwdIatStd},
      {"bwd iat max", FeatureId::BwdIatMax},
      {"bwd iat min", FeatureId::BwdIatMin},
  };
  return aliases;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace

std::vector<FeatureVector> read_feature_csv(std::istream& in, FeatureCsvStats* stats) {
  FeatureCsvStats local;
  FeatureCsvStats& st = stats ? *stats : local;

  std::string line;
  if (!std::getline(in, line)) fail(Errc::EmptyInput, "feature CSV has no header");
  const auto header_cells = split_csv_line(line);

  std::array<int, kFeatureCount> column_of;
  column_of.fill(-1);
  int label_col = -1;
  int duration_col = -1;
  for (std::size_t i = 0; i < header_cells.size(); ++i) {
    const std::string norm = normalize_header(header_cells[i]);
    if (norm == "label") {
      label_col = static_cast<int>(i);
      continue;
    }
    if (norm == "flow duration") duration_col = static_cast<int>(i);
    auto it = header_aliases().find(norm);
    if (it != header_aliases().end()) {
      auto slot = static_cast<std::size_t>(it->second);
      if (column_of[slot] < 0) column_of[slot] = static_cast<int>(i);
    }
  }

  // Genuine CICIDS2018 files carry no "Flow IAT Tot" column; the quantity
  // telescopes to the flow duration, so fall back to that column.
  const auto flow_iat_tot_slot = static_cast<std::size_t>(FeatureId::FlowIatTot);
  if (column_of[flow_iat_tot_slot] < 0 && duration_col >= 0)
    column_of[flow_iat_tot_slot] = duration_col;

  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    if (column_of[i] < 0)
      fail(Errc::Parse, "feature CSV is missing column \"" + feature_column_names()[i] + "\"");
  }

  const std::string header_first = header_cells.empty() ? "" : header_cells[0];
  std::vector<FeatureVector> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (!cells.empty() && cells[0] == header_first) {  // repeated mid-file header
      ++st.rows_skipped;
      continue;
    }
    FeatureVector fv;
    bool ok = true;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
      const auto col = static_cast<std::size_t>(column_of[i]);
      if (col >= cells.size() || !parse_double(cells[col], fv.values[i])) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      ++st.rows_skipped;
      continue;
    }
    if (label_col >= 0 && static_cast<std::size_t>(label_col) < cells.size())
      fv.label = label_from_string(cells[static_cast<std::size_t>(label_col)]);
    rows.push_back(fv);
    ++st.rows_read;
  }
  return rows;
}

std::vector<FeatureVector> read_feature_csv_file(const std::string& path, FeatureCsvStats* stats) {
  std::ifstream in(path);
  if (!in) fail(Errc::Io, "cannot open feature CSV: " + path);
  return read_feature_csv(in, stats);
}

void write_feature_csv_file(const std::string& path, const std::vector<FeatureVector>& rows) {
  std::ofstream out(path);
  if (!out) fail(Errc::Io, "cannot write feature CSV: " + path);
  write_feature_csv(out, rows);
}

}  // namespace flowsentry
