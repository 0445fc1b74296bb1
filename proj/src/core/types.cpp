#include "core/types.hpp"

#include "core/error.hpp"

namespace flowsentry {

const char* label_name(Label l) {
  switch (l) {
    case Label::Benign: return "Benign";
    case Label::Anomaly: return "Anomaly";
    case Label::Unlabeled: return "Unlabeled";
  }
  return "Unlabeled";
}

Label label_from_string(const std::string& s) {
  if (s == "Benign" || s == "BENIGN" || s == "benign") return Label::Benign;
  if (s == "Anomaly" || s == "ANOMALY" || s == "anomaly") return Label::Anomaly;
  if (s == "Unlabeled") return Label::Unlabeled;
  // CICIDS2018 names specific attacks in the label column; anything that is
  // not benign counts as an anomaly.
  return Label::Anomaly;
}

const char* termination_cause_name(TerminationCause c) {
  switch (c) {
    case TerminationCause::TcpFin: return "TcpFin";
    case TerminationCause::TcpRst: return "TcpRst";
    case TerminationCause::Timeout: return "Timeout";
    case TerminationCause::CaptureEnd: return "CaptureEnd";
  }
  return "CaptureEnd";
}

TerminationCause termination_cause_from_string(const std::string& s) {
  if (s == "TcpFin") return TerminationCause::TcpFin;
  if (s == "TcpRst") return TerminationCause::TcpRst;
  if (s == "Timeout") return TerminationCause::Timeout;
  if (s == "CaptureEnd") return TerminationCause::CaptureEnd;
  fail(Errc::Parse, "unknown termination cause: " + s);
}

std::string FlowKey::to_string() const {
  std::string out;
  out.reserve(src.size() + dst.size() + 16);
  out += src;
  out += ':';
  out += std::to_string(src_port);
  out += '>';
  out += dst;
  out += ':';
  out += std::to_string(dst_port);
  out += '/';
  out += std::to_string(protocol);
  return out;
}

}  // namespace flowsentry
