#pragma once

#include <stdexcept>
#include <string>

namespace flowsentry {

enum class Errc {
  InvalidArgument = 1,
  Io,
  Parse,
  OutOfOrderTimestamp,
  TooFewSamples,
  NoConvergence,
  EmptySample,
  EmptyInput,
  MixedLabels,
  MissingSpec,
  ShapeMismatch,
  SingleClassDataset,
  SingleClassTruth,
  LengthMismatch,
  StoreUnavailable,
  UnknownKind,
  Internal,
};

inline const char* errc_name(Errc c) {
  switch (c) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
    case Errc::Parse: return "Parse";
    case Errc::OutOfOrderTimestamp: return "OutOfOrderTimestamp";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::NoConvergence: return "NoConvergence";
    case Errc::EmptySample: return "EmptySample";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MixedLabels: return "MixedLabels";
    case Errc::MissingSpec: return "MissingSpec";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::SingleClassDataset: return "SingleClassDataset";
    case Errc::SingleClassTruth: return "SingleClassTruth";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::StoreUnavailable: return "StoreUnavailable";
    case Errc::UnknownKind: return "UnknownKind";
    case Errc::Internal: return "Internal";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string msg) : std::runtime_error(std::move(msg)), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// Fit failed to converge; carries the last shape iterate so callers can inspect it.
class NoConvergenceError : public Error {
 public:
  NoConvergenceError(std::string msg, double last_shape)
      : Error(Errc::NoConvergence, std::move(msg)), last_shape_(last_shape) {}
  double last_shape() const noexcept { return last_shape_; }

 private:
  double last_shape_;
};

[[noreturn]] inline void fail(Errc code, std::string msg) { throw Error(code, std::move(msg)); }

}  // namespace flowsentry
