#include "flowsentry/flowsentry.h"

#include <cstring>
#include <string>

#include "core/cnn.hpp"
#include "core/commands.hpp"
#include "core/error.hpp"
#include "core/evaluator.hpp"
#include "core/flow_meter.hpp"
#include "core/options.hpp"
#include "core/weibull.hpp"

namespace {

thread_local std::string g_last_error;

fsn_status status_from_errc(flowsentry::Errc code) {
  using flowsentry::Errc;
  switch (code) {
    case Errc::InvalidArgument: return FSN_ERR_INVALID_ARGUMENT;
    case Errc::Io: return FSN_ERR_IO;
    case Errc::Parse: return FSN_ERR_PARSE;
    case Errc::OutOfOrderTimestamp: return FSN_ERR_OUT_OF_ORDER_TIMESTAMP;
    case Errc::TooFewSamples: return FSN_ERR_TOO_FEW_SAMPLES;
    case Errc::NoConvergence: return FSN_ERR_NO_CONVERGENCE;
    case Errc::EmptySample: return FSN_ERR_EMPTY_SAMPLE;
    case Errc::EmptyInput: return FSN_ERR_EMPTY_INPUT;
    case Errc::MixedLabels: return FSN_ERR_MIXED_LABELS;
    case Errc::MissingSpec: return FSN_ERR_MISSING_SPEC;
    case Errc::ShapeMismatch: return FSN_ERR_SHAPE_MISMATCH;
    case Errc::SingleClassDataset: return FSN_ERR_SINGLE_CLASS_DATASET;
    case Errc::SingleClassTruth: return FSN_ERR_SINGLE_CLASS_TRUTH;
    case Errc::LengthMismatch: return FSN_ERR_LENGTH_MISMATCH;
    case Errc::StoreUnavailable: return FSN_ERR_STORE_UNAVAILABLE;
    case Errc::UnknownKind: return FSN_ERR_UNKNOWN_KIND;
    case Errc::Internal: return FSN_ERR_INTERNAL;
  }
  return FSN_ERR_INTERNAL;
}

template <typename Fn>
fsn_status guarded(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return FSN_OK;
  } catch (const flowsentry::Error& e) {
    g_last_error = e.what();
    return status_from_errc(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FSN_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return FSN_ERR_INTERNAL;
  }
}

fsn_status run_command(void (*cmd)(const flowsentry::Options&), const char* options) {
  return guarded([&] {
    const flowsentry::Options opts =
        flowsentry::Options::parse(options == nullptr ? "" : options);
    cmd(opts);
  });
}

void fill_flow_features(const flowsentry::FlowRecord& flow, fsn_flow_features* out) {
  const flowsentry::FeatureVector fv = flowsentry::extract_features(flow);
  std::memcpy(out->values, fv.values.data(), sizeof(out->values));
  const std::string key = flow.key.to_string();
  std::snprintf(out->key, sizeof(out->key), "%s", key.c_str());
  out->first_ts_us = flow.first_ts;
  out->last_ts_us = flow.last_ts;
  switch (flow.cause) {
    case flowsentry::TerminationCause::TcpFin: out->termination = FSN_TERM_TCP_FIN; break;
    case flowsentry::TerminationCause::TcpRst: out->termination = FSN_TERM_TCP_RST; break;
    case flowsentry::TerminationCause::Timeout: out->termination = FSN_TERM_TIMEOUT; break;
    case flowsentry::TerminationCause::CaptureEnd: out->termination = FSN_TERM_CAPTURE_END; break;
  }
}

}  // namespace

struct fsn_meter {
  flowsentry::FlowTable table;
};

struct fsn_model {
  flowsentry::CnnModel model;
};

extern "C" {

const char* fsn_version(void) { return "0.1.0"; }

const char* fsn_status_name(fsn_status status) {
  switch (status) {
    case FSN_OK: return "Ok";
    case FSN_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case FSN_ERR_IO: return "Io";
    case FSN_ERR_PARSE: return "Parse";
    case FSN_ERR_OUT_OF_ORDER_TIMESTAMP: return "OutOfOrderTimestamp";
    case FSN_ERR_TOO_FEW_SAMPLES: return "TooFewSamples";
    case FSN_ERR_NO_CONVERGENCE: return "NoConvergence";
    case FSN_ERR_EMPTY_SAMPLE: return "EmptySample";
    case FSN_ERR_EMPTY_INPUT: return "EmptyInput";
    case FSN_ERR_MIXED_LABELS: return "MixedLabels";
    case FSN_ERR_MISSING_SPEC: return "MissingSpec";
    case FSN_ERR_SHAPE_MISMATCH: return "ShapeMismatch";
    case FSN_ERR_SINGLE_CLASS_DATASET: return "SingleClassDataset";
    case FSN_ERR_SINGLE_CLASS_TRUTH: return "SingleClassTruth";
    case FSN_ERR_LENGTH_MISMATCH: return "LengthMismatch";
    case FSN_ERR_STORE_UNAVAILABLE: return "StoreUnavailable";
    case FSN_ERR_UNKNOWN_KIND: return "UnknownKind";
    case FSN_ERR_INTERNAL: return "Internal";
  }
  return "Unknown";
}

const char* fsn_last_error(void) { return g_last_error.c_str(); }

fsn_meter* fsn_meter_new(int64_t idle_timeout_us) {
  try {
    return new fsn_meter{flowsentry::FlowTable(
        idle_timeout_us <= 0 ? flowsentry::kDefaultIdleTimeoutUs : idle_timeout_us)};
  } catch (...) {
    g_last_error = "cannot create meter";
    return nullptr;
  }
}

void fsn_meter_free(fsn_meter* meter) { delete meter; }

fsn_status fsn_meter_ingest(fsn_meter* meter, const fsn_packet* packet, fsn_flow_sink sink,
                            void* user) {
  return guarded([&] {
    if (meter == nullptr || packet == nullptr || packet->src == nullptr ||
        packet->dst == nullptr)
      flowsentry::fail(flowsentry::Errc::InvalidArgument, "null meter or packet");
    flowsentry::PacketRecord rec;
    rec.timestamp_us = packet->timestamp_us;
    rec.src = packet->src;
    rec.dst = packet->dst;
    rec.src_port = packet->src_port;
    rec.dst_port = packet->dst_port;
    rec.protocol = packet->protocol;
    rec.tcp_flags = packet->tcp_flags;
    for (const auto& flow : meter->table.ingest(rec)) {
      if (sink == nullptr) continue;
      fsn_flow_features out;
      fill_flow_features(flow, &out);
      sink(&out, user);
    }
  });
}

fsn_status fsn_meter_finalize(fsn_meter* meter, fsn_flow_sink sink, void* user) {
  return guarded([&] {
    if (meter == nullptr) flowsentry::fail(flowsentry::Errc::InvalidArgument, "null meter");
    for (const auto& flow : meter->table.finalize()) {
      if (sink == nullptr) continue;
      fsn_flow_features out;
      fill_flow_features(flow, &out);
      sink(&out, user);
    }
  });
}

fsn_status fsn_weibull_fit(const double* samples, size_t count, fsn_weibull_params* out) {
  return guarded([&] {
    if (samples == nullptr || out == nullptr)
      flowsentry::fail(flowsentry::Errc::InvalidArgument, "null samples or output");
    const flowsentry::WeibullParams p =
        flowsentry::fit_weibull(std::span<const double>(samples, count));
    out->shape = p.shape;
    out->scale = p.scale;
  });
}

fsn_status fsn_ks_distance(const double* samples, size_t count, fsn_weibull_params params,
                           double* out) {
  return guarded([&] {
    if (samples == nullptr || out == nullptr)
      flowsentry::fail(flowsentry::Errc::InvalidArgument, "null samples or output");
    if (params.shape <= 0 || params.scale <= 0)
      flowsentry::fail(flowsentry::Errc::InvalidArgument, "shape and scale must be positive");
    *out = flowsentry::ks_distance(std::span<const double>(samples, count),
                                   {params.shape, params.scale});
  });
}

double fsn_default_ks_threshold(size_t window) {
  return flowsentry::default_ks_threshold(window);
}

fsn_status fsn_evaluate_counts(const double* scores, const int* truth_is_anomaly, size_t count,
                               double threshold, fsn_eval_counts* out) {
  return guarded([&] {
    if (scores == nullptr || truth_is_anomaly == nullptr || out == nullptr)
      flowsentry::fail(flowsentry::Errc::InvalidArgument, "null arguments");
    if (count == 0) flowsentry::fail(flowsentry::Errc::EmptyInput, "nothing to evaluate");
    out->tp = out->fp = out->tn = out->fn = 0;
    for (size_t i = 0; i < count; ++i) {
      const bool pred = scores[i] >= threshold;
      const bool truth = truth_is_anomaly[i] != 0;
      if (truth && pred)
        ++out->tp;
      else if (!truth && pred)
        ++out->fp;
      else if (!truth && !pred)
        ++out->tn;
      else
        ++out->fn;
    }
  });
}

fsn_status fsn_model_load(const char* path, fsn_model** out) {
  return guarded([&] {
    if (path == nullptr || out == nullptr)
      flowsentry::fail(flowsentry::Errc::InvalidArgument, "null path or output");
    *out = new fsn_model{flowsentry::load_checkpoint(path)};
  });
}

void fsn_model_free(fsn_model* model) { delete model; }

fsn_status fsn_model_score(const fsn_model* model, const uint8_t* rgb, int32_t height,
                           int32_t width, double* score) {
  return guarded([&] {
    if (model == nullptr || rgb == nullptr || score == nullptr)
      flowsentry::fail(flowsentry::Errc::InvalidArgument, "null arguments");
    if (height <= 0 || width <= 0)
      flowsentry::fail(flowsentry::Errc::ShapeMismatch, "non-positive dimensions");
    const flowsentry::Tensor input = flowsentry::pixels_to_input(
        std::span<const unsigned char>(rgb,
                                       static_cast<size_t>(height) * static_cast<size_t>(width) * 3),
        height, width);
    *score = flowsentry::forward_probs(model->model, input)[flowsentry::kClassAnomaly];
  });
}

fsn_status fsn_cmd_synth(const char* options) { return run_command(flowsentry::cmd_synth, options); }
fsn_status fsn_cmd_meter(const char* options) { return run_command(flowsentry::cmd_meter, options); }
fsn_status fsn_cmd_features(const char* options) {
  return run_command(flowsentry::cmd_features, options);
}
fsn_status fsn_cmd_fit_baseline(const char* options) {
  return run_command(flowsentry::cmd_fit_baseline, options);
}
fsn_status fsn_cmd_detect_weibull(const char* options) {
  return run_command(flowsentry::cmd_detect_weibull, options);
}
fsn_status fsn_cmd_encode(const char* options) {
  return run_command(flowsentry::cmd_encode, options);
}
fsn_status fsn_cmd_train(const char* options) { return run_command(flowsentry::cmd_train, options); }
fsn_status fsn_cmd_predict(const char* options) {
  return run_command(flowsentry::cmd_predict, options);
}
fsn_status fsn_cmd_evaluate(const char* options) {
  return run_command(flowsentry::cmd_evaluate, options);
}
fsn_status fsn_cmd_push_rules(const char* options) {
  return run_command(flowsentry::cmd_push_rules, options);
}
fsn_status fsn_cmd_pipeline(const char* options) {
  return run_command(flowsentry::cmd_pipeline, options);
}

}  // extern "C"
