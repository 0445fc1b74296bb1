#pragma once

#include <string>

#include "core/options.hpp"

namespace flowsentry {

// File-level pipeline stages behind the CLI subcommands and the C command
// API. Every function takes a flat option set; paths accept "-" for
// stdin/stdout. Errors surface as flowsentry::Error.

void cmd_synth(const Options& opts);          // flows, seed, scenario, shape, scale, out, truth-out
void cmd_meter(const Options& opts);          // in, format, timeout-us, out, stats-out
void cmd_features(const Options& opts);       // in, labels, out
void cmd_fit_baseline(const Options& opts);   // in, label, now-us, out
void cmd_detect_weibull(const Options& opts); // in, baseline, window, threshold, out
void cmd_encode(const Options& opts);         // in, spec, spec-out, out-dir, manifest
void cmd_train(const Options& opts);          // manifest, epochs, batch, lr, momentum, seed, out, log
void cmd_predict(const Options& opts);        // model, manifest, threshold, out
void cmd_evaluate(const Options& opts);       // in, threshold, out, table, pr-out
void cmd_push_rules(const Options& opts);     // store, now-us, out, apply, hits-out
void cmd_pipeline(const Options& opts);       // scenario, seed, out-dir, cycles, ...

}  // namespace flowsentry
