// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tfcl/dataio.hpp"
#include "tfcl/nn.hpp"
#include "tfcl/series.hpp"

namespace tfcl::metrics {

struct EvalReport {
  // Mean per-step NRMSE over the first Lyapunov time (the full horizon when
  // the horizon is shorter or no LLE is known).
  double nrmse_mean_1lt = 0.0;
  // Mean NRMSE of the last ceil(m/10) steps of that same one-LT slice.
  double nrmse_last10 = 0.0;
  std::vector<double> nrmse_curve;  // per-step NRMSE over the full horizon, averaged over sequences
  std::vector<double> r2_curve;     // per-step pooled R^2 over the full horizon
  std::optional<double> lt_r2_horizon;  // absent without an LLE
  std::size_t horizon_steps = 0;
  std::size_t n_test_sequences = 0;
  double threshold = 0.9;
};

std::string to_json(const EvalReport& r);
EvalReport eval_report_from_json(const std::string& text);

double nrmse_step(std::span<const double> y, std::span<const double> yhat, double sigma);

struct HorizonNrmse {
  double mean = 0.0;
  double last10 = 0.0;
};
HorizonNrmse nrmse_horizon(const Series& truth, const Series& pred, double sigma);

// R^2 at each step, pooling all sequences and dimensions; the reference mean
// is the per-dimension mean of the truths at that step.
std::vector<double> r2_per_step(std::span<const Series> truths, std::span<const Series> preds);

// k * dt * lle where k is the first step with R^2 < threshold (the curve
// length when there is none).
double lt_horizon(std::span<const double> r2_curve, double dt, double lle, double threshold = 0.9);

// (1 - candidate / baseline) * 100.
double rel_improvement(double baseline_nrmse, double candidate_nrmse);

// Produces horizon-step predictions for a window; the input is the warm-up.
using Forecaster = std::function<std::vector<Series>(std::span<const data::SequencePair>, std::size_t horizon)>;

Forecaster model_forecaster(const nn::ModelParams& params, std::size_t shard_size = 16, bool parallel = true);

struct EvalOptions {
  std::size_t warmup = 150;                    // encoder input length n
  std::size_t horizon_steps = 0;               // 0: one Lyapunov time (requires an LLE)
  std::size_t stride = 0;                      // 0: non-overlapping windows (stride = horizon)
  data::Context context = data::Context::within_split;
  double threshold = 0.9;
  data::Split split = data::Split::test;
};

EvalReport evaluate(const Forecaster& model, const data::Dataset& ds, const EvalOptions& opts);

}  // namespace tfcl::metrics
