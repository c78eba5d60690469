// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include "tfcl/metrics.hpp"

#include <cmath>
#include <json.hpp>

#include "tfcl/error.hpp"
#include "tfcl/kernels.hpp"

namespace tfcl::metrics {

double nrmse_step(std::span<const double> y, std::span<const double> yhat, double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("nrmse: sigma must be > 0");
  if (y.size() != yhat.size() || y.empty()) throw InvalidInput("nrmse: vectors must have equal, nonzero length");
  double se = 0.0;
  for (std::size_t j = 0; j < y.size(); ++j) se += (y[j] - yhat[j]) * (y[j] - yhat[j]);
  return std::sqrt(se / static_cast<double>(y.size())) / sigma;
}

namespace {

std::span<const double> row_span(const Series& s, Eigen::Index t) {
  return {s.data() + t * s.cols(), static_cast<std::size_t>(s.cols())};
}

std::vector<double> step_nrmse(const Series& truth, const Series& pred, double sigma) {
  if (truth.rows() != pred.rows() || truth.cols() != pred.cols() || truth.rows() == 0)
    throw InvalidInput("nrmse: truth and prediction shapes differ");
  std::vector<double> out(static_cast<std::size_t>(truth.rows()));
  for (Eigen::Index t = 0; t < truth.rows(); ++t)
    out[static_cast<std::size_t>(t)] = nrmse_step(row_span(truth, t), row_span(pred, t), sigma);
  return out;
}

HorizonNrmse summarize(std::span<const double> curve) {
  const std::size_t m = curve.size();
  const std::size_t tail = (m + 9) / 10;
  HorizonNrmse h;
  for (double v : curve) h.mean += v;
  h.mean /= static_cast<double>(m);
  for (std::size_t t = m - tail; t < m; ++t) h.last10 += curve[t];
  h.last10 /= static_cast<double>(tail);
  return h;
}

}  // namespace

HorizonNrmse nrmse_horizon(const Series& truth, const Series& pred, double sigma) {
  return summarize(step_nrmse(truth, pred, sigma));
}

std::vector<double> r2_per_step(std::span<const Series> truths, std::span<const Series> preds) {
  if (truths.empty() || truths.size() != preds.size()) throw InvalidInput("r2: need equally many truths and predictions");
  const Eigen::Index m = truths.front().rows(), d = truths.front().cols();
  for (std::size_t s = 0; s < truths.size(); ++s)
    if (truths[s].rows() != m || truths[s].cols() != d || preds[s].rows() != m || preds[s].cols() != d)
      throw InvalidInput("r2: inconsistent shapes");
  std::vector<double> out(static_cast<std::size_t>(m));
  const double count = static_cast<double>(truths.size());
  for (Eigen::Index t = 0; t < m; ++t) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(d);
    for (const auto& y : truths) mean += y.row(t);
    mean /= count;
    double sse = 0.0, sst = 0.0;
    for (std::size_t s = 0; s < truths.size(); ++s) {
      sse += (truths[s].row(t) - preds[s].row(t)).squaredNorm();
      sst += (truths[s].row(t) - mean).squaredNorm();
    }
    if (!(sst > 0.0))
      throw UndefinedMetric("r2: zero total variance at step " + std::to_string(t + 1), static_cast<std::size_t>(t + 1));
    out[static_cast<std::size_t>(t)] = 1.0 - sse / sst;
  }
  return out;
}

double lt_horizon(std::span<const double> r2_curve, double dt, double lle, double threshold) {
  std::size_t k = 0;
  while (k < r2_curve.size() && !(r2_curve[k] < threshold)) ++k;
  return static_cast<double>(k) * dt * lle;
}

double rel_improvement(double baseline_nrmse, double candidate_nrmse) {
  if (!(baseline_nrmse > 0.0)) throw InvalidInput("rel_improvement: baseline must be > 0");
  return (1.0 - candidate_nrmse / baseline_nrmse) * 100.0;
}

Forecaster model_forecaster(const nn::ModelParams& params, std::size_t shard_size, bool parallel) {
  return [&params, shard_size, parallel](std::span<const data::SequencePair> pairs, std::size_t horizon) {
    std::vector<const data::SequencePair*> refs;
    refs.reserve(pairs.size());
    for (const auto& p : pairs) refs.push_back(&p);
    return parallel ? kernels::forecast_parallel(params, refs, horizon, shard_size)
                    : kernels::forecast_serial(params, refs, horizon, shard_size);
  };
}

EvalReport evaluate(const Forecaster& model, const data::Dataset& ds, const EvalOptions& opts) {
  std::size_t horizon = opts.horizon_steps;
  std::size_t one_lt = 0;
  if (ds.lle) one_lt = data::prediction_length(ds.dt, *ds.lle);
  if (horizon == 0) {
    if (one_lt == 0) throw InvalidInput("evaluate: horizon required when the dataset has no LLE");
    horizon = one_lt;
  }
  const std::size_t stride = opts.stride == 0 ? horizon : opts.stride;
  const auto windows = data::window(ds, opts.split, opts.warmup, horizon, stride, opts.context);
  const auto preds = model(windows, horizon);
  if (preds.size() != windows.size()) throw InvalidInput("evaluate: forecaster returned wrong number of sequences");

  std::vector<Series> truths;
  truths.reserve(windows.size());
  for (const auto& w : windows) truths.push_back(w.target);

  EvalReport r;
  r.horizon_steps = horizon;
  r.n_test_sequences = windows.size();
  r.threshold = opts.threshold;
  r.nrmse_curve.assign(horizon, 0.0);
  const std::size_t slice = one_lt > 0 ? std::min(one_lt, horizon) : horizon;
  for (std::size_t s = 0; s < windows.size(); ++s) {
    const auto curve = step_nrmse(truths[s], preds[s], ds.sigma_scalar);
    for (std::size_t t = 0; t < horizon; ++t) r.nrmse_curve[t] += curve[t];
    const auto h = summarize(std::span<const double>(curve).first(slice));
    r.nrmse_mean_1lt += h.mean;
    r.nrmse_last10 += h.last10;
  }
  const double n = static_cast<double>(windows.size());
  for (double& v : r.nrmse_curve) v /= n;
  r.nrmse_mean_1lt /= n;
  r.nrmse_last10 /= n;
  r.r2_curve = r2_per_step(truths, preds);
  if (ds.lle) r.lt_r2_horizon = lt_horizon(r.r2_curve, ds.dt, *ds.lle, opts.threshold);
  return r;
}

std::string to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["nrmse_mean_1lt"] = r.nrmse_mean_1lt;
  j["nrmse_last10"] = r.nrmse_last10;
  j["lt_r2_horizon"] = r.lt_r2_horizon ? nlohmann::ordered_json(*r.lt_r2_horizon) : nlohmann::ordered_json(nullptr);
  j["threshold"] = r.threshold;
  j["horizon_steps"] = r.horizon_steps;
  j["n_test_sequences"] = r.n_test_sequences;
  j["nrmse_curve"] = r.nrmse_curve;
  j["r2_curve"] = r.r2_curve;
  return j.dump(2);
}

EvalReport eval_report_from_json(const std::string& text) {
  EvalReport r;
  try {
    const auto j = nlohmann::json::parse(text);
    r.nrmse_mean_1lt = j.at("nrmse_mean_1lt").get<double>();
    r.nrmse_last10 = j.at("nrmse_last10").get<double>();
    if (!j.at("lt_r2_horizon").is_null()) r.lt_r2_horizon = j.at("lt_r2_horizon").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.horizon_steps = j.at("horizon_steps").get<std::size_t>();
    r.n_test_sequences = j.at("n_test_sequences").get<std::size_t>();
    r.nrmse_curve = j.at("nrmse_curve").get<std::vector<double>>();
    r.r2_curve = j.at("r2_curve").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("eval report: ") + e.what());
  }
  return r;
}

}  // namespace tfcl::metrics
