// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <string>

#include "tfcl/error.hpp"
#include "tfcl/nn.hpp"

namespace tfcl::nn {
namespace {

struct Trace {
  std::vector<std::vector<StepCache>> enc;  // [step][layer]
  std::vector<std::vector<StepCache>> dec;
  std::vector<MatrixXd> top_h;              // decoder top-layer output per step
  std::vector<MatrixXd> pred;               // batch x d per step
  // Rows whose input at decoder step t (t >= 1) was the fed-back prediction.
  std::vector<std::vector<Eigen::Index>> fed_back;
};

void check_batch(const ModelParams& params, PairRefs batch, MaskRefs masks, bool need_masks) {
  if (batch.empty()) throw InvalidInput("empty batch");
  const auto d = static_cast<Eigen::Index>(params.dims().d);
  const auto n = batch.front()->input.rows();
  const auto m = batch.front()->target.rows();
  if (n < 1 || m < 1) throw InvalidInput("sequence pairs need n >= 1 and m >= 1");
  for (const auto* p : batch) {
    if (p->input.cols() != d || p->target.cols() != d)
      throw InvalidInput("sequence width does not match model dimension " + std::to_string(d));
    if (p->input.rows() != n || p->target.rows() != m)
      throw InvalidInput("all pairs in a batch must share n and m");
  }
  if (need_masks) {
    if (masks.size() != batch.size()) throw InvalidInput("one mask per sequence required");
    for (const auto* mk : masks)
      if (static_cast<Eigen::Index>(mk->size()) != m - 1)
        throw InvalidInput("mask length must be m - 1 = " + std::to_string(m - 1));
  }
}

MatrixXd gather_input(PairRefs batch, Eigen::Index t) {
  MatrixXd x(static_cast<Eigen::Index>(batch.size()), batch.front()->input.cols());
  for (std::size_t b = 0; b < batch.size(); ++b) x.row(static_cast<Eigen::Index>(b)) = batch[b]->input.row(t);
  return x;
}

MatrixXd gather_target(PairRefs batch, Eigen::Index t) {
  MatrixXd y(static_cast<Eigen::Index>(batch.size()), batch.front()->target.cols());
  for (std::size_t b = 0; b < batch.size(); ++b) y.row(static_cast<Eigen::Index>(b)) = batch[b]->target.row(t);
  return y;
}

HiddenState run_stack(const ModelParams& p, bool decoder, MatrixXd x, HiddenState state,
                      std::vector<StepCache>* caches) {
  const std::size_t L = p.dims().layers;
  if (caches) caches->resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const CellParams cp = decoder ? p.decoder(l) : p.encoder(l);
    state[l] = cell_forward(cp, x, state[l], caches ? &(*caches)[l] : nullptr);
    x = state[l].h;
  }
  return state;
}

MatrixXd output_layer(const ModelParams& p, const MatrixXd& h) {
  MatrixXd y = h * p.out_W();
  y.rowwise() += p.out_b().row(0);
  return y;
}

// Runs encoder and decoder over the batch. masks may be empty for pure free
// running; targets are only read on teacher-forced steps and for the loss.
// Returns the sum of squared errors when with_loss is set.
double run_forward(const ModelParams& params, PairRefs batch, MaskRefs masks, Eigen::Index horizon,
                   bool with_loss, Trace* trace, std::vector<MatrixXd>* preds_out) {
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index n = batch.front()->input.rows();
  HiddenState state = zero_state(params.dims(), B);
  if (trace) trace->enc.resize(static_cast<std::size_t>(n));
  for (Eigen::Index t = 0; t < n; ++t)
    state = run_stack(params, false, gather_input(batch, t), std::move(state),
                      trace ? &trace->enc[static_cast<std::size_t>(t)] : nullptr);

  if (trace) {
    trace->dec.resize(static_cast<std::size_t>(horizon));
    trace->top_h.resize(static_cast<std::size_t>(horizon));
    trace->pred.resize(static_cast<std::size_t>(horizon));
    trace->fed_back.assign(static_cast<std::size_t>(horizon), {});
  }
  double sse = 0.0;
  MatrixXd input = gather_input(batch, n - 1);
  MatrixXd pred;
  for (Eigen::Index t = 0; t < horizon; ++t) {
    const auto ts = static_cast<std::size_t>(t);
    if (t > 0) {
      input = pred;
      if (!masks.empty()) {
        for (Eigen::Index b = 0; b < B; ++b) {
          if ((*masks[static_cast<std::size_t>(b)])[ts - 1])
            input.row(b) = batch[static_cast<std::size_t>(b)]->target.row(t - 1);
          else if (trace)
            trace->fed_back[ts].push_back(b);
        }
      } else if (trace) {
        for (Eigen::Index b = 0; b < B; ++b) trace->fed_back[ts].push_back(b);
      }
    }
    state = run_stack(params, true, input, std::move(state), trace ? &trace->dec[ts] : nullptr);
    pred = output_layer(params, state.back().h);
    if (with_loss) sse += (pred - gather_target(batch, t)).squaredNorm();
    if (trace) {
      trace->top_h[ts] = state.back().h;
      trace->pred[ts] = pred;
    }
    if (preds_out) preds_out->push_back(pred);
  }
  return sse;
}

MaskRefs no_masks() { return {}; }

}  // namespace

HiddenState encode(const ModelParams& params, const Series& input) {
  if (input.rows() < 1) throw InvalidInput("encode: input needs at least one step");
  if (input.cols() != static_cast<Eigen::Index>(params.dims().d))
    throw InvalidInput("encode: input width does not match model dimension");
  HiddenState state = zero_state(params.dims(), 1);
  for (Eigen::Index t = 0; t < input.rows(); ++t) state = run_stack(params, false, input.row(t), std::move(state), nullptr);
  return state;
}

Series decode(const ModelParams& params, const HiddenState& state, const Eigen::RowVectorXd& first_input,
              const Series& targets, const TFMask& mask) {
  const auto d = static_cast<Eigen::Index>(params.dims().d);
  const Eigen::Index m = targets.rows();
  if (first_input.size() != d || targets.cols() != d) throw InvalidInput("decode: width mismatch");
  if (m < 1) throw InvalidInput("decode: need at least one target step");
  if (static_cast<Eigen::Index>(mask.size()) != m - 1) throw InvalidInput("decode: mask length must be m - 1");
  if (state.size() != params.dims().layers) throw InvalidInput("decode: state layer count mismatch");
  HiddenState s = state;
  Series preds(m, d);
  MatrixXd input = first_input;
  for (Eigen::Index t = 0; t < m; ++t) {
    if (t > 0) input = mask[static_cast<std::size_t>(t - 1)] ? MatrixXd(targets.row(t - 1)) : MatrixXd(preds.row(t - 1));
    s = run_stack(params, true, input, std::move(s), nullptr);
    preds.row(t) = output_layer(params, s.back().h);
  }
  return preds;
}

Series forecast(const ModelParams& params, const Series& input, std::size_t horizon) {
  const HiddenState s = encode(params, input);
  const auto d = static_cast<Eigen::Index>(params.dims().d);
  const Series dummy = Series::Zero(static_cast<Eigen::Index>(horizon), d);
  return decode(params, s, input.row(input.rows() - 1), dummy, TFMask(horizon > 0 ? horizon - 1 : 0, 0));
}

double forward_loss(const ModelParams& params, PairRefs batch, MaskRefs masks) {
  check_batch(params, batch, masks, true);
  const Eigen::Index m = batch.front()->target.rows();
  const double sse = run_forward(params, batch, masks, m, true, nullptr, nullptr);
  return sse / static_cast<double>(batch.size() * static_cast<std::size_t>(m) * params.dims().d);
}

double forward_loss(const ModelParams& params, std::span<const data::SequencePair> batch,
                    std::span<const TFMask> masks) {
  std::vector<const data::SequencePair*> pairs;
  std::vector<const TFMask*> mk;
  for (const auto& p : batch) pairs.push_back(&p);
  for (const auto& x : masks) mk.push_back(&x);
  return forward_loss(params, PairRefs(pairs), MaskRefs(mk));
}

std::vector<Series> forecast_batch(const ModelParams& params, PairRefs batch, std::size_t horizon) {
  if (batch.empty()) return {};
  const auto d = static_cast<Eigen::Index>(params.dims().d);
  for (const auto* p : batch)
    if (p->input.cols() != d || p->input.rows() != batch.front()->input.rows() || p->input.rows() < 1)
      throw InvalidInput("forecast_batch: inconsistent input shapes");
  std::vector<MatrixXd> steps;
  run_forward(params, batch, no_masks(), static_cast<Eigen::Index>(horizon), false, nullptr, &steps);
  std::vector<Series> out(batch.size(), Series(static_cast<Eigen::Index>(horizon), d));
  for (std::size_t t = 0; t < steps.size(); ++t)
    for (std::size_t b = 0; b < batch.size(); ++b)
      out[b].row(static_cast<Eigen::Index>(t)) = steps[t].row(static_cast<Eigen::Index>(b));
  return out;
}

double accumulate_gradient(const ModelParams& params, PairRefs batch, MaskRefs masks, double scale,
                           Gradients& grads, const LossOptions& opts) {
  check_batch(params, batch, masks, true);
  if (grads.size() != params.size() || !(grads.dims() == params.dims()))
    throw InvalidInput("gradient buffer does not match the model");
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Eigen::Index n = batch.front()->input.rows();
  const Eigen::Index m = batch.front()->target.rows();
  const std::size_t L = params.dims().layers;

  Trace tr;
  const double sse = run_forward(params, batch, masks, m, true, &tr, nullptr);

  MatrixXd woT = params.out_W().transpose();
  auto gWo = grads.out_W_mut();
  auto gbo = grads.out_b_mut();

  std::vector<MatrixXd> carry_h(L), carry_c(L);
  for (std::size_t l = 0; l < L; ++l) carry_h[l] = MatrixXd::Zero(B, static_cast<Eigen::Index>(params.dims().hidden));
  MatrixXd feedback;  // gradient w.r.t. pred[t] arriving through input t + 1
  MatrixXd dh_prev, dc_prev, dx;

  for (Eigen::Index t = m - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    MatrixXd dpred = (2.0 * scale) * (tr.pred[ts] - gather_target(batch, t));
    if (feedback.size() != 0) dpred += feedback;
    gWo.noalias() += tr.top_h[ts].transpose() * dpred;
    gbo.row(0) += dpred.colwise().sum();
    MatrixXd dh_in = dpred * woT + carry_h[L - 1];
    for (std::size_t li = L; li-- > 0;) {
      CellGrads g = grads.decoder_mut(li);
      const bool need_dx = li > 0 || (t > 0 && !opts.detach_feedback && !tr.fed_back[ts].empty());
      cell_backward(params.decoder(li), g, tr.dec[ts][li], dh_in, carry_c[li], need_dx ? &dx : nullptr, dh_prev,
                    dc_prev);
      carry_h[li] = dh_prev;
      carry_c[li] = dc_prev;
      if (li > 0) dh_in = dx + carry_h[li - 1];
    }
    feedback.resize(0, 0);
    if (t > 0 && !opts.detach_feedback && !tr.fed_back[ts].empty()) {
      feedback = MatrixXd::Zero(B, dx.cols());
      for (auto b : tr.fed_back[ts]) feedback.row(b) = dx.row(b);
    }
  }

  for (Eigen::Index t = n - 1; t >= 0; --t) {
    const auto ts = static_cast<std::size_t>(t);
    MatrixXd dh_in = carry_h[L - 1];
    for (std::size_t li = L; li-- > 0;) {
      CellGrads g = grads.encoder_mut(li);
      cell_backward(params.encoder(li), g, tr.enc[ts][li], dh_in, carry_c[li], li > 0 ? &dx : nullptr, dh_prev,
                    dc_prev);
      carry_h[li] = dh_prev;
      carry_c[li] = dc_prev;
      if (li > 0) dh_in = dx + carry_h[li - 1];
    }
  }
  return sse;
}

BackwardResult backward(const ModelParams& params, std::span<const data::SequencePair> batch,
                        std::span<const TFMask> masks, const LossOptions& opts) {
  std::vector<const data::SequencePair*> pairs;
  std::vector<const TFMask*> mk;
  for (const auto& p : batch) pairs.push_back(&p);
  for (const auto& x : masks) mk.push_back(&x);
  check_batch(params, pairs, mk, true);
  const std::size_t count = batch.size() * static_cast<std::size_t>(batch.front().target.rows()) * params.dims().d;
  BackwardResult r{Gradients(params.dims()), 0.0, 0.0};
  const double sse = accumulate_gradient(params, pairs, mk, 1.0 / static_cast<double>(count), r.grads, opts);
  r.loss = sse / static_cast<double>(count);
  if (!r.grads.flat().allFinite()) throw DivergenceError("non-finite gradient", 0);
  r.decoder_grad_norm = r.grads.decoder_norm();
  return r;
}

}  // namespace tfcl::nn
