// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Encoder-decoder recurrent forecaster with exact backpropagation through time.
//
// All parameters of a model live in one contiguous vector; the layout maps
// each weight matrix onto a column-major block of it. Gradients use the same
// type and layout, so optimizers and gradient checks work on the flat view.
//
// Batched tensors are Eigen matrices with one row per sequence.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tfcl/dataio.hpp"
#include "tfcl/series.hpp"

namespace tfcl::nn {

using Eigen::MatrixXd;
using MatMap = Eigen::Map<Eigen::MatrixXd>;
using ConstMatMap = Eigen::Map<const Eigen::MatrixXd>;

enum class CellKind : std::uint8_t { gru = 0, rnn = 1, lstm = 2 };

std::size_t gate_count(CellKind kind);
std::string_view to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view name);

struct ModelDims {
  CellKind cell = CellKind::gru;
  std::size_t d = 1;        // series dimension
  std::size_t hidden = 256;
  std::size_t layers = 1;

  bool operator==(const ModelDims&) const = default;
};

struct Block {
  std::size_t offset = 0;
  Eigen::Index rows = 0, cols = 0;
  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
};

// Gate pre-activations are x * W + h * U + b with W: in x (g*H),
// U: H x (g*H), b: 1 x (g*H). Gate order: GRU (r, z, n), LSTM (i, f, g, o).
struct CellLayout {
  CellKind kind = CellKind::gru;
  std::size_t input_dim = 0, hidden_dim = 0;
  Block W, U, b;
};

struct ParamLayout {
  std::vector<CellLayout> encoder, decoder;
  Block out_W, out_b;  // H x d, 1 x d
  std::size_t decoder_begin = 0, decoder_end = 0;
  std::size_t size = 0;

  static ParamLayout make(const ModelDims& dims);
};

struct CellParams {
  CellKind kind;
  ConstMatMap W, U, b;
};

struct CellGrads {
  MatMap W, U, b;
};

class ModelParams {
 public:
  ModelParams() = default;
  explicit ModelParams(const ModelDims& dims);  // all zeros

  const ModelDims& dims() const { return dims_; }
  const ParamLayout& layout() const { return layout_; }
  Eigen::VectorXd& flat() { return values_; }
  const Eigen::VectorXd& flat() const { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  MatMap block(const Block& b) { return {values_.data() + b.offset, b.rows, b.cols}; }
  ConstMatMap block(const Block& b) const { return {values_.data() + b.offset, b.rows, b.cols}; }

  CellParams encoder(std::size_t layer) const { return cell(layout_.encoder.at(layer)); }
  CellParams decoder(std::size_t layer) const { return cell(layout_.decoder.at(layer)); }
  CellGrads encoder_mut(std::size_t layer) { return cell_mut(layout_.encoder.at(layer)); }
  CellGrads decoder_mut(std::size_t layer) { return cell_mut(layout_.decoder.at(layer)); }
  ConstMatMap out_W() const { return block(layout_.out_W); }
  ConstMatMap out_b() const { return block(layout_.out_b); }
  MatMap out_W_mut() { return block(layout_.out_W); }
  MatMap out_b_mut() { return block(layout_.out_b); }

  // Euclidean norm of the decoder cell parameters (all decoder layers).
  double decoder_norm() const;

  void set_zero() { values_.setZero(); }

  friend bool operator==(const ModelParams& a, const ModelParams& b) {
    return a.dims_ == b.dims_ && a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  CellParams cell(const CellLayout& c) const {
    return {c.kind, block(c.W), block(c.U), block(c.b)};
  }
  CellGrads cell_mut(const CellLayout& c) { return {block(c.W), block(c.U), block(c.b)}; }

  ModelDims dims_;
  ParamLayout layout_;
  Eigen::VectorXd values_;
};

using Gradients = ModelParams;

struct CellState {
  MatrixXd h;  // batch x hidden
  MatrixXd c;  // LSTM cell state; empty for GRU and RNN
};

// One CellState per layer.
using HiddenState = std::vector<CellState>;

HiddenState zero_state(const ModelDims& dims, Eigen::Index batch);

// Teacher-forcing decisions for decoder steps 2..m (length m - 1); nonzero
// means the ground truth of the previous step is fed instead of the
// prediction.
using TFMask = std::vector<std::uint8_t>;

// Per-step cache kept for the backward pass.
struct StepCache {
  MatrixXd x, h, c;
  MatrixXd act;  // activated gates (RNN: the new hidden state)
  MatrixXd aux;  // GRU: h * U_n; LSTM: tanh(c_new)
};

CellState cell_forward(const CellParams& p, const MatrixXd& x, const CellState& state,
                       StepCache* cache = nullptr);

// Backward through one cell step. dc_out may be empty for GRU/RNN. When dx is
// non-null it receives the gradient w.r.t. the step input.
void cell_backward(const CellParams& p, CellGrads& g, const StepCache& cache, const MatrixXd& dh_out,
                   const MatrixXd& dc_out, MatrixXd* dx, MatrixXd& dh_prev, MatrixXd& dc_prev);

// Single-sequence forward API.
HiddenState encode(const ModelParams& params, const Series& input);
Series decode(const ModelParams& params, const HiddenState& state, const Eigen::RowVectorXd& first_input,
              const Series& targets, const TFMask& mask);
// Pure free-running forecast of `horizon` steps following `input`.
Series forecast(const ModelParams& params, const Series& input, std::size_t horizon);

struct LossOptions {
  // Stop gradients through the prediction fed back on free-running steps.
  bool detach_feedback = false;
};

using PairRefs = std::span<const data::SequencePair* const>;
using MaskRefs = std::span<const TFMask* const>;

// Mean squared error over steps, dimensions and sequences.
double forward_loss(const ModelParams& params, std::span<const data::SequencePair> batch,
                    std::span<const TFMask> masks);
double forward_loss(const ModelParams& params, PairRefs batch, MaskRefs masks);

// Adds scale * d(SSE)/d(theta) of the given sequences into grads and returns
// their SSE. This is the per-shard work unit of the batch kernels.
double accumulate_gradient(const ModelParams& params, PairRefs batch, MaskRefs masks, double scale,
                           Gradients& grads, const LossOptions& opts = {});

// Batched free-running forecasts for all pairs (targets are not read).
std::vector<Series> forecast_batch(const ModelParams& params, PairRefs batch, std::size_t horizon);

struct BackwardResult {
  Gradients grads;
  double loss = 0.0;
  double decoder_grad_norm = 0.0;
};

BackwardResult backward(const ModelParams& params, std::span<const data::SequencePair> batch,
                        std::span<const TFMask> masks, const LossOptions& opts = {});

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m, v;
  std::uint64_t t = 0;

  bool operator==(const AdamState& o) const {
    return t == o.t && m.size() == o.m.size() && m == o.m && v == o.v;
  }
};

AdamState make_adam_state(const ModelParams& params);
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

// Weights uniform in +-1/sqrt(hidden), biases zero.
ModelParams init_params(const ModelDims& dims, std::uint64_t seed);

}  // namespace tfcl::nn
