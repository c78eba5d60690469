// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <string>

#include "tfcl/error.hpp"
#include "tfcl/nn.hpp"
#include "tfcl/random.hpp"

namespace tfcl::nn {

std::size_t gate_count(CellKind kind) {
  switch (kind) {
    case CellKind::gru: return 3;
    case CellKind::rnn: return 1;
    case CellKind::lstm: return 4;
  }
  return 0;
}

std::string_view to_string(CellKind kind) {
  switch (kind) {
    case CellKind::gru: return "gru";
    case CellKind::rnn: return "rnn";
    case CellKind::lstm: return "lstm";
  }
  return "?";
}

CellKind parse_cell_kind(std::string_view name) {
  if (name == "gru" || name == "GRU") return CellKind::gru;
  if (name == "rnn" || name == "RNN") return CellKind::rnn;
  if (name == "lstm" || name == "LSTM") return CellKind::lstm;
  throw InvalidInput("unknown cell kind '" + std::string(name) + "' (expected gru, rnn or lstm)");
}

ParamLayout ParamLayout::make(const ModelDims& dims) {
  if (dims.d < 1 || dims.hidden < 1 || dims.layers < 1)
    throw InvalidInput("model dimensions must all be >= 1");
  ParamLayout lay;
  std::size_t off = 0;
  auto take = [&off](std::size_t rows, std::size_t cols) {
    Block b{off, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols)};
    off += rows * cols;
    return b;
  };
  const std::size_t H = dims.hidden;
  const std::size_t G = gate_count(dims.cell) * H;
  auto stack = [&](std::vector<CellLayout>& cells) {
    for (std::size_t l = 0; l < dims.layers; ++l) {
      CellLayout c;
      c.kind = dims.cell;
      c.input_dim = l == 0 ? dims.d : H;
      c.hidden_dim = H;
      c.W = take(c.input_dim, G);
      c.U = take(H, G);
      c.b = take(1, G);
      cells.push_back(c);
    }
  };
  stack(lay.encoder);
  lay.decoder_begin = off;
  stack(lay.decoder);
  lay.decoder_end = off;
  lay.out_W = take(H, dims.d);
  lay.out_b = take(1, dims.d);
  lay.size = off;
  return lay;
}

ModelParams::ModelParams(const ModelDims& dims)
    : dims_(dims), layout_(ParamLayout::make(dims)),
      values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.size))) {}

double ModelParams::decoder_norm() const {
  return values_.segment(static_cast<Eigen::Index>(layout_.decoder_begin),
                         static_cast<Eigen::Index>(layout_.decoder_end - layout_.decoder_begin))
      .norm();
}

HiddenState zero_state(const ModelDims& dims, Eigen::Index batch) {
  HiddenState s(dims.layers);
  const auto H = static_cast<Eigen::Index>(dims.hidden);
  for (auto& layer : s) {
    layer.h = MatrixXd::Zero(batch, H);
    if (dims.cell == CellKind::lstm) layer.c = MatrixXd::Zero(batch, H);
  }
  return s;
}

ModelParams init_params(const ModelDims& dims, std::uint64_t seed) {
  ModelParams p(dims);
  Rng rng(derive_seed({seed, 0x696e6974ULL}));
  const double bound = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
  auto fill = [&](const Block& b) {
    auto m = p.block(b);
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = uniform(rng, -bound, bound);
  };
  const auto& lay = p.layout();
  for (const auto* side : {&lay.encoder, &lay.decoder})
    for (const auto& c : *side) {
      fill(c.W);
      fill(c.U);
    }
  fill(lay.out_W);
  return p;
}

AdamState make_adam_state(const ModelParams& params) {
  AdamState s;
  s.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  s.v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(params.size()));
  return s;
}

}  // namespace tfcl::nn
