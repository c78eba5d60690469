// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include "tfcl/error.hpp"
#include "tfcl/nn.hpp"

namespace tfcl::nn {
namespace {

Eigen::ArrayXXd sigmoid(const Eigen::ArrayXXd& a) { return (1.0 + (-a).exp()).inverse(); }

void check_shapes(const CellParams& p, const MatrixXd& x, const CellState& s) {
  if (x.cols() != p.W.rows()) throw InvalidInput("cell_forward: input width does not match the cell");
  if (s.h.cols() != p.U.rows() || s.h.rows() != x.rows())
    throw InvalidInput("cell_forward: hidden state shape does not match the cell");
  if (p.kind == CellKind::lstm && (s.c.rows() != s.h.rows() || s.c.cols() != s.h.cols()))
    throw InvalidInput("cell_forward: LSTM cell state missing or misshaped");
}

}  // namespace

CellState cell_forward(const CellParams& p, const MatrixXd& x, const CellState& state, StepCache* cache) {
  check_shapes(p, x, state);
  const Eigen::Index H = p.U.rows();
  MatrixXd gx = x * p.W;
  gx.rowwise() += p.b.row(0);
  const MatrixXd gh = state.h * p.U;

  CellState out;
  MatrixXd act, aux;
  switch (p.kind) {
    case CellKind::gru: {
      act.resize(x.rows(), 3 * H);
      const Eigen::ArrayXXd rz = sigmoid(gx.leftCols(2 * H).array() + gh.leftCols(2 * H).array());
      act.leftCols(2 * H) = rz.matrix();
      aux = gh.rightCols(H);
      act.rightCols(H) =
          (gx.rightCols(H).array() + rz.leftCols(H) * aux.array()).tanh().matrix();
      const auto z = rz.rightCols(H);
      out.h = ((1.0 - z) * act.rightCols(H).array() + z * state.h.array()).matrix();
      break;
    }
    case CellKind::rnn:
      act = (gx + gh).array().tanh().matrix();
      out.h = act;
      break;
    case CellKind::lstm: {
      act.resize(x.rows(), 4 * H);
      const Eigen::ArrayXXd pre = (gx + gh).array();
      act.leftCols(2 * H) = sigmoid(pre.leftCols(2 * H)).matrix();
      act.middleCols(2 * H, H) = pre.middleCols(2 * H, H).tanh().matrix();
      act.rightCols(H) = sigmoid(pre.rightCols(H)).matrix();
      const auto i = act.leftCols(H).array();
      const auto f = act.middleCols(H, H).array();
      const auto g = act.middleCols(2 * H, H).array();
      const auto o = act.rightCols(H).array();
      out.c = (f * state.c.array() + i * g).matrix();
      aux = out.c.array().tanh().matrix();
      out.h = (o * aux.array()).matrix();
      break;
    }
  }
  if (cache) {
    cache->x = x;
    cache->h = state.h;
    cache->c = state.c;
    cache->act = std::move(act);
    cache->aux = std::move(aux);
  }
  return out;
}

void cell_backward(const CellParams& p, CellGrads& g, const StepCache& cache, const MatrixXd& dh_out,
                   const MatrixXd& dc_out, MatrixXd* dx, MatrixXd& dh_prev, MatrixXd& dc_prev) {
  const Eigen::Index H = p.U.rows();
  const Eigen::Index B = dh_out.rows();
  const Eigen::Index G = p.U.cols();
  MatrixXd dgx(B, G);
  MatrixXd dgh_extra;  // only GRU differs between dgx and dgh
  const auto dh = dh_out.array();

  switch (p.kind) {
    case CellKind::gru: {
      const auto r = cache.act.leftCols(H).array();
      const auto z = cache.act.middleCols(H, H).array();
      const auto n = cache.act.rightCols(H).array();
      const Eigen::ArrayXXd dan = dh * (1.0 - z) * (1.0 - n.square());
      const Eigen::ArrayXXd dz = dh * (cache.h.array() - n);
      dgx.leftCols(H) = (dan * cache.aux.array() * r * (1.0 - r)).matrix();
      dgx.middleCols(H, H) = (dz * z * (1.0 - z)).matrix();
      dgx.rightCols(H) = dan.matrix();
      dgh_extra = (dan * r).matrix();
      dh_prev = (dh * z).matrix();
      dc_prev.resize(0, 0);
      break;
    }
    case CellKind::rnn:
      dgx = (dh * (1.0 - cache.act.array().square())).matrix();
      dh_prev = MatrixXd::Zero(B, H);
      dc_prev.resize(0, 0);
      break;
    case CellKind::lstm: {
      const auto i = cache.act.leftCols(H).array();
      const auto f = cache.act.middleCols(H, H).array();
      const auto gg = cache.act.middleCols(2 * H, H).array();
      const auto o = cache.act.rightCols(H).array();
      const auto tc = cache.aux.array();
      Eigen::ArrayXXd dc = dh * o * (1.0 - tc.square());
      if (dc_out.size() != 0) dc += dc_out.array();
      dgx.leftCols(H) = (dc * gg * i * (1.0 - i)).matrix();
      dgx.middleCols(H, H) = (dc * cache.c.array() * f * (1.0 - f)).matrix();
      dgx.middleCols(2 * H, H) = (dc * i * (1.0 - gg.square())).matrix();
      dgx.rightCols(H) = (dh * tc * o * (1.0 - o)).matrix();
      dc_prev = (dc * f).matrix();
      dh_prev = MatrixXd::Zero(B, H);
      break;
    }
  }

  g.W.noalias() += cache.x.transpose() * dgx;
  g.b.row(0) += dgx.colwise().sum();
  if (dx) dx->noalias() = dgx * p.W.transpose();
  if (p.kind == CellKind::gru) {
    MatrixXd dgh(B, G);
    dgh.leftCols(2 * H) = dgx.leftCols(2 * H);
    dgh.rightCols(H) = dgh_extra;
    g.U.noalias() += cache.h.transpose() * dgh;
    dh_prev.noalias() += dgh * p.U.transpose();
  } else {
    g.U.noalias() += cache.h.transpose() * dgx;
    dh_prev.noalias() += dgx * p.U.transpose();
  }
}

}  // namespace tfcl::nn
