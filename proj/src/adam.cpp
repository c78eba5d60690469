// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <cmath>

#include "tfcl/error.hpp"
#include "tfcl/nn.hpp"

namespace tfcl::nn {

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw InvalidInput("adam_step: gradient size mismatch");
  if (state.m.size() != params.flat().size()) state = make_adam_state(params);
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  const auto& g = grads.flat();
  auto& theta = params.flat();
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = state.m[i] / c1;
    const double vhat = state.v[i] / c2;
    theta[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace tfcl::nn
