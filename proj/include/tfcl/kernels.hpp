// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Batch-level work split into fixed-size shards. The serial variants process
// shards one after another; the OpenMP variants process them concurrently.
// Both reduce shard results in shard order, so they return bit-identical
// results regardless of the thread count.

#include <cstddef>
#include <vector>

#include "tfcl/nn.hpp"

namespace tfcl::kernels {

struct GradientResult {
  double loss = 0.0;               // batch MSE
  double decoder_grad_norm = 0.0;  // ||grad of decoder cell weights||_2
};

// Fills grads (resized to the model) with the gradient of the batch MSE.
GradientResult batch_gradient_serial(const nn::ModelParams& params, nn::PairRefs batch, nn::MaskRefs masks,
                                     std::size_t shard_size, nn::Gradients& grads,
                                     const nn::LossOptions& opts = {});
GradientResult batch_gradient_parallel(const nn::ModelParams& params, nn::PairRefs batch, nn::MaskRefs masks,
                                       std::size_t shard_size, nn::Gradients& grads,
                                       const nn::LossOptions& opts = {});

// Free-running forecasts for every pair.
std::vector<Series> forecast_serial(const nn::ModelParams& params, nn::PairRefs pairs, std::size_t horizon,
                                    std::size_t shard_size);
std::vector<Series> forecast_parallel(const nn::ModelParams& params, nn::PairRefs pairs, std::size_t horizon,
                                      std::size_t shard_size);

// Mean squared error of all-free-running forecasts against the targets.
double free_running_loss(const nn::ModelParams& params, nn::PairRefs pairs, std::size_t shard_size,
                         bool parallel = true);

// Threads used by the parallel kernels; 0 leaves the OpenMP default.
void set_num_threads(int threads);

}  // namespace tfcl::kernels
