// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include "tfcl/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <exception>

#include "tfcl/error.hpp"

namespace tfcl::kernels {
namespace {

struct Shard {
  std::size_t begin, end;
};

std::vector<Shard> make_shards(std::size_t count, std::size_t shard_size) {
  if (shard_size < 1) throw InvalidInput("shard_size must be >= 1");
  std::vector<Shard> shards;
  for (std::size_t b = 0; b < count; b += shard_size) shards.push_back({b, std::min(count, b + shard_size)});
  return shards;
}

std::size_t element_count(const nn::ModelParams& params, nn::PairRefs batch) {
  return batch.size() * static_cast<std::size_t>(batch.front()->target.rows()) * params.dims().d;
}

struct ShardOut {
  nn::Gradients grads;
  double sse = 0.0;
};

ShardOut run_shard(const nn::ModelParams& params, nn::PairRefs batch, nn::MaskRefs masks, const Shard& s,
                   double scale, const nn::LossOptions& opts) {
  ShardOut out{nn::Gradients(params.dims()), 0.0};
  out.sse = nn::accumulate_gradient(params, batch.subspan(s.begin, s.end - s.begin),
                                    masks.subspan(s.begin, s.end - s.begin), scale, out.grads, opts);
  return out;
}

GradientResult reduce(const nn::ModelParams& params, std::vector<ShardOut>& outs, std::size_t count,
                      nn::Gradients& grads) {
  grads = nn::Gradients(params.dims());
  double sse = 0.0;
  for (auto& o : outs) {
    grads.flat() += o.grads.flat();
    sse += o.sse;
  }
  if (!grads.flat().allFinite()) throw DivergenceError("non-finite gradient", 0);
  return {sse / static_cast<double>(count), grads.decoder_norm()};
}

void check(nn::PairRefs batch, nn::MaskRefs masks) {
  if (batch.empty()) throw InvalidInput("empty batch");
  if (masks.size() != batch.size()) throw InvalidInput("one mask per sequence required");
}

}  // namespace

GradientResult batch_gradient_serial(const nn::ModelParams& params, nn::PairRefs batch, nn::MaskRefs masks,
                                     std::size_t shard_size, nn::Gradients& grads, const nn::LossOptions& opts) {
  check(batch, masks);
  const auto shards = make_shards(batch.size(), shard_size);
  const std::size_t count = element_count(params, batch);
  const double scale = 1.0 / static_cast<double>(count);
  std::vector<ShardOut> outs;
  outs.reserve(shards.size());
  for (const auto& s : shards) outs.push_back(run_shard(params, batch, masks, s, scale, opts));
  return reduce(params, outs, count, grads);
}

GradientResult batch_gradient_parallel(const nn::ModelParams& params, nn::PairRefs batch, nn::MaskRefs masks,
                                       std::size_t shard_size, nn::Gradients& grads, const nn::LossOptions& opts) {
  check(batch, masks);
  const auto shards = make_shards(batch.size(), shard_size);
  const std::size_t count = element_count(params, batch);
  const double scale = 1.0 / static_cast<double>(count);
  std::vector<ShardOut> outs(shards.size());
  std::exception_ptr error;
  const auto ns = static_cast<long>(shards.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < ns; ++i) {
    try {
      outs[static_cast<std::size_t>(i)] = run_shard(params, batch, masks, shards[static_cast<std::size_t>(i)], scale, opts);
    } catch (...) {
#pragma omp critical(tfcl_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  return reduce(params, outs, count, grads);
}

std::vector<Series> forecast_serial(const nn::ModelParams& params, nn::PairRefs pairs, std::size_t horizon,
                                    std::size_t shard_size) {
  std::vector<Series> out;
  out.reserve(pairs.size());
  for (const auto& s : make_shards(pairs.size(), shard_size)) {
    auto part = nn::forecast_batch(params, pairs.subspan(s.begin, s.end - s.begin), horizon);
    for (auto& p : part) out.push_back(std::move(p));
  }
  return out;
}

std::vector<Series> forecast_parallel(const nn::ModelParams& params, nn::PairRefs pairs, std::size_t horizon,
                                      std::size_t shard_size) {
  const auto shards = make_shards(pairs.size(), shard_size);
  std::vector<std::vector<Series>> parts(shards.size());
  std::exception_ptr error;
  const auto ns = static_cast<long>(shards.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long i = 0; i < ns; ++i) {
    const auto& s = shards[static_cast<std::size_t>(i)];
    try {
      parts[static_cast<std::size_t>(i)] = nn::forecast_batch(params, pairs.subspan(s.begin, s.end - s.begin), horizon);
    } catch (...) {
#pragma omp critical(tfcl_kernel_error)
      if (!error) error = std::current_exception();
    }
  }
  if (error) std::rethrow_exception(error);
  std::vector<Series> out;
  out.reserve(pairs.size());
  for (auto& part : parts)
    for (auto& p : part) out.push_back(std::move(p));
  return out;
}

double free_running_loss(const nn::ModelParams& params, nn::PairRefs pairs, std::size_t shard_size, bool parallel) {
  if (pairs.empty()) throw InvalidInput("free_running_loss: no sequences");
  const auto m = static_cast<std::size_t>(pairs.front()->target.rows());
  const auto preds = parallel ? forecast_parallel(params, pairs, m, shard_size)
                              : forecast_serial(params, pairs, m, shard_size);
  double sse = 0.0;
  for (std::size_t i = 0; i < pairs.size(); ++i) sse += (preds[i] - pairs[i]->target).squaredNorm();
  return sse / static_cast<double>(element_count(params, pairs));
}

void set_num_threads(int threads) {
  if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace tfcl::kernels
