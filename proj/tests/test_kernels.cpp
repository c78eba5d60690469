// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include "tfcl/kernels.hpp"
#include "tfcl/random.hpp"
#include "test_support.hpp"

using namespace tfcl;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

struct Batch {
  std::vector<data::SequencePair> pairs;
  std::vector<nn::TFMask> masks;
  std::vector<const data::SequencePair*> pair_refs;
  std::vector<const nn::TFMask*> mask_refs;
};

Batch make_batch(std::size_t count, std::size_t n, std::size_t m, std::size_t d, std::uint64_t seed) {
  Batch b;
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    b.pairs.push_back(tfcl::testing::random_pair(n, m, d, seed * 100 + i));
    nn::TFMask mask(m - 1);
    for (auto& v : mask) v = bernoulli(rng, 0.4);
    b.masks.push_back(mask);
  }
  for (std::size_t i = 0; i < count; ++i) {
    b.pair_refs.push_back(&b.pairs[i]);
    b.mask_refs.push_back(&b.masks[i]);
  }
  return b;
}

}  // namespace

TEST_CASE("serial and parallel gradients are bit-identical") {
  for (auto kind : {nn::CellKind::gru, nn::CellKind::lstm, nn::CellKind::rnn}) {
    const nn::ModelDims dims{kind, 3, 12, 2};
    const auto params = tfcl::testing::random_params(dims, 8, 0.3);
    const auto b = make_batch(37, 9, 7, 3, 2);
    for (std::size_t shard : {1u, 4u, 16u, 64u}) {
      for (int threads : {1, 2, 4}) {
        kernels::set_num_threads(threads);
        nn::Gradients gs, gp;
        const auto rs = kernels::batch_gradient_serial(params, b.pair_refs, b.mask_refs, shard, gs);
        const auto rp = kernels::batch_gradient_parallel(params, b.pair_refs, b.mask_refs, shard, gp);
        INFO("shard " << shard << " threads " << threads);
        CHECK(rs.loss == rp.loss);
        CHECK(rs.decoder_grad_norm == rp.decoder_grad_norm);
        CHECK(gs.flat() == gp.flat());
      }
    }
  }
  kernels::set_num_threads(0);
}

TEST_CASE("kernel gradients match the reference backward pass") {
  const nn::ModelDims dims{nn::CellKind::gru, 2, 10, 1};
  const auto params = tfcl::testing::random_params(dims, 3, 0.3);
  const auto b = make_batch(11, 6, 5, 2, 9);
  const auto ref = nn::backward(params, b.pairs, b.masks);
  nn::Gradients g;
  const auto r = kernels::batch_gradient_serial(params, b.pair_refs, b.mask_refs, 4, g);
  CHECK_THAT(r.loss, WithinRel(ref.loss, 1e-12));
  CHECK_THAT(r.decoder_grad_norm, WithinRel(ref.decoder_grad_norm, 1e-10));
  CHECK((g.flat() - ref.grads.flat()).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THAT(r.loss, WithinRel(nn::forward_loss(params, b.pairs, b.masks), 1e-12));
}

TEST_CASE("serial and parallel forecasts are bit-identical") {
  const nn::ModelDims dims{nn::CellKind::lstm, 3, 16, 1};
  const auto params = tfcl::testing::random_params(dims, 4, 0.3);
  const auto b = make_batch(29, 12, 4, 3, 5);
  kernels::set_num_threads(3);
  const auto s = kernels::forecast_serial(params, b.pair_refs, 20, 5);
  const auto p = kernels::forecast_parallel(params, b.pair_refs, 20, 5);
  kernels::set_num_threads(0);
  REQUIRE(s.size() == 29);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s[i] == p[i]);
    CHECK((s[i] - nn::forecast(params, b.pairs[i].input, 20)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("free-running loss matches an all-FR forward pass") {
  const nn::ModelDims dims{nn::CellKind::gru, 2, 8, 1};
  const auto params = tfcl::testing::random_params(dims, 6, 0.3);
  auto b = make_batch(13, 5, 6, 2, 7);
  for (auto& m : b.masks) std::fill(m.begin(), m.end(), 0);
  const double ref = nn::forward_loss(params, b.pairs, b.masks);
  CHECK_THAT(kernels::free_running_loss(params, b.pair_refs, 4, false), WithinRel(ref, 1e-12));
  CHECK(kernels::free_running_loss(params, b.pair_refs, 4, false) ==
        kernels::free_running_loss(params, b.pair_refs, 4, true));
}
