// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Shared fixtures for the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "tfcl/dataio.hpp"
#include "tfcl/nn.hpp"

namespace tfcl::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tfcl-" + tag + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline Series random_series(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Series s(rows, cols);
  for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = u(rng);
  return s;
}

inline data::SequencePair random_pair(std::size_t n, std::size_t m, std::size_t d, std::uint64_t seed) {
  data::SequencePair p;
  p.input = random_series(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d), seed);
  p.target = random_series(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(d), seed + 1000);
  return p;
}

// Parameters with every entry (biases included) uniform in +-scale.
inline nn::ModelParams random_params(const nn::ModelDims& dims, std::uint64_t seed, double scale = 0.5) {
  nn::ModelParams p(dims);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (Eigen::Index i = 0; i < p.flat().size(); ++i) p.flat()[i] = u(rng);
  return p;
}

// Sum of a sine and a cosine per dimension: a smooth, non-chaotic series.
inline data::Dataset sine_dataset(std::size_t steps, std::size_t d, double dt = 0.1, double lle = 0.5) {
  Series raw(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(d));
  for (std::size_t t = 0; t < steps; ++t)
    for (std::size_t j = 0; j < d; ++j)
      raw(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) =
          std::sin(0.3 * static_cast<double>(t) + static_cast<double>(j)) +
          0.5 * std::cos(0.11 * static_cast<double>(t) * static_cast<double>(j + 1));
  data::Source src;
  src.kind = data::Source::Kind::external;
  src.label = "sine";
  return data::from_raw(raw, dt, lle, src);
}

}  // namespace tfcl::testing

namespace tfcl::testing {

struct GradCheck {
  double max_rel_error = 0.0;  // max_i |a_i - f_i| / max(|a_i|, |f_i|, floor)
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

// Compares the analytic gradient of the batch MSE against central finite
// differences of forward_loss, entry by entry.
inline GradCheck grad_check(const nn::ModelParams& params, const std::vector<data::SequencePair>& pairs,
                            const std::vector<nn::TFMask>& masks, double h = 1e-5, double floor = 1e-6) {
  const auto analytic = nn::backward(params, pairs, masks).grads;
  nn::ModelParams probe = params;
  GradCheck out;
  for (Eigen::Index i = 0; i < probe.flat().size(); ++i) {
    const double orig = probe.flat()[i];
    probe.flat()[i] = orig + h;
    const double up = nn::forward_loss(probe, pairs, masks);
    probe.flat()[i] = orig - h;
    const double down = nn::forward_loss(probe, pairs, masks);
    probe.flat()[i] = orig;
    const double fd = (up - down) / (2.0 * h);
    const double a = analytic.flat()[i];
    const double err = std::abs(a - fd);
    out.max_abs_error = std::max(out.max_abs_error, err);
    out.max_rel_error = std::max(out.max_rel_error, err / std::max({std::abs(a), std::abs(fd), floor}));
    ++out.checked;
  }
  return out;
}

}  // namespace tfcl::testing
