// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tfcl/dynsys.hpp"
#include "tfcl/series.hpp"

namespace tfcl::data {

enum class Split { train, val, test };

struct Source {
  enum class Kind : std::uint8_t { generated = 0, external = 1 };
  Kind kind = Kind::generated;
  std::string label;  // system name or file path
  std::map<std::string, double> params;
  std::vector<double> x0;
  std::uint64_t seed = 0;
  std::uint64_t transient = 0;
  std::uint64_t substeps = 0;

  bool operator==(const Source&) const = default;
};

// Normalized multivariate series with its 80/10/10 split.
struct Dataset {
  Series values;  // z-normalized with training-slice statistics
  std::vector<double> mean;
  std::vector<double> std;
  double sigma_scalar = 1.0;
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  double dt = 1.0;
  std::optional<double> lle;
  Source source;

  std::size_t steps() const { return static_cast<std::size_t>(values.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(values.cols()); }
  std::size_t split_begin(Split s) const;
  std::size_t split_end(Split s) const;

  Series denormalize(const Series& normalized) const;
  Series normalize(const Series& raw) const;
};

bool operator==(const Dataset& a, const Dataset& b);

struct SequencePair {
  Series input;   // n x d
  Series target;  // m x d, immediately follows input
  std::size_t origin_index = 0;  // row of input(0) in the dataset
};

struct GenerateOptions {
  std::size_t transient = 1000;
  std::size_t substeps = 10;
  // Replaces the preset's default initial state when set.
  std::optional<std::vector<double>> x0;
};

// Builds a dataset from raw rows: computes split indices and z-normalizes
// with statistics of the training slice.
Dataset from_raw(const Series& raw, double dt, std::optional<double> lle, Source source);

// Integrates the system, drops the transient and normalizes. The seed adds a
// deterministic perturbation of at most 0.01 per coordinate to the initial
// state; the state actually used is recorded in source.x0.
Dataset generate_dataset(const dynsys::SystemSpec& spec, std::size_t n_samples = 10000,
                         std::uint64_t seed = 0, const GenerateOptions& opts = {});

struct CsvOptions {
  std::vector<std::size_t> columns;  // empty selects every column
  double dt = 1.0;
  std::optional<double> lle;         // LT-based metrics are disabled when absent
  bool skip_header = false;
};

Dataset load_external_csv(const std::filesystem::path& path, const CsvOptions& opts = {});

// m = ceil(1 / (dt * lle)).
std::size_t prediction_length(double dt, double lle);

enum class Context {
  within_split,  // input and target both inside the split
  lookback,      // target inside the split; input may reach into earlier rows
};

std::vector<SequencePair> window(const Dataset& ds, Split split, std::size_t n, std::size_t m,
                                 std::size_t stride, Context context = Context::within_split);

inline constexpr std::uint32_t kDatasetVersion = 1;

void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace tfcl::data
