// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Experiment configuration: a flat text file of `section.key = value` lines.
// Blank lines and lines starting with '#' are ignored. Unknown keys, repeated
// keys and ill-typed values are errors. `schema_text()` lists every key.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tfcl/curriculum.hpp"
#include "tfcl/dataio.hpp"
#include "tfcl/nn.hpp"
#include "tfcl/trainer.hpp"

namespace tfcl::config {

struct DataConfig {
  // Either a dataset file (binary, or CSV by extension) or a system preset
  // generated on the fly.
  std::string path;
  std::string system;
  std::map<std::string, double> params;  // system.params.* overrides
  std::size_t samples = 10000;
  std::uint64_t seed = 0;
  std::size_t transient = 1000;
  std::size_t substeps = 10;
  // CSV ingestion.
  std::vector<std::size_t> columns;
  double dt = 1.0;
  std::optional<double> lle;
  bool skip_header = false;
};

struct EvalConfig {
  double horizon_lt = 1.0;       // horizon in Lyapunov times
  std::size_t horizon_steps = 0;  // overrides horizon_lt when nonzero
  double threshold = 0.9;
  std::size_t stride = 0;  // 0: non-overlapping windows
  data::Context context = data::Context::within_split;
};

struct ExperimentConfig {
  DataConfig data;
  nn::ModelDims model;
  train::TrainerConfig trainer;
  curriculum::CurriculumConfig curriculum;
  EvalConfig eval;
  std::vector<std::uint64_t> seeds{0};

  // Directory relative data paths are resolved against; not part of the hash.
  std::filesystem::path base_dir;

  void validate() const;
};

// "paper" keeps the published hyper-parameters; "desk" shrinks the model and
// run length for single-machine runs.
ExperimentConfig preset_config(std::string_view name);
const std::vector<std::string>& preset_config_names();

// A `preset = NAME` line, wherever it appears, selects the starting values
// that the remaining keys override.
ExperimentConfig parse_config(std::string_view text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical form: every key, sorted, with round-trip exact numbers.
std::string to_text(const ExperimentConfig& cfg);
// FNV-1a 64 of the canonical form, as 16 hex digits.
std::string config_hash(const ExperimentConfig& cfg);
std::string schema_text();

std::filesystem::path resolve_data_path(const ExperimentConfig& cfg);
data::Dataset load_data(const ExperimentConfig& cfg);

// Evaluation horizon in steps for a dataset.
std::size_t eval_horizon(const ExperimentConfig& cfg, const data::Dataset& ds);

}  // namespace tfcl::config
