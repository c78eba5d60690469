// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Runs wiring config, trainer and metrics together: single training runs,
// strategy sweeps over a results directory, and report rendering.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfcl/config.hpp"
#include "tfcl/curriculum.hpp"
#include "tfcl/metrics.hpp"
#include "tfcl/trainer.hpp"

namespace tfcl::experiment {

// Config for one run: the dataset fixes the model's input dimension and the
// seed becomes the trainer seed.
config::ExperimentConfig for_run(const config::ExperimentConfig& cfg, std::uint64_t seed, const data::Dataset& ds);

// Trains and writes log.jsonl and model.ckpt into out_dir.
train::TrainResult run_training(const config::ExperimentConfig& cfg, std::uint64_t seed, const data::Dataset& ds,
                                const std::filesystem::path& out_dir,
                                const std::optional<std::filesystem::path>& resume = std::nullopt,
                                const train::TrainHooks& hooks = {});

metrics::EvalReport run_eval(const config::ExperimentConfig& cfg, const nn::ModelParams& params,
                             const data::Dataset& ds);

// EvalReport JSON with the config hash and tool version appended.
std::string eval_json(const metrics::EvalReport& r, const std::string& config_hash);

// Writes `text` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
std::string read_file(const std::filesystem::path& path);

// ---- sweeps ----

const std::vector<std::size_t>& essential_lengths();
const std::vector<std::string>& sweep_preset_names();

// max(1, round(scale * L)) for each length.
std::vector<std::size_t> scaled_lengths(std::span<const std::size_t> lengths, double scale);

// Curriculum settings of a preset, restricted to the given strategies. The
// "config" preset takes every setting from `base` and only varies the
// strategy.
std::vector<curriculum::CurriculumConfig> sweep_grid(std::string_view preset,
                                                     std::span<const curriculum::Strategy> strategies,
                                                     double scale, const curriculum::CurriculumConfig& base = {});

// Short stable name of a curriculum setting, used as a directory name.
std::string cell_label(const curriculum::CurriculumConfig& c);

struct SweepOptions {
  std::string preset = "essential";
  std::vector<curriculum::Strategy> strategies;
  double scale = 1.0;
  std::size_t workers = 0;  // 0: default_workers()
};

struct SweepSummary {
  std::size_t total = 0, skipped = 0, completed = 0, diverged = 0;
};

// TFCL_WORKERS when set, otherwise the number of logical cores.
std::size_t default_workers();

// Runs every (setting, seed) cell not yet present in out_dir. Each finished
// cell leaves <cell>/result.json, written last and atomically.
SweepSummary run_sweep(const config::ExperimentConfig& base, const SweepOptions& opts,
                       const std::filesystem::path& out_dir, std::ostream* progress = nullptr);

// ---- reports ----

struct Report {
  std::string markdown;
  std::string r2_csv;
};

// Aggregates the result.json files below a sweep directory.
Report build_report(const std::filesystem::path& sweep_dir);

}  // namespace tfcl::experiment
