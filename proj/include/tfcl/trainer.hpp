// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfcl/curriculum.hpp"
#include "tfcl/dataio.hpp"
#include "tfcl/nn.hpp"

namespace tfcl::train {

struct TrainerConfig {
  std::size_t batch_size = 128;
  double lr0 = 1e-3;
  std::size_t plateau_patience = 10;
  double lr_factor = 0.6;
  double min_lr = 3e-6;
  std::size_t es_patience = 100;
  double es_min_improvement = 0.01;
  std::size_t max_epochs = 1000;
  std::uint64_t seed = 0;
  bool detach_feedback = false;
  bool scheduler_enabled = true;
  bool log_timing = true;  // emit wall-clock seconds in the JSON-lines log

  // Windowing. m defaults to ceil(1 / (dt * lle)).
  std::size_t n = 150;
  std::optional<std::size_t> m;
  std::size_t train_stride = 1;
  std::size_t val_stride = 1;
  data::Context val_context = data::Context::within_split;

  std::size_t shard_size = 16;
  bool parallel = true;

  // Periodic checkpoints; 0 disables them.
  std::size_t checkpoint_every = 0;
  std::filesystem::path checkpoint_path;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double epsilon = 0.0;
  double lr = 0.0;
  double decoder_grad_norm_mean = 0.0;
  double seconds = 0.0;  // wall time; excluded from equality

  bool operator==(const EpochRecord& o) const {
    return epoch == o.epoch && train_loss == o.train_loss && val_loss == o.val_loss && epsilon == o.epsilon &&
           lr == o.lr && decoder_grad_norm_mean == o.decoder_grad_norm_mean;
  }
};

enum class StopReason : std::uint8_t { max_epochs = 0, early_stopping = 1, interrupted = 2, diverged = 3 };
std::string_view to_string(StopReason r);

struct TrainLog {
  std::vector<EpochRecord> epochs;
  StopReason stop_reason = StopReason::max_epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::string diagnostic;  // set when training diverged

  bool operator==(const TrainLog&) const = default;
};

struct LogMeta {
  std::string config_hash;
  std::string tool_version = TFCL_VERSION;
  bool timing = true;
};

// JSON lines: a header object, one object per epoch, then a final record.
std::string to_jsonl(const TrainLog& log, const LogMeta& meta);
TrainLog log_from_jsonl(const std::string& text, LogMeta* meta = nullptr);

// Reduce-on-plateau: after `patience` epochs without strict improvement the
// rate is multiplied by `factor`, never going below `min_lr`.
class PlateauScheduler {
 public:
  struct State {
    double lr = 0.0;
    double best = 0.0;
    std::size_t bad_epochs = 0;
    bool has_best = false;
    bool operator==(const State&) const = default;
  };

  PlateauScheduler(double lr0, std::size_t patience, double factor, double min_lr);
  double step(double val_loss);
  double lr() const { return state_.lr; }
  const State& state() const { return state_; }
  void restore(const State& s) { state_ = s; }

 private:
  State state_;
  std::size_t patience_;
  double factor_, min_lr_;
};

// Stops once `patience` consecutive epochs failed to improve the reference
// loss by at least the relative threshold.
class EarlyStopper {
 public:
  struct State {
    double best = 0.0;
    std::size_t since = 0;
    bool has_best = false;
    bool operator==(const State&) const = default;
  };

  EarlyStopper(std::size_t patience, double min_improvement);
  bool update(double val_loss);  // true: stop now
  const State& state() const { return state_; }
  void restore(const State& s) { state_ = s; }

 private:
  State state_;
  std::size_t patience_;
  double min_improvement_;
};

// Convenience wrappers over a sequence of validation losses.
double scheduler_step(PlateauScheduler& sched, double val_loss);
bool early_stop_check(std::span<const double> val_history, std::size_t patience = 100, double min_improvement = 0.01);

struct Checkpoint {
  nn::ModelParams params;
  nn::AdamState adam;
  PlateauScheduler::State scheduler;
  EarlyStopper::State stopper;
  std::size_t next_epoch = 0;
  std::uint64_t seed = 0;
  nn::ModelParams best;
  TrainLog log;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
// Throws VersionError on a version tag or (when `expect` is given) model shape
// mismatch.
Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<nn::ModelDims>& expect = {});

struct TrainHooks {
  // Replaces the computed validation loss for an epoch (test doubles).
  std::function<std::optional<double>(std::size_t epoch)> val_loss_override;
  // Called after each epoch (and after its checkpoint); returning false
  // interrupts training.
  std::function<bool(const EpochRecord&)> on_epoch_end;
  // Called after each epoch with the best parameters seen so far.
  std::function<void(const EpochRecord&, const nn::ModelParams&)> on_best_so_far;
};

struct TrainResult {
  nn::ModelParams best;  // parameters of the epoch with minimal validation loss
  nn::ModelParams last;
  TrainLog log;
};

std::size_t horizon_for(const TrainerConfig& cfg, const data::Dataset& ds);

TrainResult train(const nn::ModelDims& model, const TrainerConfig& cfg, const curriculum::CurriculumConfig& cc,
                  const data::Dataset& ds, const TrainHooks& hooks = {},
                  const std::optional<std::filesystem::path>& resume = std::nullopt);

}  // namespace tfcl::train
