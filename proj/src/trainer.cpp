// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include "tfcl/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <json.hpp>
#include <numeric>
#include <sstream>

#include "tfcl/error.hpp"
#include "tfcl/kernels.hpp"
#include "tfcl/random.hpp"

namespace tfcl::train {
namespace {

// Stream tags for derive_seed.
constexpr std::uint64_t kInitStream = 0;
constexpr std::uint64_t kShuffleStream = 1;
constexpr std::uint64_t kMaskStream = 2;

StopReason parse_stop_reason(std::string_view s) {
  for (auto r : {StopReason::max_epochs, StopReason::early_stopping, StopReason::interrupted, StopReason::diverged})
    if (s == to_string(r)) return r;
  throw FormatError("unknown stop reason '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::early_stopping: return "early_stopping";
    case StopReason::interrupted: return "interrupted";
    case StopReason::diverged: return "diverged";
  }
  return "?";
}

void TrainerConfig::validate() const {
  if (batch_size < 1) throw InvalidInput("trainer: batch_size must be >= 1");
  if (!(lr0 > 0.0)) throw InvalidInput("trainer: lr0 must be > 0");
  if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw InvalidInput("trainer: lr_factor must lie in (0, 1)");
  if (!(min_lr >= 0.0)) throw InvalidInput("trainer: min_lr must be >= 0");
  if (!(es_min_improvement > 0.0 && es_min_improvement < 1.0))
    throw InvalidInput("trainer: es_min_improvement must lie in (0, 1)");
  if (plateau_patience < 1 || es_patience < 1) throw InvalidInput("trainer: patience values must be >= 1");
  if (max_epochs < 1) throw InvalidInput("trainer: max_epochs must be >= 1");
  if (n < 1 || (m && *m < 1)) throw InvalidInput("trainer: n and m must be >= 1");
  if (train_stride < 1 || val_stride < 1) throw InvalidInput("trainer: strides must be >= 1");
  if (shard_size < 1) throw InvalidInput("trainer: shard_size must be >= 1");
}

PlateauScheduler::PlateauScheduler(double lr0, std::size_t patience, double factor, double min_lr)
    : patience_(patience), factor_(factor), min_lr_(min_lr) {
  if (!(lr0 > 0.0) || patience < 1 || !(factor > 0.0 && factor < 1.0) || !(min_lr >= 0.0))
    throw InvalidInput("plateau scheduler: invalid settings");
  state_.lr = lr0;
}

double PlateauScheduler::step(double val_loss) {
  if (!state_.has_best || val_loss < state_.best) {
    state_.best = val_loss;
    state_.has_best = true;
    state_.bad_epochs = 0;
  } else if (++state_.bad_epochs >= patience_) {
    state_.lr = std::max(state_.lr * factor_, min_lr_);
    state_.bad_epochs = 0;
  }
  return state_.lr;
}

EarlyStopper::EarlyStopper(std::size_t patience, double min_improvement)
    : patience_(patience), min_improvement_(min_improvement) {
  if (patience < 1 || !(min_improvement > 0.0 && min_improvement < 1.0))
    throw InvalidInput("early stopping: invalid settings");
}

bool EarlyStopper::update(double val_loss) {
  if (!state_.has_best) {
    state_.best = val_loss;
    state_.has_best = true;
    state_.since = 0;
    return false;
  }
  if (val_loss <= state_.best * (1.0 - min_improvement_)) {
    state_.best = val_loss;
    state_.since = 0;
  } else {
    ++state_.since;
  }
  return state_.since >= patience_;
}

double scheduler_step(PlateauScheduler& sched, double val_loss) { return sched.step(val_loss); }

bool early_stop_check(std::span<const double> val_history, std::size_t patience, double min_improvement) {
  EarlyStopper stopper(patience, min_improvement);
  for (double v : val_history)
    if (stopper.update(v)) return true;
  return false;
}

std::string to_jsonl(const TrainLog& log, const LogMeta& meta) {
  using nlohmann::ordered_json;
  std::ostringstream out;
  ordered_json header;
  header["type"] = "header";
  header["config_hash"] = meta.config_hash;
  header["tool_version"] = meta.tool_version;
  out << header.dump() << '\n';
  for (const auto& r : log.epochs) {
    ordered_json j;
    j["type"] = "epoch";
    j["epoch"] = r.epoch;
    j["train_loss"] = r.train_loss;
    j["val_loss"] = r.val_loss;
    j["epsilon_i"] = r.epsilon;
    j["lr"] = r.lr;
    j["decoder_grad_norm_mean"] = r.decoder_grad_norm_mean;
    if (meta.timing) j["seconds"] = r.seconds;
    out << j.dump() << '\n';
  }
  ordered_json fin;
  fin["type"] = "final";
  fin["stop_reason"] = to_string(log.stop_reason);
  fin["best_epoch"] = log.best_epoch;
  fin["best_val_loss"] = log.best_val_loss;
  if (!log.diagnostic.empty()) fin["diagnostic"] = log.diagnostic;
  out << fin.dump() << '\n';
  return out.str();
}

TrainLog log_from_jsonl(const std::string& text, LogMeta* meta) {
  TrainLog log;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool saw_final = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto type = j.at("type").get<std::string>();
      if (type == "header") {
        if (meta) {
          meta->config_hash = j.at("config_hash").get<std::string>();
          meta->tool_version = j.at("tool_version").get<std::string>();
        }
      } else if (type == "epoch") {
        EpochRecord r;
        r.epoch = j.at("epoch").get<std::size_t>();
        r.train_loss = j.at("train_loss").get<double>();
        r.val_loss = j.at("val_loss").get<double>();
        r.epsilon = j.at("epsilon_i").get<double>();
        r.lr = j.at("lr").get<double>();
        r.decoder_grad_norm_mean = j.at("decoder_grad_norm_mean").get<double>();
        if (j.contains("seconds")) r.seconds = j.at("seconds").get<double>();
        if (meta) meta->timing = j.contains("seconds");
        log.epochs.push_back(r);
      } else if (type == "final") {
        log.stop_reason = parse_stop_reason(j.at("stop_reason").get<std::string>());
        log.best_epoch = j.at("best_epoch").get<std::size_t>();
        log.best_val_loss = j.at("best_val_loss").get<double>();
        if (j.contains("diagnostic")) log.diagnostic = j.at("diagnostic").get<std::string>();
        saw_final = true;
      } else {
        throw FormatError("unknown record type '" + type + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("train log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!saw_final) throw FormatError("train log: missing final record");
  return log;
}

std::size_t horizon_for(const TrainerConfig& cfg, const data::Dataset& ds) {
  if (cfg.m) return *cfg.m;
  if (!ds.lle) throw InvalidInput("trainer: dataset has no LLE; set the prediction length m explicitly");
  return data::prediction_length(ds.dt, *ds.lle);
}

TrainResult train(const nn::ModelDims& model, const TrainerConfig& cfg, const curriculum::CurriculumConfig& cc,
                  const data::Dataset& ds, const TrainHooks& hooks,
                  const std::optional<std::filesystem::path>& resume) {
  cfg.validate();
  if (model.d != ds.dim()) throw InvalidInput("trainer: model dimension does not match the dataset");

  curriculum::CurriculumConfig resolved = cc;
  if (resolved.strategy == curriculum::Strategy::STF && resolved.stf_tau == 0) {
    if (!ds.lle) throw InvalidInput("trainer: STF needs an LLE or an explicit period");
    resolved.stf_tau = curriculum::stf_tau(*ds.lle, ds.dt);
  }
  const curriculum::Curriculum curriculum(resolved);

  const std::size_t m = horizon_for(cfg, ds);
  const auto train_pairs = data::window(ds, data::Split::train, cfg.n, m, cfg.train_stride);
  const auto val_pairs = data::window(ds, data::Split::val, cfg.n, m, cfg.val_stride, cfg.val_context);
  if (train_pairs.empty()) throw InvalidInput("trainer: training split yields no windows");
  if (val_pairs.empty()) throw InvalidInput("trainer: validation split yields no windows");
  std::vector<const data::SequencePair*> val_refs;
  for (const auto& p : val_pairs) val_refs.push_back(&p);

  Checkpoint st;
  PlateauScheduler sched(cfg.lr0, cfg.plateau_patience, cfg.lr_factor, cfg.min_lr);
  EarlyStopper stopper(cfg.es_patience, cfg.es_min_improvement);
  if (resume) {
    st = load_checkpoint(*resume, model);
    if (st.seed != cfg.seed) throw InvalidInput("resume: checkpoint seed differs from the configured seed");
    sched.restore(st.scheduler);
    stopper.restore(st.stopper);
    const auto r = st.log.stop_reason;
    if (r == StopReason::early_stopping || r == StopReason::diverged || st.next_epoch >= cfg.max_epochs)
      return {st.best, st.params, st.log};
  } else {
    st.params = nn::init_params(model, derive_seed({cfg.seed, kInitStream}));
    st.adam = nn::make_adam_state(st.params);
    st.best = st.params;
    st.seed = cfg.seed;
  }

  auto save = [&](StopReason reason) {
    st.log.stop_reason = reason;
    if (cfg.checkpoint_path.empty()) return;
    st.scheduler = sched.state();
    st.stopper = stopper.state();
    Checkpoint copy = st;
    for (auto& r : copy.log.epochs) r.seconds = 0.0;
    save_checkpoint(copy, cfg.checkpoint_path);
  };

  std::vector<std::size_t> order(train_pairs.size());
  std::vector<const data::SequencePair*> batch;
  std::vector<nn::TFMask> masks;
  std::vector<const nn::TFMask*> mask_refs;
  nn::Gradients grads(model);
  const nn::LossOptions loss_opts{cfg.detach_feedback};
  bool has_best = !st.log.epochs.empty();

  for (std::size_t epoch = st.next_epoch; epoch < cfg.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double eps = curriculum.eval_epsilon(epoch);
    const double lr = sched.lr();

    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng(derive_seed({cfg.seed, kShuffleStream, epoch}));
    shuffle(std::span<std::size_t>(order), shuffle_rng);

    double sse_weighted = 0.0, norm_sum = 0.0;
    std::size_t n_batches = 0;
    try {
      for (std::size_t b0 = 0; b0 < order.size(); b0 += cfg.batch_size, ++n_batches) {
        const std::size_t b1 = std::min(order.size(), b0 + cfg.batch_size);
        Rng mask_rng(derive_seed({cfg.seed, kMaskStream, epoch, n_batches}));
        batch.clear();
        masks.clear();
        for (std::size_t i = b0; i < b1; ++i) {
          batch.push_back(&train_pairs[order[i]]);
          masks.push_back(curriculum.build_mask(eps, m, mask_rng));
        }
        mask_refs.clear();
        for (const auto& mk : masks) mask_refs.push_back(&mk);
        const auto g = cfg.parallel
                           ? kernels::batch_gradient_parallel(st.params, batch, mask_refs, cfg.shard_size, grads, loss_opts)
                           : kernels::batch_gradient_serial(st.params, batch, mask_refs, cfg.shard_size, grads, loss_opts);
        if (!std::isfinite(g.loss)) throw DivergenceError("non-finite training loss", n_batches);
        if (!std::isfinite(g.decoder_grad_norm)) throw DivergenceError("non-finite gradient", n_batches);
        nn::adam_step(st.params, grads, st.adam, lr);
        sse_weighted += g.loss * static_cast<double>(b1 - b0);
        norm_sum += g.decoder_grad_norm;
      }
    } catch (const DivergenceError& e) {
      st.log.diagnostic = "epoch " + std::to_string(epoch) + ", batch " + std::to_string(n_batches) + ": " + e.what();
      save(StopReason::diverged);
      return {st.best, st.params, st.log};
    }

    std::optional<double> val;
    if (hooks.val_loss_override) val = hooks.val_loss_override(epoch);
    if (!val) val = kernels::free_running_loss(st.params, val_refs, cfg.shard_size, cfg.parallel);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = sse_weighted / static_cast<double>(order.size());
    rec.val_loss = *val;
    rec.epsilon = eps;
    rec.lr = lr;
    rec.decoder_grad_norm_mean = norm_sum / static_cast<double>(n_batches);
    st.log.epochs.push_back(rec);
    st.next_epoch = epoch + 1;

    if (!std::isfinite(rec.val_loss)) {
      st.log.diagnostic = "epoch " + std::to_string(epoch) + ": non-finite validation loss";
      save(StopReason::diverged);
      return {st.best, st.params, st.log};
    }
    if (!has_best || rec.val_loss < st.log.best_val_loss) {
      has_best = true;
      st.best = st.params;
      st.log.best_epoch = epoch;
      st.log.best_val_loss = rec.val_loss;
    }
    if (hooks.on_best_so_far) hooks.on_best_so_far(st.log.epochs.back(), st.best);
    if (cfg.scheduler_enabled) sched.step(rec.val_loss);
    const bool stop = stopper.update(rec.val_loss);
    st.log.epochs.back().seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    if (stop) {
      save(StopReason::early_stopping);
      return {st.best, st.params, st.log};
    }
    if (cfg.checkpoint_every > 0 && st.next_epoch % cfg.checkpoint_every == 0) save(StopReason::interrupted);
    if (hooks.on_epoch_end && !hooks.on_epoch_end(st.log.epochs.back())) {
      save(StopReason::interrupted);
      return {st.best, st.params, st.log};
    }
  }
  save(StopReason::max_epochs);
  return {st.best, st.params, st.log};
}

}  // namespace tfcl::train
