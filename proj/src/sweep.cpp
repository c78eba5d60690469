// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <map>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "tfcl/error.hpp"
#include "tfcl/experiment.hpp"

namespace tfcl::experiment {
namespace {

using curriculum::Strategy;
using curriculum::Transition;

std::string num(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

bool increasing(Strategy s) { return s == Strategy::CL_ITF_P || s == Strategy::CL_ITF_D; }
bool decreasing(Strategy s) { return s == Strategy::CL_DTF_P || s == Strategy::CL_DTF_D; }

std::string cell_id(const curriculum::CurriculumConfig& c, std::uint64_t seed) {
  return cell_label(c) + "-s" + std::to_string(seed);
}

nlohmann::ordered_json result_json(const config::ExperimentConfig& cfg, const curriculum::CurriculumConfig& cc,
                                   std::uint64_t seed, const data::Dataset& ds, const train::TrainResult& res,
                                   const std::optional<metrics::EvalReport>& rep, std::optional<std::size_t> bl_epochs,
                                   const std::optional<metrics::EvalReport>& rep_at_bl) {
  nlohmann::ordered_json j;
  j["cell"] = cell_id(cc, seed);
  j["strategy"] = curriculum::to_string(cc.strategy);
  j["label"] = cell_label(cc);
  j["seed"] = seed;
  j["config_hash"] = config::config_hash(cfg);
  j["tool_version"] = TFCL_VERSION;
  j["epochs_trained"] = res.log.epochs.size();
  j["stop_reason"] = train::to_string(res.log.stop_reason);
  j["best_epoch"] = res.log.best_epoch;
  j["best_val_loss"] = res.log.best_val_loss;
  j["dt"] = ds.dt;
  j["lle"] = ds.lle ? nlohmann::ordered_json(*ds.lle) : nlohmann::ordered_json(nullptr);
  j["eval"] = rep ? nlohmann::ordered_json::parse(metrics::to_json(*rep)) : nlohmann::ordered_json(nullptr);
  j["bl_epochs"] = bl_epochs ? nlohmann::ordered_json(*bl_epochs) : nlohmann::ordered_json(nullptr);
  j["eval_at_bl"] =
      rep_at_bl ? nlohmann::ordered_json::parse(metrics::to_json(*rep_at_bl)) : nlohmann::ordered_json(nullptr);
  return j;
}

// Epochs trained by the better baseline (lowest mean NRMSE over its finished
// seeds), per seed. Empty when no baseline has finished.
std::map<std::uint64_t, std::size_t> baseline_epochs(const std::filesystem::path& out_dir) {
  struct Runs {
    double sum = 0.0;
    std::size_t n = 0;
    std::map<std::uint64_t, std::size_t> epochs;
  };
  std::map<std::string, Runs> by_strategy;
  for (const auto& e : std::filesystem::directory_iterator(out_dir)) {
    const auto file = e.path() / "result.json";
    if (!std::filesystem::exists(file)) continue;
    const auto j = nlohmann::json::parse(read_file(file));
    const auto strategy = j.at("strategy").get<std::string>();
    if (strategy != "FR" && strategy != "TF") continue;
    if (j.at("eval").is_null()) continue;
    auto& r = by_strategy[strategy];
    r.sum += j.at("eval").at("nrmse_mean_1lt").get<double>();
    ++r.n;
    r.epochs[j.at("seed").get<std::uint64_t>()] = j.at("epochs_trained").get<std::size_t>();
  }
  const Runs* best = nullptr;
  for (const auto& [name, r] : by_strategy)
    if (!best || r.sum / double(r.n) < best->sum / double(best->n)) best = &r;
  return best ? best->epochs : std::map<std::uint64_t, std::size_t>{};
}

}  // namespace

config::ExperimentConfig for_run(const config::ExperimentConfig& cfg, std::uint64_t seed, const data::Dataset& ds) {
  auto rc = cfg;
  rc.model.d = ds.dim();
  rc.trainer.seed = seed;
  return rc;
}

train::TrainResult run_training(const config::ExperimentConfig& cfg, std::uint64_t seed, const data::Dataset& ds,
                                const std::filesystem::path& out_dir,
                                const std::optional<std::filesystem::path>& resume, const train::TrainHooks& hooks) {
  auto rc = for_run(cfg, seed, ds);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());
  rc.trainer.checkpoint_path = out_dir / "model.ckpt";
  auto res = train::train(rc.model, rc.trainer, rc.curriculum, ds, hooks, resume);
  train::LogMeta meta;
  meta.config_hash = config::config_hash(cfg);
  meta.timing = rc.trainer.log_timing;
  write_file_atomic(out_dir / "log.jsonl", train::to_jsonl(res.log, meta));
  return res;
}

metrics::EvalReport run_eval(const config::ExperimentConfig& cfg, const nn::ModelParams& params,
                             const data::Dataset& ds) {
  metrics::EvalOptions o;
  o.warmup = cfg.trainer.n;
  o.horizon_steps = config::eval_horizon(cfg, ds);
  o.stride = cfg.eval.stride;
  o.context = cfg.eval.context;
  o.threshold = cfg.eval.threshold;
  return metrics::evaluate(metrics::model_forecaster(params, cfg.trainer.shard_size, cfg.trainer.parallel), ds, o);
}

std::string eval_json(const metrics::EvalReport& r, const std::string& config_hash) {
  auto j = nlohmann::ordered_json::parse(metrics::to_json(r));
  j["config_hash"] = config_hash;
  j["tool_version"] = TFCL_VERSION;
  return j.dump(2) + "\n";
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::size_t>& essential_lengths() {
  static const std::vector<std::size_t> l{62, 125, 250, 500, 1000, 2000, 4000, 8000, 16000, 32000};
  return l;
}

const std::vector<std::string>& sweep_preset_names() {
  static const std::vector<std::string> n{"essential", "exploratory", "config"};
  return n;
}

std::vector<std::size_t> scaled_lengths(std::span<const std::size_t> lengths, double scale) {
  if (!(scale > 0.0)) throw InvalidInput("scale must be > 0");
  std::vector<std::size_t> out;
  for (auto l : lengths) out.push_back(static_cast<std::size_t>(std::max(1LL, std::llround(scale * double(l)))));
  return out;
}

std::string cell_label(const curriculum::CurriculumConfig& c) {
  std::string s(curriculum::to_string(c.strategy));
  switch (curriculum::mode_of(c.strategy)) {
    case curriculum::Mode::constant:
      return s;
    case curriculum::Mode::sparse:
      return s + "-tau" + (c.stf_tau == 0 ? std::string("auto") : std::to_string(c.stf_tau));
    default:
      break;
  }
  if (c.strategy == Strategy::CL_CTF_P) return s + "-e" + num(c.epsilon_const);
  return s + "-" + std::string(curriculum::to_string(c.transition)) + "-" + num(c.eps_start) + "-" + num(c.eps_end) +
         "-L" + std::to_string(c.length);
}

std::vector<curriculum::CurriculumConfig> sweep_grid(std::string_view preset, std::span<const Strategy> strategies,
                                                     double scale, const curriculum::CurriculumConfig& base) {
  if (strategies.empty()) throw InvalidInput("sweep: the strategy list is empty");
  const bool essential = preset == "essential";
  if (!essential && preset != "exploratory" && preset != "config")
    throw InvalidInput("unknown sweep preset '" + std::string(preset) + "' (expected essential, exploratory or config)");

  std::vector<curriculum::CurriculumConfig> out;
  std::set<std::string> labels;
  auto add = [&](curriculum::CurriculumConfig c) {
    if (labels.insert(cell_label(c)).second) out.push_back(c);
  };
  const std::size_t explore_length = scaled_lengths(std::vector<std::size_t>{1000}, scale).front();
  const auto lengths = scaled_lengths(essential_lengths(), scale);

  for (auto s : strategies) {
    curriculum::CurriculumConfig c = preset == "config" ? base : curriculum::CurriculumConfig{};
    c.strategy = s;
    if (preset == "config") {
      add(c);
      continue;
    }
    if (s == Strategy::STF) c.stf_tau = 0;
    if (s == Strategy::CL_CTF_P) {
      for (double e : {0.25, 0.5, 0.75}) {
        c.epsilon_const = e;
        add(c);
      }
    } else if (increasing(s) || decreasing(s)) {
      const double far = increasing(s) ? 1.0 : 0.0;
      if (essential) {
        c.transition = Transition::linear;
        c.eps_start = 1.0 - far;
        c.eps_end = far;
        for (auto L : lengths) {
          c.length = L;
          add(c);
        }
      } else {
        c.length = explore_length;
        c.eps_end = far;
        const auto starts = increasing(s) ? std::vector<double>{0.0, 0.25, 0.5, 0.75}
                                          : std::vector<double>{0.25, 0.5, 0.75, 1.0};
        for (auto t : {Transition::linear, Transition::inverse_sigmoid, Transition::exponential})
          for (double e : starts) {
            c.transition = t;
            c.eps_start = e;
            add(c);
          }
      }
    } else {
      add(c);
    }
  }
  return out;
}

std::size_t default_workers() {
  if (const char* env = std::getenv("TFCL_WORKERS"); env && *env) {
    std::size_t n = 0;
    const std::string_view v(env);
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
    if (ec != std::errc() || p != v.data() + v.size() || n < 1)
      throw InvalidInput("TFCL_WORKERS must be a positive integer");
    return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepSummary run_sweep(const config::ExperimentConfig& base, const SweepOptions& opts,
                       const std::filesystem::path& out_dir, std::ostream* progress) {
  const auto grid = sweep_grid(opts.preset, opts.strategies, opts.scale, base.curriculum);
  base.validate();
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  nlohmann::ordered_json meta;
  meta["tool_version"] = TFCL_VERSION;
  meta["config_hash"] = config::config_hash(base);
  meta["preset"] = opts.preset;
  meta["scale"] = opts.scale;
  std::vector<std::string> names;
  for (auto s : opts.strategies) names.emplace_back(curriculum::to_string(s));
  meta["strategies"] = names;
  meta["seeds"] = base.seeds;
  write_file_atomic(out_dir / "sweep.json", meta.dump(2) + "\n");
  write_file_atomic(out_dir / "config.txt", config::to_text(base));

  struct Cell {
    curriculum::CurriculumConfig cc;
    std::uint64_t seed;
  };
  std::vector<Cell> pending;
  SweepSummary summary;
  for (const auto& cc : grid)
    for (auto seed : base.seeds) {
      ++summary.total;
      if (std::filesystem::exists(out_dir / cell_id(cc, seed) / "result.json"))
        ++summary.skipped;
      else
        pending.push_back({cc, seed});
    }
  if (pending.empty()) return summary;

  const data::Dataset ds = config::load_data(base);
  const std::size_t max_workers = opts.workers ? opts.workers : default_workers();
  std::mutex mu;
  std::exception_ptr error;

  auto run_cell = [&](const Cell& cell, bool in_pool, const std::map<std::uint64_t, std::size_t>& bl) {
    auto cfg = base;
    cfg.curriculum = cell.cc;
    cfg.seeds = {cell.seed};
    // Cells already run concurrently; keep each one on its own thread.
    if (in_pool) cfg.trainer.parallel = false;
    const auto dir = out_dir / cell_id(cell.cc, cell.seed);

    std::optional<std::size_t> bl_epochs;
    if (const auto it = bl.find(cell.seed); it != bl.end() && !curriculum::is_baseline(cell.cc.strategy)) bl_epochs = it->second;
    std::optional<nn::ModelParams> at_bl;
    train::TrainHooks hooks;
    if (bl_epochs)
      hooks.on_best_so_far = [&](const train::EpochRecord& r, const nn::ModelParams& best) {
        if (r.epoch + 1 == *bl_epochs) at_bl = best;
      };
    const auto res = run_training(cfg, cell.seed, ds, dir, std::nullopt, hooks);
    const bool diverged = res.log.stop_reason == train::StopReason::diverged;
    std::optional<metrics::EvalReport> rep, rep_at_bl;
    try {
      rep = run_eval(cfg, res.best, ds);
      // A run that stopped before the baseline's epoch count is scored as is.
      if (bl_epochs) rep_at_bl = at_bl ? run_eval(cfg, *at_bl, ds) : rep;
    } catch (const std::exception&) {
      if (!diverged) throw;
    }
    write_file_atomic(dir / "result.json",
                      result_json(cfg, cell.cc, cell.seed, ds, res, rep, bl_epochs, rep_at_bl).dump(2) + "\n");
    std::lock_guard lock(mu);
    ++summary.completed;
    if (diverged) ++summary.diverged;
    if (progress)
      *progress << "[" << summary.completed + summary.skipped << "/" << summary.total << "] "
                << cell_id(cell.cc, cell.seed) << ": " << train::to_string(res.log.stop_reason) << " after "
                << res.log.epochs.size() << " epochs"
                << (rep ? ", NRMSE " + num(rep->nrmse_mean_1lt) : std::string()) << "\n";
  };

  auto run_all = [&](const std::vector<Cell>& cells, const std::map<std::uint64_t, std::size_t>& bl) {
    if (cells.empty()) return;
    const std::size_t workers = std::min(cells.size(), max_workers);
    std::atomic<std::size_t> next{0};
    auto work = [&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        {
          std::lock_guard lock(mu);
          if (error) return;
        }
        try {
          run_cell(cells[i], workers > 1, bl);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    };
    if (workers <= 1) {
      work();
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
      for (auto& t : pool) t.join();
    }
  };

  // Baselines first: the other cells are also scored at the better
  // baseline's epoch count.
  std::vector<Cell> baselines, others;
  for (const auto& c : pending) (curriculum::is_baseline(c.cc.strategy) ? baselines : others).push_back(c);
  run_all(baselines, {});
  if (!error) run_all(others, baseline_epochs(out_dir));
  if (error) std::rethrow_exception(error);
  return summary;
}

}  // namespace tfcl::experiment
