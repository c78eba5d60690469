// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>
#include <charconv>
#include <cstdio>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "tfcl/cli.hpp"
#include "tfcl/dynsys.hpp"
#include "tfcl/error.hpp"
#include "tfcl/experiment.hpp"
#include "tfcl/kernels.hpp"

namespace tfcl::cli {
namespace {

std::pair<std::string, double> parse_assignment(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw InvalidInput("expected NAME=VALUE, got '" + s + "'");
  double v = 0.0;
  const std::string rhs = s.substr(eq + 1);
  const auto [p, ec] = std::from_chars(rhs.data(), rhs.data() + rhs.size(), v);
  if (ec != std::errc() || p != rhs.data() + rhs.size()) throw InvalidInput("not a number in '" + s + "'");
  return {s.substr(0, eq), v};
}

std::string hash_text(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct GenArgs {
  std::string system, csv, out;
  std::size_t samples = 10000, transient = 1000, substeps = 10;
  std::uint64_t seed = 0;
  std::vector<std::string> params;
  std::vector<std::size_t> columns;
  double dt = 1.0;
  double lle = 0.0;
  bool skip_header = false;
};

int cmd_gen(const GenArgs& a, std::ostream& out) {
  if (a.system.empty() == a.csv.empty()) throw InvalidInput("gen: give exactly one of --system and --csv");
  data::Dataset ds;
  if (!a.system.empty()) {
    auto spec = dynsys::preset(a.system);
    for (const auto& p : a.params) {
      const auto [k, v] = parse_assignment(p);
      dynsys::set_param(spec, k, v);
    }
    ds = data::generate_dataset(spec, a.samples, a.seed, {a.transient, a.substeps, std::nullopt});
  } else {
    data::CsvOptions o;
    o.columns = a.columns;
    o.dt = a.dt;
    if (a.lle > 0.0) o.lle = a.lle;
    o.skip_header = a.skip_header;
    ds = data::load_external_csv(a.csv, o);
  }
  data::save_dataset(ds, a.out);

  nlohmann::ordered_json j;
  j["kind"] = ds.source.kind == data::Source::Kind::generated ? "generated" : "external";
  j["system"] = ds.source.label;
  j["params"] = ds.source.params;
  j["seed"] = ds.source.seed;
  j["transient"] = ds.source.transient;
  j["substeps"] = ds.source.substeps;
  j["x0"] = ds.source.x0;
  j["steps"] = ds.steps();
  j["dim"] = ds.dim();
  j["dt"] = ds.dt;
  j["lle"] = ds.lle ? nlohmann::ordered_json(*ds.lle) : nlohmann::ordered_json(nullptr);
  j["train_end"] = ds.train_end;
  j["val_end"] = ds.val_end;
  j["sigma"] = ds.sigma_scalar;
  j["config_hash"] = hash_text(j.dump());
  j["tool_version"] = TFCL_VERSION;
  experiment::write_file_atomic(a.out + ".json", j.dump(2) + "\n");
  out << "wrote " << a.out << " (" << ds.steps() << " steps, d=" << ds.dim() << ")\n";
  return kOk;
}

struct TrainArgs {
  std::string config, out, resume;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> max_epochs, stop_after;
  int threads = 0;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  auto cfg = config::load_config(a.config);
  if (a.max_epochs) cfg.trainer.max_epochs = *a.max_epochs;
  cfg.validate();
  kernels::set_num_threads(a.threads);
  const auto ds = config::load_data(cfg);
  const std::uint64_t seed = a.seed.value_or(cfg.seeds.front());
  train::TrainHooks hooks;
  if (a.stop_after) {
    const std::size_t limit = *a.stop_after;
    hooks.on_epoch_end = [limit](const train::EpochRecord& r) { return r.epoch + 1 < limit; };
  }
  std::optional<std::filesystem::path> resume;
  if (!a.resume.empty()) resume = a.resume;
  const auto res = experiment::run_training(cfg, seed, ds, a.out, resume, hooks);
  out << "stop: " << train::to_string(res.log.stop_reason) << ", epochs " << res.log.epochs.size() << ", best epoch "
      << res.log.best_epoch << ", best val loss " << res.log.best_val_loss << "\n";
  out << "config hash " << config::config_hash(cfg) << "\n";
  if (res.log.stop_reason == train::StopReason::diverged) {
    out << "diverged: " << res.log.diagnostic << "\n";
    return kDivergence;
  }
  return kOk;
}

struct EvalArgs {
  std::string config, checkpoint, out;
  std::optional<double> horizon_lt;
  bool last = false;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  auto cfg = config::load_config(a.config);
  if (a.horizon_lt) {
    cfg.eval.horizon_lt = *a.horizon_lt;
    cfg.eval.horizon_steps = 0;
  }
  cfg.validate();
  const auto ds = config::load_data(cfg);
  auto dims = cfg.model;
  dims.d = ds.dim();
  const auto ckpt = train::load_checkpoint(a.checkpoint, dims);
  const auto rep = experiment::run_eval(cfg, a.last ? ckpt.params : ckpt.best, ds);
  experiment::write_file_atomic(a.out, experiment::eval_json(rep, config::config_hash(cfg)));
  out << "NRMSE(1 LT) " << rep.nrmse_mean_1lt << ", last 10% " << rep.nrmse_last10;
  if (rep.lt_r2_horizon) out << ", LT with R2>" << rep.threshold << ": " << *rep.lt_r2_horizon;
  out << " over " << rep.n_test_sequences << " sequences\n";
  return kOk;
}

struct SweepArgs {
  std::string config, out, preset = "essential", strategies;
  double scale = 1.0;
  std::string seeds;
  std::size_t workers = 0;
};

int cmd_sweep(const SweepArgs& a, std::ostream& out) {
  auto cfg = config::load_config(a.config);
  if (!a.seeds.empty()) {
    cfg.seeds.clear();
    std::stringstream seeds(a.seeds);
    std::string s;
    while (std::getline(seeds, s, ',')) {
      std::uint64_t v = 0;
      const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || p != s.data() + s.size()) throw InvalidInput("sweep: bad seed '" + s + "'");
      cfg.seeds.push_back(v);
    }
  }
  experiment::SweepOptions o;
  o.preset = a.preset;
  o.scale = a.scale;
  o.workers = a.workers;
  std::stringstream ss(a.strategies);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) o.strategies.push_back(curriculum::parse_strategy(item));
  if (o.strategies.empty()) throw InvalidInput("sweep: --strategies must name at least one strategy");
  const auto s = experiment::run_sweep(cfg, o, a.out, &out);
  out << s.total << " cells: " << s.completed << " run, " << s.skipped << " already finished, " << s.diverged
      << " diverged\n";
  return s.diverged > 0 ? kDivergence : kOk;
}

int cmd_report(const std::string& dir, std::ostream& out) {
  const auto rep = experiment::build_report(dir);
  const std::filesystem::path d(dir);
  experiment::write_file_atomic(d / "report.md", rep.markdown);
  experiment::write_file_atomic(d / "r2_curves.csv", rep.r2_csv);
  out << rep.markdown;
  return kOk;
}

struct LleArgs {
  std::string system;
  std::vector<std::string> params;
  std::size_t steps = 100000, transient = 5000, renorm = 10;
};

int cmd_lle(const LleArgs& a, std::ostream& out) {
  auto spec = a.system == "decay" ? dynsys::decay_system() : dynsys::preset(a.system);
  for (const auto& p : a.params) {
    const auto [k, v] = parse_assignment(p);
    dynsys::set_param(spec, k, v);
  }
  dynsys::LleOptions o;
  o.total_steps = a.steps;
  o.transient_steps = a.transient;
  o.renorm_interval = a.renorm;
  const double est = dynsys::estimate_lle(spec, spec.x0, o);
  out << spec.name << ": estimated LLE " << est;
  if (spec.lle) out << ", published " << *spec.lle << ", ratio " << est / *spec.lle;
  out << "\n";
  return kOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Teacher-forcing curricula for recurrent forecasting of chaotic systems", "tfcl"};
  app.set_version_flag("--version", TFCL_VERSION);
  app.require_subcommand(1);

  GenArgs ga;
  auto* gen = app.add_subcommand("gen", "generate or import a dataset");
  gen->add_option("--system", ga.system, "system preset");
  gen->add_option("--csv", ga.csv, "import a CSV file instead of generating");
  gen->add_option("--samples", ga.samples, "steps after the transient")->capture_default_str();
  gen->add_option("--seed", ga.seed, "initial-state perturbation seed")->capture_default_str();
  gen->add_option("--transient", ga.transient, "discarded steps")->capture_default_str();
  gen->add_option("--substeps", ga.substeps, "integrator substeps per sample")->capture_default_str();
  gen->add_option("--param", ga.params, "parameter override NAME=VALUE (repeatable)");
  gen->add_option("--columns", ga.columns, "CSV columns to keep")->delimiter(',');
  gen->add_option("--dt", ga.dt, "CSV sampling interval")->capture_default_str();
  gen->add_option("--lle", ga.lle, "CSV largest Lyapunov exponent");
  gen->add_flag("--skip-header", ga.skip_header, "CSV has a header line");
  gen->add_option("--out", ga.out, "output dataset path")->required();

  TrainArgs ta;
  auto* trn = app.add_subcommand("train", "train one model");
  trn->add_option("--config", ta.config, "experiment config")->required();
  trn->add_option("--out", ta.out, "run directory (log.jsonl, model.ckpt)")->required();
  trn->add_option("--resume", ta.resume, "checkpoint to continue from");
  trn->add_option("--seed", ta.seed, "run seed (default: first of `seeds`)");
  trn->add_option("--max-epochs", ta.max_epochs, "override trainer.max_epochs");
  trn->add_option("--stop-after", ta.stop_after, "interrupt after this many epochs");
  trn->add_option("--threads", ta.threads, "OpenMP threads (0: default)");

  EvalArgs ea;
  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on the test split");
  evl->add_option("--config", ea.config, "experiment config")->required();
  evl->add_option("--checkpoint", ea.checkpoint, "model checkpoint")->required();
  evl->add_option("--out", ea.out, "EvalReport JSON path")->required();
  evl->add_option("--horizon-lt", ea.horizon_lt, "horizon in Lyapunov times");
  evl->add_flag("--last", ea.last, "use the last instead of the best parameters");

  SweepArgs sa;
  auto* swp = app.add_subcommand("sweep", "train and evaluate a strategy grid");
  swp->add_option("--config", sa.config, "base experiment config")->required();
  swp->add_option("--out", sa.out, "results directory")->required();
  swp->add_option("--preset", sa.preset, "essential, exploratory or config")->capture_default_str();
  swp->add_option("--strategies", sa.strategies, "comma-separated strategies")->required();
  swp->add_option("--scale", sa.scale, "factor applied to curriculum lengths")->capture_default_str();
  swp->add_option("--seeds", sa.seeds, "comma-separated seeds overriding the config");
  swp->add_option("--workers", sa.workers, "concurrent cells (default: TFCL_WORKERS or cores)");

  std::string report_dir;
  auto* rpt = app.add_subcommand("report", "render Markdown and CSV tables of a sweep");
  rpt->add_option("--dir", report_dir, "sweep directory")->required();

  LleArgs la;
  auto* lle = app.add_subcommand("lle", "estimate the largest Lyapunov exponent");
  lle->add_option("--system", la.system, "system preset (or decay)")->required();
  lle->add_option("--param", la.params, "parameter override NAME=VALUE (repeatable)");
  lle->add_option("--steps", la.steps, "sampled steps")->capture_default_str();
  lle->add_option("--transient", la.transient, "discarded steps")->capture_default_str();
  lle->add_option("--renorm", la.renorm, "steps between renormalizations")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kUsage;
  }

  try {
    if (*gen) return cmd_gen(ga, out);
    if (*trn) return cmd_train(ta, out);
    if (*evl) return cmd_eval(ea, out);
    if (*swp) return cmd_sweep(sa, out);
    if (*rpt) return cmd_report(report_dir, out);
    if (*lle) return cmd_lle(la, out);
  } catch (const InvalidInput& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const UndefinedMetric& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << " (step " << e.step() << ")\n";
    return kDivergence;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kIo;
  }
  return kUsage;
}

}  // namespace tfcl::cli
