// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <map>
#include <optional>

#include "tfcl/error.hpp"
#include "tfcl/experiment.hpp"

namespace tfcl::experiment {
namespace {

struct CellResult {
  std::string strategy, label, stop_reason;
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double dt = 0.0;
  std::optional<double> lle;
  std::optional<metrics::EvalReport> eval;
  std::optional<double> nrmse_at_bl;
};

// All seeds of one curriculum setting.
struct Group {
  std::string strategy, label;
  std::vector<CellResult> runs;
  bool complete() const {
    return std::all_of(runs.begin(), runs.end(), [](const CellResult& r) { return r.eval.has_value(); });
  }
  double mean(double (*get)(const metrics::EvalReport&)) const {
    double s = 0.0;
    for (const auto& r : runs) s += get(*r.eval);
    return s / static_cast<double>(runs.size());
  }
  double nrmse() const { return mean([](const metrics::EvalReport& e) { return e.nrmse_mean_1lt; }); }
  double last10() const { return mean([](const metrics::EvalReport& e) { return e.nrmse_last10; }); }
  double epochs() const {
    double s = 0.0;
    for (const auto& r : runs) s += static_cast<double>(r.epochs);
    return s / static_cast<double>(runs.size());
  }
  std::optional<double> nrmse_at_bl() const {
    double s = 0.0;
    for (const auto& r : runs) {
      if (!r.nrmse_at_bl) return std::nullopt;
      s += *r.nrmse_at_bl;
    }
    return s / static_cast<double>(runs.size());
  }
  std::optional<double> lt_horizon() const {
    double s = 0.0;
    for (const auto& r : runs) {
      if (!r.eval->lt_r2_horizon) return std::nullopt;
      s += *r.eval->lt_r2_horizon;
    }
    return s / static_cast<double>(runs.size());
  }
};

CellResult parse_cell(const std::filesystem::path& file) {
  CellResult c;
  try {
    const auto j = nlohmann::json::parse(read_file(file));
    c.strategy = j.at("strategy").get<std::string>();
    c.label = j.at("label").get<std::string>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.epochs = j.at("epochs_trained").get<std::size_t>();
    c.stop_reason = j.at("stop_reason").get<std::string>();
    c.dt = j.at("dt").get<double>();
    if (!j.at("lle").is_null()) c.lle = j.at("lle").get<double>();
    if (!j.at("eval").is_null()) c.eval = metrics::eval_report_from_json(j.at("eval").dump());
    if (j.contains("eval_at_bl") && !j.at("eval_at_bl").is_null())
      c.nrmse_at_bl = j.at("eval_at_bl").at("nrmse_mean_1lt").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
  return c;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

bool is_baseline(const std::string& s) { return s == "FR" || s == "TF"; }

// Strategy display order.
int rank(const std::string& s) {
  static const std::vector<std::string> order{"FR", "TF", "CL_CTF_P", "CL_DTF_P", "CL_DTF_D", "CL_ITF_P", "CL_ITF_D", "STF"};
  const auto it = std::find(order.begin(), order.end(), s);
  return static_cast<int>(it - order.begin());
}

}  // namespace

Report build_report(const std::filesystem::path& sweep_dir) {
  if (!std::filesystem::is_directory(sweep_dir)) throw IoError("'" + sweep_dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(sweep_dir))
    if (e.is_directory() && std::filesystem::exists(e.path() / "result.json")) files.push_back(e.path() / "result.json");
  std::sort(files.begin(), files.end());

  std::map<std::pair<int, std::string>, Group> groups;
  for (const auto& f : files) {
    auto c = parse_cell(f);
    auto& g = groups[{rank(c.strategy), c.label}];
    g.strategy = c.strategy;
    g.label = c.label;
    g.runs.push_back(std::move(c));
  }
  for (auto& [k, g] : groups)
    std::sort(g.runs.begin(), g.runs.end(), [](const CellResult& a, const CellResult& b) { return a.seed < b.seed; });

  std::string meta_line;
  if (std::filesystem::exists(sweep_dir / "sweep.json")) {
    const auto j = nlohmann::json::parse(read_file(sweep_dir / "sweep.json"));
    meta_line = "config hash " + j.value("config_hash", std::string("?")) + ", tool version " +
                j.value("tool_version", std::string("?")) + ", preset " + j.value("preset", std::string("?"));
  }

  // Best setting per strategy by mean NRMSE over seeds.
  std::map<int, const Group*> best;
  for (const auto& [k, g] : groups) {
    if (!g.complete()) continue;
    auto& b = best[k.first];
    if (!b || g.nrmse() < b->nrmse()) b = &g;
  }
  const Group* best_baseline = nullptr;
  for (const auto& [r, g] : best)
    if (is_baseline(g->strategy) && (!best_baseline || g->nrmse() < best_baseline->nrmse())) best_baseline = g;

  auto row = [&](const Group& g, bool flag_column) {
    std::string s = "| " + g.strategy + " | " + g.label + " | ";
    if (!g.complete()) {
      std::size_t diverged = 0;
      for (const auto& r : g.runs) diverged += !r.eval.has_value();
      return s + fixed(g.epochs(), 1) + " | diverged (" + std::to_string(diverged) + " of " +
             std::to_string(g.runs.size()) + " seeds) |  |  |  |" + (flag_column ? "  |" : "") + "  |  |\n";
    }
    s += fixed(g.epochs(), 1) + " | " + fixed(g.nrmse(), 5) + " | ";
    if (best_baseline && !is_baseline(g.strategy))
      s += fixed(metrics::rel_improvement(best_baseline->nrmse(), g.nrmse()), 2);
    s += " | " + fixed(g.last10(), 5) + " | ";
    const auto lt = g.lt_horizon();
    s += (lt ? fixed(*lt, 3) : std::string("n/a")) + " | ";
    if (flag_column) s += std::string(&g == best_baseline ? "yes" : "") + " | ";
    std::string seeds;
    for (const auto& r : g.runs) seeds += (seeds.empty() ? "" : ", ") + fixed(r.eval->nrmse_mean_1lt, 5);
    const auto at_bl = g.nrmse_at_bl();
    return s + seeds + " | " + (at_bl ? fixed(*at_bl, 5) : std::string()) + " |\n";
  };

  Report rep;
  std::string& md = rep.markdown;
  md += "# Sweep report\n\n";
  if (!meta_line.empty()) md += meta_line + "\n\n";
  md += std::to_string(files.size()) + " finished runs in " + std::to_string(groups.size()) + " settings.\n\n";
  md += "## Best setting per strategy\n\n";
  md += "| strategy | setting | epochs | NRMSE | rel. impr. [%] | NRMSE last 10% | #LT R2>0.9 | best baseline | NRMSE per seed | NRMSE @BL epochs |\n";
  md += "|---|---|---:|---:|---:|---:|---:|---|---|---:|\n";
  for (const auto& [r, g] : best) md += row(*g, true);
  md += "\n## All settings\n\n";
  md += "| strategy | setting | epochs | NRMSE | rel. impr. [%] | NRMSE last 10% | #LT R2>0.9 | NRMSE per seed | NRMSE @BL epochs |\n";
  md += "|---|---|---:|---:|---:|---:|---:|---|---:|\n";
  for (const auto& [k, g] : groups) md += row(g, false);

  // Mean R^2 per step of each strategy's best setting.
  std::string& csv = rep.r2_csv;
  csv = "step,lt";
  std::size_t steps = 0;
  double unit = 0.0;
  for (const auto& [r, g] : best) {
    csv += "," + g->strategy;
    steps = std::max(steps, g->runs.front().eval->r2_curve.size());
    const auto& first = g->runs.front();
    if (first.lle) unit = first.dt * *first.lle;
  }
  csv += "\n";
  for (std::size_t t = 0; t < steps; ++t) {
    csv += std::to_string(t + 1) + "," + (unit > 0.0 ? fixed(static_cast<double>(t + 1) * unit, 6) : std::string());
    for (const auto& [r, g] : best) {
      double s = 0.0;
      bool ok = true;
      for (const auto& run : g->runs) {
        if (t >= run.eval->r2_curve.size()) {
          ok = false;
          break;
        }
        s += run.eval->r2_curve[t];
      }
      csv += "," + (ok ? fixed(s / static_cast<double>(g->runs.size()), 6) : std::string());
    }
    csv += "\n";
  }
  return rep;
}

}  // namespace tfcl::experiment
