// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include "tfcl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "tfcl/error.hpp"

namespace tfcl::config {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end || !std::isfinite(out)) throw InvalidInput("expected a number, got '" + v + "'");
  return out;
}

std::uint64_t to_u64(const std::string& v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  const auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw InvalidInput("expected a non-negative integer, got '" + v + "'");
  return out;
}

std::size_t to_size(const std::string& v) { return static_cast<std::size_t>(to_u64(v)); }

bool to_bool(const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidInput("expected true or false, got '" + v + "'");
}

template <class T>
std::vector<T> to_list(const std::string& v, T (*conv)(const std::string&)) {
  std::vector<T> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(conv(trim(item)));
  return out;
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string fmt(std::uint64_t v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

template <class T>
std::string fmt_list(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + fmt(static_cast<std::uint64_t>(v[i]));
  return out;
}

std::string_view to_string(data::Context c) { return c == data::Context::lookback ? "lookback" : "within_split"; }

data::Context to_context(const std::string& v) {
  if (v == "within_split") return data::Context::within_split;
  if (v == "lookback") return data::Context::lookback;
  throw InvalidInput("expected within_split or lookback, got '" + v + "'");
}

struct Field {
  std::string key;
  std::string doc;
  bool hashed = true;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define TFCL_FIELD(KEY, DOC, MEMBER, PARSE) \
  Field { KEY, DOC, true, [](ExperimentConfig& c, const std::string& v) { c.MEMBER = PARSE(v); }, \
          [](const ExperimentConfig& c) { return fmt(c.MEMBER); } }

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    v.push_back({"data.path", "dataset file (.ds binary or .csv); empty to generate from data.system", true,
                 [](ExperimentConfig& c, const std::string& s) { c.data.path = s; },
                 [](const ExperimentConfig& c) { return c.data.path; }});
    v.push_back({"data.system", "system preset generated when data.path is empty", true,
                 [](ExperimentConfig& c, const std::string& s) { c.data.system = s; },
                 [](const ExperimentConfig& c) { return c.data.system; }});
    v.push_back(Field{"data.samples", "samples generated after the transient", true,
                      [](ExperimentConfig& c, const std::string& s) { c.data.samples = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.data.samples}); }});
    v.push_back(TFCL_FIELD("data.seed", "initial-state perturbation seed", data.seed, to_u64));
    v.push_back(Field{"data.transient", "discarded integration steps", true,
                      [](ExperimentConfig& c, const std::string& s) { c.data.transient = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.data.transient}); }});
    v.push_back(Field{"data.substeps", "RK4 substeps per sample", true,
                      [](ExperimentConfig& c, const std::string& s) { c.data.substeps = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.data.substeps}); }});
    v.push_back({"data.columns", "CSV: comma-separated column indices (empty: all)", true,
                 [](ExperimentConfig& c, const std::string& s) { c.data.columns = to_list<std::size_t>(s, to_size); },
                 [](const ExperimentConfig& c) { return fmt_list(c.data.columns); }});
    v.push_back(TFCL_FIELD("data.dt", "CSV: sampling interval", data.dt, to_double));
    v.push_back({"data.lle", "CSV: largest Lyapunov exponent, or none", true,
                 [](ExperimentConfig& c, const std::string& s) {
                   c.data.lle = s == "none" ? std::nullopt : std::optional<double>(to_double(s));
                 },
                 [](const ExperimentConfig& c) { return c.data.lle ? fmt(*c.data.lle) : std::string("none"); }});
    v.push_back(TFCL_FIELD("data.skip_header", "CSV: skip the first line", data.skip_header, to_bool));

    v.push_back({"model.cell", "gru, rnn or lstm", true,
                 [](ExperimentConfig& c, const std::string& s) { c.model.cell = nn::parse_cell_kind(s); },
                 [](const ExperimentConfig& c) { return std::string(nn::to_string(c.model.cell)); }});
    v.push_back(Field{"model.hidden", "hidden units per layer", true,
                      [](ExperimentConfig& c, const std::string& s) { c.model.hidden = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.model.hidden}); }});
    v.push_back(Field{"model.layers", "stacked layers in encoder and decoder", true,
                      [](ExperimentConfig& c, const std::string& s) { c.model.layers = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.model.layers}); }});

    auto size_field = [&v](std::string key, std::string doc, std::size_t train::TrainerConfig::*member,
                           bool hashed = true) {
      v.push_back(Field{std::move(key), std::move(doc), hashed,
                        [member](ExperimentConfig& c, const std::string& s) { c.trainer.*member = to_size(s); },
                        [member](const ExperimentConfig& c) { return fmt(std::uint64_t{c.trainer.*member}); }});
    };
    auto real_field = [&v](std::string key, std::string doc, double train::TrainerConfig::*member) {
      v.push_back(Field{std::move(key), std::move(doc), true,
                        [member](ExperimentConfig& c, const std::string& s) { c.trainer.*member = to_double(s); },
                        [member](const ExperimentConfig& c) { return fmt(c.trainer.*member); }});
    };
    auto bool_field = [&v](std::string key, std::string doc, bool train::TrainerConfig::*member,
                           bool hashed = true) {
      v.push_back(Field{std::move(key), std::move(doc), hashed,
                        [member](ExperimentConfig& c, const std::string& s) { c.trainer.*member = to_bool(s); },
                        [member](const ExperimentConfig& c) { return fmt(c.trainer.*member); }});
    };
    size_field("trainer.batch_size", "sequences per batch", &train::TrainerConfig::batch_size);
    real_field("trainer.lr0", "initial learning rate", &train::TrainerConfig::lr0);
    size_field("trainer.plateau_patience", "epochs without improvement before the rate drops",
               &train::TrainerConfig::plateau_patience);
    real_field("trainer.lr_factor", "learning-rate reduction factor", &train::TrainerConfig::lr_factor);
    real_field("trainer.min_lr", "learning-rate floor", &train::TrainerConfig::min_lr);
    size_field("trainer.es_patience", "early-stopping patience in epochs", &train::TrainerConfig::es_patience);
    real_field("trainer.es_min_improvement", "relative improvement that resets early stopping",
               &train::TrainerConfig::es_min_improvement);
    size_field("trainer.max_epochs", "epoch limit", &train::TrainerConfig::max_epochs);
    bool_field("trainer.detach_feedback", "no gradient through fed-back predictions",
               &train::TrainerConfig::detach_feedback);
    bool_field("trainer.scheduler_enabled", "reduce the learning rate on plateaus",
               &train::TrainerConfig::scheduler_enabled);
    bool_field("trainer.log_timing", "write wall-clock seconds to the log", &train::TrainerConfig::log_timing, false);
    size_field("trainer.n", "encoder input length", &train::TrainerConfig::n);
    v.push_back(Field{"trainer.m", "decoder output length; 0 derives one Lyapunov time", true,
                      [](ExperimentConfig& c, const std::string& s) {
                        const auto m = to_size(s);
                        c.trainer.m = m == 0 ? std::nullopt : std::optional<std::size_t>(m);
                      },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.trainer.m.value_or(0)}); }});
    size_field("trainer.train_stride", "offset between training windows", &train::TrainerConfig::train_stride);
    size_field("trainer.val_stride", "offset between validation windows", &train::TrainerConfig::val_stride);
    v.push_back({"trainer.val_context", "within_split or lookback", true,
                 [](ExperimentConfig& c, const std::string& s) { c.trainer.val_context = to_context(s); },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.trainer.val_context)); }});
    size_field("trainer.shard_size", "sequences per parallel work item", &train::TrainerConfig::shard_size, false);
    bool_field("trainer.parallel", "use the OpenMP kernels", &train::TrainerConfig::parallel, false);
    size_field("trainer.checkpoint_every", "epochs between checkpoints (0: only at the end)",
               &train::TrainerConfig::checkpoint_every, false);

    v.push_back({"curriculum.strategy", "FR, TF, CL_CTF_P, CL_DTF_P, CL_DTF_D, CL_ITF_P, CL_ITF_D or STF", true,
                 [](ExperimentConfig& c, const std::string& s) { c.curriculum.strategy = curriculum::parse_strategy(s); },
                 [](const ExperimentConfig& c) { return std::string(curriculum::to_string(c.curriculum.strategy)); }});
    v.push_back({"curriculum.transition", "linear, inverse_sigmoid or exponential", true,
                 [](ExperimentConfig& c, const std::string& s) {
                   c.curriculum.transition = curriculum::parse_transition(s);
                 },
                 [](const ExperimentConfig& c) { return std::string(curriculum::to_string(c.curriculum.transition)); }});
    v.push_back(TFCL_FIELD("curriculum.eps_start", "initial TF ratio", curriculum.eps_start, to_double));
    v.push_back(TFCL_FIELD("curriculum.eps_end", "final TF ratio", curriculum.eps_end, to_double));
    v.push_back(Field{"curriculum.length", "transition length in epochs", true,
                      [](ExperimentConfig& c, const std::string& s) { c.curriculum.length = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.curriculum.length}); }});
    v.push_back(TFCL_FIELD("curriculum.epsilon", "constant TF ratio (CL_CTF_P)", curriculum.epsilon_const, to_double));
    v.push_back(Field{"curriculum.stf_tau", "STF period in steps; 0 derives it from the LLE", true,
                      [](ExperimentConfig& c, const std::string& s) { c.curriculum.stf_tau = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.curriculum.stf_tau}); }});
    v.push_back({"curriculum.k", "transition shape parameter, or none to derive it from the length", true,
                 [](ExperimentConfig& c, const std::string& s) {
                   c.curriculum.k = s == "none" ? std::nullopt : std::optional<double>(to_double(s));
                 },
                 [](const ExperimentConfig& c) { return c.curriculum.k ? fmt(*c.curriculum.k) : std::string("none"); }});

    v.push_back(TFCL_FIELD("eval.horizon_lt", "evaluation horizon in Lyapunov times", eval.horizon_lt, to_double));
    v.push_back(Field{"eval.horizon_steps", "evaluation horizon in steps; overrides eval.horizon_lt", true,
                      [](ExperimentConfig& c, const std::string& s) { c.eval.horizon_steps = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.eval.horizon_steps}); }});
    v.push_back(TFCL_FIELD("eval.threshold", "R^2 threshold of the Lyapunov-time horizon", eval.threshold, to_double));
    v.push_back(Field{"eval.stride", "offset between test windows; 0 for non-overlapping", true,
                      [](ExperimentConfig& c, const std::string& s) { c.eval.stride = to_size(s); },
                      [](const ExperimentConfig& c) { return fmt(std::uint64_t{c.eval.stride}); }});
    v.push_back({"eval.context", "within_split or lookback", true,
                 [](ExperimentConfig& c, const std::string& s) { c.eval.context = to_context(s); },
                 [](const ExperimentConfig& c) { return std::string(to_string(c.eval.context)); }});

    v.push_back({"seeds", "comma-separated run seeds", true,
                 [](ExperimentConfig& c, const std::string& s) { c.seeds = to_list<std::uint64_t>(s, to_u64); },
                 [](const ExperimentConfig& c) { return fmt_list(c.seeds); }});
    return v;
  }();
  return f;
}

#undef TFCL_FIELD

constexpr std::string_view kParamPrefix = "system.params.";

const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (f.key == key) return &f;
  return nullptr;
}

std::string canonical(const ExperimentConfig& cfg, bool hashed_only) {
  std::map<std::string, std::string> kv;
  for (const auto& f : fields())
    if (f.hashed || !hashed_only) kv[f.key] = f.get(cfg);
  for (const auto& [k, v] : cfg.data.params) kv[std::string(kParamPrefix) + k] = fmt(v);
  std::string out;
  for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
  return out;
}

}  // namespace

const std::vector<std::string>& preset_config_names() {
  static const std::vector<std::string> names{"paper", "desk"};
  return names;
}

ExperimentConfig preset_config(std::string_view name) {
  ExperimentConfig c;
  c.data.system = "lorenz";
  if (name == "paper") {
    c.model.hidden = 256;
    c.trainer.n = 150;
    c.trainer.max_epochs = 100000;
    return c;
  }
  if (name == "desk") {
    c.data.system = "thomas";
    c.data.samples = 2000;
    c.model.hidden = 64;
    c.trainer.n = 50;
    c.trainer.max_epochs = 300;
    c.trainer.train_stride = 5;
    // About 275 training windows: small batches give enough Adam steps, and
    // the plateau scheduler and early stopping would otherwise end curricula
    // before they reach full teacher forcing.
    c.trainer.batch_size = 32;
    c.trainer.scheduler_enabled = false;
    c.trainer.es_patience = 300;
    c.trainer.val_context = data::Context::lookback;
    c.eval.stride = 1;
    c.eval.context = data::Context::lookback;
    c.curriculum.length = 100;
    c.seeds = {1, 2, 3};
    return c;
  }
  throw InvalidInput("unknown config preset '" + std::string(name) + "' (expected paper or desk)");
}

void ExperimentConfig::validate() const {
  if (data.path.empty() && data.system.empty()) throw InvalidInput("config: set data.path or data.system");
  if (!data.path.empty() && !data.system.empty()) throw InvalidInput("config: data.path and data.system are exclusive");
  if (!data.system.empty()) {
    auto spec = dynsys::preset(data.system);
    for (const auto& [k, v] : data.params) dynsys::set_param(spec, k, v);
    dynsys::validate(spec);
  }
  if (!data.path.empty()) {
    const auto p = resolve_data_path(*this);
    if (!std::filesystem::exists(p)) throw InvalidInput("config: dataset '" + p.string() + "' does not exist");
  }
  if (model.hidden < 1 || model.layers < 1) throw InvalidInput("config: model.hidden and model.layers must be >= 1");
  trainer.validate();
  auto cc = curriculum;
  if (cc.strategy == curriculum::Strategy::STF && cc.stf_tau == 0) cc.stf_tau = 1;
  curriculum::Curriculum{cc};
  if (!(eval.horizon_lt > 0.0)) throw InvalidInput("config: eval.horizon_lt must be > 0");
  if (!(eval.threshold <= 1.0)) throw InvalidInput("config: eval.threshold must be <= 1");
  if (seeds.empty()) throw InvalidInput("config: seeds must not be empty");
}

ExperimentConfig parse_config(std::string_view text, const std::string& origin) {
  struct Line {
    std::size_t no;
    std::string key, value;
  };
  std::vector<Line> lines;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t no = 0;
  std::set<std::string> seen;
  std::string preset;
  while (std::getline(in, raw)) {
    ++no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    const std::string where = origin + ":" + std::to_string(no) + ": ";
    if (eq == std::string::npos) throw InvalidInput(where + "expected 'key = value'");
    Line l{no, trim(line.substr(0, eq)), trim(line.substr(eq + 1))};
    if (!seen.insert(l.key).second) throw InvalidInput(where + "duplicate key '" + l.key + "'");
    if (l.key == "preset")
      preset = l.value;
    else
      lines.push_back(std::move(l));
  }
  ExperimentConfig cfg = preset.empty() ? ExperimentConfig{} : preset_config(preset);
  // A dataset file replaces the preset's generated system.
  if (std::any_of(lines.begin(), lines.end(), [](const Line& l) { return l.key == "data.path"; }))
    cfg.data.system.clear();
  for (const auto& l : lines) {
    const std::string where = origin + ":" + std::to_string(l.no) + ": ";
    try {
      if (l.key.starts_with(kParamPrefix)) {
        const auto name = l.key.substr(kParamPrefix.size());
        if (name.empty()) throw InvalidInput("empty parameter name");
        cfg.data.params[name] = to_double(l.value);
      } else if (const auto* f = find_field(l.key)) {
        f->set(cfg, l.value);
      } else {
        throw InvalidInput("unknown key '" + l.key + "'");
      }
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  auto cfg = parse_config(ss.str(), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

std::string to_text(const ExperimentConfig& cfg) { return canonical(cfg, false); }

std::string config_hash(const ExperimentConfig& cfg) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical(cfg, true)) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string schema_text() {
  std::string out;
  for (const auto& f : fields()) out += f.key + "  " + f.doc + "\n";
  out += "system.params.NAME  override of a system parameter (e.g. system.params.b)\n";
  out += "preset  paper or desk; other keys override it\n";
  return out;
}

std::filesystem::path resolve_data_path(const ExperimentConfig& cfg) {
  std::filesystem::path p(cfg.data.path);
  if (p.is_relative() && !cfg.base_dir.empty()) p = cfg.base_dir / p;
  return p;
}

data::Dataset load_data(const ExperimentConfig& cfg) {
  if (!cfg.data.path.empty()) {
    const auto p = resolve_data_path(cfg);
    if (p.extension() == ".csv") {
      data::CsvOptions o;
      o.columns = cfg.data.columns;
      o.dt = cfg.data.dt;
      o.lle = cfg.data.lle;
      o.skip_header = cfg.data.skip_header;
      return data::load_external_csv(p, o);
    }
    return data::load_dataset(p);
  }
  auto spec = dynsys::preset(cfg.data.system);
  for (const auto& [k, v] : cfg.data.params) dynsys::set_param(spec, k, v);
  data::GenerateOptions o;
  o.transient = cfg.data.transient;
  o.substeps = cfg.data.substeps;
  return data::generate_dataset(spec, cfg.data.samples, cfg.data.seed, o);
}

std::size_t eval_horizon(const ExperimentConfig& cfg, const data::Dataset& ds) {
  if (cfg.eval.horizon_steps > 0) return cfg.eval.horizon_steps;
  if (!ds.lle) throw InvalidInput("eval: dataset has no LLE; set eval.horizon_steps");
  const double m = static_cast<double>(data::prediction_length(ds.dt, *ds.lle));
  return static_cast<std::size_t>(std::llround(cfg.eval.horizon_lt * m));
}

}  // namespace tfcl::config
