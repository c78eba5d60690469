// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include "tfcl/curriculum.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "tfcl/error.hpp"

namespace tfcl::curriculum {
namespace {

std::string normalize_name(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  return out;
}

bool is_increasing(Strategy s) { return s == Strategy::CL_ITF_P || s == Strategy::CL_ITF_D; }
bool is_decreasing(Strategy s) { return s == Strategy::CL_DTF_P || s == Strategy::CL_DTF_D; }

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::FR: return "FR";
    case Strategy::TF: return "TF";
    case Strategy::CL_CTF_P: return "CL_CTF_P";
    case Strategy::CL_DTF_P: return "CL_DTF_P";
    case Strategy::CL_DTF_D: return "CL_DTF_D";
    case Strategy::CL_ITF_P: return "CL_ITF_P";
    case Strategy::CL_ITF_D: return "CL_ITF_D";
    case Strategy::STF: return "STF";
  }
  return "?";
}

std::string_view to_string(Transition t) {
  switch (t) {
    case Transition::linear: return "linear";
    case Transition::inverse_sigmoid: return "inverse_sigmoid";
    case Transition::exponential: return "exponential";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  const std::string n = normalize_name(name);
  for (auto s : {Strategy::FR, Strategy::TF, Strategy::CL_CTF_P, Strategy::CL_DTF_P, Strategy::CL_DTF_D,
                 Strategy::CL_ITF_P, Strategy::CL_ITF_D, Strategy::STF})
    if (n == to_string(s)) return s;
  throw InvalidInput("unknown strategy '" + std::string(name) +
                     "' (expected FR, TF, CL_CTF_P, CL_DTF_P, CL_DTF_D, CL_ITF_P, CL_ITF_D or STF)");
}

Transition parse_transition(std::string_view name) {
  const std::string n = normalize_name(name);
  if (n == "LINEAR") return Transition::linear;
  if (n == "INVERSE_SIGMOID" || n == "INVSIG") return Transition::inverse_sigmoid;
  if (n == "EXPONENTIAL" || n == "EXP") return Transition::exponential;
  throw InvalidInput("unknown transition '" + std::string(name) + "' (expected linear, inverse_sigmoid, exponential)");
}

Mode mode_of(Strategy s) {
  switch (s) {
    case Strategy::FR:
    case Strategy::TF: return Mode::constant;
    case Strategy::CL_CTF_P:
    case Strategy::CL_DTF_P:
    case Strategy::CL_ITF_P: return Mode::probabilistic;
    case Strategy::CL_DTF_D:
    case Strategy::CL_ITF_D: return Mode::deterministic;
    case Strategy::STF: return Mode::sparse;
  }
  return Mode::constant;
}

bool is_baseline(Strategy s) { return s == Strategy::FR || s == Strategy::TF; }

double inverse_sigmoid_k(std::size_t length) {
  // Solve k / (k + exp(L/k)) = 0.01, i.e. 99 k = exp(L/k); the left side
  // minus the right is increasing in k.
  const double L = static_cast<double>(length);
  auto f = [L](double k) { return 99.0 * k - std::exp(L / k); };
  double lo = 1.0, hi = std::max(2.0, L + 100.0);
  if (f(lo) >= 0.0) return 1.0;
  while (f(hi) < 0.0) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double exponential_k(std::size_t length) { return std::pow(0.01, 1.0 / static_cast<double>(length)); }

Curriculum::Curriculum(const CurriculumConfig& cfg) : cfg_(cfg) {
  auto in_unit = [](double e) { return e >= 0.0 && e <= 1.0; };
  const Strategy s = cfg.strategy;
  if (s == Strategy::CL_CTF_P && !in_unit(cfg.epsilon_const))
    throw InvalidInput("curriculum: epsilon must lie in [0, 1]");
  if (s == Strategy::STF && cfg.stf_tau < 1) throw InvalidInput("curriculum: STF period must be >= 1");
  if (!is_increasing(s) && !is_decreasing(s)) return;

  if (!in_unit(cfg.eps_start) || !in_unit(cfg.eps_end))
    throw InvalidInput("curriculum: eps_start and eps_end must lie in [0, 1]");
  if (is_increasing(s) && !(cfg.eps_start < cfg.eps_end))
    throw InvalidInput("curriculum: increasing strategies need eps_start < eps_end");
  if (is_decreasing(s) && !(cfg.eps_start > cfg.eps_end))
    throw InvalidInput("curriculum: decreasing strategies need eps_start > eps_end");
  if (cfg.length < 1) throw InvalidInput("curriculum: length must be >= 1");
  const double L = static_cast<double>(cfg.length);
  if (cfg.transition == Transition::linear && is_decreasing(s) && !(cfg.eps_end < (L - 1.0) / L))
    throw InvalidInput("curriculum: linear decreasing needs eps_end < (length - 1) / length");

  switch (cfg.transition) {
    case Transition::linear:
      break;
    case Transition::inverse_sigmoid:
      k_ = cfg.k.value_or(inverse_sigmoid_k(cfg.length));
      if (!(k_ >= 1.0)) throw InvalidInput("curriculum: inverse sigmoid needs k >= 1");
      break;
    case Transition::exponential:
      k_ = cfg.k.value_or(exponential_k(cfg.length));
      if (!(k_ > 0.0 && k_ < 1.0)) throw InvalidInput("curriculum: exponential needs 0 < k < 1");
      break;
  }
}

double Curriculum::decreasing(double start, double end, double i) const {
  switch (cfg_.transition) {
    case Transition::linear:
      return std::max(end, end + (start - end) * (1.0 - i / static_cast<double>(cfg_.length)));
    case Transition::inverse_sigmoid:
      return end + (start - end) * (k_ / (k_ + std::exp(i / k_)));
    case Transition::exponential:
      return end + (start - end) * std::pow(k_, i);
  }
  return end;
}

double Curriculum::eval_epsilon(std::size_t epoch) const {
  const double i = static_cast<double>(epoch);
  switch (cfg_.strategy) {
    case Strategy::FR: return 0.0;
    case Strategy::TF: return 1.0;
    case Strategy::CL_CTF_P: return cfg_.epsilon_const;
    case Strategy::STF: return 1.0 / static_cast<double>(cfg_.stf_tau);
    case Strategy::CL_DTF_P:
    case Strategy::CL_DTF_D: return decreasing(cfg_.eps_start, cfg_.eps_end, i);
    case Strategy::CL_ITF_P:
    case Strategy::CL_ITF_D:
      // Mirror image of the decreasing shape with swapped endpoints.
      return cfg_.eps_start + cfg_.eps_end - decreasing(cfg_.eps_end, cfg_.eps_start, i);
  }
  return 0.0;
}

nn::TFMask Curriculum::build_mask(double epsilon, std::size_t m, Rng& rng) const {
  return curriculum::build_mask(*this, epsilon, m, rng);
}

bool draw_decision_probabilistic(double epsilon, Rng& rng) { return bernoulli(rng, epsilon); }

bool decision_deterministic(double epsilon, std::size_t j, std::size_t m) {
  if (j < 1 || j > m) throw InvalidInput("decision position must satisfy 1 <= j <= m");
  return epsilon >= static_cast<double>(j) / static_cast<double>(m);
}

std::size_t stf_tau(double lle, double dt) {
  if (!(lle > 0.0) || !(dt > 0.0)) throw InvalidInput("stf_tau needs lle > 0 and dt > 0");
  const double tau = std::floor(std::numbers::ln2 / (lle * dt) + 0.5);
  return tau < 1.0 ? 1 : static_cast<std::size_t>(tau);
}

nn::TFMask build_mask(const Curriculum& c, double epsilon, std::size_t m, Rng& rng) {
  if (m < 1) throw InvalidInput("build_mask: m must be >= 1");
  nn::TFMask mask(m - 1, 0);
  // mask[j - 2] is the decision for decoder step j.
  switch (c.mode()) {
    case Mode::constant:
      std::fill(mask.begin(), mask.end(), epsilon >= 1.0 ? 1 : 0);
      break;
    case Mode::probabilistic:
      for (auto& v : mask) v = draw_decision_probabilistic(epsilon, rng);
      break;
    case Mode::deterministic:
      for (std::size_t j = 2; j <= m; ++j) mask[j - 2] = decision_deterministic(epsilon, j, m);
      break;
    case Mode::sparse: {
      const std::size_t tau = c.config().stf_tau;
      for (std::size_t j = 2; j <= m; ++j) mask[j - 2] = j % tau == 0;
      break;
    }
  }
  return mask;
}

double prob_at_least_one_tf(double epsilon, std::size_t m) {
  if (epsilon < 0.0 || epsilon > 1.0) throw InvalidInput("epsilon must lie in [0, 1]");
  if (epsilon == 1.0) return m > 0 ? 1.0 : 0.0;
  return -std::expm1(static_cast<double>(m) * std::log1p(-epsilon));
}

}  // namespace tfcl::curriculum
