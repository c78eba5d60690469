// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Teacher-forcing curricula. The training-scale schedule gives the TF ratio
// epsilon for each epoch; the iteration-scale rule turns epsilon into one
// decision per decoder step.

#include <cstddef>
#include <optional>
#include <string_view>

#include "tfcl/nn.hpp"
#include "tfcl/random.hpp"

namespace tfcl::curriculum {

enum class Strategy { FR, TF, CL_CTF_P, CL_DTF_P, CL_DTF_D, CL_ITF_P, CL_ITF_D, STF };
enum class Transition { linear, inverse_sigmoid, exponential };
enum class Mode { constant, probabilistic, deterministic, sparse };

std::string_view to_string(Strategy s);
std::string_view to_string(Transition t);
// Accepts both CL_ITF_P and CL-ITF-P spellings.
Strategy parse_strategy(std::string_view name);
Transition parse_transition(std::string_view name);

Mode mode_of(Strategy s);
bool is_baseline(Strategy s);

struct CurriculumConfig {
  Strategy strategy = Strategy::TF;
  Transition transition = Transition::linear;
  double eps_start = 0.0;
  double eps_end = 1.0;
  std::size_t length = 1000;  // curriculum length in epochs
  double epsilon_const = 0.5; // CL_CTF_P only
  std::size_t stf_tau = 1;    // STF only
  std::optional<double> k;    // shape override; derived from length otherwise
};

// Validated curriculum with its shape parameter resolved.
class Curriculum {
 public:
  explicit Curriculum(const CurriculumConfig& cfg);

  const CurriculumConfig& config() const { return cfg_; }
  Mode mode() const { return mode_of(cfg_.strategy); }
  double k() const { return k_; }

  double eval_epsilon(std::size_t epoch) const;

  // Decisions for decoder steps j = 2..m of one sequence.
  nn::TFMask build_mask(double epsilon, std::size_t m, Rng& rng) const;

 private:
  double decreasing(double start, double end, double i) const;

  CurriculumConfig cfg_;
  double k_ = 0.0;
};

// k such that the inverse sigmoid is within 1% of the span from its end value
// after `length` epochs.
double inverse_sigmoid_k(std::size_t length);
// k = 0.01^(1/length).
double exponential_k(std::size_t length);

bool draw_decision_probabilistic(double epsilon, Rng& rng);
// True iff epsilon >= j/m, 1 <= j <= m.
bool decision_deterministic(double epsilon, std::size_t j, std::size_t m);

// round(ln 2 / (lle * dt)), at least 1.
std::size_t stf_tau(double lle, double dt);

nn::TFMask build_mask(const Curriculum& c, double epsilon, std::size_t m, Rng& rng);

// Probability that a sequence with m probabilistic decisions contains at
// least one teacher-forced step: 1 - (1 - eps)^m.
double prob_at_least_one_tf(double epsilon, std::size_t m);

}  // namespace tfcl::curriculum
