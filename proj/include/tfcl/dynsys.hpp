// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Chaotic benchmark systems, fixed-step integrators and a Benettin estimator
// for the largest Lyapunov exponent.

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tfcl/series.hpp"

namespace tfcl::dynsys {

enum class Kind { ode, dde };

enum class Model {
  lorenz,
  lorenz96,
  thomas,
  roessler,
  hyper_roessler,
  mackey_glass,
  decay,  // dx/dt = -rate * x, used to validate the numerics
};

struct SystemSpec {
  std::string name;
  Model model = Model::lorenz;
  Kind kind = Kind::ode;
  std::size_t dim = 0;
  std::map<std::string, double> params;
  double dt = 0.0;
  // Published largest Lyapunov exponent. Absent for non-chaotic presets.
  std::optional<double> lle;
  // Default initial state (ODE) or constant history (DDE).
  std::vector<double> x0;

  double param(const std::string& key) const;
};

struct Trajectory {
  Series values;  // steps x dim, sampled every dt, initial state excluded
  double dt = 0.0;
  std::size_t t0_skipped = 0;
};

// The seven presets addressable from the command line.
const std::vector<std::string>& preset_names();

// Throws InvalidInput listing all presets when the name is unknown.
SystemSpec preset(std::string_view name);

// Linear contraction dx/dt = -rate x in one dimension; not a benchmark system.
SystemSpec decay_system(double dt = 1.0, double rate = 1.0);

// Overrides a named parameter. Unknown keys throw InvalidInput. For
// Lorenz'96 the key "dim" resizes the system.
void set_param(SystemSpec& spec, const std::string& key, double value);

void validate(const SystemSpec& spec);

std::vector<double> eval_derivative(const SystemSpec& spec, std::span<const double> state,
                                    std::optional<std::span<const double>> delayed = std::nullopt);

Trajectory integrate_ode(const SystemSpec& spec, std::span<const double> x0, std::size_t n_steps,
                         std::size_t substeps = 10);

// Method of steps with RK4. Delayed values come from cubic Hermite
// interpolation over a ring buffer of past grid points.
Trajectory integrate_dde(const SystemSpec& spec, std::span<const double> history,
                         std::size_t n_steps, std::size_t substeps = 10);

// Dispatches on spec.kind.
Trajectory integrate(const SystemSpec& spec, std::span<const double> x0, std::size_t n_steps,
                     std::size_t substeps = 10);

struct LleOptions {
  std::size_t renorm_interval = 10;   // sampled steps between renormalizations
  std::size_t total_steps = 100000;   // sampled steps after the transient
  std::size_t transient_steps = 5000; // sampled steps discarded first
  std::size_t substeps = 10;
  double initial_separation = 1e-8;
};

// Benettin two-trajectory estimate of the largest Lyapunov exponent, in
// 1/time units. ODE systems only.
double estimate_lle(const SystemSpec& spec, std::span<const double> x0, const LleOptions& opts = {});

}  // namespace tfcl::dynsys
