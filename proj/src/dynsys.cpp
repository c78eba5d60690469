// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include "tfcl/dynsys.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tfcl/error.hpp"

namespace tfcl::dynsys {
namespace {

std::vector<double> lorenz96_x0(std::size_t dim, double forcing) {
  std::vector<double> x(dim, forcing);
  x[0] += 0.01;
  return x;
}

// Parameters resolved once per integration so the inner loop does no lookups.
struct Rhs {
  Model model;
  std::size_t dim;
  double p[4] = {0, 0, 0, 0};

  explicit Rhs(const SystemSpec& s) : model(s.model), dim(s.dim) {
    switch (model) {
      case Model::lorenz:
        p[0] = s.param("sigma"), p[1] = s.param("rho"), p[2] = s.param("beta");
        break;
      case Model::lorenz96:
        p[0] = s.param("F");
        break;
      case Model::thomas:
        p[0] = s.param("b");
        break;
      case Model::roessler:
        p[0] = s.param("a"), p[1] = s.param("b"), p[2] = s.param("c");
        break;
      case Model::hyper_roessler:
        p[0] = s.param("a"), p[1] = s.param("b"), p[2] = s.param("c"), p[3] = s.param("d");
        break;
      case Model::mackey_glass:
        p[0] = s.param("beta"), p[1] = s.param("gamma"), p[2] = s.param("n");
        break;
      case Model::decay:
        p[0] = s.param("rate");
        break;
    }
  }

  void operator()(const double* x, const double* xd, double* dx) const {
    switch (model) {
      case Model::lorenz:
        dx[0] = p[0] * (x[1] - x[0]);
        dx[1] = x[0] * (p[1] - x[2]) - x[1];
        dx[2] = x[0] * x[1] - p[2] * x[2];
        break;
      case Model::lorenz96: {
        const std::size_t d = dim;
        for (std::size_t k = 0; k < d; ++k) {
          const double xm2 = x[(k + d - 2) % d];
          const double xm1 = x[(k + d - 1) % d];
          const double xp1 = x[(k + 1) % d];
          dx[k] = (xp1 - xm2) * xm1 - x[k] + p[0];
        }
        break;
      }
      case Model::thomas:
        dx[0] = std::sin(x[1]) - p[0] * x[0];
        dx[1] = std::sin(x[2]) - p[0] * x[1];
        dx[2] = std::sin(x[0]) - p[0] * x[2];
        break;
      case Model::roessler:
        dx[0] = -(x[1] + x[2]);
        dx[1] = x[0] + p[0] * x[1];
        dx[2] = p[1] + x[2] * (x[0] - p[2]);
        break;
      case Model::hyper_roessler:
        dx[0] = -x[1] - x[2];
        dx[1] = x[0] + p[0] * x[1] + x[3];
        dx[2] = p[1] + x[0] * x[2];
        dx[3] = -p[2] * x[2] + p[3] * x[3];
        break;
      case Model::mackey_glass:
        dx[0] = p[0] * xd[0] / (1.0 + std::pow(xd[0], p[2])) - p[1] * x[0];
        break;
      case Model::decay:
        for (std::size_t k = 0; k < dim; ++k) dx[k] = -p[0] * x[k];
        break;
    }
  }
};

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

void check_dim(const SystemSpec& spec, std::size_t got, const char* what) {
  if (got != spec.dim) {
    std::ostringstream os;
    os << spec.name << ": " << what << " has length " << got << ", expected " << spec.dim;
    throw InvalidInput(os.str());
  }
}

// One sampled step (substeps RK4 steps of size dt/substeps) of an ODE.
class OdeStepper {
 public:
  OdeStepper(const SystemSpec& spec, std::size_t substeps)
      : rhs_(spec), d_(spec.dim), substeps_(substeps), h_(spec.dt / static_cast<double>(substeps)),
        k1_(d_), k2_(d_), k3_(d_), k4_(d_), tmp_(d_) {}

  void step(std::vector<double>& x) {
    for (std::size_t s = 0; s < substeps_; ++s) {
      rhs_(x.data(), nullptr, k1_.data());
      for (std::size_t i = 0; i < d_; ++i) tmp_[i] = x[i] + 0.5 * h_ * k1_[i];
      rhs_(tmp_.data(), nullptr, k2_.data());
      for (std::size_t i = 0; i < d_; ++i) tmp_[i] = x[i] + 0.5 * h_ * k2_[i];
      rhs_(tmp_.data(), nullptr, k3_.data());
      for (std::size_t i = 0; i < d_; ++i) tmp_[i] = x[i] + h_ * k3_[i];
      rhs_(tmp_.data(), nullptr, k4_.data());
      for (std::size_t i = 0; i < d_; ++i)
        x[i] += h_ / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
  }

 private:
  Rhs rhs_;
  std::size_t d_, substeps_;
  double h_;
  std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

}  // namespace

double SystemSpec::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw InvalidInput(name + ": missing parameter '" + key + "'");
  return it->second;
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {
      "lorenz", "lorenz96", "thomas", "thomas-periodic", "roessler", "hyperroessler", "mackey-glass"};
  return names;
}

SystemSpec preset(std::string_view name) {
  SystemSpec s;
  s.name = std::string(name);
  if (name == "lorenz") {
    s.model = Model::lorenz, s.dim = 3, s.dt = 0.01, s.lle = 0.905;
    s.params = {{"sigma", 10.0}, {"rho", 28.0}, {"beta", 8.0 / 3.0}};
    s.x0 = {1.0, 1.0, 1.0};
  } else if (name == "lorenz96") {
    s.model = Model::lorenz96, s.dim = 40, s.dt = 0.05, s.lle = 1.67;
    s.params = {{"F", 8.0}};
    s.x0 = lorenz96_x0(40, 8.0);
  } else if (name == "thomas" || name == "thomas-periodic") {
    s.model = Model::thomas, s.dim = 3, s.dt = 0.1;
    if (name == "thomas") {
      s.params = {{"b", 0.1}};
      s.lle = 0.055;
    } else {
      s.params = {{"b", 0.32899}};
    }
    s.x0 = {0.1, 0.0, -0.1};
  } else if (name == "roessler") {
    s.model = Model::roessler, s.dim = 3, s.dt = 0.12, s.lle = 0.069;
    s.params = {{"a", 0.2}, {"b", 0.2}, {"c", 5.7}};
    s.x0 = {1.0, 1.0, 1.0};
  } else if (name == "hyperroessler") {
    s.model = Model::hyper_roessler, s.dim = 4, s.dt = 0.1, s.lle = 0.14;
    s.params = {{"a", 0.25}, {"b", 3.0}, {"c", 0.5}, {"d", 0.05}};
    s.x0 = {-10.0, -6.0, 0.0, 10.1};
  } else if (name == "mackey-glass") {
    s.model = Model::mackey_glass, s.kind = Kind::dde, s.dim = 1, s.dt = 1.0, s.lle = 0.006;
    s.params = {{"beta", 0.2}, {"gamma", 0.1}, {"n", 10.0}, {"tau", 17.0}};
    s.x0 = {1.2};
  } else {
    std::ostringstream os;
    os << "unknown system '" << name << "'; available presets:";
    for (const auto& n : preset_names()) os << ' ' << n;
    throw InvalidInput(os.str());
  }
  return s;
}

SystemSpec decay_system(double dt, double rate) {
  SystemSpec s;
  s.name = "decay";
  s.model = Model::decay;
  s.dim = 1;
  s.dt = dt;
  s.params = {{"rate", rate}};
  s.x0 = {1.0};
  return s;
}

void set_param(SystemSpec& spec, const std::string& key, double value) {
  if (spec.model == Model::lorenz96 && key == "dim") {
    if (value < 4 || value != std::floor(value))
      throw InvalidInput("lorenz96: dim must be an integer >= 4");
    spec.dim = static_cast<std::size_t>(value);
    spec.x0 = lorenz96_x0(spec.dim, spec.param("F"));
    return;
  }
  auto it = spec.params.find(key);
  if (it == spec.params.end()) throw InvalidInput(spec.name + ": unknown parameter '" + key + "'");
  it->second = value;
  if (spec.model == Model::lorenz96 && key == "F") spec.x0 = lorenz96_x0(spec.dim, value);
}

void validate(const SystemSpec& spec) {
  if (spec.dim < 1) throw InvalidInput(spec.name + ": dimension must be >= 1");
  if (!(spec.dt > 0.0)) throw InvalidInput(spec.name + ": dt must be > 0");
  check_dim(spec, spec.x0.size(), "initial state");
  if (spec.kind == Kind::dde) {
    if (spec.model != Model::mackey_glass) throw InvalidInput(spec.name + ": only Mackey-Glass is a DDE");
    if (!(spec.param("tau") > 0.0)) throw InvalidInput(spec.name + ": delay must be > 0");
  }
  Rhs{spec};  // throws on missing parameters
}

std::vector<double> eval_derivative(const SystemSpec& spec, std::span<const double> state,
                                    std::optional<std::span<const double>> delayed) {
  check_dim(spec, state.size(), "state");
  if (spec.kind == Kind::dde) {
    if (!delayed) throw InvalidInput(spec.name + ": delayed state required for a DDE");
    check_dim(spec, delayed->size(), "delayed state");
  } else if (delayed) {
    throw InvalidInput(spec.name + ": delayed state given for an ODE");
  }
  std::vector<double> dx(spec.dim);
  Rhs{spec}(state.data(), delayed ? delayed->data() : nullptr, dx.data());
  return dx;
}

Trajectory integrate_ode(const SystemSpec& spec, std::span<const double> x0, std::size_t n_steps,
                         std::size_t substeps) {
  validate(spec);
  if (spec.kind != Kind::ode) throw InvalidInput(spec.name + ": integrate_ode needs an ODE system");
  if (substeps < 1) throw InvalidInput("substeps must be >= 1");
  check_dim(spec, x0.size(), "initial state");

  Trajectory traj;
  traj.dt = spec.dt;
  traj.values.resize(static_cast<Eigen::Index>(n_steps), static_cast<Eigen::Index>(spec.dim));
  std::vector<double> x(x0.begin(), x0.end());
  OdeStepper stepper(spec, substeps);
  for (std::size_t n = 0; n < n_steps; ++n) {
    stepper.step(x);
    if (!all_finite(x))
      throw DivergenceError(spec.name + ": non-finite state at step " + std::to_string(n + 1), n + 1);
    std::copy(x.begin(), x.end(), traj.values.row(static_cast<Eigen::Index>(n)).data());
  }
  return traj;
}

namespace {

// Past grid points (value and derivative) of a DDE solution, indexed by the
// absolute internal step number.
class HistoryRing {
 public:
  HistoryRing(std::size_t dim, std::size_t capacity, std::span<const double> history)
      : d_(dim), cap_(capacity), y_(dim * capacity), f_(dim * capacity),
        history_(history.begin(), history.end()) {}

  double* y(std::size_t k) { return &y_[(k % cap_) * d_]; }
  double* f(std::size_t k) { return &f_[(k % cap_) * d_]; }

  // Solution at time u (in units of h), newest stored index `newest`.
  void at(double u, std::size_t newest, double* out) {
    if (u <= 0.0) {
      std::copy(history_.begin(), history_.end(), out);
      return;
    }
    auto k = static_cast<std::size_t>(std::floor(u));
    double s = u - static_cast<double>(k);
    if (k >= newest) {
      k = newest;
      s = 0.0;
    }
    if (s == 0.0) {
      std::copy(y(k), y(k) + d_, out);
      return;
    }
    const double s2 = s * s, s3 = s2 * s;
    const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    const double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    const double* y0 = y(k);
    const double* y1 = y(k + 1);
    const double* f0 = f(k);
    const double* f1 = f(k + 1);
    for (std::size_t i = 0; i < d_; ++i)
      out[i] = h00 * y0[i] + h10 * h_ * f0[i] + h01 * y1[i] + h11 * h_ * f1[i];
  }

  void set_step(double h) { h_ = h; }

 private:
  std::size_t d_, cap_;
  std::vector<double> y_, f_;
  std::vector<double> history_;
  double h_ = 0.0;
};

}  // namespace

Trajectory integrate_dde(const SystemSpec& spec, std::span<const double> history, std::size_t n_steps,
                         std::size_t substeps) {
  validate(spec);
  if (spec.kind != Kind::dde) throw InvalidInput(spec.name + ": integrate_dde needs a DDE system");
  if (substeps < 1) throw InvalidInput("substeps must be >= 1");
  check_dim(spec, history.size(), "history");

  const std::size_t d = spec.dim;
  const double h = spec.dt / static_cast<double>(substeps);
  const double lag = spec.param("tau") / h;
  if (lag < 1.0) throw InvalidInput(spec.name + ": delay must be at least one internal step");

  const Rhs rhs(spec);
  HistoryRing ring(d, static_cast<std::size_t>(std::ceil(lag)) + 3, history);
  ring.set_step(h);

  std::vector<double> x(history.begin(), history.end());
  std::vector<double> xd(d), k2(d), k3(d), k4(d), tmp(d);
  std::copy(x.begin(), x.end(), ring.y(0));
  ring.at(-lag, 0, xd.data());
  rhs(x.data(), xd.data(), ring.f(0));

  Trajectory traj;
  traj.dt = spec.dt;
  traj.values.resize(static_cast<Eigen::Index>(n_steps), static_cast<Eigen::Index>(d));

  std::size_t k = 0;
  for (std::size_t n = 0; n < n_steps; ++n) {
    for (std::size_t s = 0; s < substeps; ++s, ++k) {
      const double base = static_cast<double>(k) - lag;
      const double* k1 = ring.f(k);
      ring.at(base + 0.5, k, xd.data());
      for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k1[i];
      rhs(tmp.data(), xd.data(), k2.data());
      for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + 0.5 * h * k2[i];
      rhs(tmp.data(), xd.data(), k3.data());
      ring.at(base + 1.0, k, xd.data());
      for (std::size_t i = 0; i < d; ++i) tmp[i] = x[i] + h * k3[i];
      rhs(tmp.data(), xd.data(), k4.data());
      for (std::size_t i = 0; i < d; ++i) x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);

      std::copy(x.begin(), x.end(), ring.y(k + 1));
      ring.at(base + 1.0, k + 1, xd.data());
      rhs(x.data(), xd.data(), ring.f(k + 1));
    }
    if (!all_finite(x))
      throw DivergenceError(spec.name + ": non-finite state at step " + std::to_string(n + 1), n + 1);
    std::copy(x.begin(), x.end(), traj.values.row(static_cast<Eigen::Index>(n)).data());
  }
  return traj;
}

Trajectory integrate(const SystemSpec& spec, std::span<const double> x0, std::size_t n_steps,
                     std::size_t substeps) {
  return spec.kind == Kind::dde ? integrate_dde(spec, x0, n_steps, substeps)
                                : integrate_ode(spec, x0, n_steps, substeps);
}

double estimate_lle(const SystemSpec& spec, std::span<const double> x0, const LleOptions& opts) {
  validate(spec);
  if (spec.kind != Kind::ode) throw InvalidInput(spec.name + ": LLE estimation supports ODE systems only");
  if (opts.renorm_interval < 1 || opts.total_steps < opts.renorm_interval)
    throw InvalidInput("total_steps must be >= renorm_interval >= 1");
  check_dim(spec, x0.size(), "initial state");

  const std::size_t d = spec.dim;
  OdeStepper stepper(spec, opts.substeps);
  std::vector<double> ref(x0.begin(), x0.end());
  std::size_t step = 0;
  auto advance = [&](std::vector<double>& x) {
    stepper.step(x);
    if (!all_finite(x))
      throw DivergenceError(spec.name + ": non-finite state at step " + std::to_string(step), step);
  };
  for (; step < opts.transient_steps; ++step) advance(ref);

  const double d0 = opts.initial_separation;
  std::vector<double> pert(ref);
  const double unit = 1.0 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < d; ++i) pert[i] += d0 * unit;

  double log_sum = 0.0;
  std::size_t counted = 0;
  for (std::size_t n = 1; n <= opts.total_steps; ++n, ++step) {
    advance(ref);
    advance(pert);
    if (n % opts.renorm_interval != 0) continue;
    double dist2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) dist2 += (pert[i] - ref[i]) * (pert[i] - ref[i]);
    const double dist = std::sqrt(dist2);
    if (!(dist > 0.0)) throw DivergenceError(spec.name + ": trajectories collapsed", step);
    log_sum += std::log(dist / d0);
    for (std::size_t i = 0; i < d; ++i) pert[i] = ref[i] + (pert[i] - ref[i]) * (d0 / dist);
    counted = n;
  }
  return log_sum / (static_cast<double>(counted) * spec.dt);
}

}  // namespace tfcl::dynsys
