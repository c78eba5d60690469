// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <cstring>

#include "binary_io.hpp"
#include "tfcl/error.hpp"
#include "tfcl/trainer.hpp"

namespace tfcl::train {
namespace {

constexpr char kMagic[8] = {'T', 'F', 'C', 'L', 'C', 'K', 'P', 'T'};

void write_dims(binio::Writer& w, const nn::ModelDims& d) {
  w.u8(static_cast<std::uint8_t>(d.cell));
  w.u64(d.d);
  w.u64(d.hidden);
  w.u64(d.layers);
}

nn::ModelDims read_dims(binio::Reader& r) {
  nn::ModelDims d;
  const auto cell = r.u8();
  if (cell > static_cast<std::uint8_t>(nn::CellKind::lstm)) throw FormatError(r.name() + ": unknown cell kind");
  d.cell = static_cast<nn::CellKind>(cell);
  d.d = r.u64();
  d.hidden = r.u64();
  d.layers = r.u64();
  if (d.d < 1 || d.hidden < 1 || d.layers < 1 || d.hidden > (1u << 20) || d.d > (1u << 20) || d.layers > 64)
    throw FormatError(r.name() + ": implausible model shape");
  return d;
}

void write_vector(binio::Writer& w, const Eigen::VectorXd& v) {
  w.u64(static_cast<std::uint64_t>(v.size()));
  w.f64s(v.data(), static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd read_vector(binio::Reader& r, std::size_t expect) {
  const auto n = r.u64();
  if (n != expect) throw FormatError(r.name() + ": parameter vector has the wrong length");
  r.check_remaining(n, sizeof(double));
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  r.f64s(v.data(), n);
  return v;
}

std::string describe(const nn::ModelDims& d) {
  return std::string(nn::to_string(d.cell)) + " d=" + std::to_string(d.d) + " hidden=" + std::to_string(d.hidden) +
         " layers=" + std::to_string(d.layers);
}

}  // namespace

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  binio::Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  write_dims(w, c.params.dims());
  write_vector(w, c.params.flat());
  write_vector(w, c.best.flat());
  write_vector(w, c.adam.m);
  write_vector(w, c.adam.v);
  w.u64(c.adam.t);
  w.f64(c.scheduler.lr);
  w.f64(c.scheduler.best);
  w.u64(c.scheduler.bad_epochs);
  w.u8(c.scheduler.has_best);
  w.f64(c.stopper.best);
  w.u64(c.stopper.since);
  w.u8(c.stopper.has_best);
  w.u64(c.next_epoch);
  w.u64(c.seed);
  w.u8(static_cast<std::uint8_t>(c.log.stop_reason));
  w.u64(c.log.best_epoch);
  w.f64(c.log.best_val_loss);
  w.str(c.log.diagnostic);
  w.u64(c.log.epochs.size());
  for (const auto& e : c.log.epochs) {
    w.u64(e.epoch);
    w.f64(e.train_loss);
    w.f64(e.val_loss);
    w.f64(e.epsilon);
    w.f64(e.lr);
    w.f64(e.decoder_grad_norm_mean);
    w.f64(e.seconds);
  }
  w.save(path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const std::optional<nn::ModelDims>& expect) {
  auto r = binio::Reader::open(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError(r.name() + ": not a checkpoint file");
  const auto version = r.u32();
  if (version != kCheckpointVersion)
    throw VersionError(r.name() + ": checkpoint version " + std::to_string(version) + ", expected " +
                       std::to_string(kCheckpointVersion));
  const auto dims = read_dims(r);
  if (expect && !(*expect == dims))
    throw VersionError(r.name() + ": checkpoint holds a " + describe(dims) + " model, expected " + describe(*expect));

  Checkpoint c;
  c.params = nn::ModelParams(dims);
  c.best = nn::ModelParams(dims);
  const std::size_t n = c.params.size();
  c.params.flat() = read_vector(r, n);
  c.best.flat() = read_vector(r, n);
  c.adam.m = read_vector(r, n);
  c.adam.v = read_vector(r, n);
  c.adam.t = r.u64();
  c.scheduler.lr = r.f64();
  c.scheduler.best = r.f64();
  c.scheduler.bad_epochs = r.u64();
  c.scheduler.has_best = r.u8() != 0;
  c.stopper.best = r.f64();
  c.stopper.since = r.u64();
  c.stopper.has_best = r.u8() != 0;
  c.next_epoch = r.u64();
  c.seed = r.u64();
  const auto reason = r.u8();
  if (reason > static_cast<std::uint8_t>(StopReason::diverged)) throw FormatError(r.name() + ": unknown stop reason");
  c.log.stop_reason = static_cast<StopReason>(reason);
  c.log.best_epoch = r.u64();
  c.log.best_val_loss = r.f64();
  c.log.diagnostic = r.str();
  const auto count = r.u64();
  r.check_remaining(count, 8 * 7);
  c.log.epochs.resize(count);
  for (auto& e : c.log.epochs) {
    e.epoch = r.u64();
    e.train_loss = r.f64();
    e.val_loss = r.f64();
    e.epsilon = r.f64();
    e.lr = r.f64();
    e.decoder_grad_norm_mean = r.f64();
    e.seconds = r.f64();
  }
  if (!r.at_end()) throw FormatError(r.name() + ": trailing bytes after checkpoint");
  return c;
}

}  // namespace tfcl::train
