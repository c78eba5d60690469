// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include "tfcl/dataio.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "tfcl/error.hpp"
#include "tfcl/random.hpp"

namespace tfcl::data {
namespace {

constexpr char kMagic[8] = {'T', 'F', 'C', 'L', 'D', 'S', 'E', 'T'};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

const char* split_name(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "?";
}

}  // namespace

std::size_t Dataset::split_begin(Split s) const {
  switch (s) {
    case Split::train: return 0;
    case Split::val: return train_end;
    case Split::test: return val_end;
  }
  return 0;
}

std::size_t Dataset::split_end(Split s) const {
  switch (s) {
    case Split::train: return train_end;
    case Split::val: return val_end;
    case Split::test: return steps();
  }
  return 0;
}

Series Dataset::denormalize(const Series& normalized) const {
  Series out(normalized.rows(), normalized.cols());
  for (Eigen::Index j = 0; j < normalized.cols(); ++j)
    out.col(j) = normalized.col(j).array() * std[j] + mean[j];
  return out;
}

Series Dataset::normalize(const Series& raw) const {
  Series out(raw.rows(), raw.cols());
  for (Eigen::Index j = 0; j < raw.cols(); ++j) out.col(j) = (raw.col(j).array() - mean[j]) / std[j];
  return out;
}

bool operator==(const Dataset& a, const Dataset& b) {
  return a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols() &&
         a.values == b.values && a.mean == b.mean && a.std == b.std &&
         a.sigma_scalar == b.sigma_scalar && a.train_end == b.train_end && a.val_end == b.val_end &&
         a.dt == b.dt && a.lle == b.lle && a.source == b.source;
}

Dataset from_raw(const Series& raw, double dt, std::optional<double> lle, Source source) {
  if (raw.rows() == 0 || raw.cols() == 0) throw InvalidInput("empty series");
  if (!(dt > 0.0)) throw InvalidInput("dt must be > 0");
  const auto steps = static_cast<std::size_t>(raw.rows());
  Dataset ds;
  ds.dt = dt;
  ds.lle = lle;
  ds.source = std::move(source);
  ds.train_end = static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(steps)));
  ds.val_end = static_cast<std::size_t>(std::floor(0.9 * static_cast<double>(steps)));
  // Tiny series (< 2 rows) would otherwise have an empty training slice.
  const std::size_t fit_rows = std::max<std::size_t>(ds.train_end, 1);

  const auto d = raw.cols();
  const auto train = raw.topRows(static_cast<Eigen::Index>(fit_rows));
  ds.mean.resize(static_cast<std::size_t>(d));
  ds.std.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j) {
    const double mu = train.col(j).mean();
    const double var = (train.col(j).array() - mu).square().mean();
    double sd = std::sqrt(var);
    if (!(sd > 0.0)) sd = 1.0;  // constant column: leave scale untouched
    ds.mean[static_cast<std::size_t>(j)] = mu;
    ds.std[static_cast<std::size_t>(j)] = sd;
  }
  ds.values = ds.normalize(raw);

  const auto ntrain = ds.values.topRows(static_cast<Eigen::Index>(fit_rows));
  const double grand = ntrain.mean();
  const double sig = std::sqrt((ntrain.array() - grand).square().mean());
  ds.sigma_scalar = sig > 0.0 ? sig : 1.0;
  return ds;
}

Dataset generate_dataset(const dynsys::SystemSpec& spec, std::size_t n_samples, std::uint64_t seed,
                         const GenerateOptions& opts) {
  dynsys::validate(spec);
  if (n_samples < 1) throw InvalidInput("n_samples must be >= 1");
  std::vector<double> x0 = opts.x0.value_or(spec.x0);
  if (x0.size() != spec.dim) throw InvalidInput(spec.name + ": initial state has wrong length");
  Rng rng(derive_seed({seed, 0x67656eULL}));
  for (double& v : x0) v += uniform(rng, -0.01, 0.01);

  auto traj = dynsys::integrate(spec, x0, opts.transient + n_samples, opts.substeps);
  const Series raw = traj.values.bottomRows(static_cast<Eigen::Index>(n_samples));

  Source src;
  src.kind = Source::Kind::generated;
  src.label = spec.name;
  src.params = spec.params;
  if (spec.model == dynsys::Model::lorenz96) src.params["dim"] = static_cast<double>(spec.dim);
  src.x0 = x0;
  src.seed = seed;
  src.transient = opts.transient;
  src.substeps = opts.substeps;
  return from_raw(raw, spec.dt, spec.lle, std::move(src));
}

Dataset load_external_csv(const std::filesystem::path& path, const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (opts.skip_header && line_no == 1) continue;
    const auto body = trim(line);
    if (body.empty()) continue;
    std::vector<double> row;
    std::size_t pos = 0;
    while (pos <= body.size()) {
      const auto comma = body.find(',', pos);
      const auto tok = trim(body.substr(pos, comma == std::string_view::npos ? body.npos : comma - pos));
      double v = 0.0;
      const auto* end = tok.data() + tok.size();
      auto [ptr, ec] = std::from_chars(tok.data(), end, v);
      if (tok.empty() || ec != std::errc() || ptr != end) {
        std::ostringstream os;
        os << path.string() << ": line " << line_no << ": not a number: '" << tok << "'";
        throw FormatError(os.str());
      }
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (width == 0) width = row.size();
    if (row.size() != width) {
      std::ostringstream os;
      os << path.string() << ": line " << line_no << ": expected " << width << " columns, got " << row.size();
      throw FormatError(os.str());
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidInput(path.string() + ": no data rows");

  std::vector<std::size_t> cols = opts.columns;
  if (cols.empty())
    for (std::size_t j = 0; j < width; ++j) cols.push_back(j);
  for (auto c : cols)
    if (c >= width) throw InvalidInput(path.string() + ": column " + std::to_string(c) + " out of range");

  Series raw(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      raw(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][cols[j]];

  Source src;
  src.kind = Source::Kind::external;
  src.label = path.string();
  return from_raw(raw, opts.dt, opts.lle, std::move(src));
}

std::size_t prediction_length(double dt, double lle) {
  if (!(dt > 0.0) || !(lle > 0.0)) throw InvalidInput("prediction_length needs dt > 0 and lle > 0");
  return static_cast<std::size_t>(std::ceil(1.0 / (dt * lle)));
}

std::vector<SequencePair> window(const Dataset& ds, Split split, std::size_t n, std::size_t m,
                                 std::size_t stride, Context context) {
  if (n < 1 || m < 1 || stride < 1) throw InvalidInput("window: n, m and stride must be >= 1");
  const std::size_t begin = ds.split_begin(split);
  const std::size_t end = ds.split_end(split);
  const std::size_t len = end - begin;
  // First row where a target may start.
  std::size_t first_target = begin + n;
  std::size_t required = n + m;
  if (context == Context::lookback) {
    first_target = std::max(begin, n);
    required = m + (first_target - begin);
  }
  if (len < required || end < first_target + m) {
    std::ostringstream os;
    os << "window: " << split_name(split) << " split has " << len << " rows, needs at least " << required
       << " (n=" << n << ", m=" << m << ")";
    throw InvalidInput(os.str());
  }
  const std::size_t count = (end - first_target - m) / stride + 1;
  std::vector<SequencePair> out;
  out.reserve(count);
  const auto d = ds.values.cols();
  for (std::size_t w = 0; w < count; ++w) {
    const std::size_t t0 = first_target + w * stride;
    SequencePair p;
    p.origin_index = t0 - n;
    p.input = ds.values.block(static_cast<Eigen::Index>(t0 - n), 0, static_cast<Eigen::Index>(n), d);
    p.target = ds.values.block(static_cast<Eigen::Index>(t0), 0, static_cast<Eigen::Index>(m), d);
    out.push_back(std::move(p));
  }
  return out;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  binio::Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kDatasetVersion);
  w.u64(ds.steps());
  w.u64(ds.dim());
  w.f64(ds.dt);
  w.u8(ds.lle.has_value());
  w.f64(ds.lle.value_or(0.0));
  w.f64(ds.sigma_scalar);
  w.u64(ds.train_end);
  w.u64(ds.val_end);
  w.f64s(ds.mean.data(), ds.mean.size());
  w.f64s(ds.std.data(), ds.std.size());
  w.u8(static_cast<std::uint8_t>(ds.source.kind));
  w.str(ds.source.label);
  w.u32(static_cast<std::uint32_t>(ds.source.params.size()));
  for (const auto& [k, v] : ds.source.params) {
    w.str(k);
    w.f64(v);
  }
  w.vec(ds.source.x0);
  w.u64(ds.source.seed);
  w.u64(ds.source.transient);
  w.u64(ds.source.substeps);
  w.f64s(ds.values.data(), static_cast<std::size_t>(ds.values.size()));
  w.save(path);
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto r = binio::Reader::open(path);
  char magic[8];
  r.bytes(magic, sizeof magic);
  if (std::memcmp(magic, kMagic, sizeof magic) != 0) throw FormatError(r.name() + ": not a dataset file");
  const auto version = r.u32();
  if (version != kDatasetVersion)
    throw VersionError(r.name() + ": dataset version " + std::to_string(version) + ", expected " +
                       std::to_string(kDatasetVersion));
  Dataset ds;
  const auto steps = r.u64();
  const auto d = r.u64();
  ds.dt = r.f64();
  const bool has_lle = r.u8() != 0;
  const double lle = r.f64();
  if (has_lle) ds.lle = lle;
  ds.sigma_scalar = r.f64();
  ds.train_end = r.u64();
  ds.val_end = r.u64();
  r.check_remaining(d, 2 * sizeof(double));
  ds.mean.resize(d);
  ds.std.resize(d);
  r.f64s(ds.mean.data(), d);
  r.f64s(ds.std.data(), d);
  const auto kind = r.u8();
  if (kind > 1) throw FormatError(r.name() + ": bad source kind");
  ds.source.kind = static_cast<Source::Kind>(kind);
  ds.source.label = r.str();
  const auto np = r.u32();
  for (std::uint32_t i = 0; i < np; ++i) {
    auto key = r.str();
    ds.source.params[key] = r.f64();
  }
  ds.source.x0 = r.vec();
  ds.source.seed = r.u64();
  ds.source.transient = r.u64();
  ds.source.substeps = r.u64();
  if (d > 0 && steps > UINT64_MAX / d) throw FormatError(r.name() + ": corrupt header");
  r.check_remaining(steps * d, sizeof(double));
  ds.values.resize(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(d));
  r.f64s(ds.values.data(), steps * d);
  if (!r.at_end()) throw FormatError(r.name() + ": trailing bytes");
  if (ds.train_end > ds.val_end || ds.val_end > steps) throw FormatError(r.name() + ": bad split indices");
  return ds;
}

}  // namespace tfcl::data
