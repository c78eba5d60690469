// Copyright 2026 The tfcl Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <cmath>
#include <fstream>

#include "tfcl/dataio.hpp"
#include "tfcl/error.hpp"
#include "test_support.hpp"

using namespace tfcl;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using tfcl::testing::TempDir;

namespace {

data::Dataset ramp(std::size_t steps, std::size_t d = 2) {
  Series raw(static_cast<Eigen::Index>(steps), static_cast<Eigen::Index>(d));
  for (Eigen::Index t = 0; t < raw.rows(); ++t)
    for (Eigen::Index j = 0; j < raw.cols(); ++j) raw(t, j) = static_cast<double>(t) * double(j + 1) + 3.0;
  return data::from_raw(raw, 0.1, 0.5, {});
}

void write_text(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("splits are 80/10/10 by floor") {
  for (std::size_t steps : {10u, 11u, 99u, 1000u, 10000u}) {
    const auto ds = ramp(steps);
    CHECK(ds.train_end == steps * 8 / 10);
    CHECK(ds.val_end == steps * 9 / 10);
    CHECK(ds.split_begin(data::Split::train) == 0);
    CHECK(ds.split_end(data::Split::test) == steps);
  }
}

TEST_CASE("normalization uses training statistics only") {
  const auto ds = ramp(1000, 3);
  const auto train = ds.values.topRows(static_cast<Eigen::Index>(ds.train_end));
  for (Eigen::Index j = 0; j < 3; ++j) {
    const double mu = train.col(j).mean();
    const double var = (train.col(j).array() - mu).square().mean();
    CHECK_THAT(mu, WithinAbs(0.0, 1e-12));
    CHECK_THAT(var, WithinAbs(1.0, 1e-12));
  }
  // The test slice of a ramp lies above the training range.
  CHECK(ds.values(999, 0) > 1.7);
  // Each column is unit-variance on train, so the pooled sigma is 1 too.
  CHECK_THAT(ds.sigma_scalar, WithinAbs(1.0, 1e-12));
}

TEST_CASE("denormalize inverts normalize") {
  const Series raw = tfcl::testing::random_series(200, 4, 5) * 7.0;
  const auto ds = data::from_raw(raw, 1.0, std::nullopt, {});
  CHECK((ds.denormalize(ds.values) - raw).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((ds.normalize(raw) - ds.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant columns keep a unit scale") {
  Series raw = Series::Constant(50, 2, 4.0);
  raw.col(1).setLinSpaced(0.0, 1.0);
  const auto ds = data::from_raw(raw, 1.0, std::nullopt, {});
  CHECK(ds.std[0] == 1.0);
  CHECK(ds.values.col(0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("prediction length is the ceiling of one Lyapunov time") {
  CHECK(data::prediction_length(0.1, 0.055) == 182);
  CHECK(data::prediction_length(0.01, 0.905) == 111);
  CHECK(data::prediction_length(0.12, 0.069) == 121);
  CHECK(data::prediction_length(1.0, 0.006) == 167);
  CHECK(data::prediction_length(0.05, 1.67) == 12);
  CHECK(data::prediction_length(0.1, 0.14) == 72);
  CHECK_THROWS_AS(data::prediction_length(0.1, 0.0), InvalidInput);
}

TEST_CASE("window counts and alignment") {
  const auto ds = ramp(1000);
  // train split is rows [0, 800)
  const auto w = data::window(ds, data::Split::train, 10, 5, 1);
  CHECK(w.size() == 800 - 15 + 1);
  for (const auto& p : {w.front(), w[123], w.back()}) {
    CHECK(p.input.rows() == 10);
    CHECK(p.target.rows() == 5);
    const auto i0 = static_cast<Eigen::Index>(p.origin_index);
    CHECK(p.input == ds.values.middleRows(i0, 10));
    CHECK(p.target == ds.values.middleRows(i0 + 10, 5));
  }
  CHECK(w.back().origin_index + 15 == 800);

  const auto strided = data::window(ds, data::Split::train, 10, 5, 7);
  CHECK(strided.size() == (800 - 15) / 7 + 1);
  CHECK(strided[1].origin_index == 7);

  const auto val = data::window(ds, data::Split::val, 10, 5, 1);
  CHECK(val.front().origin_index == 800);
  CHECK(val.size() == 100 - 15 + 1);
}

TEST_CASE("lookback windows keep targets inside the split") {
  const auto ds = ramp(1000);
  const auto w = data::window(ds, data::Split::test, 150, 40, 1, data::Context::lookback);
  REQUIRE(!w.empty());
  CHECK(w.front().origin_index == 900 - 150);
  CHECK(w.size() == 100 - 40 + 1);
  for (const auto& p : w) CHECK(p.origin_index + 150 >= 900);
  // Within the split alone, 150 + 40 rows do not fit.
  CHECK_THROWS_WITH(data::window(ds, data::Split::test, 150, 40, 1),
                    ContainsSubstring("test split has 100 rows"));
}

TEST_CASE("window rejects degenerate arguments") {
  const auto ds = ramp(100);
  CHECK_THROWS_AS(data::window(ds, data::Split::train, 0, 5, 1), InvalidInput);
  CHECK_THROWS_AS(data::window(ds, data::Split::train, 5, 5, 0), InvalidInput);
}

TEST_CASE("generated datasets are deterministic and seed-dependent") {
  const auto spec = dynsys::preset("roessler");
  data::GenerateOptions o;
  o.transient = 100;
  const auto a = data::generate_dataset(spec, 500, 1, o);
  const auto b = data::generate_dataset(spec, 500, 1, o);
  const auto c = data::generate_dataset(spec, 500, 2, o);
  CHECK(a == b);
  CHECK(a.values != c.values);
  CHECK(a.steps() == 500);
  CHECK(a.dim() == 3);
  CHECK(a.lle == 0.069);
  CHECK(a.dt == 0.12);
  REQUIRE(a.source.x0.size() == 3);
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(a.source.x0[j] - spec.x0[j]) <= 0.01);
  CHECK(a.source.transient == 100);
}

TEST_CASE("dataset files round-trip exactly") {
  TempDir tmp("dataio");
  const auto spec = dynsys::preset("thomas");
  data::GenerateOptions o;
  o.transient = 50;
  const auto ds = data::generate_dataset(spec, 300, 9, o);
  data::save_dataset(ds, tmp / "a.bin");
  const auto back = data::load_dataset(tmp / "a.bin");
  CHECK(back == ds);
  CHECK(back.source.params == spec.params);

  const auto ext = data::from_raw(tfcl::testing::random_series(40, 2, 1), 0.5, std::nullopt, {});
  data::save_dataset(ext, tmp / "b.bin");
  const auto ext_back = data::load_dataset(tmp / "b.bin");
  CHECK(ext_back == ext);
  CHECK_FALSE(ext_back.lle.has_value());
}

TEST_CASE("corrupt dataset files are rejected") {
  TempDir tmp("dataio");
  const auto ds = ramp(100);
  data::save_dataset(ds, tmp / "ok.bin");
  std::string bytes;
  {
    std::ifstream in(tmp / "ok.bin", std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto write_bytes = [&](const std::string& name, const std::string& content) {
    std::ofstream(tmp / name, std::ios::binary) << content;
    return tmp / name;
  };

  SECTION("truncated") {
    CHECK_THROWS_AS(data::load_dataset(write_bytes("t.bin", bytes.substr(0, bytes.size() - 3))), FormatError);
  }
  SECTION("trailing bytes") {
    CHECK_THROWS_WITH(data::load_dataset(write_bytes("x.bin", bytes + "zz")), ContainsSubstring("trailing"));
  }
  SECTION("bad magic") {
    std::string b = bytes;
    b[0] = 'X';
    CHECK_THROWS_AS(data::load_dataset(write_bytes("m.bin", b)), FormatError);
  }
  SECTION("future version") {
    std::string b = bytes;
    b[8] = static_cast<char>(data::kDatasetVersion + 1);
    CHECK_THROWS_AS(data::load_dataset(write_bytes("v.bin", b)), VersionError);
  }
  SECTION("missing file") { CHECK_THROWS_AS(data::load_dataset(tmp / "nope.bin"), IoError); }
}

TEST_CASE("CSV loading selects columns and skips a header") {
  TempDir tmp("csv");
  write_text(tmp / "a.csv", "t,x,y\n0, 1.5, 2\n1,2.5,4\n\n2,3.5,8\n");
  data::CsvOptions o;
  o.skip_header = true;
  o.columns = {2, 1};
  o.dt = 0.25;
  o.lle = 0.3;
  const auto ds = data::load_external_csv(tmp / "a.csv", o);
  CHECK(ds.steps() == 3);
  CHECK(ds.dim() == 2);
  CHECK(ds.dt == 0.25);
  CHECK(ds.lle == 0.3);
  CHECK(ds.source.kind == data::Source::Kind::external);
  const Series raw = ds.denormalize(ds.values);
  CHECK_THAT(raw(2, 0), WithinAbs(8.0, 1e-12));
  CHECK_THAT(raw(0, 1), WithinAbs(1.5, 1e-12));
}

TEST_CASE("CSV errors name the offending line") {
  TempDir tmp("csv");
  write_text(tmp / "bad.csv", "1,2\n3,4\n5,oops\n");
  CHECK_THROWS_WITH(data::load_external_csv(tmp / "bad.csv"), ContainsSubstring("line 3") && ContainsSubstring("oops"));
  write_text(tmp / "ragged.csv", "1,2\n3\n");
  CHECK_THROWS_WITH(data::load_external_csv(tmp / "ragged.csv"), ContainsSubstring("line 2"));
  write_text(tmp / "hdr.csv", "a,b\n1,2\n");
  CHECK_THROWS_WITH(data::load_external_csv(tmp / "hdr.csv"), ContainsSubstring("line 1"));
  write_text(tmp / "empty.csv", "\n\n");
  CHECK_THROWS_AS(data::load_external_csv(tmp / "empty.csv"), InvalidInput);
  write_text(tmp / "ok.csv", "1,2\n3,4\n");
  data::CsvOptions o;
  o.columns = {5};
  CHECK_THROWS_AS(data::load_external_csv(tmp / "ok.csv", o), InvalidInput);
  CHECK_THROWS_AS(data::load_external_csv(tmp / "missing.csv"), IoError);
}
