// Copyright 2026 The fcs-shadows Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <filesystem>
#include <numbers>

#include "fcs/cli/commands.hpp"
#include "fcs/cli/config.hpp"
#include "fcs/cli/io.hpp"
#include "fcs/fcs.hpp"

namespace {

namespace cli = fcs::cli;
namespace fs = std::filesystem;
using fcs::Axis;
using fcs::cplx;

constexpr double kPi = std::numbers::pi;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("fcs_io_" + std::string(info->test_suite_name()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

cli::RunConfig small_config() {
  cli::RunConfig c = cli::RunConfig::case_one();
  c.quench.n_qubits = 6;
  c.quench.times_ms = {0.5};
  c.n_u = 60;
  c.n_m = 20;
  c.seed = 7;
  c.subsystem = "2:4";
  c.alpha_points = 33;
  return c;
}

TEST(Format, ShortestRoundTrip) {
  EXPECT_EQ(cli::format_double(0.1), "0.1");
  EXPECT_EQ(cli::format_double(-2.0), "-2");
  for (double v : {kPi, 1.0 / 3.0, 6.02e23, -1.5e-300}) {
    const std::string s = cli::format_double(v);
    EXPECT_EQ(std::stod(s), v);
  }
}

TEST(Parse, Subsystem) {
  EXPECT_EQ(cli::parse_subsystem("4:7").sites(), (std::vector<int>{4, 5, 6, 7}));
  EXPECT_EQ(cli::parse_subsystem("1,3,8").sites(), (std::vector<int>{1, 3, 8}));
  EXPECT_EQ(cli::parse_subsystem("5").sites(), (std::vector<int>{5}));
  EXPECT_THROW(cli::parse_subsystem("a:3"), fcs::InputError);
  EXPECT_THROW(cli::parse_subsystem("3:1"), fcs::InputError);
  EXPECT_THROW(cli::parse_subsystem("1,,2"), fcs::InputError);
  EXPECT_THROW(cli::parse_subsystem("2,2"), fcs::InputError);
}

TEST(Parse, AnglesListsAxes) {
  EXPECT_DOUBLE_EQ(cli::parse_angle("0.5pi"), 0.5 * kPi);
  EXPECT_DOUBLE_EQ(cli::parse_angle("pi"), kPi);
  EXPECT_DOUBLE_EQ(cli::parse_angle("1.25"), 1.25);
  EXPECT_THROW(cli::parse_angle("half"), fcs::InputError);
  EXPECT_EQ(cli::parse_number_list("0,0.5,1"), (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(cli::parse_axes("xz"), (std::vector<Axis>{Axis::x, Axis::z}));
  EXPECT_THROW(cli::parse_axes("xq"), fcs::InputError);
  EXPECT_EQ(cli::parse_initial_kind("neel"), fcs::InitialKind::neel);
  EXPECT_EQ(cli::parse_initial_kind("tilted"), fcs::InitialKind::tilted_ferromagnet);
  EXPECT_THROW(cli::parse_initial_kind("ferro"), fcs::InputError);
}

TEST(Config, JsonRoundTrip) {
  cli::RunConfig c = cli::RunConfig::case_two(0.2 * kPi);
  c.quench.times_ms = {0.0, 1.5, 4.0};
  c.axes = {Axis::y};
  c.bulk_average = true;
  c.error_method = "jackknife";
  c.initial.bitflip_rates = {0.1, 0.2};
  const cli::RunConfig back = cli::from_json(cli::to_json(c));
  EXPECT_EQ(cli::to_json(back), cli::to_json(c));
}

TEST(Config, CasePresetsAndOverrides) {
  const auto one = cli::from_json(nlohmann::json{{"case", "I"}});
  EXPECT_EQ(one.quench.n_qubits, 10);
  EXPECT_DOUBLE_EQ(one.quench.j0, 420.0);
  EXPECT_DOUBLE_EQ(one.quench.alpha_exp, 1.24);
  EXPECT_EQ(one.initial.kind, fcs::InitialKind::neel);
  const auto two = cli::from_json(nlohmann::json{{"case", "II"}, {"theta", "0.2pi"}, {"n_m", 5}});
  EXPECT_EQ(two.quench.n_qubits, 12);
  EXPECT_DOUBLE_EQ(two.quench.j0, 560.0);
  EXPECT_DOUBLE_EQ(two.initial.theta, 0.2 * kPi);
  EXPECT_EQ(two.n_m, 5);
  EXPECT_THROW(cli::from_json(nlohmann::json{{"case", "III"}}), fcs::InputError);
  EXPECT_THROW(cli::from_json(nlohmann::json::array()), fcs::InputError);
  cli::RunConfig bad = one;
  bad.error_method = "bootstrap";
  EXPECT_THROW(bad.validate(), fcs::InputError);
}

TEST(Dataset, RoundTripIsExact) {
  const auto data = fcs::acquire_dataset(fcs::prepare_neel(5), 30, 12, 44, {.state_descriptor = "neel", .time_ms = 0.5});
  const std::string text = cli::serialize_dataset(data, {{"extra", 3}});
  const auto loaded = cli::parse_dataset(text);
  EXPECT_EQ(loaded.header.at("extra"), 3);
  EXPECT_EQ(loaded.header.at("schema"), "rm-dataset/1");
  EXPECT_EQ(loaded.data.metadata.n_qubits, 5);
  EXPECT_EQ(loaded.data.metadata.seed, 44u);
  EXPECT_EQ(loaded.data.metadata.state_descriptor, "neel");
  EXPECT_EQ(loaded.data.metadata.time_ms, 0.5);
  ASSERT_EQ(loaded.data.records.size(), data.records.size());
  for (std::size_t r = 0; r < data.records.size(); ++r) {
    EXPECT_EQ(loaded.data.records[r].shots, data.records[r].shots);
    for (std::size_t s = 0; s < 5; ++s) {
      EXPECT_EQ(loaded.data.records[r].unitaries[s].matrix, data.records[r].unitaries[s].matrix);
    }
  }
  const auto grid = fcs::default_alpha_grid(3, 9);
  const auto a = fcs::estimate_fcs(data, fcs::SubsystemSpec({1, 2, 3}), Axis::x, grid);
  const auto b = fcs::estimate_fcs(loaded.data, fcs::SubsystemSpec({1, 2, 3}), Axis::x, grid);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(cli::serialize_dataset(loaded.data, {{"extra", 3}}), text);
}

TEST(Dataset, SameSeedIsByteIdentical) {
  const auto psi = fcs::prepare_tilted_ferromagnet(4, 0.3);
  const auto a = cli::serialize_dataset(fcs::acquire_dataset(psi, 40, 10, 5, {.threads = 1}));
  const auto b = cli::serialize_dataset(fcs::acquire_dataset(psi, 40, 10, 5, {.threads = 4}));
  const auto c = cli::serialize_dataset(fcs::acquire_dataset(psi, 40, 10, 6, {.threads = 1}));
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(Dataset, SchemaAndShapeErrors) {
  const auto data = fcs::acquire_dataset(fcs::prepare_neel(3), 4, 3, 1);
  std::string text = cli::serialize_dataset(data);
  std::string wrong = text;
  wrong.replace(wrong.find("rm-dataset/1"), 12, "rm-dataset/9");
  try {
    cli::parse_dataset(wrong);
    FAIL() << "expected a schema error";
  } catch (const fcs::SchemaError& e) {
    EXPECT_EQ(std::string(e.what()), "dataset schema mismatch: expected rm-dataset/1, found rm-dataset/9");
  }
  const std::string truncated = text.substr(0, text.rfind('\n', text.size() - 2) + 1);
  EXPECT_ANY_THROW(cli::parse_dataset(truncated));
  EXPECT_THROW(cli::parse_dataset("{not json"), fcs::SchemaError);
  std::string bad_shot = text;
  bad_shot.replace(bad_shot.rfind("\"0"), 2, "\"2");
  EXPECT_ANY_THROW(cli::parse_dataset(bad_shot));
}

TEST(State, PureAndMixedRoundTrip) {
  const auto h = fcs::build_xy_hamiltonian({4, 420.0, 1.24, {0.3}});
  const auto psi = fcs::evolve(fcs::prepare_neel(4), h, 0.3);
  const cli::StateFile pure{psi, {{"time_ms", 0.3}, {"state_descriptor", "neel"}}};
  const auto back = cli::parse_state(cli::serialize_state(pure));
  ASSERT_TRUE(back.is_pure());
  EXPECT_EQ(std::get<fcs::StateVector>(back.state).amplitudes(), psi.amplitudes());
  EXPECT_EQ(back.time_ms(), 0.3);
  EXPECT_EQ(back.descriptor(), "neel");

  const auto rho = fcs::apply_bitflip_channel(fcs::DensityMatrix::from_pure(psi), std::vector<double>{0.1, 0.0, 0.2, 0.05});
  const cli::StateFile mixed{rho, {}};
  const auto mback = cli::parse_state(cli::serialize_state(mixed));
  ASSERT_FALSE(mback.is_pure());
  EXPECT_EQ(mback.n_qubits(), 4);
  EXPECT_EQ(std::get<fcs::DensityMatrix>(mback.state).entries(), rho.entries());

  EXPECT_THROW(cli::parse_state(R"({"schema":"rm-table/1"})"), fcs::SchemaError);
  EXPECT_THROW(cli::parse_state(R"({"schema":"rm-state/1","n_qubits":1,"kind":"pure","re":[1],"im":[0]})"),
               fcs::SchemaError);
  EXPECT_THROW(cli::parse_state(R"({"schema":"rm-state/1","n_qubits":15,"kind":"pure","re":[],"im":[]})"),
               fcs::CapacityError);
  EXPECT_THROW(cli::parse_state(R"({"schema":"rm-state/1","n_qubits":1,"kind":"pure","re":[1,1],"im":[0,0]})"),
               fcs::InputError);
}

TEST(TableIo, RoundTripAndSpecialValues) {
  cli::Table t{{{"kind", "fcs"}, {"axis", "x"}}, {"alpha", "re", "z"}, {{"0", "1", "inf"}, {"0.5", "-0.25", "nan"}}};
  const std::string text = cli::serialize_table(t, "# max_abs_z=inf\n");
  EXPECT_EQ(text.rfind("# {", 0), 0u);
  const auto back = cli::parse_table(text);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.meta.at("schema"), "rm-table/1");
  EXPECT_EQ(back.meta.at("axis"), "x");
  const auto z = back.numeric_column("z");
  EXPECT_TRUE(std::isinf(z[0]));
  EXPECT_TRUE(std::isnan(z[1]));
  EXPECT_THROW(back.column("missing"), fcs::SchemaError);
  EXPECT_THROW(cli::parse_table("alpha,re\n0,1\n"), fcs::SchemaError);
  EXPECT_THROW(cli::parse_table("# {\"schema\":\"rm-table/1\"}\na,b\n1\n"), fcs::SchemaError);
  cli::Table words{{}, {"a"}, {{"x"}}};
  EXPECT_THROW(cli::parse_table(cli::serialize_table(words)).numeric_column("a"), fcs::SchemaError);
}

TEST_F(TempDir, AtomicWriteCreatesParents) {
  const fs::path p = dir_ / "a" / "b" / "out.txt";
  cli::write_atomic(p, "hello");
  EXPECT_EQ(cli::read_file(p), "hello");
  cli::write_atomic(p, "again");
  EXPECT_EQ(cli::read_file(p), "again");
  EXPECT_EQ(std::distance(fs::directory_iterator(p.parent_path()), fs::directory_iterator{}), 1);
  EXPECT_THROW(cli::read_file(dir_ / "missing"), fcs::IoError);
}

TEST_F(TempDir, SimulateWritesOneFilePerTime) {
  auto c = small_config();
  c.quench.times_ms = {0.0, 0.5};
  const auto paths = cli::cmd_simulate(c, dir_ / "state.json");
  ASSERT_EQ(paths.size(), 2u);
  EXPECT_EQ(paths[0].filename(), "state_t0.json");
  EXPECT_EQ(paths[1].filename(), "state_t0.5.json");
  const auto s0 = cli::read_state(paths[0]);
  EXPECT_EQ(std::get<fcs::StateVector>(s0.state).amplitudes(), fcs::prepare_neel(6).amplitudes());
  const auto s1 = cli::read_state(paths[1]);
  const auto h = fcs::build_xy_hamiltonian(c.quench);
  const auto expected = fcs::evolve(fcs::prepare_neel(6), h, 0.5);
  EXPECT_LE((std::get<fcs::StateVector>(s1.state).amplitudes() - expected.amplitudes()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(s1.time_ms(), 0.5);
  EXPECT_FALSE(s1.header.at("config").contains("threads"));

  c.quench.times_ms = {0.0};
  c.initial.bitflip_rates = std::vector<double>(6, 0.1);
  const auto mixed = cli::cmd_simulate(c, dir_ / "mixed.json");
  ASSERT_EQ(mixed.size(), 1u);
  EXPECT_EQ(mixed[0], dir_ / "mixed.json");
  EXPECT_FALSE(cli::read_state(mixed[0]).is_pure());
}

TEST_F(TempDir, PipelineEstimateOracleCompare) {
  const auto c = small_config();
  const auto state = cli::cmd_simulate(c, dir_ / "state.json").front();
  const auto dataset = cli::cmd_acquire(state, c, dir_ / "data.jsonl");
  const auto loaded = cli::read_dataset(dataset);
  EXPECT_EQ(loaded.header.at("config").at("seed"), 7);
  EXPECT_TRUE(loaded.header.contains("state_config"));
  EXPECT_EQ(loaded.data.metadata.time_ms, 0.5);

  const auto est = cli::cmd_estimate(dataset, c, dir_ / "est");
  ASSERT_EQ(est.size(), 5u);
  EXPECT_EQ(est[0].filename(), "est_fcs_x.csv");
  const auto fcs_table = cli::read_table(est[0]);
  EXPECT_EQ(fcs_table.columns, (std::vector<std::string>{"alpha", "re", "im", "stderr_re", "stderr_im"}));
  EXPECT_EQ(fcs_table.rows.size(), 33u);
  EXPECT_EQ(fcs_table.meta.at("subsystem"), nlohmann::json({2, 3, 4}));
  EXPECT_EQ(fcs_table.meta.at("n_u"), 60);

  const auto psi = std::get<fcs::StateVector>(cli::read_state(state).state);
  const auto rho = fcs::partial_trace(psi, fcs::SubsystemSpec({2, 3, 4}));
  const auto grid = fcs_table.numeric_column("alpha");
  const auto est_curve = fcs::estimate_fcs(loaded.data, fcs::SubsystemSpec({2, 3, 4}), Axis::x, grid);
  const auto re = fcs_table.numeric_column("re");
  for (std::size_t k = 0; k < grid.size(); ++k) EXPECT_EQ(re[k], est_curve.values[k].real());

  const auto summary = cli::cmd_compare(est[0], cli::StateSource{state}, dir_ / "cmp.csv");
  const auto cmp = cli::read_table(summary.path);
  const auto exact_re = cmp.numeric_column("exact_re");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    EXPECT_NEAR(exact_re[k], fcs::exact_fcs(rho, Axis::x, grid[k]).real(), 1e-12);
  }
  EXPECT_TRUE(std::isfinite(summary.max_abs_z));
  EXPECT_NE(cli::read_file(summary.path).find("# max_abs_z="), std::string::npos);

  const auto exact = cli::cmd_oracle(state, c, dir_ / "exact");
  const auto via_table = cli::cmd_compare(est[0], cli::TableSource{exact[0]}, dir_ / "cmp2.csv");
  EXPECT_NEAR(via_table.max_abs_z, summary.max_abs_z, 1e-9);
  const auto pdf_cmp = cli::cmd_compare(est[1], cli::TableSource{exact[1]}, dir_ / "cmp3.csv");
  EXPECT_TRUE(std::isfinite(pdf_cmp.max_abs_z));

  auto coarse = c;
  coarse.alpha_points = 17;
  const auto other = cli::cmd_oracle(state, coarse, dir_ / "coarse");
  try {
    cli::cmd_compare(est[0], cli::TableSource{other[0]}, dir_ / "bad.csv");
    FAIL() << "expected a grid mismatch";
  } catch (const fcs::InputError& e) {
    EXPECT_EQ(std::string(e.what()), "grid mismatch between estimate and exact table");
  }
  EXPECT_THROW(cli::cmd_compare(est[0], cli::TableSource{exact[1]}, dir_ / "bad.csv"), fcs::InputError);
  EXPECT_THROW(cli::cmd_compare(est[4], cli::StateSource{state}, dir_ / "bad.csv"), fcs::InputError);
}

TEST_F(TempDir, BulkAndPropagatedOptions) {
  auto c = small_config();
  c.quench.times_ms = {0.0};
  const auto state = cli::cmd_simulate(c, dir_ / "state.json").front();
  const auto dataset = cli::cmd_acquire(state, c, dir_ / "data.jsonl");
  c.bulk_average = true;
  c.subsystem = "2:3";
  const auto est = cli::cmd_estimate(dataset, c, dir_ / "bulk");
  const auto t = cli::read_table(est[0]);
  EXPECT_EQ(t.meta.at("windows").size(), 3u);
  const auto cmp = cli::cmd_compare(est[0], cli::StateSource{state}, dir_ / "cmp.csv");
  EXPECT_TRUE(std::isfinite(cmp.max_abs_z));
  c.error_method = "propagated";
  EXPECT_THROW(cli::cmd_estimate(dataset, c, dir_ / "p"), fcs::InputError);
  c.bulk_average = false;
  const auto prop = cli::cmd_estimate(dataset, c, dir_ / "p");
  EXPECT_EQ(cli::read_table(prop[0]).meta.at("error_method"), "propagated");
}

TEST_F(TempDir, ClosedFormAndHistogram) {
  auto c = small_config();
  fcs::ClosedFormSpec spec;
  spec.family = fcs::ClosedFormFamily::neel_fcs_x;
  spec.n_a = 3;
  const auto path = cli::cmd_closed_form(spec, c, dir_ / "cf.csv");
  const auto t = cli::read_table(path);
  EXPECT_EQ(t.meta.at("kind"), "fcs");
  EXPECT_EQ(t.meta.at("axis"), "x");
  const auto alpha = t.numeric_column("alpha");
  const auto re = t.numeric_column("re");
  for (std::size_t k = 0; k < alpha.size(); ++k) EXPECT_NEAR(re[k], std::pow(std::cos(alpha[k]), 3), 1e-15);

  c.quench.times_ms = {0.0};
  const auto state = cli::cmd_simulate(c, dir_ / "state.json").front();
  const auto dataset = cli::cmd_acquire(state, c, dir_ / "data.jsonl");
  const auto hist = cli::cmd_hist(dataset, c, dir_ / "hist.csv");
  const auto h = cli::read_table(hist.path);
  EXPECT_EQ(h.columns.size(), 2u + 6u);
  EXPECT_EQ(h.rows.size(), 21u);
  EXPECT_GE(hist.pooled_p_value, 0.0);
  EXPECT_LE(hist.pooled_p_value, 1.0);
}

}  // namespace
