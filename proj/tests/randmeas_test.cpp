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

#include <boost/math/special_functions/gamma.hpp>

#include <numbers>
#include <random>

#include "fcs/dynamics.hpp"
#include "fcs/randmeas.hpp"
#include "support/oracles.hpp"

namespace {

using fcs::cplx;
using fcs::DensityMatrix;
using fcs::StateVector;
namespace ft = fcs::testing;

constexpr double kPi = std::numbers::pi;

TEST(Rng, StreamsAreCounterDerived) {
  auto a = fcs::record_stream(42, 7);
  auto b = fcs::record_stream(42, 7);
  EXPECT_EQ(a(), b());
  auto c = fcs::record_stream(42, 8);
  auto d = fcs::record_stream(43, 7);
  const auto first = fcs::record_stream(42, 7)();
  EXPECT_NE(first, c());
  EXPECT_NE(first, d());
  // Documented construction.
  EXPECT_EQ(first, fcs::Rng(fcs::detail::splitmix64(42 ^ fcs::detail::splitmix64(8)))());
}

TEST(Rng, UniformAndNormalMoments) {
  fcs::Rng rng(5);
  double sum = 0.0;
  double sum_sq = 0.0;
  double usum = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const auto [a, b] = fcs::detail::normal_pair(rng);
    sum += a + b;
    sum_sq += a * a + b * b;
    const double u = fcs::detail::uniform01(rng);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    usum += u;
  }
  EXPECT_NEAR(sum / (2 * n), 0.0, 0.01);
  EXPECT_NEAR(sum_sq / (2 * n), 1.0, 0.01);
  EXPECT_NEAR(usum / n, 0.5, 0.005);
}

TEST(CueSampling, Unitarity) {
  fcs::Rng rng(1);
  for (int k = 0; k < 10000; ++k) {
    const auto u = fcs::sample_cue_unitary(rng);
    ASSERT_LE(fcs::unitarity_error(u.matrix), 1e-12);
  }
}

TEST(CueSampling, HaarMoments) {
  fcs::Rng rng(2);
  double m2 = 0.0;
  double m4 = 0.0;
  cplx offdiag_mean = 0.0;
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const auto u = fcs::sample_cue_unitary(rng).matrix;
    const double p = std::norm(u(0, 0));
    m2 += p;
    m4 += p * p;
    offdiag_mean += u(0, 1);
  }
  EXPECT_NEAR(m2 / n, 0.5, 0.005);
  EXPECT_NEAR(m4 / n, 1.0 / 3.0, 0.005);
  EXPECT_LT(std::abs(offdiag_mean / static_cast<double>(n)), 0.01);
}

TEST(CueSampling, PhaseOfDiagonalIsUniform) {
  // Without the diag(R) phase correction the diagonal phase would be biased.
  fcs::Rng rng(3);
  const int bins = 8;
  std::vector<long long> counts(bins, 0);
  const int n = 40000;
  for (int k = 0; k < n; ++k) {
    const double phase = std::arg(fcs::sample_cue_unitary(rng).matrix(0, 0));
    const int b = std::min(bins - 1, static_cast<int>((phase + kPi) / (2 * kPi) * bins));
    ++counts[static_cast<std::size_t>(b)];
  }
  EXPECT_GT(fcs::flatness_p_value(counts), 1e-3);
}

TEST(Zyz, Examples) {
  const auto id = fcs::zyz_decompose(Eigen::Matrix2cd::Identity());
  EXPECT_NEAR(id.y, 0.0, 1e-15);
  EXPECT_NEAR(std::remainder(id.z1 + id.z2, 4 * kPi), 0.0, 1e-12);
  const auto a = fcs::zyz_decompose(fcs::ry(kPi / 2));
  EXPECT_NEAR(a.z1, 0.0, 1e-12);
  EXPECT_NEAR(a.y, kPi / 2, 1e-12);
  EXPECT_NEAR(a.z2, 0.0, 1e-12);
  Eigen::Matrix2cd bad;
  bad << 1.0, 0.1, 0.0, 1.0;
  EXPECT_THROW(fcs::zyz_decompose(bad), fcs::InputError);
  EXPECT_THROW(fcs::LocalUnitary::from_matrix(bad), fcs::InputError);
}

TEST(Zyz, RoundTripOnCueSamples) {
  fcs::Rng rng(4);
  for (int k = 0; k < 10000; ++k) {
    const auto u = fcs::sample_cue_unitary(rng);
    const auto a = fcs::zyz_decompose(u.matrix);
    ASSERT_GE(a.y, 0.0);
    ASSERT_LE(a.y, kPi);
    const Eigen::Matrix2cd rebuilt = fcs::rz(a.z1) * fcs::ry(a.y) * fcs::rz(a.z2);
    ASSERT_LE((rebuilt * std::polar(1.0, a.global_phase) - u.matrix).norm(), 1e-10);
    ASSERT_LE((fcs::zyz_compose(*u.angles) - u.matrix).norm(), 1e-10);
  }
}

TEST(Zyz, GaugePoints) {
  for (double z : {0.3, -1.2, 2.9}) {
    for (const Eigen::Matrix2cd& u : {Eigen::Matrix2cd(fcs::rz(z)), Eigen::Matrix2cd(fcs::rz(z) * fcs::ry(kPi))}) {
      const auto a = fcs::zyz_decompose(u);
      EXPECT_EQ(a.z2, 0.0);
      EXPECT_LE((fcs::zyz_compose(a) - u).norm(), 1e-12);
    }
  }
}

TEST(Shots, StringRoundTrip) {
  EXPECT_EQ(fcs::shot_to_string(0b0101, 4), "0101");
  EXPECT_EQ(fcs::parse_shot("0101", 4), 0b0101u);
  EXPECT_THROW(fcs::parse_shot("010", 4), fcs::InputError);
  EXPECT_THROW(fcs::parse_shot("01a1", 4), fcs::InputError);
  for (fcs::Shot s = 0; s < 64; ++s) EXPECT_EQ(fcs::parse_shot(fcs::shot_to_string(s, 6), 6), s);
}

TEST(Acquire, IdentityHookOnAllUp) {
  fcs::AcquireOptions opts;
  opts.identity_unitaries = true;
  const auto data = fcs::acquire_dataset(StateVector::basis(5, 0), 20, 30, 9, opts);
  data.validate();
  for (const auto& rec : data.records) {
    for (fcs::Shot s : rec.shots) EXPECT_EQ(fcs::shot_to_string(s, 5), "00000");
  }
  const auto h = fcs::uniformity_histogram(data);
  for (const auto& site : h.per_site) {
    EXPECT_EQ(site[30], 20);
    for (int m = 0; m < 30; ++m) EXPECT_EQ(site[static_cast<std::size_t>(m)], 0);
  }
  EXPECT_EQ(h.pooled[30], 100);
}

TEST(Acquire, CaseOneDimensions) {
  const auto data = fcs::acquire_dataset(fcs::prepare_neel(10), 500, 150, 1);
  data.validate();
  EXPECT_EQ(data.records.size(), 500u);
  for (const auto& rec : data.records) {
    EXPECT_EQ(rec.shots.size(), 150u);
    EXPECT_EQ(rec.unitaries.size(), 10u);
  }
}

TEST(Acquire, ReproducibleAcrossThreadCounts) {
  std::mt19937_64 g(8);
  const StateVector psi(6, ft::random_state(6, g));
  fcs::AcquireOptions one;
  one.threads = 1;
  fcs::AcquireOptions four;
  four.threads = 4;
  const auto a = fcs::acquire_dataset(psi, 64, 20, 77, one);
  const auto b = fcs::acquire_dataset(psi, 64, 20, 77, four);
  const auto c = fcs::acquire_dataset(psi, 64, 20, 78, one);
  bool any_difference = false;
  for (std::size_t r = 0; r < a.records.size(); ++r) {
    EXPECT_EQ(a.records[r].shots, b.records[r].shots);
    any_difference = any_difference || a.records[r].shots != c.records[r].shots;
    for (std::size_t s = 0; s < 6; ++s) {
      EXPECT_EQ(a.records[r].unitaries[s].matrix, b.records[r].unitaries[s].matrix);
    }
  }
  EXPECT_TRUE(any_difference);
}

TEST(Acquire, PureAndMixedRoutesAgree) {
  std::mt19937_64 g(12);
  const StateVector psi(4, ft::random_state(4, g));
  const auto a = fcs::acquire_dataset(psi, 100, 50, 5);
  const auto b = fcs::acquire_dataset(DensityMatrix::from_pure(psi), 100, 50, 5);
  long long same = 0;
  long long total = 0;
  for (std::size_t r = 0; r < a.records.size(); ++r) {
    EXPECT_EQ(a.records[r].unitaries[0].matrix, b.records[r].unitaries[0].matrix);
    for (std::size_t m = 0; m < 50; ++m) {
      same += a.records[r].shots[m] == b.records[r].shots[m];
      ++total;
    }
  }
  EXPECT_GE(static_cast<double>(same) / static_cast<double>(total), 0.999);
  EXPECT_THROW(fcs::acquire_dataset(DensityMatrix({2}, Eigen::Matrix2cd::Identity() * 0.5), 1, 1, 1),
               fcs::InputError);
}

/// Outcome probabilities of one record computed with dense Kronecker products.
Eigen::VectorXd record_probabilities(const Eigen::VectorXcd& psi, const fcs::MeasurementRecord& rec) {
  std::vector<Eigen::MatrixXcd> factors;
  for (const auto& u : rec.unitaries) factors.push_back(u.matrix);
  return (ft::kron_all(factors) * psi).cwiseAbs2();
}

TEST(Acquire, ShotFrequenciesMatchBornRule) {
  std::mt19937_64 g(13);
  const StateVector psi(2, ft::random_state(2, g));
  const int n_m = 100000;
  const auto data = fcs::acquire_dataset(psi, 3, n_m, 21);
  for (const auto& rec : data.records) {
    const Eigen::VectorXd p = record_probabilities(psi.amplitudes(), rec);
    std::vector<double> counts(4, 0.0);
    for (fcs::Shot s : rec.shots) counts[s] += 1.0;
    double chi2 = 0.0;
    int bins = 0;
    for (int k = 0; k < 4; ++k) {
      const double expected = p(k) * n_m;
      if (expected < 1e-9) continue;
      chi2 += (counts[static_cast<std::size_t>(k)] - expected) * (counts[static_cast<std::size_t>(k)] - expected) / expected;
      ++bins;
    }
    EXPECT_GT(boost::math::gamma_q((bins - 1) / 2.0, chi2 / 2.0), 1e-3);
  }
}

TEST(Acquire, TotalVariationBound) {
  std::mt19937_64 g(14);
  for (int n = 1; n <= 4; ++n) {
    const StateVector psi(n, ft::random_state(n, g));
    const int n_m = 20000;
    const auto data = fcs::acquire_dataset(psi, 5, n_m, 100 + static_cast<std::uint64_t>(n));
    for (const auto& rec : data.records) {
      const Eigen::VectorXd p = record_probabilities(psi.amplitudes(), rec);
      Eigen::VectorXd freq = Eigen::VectorXd::Zero(p.size());
      for (fcs::Shot s : rec.shots) freq(s) += 1.0 / n_m;
      const double tv = 0.5 * (freq - p).cwiseAbs().sum();
      EXPECT_LE(tv, 5.0 * std::sqrt(static_cast<double>(p.size()) / n_m));
    }
  }
}

TEST(Acquire, MixedStateProbabilities) {
  std::mt19937_64 g(15);
  const DensityMatrix rho({1, 2, 3}, ft::random_density_matrix(3, g));
  const int n_m = 50000;
  const auto data = fcs::acquire_dataset(rho, 2, n_m, 3);
  for (const auto& rec : data.records) {
    std::vector<Eigen::MatrixXcd> factors;
    for (const auto& u : rec.unitaries) factors.push_back(u.matrix);
    const Eigen::MatrixXcd uu = ft::kron_all(factors);
    const Eigen::VectorXd p = (uu * rho.entries() * uu.adjoint()).diagonal().real();
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(8);
    for (fcs::Shot s : rec.shots) freq(s) += 1.0 / n_m;
    EXPECT_LE(0.5 * (freq - p).cwiseAbs().sum(), 5.0 * std::sqrt(8.0 / n_m));
  }
}

TEST(Acquire, RejectsBadSizes) {
  EXPECT_THROW(fcs::acquire_dataset(fcs::prepare_neel(3), 0, 5, 1), fcs::InputError);
  EXPECT_THROW(fcs::acquire_dataset(fcs::prepare_neel(3), 5, 0, 1), fcs::InputError);
}

TEST(Dataset, ValidateCatchesInconsistencies) {
  auto data = fcs::acquire_dataset(fcs::prepare_neel(3), 4, 5, 1);
  EXPECT_NO_THROW(data.validate());
  auto bad = data;
  bad.records.pop_back();
  EXPECT_THROW(bad.validate(), fcs::InputError);
  bad = data;
  bad.records[0].shots.push_back(0);
  EXPECT_THROW(bad.validate(), fcs::InputError);
  bad = data;
  bad.records[1].unitaries[0].matrix(0, 0) *= 1.01;
  EXPECT_THROW(bad.validate(), fcs::InputError);
  bad = data;
  bad.records[2].shots[0] = 8;
  EXPECT_THROW(bad.validate(), fcs::InputError);
}

TEST(Uniformity, ProductStateIsFlat) {
  const auto data = fcs::acquire_dataset(fcs::prepare_tilted_ferromagnet(4, 0.3 * kPi), 2000, 30, 2024);
  const auto h = fcs::uniformity_histogram(data);
  EXPECT_EQ(h.pooled.size(), 31u);
  for (const auto& site : h.per_site) {
    long long total = 0;
    for (long long c : site) total += c;
    EXPECT_EQ(total, 2000);
  }
  EXPECT_GT(fcs::flatness_p_value(h.pooled), 1e-3);
}

TEST(Uniformity, EntangledStateIsNotFlat) {
  // Maximally mixed single-site marginals concentrate m near n_m / 2.
  Eigen::VectorXcd bell = Eigen::VectorXcd::Zero(4);
  bell(0) = bell(3) = 1.0 / std::sqrt(2.0);
  const auto data = fcs::acquire_dataset(StateVector(2, bell), 2000, 30, 3);
  EXPECT_LT(fcs::flatness_p_value(fcs::uniformity_histogram(data).pooled), 1e-6);
}

TEST(Uniformity, FlatnessErrors) {
  EXPECT_THROW(fcs::flatness_p_value(std::vector<long long>{5}), fcs::InputError);
  EXPECT_THROW(fcs::flatness_p_value(std::vector<long long>{0, 0}), fcs::InputError);
  EXPECT_NEAR(fcs::flatness_p_value(std::vector<long long>{10, 10, 10}), 1.0, 1e-12);
}

}  // namespace
