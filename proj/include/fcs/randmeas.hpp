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

#pragma once

// Randomized-measurement acquisition: Haar (CUE) single-qubit unitaries,
// their ZYZ Euler form, Born-rule sampling of z-basis bitstrings after the
// local rotations, and the per-site uniformity check of the rotations.

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcs/detail/bits.hpp"
#include "fcs/detail/parallel.hpp"
#include "fcs/errors.hpp"
#include "fcs/spincore.hpp"

namespace fcs {

/// Engine behind every random draw. Its output sequence is fixed by the C++
/// standard, and the distributions below are implemented here rather than via
/// <random> distributions, so datasets are identical across toolchains.
using Rng = std::mt19937_64;

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Two independent standard normals (Box-Muller).
inline std::pair<double, double> normal_pair(Rng& rng) {
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
  const double u2 = uniform01(rng);
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace detail

/// Stream for record r of a dataset with master seed `seed`:
///   mt19937_64(splitmix64(seed ^ splitmix64(r + 1))).
/// Records can therefore be generated in any order or in parallel.
inline Rng record_stream(std::uint64_t seed, std::uint64_t record) {
  return Rng(detail::splitmix64(seed ^ detail::splitmix64(record + 1)));
}

struct ZyzAngles {
  double z1 = 0.0;
  double y = 0.0;
  double z2 = 0.0;
  double global_phase = 0.0;  // u = exp(i global_phase) Rz(z1) Ry(y) Rz(z2)
};

inline Eigen::Matrix2cd rz(double angle) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(0, 0) = std::polar(1.0, -angle / 2.0);
  m(1, 1) = std::polar(1.0, angle / 2.0);
  return m;
}

inline Eigen::Matrix2cd ry(double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  Eigen::Matrix2cd m;
  m << c, -s, s, c;
  return m;
}

inline double unitarity_error(const Eigen::Matrix2cd& u) {
  return (u.adjoint() * u - Eigen::Matrix2cd::Identity()).cwiseAbs().maxCoeff();
}

/// Euler angles with y in [0, pi]. At the gauge points (y = 0 or y = pi) the
/// undetermined combination of z1, z2 is set so that z2 = 0.
inline ZyzAngles zyz_decompose(const Eigen::Matrix2cd& u) {
  if (unitarity_error(u) > 1e-10) throw InputError("zyz_decompose requires a unitary matrix");
  ZyzAngles out;
  out.global_phase = std::arg(u.determinant()) / 2.0;
  const Eigen::Matrix2cd v = u * std::polar(1.0, -out.global_phase);
  const double c = std::abs(v(0, 0));
  const double s = std::abs(v(1, 0));
  out.y = 2.0 * std::atan2(s, c);
  constexpr double kDegenerate = 1e-14;
  const bool has_sum = c > kDegenerate;
  const bool has_diff = s > kDegenerate;
  const double sum = has_sum ? 2.0 * std::arg(v(1, 1)) : 0.0;   // z1 + z2
  const double diff = has_diff ? 2.0 * std::arg(v(1, 0)) : 0.0; // z1 - z2
  if (has_sum && has_diff) {
    out.z1 = (sum + diff) / 2.0;
    out.z2 = (sum - diff) / 2.0;
  } else {
    out.z1 = has_sum ? sum : diff;
    out.z2 = 0.0;
  }
  return out;
}

inline Eigen::Matrix2cd zyz_compose(const ZyzAngles& a) {
  return std::polar(1.0, a.global_phase) * rz(a.z1) * ry(a.y) * rz(a.z2);
}

/// One single-qubit rotation. The matrix is authoritative; the Euler angles
/// are carried for reference only.
struct LocalUnitary {
  Eigen::Matrix2cd matrix = Eigen::Matrix2cd::Identity();
  std::optional<ZyzAngles> angles;

  static LocalUnitary from_matrix(const Eigen::Matrix2cd& m) {
    if (unitarity_error(m) > 1e-12) throw InputError("local rotation is not unitary");
    return {m, zyz_decompose(m)};
  }
};

/// Haar-random 2x2 unitary: QR of a complex Ginibre matrix with the phases of
/// diag(R) moved into Q so that the result is exactly CUE distributed.
inline LocalUnitary sample_cue_unitary(Rng& rng) {
  Eigen::Matrix2cd z;
  const double scale = std::numbers::sqrt2 / 2.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const auto [re, im] = detail::normal_pair(rng);
      z(r, c) = cplx(re, im) * scale;
    }
  }
  Eigen::HouseholderQR<Eigen::Matrix2cd> qr(z);
  Eigen::Matrix2cd q = qr.householderQ();
  const Eigen::Matrix2cd& packed = qr.matrixQR();
  for (int k = 0; k < 2; ++k) {
    const cplx diag = packed(k, k);
    const double mag = std::abs(diag);
    q.col(k) *= mag > 0.0 ? diag / mag : cplx(1.0);
  }
  return {q, zyz_decompose(q)};
}

/// Computational-basis index of a measured bitstring (site 1 = most significant bit).
using Shot = std::uint32_t;

/// '0' is spin up, '1' spin down; character k is site k + 1.
inline std::string shot_to_string(Shot shot, int n_qubits) {
  std::string out(static_cast<std::size_t>(n_qubits), '0');
  for (int s = 1; s <= n_qubits; ++s) {
    if (detail::bit_at(shot, n_qubits, s)) out[static_cast<std::size_t>(s - 1)] = '1';
  }
  return out;
}

inline Shot parse_shot(std::string_view text, int n_qubits) {
  if (static_cast<int>(text.size()) != n_qubits) {
    throw InputError("bitstring length " + std::to_string(text.size()) + " differs from n_qubits=" +
                     std::to_string(n_qubits));
  }
  Shot shot = 0;
  for (char ch : text) {
    if (ch != '0' && ch != '1') throw InputError("bitstring characters must be 0 or 1");
    shot = (shot << 1) | static_cast<Shot>(ch == '1');
  }
  return shot;
}

struct MeasurementRecord {
  std::vector<LocalUnitary> unitaries;  // one per site, site 1 first
  std::vector<Shot> shots;
};

struct DatasetMetadata {
  int n_qubits = 0;
  int n_u = 0;
  int n_m = 0;
  std::uint64_t seed = 0;
  std::string state_descriptor;
  double time_ms = 0.0;
};

struct RandomizedDataset {
  DatasetMetadata metadata;
  std::vector<MeasurementRecord> records;

  void validate() const {
    const auto& md = metadata;
    if (md.n_qubits < 1 || md.n_qubits > kMaxQubits) throw InputError("dataset n_qubits out of range");
    if (md.n_u < 1 || md.n_m < 1) throw InputError("dataset needs n_u >= 1 and n_m >= 1");
    if (static_cast<int>(records.size()) != md.n_u) throw InputError("record count differs from n_u");
    const Shot limit = Shot{1} << md.n_qubits;
    for (const auto& rec : records) {
      if (static_cast<int>(rec.unitaries.size()) != md.n_qubits) {
        throw InputError("record does not carry one rotation per site");
      }
      if (static_cast<int>(rec.shots.size()) != md.n_m) throw InputError("record shot count differs from n_m");
      for (const auto& u : rec.unitaries) {
        if (unitarity_error(u.matrix) > 1e-12) throw InputError("stored rotation is not unitary");
      }
      for (Shot s : rec.shots) {
        if (s >= limit) throw InputError("shot index exceeds register size");
      }
    }
  }
};

struct AcquireOptions {
  unsigned threads = 0;            // 0: FCS_THREADS or hardware concurrency
  bool identity_unitaries = false; // test hook: measure in the bare z basis
  std::string state_descriptor;
  double time_ms = 0.0;
};

namespace detail {

inline std::vector<Shot> sample_shots(const Eigen::VectorXd& probabilities, int n_m, Rng& rng) {
  std::vector<double> cumulative(static_cast<std::size_t>(probabilities.size()));
  double running = 0.0;
  for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
    running += std::max(0.0, probabilities(i));
    cumulative[static_cast<std::size_t>(i)] = running;
  }
  std::vector<Shot> shots(static_cast<std::size_t>(n_m));
  for (auto& shot : shots) {
    const double target = uniform01(rng) * running;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
    // upper_bound skips zero-probability outcomes; target < running, so `end`
    // can only come from round-off.
    if (it == cumulative.end()) --it;
    shot = static_cast<Shot>(it - cumulative.begin());
  }
  return shots;
}

inline std::vector<LocalUnitary> draw_rotations(int n_qubits, bool identity, Rng& rng) {
  std::vector<LocalUnitary> out;
  out.reserve(static_cast<std::size_t>(n_qubits));
  for (int s = 0; s < n_qubits; ++s) {
    out.push_back(identity ? LocalUnitary{Eigen::Matrix2cd::Identity(), ZyzAngles{}} : sample_cue_unitary(rng));
  }
  return out;
}

template <class ProbabilitiesFn>
RandomizedDataset acquire(int n_qubits, int n_u, int n_m, std::uint64_t seed, const AcquireOptions& options,
                          ProbabilitiesFn&& probabilities_for) {
  if (n_u < 1 || n_m < 1) throw InputError("acquisition needs n_u >= 1 and n_m >= 1");
  RandomizedDataset data;
  data.metadata = {n_qubits, n_u, n_m, seed, options.state_descriptor, options.time_ms};
  data.records.resize(static_cast<std::size_t>(n_u));
  parallel_for(data.records.size(), options.threads, [&](std::size_t r) {
    Rng rng = record_stream(seed, r);
    auto& rec = data.records[r];
    rec.unitaries = draw_rotations(n_qubits, options.identity_unitaries, rng);
    rec.shots = sample_shots(probabilities_for(rec.unitaries), n_m, rng);
  });
  return data;
}

}  // namespace detail

/// Measures `state` in n_u random local bases, n_m shots each. Bit-for-bit
/// reproducible from (state, n_u, n_m, seed) regardless of thread count.
inline RandomizedDataset acquire_dataset(const StateVector& state, int n_u, int n_m, std::uint64_t seed,
                                         const AcquireOptions& options = {}) {
  const int n = state.n_qubits();
  return detail::acquire(n, n_u, n_m, seed, options, [&](const std::vector<LocalUnitary>& rotations) {
    Eigen::VectorXcd v = state.amplitudes();
    for (int s = 1; s <= n; ++s) detail::apply_to_vector(v, n, s, rotations[static_cast<std::size_t>(s - 1)].matrix);
    return Eigen::VectorXd(v.cwiseAbs2());
  });
}

/// Mixed-state variant; probabilities are the diagonal of U rho U^dagger.
/// rho must cover the full register (sites 1..N in order).
inline RandomizedDataset acquire_dataset(const DensityMatrix& rho, int n_u, int n_m, std::uint64_t seed,
                                         const AcquireOptions& options = {}) {
  const int n = rho.n_sites();
  for (int s = 1; s <= n; ++s) {
    if (rho.sites()[static_cast<std::size_t>(s - 1)] != s) {
      throw InputError("acquisition needs a density matrix on sites 1..N");
    }
  }
  return detail::acquire(n, n_u, n_m, seed, options, [&](const std::vector<LocalUnitary>& rotations) {
    Eigen::MatrixXcd m = rho.entries();
    for (int s = 1; s <= n; ++s) {
      const auto& u = rotations[static_cast<std::size_t>(s - 1)].matrix;
      detail::apply_left(m, n, s, u);
      detail::apply_right_adjoint(m, n, s, u);
    }
    return Eigen::VectorXd(m.diagonal().real());
  });
}

/// Counts, per site and pooled over sites, how many records saw m up outcomes
/// (bit 0) among their n_m shots, m = 0..n_m.
struct UniformityHistogram {
  int n_m = 0;
  std::vector<std::vector<long long>> per_site;  // [site - 1][m]
  std::vector<long long> pooled;                 // [m]
};

inline UniformityHistogram uniformity_histogram(const RandomizedDataset& data) {
  const auto& md = data.metadata;
  if (data.records.empty()) throw InputError("dataset has no records");
  UniformityHistogram h;
  h.n_m = md.n_m;
  h.per_site.assign(static_cast<std::size_t>(md.n_qubits), std::vector<long long>(static_cast<std::size_t>(md.n_m) + 1, 0));
  h.pooled.assign(static_cast<std::size_t>(md.n_m) + 1, 0);
  for (const auto& rec : data.records) {
    for (int s = 1; s <= md.n_qubits; ++s) {
      int ups = 0;
      for (Shot shot : rec.shots) ups += detail::bit_at(shot, md.n_qubits, s) == 0;
      ++h.per_site[static_cast<std::size_t>(s - 1)][static_cast<std::size_t>(ups)];
      ++h.pooled[static_cast<std::size_t>(ups)];
    }
  }
  return h;
}

/// Upper-tail p-value of Pearson's chi-square statistic against a flat
/// distribution over the histogram bins.
inline double flatness_p_value(std::span<const long long> counts) {
  if (counts.size() < 2) throw InputError("flatness test needs at least two bins");
  double total = 0.0;
  for (long long c : counts) total += static_cast<double>(c);
  if (total <= 0.0) throw InputError("empty histogram");
  const double expected = total / static_cast<double>(counts.size());
  double statistic = 0.0;
  for (long long c : counts) {
    const double d = static_cast<double>(c) - expected;
    statistic += d * d / expected;
  }
  const double dof = static_cast<double>(counts.size() - 1);
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

}  // namespace fcs
