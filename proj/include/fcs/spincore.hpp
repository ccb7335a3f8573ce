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

// Dense linear algebra for small spin-1/2 registers: pure states, density
// matrices on site subsets, partial traces and Pauli observables.
//
// Conventions: sites are 1-based; site 1 is the most significant bit of the
// computational index; bit 0 is spin up, the +1 eigenstate of sigma^z.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcs/detail/bits.hpp"
#include "fcs/errors.hpp"

namespace fcs {

using cplx = std::complex<double>;

/// Largest register the dense representation accepts.
inline constexpr int kMaxQubits = 14;

enum class Axis { x, y, z };

inline constexpr Axis kAllAxes[] = {Axis::x, Axis::y, Axis::z};

inline std::string_view to_string(Axis axis) {
  switch (axis) {
    case Axis::x: return "x";
    case Axis::y: return "y";
    case Axis::z: return "z";
  }
  return "?";
}

inline Axis parse_axis(std::string_view text) {
  if (text == "x" || text == "X") return Axis::x;
  if (text == "y" || text == "Y") return Axis::y;
  if (text == "z" || text == "Z") return Axis::z;
  throw InputError("unknown axis '" + std::string(text) + "' (expected x, y or z)");
}

inline Eigen::Matrix2cd pauli(Axis axis) {
  using namespace std::complex_literals;
  Eigen::Matrix2cd m;
  switch (axis) {
    case Axis::x: m << 0.0, 1.0, 1.0, 0.0; break;
    case Axis::y: m << 0.0, -1.0i, 1.0i, 0.0; break;
    case Axis::z: m << 1.0, 0.0, 0.0, -1.0; break;
  }
  return m;
}

/// Columns are the +1 and -1 eigenvectors of sigma^axis, in that order.
inline Eigen::Matrix2cd eigenbasis(Axis axis) {
  using namespace std::complex_literals;
  const double h = std::numbers::sqrt2 / 2.0;
  Eigen::Matrix2cd m;
  switch (axis) {
    case Axis::x: m << h, h, h, -h; break;
    case Axis::y: m << h, h, h * 1.0i, -h * 1.0i; break;
    case Axis::z: m << 1.0, 0.0, 0.0, 1.0; break;
  }
  return m;
}

/// Pure state of n qubits; unit norm is enforced on construction.
class StateVector {
 public:
  static constexpr double kNormTolerance = 1e-12;

  StateVector(int n_qubits, Eigen::VectorXcd amplitudes)
      : n_qubits_(n_qubits), amplitudes_(std::move(amplitudes)) {
    if (n_qubits_ < 1) throw InputError("state needs at least one qubit");
    if (n_qubits_ > kMaxQubits) {
      throw CapacityError("state of " + std::to_string(n_qubits_) +
                          " qubits exceeds the dense limit of " + std::to_string(kMaxQubits));
    }
    if (static_cast<std::size_t>(amplitudes_.size()) != detail::dim_of(n_qubits_)) {
      throw InputError("amplitude count does not match 2^n_qubits");
    }
    if (std::abs(amplitudes_.squaredNorm() - 1.0) > kNormTolerance) {
      throw InputError("state is not normalized");
    }
  }

  static StateVector basis(int n_qubits, std::size_t index) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) throw CapacityError("bad register size");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(detail::dim_of(n_qubits)));
    if (index >= detail::dim_of(n_qubits)) throw InputError("basis index out of range");
    v(static_cast<Eigen::Index>(index)) = 1.0;
    return {n_qubits, std::move(v)};
  }

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return detail::dim_of(n_qubits_); }
  const Eigen::VectorXcd& amplitudes() const { return amplitudes_; }

 private:
  int n_qubits_;
  Eigen::VectorXcd amplitudes_;
};

/// Strictly increasing, non-empty list of 1-based site indices.
class SubsystemSpec {
 public:
  explicit SubsystemSpec(std::vector<int> sites) : sites_(std::move(sites)) {
    if (sites_.empty()) throw InputError("subsystem must contain at least one site");
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (sites_[i] < 1) throw InputError("site indices are 1-based");
      if (i > 0 && sites_[i] <= sites_[i - 1]) {
        throw InputError("subsystem sites must be strictly increasing without duplicates");
      }
    }
  }

  /// Inclusive range [first, last].
  static SubsystemSpec range(int first, int last) {
    if (last < first) throw InputError("empty site range");
    std::vector<int> sites;
    for (int s = first; s <= last; ++s) sites.push_back(s);
    return SubsystemSpec(std::move(sites));
  }

  static SubsystemSpec all(int n_qubits) { return range(1, n_qubits); }

  /// Throws unless every site lies in [1, n_qubits].
  void validate(int n_qubits) const {
    if (sites_.back() > n_qubits) {
      throw InputError("site " + std::to_string(sites_.back()) + " outside system of " +
                       std::to_string(n_qubits) + " sites");
    }
  }

  const std::vector<int>& sites() const { return sites_; }
  int size() const { return static_cast<int>(sites_.size()); }
  /// 1-based position of `site` inside this subsystem, or 0 when absent.
  int position_of(int site) const {
    auto it = std::lower_bound(sites_.begin(), sites_.end(), site);
    return (it != sites_.end() && *it == site) ? static_cast<int>(it - sites_.begin()) + 1 : 0;
  }
  bool operator==(const SubsystemSpec&) const = default;

  std::string to_string() const {
    std::string out;
    for (std::size_t i = 0; i < sites_.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(sites_[i]);
    }
    return out;
  }

 private:
  std::vector<int> sites_;
};

/// Hermitian, unit-trace, positive semidefinite operator on an ordered site list.
/// The first listed site is the most significant bit of the local index.
class DensityMatrix {
 public:
  static constexpr double kHermitianTolerance = 1e-12;
  static constexpr double kTraceTolerance = 1e-12;
  static constexpr double kEigenvalueFloor = -1e-10;

  /// Checks Hermiticity and trace; positivity is checked by verify().
  DensityMatrix(std::vector<int> sites, Eigen::MatrixXcd entries)
      : sites_(std::move(sites)), entries_(std::move(entries)) {
    if (sites_.empty()) throw InputError("density matrix needs at least one site");
    if (static_cast<int>(sites_.size()) > kMaxQubits) {
      throw CapacityError("density matrix exceeds the dense limit");
    }
    const auto dim = static_cast<Eigen::Index>(detail::dim_of(static_cast<int>(sites_.size())));
    if (entries_.rows() != dim || entries_.cols() != dim) {
      throw InputError("density matrix dimension does not match its site list");
    }
    if (hermiticity_error() > kHermitianTolerance * std::max(1.0, entries_.norm())) {
      throw InputError("density matrix is not Hermitian");
    }
    if (std::abs(entries_.trace() - cplx(1.0)) > kTraceTolerance) {
      throw InputError("density matrix trace differs from 1");
    }
  }

  static DensityMatrix from_pure(const StateVector& psi) {
    std::vector<int> sites(static_cast<std::size_t>(psi.n_qubits()));
    for (int s = 0; s < psi.n_qubits(); ++s) sites[static_cast<std::size_t>(s)] = s + 1;
    return {std::move(sites), psi.amplitudes() * psi.amplitudes().adjoint()};
  }

  const std::vector<int>& sites() const { return sites_; }
  int n_sites() const { return static_cast<int>(sites_.size()); }
  std::size_t dim() const { return detail::dim_of(n_sites()); }
  const Eigen::MatrixXcd& entries() const { return entries_; }

  double hermiticity_error() const { return (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff(); }
  double purity() const { return (entries_ * entries_).trace().real(); }
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(entries_, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
  }
  /// Full invariant check including the eigenvalue floor.
  bool verify() const {
    return hermiticity_error() <= kHermitianTolerance * std::max(1.0, entries_.norm()) &&
           std::abs(entries_.trace() - cplx(1.0)) <= kTraceTolerance &&
           min_eigenvalue() >= kEigenvalueFloor;
  }

 private:
  std::vector<int> sites_;
  Eigen::MatrixXcd entries_;
};

/// Tensor product of single-site Pauli operators; unlisted sites carry identity.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::map<int, Axis> ops) : ops_(std::move(ops)) {
    for (const auto& [site, axis] : ops_) {
      if (site < 1) throw InputError("Pauli string sites are 1-based");
    }
  }
  /// Same axis on every listed site, e.g. a parity string.
  static PauliString uniform(std::span<const int> sites, Axis axis) {
    std::map<int, Axis> ops;
    for (int s : sites) ops.emplace(s, axis);
    return PauliString(std::move(ops));
  }

  const std::map<int, Axis>& ops() const { return ops_; }
  bool is_identity() const { return ops_.empty(); }
  int weight() const { return static_cast<int>(ops_.size()); }

  /// Parses "x1 z2 y5" (axis letter followed by 1-based site).
  static PauliString parse(std::string_view text) {
    std::map<int, Axis> ops;
    std::size_t pos = 0;
    while (pos < text.size()) {
      while (pos < text.size() && (text[pos] == ' ' || text[pos] == ',')) ++pos;
      if (pos >= text.size()) break;
      const Axis axis = parse_axis(text.substr(pos, 1));
      std::size_t end = pos + 1;
      while (end < text.size() && text[end] >= '0' && text[end] <= '9') ++end;
      if (end == pos + 1) throw InputError("Pauli term missing site index");
      const int site = std::stoi(std::string(text.substr(pos + 1, end - pos - 1)));
      if (!ops.emplace(site, axis).second) throw InputError("site repeated in Pauli string");
      pos = end;
    }
    return PauliString(std::move(ops));
  }

 private:
  std::map<int, Axis> ops_;
};

/// cos(alpha) I + i sin(alpha) sigma^axis == exp(i alpha sigma^axis).
inline Eigen::Matrix2cd single_qubit_phase(Axis axis, double alpha) {
  return std::cos(alpha) * Eigen::Matrix2cd::Identity() +
         cplx(0.0, std::sin(alpha)) * pauli(axis);
}

/// Reduced state of `subsystem`; the complement is traced out.
inline DensityMatrix partial_trace(const StateVector& state, const SubsystemSpec& subsystem) {
  const int n = state.n_qubits();
  subsystem.validate(n);
  const int n_a = subsystem.size();
  const int n_b = n - n_a;
  std::vector<std::size_t> a_masks;
  std::vector<std::size_t> b_masks;
  for (int s = 1; s <= n; ++s) {
    (subsystem.position_of(s) ? a_masks : b_masks).push_back(detail::site_mask(n, s));
  }
  // Reshape amplitudes into M[a, b] so that rho_A = M M^dagger.
  const auto dim_a = static_cast<Eigen::Index>(detail::dim_of(n_a));
  const auto dim_b = static_cast<Eigen::Index>(detail::dim_of(n_b));
  Eigen::MatrixXcd reshaped(dim_a, dim_b);
  const auto& amps = state.amplitudes();
  for (Eigen::Index a = 0; a < dim_a; ++a) {
    std::size_t base = 0;
    for (int k = 0; k < n_a; ++k) {
      if (detail::bit_at(static_cast<std::size_t>(a), n_a, k + 1)) base |= a_masks[static_cast<std::size_t>(k)];
    }
    for (Eigen::Index b = 0; b < dim_b; ++b) {
      std::size_t index = base;
      for (int k = 0; k < n_b; ++k) {
        if (detail::bit_at(static_cast<std::size_t>(b), n_b, k + 1)) index |= b_masks[static_cast<std::size_t>(k)];
      }
      reshaped(a, b) = amps(static_cast<Eigen::Index>(index));
    }
  }
  Eigen::MatrixXcd rho = reshaped * reshaped.adjoint();
  // Exact Hermitian symmetrization removes product round-off.
  rho = 0.5 * (rho + rho.adjoint()).eval();
  rho /= rho.trace().real();
  return {subsystem.sites(), std::move(rho)};
}

/// Reduced state of a density matrix onto a subset of its own sites.
inline DensityMatrix partial_trace(const DensityMatrix& rho, const SubsystemSpec& subsystem) {
  const int n = rho.n_sites();
  std::vector<int> keep_pos;
  for (int s : subsystem.sites()) {
    auto it = std::find(rho.sites().begin(), rho.sites().end(), s);
    if (it == rho.sites().end()) {
      throw InputError("site " + std::to_string(s) + " not present in density matrix");
    }
    keep_pos.push_back(static_cast<int>(it - rho.sites().begin()) + 1);
  }
  std::vector<int> drop_pos;
  for (int p = 1; p <= n; ++p) {
    if (std::find(keep_pos.begin(), keep_pos.end(), p) == keep_pos.end()) drop_pos.push_back(p);
  }
  const int n_a = static_cast<int>(keep_pos.size());
  const int n_b = static_cast<int>(drop_pos.size());
  auto compose = [&](std::size_t a, std::size_t b) {
    std::size_t index = 0;
    for (int k = 0; k < n_a; ++k) {
      if (detail::bit_at(a, n_a, k + 1)) index |= detail::site_mask(n, keep_pos[static_cast<std::size_t>(k)]);
    }
    for (int k = 0; k < n_b; ++k) {
      if (detail::bit_at(b, n_b, k + 1)) index |= detail::site_mask(n, drop_pos[static_cast<std::size_t>(k)]);
    }
    return static_cast<Eigen::Index>(index);
  };
  const std::size_t dim_a = detail::dim_of(n_a);
  const std::size_t dim_b = detail::dim_of(n_b);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim_a), static_cast<Eigen::Index>(dim_a));
  const auto& m = rho.entries();
  for (std::size_t a = 0; a < dim_a; ++a) {
    for (std::size_t a2 = 0; a2 < dim_a; ++a2) {
      cplx sum = 0.0;
      for (std::size_t b = 0; b < dim_b; ++b) sum += m(compose(a, b), compose(a2, b));
      out(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(a2)) = sum;
    }
  }
  out = 0.5 * (out + out.adjoint()).eval();
  return {subsystem.sites(), std::move(out)};
}

/// Projector onto the eigenvalue-q eigenspace of S^axis = sum_j sigma_j^axis on
/// n_a sites. The spectrum is {-n_a, -n_a + 2, ..., n_a}.
inline Eigen::MatrixXcd magnetization_projector(int n_a, Axis axis, int q) {
  if (n_a < 1 || n_a > kMaxQubits) throw InputError("subsystem size out of range");
  if (q < -n_a || q > n_a || (n_a - q) % 2 != 0) {
    throw InputError("q=" + std::to_string(q) + " is not an eigenvalue of S^" +
                     std::string(to_string(axis)) + " on " + std::to_string(n_a) + " sites");
  }
  const auto dim = static_cast<Eigen::Index>(detail::dim_of(n_a));
  // Rotation whose columns are product eigenvectors, labelled like basis states.
  Eigen::MatrixXcd rotation = Eigen::MatrixXcd::Identity(dim, dim);
  const Eigen::Matrix2cd basis = eigenbasis(axis);
  for (int p = 1; p <= n_a; ++p) detail::apply_left(rotation, n_a, p, basis);
  Eigen::MatrixXcd projector = Eigen::MatrixXcd::Zero(dim, dim);
  for (Eigen::Index b = 0; b < dim; ++b) {
    if (detail::magnetization_of(static_cast<std::size_t>(b), n_a) == q) {
      projector += rotation.col(b) * rotation.col(b).adjoint();
    }
  }
  return projector;
}

/// Tr(rho P). Every site of the observable must belong to rho.
inline double expectation(const DensityMatrix& rho, const PauliString& observable) {
  const int n = rho.n_sites();
  std::size_t flip = 0;
  std::size_t z_like = 0;   // sites contributing a sign from the ket bit
  std::size_t y_sites = 0;
  for (const auto& [site, axis] : observable.ops()) {
    auto it = std::find(rho.sites().begin(), rho.sites().end(), site);
    if (it == rho.sites().end()) {
      throw InputError("observable site " + std::to_string(site) + " not in density matrix");
    }
    const std::size_t mask = detail::site_mask(n, static_cast<int>(it - rho.sites().begin()) + 1);
    if (axis != Axis::z) flip |= mask;
    if (axis != Axis::x) z_like |= mask;
    if (axis == Axis::y) y_sites |= mask;
  }
  // P|b> = phase(b) |b ^ flip>, so Tr(rho P) = sum_b rho[b, b ^ flip] phase(b).
  // sigma^y|0> = i|1>, sigma^y|1> = -i|0>; sigma^z|1> = -|1>.
  const int n_y = std::popcount(static_cast<std::uint64_t>(y_sites));
  const cplx y_phase = std::pow(cplx(0.0, 1.0), n_y);
  const auto& m = rho.entries();
  cplx sum = 0.0;
  for (std::size_t b = 0; b < rho.dim(); ++b) {
    const int minus = std::popcount(static_cast<std::uint64_t>(b & z_like));
    const double sign = (minus % 2) ? -1.0 : 1.0;
    sum += m(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b ^ flip)) * sign;
  }
  return (sum * y_phase).real();
}

inline double expectation(const StateVector& psi, const PauliString& observable) {
  for (const auto& [site, axis] : observable.ops()) SubsystemSpec({site}).validate(psi.n_qubits());
  Eigen::VectorXcd v = psi.amplitudes();
  for (const auto& [site, axis] : observable.ops()) {
    detail::apply_to_vector(v, psi.n_qubits(), site, pauli(axis));
  }
  return psi.amplitudes().dot(v).real();
}

}  // namespace fcs
