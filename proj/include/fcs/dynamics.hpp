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

// Quench dynamics: initial-state preparation, the long-range XY Hamiltonian,
// exact evolution through a cached eigendecomposition, and the single-site
// noise channels used to model imperfect preparation and decoherence.
//
// Units: couplings are angular frequencies in rad/s, times enter in ms.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "fcs/detail/bits.hpp"
#include "fcs/detail/lapack.hpp"
#include "fcs/errors.hpp"
#include "fcs/spincore.hpp"

namespace fcs {

struct QuenchConfig {
  int n_qubits = 10;
  double j0 = 420.0;        // rad/s
  double alpha_exp = 1.24;  // power-law exponent of the coupling decay
  std::vector<double> times_ms{0.0};

  void validate() const {
    if (n_qubits > kMaxQubits) {
      throw CapacityError("n_qubits=" + std::to_string(n_qubits) + " exceeds the dense limit of " +
                          std::to_string(kMaxQubits));
    }
    if (n_qubits < 2) throw InputError("quench needs at least two qubits");
    if (!(j0 > 0.0)) throw InputError("j0 must be positive");
    if (!(alpha_exp >= 0.0)) throw InputError("alpha_exp must be non-negative");
    for (double t : times_ms) {
      if (!(t >= 0.0)) throw InputError("evolution times must be non-negative");
    }
  }
};

enum class InitialKind { neel, tilted_ferromagnet };

struct InitialStateSpec {
  InitialKind kind = InitialKind::neel;
  double theta = 0.0;                // radians, tilted ferromagnet only
  std::vector<double> bitflip_rates; // empty: ideal preparation

  void validate(int n_qubits) const {
    if (kind == InitialKind::tilted_ferromagnet && !(theta >= 0.0 && theta <= std::numbers::pi)) {
      throw InputError("theta must lie in [0, pi]");
    }
    if (!bitflip_rates.empty() && static_cast<int>(bitflip_rates.size()) != n_qubits) {
      throw InputError("need one bit-flip rate per site");
    }
    for (double p : bitflip_rates) {
      if (!(p >= 0.0 && p <= 0.5)) throw InputError("bit-flip rates must lie in [0, 0.5]");
    }
  }
};

/// Bit-flip rates learned for the ten-ion Neel preparation, sites 1..10.
inline const std::vector<double>& reference_neel_bitflip_rates() {
  static const std::vector<double> rates{0.019, 0.012, 0.041, 0.038, 0.034,
                                         0.015, 0.007, 0.047, 0.002, 0.034};
  return rates;
}

/// Dense real-symmetric Hamiltonian with its eigendecomposition cached at
/// construction. Immutable afterwards, so concurrent evolve() calls are safe.
class Hamiltonian {
 public:
  /// Takes ownership of a real symmetric matrix on n_qubits sites and diagonalizes it.
  static Hamiltonian from_matrix(int n_qubits, Eigen::MatrixXd matrix) {
    if (n_qubits < 1 || n_qubits > kMaxQubits) throw CapacityError("register size out of range");
    const auto dim = static_cast<Eigen::Index>(detail::dim_of(n_qubits));
    if (matrix.rows() != dim || matrix.cols() != dim) throw InputError("matrix dimension mismatch");
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, matrix.norm())) {
      throw InputError("Hamiltonian matrix is not symmetric");
    }
    Hamiltonian h;
    h.n_qubits_ = n_qubits;
    h.matrix_ = std::move(matrix);
    detail::symmetric_eigen(h.matrix_, h.energies_, h.eigenvectors_);
    return h;
  }

  int n_qubits() const { return n_qubits_; }
  std::size_t dim() const { return detail::dim_of(n_qubits_); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  /// Ascending eigenvalues in rad/s.
  const Eigen::VectorXd& energies() const { return energies_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }

  double energy(const StateVector& psi) const {
    const Eigen::VectorXcd h_psi = matrix_.cast<cplx>() * psi.amplitudes();
    return psi.amplitudes().dot(h_psi).real();
  }

 private:
  Hamiltonian() = default;
  int n_qubits_ = 0;
  Eigen::MatrixXd matrix_;
  Eigen::VectorXd energies_;
  Eigen::MatrixXd eigenvectors_;
};

/// H = sum_{i>j} J0 / (2 |i-j|^alpha) (X_i X_j + Y_i Y_j). In the z basis the
/// pair term only swaps antiparallel spins: <..01..| (XX+YY)/2 |..10..> = 1,
/// so the matrix is real and conserves total S^z.
inline Hamiltonian build_xy_hamiltonian(const QuenchConfig& config) {
  config.validate();
  const int n = config.n_qubits;
  const auto dim = static_cast<Eigen::Index>(detail::dim_of(n));
  Eigen::MatrixXd matrix = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 1; i <= n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      const double coupling = config.j0 / std::pow(static_cast<double>(j - i), config.alpha_exp);
      const std::size_t mi = detail::site_mask(n, i);
      const std::size_t mj = detail::site_mask(n, j);
      for (std::size_t b = 0; b < detail::dim_of(n); ++b) {
        if (((b & mi) != 0) != ((b & mj) != 0)) {
          matrix(static_cast<Eigen::Index>(b ^ mi ^ mj), static_cast<Eigen::Index>(b)) += coupling;
        }
      }
    }
  }
  return Hamiltonian::from_matrix(n, std::move(matrix));
}

/// |up down up down ...>, spin up on site 1.
inline StateVector prepare_neel(int n) {
  if (n < 1) throw InputError("need at least one site");
  if (n > kMaxQubits) throw CapacityError("register exceeds the dense limit");
  std::size_t index = 0;
  for (int s = 2; s <= n; s += 2) index |= detail::site_mask(n, s);
  return StateVector::basis(n, index);
}

/// exp(i theta/2 sum_j sigma^y_j) |down ... down>; per site
/// (sin(theta/2), cos(theta/2)) in the (up, down) basis.
inline StateVector prepare_tilted_ferromagnet(int n, double theta) {
  if (n < 1) throw InputError("need at least one site");
  if (n > kMaxQubits) throw CapacityError("register exceeds the dense limit");
  const double up = std::sin(theta / 2.0);
  const double down = std::cos(theta / 2.0);
  const std::size_t dim = detail::dim_of(n);
  Eigen::VectorXcd v(static_cast<Eigen::Index>(dim));
  for (std::size_t b = 0; b < dim; ++b) {
    const int downs = std::popcount(static_cast<std::uint64_t>(b));
    v(static_cast<Eigen::Index>(b)) = std::pow(up, n - downs) * std::pow(down, downs);
  }
  v.normalize();
  return {n, std::move(v)};
}

inline StateVector prepare_initial(const InitialStateSpec& spec, int n) {
  spec.validate(n);
  return spec.kind == InitialKind::neel ? prepare_neel(n) : prepare_tilted_ferromagnet(n, spec.theta);
}

/// exp(-i H t)|psi>, t in milliseconds.
inline StateVector evolve(const StateVector& state, const Hamiltonian& h, double t_ms) {
  if (state.n_qubits() != h.n_qubits()) throw InputError("state and Hamiltonian sizes differ");
  if (!(t_ms >= 0.0)) throw InputError("evolution time must be non-negative");
  if (t_ms == 0.0) return state;
  const double t_s = t_ms * 1e-3;
  const Eigen::MatrixXd& v = h.eigenvectors();
  Eigen::VectorXcd coeffs = v.transpose().cast<cplx>() * state.amplitudes();
  for (Eigen::Index k = 0; k < coeffs.size(); ++k) {
    coeffs(k) *= std::polar(1.0, -h.energies()(k) * t_s);
  }
  Eigen::VectorXcd out = v.cast<cplx>() * coeffs;
  out.normalize();
  return {state.n_qubits(), std::move(out)};
}

/// U(t) rho U(t)^dagger for a density matrix on the full register (sites 1..N).
inline DensityMatrix evolve(const DensityMatrix& rho, const Hamiltonian& h, double t_ms) {
  if (rho.n_sites() != h.n_qubits()) throw InputError("state and Hamiltonian sizes differ");
  if (!(t_ms >= 0.0)) throw InputError("evolution time must be non-negative");
  if (t_ms == 0.0) return rho;
  const double t_s = t_ms * 1e-3;
  const Eigen::MatrixXcd v = h.eigenvectors().cast<cplx>();
  Eigen::MatrixXcd in_eigenbasis = v.adjoint() * rho.entries() * v;
  const auto dim = in_eigenbasis.rows();
  Eigen::VectorXcd phases(dim);
  for (Eigen::Index k = 0; k < dim; ++k) phases(k) = std::polar(1.0, -h.energies()(k) * t_s);
  for (Eigen::Index c = 0; c < dim; ++c) {
    for (Eigen::Index r = 0; r < dim; ++r) in_eigenbasis(r, c) *= phases(r) * std::conj(phases(c));
  }
  Eigen::MatrixXcd out = v * in_eigenbasis * v.adjoint();
  out = 0.5 * (out + out.adjoint()).eval();
  out /= out.trace().real();
  return {rho.sites(), std::move(out)};
}

/// Per site j: rho -> (1 - p_j) rho + p_j X_j rho X_j.
inline DensityMatrix apply_bitflip_channel(const DensityMatrix& rho, std::span<const double> rates) {
  if (static_cast<int>(rates.size()) != rho.n_sites()) {
    throw InputError("need one bit-flip rate per site of the density matrix");
  }
  for (double p : rates) {
    if (!(p >= 0.0 && p <= 0.5)) throw InputError("bit-flip rate outside [0, 0.5]");
  }
  const int n = rho.n_sites();
  Eigen::MatrixXcd m = rho.entries();
  for (int pos = 1; pos <= n; ++pos) {
    const double p = rates[static_cast<std::size_t>(pos - 1)];
    if (p == 0.0) continue;
    const std::size_t mask = detail::site_mask(n, pos);
    Eigen::MatrixXcd flipped(m.rows(), m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) {
        flipped(r, c) = m(static_cast<Eigen::Index>(static_cast<std::size_t>(r) ^ mask),
                          static_cast<Eigen::Index>(static_cast<std::size_t>(c) ^ mask));
      }
    }
    m = (1.0 - p) * m + p * flipped;
  }
  return {rho.sites(), std::move(m)};
}

/// p_j = (1 - |<sigma^z_j>|) / 2.
inline std::vector<double> estimate_bitflip_rates(std::span<const double> sigma_z_expectations) {
  std::vector<double> rates;
  rates.reserve(sigma_z_expectations.size());
  for (double z : sigma_z_expectations) {
    if (!(std::abs(z) <= 1.0)) throw InputError("<sigma^z> must lie in [-1, 1]");
    rates.push_back((1.0 - std::abs(z)) / 2.0);
  }
  return rates;
}

/// Per site: rho -> (1 - p) rho + p Z rho Z, which scales coherences between
/// opposite spins on that site by (1 - 2p).
inline DensityMatrix apply_dephasing_channel(const DensityMatrix& rho, double rate_per_site) {
  if (!(rate_per_site >= 0.0 && rate_per_site <= 1.0)) {
    throw InputError("dephasing probability outside [0, 1]");
  }
  const int n = rho.n_sites();
  const double shrink = 1.0 - 2.0 * rate_per_site;
  Eigen::MatrixXcd m = rho.entries();
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const auto differing = static_cast<std::uint64_t>(static_cast<std::size_t>(r) ^ static_cast<std::size_t>(c));
      const int count = std::popcount(differing & (detail::dim_of(n) - 1));
      if (count > 0) m(r, c) *= std::pow(shrink, count);
    }
  }
  return {rho.sites(), std::move(m)};
}

/// Trotterized open evolution: alternate unitary slices of length <= dt_ms with
/// per-site dephasing of probability gamma * slice. gamma is in 1/s.
inline DensityMatrix evolve_with_dephasing(const DensityMatrix& rho, const Hamiltonian& h, double t_ms,
                                           double gamma_per_s, double dt_ms = 0.1) {
  if (!(dt_ms > 0.0)) throw InputError("Trotter step must be positive");
  if (!(gamma_per_s >= 0.0)) throw InputError("dephasing rate must be non-negative");
  if (t_ms == 0.0 || gamma_per_s == 0.0) return evolve(rho, h, t_ms);
  const int steps = std::max(1, static_cast<int>(std::ceil(t_ms / dt_ms - 1e-12)));
  const double slice_ms = t_ms / steps;
  const double p = gamma_per_s * slice_ms * 1e-3;
  if (p > 1.0) throw InputError("dephasing probability per slice exceeds 1; shrink the step");
  DensityMatrix current = rho;
  for (int k = 0; k < steps; ++k) {
    current = apply_dephasing_channel(evolve(current, h, slice_ms), p);
  }
  return current;
}

/// <sum_j sigma_j^axis> over the whole register.
inline double total_magnetization(const StateVector& psi, Axis axis) {
  double sum = 0.0;
  for (int s = 1; s <= psi.n_qubits(); ++s) sum += expectation(psi, PauliString({{s, axis}}));
  return sum;
}

}  // namespace fcs
