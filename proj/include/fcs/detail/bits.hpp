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

#include <Eigen/Dense>

#include <bit>
#include <complex>
#include <cstddef>
#include <cstdint>

// Index layout shared by every module: for an n-site register, site s
// (1-based) lives in bit (n - s) of the computational index, so site 1 is the
// most significant bit. Bit value 0 is spin up (sigma^z = +1).

namespace fcs::detail {

using cplx = std::complex<double>;

constexpr std::size_t dim_of(int n_sites) { return std::size_t{1} << n_sites; }

/// Bit mask of a 1-based site position inside an n-site register.
constexpr std::size_t site_mask(int n_sites, int position) {
  return std::size_t{1} << (n_sites - position);
}

constexpr int bit_at(std::size_t index, int n_sites, int position) {
  return static_cast<int>((index >> (n_sites - position)) & 1U);
}

/// Eigenvalue of sum_j sigma_j in the basis labelled by `index` (0 -> +1).
constexpr int magnetization_of(std::size_t index, int n_sites) {
  return n_sites - 2 * std::popcount(static_cast<std::uint64_t>(index));
}

/// In-place v <- (u acting on `position`) v.
inline void apply_to_vector(Eigen::VectorXcd& v, int n_sites, int position,
                            const Eigen::Matrix2cd& u) {
  const std::size_t mask = site_mask(n_sites, position);
  const std::size_t dim = dim_of(n_sites);
  cplx* data = v.data();
  for (std::size_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    const cplx a0 = data[i];
    const cplx a1 = data[i | mask];
    data[i] = u(0, 0) * a0 + u(0, 1) * a1;
    data[i | mask] = u(1, 0) * a0 + u(1, 1) * a1;
  }
}

/// In-place m <- (u on `position`) m, i.e. the gate acts on the row index.
inline void apply_left(Eigen::MatrixXcd& m, int n_sites, int position,
                       const Eigen::Matrix2cd& u) {
  const std::size_t mask = site_mask(n_sites, position);
  const auto dim = static_cast<Eigen::Index>(dim_of(n_sites));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    cplx* col = m.col(c).data();
    for (Eigen::Index i = 0; i < dim; ++i) {
      if (static_cast<std::size_t>(i) & mask) continue;
      const auto j = static_cast<Eigen::Index>(static_cast<std::size_t>(i) | mask);
      const cplx a0 = col[i];
      const cplx a1 = col[j];
      col[i] = u(0, 0) * a0 + u(0, 1) * a1;
      col[j] = u(1, 0) * a0 + u(1, 1) * a1;
    }
  }
}

/// In-place m <- m (u on `position`)^dagger, i.e. the gate acts on the column index.
inline void apply_right_adjoint(Eigen::MatrixXcd& m, int n_sites, int position,
                                const Eigen::Matrix2cd& u) {
  const std::size_t mask = site_mask(n_sites, position);
  const auto dim = static_cast<Eigen::Index>(dim_of(n_sites));
  const Eigen::Matrix2cd uc = u.conjugate();
  for (Eigen::Index c = 0; c < dim; ++c) {
    if (static_cast<std::size_t>(c) & mask) continue;
    const auto c1 = static_cast<Eigen::Index>(static_cast<std::size_t>(c) | mask);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const cplx a0 = m(r, c);
      const cplx a1 = m(r, c1);
      m(r, c) = uc(0, 0) * a0 + uc(0, 1) * a1;
      m(r, c1) = uc(1, 0) * a0 + uc(1, 1) * a1;
    }
  }
}

}  // namespace fcs::detail
