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
#include <lapacke.h>

#include <stdexcept>
#include <string>

namespace fcs::detail {

/// Full eigendecomposition of a real symmetric matrix via LAPACK dsyevd.
/// Eigenvalues come back ascending; eigenvectors are the columns of `vectors`.
inline void symmetric_eigen(const Eigen::MatrixXd& matrix, Eigen::VectorXd& values,
                            Eigen::MatrixXd& vectors) {
  const auto n = static_cast<lapack_int>(matrix.rows());
  vectors = matrix;
  values.resize(n);
  const lapack_int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', n, vectors.data(), n,
                                         values.data());
  if (info != 0) {
    throw std::runtime_error("dsyevd failed with info=" + std::to_string(info));
  }
}

}  // namespace fcs::detail
