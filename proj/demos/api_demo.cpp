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


// Library walk-through: quench a Neel chain, take randomized measurements and
// compare the estimated FCS of a four-site block with the exact value.

#include <cstdio>
#include <numbers>

#include "fcs/fcs.hpp"

int main() {
  const fcs::QuenchConfig quench{10, 420.0, 1.24, {1.0}};
  const auto h = fcs::build_xy_hamiltonian(quench);
  const auto psi = fcs::evolve(fcs::prepare_neel(quench.n_qubits), h, 1.0);

  const auto data = fcs::acquire_dataset(psi, 500, 150, 2024);
  const auto block = fcs::SubsystemSpec::range(4, 7);
  const auto rho = fcs::partial_trace(psi, block);

  const std::vector<double> alphas{0.0, std::numbers::pi / 8, std::numbers::pi / 4, 3 * std::numbers::pi / 8};
  const auto curve = fcs::estimate_fcs(data, block, fcs::Axis::x, alphas);
  std::printf("%8s %22s %22s %12s\n", "alpha", "estimate", "exact", "stderr");
  for (std::size_t k = 0; k < alphas.size(); ++k) {
    const auto exact = fcs::exact_fcs(rho, fcs::Axis::x, alphas[k]);
    std::printf("%8.4f %10.5f%+10.5fi %10.5f%+10.5fi %6.4f/%6.4f\n", alphas[k], curve.values[k].real(),
                curve.values[k].imag(), exact.real(), exact.imag(), curve.stderr_re[k], curve.stderr_im[k]);
  }

  const auto pdf = fcs::estimate_pdf(data, block, fcs::Axis::z);
  const auto exact_pdf = fcs::exact_pdf(rho, fcs::Axis::z);
  std::printf("\n%4s %10s %10s %10s\n", "q", "p_hat", "p", "stderr");
  for (std::size_t k = 0; k < pdf.outcomes.size(); ++k) {
    std::printf("%4d %10.5f %10.5f %10.5f\n", pdf.outcomes[k], pdf.probabilities[k], exact_pdf.probabilities[k],
                pdf.std_error[k]);
  }
  return 0;
}
