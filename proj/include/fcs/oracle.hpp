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

// Exact reference values: dense FCS and PDF of subsystem magnetizations for a
// given reduced state, closed forms for product states, and the discrete
// Fourier relation between the two.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcs/detail/bits.hpp"
#include "fcs/errors.hpp"
#include "fcs/spincore.hpp"

namespace fcs {

/// Probabilities over ascending magnetization outcomes.
struct Distribution {
  std::vector<int> outcomes;
  std::vector<double> probabilities;

  double at(int q) const {
    auto it = std::find(outcomes.begin(), outcomes.end(), q);
    if (it == outcomes.end()) throw InputError("outcome " + std::to_string(q) + " not in distribution");
    return probabilities[static_cast<std::size_t>(it - outcomes.begin())];
  }
  double mean() const {
    double m = 0.0;
    for (std::size_t k = 0; k < outcomes.size(); ++k) m += outcomes[k] * probabilities[k];
    return m;
  }
  double second_moment() const {
    double m = 0.0;
    for (std::size_t k = 0; k < outcomes.size(); ++k) m += outcomes[k] * outcomes[k] * probabilities[k];
    return m;
  }
};

/// Dense exp(i alpha S^axis) = (x)_j (cos a I + i sin a sigma_j) on n_a sites.
inline Eigen::MatrixXcd magnetization_phase_operator(int n_a, Axis axis, double alpha) {
  const Eigen::Matrix2cd factor = single_qubit_phase(axis, alpha);
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Ones(1, 1);
  for (int k = 0; k < n_a; ++k) {
    Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index r = 0; r < out.rows(); ++r) {
      for (Eigen::Index c = 0; c < out.cols(); ++c) next.block<2, 2>(2 * r, 2 * c) = out(r, c) * factor;
    }
    out = std::move(next);
  }
  return out;
}

/// chi(alpha) = Tr(rho exp(i alpha S^axis)) over all sites of rho.
inline cplx exact_fcs(const DensityMatrix& rho, Axis axis, double alpha) {
  const Eigen::MatrixXcd phase = magnetization_phase_operator(rho.n_sites(), axis, alpha);
  return rho.entries().transpose().cwiseProduct(phase).sum();
}

inline std::vector<cplx> exact_fcs(const DensityMatrix& rho, Axis axis, std::span<const double> alpha_grid) {
  std::vector<cplx> out;
  out.reserve(alpha_grid.size());
  for (double a : alpha_grid) out.push_back(exact_fcs(rho, axis, a));
  return out;
}

/// p(q) = Tr(Pi_q rho), computed in the product eigenbasis of sigma^axis.
inline Distribution exact_pdf(const DensityMatrix& rho, Axis axis) {
  const int n_a = rho.n_sites();
  Eigen::MatrixXcd rotated = rho.entries();
  const Eigen::Matrix2cd to_eigen = eigenbasis(axis).adjoint();
  for (int p = 1; p <= n_a; ++p) {
    detail::apply_left(rotated, n_a, p, to_eigen);
    detail::apply_right_adjoint(rotated, n_a, p, to_eigen);
  }
  Distribution d;
  for (int q = -n_a; q <= n_a; q += 2) d.outcomes.push_back(q);
  d.probabilities.assign(d.outcomes.size(), 0.0);
  for (std::size_t b = 0; b < rho.dim(); ++b) {
    const int q = detail::magnetization_of(b, n_a);
    d.probabilities[static_cast<std::size_t>((q + n_a) / 2)] += rotated(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(b)).real();
  }
  return d;
}

enum class ClosedFormFamily {
  neel_fcs_x,
  neel_pdf_x,
  neel_bitflip_fcs_z,
  tilted_fcs_z,
  tilted_fcs_x,
  tilted_pdf_z_halfpi,
  parity,
};

inline ClosedFormFamily parse_closed_form_family(std::string_view name) {
  if (name == "neel_fcs_x") return ClosedFormFamily::neel_fcs_x;
  if (name == "neel_pdf_x") return ClosedFormFamily::neel_pdf_x;
  if (name == "neel_bitflip_fcs_z") return ClosedFormFamily::neel_bitflip_fcs_z;
  if (name == "tilted_fcs_z") return ClosedFormFamily::tilted_fcs_z;
  if (name == "tilted_fcs_x") return ClosedFormFamily::tilted_fcs_x;
  if (name == "tilted_pdf_z_halfpi") return ClosedFormFamily::tilted_pdf_z_halfpi;
  if (name == "parity") return ClosedFormFamily::parity;
  throw InputError("unknown closed-form family '" + std::string(name) + "'");
}

inline std::string_view to_string(ClosedFormFamily f) {
  switch (f) {
    case ClosedFormFamily::neel_fcs_x: return "neel_fcs_x";
    case ClosedFormFamily::neel_pdf_x: return "neel_pdf_x";
    case ClosedFormFamily::neel_bitflip_fcs_z: return "neel_bitflip_fcs_z";
    case ClosedFormFamily::tilted_fcs_z: return "tilted_fcs_z";
    case ClosedFormFamily::tilted_fcs_x: return "tilted_fcs_x";
    case ClosedFormFamily::tilted_pdf_z_halfpi: return "tilted_pdf_z_halfpi";
    case ClosedFormFamily::parity: return "parity";
  }
  return "unknown";
}

inline bool is_pdf_family(ClosedFormFamily f) {
  return f == ClosedFormFamily::neel_pdf_x || f == ClosedFormFamily::tilted_pdf_z_halfpi;
}

/// Parameters of a closed-form expression. `rates` and `first_site` are used
/// by neel_bitflip_fcs_z (rates for the n_a consecutive sites starting at
/// first_site; odd absolute sites are spin up). `theta` applies to the tilted
/// families and parity; `axis` selects the parity string.
struct ClosedFormSpec {
  ClosedFormFamily family = ClosedFormFamily::neel_fcs_x;
  int n_a = 1;
  double theta = 0.0;
  std::vector<double> rates;
  int first_site = 1;
  Axis axis = Axis::z;

  void validate() const {
    if (n_a < 1) throw InputError("closed form needs n_a >= 1");
    if (family == ClosedFormFamily::neel_bitflip_fcs_z) {
      if (static_cast<int>(rates.size()) != n_a) throw InputError("need one bit-flip rate per subsystem site");
      if (first_site < 1) throw InputError("first_site is 1-based");
    }
  }
};

namespace detail {
inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double out = 1.0;
  for (int i = 1; i <= k; ++i) out = out * (n - k + i) / i;
  return out;
}
}  // namespace detail

/// Evaluates a closed form. `arg` is alpha for FCS families, the outcome q for
/// PDF families and ignored for parity. Real-valued families return a zero
/// imaginary part.
inline cplx closed_form(const ClosedFormSpec& spec, double arg) {
  spec.validate();
  const int n_a = spec.n_a;
  const double c = std::cos(arg);
  const double s = std::sin(arg);
  switch (spec.family) {
    case ClosedFormFamily::neel_fcs_x:
      return std::pow(c, n_a);
    case ClosedFormFamily::neel_pdf_x:
    case ClosedFormFamily::tilted_pdf_z_halfpi: {
      const double q = std::round(arg);
      if (std::abs(q - arg) > 1e-9 || std::abs(q) > n_a || (n_a - static_cast<int>(q)) % 2 != 0) {
        throw InputError("q is not an eigenvalue of the subsystem magnetization");
      }
      return std::ldexp(detail::binomial(n_a, (n_a - static_cast<int>(q)) / 2), -n_a);
    }
    case ClosedFormFamily::neel_bitflip_fcs_z: {
      cplx out = 1.0;
      for (int k = 0; k < n_a; ++k) {
        const int site = spec.first_site + k;
        const double spin = (site % 2 == 1) ? 1.0 : -1.0;
        out *= cplx(c, spin * (1.0 - 2.0 * spec.rates[static_cast<std::size_t>(k)]) * s);
      }
      return out;
    }
    case ClosedFormFamily::tilted_fcs_z:
      return std::pow(cplx(c, -s * std::cos(spec.theta)), n_a);
    case ClosedFormFamily::tilted_fcs_x:
      return std::pow(cplx(c, s * std::sin(spec.theta)), n_a);
    case ClosedFormFamily::parity:
      switch (spec.axis) {
        case Axis::z: return std::pow(-std::cos(spec.theta), n_a);
        case Axis::x: return std::pow(std::sin(spec.theta), n_a);
        case Axis::y: return 0.0;
      }
  }
  throw InputError("unknown closed-form family");
}

/// Inverts chi(alpha) = sum_q p(q) exp(i alpha q), q in {-n_a, ..., n_a step 2},
/// by least squares over the supplied samples. chi has period pi in the
/// variable exp(2 i alpha), so the grid needs n_a + 1 distinct points mod pi.
inline Distribution fcs_to_pdf(std::span<const double> alphas, std::span<const cplx> values, int n_a) {
  if (alphas.size() != values.size()) throw InputError("alpha and value counts differ");
  if (n_a < 1) throw InputError("n_a must be positive");
  std::vector<double> reduced;
  for (double a : alphas) {
    double r = std::fmod(a, std::numbers::pi);
    if (r < 0) r += std::numbers::pi;
    if (std::numbers::pi - r < 1e-9) r = 0.0;
    reduced.push_back(r);
  }
  std::sort(reduced.begin(), reduced.end());
  const auto distinct = std::unique(reduced.begin(), reduced.end(), [](double a, double b) { return b - a < 1e-9; }) -
                        reduced.begin();
  if (distinct < n_a + 1) {
    throw InputError("alpha grid has " + std::to_string(distinct) + " distinct points modulo pi; need " +
                     std::to_string(n_a + 1));
  }
  const auto rows = static_cast<Eigen::Index>(alphas.size());
  Eigen::MatrixXcd design(rows, n_a + 1);
  Eigen::VectorXcd rhs(rows);
  for (Eigen::Index j = 0; j < rows; ++j) {
    for (int k = 0; k <= n_a; ++k) design(j, k) = std::polar(1.0, alphas[static_cast<std::size_t>(j)] * (2 * k - n_a));
    rhs(j) = values[static_cast<std::size_t>(j)];
  }
  const Eigen::VectorXcd solution = design.colPivHouseholderQr().solve(rhs);
  Distribution d;
  for (int k = 0; k <= n_a; ++k) {
    d.outcomes.push_back(2 * k - n_a);
    d.probabilities.push_back(solution(k).real());
  }
  return d;
}

}  // namespace fcs
