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

// Classical-shadow post-processing of randomized-measurement data.
//
// Each shot gives a product snapshot rho_hat = (x)_i (3 u_i^dag |s_i><s_i| u_i - I).
// Every estimator here is linear in the snapshot and factorizes over sites,
// so only the per-site Bloch components b_i^mu = Tr[rho_hat_i sigma^mu]
// = 3 <s_i| u_i sigma^mu u_i^dag |s_i> are ever needed; the dense 2^N_A
// snapshot is never formed. Averages are taken over shots first, then over
// records (random unitaries); error bars are the standard error of the mean
// over the per-record estimates.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fcs/detail/bits.hpp"
#include "fcs/detail/parallel.hpp"
#include "fcs/errors.hpp"
#include "fcs/randmeas.hpp"
#include "fcs/spincore.hpp"

namespace fcs {

/// Per-site factors of one snapshot. Each factor has unit trace.
struct ShadowSnapshot {
  std::vector<Eigen::Matrix2cd> site_matrices;

  /// Dense tensor product; only sensible for a handful of sites.
  Eigen::MatrixXcd dense() const {
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Ones(1, 1);
    for (const auto& m : site_matrices) {
      Eigen::MatrixXcd next(out.rows() * 2, out.cols() * 2);
      for (Eigen::Index r = 0; r < out.rows(); ++r) {
        for (Eigen::Index c = 0; c < out.cols(); ++c) next.block<2, 2>(2 * r, 2 * c) = out(r, c) * m;
      }
      out = std::move(next);
    }
    return out;
  }
};

/// 3 u^dag |s><s| u - I for each subsystem site. `unitaries` and `bitstring`
/// describe the whole register (site 1 first).
inline ShadowSnapshot snapshot(std::span<const LocalUnitary> unitaries, std::string_view bitstring,
                               const SubsystemSpec& subsystem) {
  const int last = subsystem.sites().back();
  if (static_cast<int>(bitstring.size()) < last || static_cast<int>(unitaries.size()) < last) {
    throw InputError("bitstring or rotation list does not cover subsystem site " + std::to_string(last));
  }
  ShadowSnapshot out;
  for (int site : subsystem.sites()) {
    const char ch = bitstring[static_cast<std::size_t>(site - 1)];
    if (ch != '0' && ch != '1') throw InputError("bitstring characters must be 0 or 1");
    const int s = ch - '0';
    const Eigen::Matrix2cd& u = unitaries[static_cast<std::size_t>(site - 1)].matrix;
    const Eigen::Vector2cd bra_row = u.row(s).adjoint();  // u^dag |s>
    out.site_matrices.push_back(3.0 * bra_row * bra_row.adjoint() - Eigen::Matrix2cd::Identity());
  }
  return out;
}

enum class ErrorMethod { standard_error, jackknife };

inline std::string_view to_string(ErrorMethod m) {
  return m == ErrorMethod::jackknife ? "jackknife" : "stderr";
}

struct EstimateOptions {
  ErrorMethod error_method = ErrorMethod::standard_error;
  unsigned threads = 0;
};

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

struct FCSCurve {
  Axis axis = Axis::z;
  SubsystemSpec subsystem{std::vector<int>{1}};
  std::vector<double> alpha_grid;
  std::vector<cplx> values;
  std::vector<double> stderr_re;
  std::vector<double> stderr_im;
  int n_unitaries = 0;
};

/// Outcomes are ascending: q = -N_A, -N_A + 2, ..., N_A. Probabilities are
/// unclipped and may be slightly negative.
struct PDFEstimate {
  Axis axis = Axis::z;
  SubsystemSpec subsystem{std::vector<int>{1}};
  std::vector<int> outcomes;
  std::vector<double> probabilities;
  std::vector<double> std_error;
  int n_unitaries = 0;
};

/// 65 points on [0, pi] for even n_a and on [0, 2pi] for odd n_a, matching the
/// period of the magnetization FCS.
inline std::vector<double> default_alpha_grid(int n_a, int count = 65) {
  if (count < 2) throw InputError("alpha grid needs at least two points");
  const double upper = (n_a % 2 == 0 ? 1.0 : 2.0) * std::numbers::pi;
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) grid[static_cast<std::size_t>(k)] = upper * k / (count - 1);
  return grid;
}

inline std::vector<int> magnetization_outcomes(int n_a) {
  std::vector<int> q;
  for (int v = -n_a; v <= n_a; v += 2) q.push_back(v);
  return q;
}

namespace detail {

/// b[outcome][axis] = 3 <s| u sigma^axis u^dag |s>.
using SiteBloch = std::array<std::array<double, 3>, 2>;

inline SiteBloch site_bloch(const Eigen::Matrix2cd& u) {
  SiteBloch b{};
  for (Axis axis : kAllAxes) {
    const Eigen::Matrix2cd rotated = u * pauli(axis) * u.adjoint();
    for (int s = 0; s < 2; ++s) b[static_cast<std::size_t>(s)][static_cast<std::size_t>(axis)] = 3.0 * rotated(s, s).real();
  }
  return b;
}

inline void check_dataset_subsystem(const RandomizedDataset& data, const SubsystemSpec& subsystem) {
  if (data.records.empty()) throw InputError("dataset has no records");
  subsystem.validate(data.metadata.n_qubits);
}

/// mean and its error over the rows of per-record samples.
inline Estimate summarize(std::span<const double> samples, ErrorMethod method) {
  const auto n = static_cast<double>(samples.size());
  double sum = 0.0;
  for (double x : samples) sum += x;
  const double mean = sum / n;
  if (samples.size() < 2) return {mean, std::numeric_limits<double>::quiet_NaN()};
  double spread = 0.0;
  if (method == ErrorMethod::jackknife) {
    for (double x : samples) {
      const double loo = (sum - x) / (n - 1.0);
      spread += (loo - mean) * (loo - mean);
    }
    return {mean, std::sqrt((n - 1.0) / n * spread)};
  }
  for (double x : samples) spread += (x - mean) * (x - mean);
  return {mean, std::sqrt(spread / (n - 1.0) / n)};
}

}  // namespace detail

/// Per-record FCS estimates, rows = records, columns = grid points. Each
/// entry is the shot average of prod_i (cos a + i sin a b_i^mu).
inline Eigen::MatrixXcd per_record_fcs(const RandomizedDataset& data, const SubsystemSpec& subsystem, Axis axis,
                                       std::span<const double> alpha_grid, unsigned threads = 0) {
  detail::check_dataset_subsystem(data, subsystem);
  if (alpha_grid.empty()) throw InputError("alpha grid is empty");
  const int n = data.metadata.n_qubits;
  const auto g = static_cast<Eigen::Index>(alpha_grid.size());
  const auto& sites = subsystem.sites();
  Eigen::MatrixXcd out(static_cast<Eigen::Index>(data.records.size()), g);
  std::vector<double> cosines(alpha_grid.size());
  std::vector<double> sines(alpha_grid.size());
  for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
    cosines[k] = std::cos(alpha_grid[k]);
    sines[k] = std::sin(alpha_grid[k]);
  }
  detail::parallel_for(data.records.size(), threads, [&](std::size_t r) {
    const auto& rec = data.records[r];
    std::vector<std::array<double, 2>> b(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const auto table = detail::site_bloch(rec.unitaries[static_cast<std::size_t>(sites[i] - 1)].matrix);
      b[i] = {table[0][static_cast<std::size_t>(axis)], table[1][static_cast<std::size_t>(axis)]};
    }
    std::vector<cplx> acc(alpha_grid.size(), cplx(0.0));
    for (Shot shot : rec.shots) {
      for (std::size_t k = 0; k < alpha_grid.size(); ++k) {
        cplx prod = 1.0;
        for (std::size_t i = 0; i < sites.size(); ++i) {
          prod *= cplx(cosines[k], sines[k] * b[i][static_cast<std::size_t>(detail::bit_at(shot, n, sites[i]))]);
        }
        acc[k] += prod;
      }
    }
    for (Eigen::Index k = 0; k < g; ++k) {
      out(static_cast<Eigen::Index>(r), k) = acc[static_cast<std::size_t>(k)] / static_cast<double>(rec.shots.size());
    }
  });
  return out;
}

/// Per-record PDF estimates, rows = records, columns = ascending q. Each shot
/// contributes the convolution over sites of the weights (1 +- b_i^mu)/2 of
/// the +-1 eigenprojectors, which yields Tr[rho_hat Pi_q] for every q at once.
inline Eigen::MatrixXd per_record_pdf(const RandomizedDataset& data, const SubsystemSpec& subsystem, Axis axis,
                                      unsigned threads = 0) {
  detail::check_dataset_subsystem(data, subsystem);
  const int n = data.metadata.n_qubits;
  const int n_a = subsystem.size();
  const auto& sites = subsystem.sites();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(data.records.size()), n_a + 1);
  detail::parallel_for(data.records.size(), threads, [&](std::size_t r) {
    const auto& rec = data.records[r];
    std::vector<std::array<double, 2>> b(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const auto table = detail::site_bloch(rec.unitaries[static_cast<std::size_t>(sites[i] - 1)].matrix);
      b[i] = {table[0][static_cast<std::size_t>(axis)], table[1][static_cast<std::size_t>(axis)]};
    }
    // dist[k] accumulates the weight of k sites in the -1 eigenstate.
    std::vector<double> acc(static_cast<std::size_t>(n_a) + 1, 0.0);
    std::vector<double> dist(static_cast<std::size_t>(n_a) + 1);
    for (Shot shot : rec.shots) {
      std::fill(dist.begin(), dist.end(), 0.0);
      dist[0] = 1.0;
      for (std::size_t i = 0; i < sites.size(); ++i) {
        const double bloch = b[i][static_cast<std::size_t>(detail::bit_at(shot, n, sites[i]))];
        const double w_plus = 0.5 * (1.0 + bloch);
        const double w_minus = 0.5 * (1.0 - bloch);
        for (std::size_t k = i + 1; k > 0; --k) dist[k] = dist[k] * w_plus + dist[k - 1] * w_minus;
        dist[0] *= w_plus;
      }
      for (std::size_t k = 0; k < dist.size(); ++k) acc[k] += dist[k];
    }
    for (int k = 0; k <= n_a; ++k) {
      // q = n_a - 2k, so ascending q is descending k.
      out(static_cast<Eigen::Index>(r), n_a - k) = acc[static_cast<std::size_t>(k)] / static_cast<double>(rec.shots.size());
    }
  });
  return out;
}

/// Per-record estimates of a Pauli-string expectation.
inline Eigen::VectorXd per_record_pauli(const RandomizedDataset& data, const PauliString& observable,
                                        unsigned threads = 0) {
  if (data.records.empty()) throw InputError("dataset has no records");
  const int n = data.metadata.n_qubits;
  for (const auto& [site, axis] : observable.ops()) {
    if (site > n) throw InputError("observable site " + std::to_string(site) + " outside the register");
  }
  Eigen::VectorXd out(static_cast<Eigen::Index>(data.records.size()));
  detail::parallel_for(data.records.size(), threads, [&](std::size_t r) {
    const auto& rec = data.records[r];
    std::vector<std::array<double, 2>> b;
    std::vector<int> sites;
    for (const auto& [site, axis] : observable.ops()) {
      const auto table = detail::site_bloch(rec.unitaries[static_cast<std::size_t>(site - 1)].matrix);
      b.push_back({table[0][static_cast<std::size_t>(axis)], table[1][static_cast<std::size_t>(axis)]});
      sites.push_back(site);
    }
    double acc = 0.0;
    for (Shot shot : rec.shots) {
      double prod = 1.0;
      for (std::size_t i = 0; i < sites.size(); ++i) prod *= b[i][static_cast<std::size_t>(detail::bit_at(shot, n, sites[i]))];
      acc += prod;
    }
    out(static_cast<Eigen::Index>(r)) = acc / static_cast<double>(rec.shots.size());
  });
  return out;
}

/// Mean over records with per-column error bars.
inline FCSCurve summarize_fcs(const Eigen::MatrixXcd& per_record, Axis axis, const SubsystemSpec& subsystem,
                              std::span<const double> alpha_grid, ErrorMethod method) {
  FCSCurve curve{axis, subsystem, {alpha_grid.begin(), alpha_grid.end()}, {}, {}, {}, static_cast<int>(per_record.rows())};
  std::vector<double> re(static_cast<std::size_t>(per_record.rows()));
  std::vector<double> im(re.size());
  for (Eigen::Index k = 0; k < per_record.cols(); ++k) {
    for (Eigen::Index r = 0; r < per_record.rows(); ++r) {
      re[static_cast<std::size_t>(r)] = per_record(r, k).real();
      im[static_cast<std::size_t>(r)] = per_record(r, k).imag();
    }
    const Estimate er = detail::summarize(re, method);
    const Estimate ei = detail::summarize(im, method);
    curve.values.emplace_back(er.value, ei.value);
    curve.stderr_re.push_back(er.std_error);
    curve.stderr_im.push_back(ei.std_error);
  }
  return curve;
}

inline PDFEstimate summarize_pdf(const Eigen::MatrixXd& per_record, Axis axis, const SubsystemSpec& subsystem,
                                 ErrorMethod method) {
  const int n_a = static_cast<int>(per_record.cols()) - 1;
  PDFEstimate pdf{axis, subsystem, magnetization_outcomes(n_a), {}, {}, static_cast<int>(per_record.rows())};
  std::vector<double> column(static_cast<std::size_t>(per_record.rows()));
  for (Eigen::Index k = 0; k < per_record.cols(); ++k) {
    for (Eigen::Index r = 0; r < per_record.rows(); ++r) column[static_cast<std::size_t>(r)] = per_record(r, k);
    const Estimate e = detail::summarize(column, method);
    pdf.probabilities.push_back(e.value);
    pdf.std_error.push_back(e.std_error);
  }
  return pdf;
}

inline void check_alpha_grid(std::span<const double> alpha_grid) {
  if (alpha_grid.empty()) throw InputError("alpha grid is empty");
  for (std::size_t k = 1; k < alpha_grid.size(); ++k) {
    if (!(alpha_grid[k] > alpha_grid[k - 1])) throw InputError("alpha grid must be strictly increasing");
  }
}

/// chi_hat(alpha) = mean_r mean_m Tr[rho_hat^(r,m) exp(i alpha S_A^axis)].
inline FCSCurve estimate_fcs(const RandomizedDataset& data, const SubsystemSpec& subsystem, Axis axis,
                             std::span<const double> alpha_grid, const EstimateOptions& options = {}) {
  check_alpha_grid(alpha_grid);
  return summarize_fcs(per_record_fcs(data, subsystem, axis, alpha_grid, options.threads), axis, subsystem,
                       alpha_grid, options.error_method);
}

/// p_hat(q) = mean_r mean_m Tr[rho_hat^(r,m) Pi_q].
inline PDFEstimate estimate_pdf(const RandomizedDataset& data, const SubsystemSpec& subsystem, Axis axis,
                                const EstimateOptions& options = {}) {
  return summarize_pdf(per_record_pdf(data, subsystem, axis, options.threads), axis, subsystem,
                       options.error_method);
}

inline Estimate estimate_pauli_expectation(const RandomizedDataset& data, const PauliString& observable,
                                           const EstimateOptions& options = {}) {
  const Eigen::VectorXd per_record = per_record_pauli(data, observable, options.threads);
  return detail::summarize(std::span<const double>(per_record.data(), static_cast<std::size_t>(per_record.size())),
                           options.error_method);
}

struct MagnetizationMoments {
  Estimate mean;         // <S_A^mu>
  Estimate second;       // <(S_A^mu)^2>
};

/// <S> = sum_i <sigma_i>, <S^2> = N_A + 2 sum_{i<j} <sigma_i sigma_j>, combined
/// per record before averaging so the error bars carry the covariances.
inline MagnetizationMoments estimate_magnetization_moments(const RandomizedDataset& data,
                                                           const SubsystemSpec& subsystem, Axis axis,
                                                           const EstimateOptions& options = {}) {
  detail::check_dataset_subsystem(data, subsystem);
  const auto& sites = subsystem.sites();
  const auto n_r = static_cast<Eigen::Index>(data.records.size());
  Eigen::VectorXd first = Eigen::VectorXd::Zero(n_r);
  Eigen::VectorXd second = Eigen::VectorXd::Constant(n_r, static_cast<double>(sites.size()));
  for (std::size_t i = 0; i < sites.size(); ++i) {
    first += per_record_pauli(data, PauliString({{sites[i], axis}}), options.threads);
    for (std::size_t j = i + 1; j < sites.size(); ++j) {
      second += 2.0 * per_record_pauli(data, PauliString({{sites[i], axis}, {sites[j], axis}}), options.threads);
    }
  }
  auto span_of = [](const Eigen::VectorXd& v) {
    return std::span<const double>(v.data(), static_cast<std::size_t>(v.size()));
  };
  return {detail::summarize(span_of(first), options.error_method),
          detail::summarize(span_of(second), options.error_method)};
}

/// Estimate of one term of the product expansion of exp(i alpha S_A^mu).
struct PauliTermEstimate {
  PauliString observable;
  double value = 0.0;
  double std_error = 0.0;
};

struct PropagatedFcs {
  cplx value;
  double stderr_re = 0.0;
  double stderr_im = 0.0;
};

/// Builds chi(alpha) from the expansion
///   prod_j (cos a + i sin a sigma_j) = sum_S cos^(N_A-|S|) a (i sin a)^|S| sigma_S
/// and combines the per-term errors in quadrature with those weights: even |S|
/// feed the real part (sign (-1)^(|S|/2)), odd |S| the imaginary part.
/// `terms` must be exactly the 2^N_A subsets of the subsystem, identity included.
inline PropagatedFcs propagate_fcs_error(std::span<const PauliTermEstimate> terms, Axis axis, double alpha) {
  std::vector<int> sites;
  for (const auto& t : terms) {
    for (const auto& [site, ax] : t.observable.ops()) {
      if (ax != axis) throw InputError("expansion term along a different axis");
      sites.push_back(site);
    }
  }
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  const int n_a = static_cast<int>(sites.size());
  if (n_a < 1 || n_a > 6) throw InputError("error propagation supports 1..6 sites");
  if (terms.size() != detail::dim_of(n_a)) {
    throw InputError("expected " + std::to_string(detail::dim_of(n_a)) + " expansion terms, got " +
                     std::to_string(terms.size()));
  }
  std::vector<bool> seen(detail::dim_of(n_a), false);
  const double c = std::cos(alpha);
  const double s = std::sin(alpha);
  PropagatedFcs out{cplx(0.0), 0.0, 0.0};
  double var_re = 0.0;
  double var_im = 0.0;
  for (const auto& t : terms) {
    std::size_t subset = 0;
    for (const auto& [site, ax] : t.observable.ops()) {
      const auto pos = std::lower_bound(sites.begin(), sites.end(), site) - sites.begin();
      subset |= std::size_t{1} << pos;
    }
    if (seen[subset]) throw InputError("duplicate expansion term");
    seen[subset] = true;
    const int k = t.observable.weight();
    const double magnitude = std::pow(c, n_a - k) * std::pow(s, k);
    const double sign = ((k / 2) % 2 == 0) ? 1.0 : -1.0;  // real part of i^k (even k) or i^(k-1) (odd k)
    const double weight = sign * magnitude;
    if (k % 2 == 0) {
      out.value += weight * t.value;
      var_re += weight * weight * t.std_error * t.std_error;
    } else {
      out.value += cplx(0.0, weight * t.value);
      var_im += weight * weight * t.std_error * t.std_error;
    }
  }
  out.stderr_re = std::sqrt(var_re);
  out.stderr_im = std::sqrt(var_im);
  return out;
}

/// Estimates all 2^N_A expansion terms sigma_S (S subset of the subsystem).
inline std::vector<PauliTermEstimate> expansion_terms(const RandomizedDataset& data, const SubsystemSpec& subsystem,
                                                      Axis axis, const EstimateOptions& options = {}) {
  detail::check_dataset_subsystem(data, subsystem);
  const auto& sites = subsystem.sites();
  if (sites.size() > 6) throw InputError("expansion terms limited to 6 sites");
  std::vector<PauliTermEstimate> terms;
  for (std::size_t subset = 0; subset < detail::dim_of(subsystem.size()); ++subset) {
    std::map<int, Axis> ops;
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (subset & (std::size_t{1} << i)) ops.emplace(sites[i], axis);
    }
    PauliString p(std::move(ops));
    if (p.is_identity()) {
      terms.push_back({p, 1.0, 0.0});
      continue;
    }
    const Estimate e = estimate_pauli_expectation(data, p, options);
    terms.push_back({std::move(p), e.value, e.std_error});
  }
  return terms;
}

/// FCS curve assembled from the expansion terms, with propagated error bars.
inline FCSCurve propagated_fcs_curve(const RandomizedDataset& data, const SubsystemSpec& subsystem, Axis axis,
                                     std::span<const double> alpha_grid, const EstimateOptions& options = {}) {
  check_alpha_grid(alpha_grid);
  const auto terms = expansion_terms(data, subsystem, axis, options);
  FCSCurve curve{axis, subsystem, {alpha_grid.begin(), alpha_grid.end()}, {}, {}, {}, static_cast<int>(data.records.size())};
  for (double alpha : alpha_grid) {
    const PropagatedFcs p = propagate_fcs_error(terms, axis, alpha);
    curve.values.push_back(p.value);
    curve.stderr_re.push_back(p.stderr_re);
    curve.stderr_im.push_back(p.stderr_im);
  }
  return curve;
}

/// Contiguous windows of n_a sites that avoid `edge_exclusion` sites at each
/// end of the chain.
inline std::vector<SubsystemSpec> bulk_windows(int n_qubits, int n_a, int edge_exclusion = 1) {
  if (n_a < 1 || n_a >= n_qubits) throw InputError("bulk window size must lie in [1, n_qubits)");
  if (edge_exclusion < 0) throw InputError("edge exclusion must be non-negative");
  std::vector<SubsystemSpec> windows;
  for (int first = 1 + edge_exclusion; first + n_a - 1 <= n_qubits - edge_exclusion; ++first) {
    windows.push_back(SubsystemSpec::range(first, first + n_a - 1));
  }
  if (windows.empty()) throw InputError("no bulk window of " + std::to_string(n_a) + " sites fits the chain");
  return windows;
}

struct BulkTarget {
  enum class Kind { fcs, pdf } kind = Kind::pdf;
  std::vector<double> alpha_grid;

  static BulkTarget fcs(std::vector<double> grid) { return {Kind::fcs, std::move(grid)}; }
  static BulkTarget pdf() { return {Kind::pdf, {}}; }
};

/// The averaged estimate's `subsystem` field holds the first window; the full
/// window list is in `windows`.
struct BulkAverage {
  std::vector<SubsystemSpec> windows;
  std::optional<FCSCurve> fcs;
  std::optional<PDFEstimate> pdf;
};

/// Averages the per-record estimates over all bulk windows, then takes the
/// mean and error over records. Window estimates within one record share the
/// same shots, so the error is computed on the window-averaged per-record values.
inline BulkAverage average_bulk_subsystems(const RandomizedDataset& data, int n_a, Axis axis, const BulkTarget& target,
                                           int edge_exclusion = 1, const EstimateOptions& options = {}) {
  BulkAverage out;
  out.windows = bulk_windows(data.metadata.n_qubits, n_a, edge_exclusion);
  const double weight = 1.0 / static_cast<double>(out.windows.size());
  if (target.kind == BulkTarget::Kind::fcs) {
    check_alpha_grid(target.alpha_grid);
    Eigen::MatrixXcd sum;
    for (const auto& w : out.windows) {
      Eigen::MatrixXcd m = per_record_fcs(data, w, axis, target.alpha_grid, options.threads);
      sum = sum.size() ? Eigen::MatrixXcd(sum + m) : m;
    }
    out.fcs = summarize_fcs(sum * weight, axis, out.windows.front(), target.alpha_grid, options.error_method);
  } else {
    Eigen::MatrixXd sum;
    for (const auto& w : out.windows) {
      Eigen::MatrixXd m = per_record_pdf(data, w, axis, options.threads);
      sum = sum.size() ? Eigen::MatrixXd(sum + m) : m;
    }
    out.pdf = summarize_pdf(sum * weight, axis, out.windows.front(), options.error_method);
  }
  return out;
}

struct Cumulants {
  double mean = 0.0;
  double variance = 0.0;
};

/// Mean and variance from a polynomial fit of log chi on |alpha| <= window:
/// log chi = i mu alpha - sigma^2 alpha^2 / 2 + ... The phase is unwrapped
/// outward from alpha = 0. Avoids forming <O^2> - <O>^2 directly.
/// The quadratic default carries an O(window^2) truncation bias; degree 4 removes it.
inline Cumulants cumulants_from_fcs(const FCSCurve& curve, double window = 0.3, int degree = 2) {
  if (degree < 2) throw InputError("fit degree must be at least 2");
  std::vector<std::pair<double, cplx>> points;
  for (std::size_t k = 0; k < curve.alpha_grid.size(); ++k) {
    if (std::abs(curve.alpha_grid[k]) <= window + 1e-12) points.emplace_back(curve.alpha_grid[k], curve.values[k]);
  }
  if (points.size() < 5 || static_cast<int>(points.size()) < degree + 1) {
    throw InputError("need at least 5 grid points with |alpha| <= " + std::to_string(window));
  }
  // Mirror one-sided grids with chi(-a) = conj(chi(a)).
  std::vector<std::pair<double, cplx>> mirrored;
  for (const auto& [a, v] : points) {
    const bool present = std::any_of(points.begin(), points.end(), [&](const auto& q) {
      return std::abs(q.first + a) <= 1e-12;
    });
    if (!present) mirrored.emplace_back(-a, std::conj(v));
  }
  points.insert(points.end(), mirrored.begin(), mirrored.end());
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  const auto origin = std::min_element(points.begin(), points.end(), [](const auto& a, const auto& b) {
                        return std::abs(a.first) < std::abs(b.first);
                      }) - points.begin();
  std::vector<double> log_re(points.size());
  std::vector<double> log_im(points.size());
  for (std::size_t k = 0; k < points.size(); ++k) {
    const cplx lg = std::log(points[k].second);
    log_re[k] = lg.real();
    log_im[k] = lg.imag();
  }
  auto unwrap = [&](std::ptrdiff_t from, std::ptrdiff_t step) {
    for (std::ptrdiff_t k = from + step; k >= 0 && k < static_cast<std::ptrdiff_t>(points.size()); k += step) {
      const double prev = log_im[static_cast<std::size_t>(k - step)];
      double& cur = log_im[static_cast<std::size_t>(k)];
      while (cur - prev > std::numbers::pi) cur -= 2.0 * std::numbers::pi;
      while (cur - prev < -std::numbers::pi) cur += 2.0 * std::numbers::pi;
    }
  };
  unwrap(origin, 1);
  unwrap(origin, -1);
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd design(m, degree + 1);
  Eigen::VectorXd re(m);
  Eigen::VectorXd im(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const double a = points[static_cast<std::size_t>(k)].first;
    for (int p = 0; p <= degree; ++p) design(k, p) = std::pow(a, p);
    re(k) = log_re[static_cast<std::size_t>(k)];
    im(k) = log_im[static_cast<std::size_t>(k)];
  }
  const auto solver = design.colPivHouseholderQr();
  const Eigen::VectorXd coef_re = solver.solve(re);
  const Eigen::VectorXd coef_im = solver.solve(im);
  return {coef_im(1), -2.0 * coef_re(2)};
}

/// Euclidean projection of estimated probabilities onto the probability simplex.
/// Off by default; estimates are reported unclipped.
inline std::vector<double> project_to_simplex(std::span<const double> probabilities) {
  std::vector<double> sorted(probabilities.begin(), probabilities.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double running = 0.0;
  double shift = 0.0;
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    running += sorted[k];
    const double candidate = (running - 1.0) / static_cast<double>(k + 1);
    if (sorted[k] - candidate > 0.0) shift = candidate;
  }
  std::vector<double> out(probabilities.begin(), probabilities.end());
  for (double& p : out) p = std::max(0.0, p - shift);
  return out;
}

}  // namespace fcs
