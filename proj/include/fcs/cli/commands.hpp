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

// Pipeline stages behind the command-line tool. Each returns the paths it
// wrote so callers and tests can chain them.

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fcs/cli/config.hpp"
#include "fcs/cli/io.hpp"
#include "fcs/dynamics.hpp"
#include "fcs/oracle.hpp"
#include "fcs/randmeas.hpp"
#include "fcs/shadows.hpp"
#include "fcs/spincore.hpp"

namespace fcs::cli {

namespace fs = std::filesystem;

inline json provenance(const RunConfig& config) {
  json cfg = to_json(config);
  cfg.erase("threads");
  return json{{"config", std::move(cfg)}, {"seed", config.seed}, {"build", build_identifier()}};
}

inline fs::path with_time_suffix(const fs::path& out, double t_ms) {
  fs::path p = out.parent_path() / out.stem();
  p += "_t" + format_double(t_ms);
  p += out.extension();
  return p;
}

inline std::string describe_preparation(const RunConfig& c) {
  std::string out = to_string(c.initial.kind);
  if (c.initial.kind == InitialKind::tilted_ferromagnet) out += "(theta=" + format_double(c.initial.theta) + ")";
  out += " N=" + std::to_string(c.quench.n_qubits) + " J0=" + format_double(c.quench.j0) +
         " alpha=" + format_double(c.quench.alpha_exp);
  if (!c.initial.bitflip_rates.empty()) out += " +bitflip";
  if (c.dephasing_rate_per_s > 0.0) out += " +dephasing(" + format_double(c.dephasing_rate_per_s) + "/s)";
  return out;
}

// ---------------------------------------------------------------- simulate

inline std::vector<fs::path> cmd_simulate(const RunConfig& config, const fs::path& out) {
  config.validate();
  const auto& q = config.quench;
  const bool mixed = !config.initial.bitflip_rates.empty() || config.dephasing_rate_per_s > 0.0;
  const bool needs_h = std::any_of(q.times_ms.begin(), q.times_ms.end(), [](double t) { return t > 0.0; });
  std::optional<Hamiltonian> h;
  if (needs_h) h = build_xy_hamiltonian(q);

  const StateVector psi0 = prepare_initial(config.initial, q.n_qubits);
  std::optional<DensityMatrix> rho0;
  if (mixed) {
    rho0 = DensityMatrix::from_pure(psi0);
    if (!config.initial.bitflip_rates.empty()) rho0 = apply_bitflip_channel(*rho0, config.initial.bitflip_rates);
  }

  std::vector<fs::path> written;
  for (double t : q.times_ms) {
    StateFile file{psi0, provenance(config)};
    if (mixed) {
      if (t == 0.0) {
        file.state = *rho0;
      } else if (config.dephasing_rate_per_s > 0.0) {
        file.state = evolve_with_dephasing(*rho0, *h, t, config.dephasing_rate_per_s, config.trotter_step_ms);
      } else {
        file.state = evolve(*rho0, *h, t);
      }
    } else if (t > 0.0) {
      file.state = evolve(psi0, *h, t);
    }
    file.header["time_ms"] = t;
    file.header["state_descriptor"] = describe_preparation(config);
    const fs::path path = q.times_ms.size() == 1 ? out : with_time_suffix(out, t);
    write_state(path, file);
    written.push_back(path);
  }
  return written;
}

// ----------------------------------------------------------------- acquire

inline fs::path cmd_acquire(const fs::path& state_path, const RunConfig& config, const fs::path& out) {
  const StateFile file = read_state(state_path);
  if (config.n_u < 1 || config.n_m < 1) throw InputError("n_u and n_m must be positive");
  AcquireOptions options;
  options.threads = config.threads;
  options.state_descriptor = file.descriptor();
  options.time_ms = file.time_ms();
  const RandomizedDataset data = std::visit(
      [&](const auto& s) { return acquire_dataset(s, config.n_u, config.n_m, config.seed, options); }, file.state);
  json prov = provenance(config);
  if (file.header.contains("config")) prov["state_config"] = file.header.at("config");
  write_dataset(out, data, prov);
  return out;
}

// ---------------------------------------------------------------- estimate

inline ErrorMethod error_method_of(const std::string& name) {
  return name == "jackknife" ? ErrorMethod::jackknife : ErrorMethod::standard_error;
}

inline json table_meta(std::string_view kind, const LoadedDataset& loaded, const RunConfig& config) {
  const auto& md = loaded.data.metadata;
  json meta = provenance(config);
  meta["kind"] = kind;
  meta["n_qubits"] = md.n_qubits;
  meta["n_u"] = md.n_u;
  meta["n_m"] = md.n_m;
  meta["seed"] = md.seed;
  meta["time_ms"] = md.time_ms;
  meta["state_descriptor"] = md.state_descriptor;
  meta["error_method"] = config.error_method;
  return meta;
}

inline Table fcs_table(const FCSCurve& curve, json meta) {
  Table t{std::move(meta), {"alpha", "re", "im", "stderr_re", "stderr_im"}, {}};
  for (std::size_t k = 0; k < curve.alpha_grid.size(); ++k) {
    t.rows.push_back({format_double(curve.alpha_grid[k]), format_double(curve.values[k].real()),
                      format_double(curve.values[k].imag()), format_double(curve.stderr_re[k]),
                      format_double(curve.stderr_im[k])});
  }
  return t;
}

inline Table pdf_table(const PDFEstimate& pdf, json meta) {
  Table t{std::move(meta), {"q", "p", "stderr"}, {}};
  for (std::size_t k = 0; k < pdf.outcomes.size(); ++k) {
    t.rows.push_back({std::to_string(pdf.outcomes[k]), format_double(pdf.probabilities[k]),
                      format_double(pdf.std_error[k])});
  }
  return t;
}

inline json sites_json(const SubsystemSpec& s) { return json(s.sites()); }

inline std::vector<fs::path> cmd_estimate(const fs::path& dataset_path, const RunConfig& config,
                                          const fs::path& prefix) {
  const LoadedDataset loaded = read_dataset(dataset_path);
  const auto& data = loaded.data;
  const SubsystemSpec subsystem = parse_subsystem(config.subsystem);
  subsystem.validate(data.metadata.n_qubits);
  const bool propagated = config.error_method == "propagated";
  if (propagated && config.bulk_average) throw InputError("propagated errors are not available with bulk averaging");
  if (config.error_method != "stderr" && config.error_method != "jackknife" && !propagated) {
    throw InputError("error method must be stderr, jackknife or propagated");
  }
  const EstimateOptions options{error_method_of(config.error_method), config.threads};
  const int n_a = subsystem.size();
  const auto grid = default_alpha_grid(n_a, config.alpha_points);

  std::vector<fs::path> written;
  Table moments{table_meta("moments", loaded, config),
                {"time_ms", "axis", "mean", "stderr_mean", "second", "stderr_second"}, {}};
  moments.meta["subsystem"] = sites_json(subsystem);
  for (Axis axis : config.axes) {
    const std::string ax(to_string(axis));
    json fmeta = table_meta("fcs", loaded, config);
    json pmeta = table_meta("pdf", loaded, config);
    fmeta["axis"] = pmeta["axis"] = ax;
    FCSCurve curve;
    PDFEstimate pdf;
    if (config.bulk_average) {
      const auto f = average_bulk_subsystems(data, n_a, axis, BulkTarget::fcs(grid), config.bulk_exclusion, options);
      const auto p = average_bulk_subsystems(data, n_a, axis, BulkTarget::pdf(), config.bulk_exclusion, options);
      curve = *f.fcs;
      pdf = *p.pdf;
      json windows = json::array();
      for (const auto& w : f.windows) windows.push_back(sites_json(w));
      fmeta["windows"] = pmeta["windows"] = windows;
      fmeta["subsystem"] = pmeta["subsystem"] = sites_json(f.windows.front());
    } else {
      curve = propagated ? propagated_fcs_curve(data, subsystem, axis, grid, options)
                         : estimate_fcs(data, subsystem, axis, grid, options);
      pdf = estimate_pdf(data, subsystem, axis, options);
      fmeta["subsystem"] = pmeta["subsystem"] = sites_json(subsystem);
    }
    fs::path fpath = prefix;
    fpath += "_fcs_" + ax + ".csv";
    fs::path ppath = prefix;
    ppath += "_pdf_" + ax + ".csv";
    write_table(fpath, fcs_table(curve, std::move(fmeta)));
    write_table(ppath, pdf_table(pdf, std::move(pmeta)));
    written.push_back(fpath);
    written.push_back(ppath);

    const auto m = estimate_magnetization_moments(data, subsystem, axis, options);
    moments.rows.push_back({format_double(data.metadata.time_ms), ax, format_double(m.mean.value),
                            format_double(m.mean.std_error), format_double(m.second.value),
                            format_double(m.second.std_error)});
  }
  fs::path mpath = prefix;
  mpath += "_moments.csv";
  write_table(mpath, moments);
  written.push_back(mpath);
  return written;
}

// ------------------------------------------------------------------ oracle

inline DensityMatrix reduced_state(const StateFile& file, const SubsystemSpec& subsystem) {
  subsystem.validate(file.n_qubits());
  if (const auto* psi = std::get_if<StateVector>(&file.state)) return partial_trace(*psi, subsystem);
  return partial_trace(std::get<DensityMatrix>(file.state), subsystem);
}

/// Exact values averaged over `windows` (a single window for no averaging).
inline std::vector<cplx> exact_fcs_over(const StateFile& file, const std::vector<SubsystemSpec>& windows, Axis axis,
                                        std::span<const double> grid) {
  std::vector<cplx> out(grid.size(), cplx(0.0));
  for (const auto& w : windows) {
    const auto values = exact_fcs(reduced_state(file, w), axis, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) out[k] += values[k] / static_cast<double>(windows.size());
  }
  return out;
}

inline Distribution exact_pdf_over(const StateFile& file, const std::vector<SubsystemSpec>& windows, Axis axis) {
  Distribution out;
  for (const auto& w : windows) {
    const auto d = exact_pdf(reduced_state(file, w), axis);
    if (out.outcomes.empty()) {
      out.outcomes = d.outcomes;
      out.probabilities.assign(d.probabilities.size(), 0.0);
    }
    for (std::size_t k = 0; k < d.probabilities.size(); ++k) {
      out.probabilities[k] += d.probabilities[k] / static_cast<double>(windows.size());
    }
  }
  return out;
}

inline std::vector<fs::path> cmd_oracle(const fs::path& state_path, const RunConfig& config, const fs::path& prefix) {
  const StateFile file = read_state(state_path);
  const SubsystemSpec subsystem = parse_subsystem(config.subsystem);
  subsystem.validate(file.n_qubits());
  const int n_a = subsystem.size();
  const auto windows = config.bulk_average ? bulk_windows(file.n_qubits(), n_a, config.bulk_exclusion)
                                           : std::vector<SubsystemSpec>{subsystem};
  const auto grid = default_alpha_grid(n_a, config.alpha_points);

  json base = provenance(config);
  base["n_qubits"] = file.n_qubits();
  base["time_ms"] = file.time_ms();
  base["state_descriptor"] = file.descriptor();
  base["exact"] = true;
  base["subsystem"] = sites_json(windows.front());
  if (config.bulk_average) {
    json w = json::array();
    for (const auto& s : windows) w.push_back(sites_json(s));
    base["windows"] = w;
  }

  std::vector<fs::path> written;
  Table moments{base, {"time_ms", "axis", "mean", "second"}, {}};
  moments.meta["kind"] = "moments";
  moments.meta["subsystem"] = sites_json(subsystem);
  for (Axis axis : config.axes) {
    const std::string ax(to_string(axis));
    Table f{base, {"alpha", "re", "im"}, {}};
    f.meta["kind"] = "fcs";
    f.meta["axis"] = ax;
    const auto values = exact_fcs_over(file, windows, axis, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      f.rows.push_back({format_double(grid[k]), format_double(values[k].real()), format_double(values[k].imag())});
    }
    Table p{base, {"q", "p"}, {}};
    p.meta["kind"] = "pdf";
    p.meta["axis"] = ax;
    const auto d = exact_pdf_over(file, windows, axis);
    for (std::size_t k = 0; k < d.outcomes.size(); ++k) {
      p.rows.push_back({std::to_string(d.outcomes[k]), format_double(d.probabilities[k])});
    }
    fs::path fpath = prefix;
    fpath += "_fcs_" + ax + ".csv";
    fs::path ppath = prefix;
    ppath += "_pdf_" + ax + ".csv";
    write_table(fpath, f);
    write_table(ppath, p);
    written.push_back(fpath);
    written.push_back(ppath);

    const auto own = exact_pdf(reduced_state(file, subsystem), axis);
    moments.rows.push_back({format_double(file.time_ms()), ax, format_double(own.mean()),
                            format_double(own.second_moment())});
  }
  fs::path mpath = prefix;
  mpath += "_moments.csv";
  write_table(mpath, moments);
  written.push_back(mpath);
  return written;
}

inline std::optional<Axis> closed_form_axis(const ClosedFormSpec& spec) {
  switch (spec.family) {
    case ClosedFormFamily::neel_fcs_x:
    case ClosedFormFamily::neel_pdf_x:
    case ClosedFormFamily::tilted_fcs_x:
      return Axis::x;
    case ClosedFormFamily::neel_bitflip_fcs_z:
    case ClosedFormFamily::tilted_fcs_z:
    case ClosedFormFamily::tilted_pdf_z_halfpi:
      return Axis::z;
    case ClosedFormFamily::parity:
      return spec.axis;
  }
  return std::nullopt;
}

inline fs::path cmd_closed_form(const ClosedFormSpec& spec, const RunConfig& config, const fs::path& out) {
  spec.validate();
  json meta = provenance(config);
  meta["exact"] = true;
  meta["closed_form"] = {{"family", to_string(spec.family)},
                         {"n_a", spec.n_a},
                         {"theta", spec.theta},
                         {"rates", spec.rates},
                         {"first_site", spec.first_site}};
  if (auto a = closed_form_axis(spec)) meta["axis"] = std::string(to_string(*a));
  std::vector<int> sites;
  for (int k = 0; k < spec.n_a; ++k) sites.push_back(spec.first_site + k);
  meta["subsystem"] = sites;
  Table t;
  if (spec.family == ClosedFormFamily::parity) {
    meta["kind"] = "parity";
    t = Table{meta, {"re", "im"}, {}};
    const cplx v = closed_form(spec, 0.0);
    t.rows.push_back({format_double(v.real()), format_double(v.imag())});
  } else if (is_pdf_family(spec.family)) {
    meta["kind"] = "pdf";
    t = Table{meta, {"q", "p"}, {}};
    for (int q : magnetization_outcomes(spec.n_a)) {
      t.rows.push_back({std::to_string(q), format_double(closed_form(spec, q).real())});
    }
  } else {
    meta["kind"] = "fcs";
    t = Table{meta, {"alpha", "re", "im"}, {}};
    for (double a : default_alpha_grid(spec.n_a, config.alpha_points)) {
      const cplx v = closed_form(spec, a);
      t.rows.push_back({format_double(a), format_double(v.real()), format_double(v.imag())});
    }
  }
  write_table(out, t);
  return out;
}

// ----------------------------------------------------------------- compare

struct StateSource {
  fs::path path;
};
struct TableSource {
  fs::path path;
};
using ExactSource = std::variant<StateSource, TableSource>;

struct CompareSummary {
  fs::path path;
  double max_abs_z = 0.0;
};

inline double z_score(double estimate, double exact, double std_error) {
  const double diff = estimate - exact;
  if (std_error > 0.0) return diff / std_error;
  if (std::abs(diff) <= 1e-12) return 0.0;
  return std::copysign(std::numeric_limits<double>::infinity(), diff);
}

inline std::vector<SubsystemSpec> windows_of(const json& meta) {
  std::vector<SubsystemSpec> out;
  if (meta.contains("windows")) {
    for (const auto& w : meta.at("windows")) out.emplace_back(w.get<std::vector<int>>());
  } else {
    out.emplace_back(meta.at("subsystem").get<std::vector<int>>());
  }
  return out;
}

inline CompareSummary cmd_compare(const fs::path& estimate_path, const ExactSource& source, const fs::path& out) {
  const Table est = parse_table(read_file(estimate_path));
  const std::string kind = est.meta.value("kind", std::string());
  if (kind != "fcs" && kind != "pdf") throw InputError("compare expects an fcs or pdf estimate table");
  const Axis axis = parse_axis(est.meta.at("axis").get<std::string>());
  const bool is_fcs = kind == "fcs";
  const auto key = est.numeric_column(is_fcs ? "alpha" : "q");

  std::vector<double> exact_re(key.size(), 0.0);
  std::vector<double> exact_im(key.size(), 0.0);
  json exact_meta;
  if (const auto* s = std::get_if<StateSource>(&source)) {
    const StateFile file = read_state(s->path);
    exact_meta = file.header;
    exact_meta.erase("config");
    const auto windows = windows_of(est.meta);
    if (is_fcs) {
      const auto v = exact_fcs_over(file, windows, axis, key);
      for (std::size_t k = 0; k < key.size(); ++k) {
        exact_re[k] = v[k].real();
        exact_im[k] = v[k].imag();
      }
    } else {
      const auto d = exact_pdf_over(file, windows, axis);
      for (std::size_t k = 0; k < key.size(); ++k) exact_re[k] = d.at(static_cast<int>(key[k]));
    }
  } else {
    const Table ex = read_table(std::get<TableSource>(source).path);
    exact_meta = ex.meta;
    exact_meta.erase("config");
    if (ex.meta.value("kind", std::string()) != kind) throw InputError("exact table kind differs from the estimate");
    if (ex.meta.contains("axis") && ex.meta.at("axis").get<std::string>() != est.meta.at("axis").get<std::string>()) {
      throw InputError("exact table axis differs from the estimate");
    }
    const auto ekey = ex.numeric_column(is_fcs ? "alpha" : "q");
    bool same = ekey.size() == key.size();
    for (std::size_t k = 0; same && k < key.size(); ++k) same = std::abs(ekey[k] - key[k]) <= 1e-12;
    if (!same) throw InputError("grid mismatch between estimate and exact table");
    exact_re = ex.numeric_column(is_fcs ? "re" : "p");
    if (is_fcs) exact_im = ex.numeric_column("im");
  }

  json meta = est.meta;
  meta["kind"] = "compare_" + kind;
  meta["exact_source"] = exact_meta;
  double max_abs_z = 0.0;
  Table t;
  if (is_fcs) {
    const auto re = est.numeric_column("re");
    const auto im = est.numeric_column("im");
    const auto se_re = est.numeric_column("stderr_re");
    const auto se_im = est.numeric_column("stderr_im");
    t = Table{meta, {"alpha", "re", "im", "stderr_re", "stderr_im", "exact_re", "exact_im", "z_re", "z_im"}, {}};
    for (std::size_t k = 0; k < key.size(); ++k) {
      const double zr = z_score(re[k], exact_re[k], se_re[k]);
      const double zi = z_score(im[k], exact_im[k], se_im[k]);
      max_abs_z = std::max({max_abs_z, std::abs(zr), std::abs(zi)});
      t.rows.push_back({format_double(key[k]), format_double(re[k]), format_double(im[k]), format_double(se_re[k]),
                        format_double(se_im[k]), format_double(exact_re[k]), format_double(exact_im[k]),
                        format_double(zr), format_double(zi)});
    }
  } else {
    const auto p = est.numeric_column("p");
    const auto se = est.numeric_column("stderr");
    t = Table{meta, {"q", "p", "stderr", "exact", "z"}, {}};
    for (std::size_t k = 0; k < key.size(); ++k) {
      const double z = z_score(p[k], exact_re[k], se[k]);
      max_abs_z = std::max(max_abs_z, std::abs(z));
      t.rows.push_back({format_double(key[k]), format_double(p[k]), format_double(se[k]), format_double(exact_re[k]),
                        format_double(z)});
    }
  }
  write_table(out, t, "# max_abs_z=" + format_double(max_abs_z) + "\n");
  return {out, max_abs_z};
}

// -------------------------------------------------------------------- hist

struct HistSummary {
  fs::path path;
  double pooled_p_value = 0.0;
};

inline HistSummary cmd_hist(const fs::path& dataset_path, const RunConfig& config, const fs::path& out) {
  const LoadedDataset loaded = read_dataset(dataset_path);
  const auto h = uniformity_histogram(loaded.data);
  json meta = table_meta("hist", loaded, config);
  meta.erase("error_method");
  const double pooled_p = flatness_p_value(h.pooled);
  meta["pooled_p_value"] = pooled_p;
  std::vector<double> per_site_p;
  for (const auto& counts : h.per_site) per_site_p.push_back(flatness_p_value(counts));
  meta["per_site_p_values"] = per_site_p;
  Table t{std::move(meta), {"m", "pooled"}, {}};
  for (std::size_t s = 0; s < h.per_site.size(); ++s) t.columns.push_back("site_" + std::to_string(s + 1));
  for (std::size_t m = 0; m < h.pooled.size(); ++m) {
    std::vector<std::string> row{std::to_string(m), std::to_string(h.pooled[m])};
    for (const auto& counts : h.per_site) row.push_back(std::to_string(counts[m]));
    t.rows.push_back(std::move(row));
  }
  write_table(out, t);
  return {out, pooled_p};
}

}  // namespace fcs::cli
