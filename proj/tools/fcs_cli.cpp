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


// Batch command-line front end:
//   fcs_cli <simulate|acquire|estimate|oracle|compare|hist> [options]
// Options given on the command line override values from --config/--case.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "fcs/cli/commands.hpp"

namespace {

using fcs::cli::RunConfig;

struct Flags {
  std::string config_path;
  std::string case_name;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<unsigned> threads;

  std::optional<int> n_qubits;
  std::optional<double> j0;
  std::optional<double> alpha_exp;
  std::string times;
  std::string initial;
  std::string theta;
  std::string bitflip;
  std::optional<double> dephasing;
  std::optional<double> trotter_step;

  std::optional<int> n_u;
  std::optional<int> n_m;

  std::string subsystem;
  std::string axes;
  std::optional<int> alpha_points;
  bool bulk = false;
  std::optional<int> bulk_exclusion;
  std::string error_method;

  std::string state;
  std::string dataset;
  std::string estimate;
  std::string exact;
  std::string family;
  std::optional<int> n_a;
  std::string rates;
  std::optional<int> first_site;
  std::string axis;
};

std::vector<double> parse_rates(const std::string& text) {
  if (text == "reference") return fcs::reference_neel_bitflip_rates();
  return fcs::cli::parse_number_list(text);
}

RunConfig resolve_config(const Flags& f) {
  RunConfig c;
  if (!f.case_name.empty()) c = fcs::cli::from_json(nlohmann::json{{"case", f.case_name}});
  if (!f.config_path.empty()) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(fcs::cli::read_file(f.config_path));
    } catch (const nlohmann::json::exception& e) {
      throw fcs::InputError("config file " + f.config_path + ": " + e.what());
    }
    if (j.contains("bitflip_rates") && j.at("bitflip_rates").is_string()) {
      j["bitflip_rates"] = parse_rates(j.at("bitflip_rates").get<std::string>());
    }
    c = fcs::cli::from_json(j, c);
  }
  if (f.seed) c.seed = *f.seed;
  if (f.threads) c.threads = *f.threads;
  if (f.n_qubits) c.quench.n_qubits = *f.n_qubits;
  if (f.j0) c.quench.j0 = *f.j0;
  if (f.alpha_exp) c.quench.alpha_exp = *f.alpha_exp;
  if (!f.times.empty()) c.quench.times_ms = fcs::cli::parse_number_list(f.times);
  if (!f.initial.empty()) c.initial.kind = fcs::cli::parse_initial_kind(f.initial);
  if (!f.theta.empty()) c.initial.theta = fcs::cli::parse_angle(f.theta);
  if (!f.bitflip.empty()) {
    c.initial.bitflip_rates = f.bitflip == "none" ? std::vector<double>{} : parse_rates(f.bitflip);
  }
  if (f.dephasing) c.dephasing_rate_per_s = *f.dephasing;
  if (f.trotter_step) c.trotter_step_ms = *f.trotter_step;
  if (f.n_u) c.n_u = *f.n_u;
  if (f.n_m) c.n_m = *f.n_m;
  if (!f.subsystem.empty()) c.subsystem = f.subsystem;
  if (!f.axes.empty()) c.axes = fcs::cli::parse_axes(f.axes);
  if (f.alpha_points) c.alpha_points = *f.alpha_points;
  if (f.bulk) c.bulk_average = true;
  if (f.bulk_exclusion) c.bulk_exclusion = *f.bulk_exclusion;
  if (!f.error_method.empty()) c.error_method = f.error_method;
  return c;
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw fcs::InputError(std::string("missing required option ") + flag);
  return value;
}

void add_model_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--n", f.n_qubits, "Number of ions");
  cmd->add_option("--j0", f.j0, "Coupling strength J0 in rad/s");
  cmd->add_option("--alpha-exp", f.alpha_exp, "Power-law exponent of the couplings");
  cmd->add_option("--times", f.times, "Evolution times in ms, comma separated");
  cmd->add_option("--initial", f.initial, "Initial state: neel or tilted");
  cmd->add_option("--theta", f.theta, "Tilt angle in radians, or with a pi suffix (0.5pi)");
  cmd->add_option("--bitflip", f.bitflip, "Per-site bit-flip rates, 'reference' or 'none'");
  cmd->add_option("--dephasing", f.dephasing, "Dephasing rate per site in 1/s");
  cmd->add_option("--trotter-step", f.trotter_step, "Trotter step in ms for dephased evolution");
}

void add_analysis_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--subsystem", f.subsystem, "Subsystem sites, a:b or a,b,c (1-based)");
  cmd->add_option("--axes", f.axes, "Measurement axes, e.g. xz");
  cmd->add_option("--alpha-points", f.alpha_points, "Number of counting-field grid points");
  cmd->add_flag("--bulk", f.bulk, "Average over all bulk windows of the subsystem size");
  cmd->add_option("--bulk-exclusion", f.bulk_exclusion, "Edge sites excluded from bulk windows");
  cmd->add_option("--error-method", f.error_method, "stderr, jackknife or propagated");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Full counting statistics from randomized measurements"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  app.add_option("--config", f.config_path, "JSON configuration file");
  app.add_option("--case", f.case_name, "Preset experiment case: I or II");
  app.add_option("--seed", f.seed, "Random seed");
  app.add_option("--out", f.out, "Output file or prefix");
  app.add_option("--threads", f.threads, std::string("Worker threads (default: $") + fcs::kThreadsEnv +
                                             " or all cores)");
  app.set_version_flag("--version", fcs::cli::build_identifier());

  auto* simulate = app.add_subcommand("simulate", "Prepare and evolve the initial state");
  add_model_flags(simulate, f);

  auto* acquire = app.add_subcommand("acquire", "Sample a randomized-measurement dataset from a state file");
  acquire->add_option("--state", f.state, "State file");
  acquire->add_option("--n-u", f.n_u, "Number of random rotations");
  acquire->add_option("--n-m", f.n_m, "Shots per rotation");

  auto* estimate = app.add_subcommand("estimate", "Estimate FCS, PDF and moments from a dataset");
  estimate->add_option("--dataset", f.dataset, "Dataset file");
  add_analysis_flags(estimate, f);

  auto* oracle = app.add_subcommand("oracle", "Exact FCS, PDF and moments from a state or a closed form");
  oracle->add_option("--state", f.state, "State file");
  oracle->add_option("--family", f.family,
                     "Closed form: neel_fcs_x, neel_pdf_x, neel_bitflip_fcs_z, tilted_fcs_z, tilted_fcs_x, "
                     "tilted_pdf_z_halfpi, parity");
  oracle->add_option("--n-a", f.n_a, "Subsystem size for closed forms");
  oracle->add_option("--rates", f.rates, "Bit-flip rates of the subsystem sites, or 'reference'");
  oracle->add_option("--first-site", f.first_site, "First subsystem site for closed forms");
  oracle->add_option("--axis", f.axis, "Parity axis");
  oracle->add_option("--theta", f.theta, "Tilt angle for closed forms");
  add_analysis_flags(oracle, f);

  auto* compare = app.add_subcommand("compare", "Compare an estimate table with exact values");
  compare->add_option("--estimate", f.estimate, "Estimate table (fcs or pdf)");
  compare->add_option("--state", f.state, "State file supplying exact values");
  compare->add_option("--exact", f.exact, "Exact table from the oracle command");

  auto* hist = app.add_subcommand("hist", "Histogram of per-rotation outcome counts");
  hist->add_option("--dataset", f.dataset, "Dataset file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const RunConfig config = resolve_config(f);
    if (*simulate) {
      config.validate();
      for (const auto& p : fcs::cli::cmd_simulate(config, f.out.empty() ? "state.json" : f.out)) {
        std::cout << p.string() << '\n';
      }
    } else if (*acquire) {
      std::cout << fcs::cli::cmd_acquire(require(f.state, "--state"), config,
                                         f.out.empty() ? "dataset.jsonl" : f.out)
                       .string()
                << '\n';
    } else if (*estimate) {
      config.validate();
      for (const auto& p : fcs::cli::cmd_estimate(require(f.dataset, "--dataset"), config,
                                                  f.out.empty() ? "estimate" : f.out)) {
        std::cout << p.string() << '\n';
      }
    } else if (*oracle) {
      config.validate();
      if (!f.family.empty()) {
        fcs::ClosedFormSpec spec;
        spec.family = fcs::parse_closed_form_family(f.family);
        spec.n_a = f.n_a.value_or(4);
        spec.theta = config.initial.theta;
        if (!f.rates.empty()) {
          spec.rates = parse_rates(f.rates);
          if (f.rates == "reference") {
            const int first = f.first_site.value_or(1);
            if (first < 1 || first - 1 + spec.n_a > static_cast<int>(spec.rates.size())) {
              throw fcs::InputError("subsystem exceeds the reference rate table");
            }
            spec.rates = std::vector<double>(spec.rates.begin() + (first - 1), spec.rates.begin() + (first - 1 + spec.n_a));
          }
        }
        spec.first_site = f.first_site.value_or(1);
        if (!f.axis.empty()) spec.axis = fcs::parse_axis(f.axis);
        std::cout << fcs::cli::cmd_closed_form(spec, config, f.out.empty() ? "closed_form.csv" : f.out).string()
                  << '\n';
      } else {
        for (const auto& p : fcs::cli::cmd_oracle(require(f.state, "--state or --family"), config,
                                                  f.out.empty() ? "exact" : f.out)) {
          std::cout << p.string() << '\n';
        }
      }
    } else if (*compare) {
      if (f.state.empty() == f.exact.empty()) throw fcs::InputError("give exactly one of --state or --exact");
      fcs::cli::ExactSource source = f.state.empty() ? fcs::cli::ExactSource{fcs::cli::TableSource{f.exact}}
                                                     : fcs::cli::ExactSource{fcs::cli::StateSource{f.state}};
      const auto summary = fcs::cli::cmd_compare(require(f.estimate, "--estimate"), source,
                                                 f.out.empty() ? "compare.csv" : f.out);
      std::cout << summary.path.string() << "\nmax_abs_z=" << fcs::cli::format_double(summary.max_abs_z) << '\n';
    } else if (*hist) {
      const auto summary = fcs::cli::cmd_hist(require(f.dataset, "--dataset"), config,
                                              f.out.empty() ? "hist.csv" : f.out);
      std::cout << summary.path.string() << "\npooled_p_value=" << fcs::cli::format_double(summary.pooled_p_value)
                << '\n';
    }
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return EXIT_SUCCESS;
}
