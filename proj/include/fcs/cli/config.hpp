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

// Run configuration shared by every subcommand. Serializes to JSON; loading
// a partial object keeps defaults for missing keys, so config files only need
// the values they change.

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "fcs/dynamics.hpp"
#include "fcs/errors.hpp"
#include "fcs/shadows.hpp"
#include "fcs/spincore.hpp"

namespace fcs::cli {

using nlohmann::json;

struct RunConfig {
  // experiment
  QuenchConfig quench;
  InitialStateSpec initial;
  double dephasing_rate_per_s = 0.0;  // 0 disables the Trotterized dephasing stand-in
  double trotter_step_ms = 0.1;
  // acquisition
  int n_u = 500;
  int n_m = 150;
  std::uint64_t seed = 1;
  // analysis
  std::string subsystem = "4:7";
  std::vector<Axis> axes{Axis::x, Axis::z};
  int alpha_points = 65;
  bool bulk_average = false;
  int bulk_exclusion = 1;
  std::string error_method = "stderr";  // stderr | jackknife | propagated
  unsigned threads = 0;

  /// Neel quench on ten ions.
  static RunConfig case_one() {
    RunConfig c;
    c.quench = {10, 420.0, 1.24, {0.0}};
    c.initial = {InitialKind::neel, 0.0, {}};
    c.n_u = 500;
    c.n_m = 150;
    c.subsystem = "4:7";
    return c;
  }

  /// Tilted-ferromagnet quench on twelve ions.
  static RunConfig case_two(double theta = 0.5 * std::numbers::pi) {
    RunConfig c;
    c.quench = {12, 560.0, 1.0, {0.0}};
    c.initial = {InitialKind::tilted_ferromagnet, theta, {}};
    c.n_u = 500;
    c.n_m = 30;
    c.subsystem = "5:8";
    return c;
  }

  void validate() const {
    quench.validate();
    initial.validate(quench.n_qubits);
    if (n_u < 1 || n_m < 1) throw InputError("n_u and n_m must be positive");
    if (alpha_points < 2) throw InputError("alpha grid needs at least two points");
    if (error_method != "stderr" && error_method != "jackknife" && error_method != "propagated") {
      throw InputError("error method must be stderr, jackknife or propagated");
    }
    if (dephasing_rate_per_s < 0.0) throw InputError("dephasing rate must be non-negative");
    if (!(trotter_step_ms > 0.0)) throw InputError("Trotter step must be positive");
    if (bulk_exclusion < 0) throw InputError("bulk exclusion must be non-negative");
    if (axes.empty()) throw InputError("at least one axis is required");
  }
};

/// "a:b" (inclusive range) or "a,b,c", 1-based.
inline SubsystemSpec parse_subsystem(std::string_view text) {
  auto to_int = [&](std::string_view part) {
    int value = 0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size()) {
      throw InputError("bad subsystem '" + std::string(text) + "' (use a:b or a,b,c)");
    }
    return value;
  };
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    return SubsystemSpec::range(to_int(text.substr(0, colon)), to_int(text.substr(colon + 1)));
  }
  std::vector<int> sites;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    sites.push_back(to_int(text.substr(start, end - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return SubsystemSpec(std::move(sites));
}

/// Radians, or a multiple of pi written with a "pi" suffix ("0.5pi").
inline double parse_angle(std::string_view text) {
  bool times_pi = false;
  if (text.size() >= 2 && text.substr(text.size() - 2) == "pi") {
    times_pi = true;
    text.remove_suffix(2);
  }
  double value = 1.0;
  if (!text.empty()) {
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw InputError("bad angle '" + std::string(text) + "'");
  }
  return times_pi ? value * std::numbers::pi : value;
}

inline std::vector<double> parse_number_list(std::string_view text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string_view::npos ? text.size() : comma;
    const auto part = text.substr(start, end - start);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), value);
    if (ec != std::errc() || ptr != part.data() + part.size()) throw InputError("bad number '" + std::string(part) + "'");
    out.push_back(value);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::vector<Axis> parse_axes(std::string_view text) {
  std::vector<Axis> out;
  for (char ch : text) {
    if (ch == ',' || ch == ' ') continue;
    out.push_back(parse_axis(std::string_view(&ch, 1)));
  }
  if (out.empty()) throw InputError("no axes given");
  return out;
}

inline std::string to_string(InitialKind k) { return k == InitialKind::neel ? "neel" : "tilted"; }

inline InitialKind parse_initial_kind(std::string_view text) {
  if (text == "neel") return InitialKind::neel;
  if (text == "tilted" || text == "tilted_ferromagnet") return InitialKind::tilted_ferromagnet;
  throw InputError("unknown initial state '" + std::string(text) + "' (neel or tilted)");
}

inline json to_json(const RunConfig& c) {
  json axes = json::array();
  for (Axis a : c.axes) axes.push_back(std::string(to_string(a)));
  return json{
      {"n_qubits", c.quench.n_qubits},
      {"j0", c.quench.j0},
      {"alpha_exp", c.quench.alpha_exp},
      {"times_ms", c.quench.times_ms},
      {"initial", to_string(c.initial.kind)},
      {"theta", c.initial.theta},
      {"bitflip_rates", c.initial.bitflip_rates},
      {"dephasing_rate_per_s", c.dephasing_rate_per_s},
      {"trotter_step_ms", c.trotter_step_ms},
      {"n_u", c.n_u},
      {"n_m", c.n_m},
      {"seed", c.seed},
      {"subsystem", c.subsystem},
      {"axes", axes},
      {"alpha_points", c.alpha_points},
      {"bulk_average", c.bulk_average},
      {"bulk_exclusion", c.bulk_exclusion},
      {"error_method", c.error_method},
      {"threads", c.threads},
  };
}

/// Applies the keys present in `j` on top of `base`.
inline RunConfig from_json(const json& j, RunConfig base = {}) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  RunConfig c = std::move(base);
  if (j.contains("case")) {
    const auto name = j.at("case").get<std::string>();
    if (name == "I" || name == "1") c = RunConfig::case_one();
    else if (name == "II" || name == "2") c = RunConfig::case_two();
    else throw InputError("unknown case '" + name + "' (I or II)");
  }
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("n_qubits", c.quench.n_qubits);
  get("j0", c.quench.j0);
  get("alpha_exp", c.quench.alpha_exp);
  get("times_ms", c.quench.times_ms);
  if (j.contains("initial")) c.initial.kind = parse_initial_kind(j.at("initial").get<std::string>());
  if (j.contains("theta")) {
    const auto& t = j.at("theta");
    c.initial.theta = t.is_string() ? parse_angle(t.get<std::string>()) : t.get<double>();
  }
  get("bitflip_rates", c.initial.bitflip_rates);
  get("dephasing_rate_per_s", c.dephasing_rate_per_s);
  get("trotter_step_ms", c.trotter_step_ms);
  get("n_u", c.n_u);
  get("n_m", c.n_m);
  get("seed", c.seed);
  get("subsystem", c.subsystem);
  if (j.contains("axes")) {
    c.axes.clear();
    for (const auto& a : j.at("axes")) c.axes.push_back(parse_axis(a.get<std::string>()));
  }
  get("alpha_points", c.alpha_points);
  get("bulk_average", c.bulk_average);
  get("bulk_exclusion", c.bulk_exclusion);
  get("error_method", c.error_method);
  get("threads", c.threads);
  return c;
}

}  // namespace fcs::cli
