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

// File formats.
//
// Dataset (line-delimited JSON):
//   line 1: {"schema":"rm-dataset/1","n_qubits","n_u","n_m","seed",
//            "state_descriptor","time_ms","config","build"}
//   line r+2: {"r", "unitaries":[[re00,im00,re01,im01,re10,im10,re11,im11,z1,y,z2],...],
//              "shots":["0101...", ...]}
// State: one JSON object, schema "rm-state/1", pure amplitudes or mixed
//   entries (row-major) split into real and imaginary arrays.
// Tables: comma-separated values preceded by one "# {json}" metadata line.
//
// Doubles are written in shortest round-trip form. Every file is written to
// a temporary sibling and renamed into place.

#include <json.hpp>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unistd.h>
#include <variant>
#include <vector>

#include "fcs/errors.hpp"
#include "fcs/randmeas.hpp"
#include "fcs/spincore.hpp"

namespace fcs::cli {

using nlohmann::json;

inline constexpr std::string_view kDatasetSchema = "rm-dataset/1";
inline constexpr std::string_view kStateSchema = "rm-state/1";
inline constexpr std::string_view kTableSchema = "rm-table/1";

inline std::string build_identifier() {
#ifdef FCS_VERSION_STRING
  std::string version = FCS_VERSION_STRING;
#else
  std::string version = "dev";
#endif
#if defined(__clang__)
  const std::string compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
  const std::string compiler = "gcc " __VERSION__;
#else
  const std::string compiler = "unknown";
#endif
  return "fcs-shadows " + version + " (" + compiler + ")";
}

inline std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw IoError("could not format number");
  return {buffer, ptr};
}

inline void write_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline void check_schema(const json& header, std::string_view expected, const std::string& what) {
  const std::string found = header.contains("schema") && header.at("schema").is_string()
                                ? header.at("schema").get<std::string>()
                                : std::string("<none>");
  if (found != expected) {
    throw SchemaError(what + " schema mismatch: expected " + std::string(expected) + ", found " + found);
  }
}

// ---------------------------------------------------------------- datasets

inline std::string serialize_dataset(const RandomizedDataset& data, const json& provenance = json::object()) {
  const auto& md = data.metadata;
  json header{{"schema", kDatasetSchema},     {"n_qubits", md.n_qubits}, {"n_u", md.n_u},
              {"n_m", md.n_m},                {"seed", md.seed},         {"state_descriptor", md.state_descriptor},
              {"time_ms", md.time_ms}};
  for (const auto& [key, value] : provenance.items()) header[key] = value;
  std::string out = header.dump() + "\n";
  for (std::size_t r = 0; r < data.records.size(); ++r) {
    const auto& rec = data.records[r];
    json unitaries = json::array();
    for (const auto& u : rec.unitaries) {
      const ZyzAngles a = u.angles.value_or(zyz_decompose(u.matrix));
      const auto& m = u.matrix;
      unitaries.push_back({m(0, 0).real(), m(0, 0).imag(), m(0, 1).real(), m(0, 1).imag(), m(1, 0).real(),
                           m(1, 0).imag(), m(1, 1).real(), m(1, 1).imag(), a.z1, a.y, a.z2});
    }
    json shots = json::array();
    for (Shot s : rec.shots) shots.push_back(shot_to_string(s, md.n_qubits));
    out += json{{"r", r}, {"unitaries", std::move(unitaries)}, {"shots", std::move(shots)}}.dump();
    out += '\n';
  }
  return out;
}

struct LoadedDataset {
  RandomizedDataset data;
  json header;
};

inline LoadedDataset parse_dataset(std::string_view text) {
  LoadedDataset out;
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    while (pos < text.size() && text[pos] == '\n') ++pos;
    if (pos >= text.size()) return {};
    const auto end = text.find('\n', pos);
    const auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() : end + 1;
    return line;
  };
  try {
    out.header = json::parse(next_line());
    check_schema(out.header, kDatasetSchema, "dataset");
    auto& md = out.data.metadata;
    md.n_qubits = out.header.at("n_qubits").get<int>();
    md.n_u = out.header.at("n_u").get<int>();
    md.n_m = out.header.at("n_m").get<int>();
    md.seed = out.header.at("seed").get<std::uint64_t>();
    md.state_descriptor = out.header.value("state_descriptor", std::string());
    md.time_ms = out.header.value("time_ms", 0.0);
    for (auto line = next_line(); !line.empty(); line = next_line()) {
      const json j = json::parse(line);
      MeasurementRecord rec;
      if (j.at("r").get<std::size_t>() != out.data.records.size()) throw SchemaError("records out of order");
      for (const auto& u : j.at("unitaries")) {
        if (u.size() != 11) throw SchemaError("rotation entry must hold 8 matrix floats and 3 angles");
        Eigen::Matrix2cd m;
        m << cplx(u[0], u[1]), cplx(u[2], u[3]), cplx(u[4], u[5]), cplx(u[6], u[7]);
        ZyzAngles angles{u[8].get<double>(), u[9].get<double>(), u[10].get<double>(),
                         std::arg(m.determinant()) / 2.0};
        rec.unitaries.push_back({m, angles});
      }
      for (const auto& s : j.at("shots")) rec.shots.push_back(parse_shot(s.get<std::string>(), md.n_qubits));
      out.data.records.push_back(std::move(rec));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed dataset: ") + e.what());
  }
  out.data.validate();
  return out;
}

inline void write_dataset(const std::filesystem::path& path, const RandomizedDataset& data,
                          const json& provenance = json::object()) {
  write_atomic(path, serialize_dataset(data, provenance));
}

inline LoadedDataset read_dataset(const std::filesystem::path& path) { return parse_dataset(read_file(path)); }

// ------------------------------------------------------------------ states

struct StateFile {
  std::variant<StateVector, DensityMatrix> state;
  json header;

  int n_qubits() const {
    return std::visit([](const auto& s) {
      if constexpr (std::is_same_v<std::decay_t<decltype(s)>, StateVector>) return s.n_qubits();
      else return s.n_sites();
    }, state);
  }
  bool is_pure() const { return std::holds_alternative<StateVector>(state); }
  double time_ms() const { return header.value("time_ms", 0.0); }
  std::string descriptor() const { return header.value("state_descriptor", std::string()); }
};

inline std::string serialize_state(const StateFile& file) {
  json j = file.header;
  j["schema"] = kStateSchema;
  std::vector<double> re;
  std::vector<double> im;
  if (const auto* psi = std::get_if<StateVector>(&file.state)) {
    j["kind"] = "pure";
    j["n_qubits"] = psi->n_qubits();
    for (const cplx& a : psi->amplitudes()) {
      re.push_back(a.real());
      im.push_back(a.imag());
    }
  } else {
    const auto& rho = std::get<DensityMatrix>(file.state);
    j["kind"] = "mixed";
    j["n_qubits"] = rho.n_sites();
    j["sites"] = rho.sites();
    const auto& m = rho.entries();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        re.push_back(m(r, c).real());
        im.push_back(m(r, c).imag());
      }
    }
  }
  j["re"] = std::move(re);
  j["im"] = std::move(im);
  return j.dump() + "\n";
}

inline StateFile parse_state(std::string_view text) {
  try {
    json j = json::parse(text);
    check_schema(j, kStateSchema, "state");
    const int n = j.at("n_qubits").get<int>();
    if (n < 1 || n > kMaxQubits) throw CapacityError("state file register size out of range");
    const auto re = j.at("re").get<std::vector<double>>();
    const auto im = j.at("im").get<std::vector<double>>();
    if (re.size() != im.size()) throw SchemaError("real and imaginary arrays differ in length");
    const std::string kind = j.at("kind").get<std::string>();
    j.erase("re");
    j.erase("im");
    const auto dim = static_cast<Eigen::Index>(detail::dim_of(n));
    if (kind == "pure") {
      if (static_cast<Eigen::Index>(re.size()) != dim) throw SchemaError("amplitude count mismatch");
      Eigen::VectorXcd v(dim);
      for (Eigen::Index k = 0; k < dim; ++k) v(k) = cplx(re[static_cast<std::size_t>(k)], im[static_cast<std::size_t>(k)]);
      return {StateVector(n, std::move(v)), std::move(j)};
    }
    if (kind == "mixed") {
      if (static_cast<Eigen::Index>(re.size()) != dim * dim) throw SchemaError("density matrix entry count mismatch");
      Eigen::MatrixXcd m(dim, dim);
      for (Eigen::Index r = 0; r < dim; ++r) {
        for (Eigen::Index c = 0; c < dim; ++c) {
          const auto k = static_cast<std::size_t>(r * dim + c);
          m(r, c) = cplx(re[k], im[k]);
        }
      }
      auto sites = j.contains("sites") ? j.at("sites").get<std::vector<int>>() : SubsystemSpec::all(n).sites();
      return {DensityMatrix(std::move(sites), std::move(m)), std::move(j)};
    }
    throw SchemaError("unknown state kind '" + kind + "'");
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed state file: ") + e.what());
  }
}

inline void write_state(const std::filesystem::path& path, const StateFile& file) {
  write_atomic(path, serialize_state(file));
}

inline StateFile read_state(const std::filesystem::path& path) { return parse_state(read_file(path)); }

// ------------------------------------------------------------------ tables

struct Table {
  json meta = json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t k = 0; k < columns.size(); ++k) {
      if (columns[k] == name) return k;
    }
    throw SchemaError("table has no column '" + std::string(name) + "'");
  }
  std::vector<double> numeric_column(std::string_view name) const {
    const std::size_t k = column(name);
    std::vector<double> out;
    for (const auto& row : rows) {
      const auto& cell = row.at(k);
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size()) {
        if (cell == "inf") value = std::numeric_limits<double>::infinity();
        else if (cell == "-inf") value = -std::numeric_limits<double>::infinity();
        else if (cell == "nan" || cell == "-nan") value = std::numeric_limits<double>::quiet_NaN();
        else throw SchemaError("non-numeric cell '" + cell + "' in column " + std::string(name));
      }
      out.push_back(value);
    }
    return out;
  }
};

inline std::string serialize_table(const Table& table, std::string_view trailer = {}) {
  json meta = table.meta;
  meta["schema"] = kTableSchema;
  std::string out = "# " + meta.dump() + "\n";
  for (std::size_t k = 0; k < table.columns.size(); ++k) out += (k ? "," : "") + table.columns[k];
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t k = 0; k < row.size(); ++k) out += (k ? "," : "") + row[k];
    out += '\n';
  }
  out += trailer;
  return out;
}

inline Table parse_table(std::string_view text) {
  Table t;
  std::istringstream in{std::string(text)};
  std::string line;
  bool have_meta = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.rfind("# ", 0) == 0) {
      if (!have_meta) {
        try {
          t.meta = json::parse(line.substr(2));
        } catch (const json::exception& e) {
          throw SchemaError(std::string("malformed table metadata: ") + e.what());
        }
        have_meta = true;
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream cells_in(line);
    std::string cell;
    while (std::getline(cells_in, cell, ',')) cells.push_back(cell);
    if (t.columns.empty()) {
      t.columns = std::move(cells);
    } else {
      if (cells.size() != t.columns.size()) throw SchemaError("table row width differs from header");
      t.rows.push_back(std::move(cells));
    }
  }
  if (!have_meta) throw SchemaError("table is missing its metadata line");
  check_schema(t.meta, kTableSchema, "table");
  return t;
}

inline void write_table(const std::filesystem::path& path, const Table& table, std::string_view trailer = {}) {
  write_atomic(path, serialize_table(table, trailer));
}

inline Table read_table(const std::filesystem::path& path) { return parse_table(read_file(path)); }

}  // namespace fcs::cli
