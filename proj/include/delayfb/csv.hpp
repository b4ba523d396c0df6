#pragma once

// RFC-4180-style CSV with '#'-prefixed metadata header lines and
// shortest-round-trip floating point fields.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "delayfb/errors.hpp"
#include "delayfb/simulate.hpp"

namespace delayfb::csv {

/// Shortest decimal representation that parses back to the same double.
inline std::string format_double(double x) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

inline std::string format_field(std::optional<double> x) {
  return x ? format_double(*x) : std::string();
}

struct Table {
  std::map<std::string, std::string> metadata;  // '#key = value' lines, in key order
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(const std::vector<std::string>& row) { rows.push_back(row); }

  std::string to_string() const {
    std::ostringstream os;
    for (const auto& [k, v] : metadata) os << "# " << k << " = " << v << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i)
      os << columns[i] << (i + 1 < columns.size() ? "," : "");
    os << "\n";
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i)
        os << row[i] << (i + 1 < row.size() ? "," : "");
      os << "\n";
    }
    return os.str();
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open for writing: " + path);
    out << to_string();
  }

  std::size_t column_index(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw Error("no such column: " + name);
  }

  std::optional<double> value(std::size_t row, std::size_t col) const {
    const auto& f = rows[row][col];
    if (f.empty()) return std::nullopt;
    double x{};
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), x);
    if (ec != std::errc{}) throw Error("not a number: '" + f + "'");
    return x;
  }
};

inline Table read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open: " + path);
  Table t;
  std::string line;
  bool header_done = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        auto trim = [](std::string s) {
          const auto a = s.find_first_not_of(" \t#");
          const auto b = s.find_last_not_of(" \t");
          return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        t.metadata[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
      }
      continue;
    }
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (!header_done) {
      t.columns = fields;
      header_done = true;
    } else {
      t.rows.push_back(fields);
    }
  }
  return t;
}

/// Trajectory export: '#'-prefixed metadata (full config, realized delay,
/// generator id), then header t,q,v and one sample per line.
inline void write_trajectory(const simulate::Trajectory& tr, const std::string& path) {
  Table t;
  const auto& c = tr.meta;
  t.metadata["g"] = format_double(c.params.g);
  t.metadata["q0"] = format_double(c.params.q0);
  t.metadata["tau"] = format_double(c.params.tau);
  t.metadata["tau_realized"] = format_double(tr.tau_realized);
  t.metadata["dt"] = format_double(c.dt);
  t.metadata["n_steps"] = std::to_string(c.n_steps);
  t.metadata["warmup_off"] = format_double(c.resolved_warmup_off());
  t.metadata["warmup_on"] = format_double(c.resolved_warmup_on());
  t.metadata["seed"] = std::to_string(c.seed);
  t.metadata["record_stride"] = std::to_string(c.record_stride);
  t.metadata["overflow_guard"] = format_double(c.overflow_guard);
  t.metadata["generator"] = tr.generator;
  t.columns = {"t", "q", "v"};
  t.rows.reserve(tr.t.size());
  for (std::size_t i = 0; i < tr.t.size(); ++i)
    t.rows.push_back({format_double(tr.t[i]), format_double(tr.q[i]), format_double(tr.v[i])});
  t.write(path);
}

struct TrajectoryData {
  std::vector<double> t, q, v;
  std::map<std::string, std::string> metadata;
};

inline TrajectoryData read_trajectory(const std::string& path) {
  auto table = read(path);
  TrajectoryData d;
  d.metadata = table.metadata;
  const auto it = table.column_index("t");
  const auto iq = table.column_index("q");
  const auto iv = table.column_index("v");
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    d.t.push_back(table.value(r, it).value());
    d.q.push_back(table.value(r, iq).value());
    d.v.push_back(table.value(r, iv).value());
  }
  return d;
}

}  // namespace delayfb::csv
