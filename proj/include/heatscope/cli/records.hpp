#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "heatscope/errors.hpp"
#include "heatscope/rng.hpp"

namespace heatscope::cli {

using Json = nlohmann::json;

inline constexpr const char* kArtifactVersion = "heatscope 0.1.0";

// Shortest decimal that reads back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// JSON has no infinities; they are written as strings.
inline Json json_number(double v) {
  if (std::isfinite(v)) return v;
  return format_double(v);
}

inline Json json_array(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_number(v[i]));
  return a;
}

inline Json json_array(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

inline std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// FNV-1a over the canonical (sorted-key, compact) dump of the config.
inline std::string config_hash(const Json& config) { return hex64(fnv1a64(config.dump())); }

using Cell = std::variant<std::string, double, std::int64_t>;

inline std::string csv_field(const Cell& c) {
  std::string s;
  if (const auto* d = std::get_if<double>(&c)) s = format_double(*d);
  else if (const auto* i = std::get_if<std::int64_t>(&c)) s = std::to_string(*i);
  else s = std::get<std::string>(c);
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + '"';
}

// RFC 4180 table: header row, CRLF line ends. Provenance columns
// (config_hash, artifact_version, seed) are prepended to every row.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) {
    if (row.size() != header.size()) throw ContractError("csv: row width does not match header");
    rows.push_back(std::move(row));
  }

  std::string render(const std::string& hash, std::uint64_t seed) const {
    std::string out = "config_hash,artifact_version,seed";
    for (const auto& h : header) out += "," + csv_field(h);
    out += "\r\n";
    const std::string prefix = csv_field(hash) + "," + csv_field(std::string(kArtifactVersion)) + "," +
                               std::to_string(seed);
    for (const auto& r : rows) {
      out += prefix;
      for (const auto& c : r) out += "," + csv_field(c);
      out += "\r\n";
    }
    return out;
  }
};

inline std::string join_indices(const std::vector<std::size_t>& v, char sep = ' ') {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += sep;
    s += std::to_string(v[i]);
  }
  return s;
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot open " + p.string());
  f << content;
  if (!f) throw std::system_error(errno, std::generic_category(), "cannot write " + p.string());
}

}  // namespace heatscope::cli
