#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "kubo/core.hpp"

namespace kubo {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v == 0.0 ? 0.0 : v);  // no "-0"
  return buf;
}

inline std::string axis_name(int l) {
  static const char* names[] = {"x", "y", "z"};
  return l < 3 ? names[l] : std::to_string(l);
}

inline std::vector<std::string> csv_header(int d) {
  std::vector<std::string> h{"omega"};
  for (int l = 0; l < d; ++l)
    for (int m = 0; m < d; ++m) {
      const std::string tag = axis_name(l) + axis_name(m);
      h.push_back("re_sigma_" + tag);
      h.push_back("im_sigma_" + tag);
    }
  return h;
}

/// Header row, then omega and Re/Im of each tensor entry (row-major) per line.
inline std::string format_csv(const ConductivityResult& r) {
  std::string out;
  const auto header = csv_header(r.dim);
  for (std::size_t i = 0; i < header.size(); ++i) out += (i ? "," : "") + header[i];
  out += '\n';
  for (std::size_t w = 0; w < r.omegas.size(); ++w) {
    out += format_double(r.omegas[w]);
    for (int l = 0; l < r.dim; ++l)
      for (int m = 0; m < r.dim; ++m) {
        out += ',' + format_double(r.sigma[w](l, m).real());
        out += ',' + format_double(r.sigma[w](l, m).imag());
      }
    out += '\n';
  }
  return out;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << text;
  f.flush();
  if (!f) throw IoError("write to '" + path + "' failed");
}

inline std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void emit_csv(const ConductivityResult& r, const std::string& path) { write_text(path, format_csv(r)); }

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) {
      t.header = cells;
      first = false;
      continue;
    }
    if (cells.size() != t.header.size())
      throw IoError("csv line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " fields");
    std::vector<double> row;
    for (const auto& c : cells) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        throw IoError("csv line " + std::to_string(lineno) + ": bad number '" + c + "'");
      }
      if (used != c.size()) throw IoError("csv line " + std::to_string(lineno) + ": bad number '" + c + "'");
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

/// Rebuilds omegas and sigma from CSV text written by format_csv.
inline ConductivityResult result_from_csv(const std::string& text) {
  const CsvTable t = parse_csv(text);
  const std::size_t cols = t.header.size();
  if (cols < 1 || t.header[0] != "omega") throw IoError("csv: first column must be omega");
  int d = 0;
  while (std::size_t(1 + 2 * d * d) < cols) ++d;
  if (std::size_t(1 + 2 * d * d) != cols || t.header != csv_header(d)) throw IoError("csv: unexpected header");
  ConductivityResult r;
  r.dim = d;
  for (const auto& row : t.rows) {
    r.omegas.push_back(row[0]);
    Matrix s(d, d);
    std::size_t k = 1;
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m, k += 2) s(l, m) = cplx(row[k], row[k + 1]);
    r.sigma.push_back(s);
  }
  return r;
}

/// JSON document with omegas, sigma and metadata.
inline json result_json(const ConductivityResult& r) {
  json sig = json::array();
  for (const auto& s : r.sigma) {
    json rows = json::array();
    for (int l = 0; l < r.dim; ++l) {
      json row = json::array();
      for (int m = 0; m < r.dim; ++m) row.push_back(json::array({s(l, m).real(), s(l, m).imag()}));
      rows.push_back(row);
    }
    sig.push_back(rows);
  }
  return json{{"method", to_string(r.method)}, {"dim", r.dim}, {"omega", r.omegas}, {"sigma", sig},
              {"metadata", r.metadata}};
}

}  // namespace kubo
