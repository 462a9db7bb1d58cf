#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "bsnse/engine/solver.hpp"
#include "bsnse/io/config.hpp"

namespace bsnse {

inline constexpr const char* kFieldHeader = "kx,ky,re_ux,im_ux,re_uy,im_uy";

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  return out;
}

inline void close_checked(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) throw IoError("write to '" + path + "' failed");
}

inline void write_field_rows(std::ostream& out, const VelocityField& u, const std::string& prefix) {
  for (std::size_t r = 0; r < u.rep_count(); ++r) {
    const auto& k = u.modes().rep(r);
    out << prefix << k.kx << ',' << k.ky << ',' << format_double(u[r][0].real()) << ','
        << format_double(u[r][0].imag()) << ',' << format_double(u[r][1].real()) << ','
        << format_double(u[r][1].imag()) << '\n';
  }
}

}  // namespace detail

/// One row per stored representative, shortest round-trip decimals.
inline void write_field_csv(const VelocityField& u, const std::string& path) {
  auto out = detail::open_out(path);
  out << kFieldHeader << '\n';
  detail::write_field_rows(out, u, "");
  detail::close_checked(out, path);
}

/// Reads a field written by write_field_csv on a torus of side `period`.
/// The mode set is the negation closure of the listed representatives.
inline VelocityField read_field_csv(const std::string& path, double period) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kFieldHeader)
    throw IoError(path + ": expected header '" + std::string(kFieldHeader) + "'");
  std::vector<WaveVector> ks;
  std::vector<Vec2c> cs;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != 6) throw IoError(path + ":" + std::to_string(lineno) + ": expected 6 columns");
    try {
      const WaveVector k{detail::parse_int<int>(f[0], "kx"), detail::parse_int<int>(f[1], "ky")};
      if (k.is_zero() || !k.is_representative())
        throw IoError(path + ":" + std::to_string(lineno) + ": not a representative wave vector");
      ks.push_back(k);
      cs.push_back({Complex(parse_double(f[2], "re_ux"), parse_double(f[3], "im_ux")),
                    Complex(parse_double(f[4], "re_uy"), parse_double(f[5], "im_uy"))});
    } catch (const ConfigError& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (ks.empty()) throw IoError(path + ": no rows");
  std::vector<WaveVector> all;
  for (const auto& k : ks) {
    all.push_back(k);
    all.push_back(-k);
  }
  VelocityField u(ModeSet::from_modes(period, std::move(all)));
  for (std::size_t j = 0; j < ks.size(); ++j) u.set(ks[j], cs[j]);
  return u;
}

/// u_i on paths [0, paths), grouped by a leading `path` column.
inline void write_slice_csv(const BsdeSolution& sol, int node, std::size_t paths, const std::string& path) {
  if (node < 0 || node > sol.grid().L) throw ConfigError("slice node out of range");
  paths = std::min(paths, sol.ensemble().paths());
  std::vector<VelocityField> fields(paths);
  parallel_for(static_cast<std::ptrdiff_t>(paths),
               [&](std::ptrdiff_t m) { fields[m] = sol.u_path(node, static_cast<std::size_t>(m)); });
  auto out = detail::open_out(path);
  out << "path," << kFieldHeader << '\n';
  for (std::size_t m = 0; m < paths; ++m) detail::write_field_rows(out, fields[m], std::to_string(m) + ",");
  detail::close_checked(out, path);
}

/// Simple table writer: a header row, then numeric rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void row(const std::vector<double>& values) {
    if (values.size() != columns_.size()) throw std::invalid_argument("CsvTable: column count mismatch");
    rows_.push_back(values);
  }

  void write(const std::string& path) const {
    auto out = detail::open_out(path);
    for (std::size_t j = 0; j < columns_.size(); ++j) out << (j ? "," : "") << columns_[j];
    out << '\n';
    for (const auto& r : rows_) {
      for (std::size_t j = 0; j < r.size(); ++j) out << (j ? "," : "") << format_double(r[j]);
      out << '\n';
    }
    detail::close_checked(out, path);
  }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

}  // namespace bsnse
