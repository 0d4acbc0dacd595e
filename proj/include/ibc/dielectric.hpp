#pragma once

// Frequency-dependent tissue properties.

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <memory>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "ibc/error.hpp"
#include "ibc/numeric_text.hpp"

namespace ibc::fem {

inline constexpr double kEpsilon0 = 8.8541878128e-12;  // F/m

struct DielectricProperties {
  double sigma = 0.0;  // S/m
  double eps_r = 1.0;
};

using DielectricModel = std::function<DielectricProperties(double freq_hz)>;

/// Complex admittivity sigma + j w eps0 eps_r.
inline std::complex<double> admittivity(const DielectricProperties& p, double freq_hz) {
  return {p.sigma, 2.0 * std::numbers::pi * freq_hz * kEpsilon0 * p.eps_r};
}

inline DielectricModel constant_dielectric(double sigma, double eps_r) {
  require(sigma >= 0.0 && eps_r >= 1.0, ErrorCode::invalid_argument, "need sigma >= 0 and eps_r >= 1");
  return [p = DielectricProperties{sigma, eps_r}](double) { return p; };
}

/// Tabulated tissue properties. Lookups interpolate linearly in
/// log-frequency and clamp to the end points outside the tabulated range.
class DielectricTable {
 public:
  struct Row {
    double freq_hz;
    DielectricProperties props;
  };

  void add(const std::string& tissue, double freq_hz, DielectricProperties props) {
    require(std::isfinite(freq_hz) && freq_hz > 0.0, ErrorCode::invalid_argument,
            "tabulated frequencies must be > 0");
    require(props.sigma >= 0.0 && props.eps_r >= 1.0, ErrorCode::invalid_argument,
            "tissue '" + tissue + "' needs sigma >= 0 and eps_r >= 1");
    auto& rows = tissues_[tissue];
    const auto pos = std::lower_bound(rows.begin(), rows.end(), freq_hz,
                                      [](const Row& r, double f) { return r.freq_hz < f; });
    require(pos == rows.end() || pos->freq_hz != freq_hz, ErrorCode::invalid_argument,
            "duplicate frequency for tissue '" + tissue + "'");
    rows.insert(pos, Row{freq_hz, props});
  }

  [[nodiscard]] bool has(const std::string& tissue) const { return tissues_.count(tissue) != 0; }

  [[nodiscard]] std::vector<std::string> tissues() const {
    std::vector<std::string> out;
    for (const auto& [name, rows] : tissues_) out.push_back(name);
    return out;
  }

  [[nodiscard]] DielectricProperties at(const std::string& tissue, double freq_hz) const {
    const auto it = tissues_.find(tissue);
    require(it != tissues_.end(), ErrorCode::invalid_argument, "unknown tissue '" + tissue + "'");
    const auto& rows = it->second;
    if (freq_hz <= rows.front().freq_hz) return rows.front().props;
    if (freq_hz >= rows.back().freq_hz) return rows.back().props;
    const auto hi = std::upper_bound(rows.begin(), rows.end(), freq_hz,
                                     [](double f, const Row& r) { return f < r.freq_hz; });
    const auto lo = hi - 1;
    const double t = std::log(freq_hz / lo->freq_hz) / std::log(hi->freq_hz / lo->freq_hz);
    return {lo->props.sigma + t * (hi->props.sigma - lo->props.sigma),
            lo->props.eps_r + t * (hi->props.eps_r - lo->props.eps_r)};
  }

  /// Property function bound to one tissue; keeps a copy of its rows.
  [[nodiscard]] DielectricModel model(const std::string& tissue) const {
    require(has(tissue), ErrorCode::invalid_argument, "unknown tissue '" + tissue + "'");
    auto table = std::make_shared<DielectricTable>();
    table->tissues_[tissue] = tissues_.at(tissue);
    return [table, tissue](double f) { return table->at(tissue, f); };
  }

  /// Columns: frequency_hz, tissue_name, sigma_s_per_m, eps_r (header row
  /// optional).
  static DielectricTable parse(std::istream& in) {
    DielectricTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (text::trim(line).empty() || line.front() == '#') continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
      const auto where = "dielectric table line " + std::to_string(line_no);
      require(fields.size() == 4, ErrorCode::unparseable_file, where + ": expected 4 columns");
      const auto freq = text::parse_double(fields[0]);
      if (!freq && table.tissues_.empty()) continue;  // header
      const auto sigma = text::parse_double(fields[2]);
      const auto eps = text::parse_double(fields[3]);
      require(freq && sigma && eps, ErrorCode::unparseable_file, where + ": non-numeric value");
      table.add(std::string(text::trim(fields[1])), *freq, {*sigma, *eps});
    }
    require(!table.tissues_.empty(), ErrorCode::no_numeric_data, "dielectric table has no rows");
    return table;
  }

  static DielectricTable load(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::unparseable_file, "cannot open " + path);
    return parse(in);
  }

 private:
  std::map<std::string, std::vector<Row>> tissues_;
};

struct TissueLayer {
  std::string name;
  double thickness_mm = 0.0;
  DielectricModel properties;
};

}  // namespace ibc::fem
