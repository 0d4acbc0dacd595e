#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "ibc/error.hpp"

namespace ibc {

/// 20 log10 |g|; an exact zero maps to -infinity.
inline double magnitude_db(std::complex<double> g) {
  const double m = std::abs(g);
  return m == 0.0 ? -std::numeric_limits<double>::infinity() : 20.0 * std::log10(m);
}

/// Complex voltage gain sampled on a strictly increasing frequency grid.
/// Shared by the sounder, the parametric model and the field solver.
struct FrequencyResponse {
  std::vector<double> freqs;
  std::vector<std::complex<double>> gains;
  std::vector<double> gain_db;

  static FrequencyResponse from_gains(std::vector<double> freqs,
                                      std::vector<std::complex<double>> gains) {
    require(freqs.size() == gains.size(), ErrorCode::invalid_argument,
            "frequency and gain vectors differ in length");
    check_grid(freqs);
    FrequencyResponse r{std::move(freqs), std::move(gains), {}};
    r.gain_db.reserve(r.gains.size());
    for (const auto& g : r.gains) r.gain_db.push_back(magnitude_db(g));
    return r;
  }

  /// Magnitude-only samples (zero phase), e.g. digitized gain curves.
  static FrequencyResponse from_db(std::vector<double> freqs, const std::vector<double>& gain_db) {
    require(freqs.size() == gain_db.size(), ErrorCode::invalid_argument,
            "frequency and gain vectors differ in length");
    std::vector<std::complex<double>> gains;
    gains.reserve(gain_db.size());
    for (double db : gain_db) {
      require(std::isfinite(db), ErrorCode::invalid_argument, "gain samples must be finite");
      gains.emplace_back(std::pow(10.0, db / 20.0), 0.0);
    }
    auto r = from_gains(std::move(freqs), std::move(gains));
    r.gain_db = gain_db;
    return r;
  }

  [[nodiscard]] std::size_t size() const noexcept { return freqs.size(); }

  static void check_grid(const std::vector<double>& freqs) {
    for (std::size_t i = 0; i < freqs.size(); ++i) {
      require(std::isfinite(freqs[i]), ErrorCode::invalid_argument, "frequencies must be finite");
      if (i > 0) {
        require(freqs[i] > freqs[i - 1], ErrorCode::invalid_argument,
                "frequency grid must be strictly increasing");
      }
    }
  }
};

/// `count` points from `start` to `stop` inclusive, linear spacing.
inline std::vector<double> linear_grid(double start, double stop, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = count == 1 ? start : start + (stop - start) * static_cast<double>(i) / static_cast<double>(count - 1);
  }
  return out;
}

inline std::vector<double> log_grid(double start, double stop, std::size_t count) {
  std::vector<double> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = count == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(count - 1);
    out[i] = start * std::pow(stop / start, t);
  }
  return out;
}

}  // namespace ibc
