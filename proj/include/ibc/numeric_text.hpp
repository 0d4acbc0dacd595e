#pragma once

// Locale-independent number <-> text conversion. Every file format in the
// toolkit goes through these helpers so that written values re-parse to the
// identical bit pattern.

#include <charconv>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

#include "ibc/error.hpp"

namespace ibc::text {

/// Shortest decimal representation that round-trips exactly.
inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc{}) throw Error(ErrorCode::invalid_argument, "cannot format number");
  return std::string(buf, end);
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\"'");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\"'");
  return s.substr(first, last - first + 1);
}

/// Parses a whole field as a double ('.' decimal only). Returns nullopt on
/// any trailing garbage.
inline std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  if (s == "inf" || s == "Inf" || s == "INF") return std::numeric_limits<double>::infinity();
  if (s == "-inf" || s == "-Inf" || s == "-INF") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

/// Parses values such as "2.5M", "100k", "5e6", "inf". Suffixes: k, M, G
/// (case-sensitive M/G to avoid milli ambiguity; 'K' accepted for kilo).
inline double parse_si(std::string_view s) {
  s = trim(s);
  double scale = 1.0;
  if (!s.empty()) {
    switch (s.back()) {
      case 'k':
      case 'K': scale = 1e3; break;
      case 'M': scale = 1e6; break;
      case 'G': scale = 1e9; break;
      default: break;
    }
    if (scale != 1.0) s.remove_suffix(1);
  }
  const auto v = parse_double(s);
  if (!v) throw Error(ErrorCode::invalid_argument, "not a number: '" + std::string(s) + "'");
  return *v * scale;
}

}  // namespace ibc::text
