#pragma once

// File formats: oscilloscope capture CSV, session manifest (JSON), channel
// estimate report, parametric model (JSON) and frequency-response tables.
// Every writer emits shortest round-trip decimals, so write -> parse gives
// back the same bits.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ibc/channel_model.hpp"
#include "ibc/error.hpp"
#include "ibc/frequency_response.hpp"
#include "ibc/numeric_text.hpp"
#include "ibc/signals.hpp"
#include "ibc/sounder.hpp"

namespace ibc::io {

namespace fs = std::filesystem;

// --- Text helpers ---------------------------------------------------------

inline std::string read_file(const fs::path& path, ErrorCode code = ErrorCode::unparseable_file) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), code, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::invalid_argument, "cannot write " + path.string());
  out << content;
  require(static_cast<bool>(out), ErrorCode::invalid_argument, "write failed for " + path.string());
}

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    start = end + 1;
  }
  return lines;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// --- Capture CSV ------------------------------------------------------------

enum class CaptureWarningKind { non_uniform_sampling, clipped_samples };

inline const char* to_string(CaptureWarningKind k) {
  return k == CaptureWarningKind::non_uniform_sampling ? "NonUniformSampling" : "ClippedSamples";
}

struct CaptureWarning {
  CaptureWarningKind kind;
  std::string message;
};

struct CaptureFormatOptions {
  /// ',' or ';'; auto-detected when unset.
  std::optional<char> delimiter;
  /// Samples with |v| >= full scale are reported as clipped.
  std::optional<double> full_scale_v;
  /// Overrides any rate derived from the file.
  std::optional<double> sample_rate_hz;
  /// Only the canonical layout written by write_capture is accepted and
  /// non-uniform sampling is an error.
  bool strict = false;
};

struct CaptureFile {
  std::string source;
  double sample_rate = 0.0;
  Waveform waveform;
  std::vector<CaptureWarning> warnings;

  [[nodiscard]] bool has_warning(CaptureWarningKind k) const {
    return std::any_of(warnings.begin(), warnings.end(), [k](const auto& w) { return w.kind == k; });
  }
};

inline constexpr std::string_view kCaptureHeader = "time_s,voltage_V";

namespace detail {

struct HeaderInfo {
  std::string source;
  std::optional<double> sample_rate;
};

inline std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

/// Recognizes "key=value" lines (optionally '#'-prefixed) and vendor-style
/// "Sample Rate,5e6" / "Sample Interval;2e-7" pairs.
inline void read_header_line(std::string_view line, HeaderInfo& info) {
  line = text::trim(line);
  if (!line.empty() && line.front() == '#') line = text::trim(line.substr(1));
  std::string_view key;
  std::string_view value;
  for (char sep : {'=', ',', ';', ':'}) {
    const auto pos = line.find(sep);
    if (pos != std::string_view::npos) {
      key = text::trim(line.substr(0, pos));
      value = line.substr(pos + 1);
      const auto next = value.find_first_of(",;");
      if (next != std::string_view::npos) value = value.substr(0, next);
      value = text::trim(value);
      break;
    }
  }
  if (key.empty()) return;
  const auto k = lower(key);
  if (k == "source") {
    info.source = std::string(value);
    return;
  }
  const auto v = text::parse_double(value);
  if (!v || !(*v > 0.0) || !std::isfinite(*v)) return;
  if (k == "sample_rate_hz" || k == "sample rate" || k == "sampling rate" || k == "samplerate") {
    info.sample_rate = *v;
  } else if (k == "sample interval" || k == "sample_interval_s" || k == "xincrement" || k == "x increment") {
    info.sample_rate = 1.0 / *v;
  }
}

inline std::optional<std::pair<double, double>> numeric_pair(std::string_view line, char delim, bool exact_two) {
  const auto fields = split(line, delim);
  if (fields.size() < 2 || (exact_two && fields.size() != 2)) return std::nullopt;
  const auto t = text::parse_double(fields[0]);
  const auto v = text::parse_double(fields[1]);
  if (!t || !v) return std::nullopt;
  return std::make_pair(*t, *v);
}

/// True when the line looks like "0,1;0,2": numbers with comma decimals.
inline bool has_comma_decimals(std::string_view line) {
  const auto fields = split(line, ';');
  if (fields.size() < 2) return false;
  for (std::size_t i = 0; i < 2; ++i) {
    std::string f(text::trim(fields[i]));
    if (f.find(',') == std::string::npos) return false;
    std::replace(f.begin(), f.end(), ',', '.');
    if (!text::parse_double(f)) return false;
  }
  return true;
}

inline double snap_rate(double rate) {
  const double r = std::round(rate);
  return std::abs(rate - r) <= 1e-9 * rate ? r : rate;
}

}  // namespace detail

inline CaptureFile parse_capture_text(std::string_view content, const CaptureFormatOptions& opts = {},
                                      std::string_view name = "capture") {
  const auto lines = split_lines(content);
  const std::string where(name);

  // Delimiter: the one under which some line parses as two numbers.
  char delim = opts.delimiter.value_or('\0');
  if (!opts.delimiter) {
    bool comma = false;
    bool semicolon = false;
    for (auto line : lines) {
      if (detail::has_comma_decimals(line)) {
        throw Error(ErrorCode::unparseable_file,
                    where + ": decimal commas are not supported; use '.' as the decimal separator");
      }
      comma = comma || detail::numeric_pair(line, ',', false).has_value();
      semicolon = semicolon || detail::numeric_pair(line, ';', false).has_value();
    }
    if (comma && semicolon) {
      throw Error(ErrorCode::ambiguous_delimiter, where + ": rows parse with both ',' and ';' delimiters");
    }
    if (!comma && !semicolon) throw Error(ErrorCode::no_numeric_data, where + ": no numeric rows");
    delim = comma ? ',' : ';';
  }
  require(delim == ',' || delim == ';', ErrorCode::invalid_argument, "delimiter must be ',' or ';'");

  detail::HeaderInfo header;
  std::vector<double> t;
  std::vector<double> v;
  std::size_t first_data = lines.size();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (first_data == lines.size()) {
      if (auto p = detail::numeric_pair(line, delim, opts.strict)) {
        first_data = i;
        t.push_back(p->first);
        v.push_back(p->second);
      } else {
        detail::read_header_line(line, header);
        if (opts.strict && !text::trim(line).empty() && line.front() != '#') {
          require(line == kCaptureHeader, ErrorCode::unparseable_file,
                  where + ": strict mode expects the header '" + std::string(kCaptureHeader) + "'");
        }
      }
      continue;
    }
    if (text::trim(line).empty()) continue;
    const auto p = detail::numeric_pair(line, delim, opts.strict);
    require(p.has_value(), ErrorCode::unparseable_file,
            where + ":" + std::to_string(i + 1) + ": expected two numeric columns");
    t.push_back(p->first);
    v.push_back(p->second);
  }
  require(!t.empty(), ErrorCode::no_numeric_data, where + ": no numeric rows");
  for (std::size_t i = 0; i < t.size(); ++i) {
    require(std::isfinite(t[i]) && std::isfinite(v[i]), ErrorCode::unparseable_file,
            where + ": non-finite value in data row " + std::to_string(i + 1));
  }

  CaptureFile cap;
  cap.source = header.source.empty() ? where : header.source;

  double rate = 0.0;
  if (t.size() >= 2) {
    std::vector<double> d(t.size() - 1);
    for (std::size_t i = 0; i + 1 < t.size(); ++i) d[i] = t[i + 1] - t[i];
    const double nominal = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
    bool uniform = nominal > 0.0;
    for (double di : d) uniform = uniform && std::abs(di - nominal) <= 1e-6 * nominal;
    if (uniform) {
      rate = detail::snap_rate(1.0 / nominal);
    } else {
      std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
      const double median = d[d.size() / 2];
      require(median > 0.0, ErrorCode::unparseable_file, where + ": time column is not increasing");
      require(!opts.strict, ErrorCode::unparseable_file, where + ": non-uniform sampling");
      rate = detail::snap_rate(1.0 / median);
      cap.warnings.push_back({CaptureWarningKind::non_uniform_sampling,
                              where + ": sample period not uniform within 1 ppm; rate taken from median period"});
    }
  }
  if (header.sample_rate) rate = *header.sample_rate;
  if (opts.sample_rate_hz) rate = *opts.sample_rate_hz;
  require(rate > 0.0 && std::isfinite(rate), ErrorCode::unparseable_file,
          where + ": sample rate cannot be inferred from a single sample");
  cap.sample_rate = rate;

  if (opts.full_scale_v) {
    const auto clipped = std::count_if(v.begin(), v.end(), [&](double x) { return std::abs(x) >= *opts.full_scale_v; });
    if (clipped > 0) {
      cap.warnings.push_back({CaptureWarningKind::clipped_samples,
                              where + ": " + std::to_string(clipped) + " samples at or beyond full scale"});
    }
  }
  cap.waveform = Waveform(std::move(v), rate, t.front());
  return cap;
}

inline CaptureFile parse_capture(const fs::path& path, const CaptureFormatOptions& opts = {}) {
  return parse_capture_text(read_file(path), opts, path.string());
}

/// Canonical layout: '#'-prefixed key=value lines, the column header, then
/// one row per sample with t = t0 + n / fs.
inline void write_capture(std::ostream& out, const Waveform& w, std::string_view source = {}) {
  if (!source.empty()) out << "# source=" << source << '\n';
  out << "# sample_rate_hz=" << text::format_double(w.sample_rate()) << '\n';
  out << kCaptureHeader << '\n';
  for (std::size_t n = 0; n < w.size(); ++n) {
    out << text::format_double(w.time_at(n)) << ',' << text::format_double(w[n]) << '\n';
  }
}

inline std::string capture_text(const Waveform& w, std::string_view source = {}) {
  std::ostringstream out;
  write_capture(out, w, source);
  return out.str();
}

inline void write_capture(const fs::path& path, const Waveform& w, std::string_view source = {}) {
  write_file(path, capture_text(w, source));
}

// --- Session manifest ---------------------------------------------------------

struct SoundingSpec {
  int degree = 13;
  std::vector<int> taps;  // empty: built-in primitive taps
  std::uint32_t seed = 0; // 0: all ones
  SoundingParams params;

  [[nodiscard]] PnSequence sequence() const {
    const auto t = taps.empty() ? builtin_taps(degree) : taps;
    const std::uint32_t s = seed != 0 ? seed : static_cast<std::uint32_t>((std::uint64_t{1} << degree) - 1);
    return generate_mseq(degree, t, s);
  }
};

struct SessionManifest {
  std::string session_id;
  std::string tx_capture;
  std::vector<std::string> rx_captures;
  SoundingSpec sounding;
  bool trigger_shared = false;
  std::string notes;
};

inline nlohmann::json to_json(const SessionManifest& m) {
  nlohmann::json s{{"degree", m.sounding.degree},
                   {"chip_rate_hz", m.sounding.params.chip_rate_hz},
                   {"sample_rate_hz", m.sounding.params.sample_rate_hz},
                   {"amplitude_vpp", m.sounding.params.amplitude_vpp},
                   {"pad_chips", m.sounding.params.pad_chips}};
  if (!m.sounding.taps.empty()) s["taps"] = m.sounding.taps;
  if (m.sounding.seed != 0) s["seed"] = m.sounding.seed;
  return {{"session_id", m.session_id}, {"tx_capture", m.tx_capture}, {"rx_captures", m.rx_captures},
          {"sounding", s},           {"trigger_shared", m.trigger_shared}, {"notes", m.notes}};
}

inline std::string manifest_text(const SessionManifest& m) { return to_json(m).dump(2) + "\n"; }

namespace detail {

inline void schema(bool ok, const std::string& msg) { require(ok, ErrorCode::schema_violation, msg); }

inline void only_keys(const nlohmann::json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
    schema(known, where + ": unknown key '" + key + "'");
  }
}

inline double positive_number(const nlohmann::json& obj, const char* key, const std::string& where) {
  schema(obj.contains(key) && obj[key].is_number(), where + ": '" + key + "' must be a number");
  const double v = obj[key].get<double>();
  schema(v > 0.0 && std::isfinite(v), where + ": '" + key + "' must be > 0");
  return v;
}

}  // namespace detail

inline SessionManifest parse_manifest(std::string_view text, const std::string& where = "manifest") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::schema_violation, where + ": invalid JSON: " + e.what());
  }
  using detail::schema;
  schema(j.is_object(), where + ": top level must be an object");
  detail::only_keys(j, {"session_id", "tx_capture", "rx_captures", "sounding", "trigger_shared", "notes"}, where);
  SessionManifest m;
  schema(j.contains("session_id") && j["session_id"].is_string() && !j["session_id"].get<std::string>().empty(),
         where + ": 'session_id' must be a non-empty string");
  m.session_id = j["session_id"];
  schema(j.contains("tx_capture") && j["tx_capture"].is_string(), where + ": 'tx_capture' must be a path string");
  m.tx_capture = j["tx_capture"];
  schema(j.contains("rx_captures") && j["rx_captures"].is_array() && !j["rx_captures"].empty(),
         where + ": 'rx_captures' must be a non-empty array");
  for (const auto& p : j["rx_captures"]) {
    schema(p.is_string(), where + ": 'rx_captures' entries must be path strings");
    m.rx_captures.push_back(p);
  }
  schema(j.contains("sounding") && j["sounding"].is_object(), where + ": 'sounding' must be an object");
  const auto& s = j["sounding"];
  const std::string sw = where + ": sounding";
  detail::only_keys(s, {"degree", "taps", "seed", "chip_rate_hz", "sample_rate_hz", "amplitude_vpp", "pad_chips"}, sw);
  schema(s.contains("degree") && s["degree"].is_number_integer(), sw + ": 'degree' must be an integer");
  m.sounding.degree = s["degree"];
  schema(m.sounding.degree >= 2 && m.sounding.degree <= 16, sw + ": 'degree' must be in [2, 16]");
  if (s.contains("taps")) {
    schema(s["taps"].is_array(), sw + ": 'taps' must be an array of integers");
    for (const auto& t : s["taps"]) {
      schema(t.is_number_integer(), sw + ": 'taps' must be an array of integers");
      m.sounding.taps.push_back(t);
    }
  }
  if (s.contains("seed")) {
    schema(s["seed"].is_number_unsigned() && s["seed"].get<std::uint64_t>() > 0 &&
               s["seed"].get<std::uint64_t>() < (std::uint64_t{1} << m.sounding.degree),
           sw + ": 'seed' must be a nonzero " + std::to_string(m.sounding.degree) + "-bit integer");
    m.sounding.seed = s["seed"].get<std::uint32_t>();
  }
  m.sounding.params.chip_rate_hz = detail::positive_number(s, "chip_rate_hz", sw);
  m.sounding.params.sample_rate_hz =
      s.contains("sample_rate_hz") ? detail::positive_number(s, "sample_rate_hz", sw) : m.sounding.params.chip_rate_hz;
  m.sounding.params.amplitude_vpp = detail::positive_number(s, "amplitude_vpp", sw);
  if (s.contains("pad_chips")) {
    schema(s["pad_chips"].is_number_integer(), sw + ": 'pad_chips' must be an integer");
    m.sounding.params.pad_chips = s["pad_chips"];
  }
  if (j.contains("trigger_shared")) {
    schema(j["trigger_shared"].is_boolean(), where + ": 'trigger_shared' must be a boolean");
    m.trigger_shared = j["trigger_shared"];
  }
  if (j.contains("notes")) {
    schema(j["notes"].is_string(), where + ": 'notes' must be a string");
    m.notes = j["notes"];
  }
  return m;
}

struct SessionIssue {
  ErrorCode code;
  std::string path;
  std::string message;
};

/// Raised when any capture of a session fails; lists every problem found.
class SessionError : public Error {
 public:
  explicit SessionError(std::vector<SessionIssue> issues)
      : Error(issues.front().code, summarize(issues)), issues_(std::move(issues)) {}
  [[nodiscard]] const std::vector<SessionIssue>& issues() const noexcept { return issues_; }

 private:
  static std::string summarize(const std::vector<SessionIssue>& issues) {
    std::string s = std::to_string(issues.size()) + " problem(s) loading session";
    for (const auto& i : issues) s += "\n  " + std::string(to_string(i.code)) + ": " + i.message;
    return s;
  }
  std::vector<SessionIssue> issues_;
};

struct LoadedSession {
  SessionManifest manifest;
  fs::path directory;
  CaptureFile tx;
  std::vector<CaptureFile> rx;
  /// Complete sounding frames across all rx captures.
  std::size_t frames_available = 0;

  [[nodiscard]] std::vector<Waveform> rx_waveforms() const {
    std::vector<Waveform> out;
    for (const auto& c : rx) out.push_back(c.waveform);
    return out;
  }
};

/// Loads the manifest and every capture (paths relative to the manifest).
/// All captures are attempted; if any is missing, unreadable or at a rate
/// different from the tx capture, a SessionError lists all of them.
inline LoadedSession load_session(const fs::path& manifest_path, const CaptureFormatOptions& opts = {}) {
  LoadedSession s;
  s.manifest = parse_manifest(read_file(manifest_path, ErrorCode::missing_capture), manifest_path.string());
  s.directory = manifest_path.parent_path();
  std::vector<SessionIssue> issues;
  auto load = [&](const std::string& rel) -> std::optional<CaptureFile> {
    const fs::path p = s.directory / rel;
    if (!fs::is_regular_file(p)) {
      issues.push_back({ErrorCode::missing_capture, p.string(), "missing capture " + p.string()});
      return std::nullopt;
    }
    try {
      return parse_capture(p, opts);
    } catch (const Error& e) {
      issues.push_back({e.code(), p.string(), e.what()});
      return std::nullopt;
    }
  };
  auto tx = load(s.manifest.tx_capture);
  std::vector<std::optional<CaptureFile>> rx;
  for (const auto& r : s.manifest.rx_captures) rx.push_back(load(r));

  if (tx) {
    const double ref = tx->sample_rate;
    for (std::size_t k = 0; k < rx.size(); ++k) {
      if (rx[k] && rx[k]->sample_rate != ref) {
        issues.push_back({ErrorCode::rate_mismatch, s.manifest.rx_captures[k],
                          s.manifest.rx_captures[k] + " sampled at " + text::format_double(rx[k]->sample_rate) +
                              " Hz, tx at " + text::format_double(ref) + " Hz"});
      }
    }
  }
  if (!issues.empty()) {
    std::stable_sort(issues.begin(), issues.end(), [](const SessionIssue& a, const SessionIssue& b) {
      auto rank = [](ErrorCode c) { return c == ErrorCode::missing_capture ? 0 : c == ErrorCode::rate_mismatch ? 1 : 2; };
      return rank(a.code) < rank(b.code);
    });
    throw SessionError(std::move(issues));
  }
  s.tx = std::move(*tx);
  for (auto& r : rx) s.rx.push_back(std::move(*r));

  const auto spc = static_cast<std::size_t>(samples_per_chip(s.manifest.sounding.params));
  const auto period = (std::size_t{1} << s.manifest.sounding.degree) - 1;
  const auto pad = s.manifest.sounding.params.pad_chips < 0 ? period
                                                            : static_cast<std::size_t>(s.manifest.sounding.params.pad_chips);
  const std::size_t frame = (period + pad) * spc;
  for (const auto& c : s.rx) s.frames_available += c.waveform.size() / frame;
  return s;
}

// --- Channel estimate report -------------------------------------------------

inline void write_estimate(std::ostream& out, const ChannelEstimate& e) {
  using text::format_double;
  out << "# channel estimate\n";
  out << "sample_rate_hz=" << format_double(e.sample_rate) << '\n';
  out << "normalization=" << format_double(e.normalization) << '\n';
  out << "peak_index=" << e.peak_index << '\n';
  out << "peak_delay_s=" << format_double(e.delay_axis.at(e.peak_index)) << '\n';
  out << "peak_to_offpeak_db=" << format_double(e.peak_to_offpeak_db) << '\n';
  out << "frames_averaged=" << e.frames_averaged << '\n';
  out << "discretization=" << (e.discretization.empty() ? "none" : e.discretization) << '\n';
  out << "truncation_energy_loss=" << format_double(e.truncation_energy_loss) << '\n';
  out << "taps=" << e.taps.size() << '\n';
  out << "[taps]\n";
  out << "delay_s,tap\n";
  for (std::size_t k = 0; k < e.taps.size(); ++k) {
    out << format_double(e.delay_axis[k]) << ',' << format_double(e.taps[k]) << '\n';
  }
}

inline std::string estimate_text(const ChannelEstimate& e) {
  std::ostringstream out;
  write_estimate(out, e);
  return out.str();
}

inline ChannelEstimate parse_estimate(std::string_view content) {
  ChannelEstimate e;
  const auto lines = split_lines(content);
  std::size_t i = 0;
  std::size_t declared = 0;
  auto number = [](std::string_view v, const std::string& key) {
    const auto d = text::parse_double(v);
    require(d.has_value(), ErrorCode::unparseable_file, "estimate report: bad value for " + key);
    return *d;
  };
  for (; i < lines.size() && lines[i] != "[taps]"; ++i) {
    const auto line = lines[i];
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    require(eq != std::string_view::npos, ErrorCode::unparseable_file, "estimate report: expected key=value");
    const std::string key(line.substr(0, eq));
    const auto value = line.substr(eq + 1);
    if (key == "sample_rate_hz") e.sample_rate = number(value, key);
    else if (key == "normalization") e.normalization = number(value, key);
    else if (key == "peak_index") e.peak_index = static_cast<std::size_t>(number(value, key));
    else if (key == "peak_to_offpeak_db") e.peak_to_offpeak_db = number(value, key);
    else if (key == "frames_averaged") e.frames_averaged = static_cast<std::size_t>(number(value, key));
    else if (key == "discretization") e.discretization = value == "none" ? "" : std::string(value);
    else if (key == "truncation_energy_loss") e.truncation_energy_loss = number(value, key);
    else if (key == "taps") declared = static_cast<std::size_t>(number(value, key));
  }
  require(i < lines.size(), ErrorCode::unparseable_file, "estimate report: missing [taps] section");
  i += 2;  // section marker and column header
  for (; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const auto f = split(lines[i], ',');
    require(f.size() == 2, ErrorCode::unparseable_file, "estimate report: bad tap row");
    e.delay_axis.push_back(number(f[0], "delay"));
    e.taps.push_back(number(f[1], "tap"));
  }
  require(e.taps.size() == declared && !e.taps.empty() && e.peak_index < e.taps.size(), ErrorCode::unparseable_file,
          "estimate report: tap count does not match header");
  return e;
}

// --- Model file -------------------------------------------------------------------

inline constexpr const char* kModelFormat = "ibc-highpass-model";

inline nlohmann::json to_json(const HighPassModel& m) {
  nlohmann::json sections = nlohmann::json::array();
  for (const auto& s : m.sections) sections.push_back({{"zero_rad_s", s.zero}, {"pole_rad_s", s.pole}});
  nlohmann::json j{{"format", kModelFormat},
                   {"version", 1},
                   {"order", m.order()},
                   {"passband_gain_db", m.passband_gain_db},
                   {"sections", sections},
                   {"discretization", kBilinear},
                   {"fit",
                    {{"freqs_hz", m.fit.freqs},
                     {"residual_db", m.fit.residual_db},
                     {"rms_residual_db", m.fit.rms_residual_db},
                     {"iterations", m.fit.iterations},
                     {"degenerate", m.fit.degenerate}}}};
  j["cutoff_hz"] = std::isnan(m.cutoff_hz) ? nlohmann::json(nullptr) : nlohmann::json(m.cutoff_hz);
  return j;
}

inline std::string model_text(const HighPassModel& m) { return to_json(m).dump(2) + "\n"; }

inline HighPassModel parse_model(std::string_view content) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(content);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::schema_violation, std::string("model file: invalid JSON: ") + e.what());
  }
  try {
    detail::schema(j.value("format", "") == kModelFormat, "model file: unexpected format tag");
    std::vector<ShelfSection> sections;
    for (const auto& s : j.at("sections")) sections.push_back({s.at("zero_rad_s"), s.at("pole_rad_s")});
    detail::schema(j.at("order").get<int>() == static_cast<int>(sections.size()), "model file: order mismatch");
    auto m = make_high_pass(j.at("passband_gain_db").get<double>(), std::move(sections));
    if (!j.at("cutoff_hz").is_null()) m.cutoff_hz = j.at("cutoff_hz").get<double>();
    const auto& f = j.at("fit");
    m.fit.freqs = f.at("freqs_hz").get<std::vector<double>>();
    m.fit.residual_db = f.at("residual_db").get<std::vector<double>>();
    m.fit.rms_residual_db = f.at("rms_residual_db");
    m.fit.iterations = f.at("iterations");
    m.fit.degenerate = f.at("degenerate");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::schema_violation, std::string("model file: ") + e.what());
  }
}

// --- Frequency-response tables -------------------------------------------------

/// Columns frequency_hz, gain_db, re, im.
inline std::string response_text(const FrequencyResponse& r) {
  std::ostringstream out;
  out << "frequency_hz,gain_db,re,im\n";
  for (std::size_t i = 0; i < r.size(); ++i) {
    out << text::format_double(r.freqs[i]) << ',' << text::format_double(r.gain_db[i]) << ','
        << text::format_double(r.gains[i].real()) << ',' << text::format_double(r.gains[i].imag()) << '\n';
  }
  return out.str();
}

/// Magnitude samples: two columns frequency_hz, gain_db (header optional;
/// further columns ignored).
inline FrequencyResponse parse_gain_samples(std::string_view content, const std::string& where = "gain samples") {
  std::vector<double> f;
  std::vector<double> g;
  std::size_t n = 0;
  for (auto line : split_lines(content)) {
    ++n;
    if (text::trim(line).empty() || line.front() == '#') continue;
    const auto fields = split(line, ',');
    const auto a = fields.size() >= 2 ? text::parse_double(fields[0]) : std::nullopt;
    const auto b = fields.size() >= 2 ? text::parse_double(fields[1]) : std::nullopt;
    if (!a || !b) {
      require(f.empty(), ErrorCode::unparseable_file, where + ":" + std::to_string(n) + ": expected two numbers");
      continue;  // header
    }
    f.push_back(*a);
    g.push_back(*b);
  }
  require(!f.empty(), ErrorCode::no_numeric_data, where + ": no samples");
  return FrequencyResponse::from_db(std::move(f), g);
}

}  // namespace ibc::io
