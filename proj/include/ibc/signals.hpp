#pragma once

// Sounding-signal generation: Fibonacci LFSR m-sequences, bipolar mapping,
// zero-order-hold upsampling, zero padding and correlation.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ibc/error.hpp"
#include "ibc/fft.hpp"

namespace ibc {

/// Uniformly sampled real signal in volts.
class Waveform {
 public:
  Waveform() = default;

  Waveform(std::vector<double> samples, double sample_rate_hz, double t0_s = 0.0)
      : samples_(std::move(samples)), sample_rate_(sample_rate_hz), t0_(t0_s) {
    require(std::isfinite(sample_rate_) && sample_rate_ > 0.0, ErrorCode::invalid_argument,
            "sample rate must be positive");
    require(std::isfinite(t0_), ErrorCode::invalid_argument, "start time must be finite");
    for (double v : samples_) {
      require(std::isfinite(v), ErrorCode::invalid_argument, "waveform samples must be finite");
    }
  }

  [[nodiscard]] std::span<const double> samples() const noexcept { return samples_; }
  [[nodiscard]] const std::vector<double>& data() const noexcept { return samples_; }
  [[nodiscard]] std::size_t size() const noexcept { return samples_.size(); }
  [[nodiscard]] bool empty() const noexcept { return samples_.empty(); }
  [[nodiscard]] double sample_rate() const noexcept { return sample_rate_; }
  [[nodiscard]] double t0() const noexcept { return t0_; }
  [[nodiscard]] double time_at(std::size_t n) const noexcept {
    return t0_ + static_cast<double>(n) / sample_rate_;
  }
  double operator[](std::size_t n) const noexcept { return samples_[n]; }

  friend bool operator==(const Waveform&, const Waveform&) = default;

 private:
  std::vector<double> samples_;
  double sample_rate_ = 1.0;
  double t0_ = 0.0;
};

inline double energy(const Waveform& w) {
  return std::inner_product(w.data().begin(), w.data().end(), w.data().begin(), 0.0);
}

inline double rms(const Waveform& w) {
  return w.empty() ? 0.0 : std::sqrt(energy(w) / static_cast<double>(w.size()));
}

/// Maximal-length binary sequence together with the generator that made it.
/// Stage t of the register is bit (t-1) of `seed` / `end_state`.
struct PnSequence {
  int degree = 0;
  std::vector<int> taps;
  std::uint32_t seed = 0;
  std::uint32_t end_state = 0;
  std::vector<std::uint8_t> chips;

  [[nodiscard]] std::size_t period() const noexcept { return chips.size(); }
};

/// One primitive feedback polynomial per degree 2..16 (tap exponents).
inline std::vector<int> builtin_taps(int degree) {
  static const std::vector<std::vector<int>> table = {
      {2, 1},          {3, 2},  {4, 3},  {5, 3},         {6, 5},          {7, 6},
      {8, 6, 5, 4},    {9, 5},  {10, 7}, {11, 9},        {12, 6, 4, 1},   {13, 4, 3, 1},
      {14, 5, 3, 1},   {15, 14}, {16, 15, 13, 4},
  };
  require(degree >= 2 && degree <= 16, ErrorCode::invalid_argument,
          "no built-in taps for degree " + std::to_string(degree) + " (supported: 2..16)");
  return table[static_cast<std::size_t>(degree - 2)];
}

inline constexpr int kMaxDegree = 24;

/// Runs a Fibonacci LFSR for one full period. Output chip is the last stage;
/// the feedback (XOR of the tapped stages) enters stage 1.
inline PnSequence generate_mseq(int degree, std::vector<int> taps, std::uint32_t seed) {
  require(degree >= 2 && degree <= kMaxDegree, ErrorCode::invalid_argument,
          "degree must be in [2, " + std::to_string(kMaxDegree) + "]");
  require(!taps.empty(), ErrorCode::invalid_argument, "tap set is empty");
  std::sort(taps.begin(), taps.end(), std::greater<>());
  taps.erase(std::unique(taps.begin(), taps.end()), taps.end());
  for (int t : taps) {
    require(t >= 1 && t <= degree, ErrorCode::invalid_argument,
            "tap " + std::to_string(t) + " outside [1, degree]");
  }
  const std::uint32_t mask = (std::uint32_t{1} << degree) - 1U;
  require((seed & mask) != 0, ErrorCode::zero_seed, "LFSR seed must be nonzero");
  require((seed & ~mask) == 0, ErrorCode::invalid_argument, "seed has bits beyond the register");

  std::uint32_t tap_mask = 0;
  for (int t : taps) tap_mask |= std::uint32_t{1} << (t - 1);

  const std::size_t full_period = mask;
  PnSequence seq{degree, taps, seed, seed, {}};
  seq.chips.reserve(full_period);
  std::uint32_t state = seed;
  for (std::size_t step = 1; step <= full_period; ++step) {
    seq.chips.push_back(static_cast<std::uint8_t>((state >> (degree - 1)) & 1U));
    const auto feedback = static_cast<std::uint32_t>(std::popcount(state & tap_mask) & 1);
    state = ((state << 1) | feedback) & mask;
    if (state == seed && step < full_period) {
      throw Error(ErrorCode::non_primitive_polynomial,
                  "state revisited after " + std::to_string(step) + " steps (< " +
                      std::to_string(full_period) + ")");
    }
    if (state == 0) {
      throw Error(ErrorCode::non_primitive_polynomial, "register collapsed to the all-zero state");
    }
  }
  if (state != seed) {
    throw Error(ErrorCode::non_primitive_polynomial,
                "register does not return to its seed after 2^m-1 steps");
  }
  seq.end_state = state;
  return seq;
}

inline PnSequence generate_mseq(int degree) {
  return generate_mseq(degree, builtin_taps(degree), (std::uint32_t{1} << degree) - 1U);
}

/// chip 1 -> +amplitude/2, chip 0 -> -amplitude/2, one sample per chip.
inline Waveform to_bipolar(const PnSequence& seq, double amplitude_vpp, double chip_rate_hz) {
  require(amplitude_vpp > 0.0, ErrorCode::invalid_argument, "amplitude must be positive");
  std::vector<double> out(seq.chips.size());
  const double half = amplitude_vpp / 2.0;
  std::transform(seq.chips.begin(), seq.chips.end(), out.begin(),
                 [half](std::uint8_t c) { return c ? half : -half; });
  return Waveform(std::move(out), chip_rate_hz);
}

/// Zero-order-hold upsampling by an integer factor (sample replay of an AWG).
inline Waveform hold_upsample(const Waveform& w, int factor) {
  require(factor >= 1, ErrorCode::invalid_argument, "upsampling factor must be >= 1");
  std::vector<double> out;
  out.reserve(w.size() * static_cast<std::size_t>(factor));
  for (double v : w.samples()) out.insert(out.end(), static_cast<std::size_t>(factor), v);
  return Waveform(std::move(out), w.sample_rate() * factor, w.t0());
}

inline Waveform zero_pad(const Waveform& w, std::int64_t pad_samples) {
  require(pad_samples >= 0, ErrorCode::invalid_argument, "pad length must be >= 0");
  std::vector<double> out(w.data());
  out.resize(out.size() + static_cast<std::size_t>(pad_samples), 0.0);
  return Waveform(std::move(out), w.sample_rate(), w.t0());
}

/// Tiles a waveform `count` times back to back.
inline Waveform repeat(const Waveform& w, std::size_t count) {
  std::vector<double> out;
  out.reserve(w.size() * count);
  for (std::size_t i = 0; i < count; ++i) out.insert(out.end(), w.data().begin(), w.data().end());
  return Waveform(std::move(out), w.sample_rate(), w.t0());
}

// --- Sounding frame -------------------------------------------------------

/// How a PN sequence is turned into the replayed sounding frame.
struct SoundingParams {
  double amplitude_vpp = 1.0;
  double chip_rate_hz = 5e6;
  double sample_rate_hz = 5e6;
  /// Zero padding appended after the sequence, in chips. Negative selects
  /// one full sequence period.
  std::int64_t pad_chips = -1;
};

inline int samples_per_chip(const SoundingParams& p) {
  require(p.chip_rate_hz > 0.0 && p.sample_rate_hz > 0.0, ErrorCode::invalid_argument,
          "chip and sample rates must be positive");
  const double ratio = p.sample_rate_hz / p.chip_rate_hz;
  const double rounded = std::round(ratio);
  require(rounded >= 1.0 && std::abs(ratio - rounded) < 1e-9 * ratio, ErrorCode::invalid_argument,
          "sample rate must be an integer multiple of the chip rate");
  return static_cast<int>(rounded);
}

inline std::int64_t pad_chips_or_default(const SoundingParams& p, const PnSequence& seq) {
  return p.pad_chips < 0 ? static_cast<std::int64_t>(seq.period()) : p.pad_chips;
}

/// Bipolar sequence, held to the sample rate, followed by the zero pad.
inline Waveform sounding_frame(const PnSequence& seq, const SoundingParams& p) {
  const int spc = samples_per_chip(p);
  const Waveform chips = to_bipolar(seq, p.amplitude_vpp, p.chip_rate_hz);
  return zero_pad(hold_upsample(chips, spc), pad_chips_or_default(p, seq) * spc);
}

/// Ideal +-1 replica of the sequence at `spc` samples per chip.
inline std::vector<double> bipolar_replica(const PnSequence& seq, int spc) {
  std::vector<double> out;
  out.reserve(seq.period() * static_cast<std::size_t>(spc));
  for (auto c : seq.chips) out.insert(out.end(), static_cast<std::size_t>(spc), c ? 1.0 : -1.0);
  return out;
}

// --- Correlation ------------------------------------------------------------

enum class CorrelationMode { circular, linear };

struct CorrelationResult {
  std::vector<double> values;
  std::vector<std::int64_t> lags;
  CorrelationMode mode = CorrelationMode::linear;
  double sample_rate = 1.0;

  [[nodiscard]] double lag_seconds(std::size_t i) const {
    return static_cast<double>(lags[i]) / sample_rate;
  }
  [[nodiscard]] double at_lag(std::int64_t lag) const {
    const auto it = std::find(lags.begin(), lags.end(), lag);
    require(it != lags.end(), ErrorCode::invalid_argument, "lag outside correlation support");
    return values[static_cast<std::size_t>(it - lags.begin())];
  }
};

namespace detail {

// Above this many multiply-adds the transform route is used.
inline constexpr std::size_t kDirectCorrelationLimit = std::size_t{1} << 16;

/// values[k + nx - 1] = sum_n x[n] y[n + k] for k in [-(nx-1), ny-1].
inline std::vector<double> linear_correlation(std::span<const double> x, std::span<const double> y) {
  if (x.empty() || y.empty()) return {};
  const std::size_t nx = x.size();
  const std::size_t ny = y.size();
  std::vector<double> out(nx + ny - 1, 0.0);
  if (nx * ny <= kDirectCorrelationLimit) {
    for (std::size_t n = 0; n < nx; ++n) {
      for (std::size_t m = 0; m < ny; ++m) out[m + nx - 1 - n] += x[n] * y[m];
    }
    return out;
  }
  const std::vector<double> raw = fft::correlate(x, y);
  // raw[k] holds lag k for k >= 0 and lag k - size for the negative lags.
  const std::size_t size = raw.size();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto lag = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(nx - 1);
    out[i] = lag >= 0 ? raw[static_cast<std::size_t>(lag)]
                      : raw[size - static_cast<std::size_t>(-lag)];
  }
  return out;
}

/// values[k] = sum_n x[n] y[(n + k) mod N].
inline std::vector<double> circular_correlation(std::span<const double> x, std::span<const double> y) {
  const std::size_t n = x.size();
  const std::vector<double> lin = linear_correlation(x, y);
  std::vector<double> out(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = lin[k + n - 1];
    if (k > 0) out[k] += lin[k - 1];  // lag k - n
  }
  return out;
}

}  // namespace detail

/// values[k] = sum_n x[n] y[n + k]; circular mode wraps the index of y, linear
/// mode treats both signals as zero outside their support.
inline CorrelationResult cross_correlate(const Waveform& x, const Waveform& y, CorrelationMode mode) {
  require(x.sample_rate() == y.sample_rate(), ErrorCode::sample_rate_mismatch,
          "cannot correlate signals with different sample rates");
  CorrelationResult r;
  r.mode = mode;
  r.sample_rate = x.sample_rate();
  if (mode == CorrelationMode::circular) {
    require(x.size() == y.size(), ErrorCode::length_mismatch,
            "circular correlation requires equal lengths");
    r.values = detail::circular_correlation(x.samples(), y.samples());
    r.lags.resize(r.values.size());
    std::iota(r.lags.begin(), r.lags.end(), std::int64_t{0});
  } else {
    r.values = detail::linear_correlation(x.samples(), y.samples());
    r.lags.resize(r.values.size());
    std::iota(r.lags.begin(), r.lags.end(), -static_cast<std::int64_t>(x.size()) + 1);
  }
  return r;
}

/// Summary printed by the generator: period, balance and the two-valued
/// periodic autocorrelation of the bipolar chips.
struct SequenceStats {
  std::size_t period = 0;
  std::size_t ones = 0;
  std::size_t zeros = 0;
  std::int64_t autocorr_peak = 0;
  std::int64_t offpeak_min = 0;
  std::int64_t offpeak_max = 0;
};

inline SequenceStats sequence_stats(const PnSequence& seq) {
  SequenceStats s;
  s.period = seq.period();
  s.ones = static_cast<std::size_t>(std::count(seq.chips.begin(), seq.chips.end(), 1));
  s.zeros = s.period - s.ones;
  const std::vector<double> chips = bipolar_replica(seq, 1);
  const std::vector<double> ac = detail::circular_correlation(chips, chips);
  s.autocorr_peak = std::llround(ac.front());
  if (ac.size() > 1) {
    const auto [lo, hi] = std::minmax_element(ac.begin() + 1, ac.end());
    s.offpeak_min = std::llround(*lo);
    s.offpeak_max = std::llround(*hi);
  }
  return s;
}

}  // namespace ibc
