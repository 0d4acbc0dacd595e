#pragma once

// Correlative channel sounder. A capture is cut into sounding frames
// (sequence + zero pad), the frames are averaged coherently, folded onto one
// sequence period and circularly correlated with the ideal +-1 replica.
//
// Folding is what makes the zero pad useful: when the channel is shorter
// than the pad, the received frame is the linear convolution of one sequence
// period with h, and folding it modulo the period turns that into a circular
// convolution. The correlation then sees the two-valued periodic
// autocorrelation of the m-sequence instead of its aperiodic sidelobes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ibc/error.hpp"
#include "ibc/frequency_response.hpp"
#include "ibc/signals.hpp"

namespace ibc {

enum class Alignment {
  /// Delays are relative to the strongest correlation peak of each capture.
  correlation_peak,
  /// Capture start times share one timebase; delays are absolute latency
  /// from the sequence launch seen in the tx capture.
  shared_trigger,
};

struct SounderConfig {
  int samples_per_chip = 1;
  /// Sounding frame length (sequence + pad) in samples; 0 means one
  /// sequence period followed by an equally long pad.
  std::int64_t frame_samples = 0;
  Alignment alignment = Alignment::correlation_peak;
  /// Samples kept ahead of the alignment point; delay 0 sits at this index.
  std::int64_t precursor_samples = 0;
  bool remove_mean = true;
  /// Removes the constant -1 sidelobe of the periodic autocorrelation, which
  /// makes noiseless recovery exact. Combine with remove_mean = false: mean
  /// removal discards the DC information the correction relies on and
  /// leaves a -sum(h)/N bias.
  bool sidelobe_compensation = false;
  double detection_threshold_db = 3.0;
  /// Lags within this many samples of the peak are mainlobe, not off-peak.
  int offpeak_exclusion = 3;
};

struct ChannelEstimate {
  std::vector<double> taps;
  std::vector<double> delay_axis;  // seconds
  double sample_rate = 1.0;
  /// Factor applied to the raw correlation so that an identity channel
  /// yields a unit peak.
  double normalization = 1.0;
  std::size_t peak_index = 0;
  double peak_to_offpeak_db = 0.0;
  std::size_t frames_averaged = 0;
  /// Only set for responses synthesized from a parametric model.
  std::string discretization;
  double truncation_energy_loss = 0.0;
};

/// 20 log10(|peak| / max off-peak |tap|); +inf when nothing is off-peak.
inline double peak_to_offpeak_db(std::span<const double> taps, std::size_t peak, int exclusion) {
  double off = 0.0;
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const auto dist = k > peak ? k - peak : peak - k;
    if (dist > static_cast<std::size_t>(std::max(exclusion, 0))) off = std::max(off, std::abs(taps[k]));
  }
  const double p = std::abs(taps[peak]);
  if (off == 0.0) return p == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::max(0.0, 20.0 * std::log10(p / off));
}

/// Builds an estimate with delay_axis[k] = (k + first_delay_samples) / fs.
inline ChannelEstimate make_estimate(std::vector<double> taps, double sample_rate,
                                     std::int64_t first_delay_samples = 0, int exclusion = 3) {
  require(!taps.empty(), ErrorCode::invalid_argument, "estimate needs at least one tap");
  require(sample_rate > 0.0, ErrorCode::invalid_argument, "sample rate must be positive");
  ChannelEstimate e;
  e.sample_rate = sample_rate;
  e.delay_axis.resize(taps.size());
  for (std::size_t k = 0; k < taps.size(); ++k) {
    e.delay_axis[k] = static_cast<double>(static_cast<std::int64_t>(k) + first_delay_samples) / sample_rate;
  }
  const auto it = std::max_element(taps.begin(), taps.end(),
                                   [](double a, double b) { return std::abs(a) < std::abs(b); });
  e.peak_index = static_cast<std::size_t>(it - taps.begin());
  e.taps = std::move(taps);
  e.peak_to_offpeak_db = peak_to_offpeak_db(e.taps, e.peak_index, exclusion);
  return e;
}

namespace detail {

/// Mean of consecutive `frame`-long blocks from sample 0; a capture shorter
/// than one frame is zero-extended.
inline std::vector<double> average_frames(std::span<const double> x, std::size_t frame,
                                          std::size_t& count) {
  std::vector<double> acc(frame, 0.0);
  count = std::max<std::size_t>(1, x.size() / frame);
  for (std::size_t f = 0; f < count; ++f) {
    const std::size_t begin = f * frame;
    const std::size_t end = std::min(x.size(), begin + frame);
    for (std::size_t i = begin; i < end; ++i) acc[i - begin] += x[i];
  }
  for (auto& v : acc) v /= static_cast<double>(count);
  return acc;
}

/// out[i] = x[(i + shift) mod n]
inline std::vector<double> rotate(std::span<const double> x, std::int64_t shift) {
  const auto n = static_cast<std::int64_t>(x.size());
  std::vector<double> out(x.size());
  const std::int64_t s = ((shift % n) + n) % n;
  for (std::int64_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>((i + s) % n)];
  return out;
}

/// Overlap-adds a frame onto one sequence period.
inline std::vector<double> fold(std::span<const double> frame, std::size_t period) {
  std::vector<double> out(period, 0.0);
  for (std::size_t i = 0; i < frame.size(); ++i) out[i % period] += frame[i];
  return out;
}

inline std::vector<double> remove_mean(std::span<const double> x) {
  const double mean = x.empty() ? 0.0 : std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  std::vector<double> out(x.begin(), x.end());
  for (auto& v : out) v -= mean;
  return out;
}

/// Lag in [0, frame) maximizing |sum_n replica[n] frame[(n + lag) mod frame]|.
inline std::int64_t sync_offset(std::span<const double> replica, std::span<const double> frame) {
  std::vector<double> extended(frame.begin(), frame.end());
  extended.insert(extended.end(), frame.begin(),
                  frame.begin() + static_cast<std::ptrdiff_t>(std::min(frame.size(), replica.size() - 1)));
  const std::vector<double> lin = linear_correlation(replica, extended);
  const std::size_t zero_lag = replica.size() - 1;
  std::size_t best = 0;
  double best_value = -1.0;
  for (std::size_t k = 0; k < frame.size(); ++k) {
    const double v = std::abs(lin[zero_lag + k]);
    if (v > best_value) {
      best_value = v;
      best = k;
    }
  }
  return static_cast<std::int64_t>(best);
}

}  // namespace detail

/// Correlative sounder bound to one transmitted reference capture. The tx
/// capture fixes the frame length, the launch instant and the transmitted
/// amplitude used for normalization.
class Sounder {
 public:
  Sounder(const Waveform& tx, const PnSequence& sounding, SounderConfig config = {})
      : config_(config), sample_rate_(tx.sample_rate()), tx_t0_(tx.t0()) {
    require(config_.samples_per_chip >= 1, ErrorCode::invalid_argument, "samples per chip must be >= 1");
    require(sounding.period() >= 3, ErrorCode::invalid_argument, "sounding sequence too short");
    chips_ = sounding.period();
    replica_ = bipolar_replica(sounding, config_.samples_per_chip);
    period_ = replica_.size();
    frame_ = config_.frame_samples > 0 ? static_cast<std::size_t>(config_.frame_samples) : 2 * period_;
    require(frame_ >= period_, ErrorCode::insufficient_length,
            "sounding frame shorter than one sequence period (" + std::to_string(period_) + " samples)");
    require(tx.size() >= period_, ErrorCode::insufficient_length,
            "tx capture shorter than one sequence period");
    require(config_.precursor_samples >= 0 && static_cast<std::size_t>(config_.precursor_samples) < period_,
            ErrorCode::invalid_argument, "precursor window must lie within one period");

    std::size_t count = 0;
    const auto avg = detail::average_frames(prepare(tx.samples()), frame_, count);
    tx_offset_ = detail::sync_offset(replica_, avg);
    const auto response = correlate(detail::rotate(avg, tx_offset_));
    tx_amplitude_ = response.front();
    require(tx_amplitude_ != 0.0 && std::isfinite(tx_amplitude_), ErrorCode::no_peak_found,
            "tx capture carries no sounding sequence");
  }

  [[nodiscard]] const SounderConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t period_samples() const noexcept { return period_; }
  [[nodiscard]] std::size_t frame_samples() const noexcept { return frame_; }
  [[nodiscard]] double tx_amplitude() const noexcept { return tx_amplitude_; }
  [[nodiscard]] std::int64_t tx_offset() const noexcept { return tx_offset_; }

  /// Coherent average over every frame of every capture.
  [[nodiscard]] ChannelEstimate estimate(std::span<const Waveform> captures) const {
    require(!captures.empty(), ErrorCode::invalid_argument, "no rx captures");
    std::vector<double> acc(frame_, 0.0);
    std::size_t total = 0;
    for (const auto& rx : captures) {
      std::size_t count = 0;
      const auto avg = averaged(rx, count);
      const auto aligned = detail::rotate(avg, alignment_shift(rx, avg));
      for (std::size_t i = 0; i < frame_; ++i) acc[i] += aligned[i] * static_cast<double>(count);
      total += count;
    }
    for (auto& v : acc) v /= static_cast<double>(total);
    return finish(correlate(acc), total);
  }

  [[nodiscard]] ChannelEstimate estimate(const Waveform& rx) const {
    return estimate(std::span<const Waveform>(&rx, 1));
  }

  /// One estimate per frame of a capture, all sharing the alignment of the
  /// capture average so that delay drift between frames stays visible.
  [[nodiscard]] std::vector<ChannelEstimate> estimate_frames(const Waveform& rx) const {
    std::size_t count = 0;
    const auto avg = averaged(rx, count);
    const auto shift = alignment_shift(rx, avg);
    const auto prepared = prepare(rx.samples());
    std::vector<ChannelEstimate> out;
    for (std::size_t f = 0; f < count; ++f) {
      std::vector<double> frame(frame_, 0.0);
      const std::size_t begin = f * frame_;
      const std::size_t end = std::min(prepared.size(), begin + frame_);
      std::copy(prepared.begin() + static_cast<std::ptrdiff_t>(begin),
                prepared.begin() + static_cast<std::ptrdiff_t>(end), frame.begin());
      out.push_back(finish(correlate(detail::rotate(frame, shift)), 1));
    }
    return out;
  }

  /// One coherently averaged estimate per capture.
  [[nodiscard]] std::vector<ChannelEstimate> estimate_each(std::span<const Waveform> captures) const {
    std::vector<ChannelEstimate> out;
    out.reserve(captures.size());
    for (const auto& rx : captures) out.push_back(estimate(rx));
    return out;
  }

 private:
  std::vector<double> prepare(std::span<const double> x) const {
    return config_.remove_mean ? detail::remove_mean(x) : std::vector<double>(x.begin(), x.end());
  }

  std::vector<double> averaged(const Waveform& rx, std::size_t& count) const {
    require(rx.sample_rate() == sample_rate_, ErrorCode::sample_rate_mismatch,
            "rx sample rate differs from the tx capture");
    require(rx.size() >= period_, ErrorCode::insufficient_length,
            "rx capture shorter than one sequence period (" + std::to_string(period_) + " samples)");
    return detail::average_frames(prepare(rx.samples()), frame_, count);
  }

  std::int64_t alignment_shift(const Waveform& rx, std::span<const double> avg) const {
    std::int64_t start = 0;
    if (config_.alignment == Alignment::correlation_peak) {
      start = detail::sync_offset(replica_, avg);
    } else {
      start = tx_offset_ + std::llround((tx_t0_ - rx.t0()) * sample_rate_);
    }
    return start - config_.precursor_samples;
  }

  /// Fold, correlate over one period and normalize by the replica's zero-lag
  /// autocorrelation (or invert the two-valued autocorrelation exactly).
  std::vector<double> correlate(std::span<const double> frame) const {
    const auto folded = detail::fold(frame, period_);
    std::vector<double> c = detail::circular_correlation(replica_, folded);
    const auto spc = static_cast<double>(config_.samples_per_chip);
    const auto n = static_cast<double>(chips_);
    if (config_.sidelobe_compensation) {
      // R = (N+1) T - spc with T the hold triangle; sum(R) = spc^2.
      const double offset = std::accumulate(c.begin(), c.end(), 0.0) / spc;
      for (auto& v : c) v = (v + offset) / ((n + 1.0) * spc);
    } else {
      for (auto& v : c) v /= n * spc;
    }
    return c;
  }

  ChannelEstimate finish(std::vector<double> response, std::size_t frames) const {
    for (auto& v : response) v /= tx_amplitude_;
    auto est = make_estimate(std::move(response), sample_rate_, -config_.precursor_samples,
                             config_.offpeak_exclusion);
    est.normalization = 1.0 / (tx_amplitude_ * static_cast<double>(chips_) * config_.samples_per_chip);
    est.frames_averaged = frames;
    if (est.peak_to_offpeak_db < config_.detection_threshold_db) {
      throw Error(ErrorCode::no_peak_found,
                  "peak-to-off-peak ratio " + std::to_string(est.peak_to_offpeak_db) +
                      " dB below detection threshold " + std::to_string(config_.detection_threshold_db) + " dB");
    }
    return est;
  }

  SounderConfig config_;
  double sample_rate_;
  double tx_t0_;
  std::size_t chips_ = 0;
  std::vector<double> replica_;
  std::size_t period_ = 0;
  std::size_t frame_ = 0;
  std::int64_t tx_offset_ = 0;
  double tx_amplitude_ = 1.0;
};

inline ChannelEstimate estimate_cir(const Waveform& tx, const Waveform& rx, const PnSequence& sounding,
                                    const SounderConfig& config = {}) {
  require(tx.sample_rate() == rx.sample_rate(), ErrorCode::sample_rate_mismatch,
          "tx and rx sample rates differ");
  return Sounder(tx, sounding, config).estimate(rx);
}

// --- Derived quantities ---------------------------------------------------

struct PowerDelayProfile {
  std::vector<double> power;
  std::vector<double> delay_axis;
};

inline PowerDelayProfile power_delay_profile(const ChannelEstimate& est) {
  PowerDelayProfile p{std::vector<double>(est.taps.size()), est.delay_axis};
  std::transform(est.taps.begin(), est.taps.end(), p.power.begin(), [](double h) { return h * h; });
  return p;
}

/// gains[i] = sum_k taps[k] exp(-j 2 pi f_i delay[k]) for f_i in [0, fs/2].
inline FrequencyResponse cfr_from_cir(const ChannelEstimate& est, std::vector<double> freq_grid) {
  const double nyquist = est.sample_rate / 2.0;
  for (double f : freq_grid) {
    require(f >= 0.0 && f <= nyquist * (1.0 + 1e-12), ErrorCode::frequency_out_of_range,
            "frequency " + std::to_string(f) + " Hz outside [0, " + std::to_string(nyquist) + "] Hz");
  }
  std::vector<std::complex<double>> gains(freq_grid.size());
  for (std::size_t i = 0; i < freq_grid.size(); ++i) {
    const double w = -2.0 * std::numbers::pi * freq_grid[i];
    std::complex<double> acc{};
    for (std::size_t k = 0; k < est.taps.size(); ++k) {
      if (est.taps[k] != 0.0) acc += est.taps[k] * std::polar(1.0, w * est.delay_axis[k]);
    }
    gains[i] = acc;
  }
  return FrequencyResponse::from_gains(std::move(freq_grid), std::move(gains));
}

inline double scalar_gain_db(double v_received, double v_transmitted) {
  require(v_received > 0.0 && v_transmitted > 0.0, ErrorCode::non_positive_voltage,
          "voltages must be strictly positive");
  return 20.0 * std::log10(v_received / v_transmitted);
}

// --- Stationarity ---------------------------------------------------------

struct StationarityReport {
  std::vector<double> peak_amplitudes;  // alpha(t_i)
  std::vector<std::size_t> peak_indices;
  double coefficient_of_variation = 0.0;
  std::size_t max_drift_samples = 0;
  double cv_threshold = 0.05;
  bool time_invariant = false;
};

/// Treats each estimate as a snapshot h(t_i, tau) = alpha(t_i) delta(tau - tau_i).
inline StationarityReport stationarity_check(std::span<const ChannelEstimate> frames, double cv_threshold = 0.05) {
  require(frames.size() >= 2, ErrorCode::frame_mismatch, "stationarity needs at least two frames");
  const auto& ref = frames.front();
  for (const auto& f : frames) {
    require(f.delay_axis == ref.delay_axis, ErrorCode::frame_mismatch, "frames have different delay axes");
  }
  StationarityReport r;
  r.cv_threshold = cv_threshold;
  for (const auto& f : frames) {
    r.peak_amplitudes.push_back(std::abs(f.taps[f.peak_index]));
    r.peak_indices.push_back(f.peak_index);
  }
  const auto count = static_cast<double>(frames.size());
  // Shifted by the first amplitude so that equal amplitudes give exactly zero.
  const double ref_amp = r.peak_amplitudes.front();
  double shift_sum = 0.0;
  for (double a : r.peak_amplitudes) shift_sum += a - ref_amp;
  const double shift_mean = shift_sum / count;
  const double mean = ref_amp + shift_mean;
  double var = 0.0;
  for (double a : r.peak_amplitudes) var += (a - ref_amp - shift_mean) * (a - ref_amp - shift_mean);
  const double sd = std::sqrt(var / count);
  if (mean > 0.0) {
    r.coefficient_of_variation = sd / mean;
  } else {
    r.coefficient_of_variation = sd > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  const auto [lo, hi] = std::minmax_element(r.peak_indices.begin(), r.peak_indices.end());
  r.max_drift_samples = *hi - *lo;
  r.time_invariant = r.coefficient_of_variation <= cv_threshold && r.max_drift_samples == 0;
  return r;
}

}  // namespace ibc
