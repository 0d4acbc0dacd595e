#pragma once

// Parametric high-pass channel and the waveform-level channel simulator.
//
// The model is a cascade of real first-order shelves
//
//   H(s) = K * prod_i (s + z_i) / (s + p_i),   0 <= z_i < p_i,
//
// so every pole and zero lies on the negative real axis. Each section rises
// monotonically from z_i/p_i at DC to 1 at high frequency, which keeps any
// fitted model high-pass and trivially stable.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ibc/error.hpp"
#include "ibc/frequency_response.hpp"
#include "ibc/signals.hpp"
#include "ibc/sounder.hpp"

namespace ibc {

struct ShelfSection {
  double zero = 0.0;  // rad/s, H has a zero at s = -zero
  double pole = 1.0;  // rad/s, H has a pole at s = -pole

  friend bool operator==(const ShelfSection&, const ShelfSection&) = default;
};

/// Diagnostics attached to a model produced by fit_gain_model.
struct FitReport {
  std::vector<double> freqs;
  std::vector<double> residual_db;  // model minus sample
  double rms_residual_db = 0.0;
  int iterations = 0;
  /// Some section has no visible effect inside the sampled band (its zero
  /// and pole nearly cancel or it sits far outside the band).
  bool degenerate = false;

  friend bool operator==(const FitReport&, const FitReport&) = default;
};

struct HighPassModel {
  double passband_gain_db = 0.0;
  std::vector<ShelfSection> sections;
  /// Frequency where the magnitude is 3.0103 dB below the passband gain;
  /// NaN when the DC gain is already above that level.
  double cutoff_hz = std::numeric_limits<double>::quiet_NaN();
  FitReport fit;

  [[nodiscard]] int order() const noexcept { return static_cast<int>(sections.size()); }

  [[nodiscard]] std::vector<std::complex<double>> zeros() const {
    std::vector<std::complex<double>> out;
    for (const auto& s : sections) out.emplace_back(-s.zero, 0.0);
    return out;
  }
  [[nodiscard]] std::vector<std::complex<double>> poles() const {
    std::vector<std::complex<double>> out;
    for (const auto& s : sections) out.emplace_back(-s.pole, 0.0);
    return out;
  }

  [[nodiscard]] std::complex<double> gain_at(double freq_hz) const {
    const std::complex<double> s(0.0, 2.0 * std::numbers::pi * freq_hz);
    std::complex<double> h(std::pow(10.0, passband_gain_db / 20.0), 0.0);
    for (const auto& sec : sections) h *= (s + sec.zero) / (s + sec.pole);
    return h;
  }

  friend bool operator==(const HighPassModel& a, const HighPassModel& b) {
    const bool cut_eq = (std::isnan(a.cutoff_hz) && std::isnan(b.cutoff_hz)) || a.cutoff_hz == b.cutoff_hz;
    return a.passband_gain_db == b.passband_gain_db && a.sections == b.sections && cut_eq && a.fit == b.fit;
  }
};

namespace detail {

inline double model_db(const HighPassModel& m, double f) { return magnitude_db(m.gain_at(f)); }

inline double find_cutoff_hz(const HighPassModel& m) {
  if (m.sections.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double target = m.passband_gain_db - 10.0 * std::log10(2.0);
  if (model_db(m, 0.0) >= target) return std::numeric_limits<double>::quiet_NaN();
  double hi = 0.0;
  for (const auto& s : m.sections) hi = std::max(hi, s.pole);
  hi /= 2.0 * std::numbers::pi;
  while (model_db(m, hi) < target) hi *= 2.0;
  double lo = 0.0;
  for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (model_db(m, mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Validates the sections and derives cutoff_hz.
inline HighPassModel make_high_pass(double passband_gain_db, std::vector<ShelfSection> sections) {
  require(std::isfinite(passband_gain_db), ErrorCode::invalid_argument, "passband gain must be finite");
  for (const auto& s : sections) {
    require(std::isfinite(s.pole) && s.pole > 0.0, ErrorCode::invalid_argument,
            "poles must lie strictly in the left half-plane");
    require(std::isfinite(s.zero) && s.zero >= 0.0 && s.zero <= s.pole, ErrorCode::invalid_argument,
            "zeros must satisfy 0 <= zero <= pole");
  }
  HighPassModel m;
  m.passband_gain_db = passband_gain_db;
  m.sections = std::move(sections);
  m.cutoff_hz = detail::find_cutoff_hz(m);
  return m;
}

/// K * s / (s + 2 pi fc): exactly 3.0103 dB down at fc.
inline HighPassModel first_order_high_pass(double cutoff_hz, double passband_gain_db) {
  return make_high_pass(passband_gain_db, {{0.0, 2.0 * std::numbers::pi * cutoff_hz}});
}

/// gain_db is -infinity where the response is exactly zero (DC with a zero
/// at the origin).
inline FrequencyResponse model_frequency_response(const HighPassModel& model, std::vector<double> freq_grid) {
  for (double f : freq_grid) require(f >= 0.0, ErrorCode::invalid_argument, "frequencies must be >= 0");
  std::vector<std::complex<double>> gains;
  gains.reserve(freq_grid.size());
  for (double f : freq_grid) gains.push_back(model.gain_at(f));
  return FrequencyResponse::from_gains(std::move(freq_grid), std::move(gains));
}

// --- Fitting ----------------------------------------------------------------

struct FitOptions {
  int max_iterations = 500;
  /// RMS dB residual above which the fit is reported as diverged.
  double tolerance_db = 3.0;
};

namespace detail {

inline double logistic(double w) { return 1.0 / (1.0 + std::exp(-w)); }

/// Parameters: [gain_db, ln p_1, w_1, ..., ln p_n, w_n] with z_i = p_i * logistic(w_i).
struct ShelfFitProblem {
  std::vector<double> omega;
  std::vector<double> target_db;
  int order;

  [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& th) const {
    Eigen::VectorXd r(static_cast<Eigen::Index>(omega.size()));
    for (std::size_t k = 0; k < omega.size(); ++k) {
      const double w2 = omega[k] * omega[k];
      double v = th[0];
      for (int i = 0; i < order; ++i) {
        const double p = std::exp(th[1 + 2 * i]);
        const double z = p * logistic(th[2 + 2 * i]);
        v += 10.0 * std::log10((w2 + z * z) / (w2 + p * p));
      }
      r[static_cast<Eigen::Index>(k)] = v - target_db[k];
    }
    return r;
  }

  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& th) const {
    constexpr double c = 20.0 / std::numbers::ln10;  // d(10 log10 x) = c/2 dx/x
    Eigen::MatrixXd j(static_cast<Eigen::Index>(omega.size()), th.size());
    for (std::size_t k = 0; k < omega.size(); ++k) {
      const auto row = static_cast<Eigen::Index>(k);
      const double w2 = omega[k] * omega[k];
      j(row, 0) = 1.0;
      for (int i = 0; i < order; ++i) {
        const double p = std::exp(th[1 + 2 * i]);
        const double sig = logistic(th[2 + 2 * i]);
        const double z = p * sig;
        const double a = w2 + z * z;
        const double b = w2 + p * p;
        j(row, 1 + 2 * i) = c * (z * z / a - p * p / b);
        j(row, 2 + 2 * i) = c * z * z * (1.0 - sig) / a;
      }
    }
    return j;
  }
};

inline std::vector<ShelfSection> sections_from(const Eigen::VectorXd& th, int order) {
  std::vector<ShelfSection> out;
  for (int i = 0; i < order; ++i) {
    const double p = std::exp(th[1 + 2 * i]);
    out.push_back({p * logistic(th[2 + 2 * i]), p});
  }
  return out;
}

}  // namespace detail

/// Least-squares fit of the dB magnitude of a shelf cascade to `samples`.
///
/// Initialization is a deterministic grid: cutoff candidates log-spaced from
/// a decade below to a decade above the sampled band, sections spread around
/// each candidate by a factor of 3, and zero/pole ratios {0.05, 0.1, 0.2,
/// 0.5}; the gain is set to the mean offset. The best grid point is refined
/// with Levenberg-Marquardt under a fixed iteration cap.
inline HighPassModel fit_gain_model(const FrequencyResponse& samples, int order, const FitOptions& options = {}) {
  require(order >= 1, ErrorCode::invalid_argument, "model order must be >= 1");
  require(samples.size() >= static_cast<std::size_t>(order) + 1, ErrorCode::insufficient_samples,
          "order " + std::to_string(order) + " needs at least " + std::to_string(order + 1) + " samples");
  detail::ShelfFitProblem prob{{}, {}, order};
  for (std::size_t k = 0; k < samples.size(); ++k) {
    require(samples.freqs[k] > 0.0, ErrorCode::invalid_argument, "sample frequencies must be > 0");
    require(std::isfinite(samples.gain_db[k]), ErrorCode::invalid_argument, "sample gains must be finite");
    prob.omega.push_back(2.0 * std::numbers::pi * samples.freqs[k]);
    prob.target_db.push_back(samples.gain_db[k]);
  }
  const double f_lo = samples.freqs.front();
  const double f_hi = samples.freqs.back();
  const auto n_params = static_cast<Eigen::Index>(1 + 2 * order);

  Eigen::VectorXd best(n_params);
  double best_cost = std::numeric_limits<double>::infinity();
  for (double fc : log_grid(f_lo / 10.0, f_hi * 10.0, 40)) {
    for (double ratio : {0.05, 0.1, 0.2, 0.5}) {
      Eigen::VectorXd th(n_params);
      th[0] = 0.0;
      for (int i = 0; i < order; ++i) {
        const double spread = std::pow(3.0, static_cast<double>(i) - 0.5 * (order - 1));
        th[1 + 2 * i] = std::log(2.0 * std::numbers::pi * fc * spread);
        th[2 + 2 * i] = std::log(ratio / (1.0 - ratio));
      }
      th[0] = -prob.residual(th).mean();
      const double cost = prob.residual(th).squaredNorm();
      if (cost < best_cost) {
        best_cost = cost;
        best = th;
      }
    }
  }

  Eigen::VectorXd th = best;
  Eigen::VectorXd r = prob.residual(th);
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int iter = 0;
  for (; iter < options.max_iterations && cost > 1e-24; ++iter) {
    const Eigen::MatrixXd j = prob.jacobian(th);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd g = j.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < 1e-14) break;
    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::MatrixXd a = jtj;
      a.diagonal().array() += lambda;
      const Eigen::VectorXd step = a.ldlt().solve(-g);
      const Eigen::VectorXd trial = th + step;
      const Eigen::VectorXd r_trial = prob.residual(trial);
      const double c_trial = r_trial.squaredNorm();
      if (std::isfinite(c_trial) && c_trial < cost) {
        const double gain = cost - c_trial;
        th = trial;
        r = r_trial;
        cost = c_trial;
        lambda = std::max(lambda / 3.0, 1e-12);
        accepted = gain > 1e-15 * cost;
        break;
      }
      lambda *= 4.0;
    }
    if (!accepted) break;
  }

  HighPassModel model;
  model.passband_gain_db = th[0];
  model.sections = detail::sections_from(th, order);
  model.fit.freqs = samples.freqs;
  model.fit.iterations = iter;
  bool finite = std::isfinite(th[0]);
  for (const auto& s : model.sections) finite = finite && std::isfinite(s.pole) && std::isfinite(s.zero) && s.pole > 0.0;
  for (Eigen::Index k = 0; k < r.size(); ++k) model.fit.residual_db.push_back(r[k]);
  model.fit.rms_residual_db = std::sqrt(cost / static_cast<double>(r.size()));
  if (!finite || !std::isfinite(model.fit.rms_residual_db)) {
    throw Error(ErrorCode::fit_diverged, "fit produced non-finite parameters");
  }
  if (model.fit.rms_residual_db > options.tolerance_db) {
    throw Error(ErrorCode::fit_diverged, "RMS residual " + std::to_string(model.fit.rms_residual_db) +
                                             " dB above tolerance " + std::to_string(options.tolerance_db) + " dB");
  }
  const double w_lo = 2.0 * std::numbers::pi * f_lo;
  const double w_hi = 2.0 * std::numbers::pi * f_hi;
  for (const auto& s : model.sections) {
    auto sec_db = [&](double w) { return 10.0 * std::log10((w * w + s.zero * s.zero) / (w * w + s.pole * s.pole)); };
    if (s.zero > 0.99 * s.pole || sec_db(w_hi) - sec_db(w_lo) < 0.01) model.fit.degenerate = true;
  }
  model.cutoff_hz = detail::find_cutoff_hz(model);
  return model;
}

// --- Discretization ---------------------------------------------------------

/// One bilinear-transformed shelf: y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1].
struct FirstOrderFilter {
  double b0, b1, a1;
  double x1 = 0.0, y1 = 0.0;

  double step(double x) {
    const double y = b0 * x + b1 * x1 - a1 * y1;
    x1 = x;
    y1 = y;
    return y;
  }
};

namespace detail {

inline std::vector<FirstOrderFilter> bilinear_sections(const HighPassModel& m, double sample_rate) {
  require(sample_rate > 0.0 && std::isfinite(sample_rate), ErrorCode::invalid_argument,
          "sample rate must be positive");
  const double c = 2.0 * sample_rate;
  std::vector<FirstOrderFilter> out;
  for (const auto& s : m.sections) {
    const double d = c + s.pole;
    FirstOrderFilter q{(c + s.zero) / d, (s.zero - c) / d, (s.pole - c) / d};
    require(std::isfinite(q.a1) && std::abs(q.a1) < 1.0, ErrorCode::unstable_after_discretization,
            "discrete pole on or outside the unit circle");
    out.push_back(q);
  }
  return out;
}

/// Runs the discretized cascade over x (zero initial state).
inline std::vector<double> filter(const HighPassModel& m, double sample_rate, std::span<const double> x) {
  auto sections = bilinear_sections(m, sample_rate);
  const double k = std::pow(10.0, m.passband_gain_db / 20.0);
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    double v = k * x[n];
    for (auto& s : sections) v = s.step(v);
    y[n] = v;
  }
  return y;
}

}  // namespace detail

inline constexpr const char* kBilinear = "bilinear";

/// Impulse response of the bilinear discretization, truncated to `length`
/// taps. truncation_energy_loss is the fraction of the total impulse-response
/// energy lying beyond the truncation point.
inline ChannelEstimate model_impulse_response(const HighPassModel& model, double sample_rate, std::size_t length) {
  require(length > 0, ErrorCode::invalid_argument, "impulse response length must be > 0");
  auto sections = detail::bilinear_sections(model, sample_rate);
  // Long enough for the slowest discrete pole to decay by e^-40.
  double slowest = 0.0;
  for (const auto& s : sections) slowest = std::max(slowest, std::abs(s.a1));
  std::size_t settle = 1;
  if (slowest > 0.0) {
    settle = static_cast<std::size_t>(std::min(std::ceil(40.0 / -std::log(slowest)), double{1 << 26})) + 1;
  }
  const std::size_t run = std::max(length, settle);
  std::vector<double> impulse(run, 0.0);
  impulse[0] = 1.0;
  std::vector<double> h = detail::filter(model, sample_rate, impulse);

  double total = 0.0;
  double kept = 0.0;
  for (std::size_t n = 0; n < run; ++n) {
    total += h[n] * h[n];
    if (n < length) kept += h[n] * h[n];
  }
  h.resize(length);
  auto est = make_estimate(std::move(h), sample_rate);
  est.discretization = kBilinear;
  est.truncation_energy_loss = total > 0.0 ? std::max(0.0, (total - kept) / total) : 0.0;
  return est;
}

// --- Channel simulation -------------------------------------------------------

struct CommonModeTone {
  double amplitude_v = 0.0;  // fundamental amplitude
  double fundamental_hz = 50.0;
  double phase_rad = 0.0;
  /// (harmonic number, amplitude relative to the fundamental)
  std::vector<std::pair<int, double>> harmonics{{3, 0.3}, {5, 0.1}};
};

struct ChannelSimConfig {
  /// Signal-to-noise ratio against the channel output power; +inf disables
  /// the noise.
  double noise_snr_db = std::numeric_limits<double>::infinity();
  CommonModeTone common_mode;
  std::uint64_t rng_seed = 1;
};

/// Common-mode waveform evaluated at the sample instants of `like`.
inline std::vector<double> common_mode_waveform(const CommonModeTone& tone, const Waveform& like) {
  require(tone.amplitude_v >= 0.0, ErrorCode::invalid_argument, "tone amplitude must be >= 0");
  std::vector<double> out(like.size(), 0.0);
  if (tone.amplitude_v == 0.0) return out;
  for (std::size_t n = 0; n < out.size(); ++n) {
    const double arg = 2.0 * std::numbers::pi * tone.fundamental_hz * like.time_at(n);
    double v = std::sin(arg + tone.phase_rad);
    for (const auto& [k, rel] : tone.harmonics) v += rel * std::sin(k * (arg + tone.phase_rad));
    out[n] = tone.amplitude_v * v;
  }
  return out;
}

/// tx through the discretized model (run as a recursion, i.e. the
/// untruncated impulse response), plus white Gaussian noise and the
/// common-mode tone. The output has the length and timebase of tx.
///
/// Noise power is set relative to the channel output power, so a silent
/// input gets no noise.
inline Waveform apply_channel(const Waveform& tx, const HighPassModel& model, const ChannelSimConfig& cfg) {
  require(!std::isnan(cfg.noise_snr_db), ErrorCode::invalid_argument, "SNR must not be NaN");
  std::vector<double> y = detail::filter(model, tx.sample_rate(), tx.samples());
  if (std::isfinite(cfg.noise_snr_db) && !y.empty()) {
    double power = 0.0;
    for (double v : y) power += v * v;
    power /= static_cast<double>(y.size());
    const double sigma = std::sqrt(power / std::pow(10.0, cfg.noise_snr_db / 10.0));
    if (sigma > 0.0) {
      std::mt19937_64 rng(cfg.rng_seed);
      std::normal_distribution<double> noise(0.0, sigma);
      for (auto& v : y) v += noise(rng);
    }
  }
  const auto tone = common_mode_waveform(cfg.common_mode, tx);
  for (std::size_t n = 0; n < y.size(); ++n) y[n] += tone[n];
  return Waveform(std::move(y), tx.sample_rate(), tx.t0());
}

struct SimulatedSession {
  Waveform tx;
  Waveform rx;
};

/// Replays `frames` sounding frames through the model. One extra frame is
/// sent first and dropped so that the returned rx is in steady state; tx and
/// rx share the timebase (t0 = 0).
inline SimulatedSession simulate_session(const PnSequence& sounding, const SoundingParams& params,
                                         const HighPassModel& model, const ChannelSimConfig& cfg,
                                         std::size_t frames) {
  require(frames >= 1, ErrorCode::invalid_argument, "at least one frame is required");
  const Waveform frame = sounding_frame(sounding, params);
  const Waveform one = repeat(frame, frames + 1);
  const double lead = static_cast<double>(frame.size()) / frame.sample_rate();
  const Waveform launched(one.data(), one.sample_rate(), -lead);
  const Waveform out = apply_channel(launched, model, cfg);
  std::vector<double> rx(out.data().begin() + static_cast<std::ptrdiff_t>(frame.size()), out.data().end());
  return {repeat(frame, frames), Waveform(std::move(rx), frame.sample_rate(), 0.0)};
}

}  // namespace ibc
