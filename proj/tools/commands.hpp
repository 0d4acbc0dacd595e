#pragma once

// Subcommand implementations behind ibc_sound. Each command reads its
// inputs, writes deterministic data files into `out` and prints a short
// summary. Argument parsing lives in cli_app.hpp.

#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "ibc/channel_model.hpp"
#include "ibc/ingest_io.hpp"
#include "ibc/signals.hpp"
#include "ibc/sounder.hpp"
#include "ibc/tissue_fem.hpp"
#include "svg_plot.hpp"

#ifndef IBC_DATA_DIR
#define IBC_DATA_DIR "data"
#endif

namespace ibc::cli {

namespace fs = std::filesystem;
using text::format_double;

struct RunContext {
  std::ostream& log;
  /// Effective configuration (flags merged over the config file), written
  /// to every output directory.
  std::string config_echo;
};

inline void prepare_output(const fs::path& out, const RunContext& ctx) {
  fs::create_directories(out);
  if (!ctx.config_echo.empty()) io::write_file(out / "effective_config.toml", ctx.config_echo);
}

inline std::string db(double v) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << v;
  return o.str();
}

// --- generate -------------------------------------------------------------

struct SoundingOptions {
  int degree = 13;
  double chip_rate_hz = 5e6;
  double sample_rate_hz = 0.0;  // 0: equal to the chip rate
  double amplitude_vpp = 1.0;
  int pad_chips = -1;           // negative: one period of zeros
  std::vector<int> taps;
  std::uint32_t seed = 0;

  [[nodiscard]] io::SoundingSpec spec() const {
    io::SoundingSpec s;
    s.degree = degree;
    s.taps = taps;
    s.seed = seed;
    s.params.amplitude_vpp = amplitude_vpp;
    s.params.chip_rate_hz = chip_rate_hz;
    s.params.sample_rate_hz = sample_rate_hz > 0.0 ? sample_rate_hz : chip_rate_hz;
    s.params.pad_chips = pad_chips;
    return s;
  }
};

struct GenerateOptions {
  SoundingOptions sounding;
  fs::path out = "out";
};

inline int run_generate(const GenerateOptions& o, const RunContext& ctx) {
  const auto spec = o.sounding.spec();
  const auto seq = spec.sequence();
  const auto frame = sounding_frame(seq, spec.params);
  const auto st = sequence_stats(seq);
  prepare_output(o.out, ctx);
  io::write_capture(o.out / "sounding.csv", frame, "generate");

  std::ostringstream s;
  s << "degree=" << seq.degree << "\nperiod=" << st.period << "\nones=" << st.ones << "\nzeros=" << st.zeros
    << "\nbalanced=" << (st.ones == st.zeros + 1 ? "yes" : "no") << "\nautocorr_peak=" << st.autocorr_peak
    << "\noffpeak_min=" << st.offpeak_min << "\noffpeak_max=" << st.offpeak_max
    << "\nsamples_per_chip=" << samples_per_chip(spec.params) << "\nframe_samples=" << frame.size()
    << "\nsample_rate_hz=" << format_double(frame.sample_rate()) << '\n';
  io::write_file(o.out / "sequence_stats.txt", s.str());
  ctx.log << s.str();
  return 0;
}

// --- simulate ---------------------------------------------------------------

struct SimulateOptions {
  SoundingOptions sounding;
  std::optional<fs::path> model;     // model JSON
  std::optional<fs::path> fit_from;  // gain samples CSV
  int order = 2;
  double snr_db = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 1;
  std::size_t frames = 4;
  std::size_t captures = 1;
  double common_mode_v = 0.0;
  double common_mode_hz = 50.0;
  fs::path out = "out";
};

inline HighPassModel load_or_fit(const std::optional<fs::path>& model, const std::optional<fs::path>& fit_from,
                                 int order) {
  require(model.has_value() != fit_from.has_value(), ErrorCode::invalid_argument,
          "exactly one of --model and --fit-from is required");
  if (model) return io::parse_model(io::read_file(*model));
  return fit_gain_model(io::parse_gain_samples(io::read_file(*fit_from), fit_from->string()), order);
}

inline void describe_model(const HighPassModel& m, std::ostream& log) {
  log << "model: order " << m.order() << ", passband " << db(m.passband_gain_db) << " dB";
  if (!std::isnan(m.cutoff_hz)) log << ", cutoff " << format_double(std::round(m.cutoff_hz)) << " Hz";
  if (!m.fit.freqs.empty()) {
    log << ", fit rms " << format_double(m.fit.rms_residual_db) << " dB";
    if (m.fit.degenerate) log << " (degenerate section)";
  }
  log << '\n';
}

inline int run_simulate(const SimulateOptions& o, const RunContext& ctx) {
  require(o.frames >= 1 && o.captures >= 1, ErrorCode::invalid_argument, "frames and captures must be >= 1");
  const auto model = load_or_fit(o.model, o.fit_from, o.order);
  const auto spec = o.sounding.spec();
  const auto seq = spec.sequence();
  prepare_output(o.out, ctx);
  io::write_file(o.out / "model.json", io::model_text(model));

  io::SessionManifest m;
  m.session_id = "simulated-seed" + std::to_string(o.seed);
  m.tx_capture = "tx.csv";
  m.sounding = spec;
  m.trigger_shared = true;
  m.notes = "synthetic session; snr_db=" + format_double(o.snr_db);
  for (std::size_t k = 0; k < o.captures; ++k) {
    ChannelSimConfig cfg;
    cfg.noise_snr_db = o.snr_db;
    cfg.rng_seed = o.seed + k;
    cfg.common_mode.amplitude_v = o.common_mode_v;
    cfg.common_mode.fundamental_hz = o.common_mode_hz;
    const auto session = simulate_session(seq, spec.params, model, cfg, o.frames);
    if (k == 0) io::write_capture(o.out / m.tx_capture, sounding_frame(seq, spec.params), "tx");
    char name[32];
    std::snprintf(name, sizeof name, "rx_%03zu.csv", k);
    io::write_capture(o.out / name, session.rx, "rx");
    m.rx_captures.emplace_back(name);
  }
  io::write_file(o.out / "session.json", io::manifest_text(m));
  describe_model(model, ctx.log);
  ctx.log << "wrote " << o.captures << " rx capture(s) of " << o.frames << " frame(s) to " << o.out.string() << '\n';
  return 0;
}

// --- sound / report -----------------------------------------------------------

struct Reference {
  std::optional<HighPassModel> model;
  std::optional<FrequencyResponse> samples;
};

inline Reference load_reference(const std::optional<fs::path>& path) {
  Reference r;
  if (!path) return r;
  const auto content = io::read_file(*path);
  if (path->extension() == ".json") {
    r.model = io::parse_model(content);
  } else {
    r.samples = io::parse_gain_samples(content, path->string());
  }
  return r;
}

inline std::vector<double> default_grid(double sample_rate) {
  return log_grid(1e4, sample_rate / 2.0, 61);
}

/// Writes the estimate-derived data files and plots; shared by sound and report.
inline void write_estimate_products(const ChannelEstimate& est, std::vector<double> freqs, const Reference& ref,
                                    const fs::path& out, std::ostream& log) {
  if (freqs.empty()) freqs = default_grid(est.sample_rate);
  io::write_file(out / "estimate.txt", io::estimate_text(est));

  const auto pdp = power_delay_profile(est);
  std::ostringstream p;
  p << "delay_s,power\n";
  for (std::size_t k = 0; k < pdp.power.size(); ++k) {
    p << format_double(pdp.delay_axis[k]) << ',' << format_double(pdp.power[k]) << '\n';
  }
  io::write_file(out / "pdp.csv", p.str());

  const auto cfr = cfr_from_cir(est, freqs);
  io::write_file(out / "cfr.csv", io::response_text(cfr));

  log << "peak delay " << format_double(est.delay_axis[est.peak_index]) << " s, tap "
      << format_double(est.taps[est.peak_index]) << ", peak-to-off-peak " << db(est.peak_to_offpeak_db) << " dB, "
      << est.frames_averaged << " frame(s) averaged\n";

  std::vector<PlotSeries> cfr_series{{"estimated CFR", cfr.freqs, cfr.gain_db, false, false}};
  std::ostringstream cmp;
  if (ref.model || ref.samples) {
    cmp << "frequency_hz,estimated_db,reference_db,difference_db\n";
    const auto ref_freqs = ref.model ? cfr.freqs : ref.samples->freqs;
    const auto at = cfr_from_cir(est, ref_freqs);
    double worst = 0.0;
    PlotSeries rs{"reference", ref_freqs, {}, false, ref.samples.has_value()};
    for (std::size_t i = 0; i < ref_freqs.size(); ++i) {
      const double r = ref.model ? magnitude_db(ref.model->gain_at(ref_freqs[i])) : ref.samples->gain_db[i];
      const double d = at.gain_db[i] - r;
      worst = std::max(worst, std::abs(d));
      rs.y.push_back(r);
      cmp << format_double(ref_freqs[i]) << ',' << format_double(at.gain_db[i]) << ',' << format_double(r) << ','
          << format_double(d) << '\n';
    }
    io::write_file(out / "comparison.csv", cmp.str());
    cfr_series.push_back(std::move(rs));
    log << "max |estimated - reference| = " << db(worst) << " dB over " << ref_freqs.size() << " frequencies\n";
  }

  std::vector<double> delays_us(est.delay_axis.size());
  for (std::size_t k = 0; k < delays_us.size(); ++k) delays_us[k] = est.delay_axis[k] * 1e6;
  io::write_file(out / "cir.svg", svg_plot({"Channel impulse response", "delay (us)", "tap", false},
                                           {{"h", delays_us, est.taps, true, false}}));
  io::write_file(out / "cfr.svg", svg_plot({"Channel frequency response", "frequency (Hz)", "gain (dB)", true},
                                           cfr_series));
}

struct SoundOptions {
  fs::path session;
  std::vector<double> freqs;
  std::optional<fs::path> reference;
  bool compensation = false;
  bool keep_mean = false;
  int precursor = 0;
  double cv_threshold = 0.05;
  fs::path out = "out";
};

inline int run_sound(const SoundOptions& o, const RunContext& ctx) {
  const auto session = io::load_session(o.session);
  const auto& ms = session.manifest.sounding;
  const auto seq = ms.sequence();
  SounderConfig cfg;
  cfg.samples_per_chip = samples_per_chip(ms.params);
  cfg.frame_samples = static_cast<int>(sounding_frame(seq, ms.params).size());
  cfg.alignment = session.manifest.trigger_shared ? Alignment::shared_trigger : Alignment::correlation_peak;
  cfg.precursor_samples = o.precursor;
  cfg.remove_mean = !o.keep_mean;
  cfg.sidelobe_compensation = o.compensation;
  for (const auto& c : session.rx) {
    for (const auto& w : c.warnings) ctx.log << "warning: " << w.message << '\n';
  }
  const auto reference = load_reference(o.reference);

  const Sounder sounder(session.tx.waveform, seq, cfg);
  const auto captures = session.rx_waveforms();
  auto est = sounder.estimate(captures);
  prepare_output(o.out, ctx);
  ctx.log << "session " << session.manifest.session_id << ": " << captures.size() << " capture(s), "
          << session.frames_available << " frame(s)\n";
  write_estimate_products(est, o.freqs, reference, o.out, ctx.log);

  std::vector<ChannelEstimate> frames;
  for (const auto& rx : captures) {
    auto f = sounder.estimate_frames(rx);
    frames.insert(frames.end(), f.begin(), f.end());
  }
  std::ostringstream s;
  if (frames.size() >= 2) {
    const auto r = stationarity_check(frames, o.cv_threshold);
    s << "frames=" << frames.size() << "\ncoefficient_of_variation=" << format_double(r.coefficient_of_variation)
      << "\ncv_threshold=" << format_double(r.cv_threshold) << "\nmax_drift_samples=" << r.max_drift_samples
      << "\ntime_invariant=" << (r.time_invariant ? "true" : "false") << "\n";
    ctx.log << "stationarity: CV " << format_double(r.coefficient_of_variation) << ", "
            << (r.time_invariant ? "time-invariant" : "time-varying") << '\n';
  } else {
    s << "frames=" << frames.size() << "\ntime_invariant=unknown\n";
    ctx.log << "stationarity: needs at least two frames\n";
  }
  io::write_file(o.out / "stationarity.txt", s.str());
  return 0;
}

struct ReportOptions {
  fs::path estimate;
  std::vector<double> freqs;
  std::optional<fs::path> reference;
  fs::path out = "out";
};

inline int run_report(const ReportOptions& o, const RunContext& ctx) {
  const auto est = io::parse_estimate(io::read_file(o.estimate));
  const auto reference = load_reference(o.reference);
  prepare_output(o.out, ctx);
  write_estimate_products(est, o.freqs, reference, o.out, ctx.log);
  return 0;
}

// --- solve ----------------------------------------------------------------------

struct SolveOptions {
  fs::path tissue = fs::path(IBC_DATA_DIR) / "tissue_properties.csv";
  std::vector<double> freqs{1e5, 1e6, 2.5e6};
  double dx_mm = 2.0;
  int nodes_per_layer = 3;
  double depth_mm = -1.0;
  double separation_mm = 100.0;
  double pair_spacing_mm = 40.0;
  double length_mm = 600.0;
  unsigned threads = 0;
  std::vector<double> field_freqs;
  bool validate = false;
  fs::path out = "out";
};

/// Uniform slab between two equipotential end faces; the exact potential is
/// linear. Returns the largest error relative to the applied voltage.
inline double homogeneous_validation_error() {
  fem::ConductionProblem p;
  p.grid = fem::RectGrid::uniform(0.2, 100, 0.04, 10);
  p.admittivity.assign(p.grid.cells(), fem::cplx(0.4, 1e-3));
  p.fixed.assign(p.grid.cells(), std::nullopt);
  p.x_min = fem::EdgeCondition::fixed(1.0);
  p.x_max = fem::EdgeCondition::fixed(0.0);
  const auto s = fem::solve(fem::assemble(p));
  double err = 0.0;
  for (std::size_t j = 0; j < p.grid.ny(); ++j) {
    for (std::size_t i = 0; i < p.grid.nx(); ++i) {
      err = std::max(err, std::abs(s.at(i, j) - (1.0 - p.grid.xc(i) / 0.2)));
    }
  }
  return err;
}

inline int run_solve(const SolveOptions& o, const RunContext& ctx) {
  if (o.validate) {
    const double err = homogeneous_validation_error();
    prepare_output(o.out, ctx);
    io::write_file(o.out / "validation.txt", "geometry=homogeneous_slab\nmax_relative_error=" + format_double(err) + "\n");
    ctx.log << "homogeneous validation: max relative error " << format_double(err) << '\n';
    return 0;
  }
  const auto table = fem::DielectricTable::load(o.tissue);
  fem::ElectrodeLayout layout;
  layout.depth_mm = o.depth_mm;
  layout.separation_mm = o.separation_mm;
  layout.pair_spacing_mm = o.pair_spacing_mm;
  const auto arm = fem::forearm_model(table, {}, layout, o.length_mm);
  fem::GridSpec grid;
  grid.dx_mm = o.dx_mm;
  grid.nodes_per_thinnest_layer = o.nodes_per_layer;
  (void)fem::arm_grid(arm, grid);  // reject coarse grids before any output is written

  const auto sweep = fem::gain_sweep(arm, o.freqs, grid, o.threads);
  prepare_output(o.out, ctx);
  io::write_file(o.out / "gain.csv", io::response_text(sweep));
  bool monotone = true;
  for (std::size_t i = 1; i < sweep.size(); ++i) monotone = monotone && sweep.gain_db[i] >= sweep.gain_db[i - 1];
  std::ostringstream s;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    s << "gain_db@" << format_double(sweep.freqs[i]) << "=" << format_double(sweep.gain_db[i]) << '\n';
    ctx.log << format_double(sweep.freqs[i]) << " Hz: " << db(sweep.gain_db[i]) << " dB\n";
  }
  s << "monotone_non_decreasing=" << (monotone ? "true" : "false") << '\n';
  if (sweep.size() >= 2) {
    const bool high_pass = sweep.gain_db.back() > sweep.gain_db.front();
    s << "high_pass_trend=" << (high_pass ? "true" : "false") << '\n';
    ctx.log << "monotone: " << (monotone ? "yes" : "no") << ", high-pass trend: " << (high_pass ? "yes" : "no") << '\n';
  }
  io::write_file(o.out / "solve_summary.txt", s.str());
  io::write_file(o.out / "gain.svg", svg_plot({"Simulated channel gain", "frequency (Hz)", "gain (dB)", true},
                                              {{"V_R/V_T", sweep.freqs, sweep.gain_db, false, true}}));

  for (double f : o.field_freqs) {
    const auto sol = fem::solve_arm(arm, f, grid);
    std::ostringstream field;
    fem::write_field_csv(field, sol);
    io::write_file(o.out / ("field_" + format_double(f) + "Hz.csv"), field.str());
  }
  return 0;
}

}  // namespace ibc::cli
