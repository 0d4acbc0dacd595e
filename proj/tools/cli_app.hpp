#pragma once

// Command-line wiring for ibc_sound. Values come from, in order of
// precedence: flags, the --config file (TOML/INI, one section per
// subcommand), built-in defaults.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "commands.hpp"

namespace ibc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;

/// Accepts plain numbers, inf, and k/M/G suffixes ("2.5M").
inline const CLI::Validator& si_number() {
  static const CLI::Validator v(
      [](std::string& s) -> std::string {
        try {
          s = text::format_double(text::parse_si(s));
          return {};
        } catch (const Error& e) {
          return e.what();
        }
      },
      "SI", "si");
  return v;
}

inline void add_sounding_flags(CLI::App* app, SoundingOptions& s) {
  app->add_option("--degree", s.degree, "LFSR degree m (period 2^m - 1)")->check(CLI::Range(2, 16))->capture_default_str();
  app->add_option("--chip-rate", s.chip_rate_hz, "chip rate in Hz")->transform(si_number())->capture_default_str();
  app->add_option("--sample-rate", s.sample_rate_hz, "sample rate in Hz (0: equal to the chip rate)")
      ->transform(si_number())
      ->capture_default_str();
  app->add_option("--amplitude", s.amplitude_vpp, "peak-to-peak amplitude in V")->transform(si_number())->capture_default_str();
  app->add_option("--pad", s.pad_chips, "zero chips after each period (negative: one period)")->capture_default_str();
  app->add_option("--taps", s.taps, "feedback taps, e.g. 13,4,3,1 (default: built-in primitive taps)")->delimiter(',');
  app->add_option("--lfsr-seed", s.seed, "nonzero LFSR start state (default: all ones)")->capture_default_str();
}

/// Parses argv and runs the selected subcommand. Returns the process exit
/// status: 0 on success, 1 on a processing error, 2 on a usage error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Galvanic-coupling channel sounding toolkit"};
  app.set_config("--config", "", "TOML/INI file with default values; flags take precedence");
  app.require_subcommand(1);
  bool quiet = false;
  app.add_flag("--quiet", quiet, "suppress the summary on stdout");

  GenerateOptions gen;
  auto* g = app.add_subcommand("generate", "write the bipolar zero-padded PN sounding waveform");
  add_sounding_flags(g, gen.sounding);
  g->add_option("--out", gen.out, "output directory")->capture_default_str();

  SimulateOptions sim;
  auto* s = app.add_subcommand("simulate", "synthesize a sounding session through a high-pass channel model");
  add_sounding_flags(s, sim.sounding);
  s->add_option("--model", sim.model, "model JSON written by simulate");
  s->add_option("--fit-from", sim.fit_from, "gain samples CSV (frequency_hz,gain_db) to fit");
  s->add_option("--order", sim.order, "model order when fitting")->check(CLI::Range(1, 8))->capture_default_str();
  s->add_option("--snr-db", sim.snr_db, "noise level relative to the output power (inf: noiseless)")
      ->transform(si_number())
      ->capture_default_str();
  s->add_option("--seed", sim.seed, "noise RNG seed")->capture_default_str();
  s->add_option("--frames", sim.frames, "sounding frames per capture")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--captures", sim.captures, "number of rx captures")->check(CLI::PositiveNumber)->capture_default_str();
  s->add_option("--common-mode-v", sim.common_mode_v, "mains-hum amplitude in V")->transform(si_number())->capture_default_str();
  s->add_option("--common-mode-hz", sim.common_mode_hz, "mains frequency in Hz")->transform(si_number())->capture_default_str();
  s->add_option("--out", sim.out, "output directory")->capture_default_str();

  SoundOptions snd;
  auto* d = app.add_subcommand("sound", "estimate CIR, PDP, CFR and stationarity from a session manifest");
  d->add_option("--session", snd.session, "session manifest JSON")->required();
  d->add_option("--freqs", snd.freqs, "CFR frequencies (default: 61-point log grid from 10 kHz to fs/2)")
      ->delimiter(',')
      ->transform(si_number());
  d->add_option("--reference", snd.reference, "model JSON or gain samples CSV to compare against");
  d->add_flag("--compensation", snd.compensation, "remove the m-sequence off-peak bias")->capture_default_str();
  d->add_flag("--keep-mean", snd.keep_mean, "do not subtract the capture mean")->capture_default_str();
  d->add_option("--precursor", snd.precursor, "samples kept before the main peak")->capture_default_str();
  d->add_option("--cv-threshold", snd.cv_threshold, "time-invariance threshold on the peak CV")->capture_default_str();
  d->add_option("--out", snd.out, "output directory")->capture_default_str();

  SolveOptions sol;
  auto* v = app.add_subcommand("solve", "quasi-static forearm gain sweep");
  v->add_option("--tissue", sol.tissue, "tissue property CSV")->capture_default_str();
  v->add_option("--freqs", sol.freqs, "sweep frequencies")->delimiter(',')->transform(si_number())->capture_default_str();
  v->add_option("--dx-mm", sol.dx_mm, "axial cell size in mm")->capture_default_str();
  v->add_option("--nodes-per-layer", sol.nodes_per_layer, "cells across the thinnest layer")->capture_default_str();
  v->add_option("--depth-mm", sol.depth_mm, "electrode centre depth (negative: mid-muscle)")->capture_default_str();
  v->add_option("--separation-mm", sol.separation_mm, "tx-pair to rx-pair distance")->capture_default_str();
  v->add_option("--pair-spacing-mm", sol.pair_spacing_mm, "distance within a pair")->capture_default_str();
  v->add_option("--length-mm", sol.length_mm, "model length")->capture_default_str();
  v->add_option("--threads", sol.threads, "sweep workers (0: all cores)")->capture_default_str();
  v->add_option("--field-freqs", sol.field_freqs, "frequencies for field-grid CSV exports")
      ->delimiter(',')
      ->transform(si_number());
  v->add_flag("--validate", sol.validate, "solve the homogeneous validation slab instead")->capture_default_str();
  v->add_option("--out", sol.out, "output directory")->capture_default_str();

  ReportOptions rep;
  auto* r = app.add_subcommand("report", "regenerate CFR tables and plots from an estimate report");
  r->add_option("--estimate", rep.estimate, "estimate.txt written by sound")->required();
  r->add_option("--freqs", rep.freqs, "CFR frequencies")->delimiter(',')->transform(si_number());
  r->add_option("--reference", rep.reference, "model JSON or gain samples CSV");
  r->add_option("--out", rep.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);  // --help
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  }

  // Echo only the selected subcommand, as a section the --config loader accepts.
  auto* selected = app.get_subcommands().front();
  // Unset values (empty lists, absent paths) are left out so the echo reloads cleanly.
  std::string echo = "[" + selected->get_name() + "]\n";
  std::istringstream lines(selected->config_to_str(true, false));
  for (std::string line; std::getline(lines, line);) {
    if (line.size() < 3 || line.compare(line.size() - 3, 3, "=\"\"") != 0) echo += line + '\n';
  }
  std::ostringstream sink;
  RunContext ctx{quiet ? static_cast<std::ostream&>(sink) : out, echo};
  try {
    if (*g) return run_generate(gen, ctx);
    if (*s) return run_simulate(sim, ctx);
    if (*d) return run_sound(snd, ctx);
    if (*v) return run_solve(sol, ctx);
    return run_report(rep, ctx);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return kExitError;
}

}  // namespace ibc::cli
