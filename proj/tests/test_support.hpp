#pragma once

// Reference helpers shared by the unit and acceptance tests. These are kept
// deliberately naive so they can serve as oracles for the library code.

#include <cstddef>
#include <map>
#include <random>
#include <vector>

#include "ibc/signals.hpp"

namespace ibc::oracle {

using SparseChannel = std::map<std::size_t, double>;  // delay (samples) -> tap

/// Received capture when `frame` is replayed back-to-back and passed through
/// `h`: `frames` frames of steady-state output, starting at a frame boundary.
inline Waveform through_channel(const Waveform& frame, const SparseChannel& h, std::size_t frames,
                                double t0 = 0.0) {
  const std::size_t len = frame.size();
  std::vector<double> out(len * frames, 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    double acc = 0.0;
    for (const auto& [d, g] : h) {
      // Continuous replay: the input before n = 0 is the previous frame.
      const std::size_t src = (n + len * (d / len + 1) - d) % len;
      acc += g * frame[src];
    }
    out[n] = acc;
  }
  return Waveform(std::move(out), frame.sample_rate(), t0);
}

inline Waveform add_noise(const Waveform& w, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> out(w.data());
  for (auto& v : out) v += dist(rng);
  return Waveform(std::move(out), w.sample_rate(), w.t0());
}

}  // namespace ibc::oracle
