// Fits a high-pass model to three measured gains, sounds it through a noisy
// simulated session and prints the recovered channel next to the model.

#include <cstdio>
#include <vector>

#include "ibc/channel_model.hpp"
#include "ibc/sounder.hpp"

int main() {
  using namespace ibc;
  const auto measured = FrequencyResponse::from_db({1e5, 1e6, 2.5e6}, {-52.2, -43.75, -43.2});
  const auto model = fit_gain_model(measured, 2);
  std::printf("model: passband %.2f dB, cutoff %.0f Hz\n", model.passband_gain_db, model.cutoff_hz);
  for (const auto& s : model.sections) {
    std::printf("  section zero %.1f kHz, pole %.1f kHz\n", s.zero / 6.283185307179586e3, s.pole / 6.283185307179586e3);
  }

  const auto seq = generate_mseq(13);
  const SoundingParams params;  // 5 Mchip/s, one sample per chip
  ChannelSimConfig sim;
  sim.noise_snr_db = 20.0;
  sim.rng_seed = 3;
  const auto session = simulate_session(seq, params, model, sim, 8);

  SounderConfig cfg;
  cfg.alignment = Alignment::shared_trigger;
  const Sounder sounder(session.tx, seq, cfg);
  const auto est = sounder.estimate(session.rx);
  std::printf("peak tap %.5f at %.1f ns, peak-to-off-peak %.1f dB, %zu frames averaged\n", est.taps[est.peak_index],
              est.delay_axis[est.peak_index] * 1e9, est.peak_to_offpeak_db, est.frames_averaged);

  const std::vector<double> freqs{1e5, 2e5, 5e5, 1e6, 2e6, 2.5e6};
  const auto cfr = cfr_from_cir(est, freqs);
  std::printf("%12s %12s %12s\n", "f (Hz)", "sounded dB", "model dB");
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    std::printf("%12.0f %12.2f %12.2f\n", freqs[i], cfr.gain_db[i], magnitude_db(model.gain_at(freqs[i])));
  }

  const auto frames = sounder.estimate_frames(session.rx);
  const auto st = stationarity_check(frames);
  std::printf("stationarity over %zu frames: CV %.4f (%s)\n", frames.size(), st.coefficient_of_variation,
              st.time_invariant ? "time-invariant" : "time-varying");
  return 0;
}
