#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ibc/sounder.hpp"
#include "test_support.hpp"

using namespace ibc;
using ibc::oracle::SparseChannel;
using ibc::oracle::through_channel;

namespace {

const PnSequence& seq13() {
  static const PnSequence s = generate_mseq(13);
  return s;
}

Waveform frame13(double amplitude = 1.0) {
  SoundingParams p;
  p.amplitude_vpp = amplitude;
  return sounding_frame(seq13(), p);
}

SounderConfig exact_config() {
  SounderConfig c;
  c.remove_mean = false;
  c.sidelobe_compensation = true;
  c.alignment = Alignment::shared_trigger;
  // Random channels may have secondary taps close to the main one.
  c.detection_threshold_db = 0.0;
  return c;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::invalid_argument;  // sentinel distinct from the codes tested below
}

}  // namespace

TEST(Sounder, IdentityChannelGivesUnitPeakAtZeroDelay) {
  const Waveform tx = repeat(frame13(), 2);
  const auto est = estimate_cir(tx, tx, seq13());
  EXPECT_EQ(est.peak_index, 0u);
  EXPECT_NEAR(est.taps[0], 1.0, 1e-6);
  EXPECT_DOUBLE_EQ(est.delay_axis[0], 0.0);
  EXPECT_EQ(est.frames_averaged, 2u);
  EXPECT_GT(est.peak_to_offpeak_db, 60.0);
  EXPECT_EQ(est.taps.size(), seq13().period());
}

TEST(Sounder, TwoTapChannelRecovered) {
  const Waveform tx = frame13();
  const Waveform rx = through_channel(tx, {{0, 1.0}, {20, 0.5}}, 1);
  const auto est = estimate_cir(tx, rx, seq13());
  EXPECT_EQ(est.peak_index, 0u);
  EXPECT_NEAR(est.taps[0], 1.0, 0.01);
  EXPECT_NEAR(est.taps[20], 0.5, 0.01 * 0.5);
  EXPECT_NEAR(est.delay_axis[20], 20.0 / 5e6, 1e-15);
}

TEST(Sounder, SidelobeCompensationIsExactWithoutNoise) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> gain(-0.8, 0.8);
  std::uniform_int_distribution<std::size_t> delay(0, 199);
  const Waveform tx = frame13(0.8);
  for (int trial = 0; trial < 5; ++trial) {
    SparseChannel h{{delay(rng), 1.0}};
    while (h.size() < 6) h.emplace(delay(rng), gain(rng));
    const auto est = Sounder(tx, seq13(), exact_config()).estimate(through_channel(tx, h, 1));
    double worst = 0.0;
    for (std::size_t k = 0; k < est.taps.size(); ++k) {
      const auto it = h.find(k);
      worst = std::max(worst, std::abs(est.taps[k] - (it == h.end() ? 0.0 : it->second)));
    }
    EXPECT_LT(worst, 1e-9) << "trial " << trial;
  }
}

TEST(Sounder, PlainCorrelationBiasIsBoundedByOneOverN) {
  const Waveform tx = frame13();
  const SparseChannel h{{3, 1.0}, {40, -0.6}, {90, 0.3}};
  SounderConfig cfg;
  cfg.alignment = Alignment::shared_trigger;
  const auto est = Sounder(tx, seq13(), cfg).estimate(through_channel(tx, h, 1));
  const double n = static_cast<double>(seq13().period());
  double abs_sum = 0.0;
  for (const auto& [d, g] : h) abs_sum += std::abs(g);
  for (std::size_t k = 0; k < est.taps.size(); ++k) {
    const auto it = h.find(k);
    EXPECT_LE(std::abs(est.taps[k] - (it == h.end() ? 0.0 : it->second)), 2.0 * abs_sum / n) << k;
  }
}

TEST(Sounder, PeakDelayRobustAtTwentyDbSnr) {
  const Waveform tx = frame13();
  const SparseChannel h{{12, 0.7}, {30, 0.2}};
  const Waveform clean = through_channel(tx, h, 1);
  const double sigma = rms(clean) / std::pow(10.0, 20.0 / 20.0);
  SounderConfig cfg;
  cfg.alignment = Alignment::shared_trigger;
  const Sounder sounder(tx, seq13(), cfg);
  int hits = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    const auto est = sounder.estimate(ibc::oracle::add_noise(clean, sigma, 1000 + trial));
    hits += est.peak_index == 12 ? 1 : 0;
  }
  EXPECT_GE(hits, 99);
}

TEST(Sounder, LinearInTheReceivedSignal) {
  const Waveform tx = frame13();
  const Waveform rx = through_channel(tx, {{5, 0.4}, {9, 0.1}}, 1);
  std::vector<double> scaled(rx.data());
  for (auto& v : scaled) v *= -2.5;
  const Sounder sounder(tx, seq13());
  const auto a = sounder.estimate(rx);
  const auto b = sounder.estimate(Waveform(scaled, rx.sample_rate()));
  ASSERT_EQ(a.taps.size(), b.taps.size());
  EXPECT_EQ(a.peak_index, b.peak_index);
  for (std::size_t k = 0; k < a.taps.size(); ++k) EXPECT_NEAR(b.taps[k], -2.5 * a.taps[k], 1e-12);
}

TEST(Sounder, TxAmplitudeDoesNotChangeEstimate) {
  const SparseChannel h{{0, 0.25}};
  for (double amp : {0.1, 1.0, 4.0}) {
    const Waveform tx = frame13(amp);
    const auto est = estimate_cir(tx, through_channel(tx, h, 1), seq13(), exact_config());
    EXPECT_NEAR(est.taps[0], 0.25, 1e-9) << amp;
  }
}

TEST(Sounder, CorrelationPeakAlignmentIgnoresTriggerOffset) {
  const Waveform tx = frame13();
  const Waveform rx = through_channel(tx, {{0, 1.0}, {10, 0.3}}, 2);
  std::vector<double> late(rx.data().begin() + 1234, rx.data().end());
  const auto est = estimate_cir(tx, Waveform(late, 5e6, 0.7), seq13());
  EXPECT_EQ(est.peak_index, 0u);
  EXPECT_NEAR(est.taps[10], 0.3, 0.01);
}

TEST(Sounder, SharedTriggerReportsAbsoluteLatency) {
  const Waveform tx = frame13();
  const auto est = estimate_cir(tx, through_channel(tx, {{37, 0.5}}, 1), seq13(), exact_config());
  EXPECT_EQ(est.peak_index, 37u);
  EXPECT_NEAR(est.delay_axis[est.peak_index], 37.0 / 5e6, 1e-15);
}

TEST(Sounder, SharedTriggerUsesCaptureStartTimes) {
  const Waveform tx = frame13();
  const Waveform rx = through_channel(tx, {{37, 0.5}}, 2);
  // Same capture started 100 samples later on the common timebase.
  std::vector<double> late(rx.data().begin() + 100, rx.data().end());
  const auto est = estimate_cir(tx, Waveform(late, 5e6, 100.0 / 5e6), seq13(), exact_config());
  EXPECT_EQ(est.peak_index, 37u);
}

TEST(Sounder, PrecursorWindowShiftsDelayAxis) {
  const Waveform tx = frame13();
  SounderConfig cfg;
  cfg.precursor_samples = 8;
  const auto est = estimate_cir(tx, through_channel(tx, {{0, 1.0}}, 1), seq13(), cfg);
  EXPECT_EQ(est.peak_index, 8u);
  EXPECT_DOUBLE_EQ(est.delay_axis[8], 0.0);
  EXPECT_DOUBLE_EQ(est.delay_axis[0], -8.0 / 5e6);
}

TEST(Sounder, TwoSamplesPerChip) {
  SoundingParams p;
  p.chip_rate_hz = 2.5e6;
  const Waveform tx = sounding_frame(seq13(), p);
  SounderConfig cfg = exact_config();
  cfg.samples_per_chip = 2;
  const auto est = estimate_cir(tx, through_channel(tx, {{4, 0.5}}, 1), seq13(), cfg);
  EXPECT_EQ(est.taps.size(), 2 * seq13().period());
  EXPECT_EQ(est.peak_index, 4u);
  EXPECT_NEAR(est.taps[4], 0.5, 1e-9);
  // Held chips spread an impulse into the neighbouring half-chip lags.
  EXPECT_NEAR(est.taps[3], 0.25, 1e-9);
  EXPECT_NEAR(est.taps[5], 0.25, 1e-9);
}

TEST(Sounder, SessionAverageAndPerFrameEstimates) {
  const Waveform tx = frame13();
  const SparseChannel h{{2, 0.6}};
  const Sounder sounder(tx, seq13(), exact_config());
  const std::vector<Waveform> rx{through_channel(tx, h, 3), through_channel(tx, h, 2)};
  const auto avg = sounder.estimate(rx);
  EXPECT_EQ(avg.frames_averaged, 5u);
  EXPECT_NEAR(avg.taps[2], 0.6, 1e-9);
  const auto frames = sounder.estimate_frames(rx[0]);
  ASSERT_EQ(frames.size(), 3u);
  for (const auto& f : frames) {
    EXPECT_EQ(f.frames_averaged, 1u);
    EXPECT_NEAR(f.taps[2], 0.6, 1e-9);
  }
  EXPECT_EQ(sounder.estimate_each(rx).size(), 2u);
}

TEST(Sounder, NoiseAveragesDownWithFrames) {
  const Waveform tx = frame13();
  const Waveform clean = through_channel(tx, {{0, 1.0}}, 16);
  const auto noisy = ibc::oracle::add_noise(clean, 0.5, 3);
  const Sounder sounder(tx, seq13(), exact_config());
  auto off_rms = [](const ChannelEstimate& e) {
    double s = 0.0;
    for (std::size_t k = 10; k < e.taps.size(); ++k) s += e.taps[k] * e.taps[k];
    return std::sqrt(s / static_cast<double>(e.taps.size() - 10));
  };
  const double single = off_rms(sounder.estimate_frames(noisy).front());
  const double averaged = off_rms(sounder.estimate(noisy));
  EXPECT_NEAR(single / averaged, 4.0, 0.6);
}

TEST(Sounder, Errors) {
  const Waveform tx = frame13();
  EXPECT_EQ(code_of([&] { estimate_cir(tx, Waveform(std::vector<double>(tx.size(), 0.0), 5e6), seq13()); }),
            ErrorCode::no_peak_found);
  EXPECT_EQ(code_of([&] { estimate_cir(tx, Waveform(tx.data(), 2.5e6), seq13()); }),
            ErrorCode::sample_rate_mismatch);
  EXPECT_EQ(code_of([&] { estimate_cir(tx, Waveform(std::vector<double>(100, 1.0), 5e6), seq13()); }),
            ErrorCode::insufficient_length);
  EXPECT_EQ(code_of([&] { Sounder(Waveform(std::vector<double>(100, 1.0), 5e6), seq13()); }),
            ErrorCode::insufficient_length);
  SounderConfig strict;
  strict.detection_threshold_db = 200.0;
  EXPECT_EQ(code_of([&] { estimate_cir(tx, tx, seq13(), strict); }), ErrorCode::no_peak_found);
}

TEST(ChannelEstimateOps, PeakToOffPeakUsesExclusionWindow) {
  const std::vector<double> taps{0.0, 0.5, 1.0, 0.5, 0.0, 0.0, 0.1};
  EXPECT_NEAR(peak_to_offpeak_db(taps, 2, 3), 20.0, 1e-12);
  EXPECT_NEAR(peak_to_offpeak_db(taps, 2, 0), 20.0 * std::log10(2.0), 1e-12);
  EXPECT_TRUE(std::isinf(peak_to_offpeak_db(std::vector<double>{1.0, 0.0}, 0, 3)));
}

TEST(ChannelEstimateOps, PowerDelayProfile) {
  const auto est = make_estimate({0.5, -1.0, 0.0}, 1e6);
  const auto pdp = power_delay_profile(est);
  EXPECT_EQ(pdp.power, (std::vector<double>{0.25, 1.0, 0.0}));
  EXPECT_EQ(pdp.delay_axis, est.delay_axis);
}

TEST(ChannelEstimateOps, CfrOfImpulse) {
  const auto est = make_estimate({1.0, 0.0, 0.0, 0.0}, 4e6);
  const auto r = cfr_from_cir(est, {0.0, 1e6, 2e6});
  for (double db : r.gain_db) EXPECT_NEAR(db, 0.0, 1e-12);
}

TEST(ChannelEstimateOps, CfrOfDelayedTapHasLinearPhase) {
  const auto est = make_estimate({0.0, 0.5}, 4e6);
  const auto r = cfr_from_cir(est, {0.0, 1e6});
  EXPECT_NEAR(r.gain_db[1], 20.0 * std::log10(0.5), 1e-12);
  EXPECT_NEAR(std::arg(r.gains[1]), -std::numbers::pi / 2.0, 1e-12);
}

TEST(ChannelEstimateOps, CfrAtDcIsTapSum) {
  const auto est = make_estimate({0.3, -0.1, 0.05, 0.2}, 1e6);
  const auto r = cfr_from_cir(est, {0.0});
  EXPECT_NEAR(r.gains[0].real(), 0.45, 1e-15);
  EXPECT_EQ(r.gains[0].imag(), 0.0);
}

TEST(ChannelEstimateOps, CfrOutOfRange) {
  const auto est = make_estimate({1.0}, 1e6);
  EXPECT_EQ(code_of([&] { cfr_from_cir(est, {0.0, 600e3}); }), ErrorCode::frequency_out_of_range);
  EXPECT_EQ(code_of([&] { cfr_from_cir(est, {-1.0}); }), ErrorCode::frequency_out_of_range);
  EXPECT_NO_THROW(cfr_from_cir(est, {500e3}));
}

TEST(ChannelEstimateOps, ScalarGain) {
  EXPECT_NEAR(scalar_gain_db(0.5, 1.0), -6.020599913279624, 1e-12);
  EXPECT_NEAR(scalar_gain_db(2.0, 2.0), 0.0, 0.0);
  EXPECT_EQ(code_of([] { scalar_gain_db(0.0, 1.0); }), ErrorCode::non_positive_voltage);
  EXPECT_EQ(code_of([] { scalar_gain_db(1.0, -1.0); }), ErrorCode::non_positive_voltage);
}

TEST(Stationarity, SmallAmplitudeSpreadIsTimeInvariant) {
  std::vector<ChannelEstimate> frames;
  for (double a : {1.0, 1.1, 1.0, 1.1}) frames.push_back(make_estimate({a, 0.0, 0.0}, 1e6));
  const auto r = stationarity_check(frames);
  EXPECT_NEAR(r.coefficient_of_variation, 0.05 / 1.05, 1e-12);
  EXPECT_EQ(r.max_drift_samples, 0u);
  EXPECT_TRUE(r.time_invariant);
}

TEST(Stationarity, EqualAmplitudesGiveExactlyZeroCv) {
  // 8 x 0.0059... does not sum to an exact multiple in floating point.
  std::vector<ChannelEstimate> frames(8, make_estimate({0.0059374120235, 1e-4, 0.0}, 5e6));
  const auto r = stationarity_check(frames);
  EXPECT_EQ(r.coefficient_of_variation, 0.0);
  EXPECT_TRUE(r.time_invariant);
}

TEST(Stationarity, LargeSpreadOrDriftIsNot) {
  std::vector<ChannelEstimate> spread;
  for (double a : {1.0, 1.5, 1.0, 1.5}) spread.push_back(make_estimate({a, 0.0, 0.0}, 1e6));
  EXPECT_FALSE(stationarity_check(spread).time_invariant);

  std::vector<ChannelEstimate> drift{make_estimate({1.0, 0.0, 0.0}, 1e6), make_estimate({0.0, 1.0, 0.0}, 1e6)};
  const auto r = stationarity_check(drift);
  EXPECT_EQ(r.max_drift_samples, 1u);
  EXPECT_FALSE(r.time_invariant);
}

TEST(Stationarity, FrameMismatch) {
  std::vector<ChannelEstimate> frames{make_estimate({1.0, 0.0}, 1e6), make_estimate({1.0, 0.0, 0.0}, 1e6)};
  EXPECT_EQ(code_of([&] { stationarity_check(frames); }), ErrorCode::frame_mismatch);
  EXPECT_EQ(code_of([&] { stationarity_check(std::span(frames).first(1)); }), ErrorCode::frame_mismatch);
}

TEST(Stationarity, SoundedFramesOfStaticChannel) {
  const Waveform tx = frame13();
  const auto rx = ibc::oracle::add_noise(through_channel(tx, {{0, 0.2}}, 6), 0.01, 11);
  const auto frames = Sounder(tx, seq13()).estimate_frames(rx);
  EXPECT_TRUE(stationarity_check(frames).time_invariant);
}
