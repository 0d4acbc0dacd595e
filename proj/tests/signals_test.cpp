#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <vector>

#include "ibc/signals.hpp"

namespace {

using ibc::CorrelationMode;
using ibc::ErrorCode;
using ibc::Waveform;

// Independent register model: explicit stage array, output from the last
// stage, feedback shifted into the first. Returns the cycle length reached
// from `seed` (0 if the seed is never revisited within 2^m steps).
std::size_t enumerate_cycle(int degree, const std::vector<int>& taps, std::uint32_t seed,
                            std::vector<int>* chips = nullptr) {
  std::vector<int> stage(static_cast<std::size_t>(degree));
  for (int t = 0; t < degree; ++t) stage[static_cast<std::size_t>(t)] = (seed >> t) & 1;
  const std::vector<int> start = stage;
  const std::size_t limit = std::size_t{1} << degree;
  for (std::size_t step = 1; step <= limit; ++step) {
    if (chips) chips->push_back(stage.back());
    int fb = 0;
    for (int t : taps) fb ^= stage[static_cast<std::size_t>(t - 1)];
    for (std::size_t k = stage.size() - 1; k > 0; --k) stage[k] = stage[k - 1];
    stage[0] = fb;
    if (stage == start) return step;
  }
  return 0;
}

std::vector<double> direct_linear(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> out;
  const auto nx = static_cast<std::int64_t>(x.size());
  const auto ny = static_cast<std::int64_t>(y.size());
  for (std::int64_t k = -(nx - 1); k <= ny - 1; ++k) {
    double s = 0.0;
    for (std::int64_t n = 0; n < nx; ++n) {
      if (n + k >= 0 && n + k < ny) s += x[static_cast<std::size_t>(n)] * y[static_cast<std::size_t>(n + k)];
    }
    out.push_back(s);
  }
  return out;
}

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t n) {
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

}  // namespace

TEST(GenerateMseq, DegreeThreeMatchesHandSteppedRegister) {
  const auto seq = ibc::generate_mseq(3, {3, 2}, 0b111);
  const std::vector<std::uint8_t> expected{1, 1, 1, 0, 0, 1, 0};
  EXPECT_EQ(seq.chips, expected);
  EXPECT_EQ(seq.period(), 7u);
  EXPECT_EQ(std::count(seq.chips.begin(), seq.chips.end(), 1), 4);
  EXPECT_EQ(seq.end_state, 0b111u);
}

TEST(GenerateMseq, DegreeThirteenHas8191Chips) {
  const auto seq = ibc::generate_mseq(13);
  EXPECT_EQ(seq.period(), 8191u);
  EXPECT_EQ(seq.taps, (std::vector<int>{13, 4, 3, 1}));
}

TEST(GenerateMseq, BuiltinTableMatchesIndependentRegisterModel) {
  for (int m = 2; m <= 16; ++m) {
    const auto taps = ibc::builtin_taps(m);
    std::vector<int> chips;
    const auto seed = (std::uint32_t{1} << m) - 1U;
    ASSERT_EQ(enumerate_cycle(m, taps, seed, &chips), (std::size_t{1} << m) - 1) << "degree " << m;
    const auto seq = ibc::generate_mseq(m, taps, seed);
    ASSERT_EQ(seq.chips.size(), chips.size());
    EXPECT_TRUE(std::equal(chips.begin(), chips.end(), seq.chips.begin())) << "degree " << m;
  }
}

TEST(GenerateMseq, NonPrimitivePolynomialIsRejected) {
  // x^3 + x^2 + x + 1 = (x + 1)^3 and x^4 + x^2 + 1 = (x^2 + x + 1)^2.
  EXPECT_LT(enumerate_cycle(3, {3, 2, 1}, 0b111), 7u);
  EXPECT_LT(enumerate_cycle(4, {4, 2}, 0b1111), 15u);
  for (auto [degree, taps] : std::vector<std::pair<int, std::vector<int>>>{{3, {3, 2, 1}}, {4, {4, 2}}}) {
    try {
      (void)ibc::generate_mseq(degree, taps, (1U << degree) - 1U);
      FAIL() << "expected NonPrimitivePolynomial";
    } catch (const ibc::Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::non_primitive_polynomial);
    }
  }
}

TEST(GenerateMseq, RegisterWithoutTopTapIsRejected) {
  try {
    (void)ibc::generate_mseq(4, {3, 1}, 1);
    FAIL();
  } catch (const ibc::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::non_primitive_polynomial);
  }
}

TEST(GenerateMseq, ZeroSeedAndBadArguments) {
  try {
    (void)ibc::generate_mseq(5, {5, 3}, 0);
    FAIL();
  } catch (const ibc::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::zero_seed);
  }
  EXPECT_THROW((void)ibc::generate_mseq(1, {1}, 1), ibc::Error);
  EXPECT_THROW((void)ibc::generate_mseq(5, {6, 3}, 1), ibc::Error);
  EXPECT_THROW((void)ibc::generate_mseq(5, {}, 1), ibc::Error);
  EXPECT_THROW((void)ibc::builtin_taps(17), ibc::Error);
}

TEST(GenerateMseq, EndStateContinuesTheSequenceCyclically) {
  for (int m : {5, 9, 13}) {
    const auto first = ibc::generate_mseq(m, ibc::builtin_taps(m), 0b10011);
    const auto second = ibc::generate_mseq(m, first.taps, first.end_state);
    EXPECT_EQ(first.chips, second.chips);
  }
}

TEST(GenerateMseq, EverySeedGivesARotationOfTheSameSequence) {
  const auto base = ibc::generate_mseq(5);
  for (std::uint32_t seed = 1; seed < 32; ++seed) {
    const auto seq = ibc::generate_mseq(5, base.taps, seed);
    auto doubled = base.chips;
    doubled.insert(doubled.end(), base.chips.begin(), base.chips.end());
    EXPECT_NE(std::search(doubled.begin(), doubled.end(), seq.chips.begin(), seq.chips.end()),
              doubled.end());
  }
}

TEST(ToBipolar, MapsChipsToHalfAmplitude) {
  ibc::PnSequence seq;
  seq.chips = {1, 0, 1};
  const auto w = ibc::to_bipolar(seq, 1.0, 5e6);
  EXPECT_EQ(w.data(), (std::vector<double>{0.5, -0.5, 0.5}));
  seq.chips = {1};
  EXPECT_EQ(ibc::to_bipolar(seq, 2.0, 5e6).data(), std::vector<double>{1.0});
  EXPECT_THROW((void)ibc::to_bipolar(seq, 0.0, 5e6), ibc::Error);
}

TEST(ToBipolar, MeanOfDegreeThirteenReflectsBalance) {
  const auto w = ibc::to_bipolar(ibc::generate_mseq(13), 1.0, 5e6);
  const double mean = std::accumulate(w.data().begin(), w.data().end(), 0.0) / 8191.0;
  EXPECT_NEAR(mean, 0.5 / 8191.0, 1e-15);
}

TEST(ZeroPad, AppendsExactZerosAndKeepsEnergy) {
  const Waveform w({1.0, -1.0}, 5e6, 0.25);
  const auto padded = ibc::zero_pad(w, 2);
  EXPECT_EQ(padded.data(), (std::vector<double>{1.0, -1.0, 0.0, 0.0}));
  EXPECT_EQ(padded.sample_rate(), 5e6);
  EXPECT_EQ(padded.t0(), 0.25);
  EXPECT_EQ(ibc::zero_pad(w, 0), w);
  EXPECT_EQ(ibc::energy(padded), ibc::energy(w));
  EXPECT_THROW((void)ibc::zero_pad(w, -1), ibc::Error);
}

TEST(HoldUpsample, RepeatsEachSample) {
  const auto w = ibc::hold_upsample(Waveform({1.0, -2.0}, 2.5e6), 2);
  EXPECT_EQ(w.data(), (std::vector<double>{1.0, 1.0, -2.0, -2.0}));
  EXPECT_EQ(w.sample_rate(), 5e6);
}

TEST(SoundingFrame, DefaultPadIsOnePeriod) {
  const auto seq = ibc::generate_mseq(7);
  const auto frame = ibc::sounding_frame(seq, {1.0, 2.5e6, 5e6, -1});
  ASSERT_EQ(frame.size(), 2u * 127u * 2u);
  EXPECT_EQ(frame[0], frame[1]);
  EXPECT_EQ(frame[254], 0.0);
  EXPECT_THROW((void)ibc::sounding_frame(seq, {1.0, 2e6, 5e6, -1}), ibc::Error);
}

TEST(Waveform, RejectsInvalidContent) {
  EXPECT_THROW(Waveform({1.0}, 0.0), ibc::Error);
  EXPECT_THROW(Waveform({std::nan("")}, 1.0), ibc::Error);
  EXPECT_THROW(Waveform({1.0}, std::numeric_limits<double>::infinity()), ibc::Error);
}

TEST(CrossCorrelate, CircularImpulse) {
  const Waveform x({1, 0, 0}, 1.0);
  const auto r = ibc::cross_correlate(x, x, CorrelationMode::circular);
  EXPECT_EQ(r.values, (std::vector<double>{1, 0, 0}));
  EXPECT_EQ(r.lags, (std::vector<std::int64_t>{0, 1, 2}));
}

TEST(CrossCorrelate, DegreeThreeAutocorrelationIsTwoValued) {
  const auto seq = ibc::generate_mseq(3, {3, 2}, 0b111);
  const Waveform chips(ibc::bipolar_replica(seq, 1), 1.0);
  const auto r = ibc::cross_correlate(chips, chips, CorrelationMode::circular);
  EXPECT_EQ(r.values, (std::vector<double>{7, -1, -1, -1, -1, -1, -1}));
}

TEST(CrossCorrelate, LinearTwoByTwo) {
  // values[k] = sum_n x[n] y[n+k]: lag -1 -> x1*y0, lag 0 -> 3+8, lag 1 -> x0*y1.
  const auto r = ibc::cross_correlate(Waveform({1, 2}, 1.0), Waveform({3, 4}, 1.0),
                                      CorrelationMode::linear);
  EXPECT_EQ(r.lags, (std::vector<std::int64_t>{-1, 0, 1}));
  EXPECT_EQ(r.values, (std::vector<double>{6, 11, 4}));
}

TEST(CrossCorrelate, Errors) {
  try {
    (void)ibc::cross_correlate(Waveform({1}, 1.0), Waveform({1}, 2.0), CorrelationMode::linear);
    FAIL();
  } catch (const ibc::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::sample_rate_mismatch);
  }
  try {
    (void)ibc::cross_correlate(Waveform({1, 2}, 1.0), Waveform({1}, 1.0), CorrelationMode::circular);
    FAIL();
  } catch (const ibc::Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::length_mismatch);
  }
}

TEST(CrossCorrelate, TransformRouteMatchesDirectSum) {
  std::mt19937_64 rng(7);
  for (auto [nx, ny] : std::vector<std::pair<std::size_t, std::size_t>>{{300, 400}, {1000, 77}, {513, 2049}}) {
    const auto x = random_vector(rng, nx);
    const auto y = random_vector(rng, ny);
    ASSERT_GT(nx * ny, ibc::detail::kDirectCorrelationLimit);
    const auto fast = ibc::cross_correlate(Waveform(x, 1.0), Waveform(y, 1.0), CorrelationMode::linear);
    const auto slow = direct_linear(x, y);
    ASSERT_EQ(fast.values.size(), slow.size());
    double scale = 0.0;
    for (double v : slow) scale = std::max(scale, std::abs(v));
    for (std::size_t i = 0; i < slow.size(); ++i) {
      EXPECT_LE(std::abs(fast.values[i] - slow[i]), 1e-9 * scale);
    }
  }
}

TEST(CrossCorrelateProperty, LinearAutocorrelationIsSymmetric) {
  std::mt19937_64 rng(11);
  for (std::size_t n : {1u, 5u, 64u, 700u}) {
    const Waveform x(random_vector(rng, n), 3.0);
    const auto r = ibc::cross_correlate(x, x, CorrelationMode::linear);
    for (std::size_t i = 0; i < r.values.size(); ++i) {
      EXPECT_NEAR(r.values[i], r.values[r.values.size() - 1 - i], 1e-9 * std::abs(r.values[n - 1]));
    }
  }
}

TEST(CrossCorrelateProperty, ScalingIsLinear) {
  std::mt19937_64 rng(12);
  const auto x = random_vector(rng, 40);
  const auto y = random_vector(rng, 40);
  std::vector<double> cx(x);
  for (auto& v : cx) v *= -2.5;
  for (auto mode : {CorrelationMode::linear, CorrelationMode::circular}) {
    const auto base = ibc::cross_correlate(Waveform(x, 1.0), Waveform(y, 1.0), mode);
    const auto scaled = ibc::cross_correlate(Waveform(cx, 1.0), Waveform(y, 1.0), mode);
    for (std::size_t i = 0; i < base.values.size(); ++i) {
      EXPECT_NEAR(scaled.values[i], -2.5 * base.values[i], 1e-12);
    }
  }
}

TEST(CrossCorrelateProperty, ZeroPaddedCircularEqualsLinear) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<std::size_t> len(1, 24);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t nx = len(rng);
    const std::size_t ny = len(rng);
    const std::size_t total = nx + ny - 1;
    const auto x = random_vector(rng, nx);
    const auto y = random_vector(rng, ny);
    const auto xp = ibc::zero_pad(Waveform(x, 1.0), static_cast<std::int64_t>(total - nx));
    const auto yp = ibc::zero_pad(Waveform(y, 1.0), static_cast<std::int64_t>(total - ny));
    const auto circ = ibc::cross_correlate(xp, yp, CorrelationMode::circular);
    const auto lin = direct_linear(x, y);
    for (std::size_t i = 0; i < lin.size(); ++i) {
      const auto lag = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(nx - 1);
      const auto idx = static_cast<std::size_t>(lag >= 0 ? lag : static_cast<std::int64_t>(total) + lag);
      EXPECT_NEAR(circ.values[idx], lin[i], 1e-12);
    }
  }
}

TEST(SequenceStats, ReportsBalanceAndTwoValuedAutocorrelation) {
  for (int m = 2; m <= 13; ++m) {
    const auto s = ibc::sequence_stats(ibc::generate_mseq(m));
    const auto period = static_cast<std::int64_t>((1 << m) - 1);
    EXPECT_EQ(s.ones, std::size_t{1} << (m - 1));
    EXPECT_EQ(s.zeros, (std::size_t{1} << (m - 1)) - 1);
    EXPECT_EQ(s.autocorr_peak, period);
    EXPECT_EQ(s.offpeak_min, -1);
    EXPECT_EQ(s.offpeak_max, -1);
  }
}
