// Copyright 2026 The vforensics Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "vf/features.h"

#include <gtest/gtest.h>

#include <cmath>
#include <algorithm>
#include <complex>
#include <functional>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "vf/common.h"

namespace vf {
namespace {

AudioClip Clip(std::vector<double> samples) {
  AudioClip c;
  c.samples = std::move(samples);
  c.source_id = "test";
  return c;
}

AudioClip Sine(double hz, double amp, double seconds) {
  std::vector<double> s(static_cast<size_t>(seconds * 16000));
  for (size_t i = 0; i < s.size(); ++i) s[i] = amp * std::sin(2.0 * M_PI * hz * i / 16000.0);
  return Clip(std::move(s));
}

AudioClip Noise(double rms, double seconds, uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> n(0.0, rms);
  std::vector<double> s(static_cast<size_t>(seconds * 16000));
  for (double& x : s) x = std::clamp(n(gen), -1.0, 1.0);
  return Clip(std::move(s));
}

// Band-limited-free pulse train: one unit impulse per period, integer
// spacing chosen so the true F0 is exactly 200 Hz.
AudioClip PulseTrain(double seconds) {
  std::vector<double> s(static_cast<size_t>(seconds * 16000), 0.0);
  for (size_t i = 0; i < s.size(); i += 80) s[i] = 0.8;
  return Clip(std::move(s));
}

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no vf::Error thrown";
  return ErrorCode::kFormat;
}

TEST(FrameCount, MatchesFloorFormula) {
  EXPECT_EQ(NumFrames(16000), 98);
  EXPECT_EQ(NumFrames(32000), 198);
  EXPECT_EQ(NumFrames(400), 1);
  EXPECT_EQ(NumFrames(399), 0);
  for (size_t n = 16000; n < 16500; n += 37) {
    EXPECT_EQ(NumFrames(n), static_cast<int>((n - 400) / 160 + 1));
  }
}

TEST(FrameAndWindow, ShortClipIsInsufficientAudio) {
  EXPECT_EQ(CodeOf([] { FrameAndWindow(Sine(100, 0.5, 0.5)); }),
            ErrorCode::kInsufficientAudio);
}

TEST(FrameAndWindow, WrongRateIsPrecondition) {
  AudioClip c = Sine(100, 0.5, 2.0);
  c.sample_rate_hz = 8000;
  EXPECT_EQ(CodeOf([&] { FrameAndWindow(c); }), ErrorCode::kPrecondition);
}

TEST(FrameAndWindow, ZeroInZeroOut) {
  const RowMatrix f = FrameAndWindow(Clip(std::vector<double>(16000, 0.0)));
  EXPECT_EQ(f.rows(), 98);
  EXPECT_EQ(f.cols(), 400);
  EXPECT_EQ(f.cwiseAbs().maxCoeff(), 0.0);
}

TEST(FrameAndWindow, MatchesDirectPreEmphasisAndHann) {
  const AudioClip c = Noise(0.2, 1.2, 11);
  const RowMatrix f = FrameAndWindow(c);
  for (int t : {0, 1, 17, static_cast<int>(f.rows()) - 1}) {
    for (int n = 0; n < 400; ++n) {
      const size_t i = static_cast<size_t>(t) * 160 + n;
      const double pre = c.samples[i] - 0.97 * (i ? c.samples[i - 1] : 0.0);
      const double hann = 0.5 * (1.0 - std::cos(2.0 * M_PI * n / 399.0));
      ASSERT_NEAR(f(t, n), pre * hann, 1e-15);
    }
  }
}

TEST(MelScale, HtkFormula) {
  EXPECT_NEAR(HzToMel(700.0), 2595.0 * std::log10(2.0), 1e-12);
  for (double hz : {20.0, 440.0, 1000.0, 7600.0}) EXPECT_NEAR(MelToHz(HzToMel(hz)), hz, 1e-9);
}

// Independent triangular filterbank: weight of band b at frequency f.
double Triangle(int b, double f) {
  const double lo_mel = 2595.0 * std::log10(1.0 + 20.0 / 700.0);
  const double hi_mel = 2595.0 * std::log10(1.0 + 7600.0 / 700.0);
  auto edge = [&](int i) {
    const double m = lo_mel + (hi_mel - lo_mel) * i / 81.0;
    return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0);
  };
  const double l = edge(b), c = edge(b + 1), r = edge(b + 2);
  if (f <= l || f >= r) return 0.0;
  return f <= c ? (f - l) / (c - l) : (r - f) / (r - c);
}

TEST(LogMel, MatchesNaiveDftThroughIndependentFilterbank) {
  const AudioClip c = Noise(0.1, 1.0, 5);
  const RowMatrix frames = FrameAndWindow(c);
  const RowMatrix mel = LogMel(frames);
  ASSERT_EQ(mel.cols(), 80);
  for (int t : {3, 50}) {
    std::vector<double> power(257);
    for (int k = 0; k <= 256; ++k) {
      std::complex<double> acc = 0.0;
      for (int n = 0; n < 400; ++n) acc += frames(t, n) * std::polar(1.0, -2.0 * M_PI * k * n / 512);
      power[k] = std::norm(acc);
    }
    for (int b = 0; b < 80; ++b) {
      double e = 0.0;
      for (int k = 0; k <= 256; ++k) e += Triangle(b, k * 16000.0 / 512) * power[k];
      ASSERT_NEAR(mel(t, b), std::log(std::max(e, 1e-10)), 1e-9) << "t=" << t << " b=" << b;
    }
  }
}

TEST(LogMel, SilenceIsFloor) {
  const RowMatrix mel = LogMel(FrameAndWindow(Clip(std::vector<double>(16000, 0.0))));
  EXPECT_EQ(mel.maxCoeff(), std::log(1e-10));
  EXPECT_EQ(mel.minCoeff(), std::log(1e-10));
}

TEST(LogMel, DoublingAmplitudeAddsLn4) {
  const AudioClip a = Sine(700.0, 0.2, 1.0);
  const AudioClip b = Sine(700.0, 0.4, 1.0);
  const RowMatrix ma = LogMel(FrameAndWindow(a));
  const RowMatrix mb = LogMel(FrameAndWindow(b));
  for (Eigen::Index t = 0; t < ma.rows(); ++t) {
    for (int k = 0; k < 80; ++k) {
      if (ma(t, k) > std::log(1e-10) + 5.0) ASSERT_NEAR(mb(t, k) - ma(t, k), std::log(4.0), 1e-9);
    }
  }
}

TEST(LogMel, ToneLandsInNearbyBand) {
  const MelFilterbank bank;
  const RowMatrix mel = LogMel(FrameAndWindow(Sine(1000.0, 0.5, 1.0)));
  Eigen::Index best;
  mel.row(40).maxCoeff(&best);
  EXPECT_NEAR(bank.center_hz(static_cast<int>(best)), 1000.0, 100.0);
}

TEST(Prosody, PulseTrainPitch) {
  const RowMatrix p = ProsodyChannels(PulseTrain(2.0));
  int voiced = 0, close = 0;
  for (Eigen::Index t = 0; t < p.rows(); ++t) {
    if (p(t, 2) == 1.0) {
      ++voiced;
      if (std::abs(std::exp(p(t, 0)) - 200.0) <= 5.0) ++close;
    }
  }
  ASSERT_GT(voiced, 0);
  EXPECT_GE(close, 0.9 * voiced);
  EXPECT_GE(voiced, 0.9 * p.rows());
}

TEST(Prosody, WhiteNoiseIsMostlyUnvoiced) {
  const RowMatrix p = ProsodyChannels(Noise(0.1, 3.0, 9));
  int unvoiced = 0;
  for (Eigen::Index t = 0; t < p.rows(); ++t) unvoiced += p(t, 2) == 0.0;
  EXPECT_GE(unvoiced, 0.9 * p.rows());
}

TEST(Prosody, SilenceFloors) {
  const RowMatrix p = ProsodyChannels(Clip(std::vector<double>(20000, 0.0)));
  for (Eigen::Index t = 0; t < p.rows(); ++t) {
    EXPECT_EQ(p(t, 0), 0.0);
    EXPECT_EQ(p(t, 1), std::log(1e-10));
    EXPECT_EQ(p(t, 2), 0.0);
  }
}

TEST(Prosody, EnergyIsLogRms) {
  const AudioClip c = Noise(0.05, 1.0, 2);
  const RowMatrix p = ProsodyChannels(c);
  for (int t : {0, 10, 97}) {
    double e = 0.0;
    for (int n = 0; n < 400; ++n) e += c.samples[t * 160 + n] * c.samples[t * 160 + n];
    EXPECT_NEAR(p(t, 1), std::log(std::sqrt(e / 400.0) + 1e-10), 1e-12);
  }
}

TEST(ExtractFeatures, ShapeLayoutAndInvariants) {
  std::vector<double> s(32000);
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (size_t i = 0; i < s.size(); ++i) {
    s[i] = (i / 4000) % 2 ? u(gen) : 0.5 * std::sin(2.0 * M_PI * 150.0 * i / 16000.0);
  }
  const FeatureMatrix f = ExtractFeatures(Clip(s));
  EXPECT_EQ(f.num_frames(), 198);
  EXPECT_EQ(f.num_channels(), 83);
  ASSERT_EQ(f.channel_layout.size(), 83u);
  EXPECT_EQ(f.channel_layout[kVoicingChannel], "voicing");
  EXPECT_DOUBLE_EQ(f.frame_hop_s, 0.010);
  EXPECT_DOUBLE_EQ(f.frame_len_s, 0.025);
  EXPECT_TRUE(f.frames.allFinite());
  for (Eigen::Index t = 0; t < f.num_frames(); ++t) {
    const double v = f.frames(t, kVoicingChannel);
    ASSERT_TRUE(v == 0.0 || v == 1.0);
    if (v == 0.0) ASSERT_EQ(f.frames(t, kLogF0Channel), 0.0);
  }
}

TEST(ExtractFeatures, Deterministic) {
  const AudioClip c = Noise(0.2, 1.5, 8);
  const FeatureMatrix a = ExtractFeatures(c);
  const FeatureMatrix b = ExtractFeatures(c);
  EXPECT_TRUE((a.frames.array() == b.frames.array()).all());
}

TEST(ExtractFeatures, OneHopShiftShiftsRows) {
  const AudioClip c = Noise(0.2, 1.5, 21);
  std::vector<double> shifted(160, 0.0);
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (double& x : shifted) x = u(gen);
  shifted.insert(shifted.end(), c.samples.begin(), c.samples.end());
  const FeatureMatrix a = ExtractFeatures(c);
  const FeatureMatrix b = ExtractFeatures(Clip(shifted));
  ASSERT_EQ(b.num_frames(), a.num_frames() + 1);
  // Row 0 of the original sees x[-1] = 0 in pre-emphasis; compare the rest.
  for (Eigen::Index t = 1; t < a.num_frames(); ++t) {
    for (Eigen::Index k = 0; k < 83; ++k) ASSERT_NEAR(b.frames(t + 1, k), a.frames(t, k), 1e-9);
  }
}

TEST(ExtractFeatures, ShortClipRejected) {
  EXPECT_EQ(CodeOf([] { ExtractFeatures(Sine(200, 0.5, 0.9)); }), ErrorCode::kInsufficientAudio);
}

TEST(WriteFeatureCsv, HeaderIsLayout) {
  const FeatureMatrix f = ExtractFeatures(Sine(200, 0.5, 1.0));
  const auto path = std::filesystem::temp_directory_path() / "vf_features_test.csv";
  WriteFeatureCsv(f, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.substr(0, 10), "mel0,mel1,");
  EXPECT_NE(header.find("log_f0,log_energy,voicing"), std::string::npos);
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  EXPECT_EQ(rows, f.num_frames());
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace vf
