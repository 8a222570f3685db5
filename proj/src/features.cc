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

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

#include "fft.h"
#include "vf/common.h"

namespace vf {
namespace {

constexpr int kNumBins = kFftSize / 2 + 1;
// Autocorrelation needs 2 * frame length to stay acyclic.
constexpr int kAutocorrFftSize = 1024;
constexpr int kLpcOrder = 12;
constexpr int kResidualSmoothing = 4;  // half-width of the moving average

void RequireFeatureInput(const AudioClip& clip) {
  if (clip.sample_rate_hz != kCanonicalSampleRate) {
    throw Error(ErrorCode::kPrecondition,
                "feature extraction expects 16 kHz audio, got " +
                    std::to_string(clip.sample_rate_hz) + " Hz");
  }
  if (clip.samples.size() < static_cast<size_t>(kCanonicalSampleRate)) {
    throw Error(ErrorCode::kInsufficientAudio,
                "clip '" + clip.source_id + "' is shorter than 1.0 s");
  }
}

const std::vector<double>& HannWindow() {
  static const std::vector<double> window = [] {
    std::vector<double> w(kFrameLength);
    for (int n = 0; n < kFrameLength; ++n) {
      w[n] = 0.5 - 0.5 * std::cos(2.0 * M_PI * n / (kFrameLength - 1));
    }
    return w;
  }();
  return window;
}

const MelFilterbank& SharedFilterbank() {
  static const MelFilterbank bank;
  return bank;
}

}  // namespace

std::vector<std::string> DefaultChannelLayout() {
  std::vector<std::string> layout;
  layout.reserve(kFeatureChannels);
  for (int b = 0; b < kNumMelBands; ++b) layout.push_back("mel" + std::to_string(b));
  layout.emplace_back("log_f0");
  layout.emplace_back("log_energy");
  layout.emplace_back("voicing");
  return layout;
}

int NumFrames(size_t num_samples) {
  if (num_samples < static_cast<size_t>(kFrameLength)) return 0;
  return static_cast<int>((num_samples - kFrameLength) / kFrameHop) + 1;
}

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MelFilterbank::MelFilterbank()
    : weights_(RowMatrix::Zero(kNumMelBands, kNumBins)),
      centers_hz_(kNumMelBands) {
  const double mel_lo = HzToMel(kMelLowHz);
  const double mel_hi = HzToMel(kMelHighHz);
  std::vector<double> edges(kNumMelBands + 2);
  for (int i = 0; i < kNumMelBands + 2; ++i) {
    edges[i] = MelToHz(mel_lo + (mel_hi - mel_lo) * i / (kNumMelBands + 1));
  }
  const double bin_hz = static_cast<double>(kCanonicalSampleRate) / kFftSize;
  for (int b = 0; b < kNumMelBands; ++b) {
    const double lo = edges[b], mid = edges[b + 1], hi = edges[b + 2];
    centers_hz_[b] = mid;
    for (int k = 0; k < kNumBins; ++k) {
      const double f = k * bin_hz;
      double w = 0.0;
      if (f > lo && f <= mid) {
        w = (f - lo) / (mid - lo);
      } else if (f > mid && f < hi) {
        w = (hi - f) / (hi - mid);
      }
      weights_(b, k) = w;
    }
  }
}

RowMatrix FrameAndWindow(const AudioClip& clip) {
  RequireFeatureInput(clip);
  const auto& x = clip.samples;
  const int frames = NumFrames(x.size());
  const auto& window = HannWindow();
  RowMatrix out(frames, kFrameLength);
  for (int t = 0; t < frames; ++t) {
    const size_t start = static_cast<size_t>(t) * kFrameHop;
    for (int n = 0; n < kFrameLength; ++n) {
      const size_t i = start + n;
      const double prev = i == 0 ? 0.0 : x[i - 1];
      out(t, n) = (x[i] - kPreEmphasis * prev) * window[n];
    }
  }
  return out;
}

RowMatrix LogMel(const RowMatrix& windowed_frames) {
  const auto& bank = SharedFilterbank();
  internal::RealFft fft(kFftSize);
  Eigen::VectorXd power(kNumBins);
  RowMatrix out(windowed_frames.rows(), kNumMelBands);
  for (Eigen::Index t = 0; t < windowed_frames.rows(); ++t) {
    fft.Forward({windowed_frames.row(t).data(),
                 static_cast<size_t>(windowed_frames.cols())});
    for (int k = 0; k < kNumBins; ++k) power[k] = fft.Power(k);
    const Eigen::VectorXd mel = bank.weights() * power;
    for (int b = 0; b < kNumMelBands; ++b) {
      out(t, b) = std::log(std::max(mel[b], kLogFloor));
    }
  }
  return out;
}

namespace {

// Levinson-Durbin on autocorrelation r[0..p]; returns a[0..p] with a[0] = 1.
std::vector<double> LpcFromAutocorrelation(const std::vector<double>& r) {
  const int p = static_cast<int>(r.size()) - 1;
  std::vector<double> a(r.size(), 0.0), prev;
  a[0] = 1.0;
  double err = r[0];
  for (int i = 1; i <= p && err > 0.0; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    prev = a;
    for (int j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= 1.0 - k * k;
  }
  return a;
}

double NormalizedCorrelation(const std::vector<double>& f, int lag) {
  double num = 0.0, head = 0.0, tail = 0.0;
  for (size_t n = 0; n + lag < f.size(); ++n) {
    num += f[n] * f[n + lag];
    head += f[n] * f[n];
    tail += f[n + lag] * f[n + lag];
  }
  const double denom = std::sqrt(head * tail);
  return denom > 0.0 ? num / denom : 0.0;
}

}  // namespace

RowMatrix ProsodyChannels(const AudioClip& clip) {
  RequireFeatureInput(clip);
  const auto& x = clip.samples;
  const int frames = NumFrames(x.size());
  const int min_lag = static_cast<int>(std::ceil(kCanonicalSampleRate / kMaxF0Hz));
  const int max_lag = static_cast<int>(std::floor(kCanonicalSampleRate / kMinF0Hz));
  const auto& window = HannWindow();

  internal::RealFft fft(kAutocorrFftSize);
  std::vector<double> frame(kFrameLength);
  std::vector<double> residual(kFrameLength);
  std::vector<double> smoothed(kFrameLength);
  std::vector<double> r(kLpcOrder + 1);
  RowMatrix out(frames, kNumProsodyChannels);

  for (int t = 0; t < frames; ++t) {
    const size_t start = static_cast<size_t>(t) * kFrameHop;
    double energy = 0.0, mean = 0.0;
    for (int n = 0; n < kFrameLength; ++n) {
      energy += x[start + n] * x[start + n];
      mean += x[start + n];
    }
    mean /= kFrameLength;
    const double rms = std::sqrt(energy / kFrameLength);
    out(t, 1) = std::log(rms + kLogFloor);
    out(t, 0) = 0.0;
    out(t, 2) = 0.0;
    if (rms < kMinVoicedRms) continue;

    for (int n = 0; n < kFrameLength; ++n) frame[n] = x[start + n] - mean;
    // Inverse-filter the frame with its own LPC envelope so that formant
    // ringing does not masquerade as a period, then low-pass the residual.
    std::fill(r.begin(), r.end(), 0.0);
    for (int k = 0; k <= kLpcOrder; ++k) {
      for (int n = k; n < kFrameLength; ++n) {
        r[k] += frame[n] * window[n] * frame[n - k] * window[n - k];
      }
    }
    if (!(r[0] > 0.0)) continue;
    r[0] *= 1.0 + 1e-9;
    const std::vector<double> a = LpcFromAutocorrelation(r);
    // The first kLpcOrder samples lack filter history and are left at zero.
    std::fill(residual.begin(), residual.begin() + kLpcOrder, 0.0);
    for (int n = kLpcOrder; n < kFrameLength; ++n) {
      double e = frame[n];
      for (int j = 1; j <= kLpcOrder; ++j) e += a[j] * frame[n - j];
      residual[n] = e;
    }
    for (int n = 0; n < kFrameLength; ++n) {
      double sum = 0.0;
      int count = 0;
      for (int j = -kResidualSmoothing; j <= kResidualSmoothing; ++j) {
        if (n + j >= 0 && n + j < kFrameLength) {
          sum += residual[n + j];
          ++count;
        }
      }
      smoothed[n] = sum / count;
    }

    fft.Forward(smoothed);
    for (size_t k = 0; k < fft.bins(); ++k) fft.SetBin(k, fft.Power(k));
    const auto raw = fft.Inverse();
    if (!(raw[0] > 0.0)) continue;
    // Biased autocorrelation r(k) / r(0) tapers with (N - k) / N, so period
    // multiples never win over the period itself.
    auto biased = [&raw](int lag) { return raw[lag] / raw[0]; };
    int chosen = 0;
    for (int lag = min_lag; lag <= max_lag; ++lag) {
      const double v = biased(lag);
      const bool local_max = v >= biased(lag - 1) && v >= biased(lag + 1);
      if (local_max && (chosen == 0 || v > biased(chosen))) chosen = lag;
    }
    if (chosen == 0) continue;
    if (NormalizedCorrelation(frame, chosen) < kVoicingThreshold) continue;
    const double a0 = biased(chosen - 1), b0 = biased(chosen), c0 = biased(chosen + 1);
    const double curvature = a0 - 2.0 * b0 + c0;
    double offset = 0.0;
    if (curvature < 0.0) offset = std::clamp(0.5 * (a0 - c0) / curvature, -0.5, 0.5);
    out(t, 0) = std::log(kCanonicalSampleRate / (chosen + offset));
    out(t, 2) = 1.0;
  }
  return out;
}

FeatureMatrix ExtractFeatures(const AudioClip& clip) {
  const RowMatrix mel = LogMel(FrameAndWindow(clip));
  const RowMatrix prosody = ProsodyChannels(clip);
  const Eigen::Index rows = std::min(mel.rows(), prosody.rows());
  if (rows == 0) {
    throw Error(ErrorCode::kInsufficientAudio, "clip yields no frames");
  }
  FeatureMatrix features;
  features.frames.resize(rows, kFeatureChannels);
  features.frames.leftCols(kNumMelBands) = mel.topRows(rows);
  features.frames.rightCols(kNumProsodyChannels) = prosody.topRows(rows);
  features.channel_layout = DefaultChannelLayout();
  return features;
}

void WriteFeatureCsv(const FeatureMatrix& features,
                     const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  for (size_t c = 0; c < features.channel_layout.size(); ++c) {
    out << (c ? "," : "") << features.channel_layout[c];
  }
  out << '\n' << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Eigen::Index t = 0; t < features.frames.rows(); ++t) {
    for (Eigen::Index c = 0; c < features.frames.cols(); ++c) {
      out << (c ? "," : "") << features.frames(t, c);
    }
    out << '\n';
  }
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

}  // namespace vf
