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

#ifndef VF_FEATURES_H_
#define VF_FEATURES_H_

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

#include "vf/audio_io.h"

namespace vf {

inline constexpr int kFrameLength = 400;  // 25 ms at 16 kHz
inline constexpr int kFrameHop = 160;     // 10 ms
inline constexpr int kFftSize = 512;
inline constexpr int kNumMelBands = 80;
inline constexpr int kNumProsodyChannels = 3;
inline constexpr int kFeatureChannels = kNumMelBands + kNumProsodyChannels;
inline constexpr double kMelLowHz = 20.0;
inline constexpr double kMelHighHz = 7600.0;
inline constexpr double kLogFloor = 1e-10;
inline constexpr double kPreEmphasis = 0.97;
inline constexpr double kMinF0Hz = 50.0;
inline constexpr double kMaxF0Hz = 400.0;
inline constexpr double kVoicingThreshold = 0.5;
inline constexpr double kMinVoicedRms = 1e-4;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Prosody channel offsets within the 83-column layout.
inline constexpr int kLogF0Channel = kNumMelBands;
inline constexpr int kLogEnergyChannel = kNumMelBands + 1;
inline constexpr int kVoicingChannel = kNumMelBands + 2;

struct FeatureMatrix {
  RowMatrix frames;  // T x C
  std::vector<std::string> channel_layout;
  double frame_hop_s = 0.010;
  double frame_len_s = 0.025;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index num_channels() const { return frames.cols(); }
};

std::vector<std::string> DefaultChannelLayout();

// floor((num_samples - 400) / 160) + 1; zero when the clip is shorter
// than one frame.
int NumFrames(size_t num_samples);

// Pre-emphasized, Hann-windowed 400-sample frames (T x 400). Requires a
// 16 kHz clip of at least 1 s.
RowMatrix FrameAndWindow(const AudioClip& clip);

// HTK-mel triangular filterbank over a 512-point FFT.
class MelFilterbank {
 public:
  MelFilterbank();
  // 80 x 257 weights.
  const RowMatrix& weights() const { return weights_; }
  double center_hz(int band) const { return centers_hz_[band]; }

 private:
  RowMatrix weights_;
  std::vector<double> centers_hz_;
};

double HzToMel(double hz);
double MelToHz(double mel);

// Natural log of mel-weighted power spectrum, floored at 1e-10 before the
// log. Doubling the input amplitude adds ln(4) to every unfloored cell.
RowMatrix LogMel(const RowMatrix& windowed_frames);

// Per frame: [log F0 (0 when unvoiced), ln(rms + 1e-10), voicing in {0,1}].
RowMatrix ProsodyChannels(const AudioClip& clip);

FeatureMatrix ExtractFeatures(const AudioClip& clip);

void WriteFeatureCsv(const FeatureMatrix& features,
                     const std::filesystem::path& path);

}  // namespace vf

#endif  // VF_FEATURES_H_
