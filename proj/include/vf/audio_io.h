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

#ifndef VF_AUDIO_IO_H_
#define VF_AUDIO_IO_H_

#include <filesystem>
#include <string>
#include <vector>

namespace vf {

inline constexpr int kCanonicalSampleRate = 16000;

// Monophonic clip with samples in [-1, 1].
struct AudioClip {
  std::vector<double> samples;
  int sample_rate_hz = kCanonicalSampleRate;
  std::string source_id;

  double DurationSeconds() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Throws kPrecondition when the clip breaks the AudioClip invariants.
void ValidateClip(const AudioClip& clip);

enum class WavEncoding { kPcm16, kFloat32 };

// Reads a mono RIFF/WAVE file (PCM16 or IEEE float32). int16 samples are
// divided by 32768. source_id is set to the file path.
AudioClip ReadWav(const std::filesystem::path& path);

void WriteWav(const AudioClip& clip, const std::filesystem::path& path,
              WavEncoding encoding = WavEncoding::kPcm16);

// Serialized WAV bytes, as WriteWav would put them on disk.
std::string EncodeWav(const AudioClip& clip,
                      WavEncoding encoding = WavEncoding::kPcm16);
AudioClip DecodeWav(const std::string& bytes, const std::string& source_id);

// Kaiser-windowed sinc interpolation (beta 8.6, 64 taps per phase).
// Output samples are clamped to [-1, 1].
AudioClip Resample(const AudioClip& clip, int target_rate_hz);

// Reads a WAV and resamples it to the canonical rate.
AudioClip LoadCanonical(const std::filesystem::path& path);

}  // namespace vf

#endif  // VF_AUDIO_IO_H_
