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

#include "vf/audio_io.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>

#include "vf/common.h"

namespace vf {
namespace {

constexpr uint16_t kFormatPcm = 1;
constexpr uint16_t kFormatFloat = 3;
constexpr uint16_t kFormatExtensible = 0xFFFE;

constexpr double kKaiserBeta = 8.6;
constexpr int kTapsPerPhase = 64;
constexpr int kMinTargetRate = 8000;

uint16_t ReadU16(const std::string& b, size_t pos) {
  return static_cast<uint16_t>(static_cast<unsigned char>(b[pos]) |
                               (static_cast<unsigned char>(b[pos + 1]) << 8));
}

uint32_t ReadU32(const std::string& b, size_t pos) {
  return static_cast<uint32_t>(ReadU16(b, pos)) |
         (static_cast<uint32_t>(ReadU16(b, pos + 2)) << 16);
}

void PutU16(std::string& b, uint16_t v) {
  b.push_back(static_cast<char>(v & 0xFF));
  b.push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string& b, uint32_t v) {
  PutU16(b, static_cast<uint16_t>(v & 0xFFFF));
  PutU16(b, static_cast<uint16_t>(v >> 16));
}

[[noreturn]] void FormatError(const std::string& source, const std::string& what) {
  throw Error(ErrorCode::kFormat, source + ": " + what);
}

// Zeroth-order modified Bessel function of the first kind (power series).
double BesselI0(double x) {
  double sum = 1.0;
  double term = 1.0;
  const double half_sq = 0.25 * x * x;
  for (int k = 1; k < 200; ++k) {
    term *= half_sq / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

}  // namespace

void ValidateClip(const AudioClip& clip) {
  if (clip.sample_rate_hz <= 0) {
    throw Error(ErrorCode::kPrecondition, "sample rate must be positive");
  }
  if (clip.samples.empty()) {
    throw Error(ErrorCode::kPrecondition, "clip has no samples");
  }
  for (double s : clip.samples) {
    if (!(s >= -1.0 && s <= 1.0)) {
      throw Error(ErrorCode::kPrecondition,
                  "sample outside [-1, 1] in clip '" + clip.source_id + "'");
    }
  }
}

AudioClip DecodeWav(const std::string& b, const std::string& source_id) {
  if (b.size() < 12 || b.compare(0, 4, "RIFF") != 0 ||
      b.compare(8, 4, "WAVE") != 0) {
    FormatError(source_id, "not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  size_t data_pos = 0, data_len = 0;
  bool have_data = false;

  size_t pos = 12;
  while (pos + 8 <= b.size()) {
    const std::string id = b.substr(pos, 4);
    const uint32_t len = ReadU32(b, pos + 4);
    const size_t body = pos + 8;
    if (body + len > b.size()) FormatError(source_id, "truncated chunk '" + id + "'");
    if (id == "fmt ") {
      if (len < 16) FormatError(source_id, "fmt chunk too short");
      format = ReadU16(b, body);
      channels = ReadU16(b, body + 2);
      rate = ReadU32(b, body + 4);
      bits = ReadU16(b, body + 14);
      if (format == kFormatExtensible) {
        if (len < 40) FormatError(source_id, "extensible fmt chunk too short");
        format = ReadU16(b, body + 24);
      }
      have_fmt = true;
    } else if (id == "data") {
      data_pos = body;
      data_len = len;
      have_data = true;
    }
    pos = body + len + (len & 1);
  }
  if (!have_fmt) FormatError(source_id, "missing fmt chunk");
  if (!have_data) FormatError(source_id, "missing data chunk");
  if (channels != 1) {
    throw Error(ErrorCode::kUnsupportedChannels,
                source_id + ": expected 1 channel, found " + std::to_string(channels));
  }
  if (rate == 0) FormatError(source_id, "zero sample rate");

  const bool pcm16 = format == kFormatPcm && bits == 16;
  const bool float32 = format == kFormatFloat && bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::kUnsupportedCodec,
                source_id + ": unsupported codec (format " + std::to_string(format) +
                    ", " + std::to_string(bits) + " bits)");
  }
  const size_t width = pcm16 ? 2 : 4;
  const size_t count = data_len / width;
  if (count == 0) FormatError(source_id, "empty data chunk");

  AudioClip clip;
  clip.sample_rate_hz = static_cast<int>(rate);
  clip.source_id = source_id;
  clip.samples.resize(count);
  for (size_t i = 0; i < count; ++i) {
    const size_t at = data_pos + i * width;
    if (pcm16) {
      const auto v = static_cast<int16_t>(ReadU16(b, at));
      clip.samples[i] = static_cast<double>(v) / 32768.0;
    } else {
      const float v = std::bit_cast<float>(ReadU32(b, at));
      if (!(v >= -1.0f && v <= 1.0f)) {
        FormatError(source_id, "float sample outside [-1, 1]");
      }
      clip.samples[i] = static_cast<double>(v);
    }
  }
  return clip;
}

AudioClip ReadWav(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = ReadTextFile(path);
  } catch (const Error& e) {
    throw Error(ErrorCode::kMissingArtifact, e.what());
  }
  return DecodeWav(bytes, path.string());
}

std::string EncodeWav(const AudioClip& clip, WavEncoding encoding) {
  ValidateClip(clip);
  const bool pcm16 = encoding == WavEncoding::kPcm16;
  const uint16_t width = pcm16 ? 2 : 4;
  const auto data_len = static_cast<uint32_t>(clip.samples.size() * width);

  std::string b;
  b.reserve(44 + data_len);
  b += "RIFF";
  PutU32(b, 36 + data_len);
  b += "WAVEfmt ";
  PutU32(b, 16);
  PutU16(b, pcm16 ? kFormatPcm : kFormatFloat);
  PutU16(b, 1);
  PutU32(b, static_cast<uint32_t>(clip.sample_rate_hz));
  PutU32(b, static_cast<uint32_t>(clip.sample_rate_hz) * width);
  PutU16(b, width);
  PutU16(b, static_cast<uint16_t>(width * 8));
  b += "data";
  PutU32(b, data_len);
  for (double s : clip.samples) {
    if (pcm16) {
      const double q = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
      PutU16(b, static_cast<uint16_t>(static_cast<int16_t>(q)));
    } else {
      PutU32(b, std::bit_cast<uint32_t>(static_cast<float>(s)));
    }
  }
  return b;
}

void WriteWav(const AudioClip& clip, const std::filesystem::path& path,
              WavEncoding encoding) {
  WriteTextFile(path, EncodeWav(clip, encoding));
}

AudioClip Resample(const AudioClip& clip, int target_rate_hz) {
  ValidateClip(clip);
  if (target_rate_hz < kMinTargetRate) {
    throw Error(ErrorCode::kUnsupportedRate,
                "target rate " + std::to_string(target_rate_hz) + " Hz below " +
                    std::to_string(kMinTargetRate) + " Hz");
  }
  if (target_rate_hz == clip.sample_rate_hz) return clip;

  const int g = std::gcd(clip.sample_rate_hz, target_rate_hz);
  const int64_t up = target_rate_hz / g;    // output step count per period
  const int64_t down = clip.sample_rate_hz / g;
  // Cutoff relative to the input Nyquist; lowers when decimating.
  const double cutoff = std::min(1.0, static_cast<double>(up) / down);
  const int half = kTapsPerPhase / 2;
  const double i0_beta = BesselI0(kKaiserBeta);

  // One 64-tap kernel per output phase. Tap k of phase p weights input
  // sample floor(t) - half + 1 + k where t = n * down / up.
  std::vector<std::vector<double>> kernels(static_cast<size_t>(up),
                                           std::vector<double>(kTapsPerPhase));
  for (int64_t p = 0; p < up; ++p) {
    const double frac = static_cast<double>(p) / up;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const double x = frac - (k - half + 1);  // distance t - input index
      const double r = x / half;
      double window = 0.0;
      if (std::abs(r) <= 1.0) {
        window = BesselI0(kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta;
      }
      const double arg = M_PI * cutoff * x;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      kernels[p][k] = cutoff * sinc * window;
    }
  }

  const auto n_in = static_cast<int64_t>(clip.samples.size());
  const int64_t n_out = (n_in * up + down - 1) / down;
  AudioClip out;
  out.sample_rate_hz = target_rate_hz;
  out.source_id = clip.source_id;
  out.samples.resize(static_cast<size_t>(n_out));
  for (int64_t n = 0; n < n_out; ++n) {
    const int64_t num = n * down;
    const int64_t base = num / up;
    const auto& kernel = kernels[static_cast<size_t>(num % up)];
    double acc = 0.0;
    for (int k = 0; k < kTapsPerPhase; ++k) {
      const int64_t idx = base - half + 1 + k;
      if (idx < 0 || idx >= n_in) continue;
      acc += kernel[k] * clip.samples[static_cast<size_t>(idx)];
    }
    out.samples[static_cast<size_t>(n)] = std::clamp(acc, -1.0, 1.0);
  }
  return out;
}

AudioClip LoadCanonical(const std::filesystem::path& path) {
  AudioClip clip = ReadWav(path);
  if (clip.sample_rate_hz != kCanonicalSampleRate) {
    clip = Resample(clip, kCanonicalSampleRate);
  }
  return clip;
}

}  // namespace vf
