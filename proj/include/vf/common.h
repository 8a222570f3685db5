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

#ifndef VF_COMMON_H_
#define VF_COMMON_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vf {

enum class ErrorCode {
  kFormat,
  kUnsupportedChannels,
  kUnsupportedCodec,
  kUnsupportedRate,
  kIo,
  kMissingArtifact,
  kPrecondition,
  kConfiguration,
  kInsufficientAudio,
  kDimension,
  kDegenerateEmbedding,
  kSingularGradient,
  kTrainingDivergence,
  kInsufficientClasses,
  kInsufficientIdentities,
  kEnrollmentEmpty,
  kPolicyViolation,
  kVersion,
  kCorruptProfile,
  kDegenerateTrials,
  kMissingProfile,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Seeded generator with portable uniform/normal draws. The engine output is
// fixed by the standard; the distributions are implemented here so results
// do not depend on the standard library vendor.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t Next() { return engine_(); }
  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Normal();
  // Uniform index in [0, n).
  size_t Index(size_t n);

  template <typename T>
  void Shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[Index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable 64-bit seed derived from a base seed and a textual key.
uint64_t DeriveSeed(uint64_t base, std::string_view key);

std::string Sha256Hex(std::string_view data);
std::string Sha256File(const std::filesystem::path& path);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Each index is
// visited exactly once; callers write results into per-index slots.
void ParallelFor(size_t n, int threads, const std::function<void(size_t)>& fn);

// Worker count used when callers pass threads <= 0.
int DefaultThreads();

std::string ReadTextFile(const std::filesystem::path& path);
// Creates missing parent directories.
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

}  // namespace vf

#endif  // VF_COMMON_H_
