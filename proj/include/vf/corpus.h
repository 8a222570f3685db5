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

#ifndef VF_CORPUS_H_
#define VF_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vf/audio_io.h"
#include "vf/manifest.h"

namespace vf {

// How a voice sounds. In a reenactment this always comes from the target.
struct Timbre {
  std::array<double, 3> formant_hz{};    // F1 < F2 < F3
  std::array<double, 3> bandwidth_hz{};
  double tilt_db_per_octave = 0.0;
  double f0_register_hz = 0.0;
};

// How a person talks. In a reenactment this always comes from the driver.
struct Mannerism {
  double syllable_rate_hz = 0.0;
  double pause_probability = 0.0;  // per syllable boundary
  double pause_mean_s = 0.0;
  double f0_mod_depth = 0.0;       // relative
  double f0_mod_rate_hz = 0.0;
  double energy_mod_depth = 0.0;
  double jitter_sigma = 0.0;       // relative period perturbation per cycle
};

struct IdentityFactors {
  std::string identity;
  Timbre timbre;
  Mannerism mannerism;

  void Validate() const;
  // Each factor mapped to [0, 1] by its sampling range.
  std::vector<double> Normalized() const;
};

// Seeded, deterministic, pairwise distinct. Ids are "id00", "id01", ...
std::vector<IdentityFactors> SampleIdentities(int n, uint64_t seed);

// Clone-imperfection and rendering knobs.
struct SynthesisOptions {
  double synthetic_jitter_scale = 0.2;
  double formant_perturbation = 0.02;  // relative sigma, synthetic only
  double aspiration_level = 0.03;
  double noise_floor = 1e-2;
  double peak = 0.9;
};

struct SynthesizedClip {
  AudioClip clip;
  ReenactmentLabel label;
};

// Source-filter rendering of `target`'s voice driven by `driver`'s
// mannerisms. Duration must be in [2, 10] s.
SynthesizedClip SynthesizeClip(const IdentityFactors& driver,
                               const IdentityFactors& target, double duration_s,
                               Authenticity authenticity, uint64_t seed,
                               const SynthesisOptions& options = {});

struct CorpusConfig {
  int clips_per_pair = 6;         // K synthetic clips per ordered (driver, target)
  int real_per_identity = 6;      // R real clips per identity
  double duration_s = 4.0;
  uint64_t seed = 1;
  SynthesisOptions synthesis;
};

// Renders every clip to <out_dir>/clips/xx/<clip_id>.wav and writes
// <out_dir>/manifest.jsonl. Entries are sorted by clip_id.
Manifest GenerateCorpus(const std::vector<IdentityFactors>& identities,
                        const CorpusConfig& config,
                        const std::filesystem::path& out_dir, int threads = 0);

std::vector<IdentityFactors> IdentitiesFromManifest(const Manifest& manifest);

struct SplitSpec {
  std::vector<std::string> train_identities;
  std::vector<std::string> test_identities;
  double val_fraction = 0.05;
};

struct Splits {
  Manifest train;
  Manifest val;
  Manifest test;
  SplitSpec spec;
};

// Test identities are excluded from train/val in both driver and target
// roles; test keeps only entries whose driver and target are both test
// identities. Mixed entries are dropped.
Splits MakeSplits(const Manifest& manifest, int n_test_identities,
                  double val_fraction, uint64_t seed);

// Throws kConfiguration if any train/val entry references a test identity.
void CheckSplitDisjointness(const Splits& splits);

}  // namespace vf

#endif  // VF_CORPUS_H_
