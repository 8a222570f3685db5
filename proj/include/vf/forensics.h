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

#ifndef VF_FORENSICS_H_
#define VF_FORENSICS_H_

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "vf/audio_io.h"
#include "vf/embedder.h"
#include "vf/manifest.h"

namespace vf {

enum class EnrollmentPolicy { kRealEnrollment, kMixedDriver, kSelfReenactmentOnly };

std::string_view PolicyName(EnrollmentPolicy policy);
EnrollmentPolicy ParsePolicy(std::string_view name);

enum class Task { kSpoofDetection, kFingerprinting };

std::string_view TaskName(Task task);
Task ParseTask(std::string_view name);

struct IdentityProfile {
  std::string identity;
  Eigen::VectorXd mean_embedding;
  EnrollmentPolicy policy = EnrollmentPolicy::kRealEnrollment;
  std::vector<std::string> clip_ids;
  double total_enrollment_seconds = 0.0;
  std::string head_version = kBaseHeadVersion;

  // Throws kCorruptProfile on a broken invariant.
  void Validate() const;
};

struct Verdict {
  double score = 0.0;
  double threshold = 0.0;
  bool match = false;
  Task task = Task::kSpoofDetection;

  // "genuine"/"synthetic" or "authorized"/"unauthorized".
  std::string_view Label() const;
};

// Whether a clip with this label may enroll `identity` under `policy`.
// Real enrollment accepts unlabeled clips; the synthetic policies require
// labels.
bool ConformsToPolicy(const std::string& identity, EnrollmentPolicy policy,
                      const std::optional<ReenactmentLabel>& label);

struct EnrollmentItem {
  std::string clip_id;
  std::optional<ReenactmentLabel> label;
  double seconds = 0.0;
  SpeakerEmbedding embedding;
};

// Mean of the embeddings, re-normalized.
IdentityProfile EnrollEmbeddings(const std::string& identity,
                                 std::span<const EnrollmentItem> items,
                                 EnrollmentPolicy policy);

struct EnrollmentClip {
  AudioClip clip;
  std::optional<ReenactmentLabel> label;
};

IdentityProfile Enroll(const std::string& identity, std::span<const EnrollmentClip> clips,
                       EnrollmentPolicy policy, const Embedder& embedder);

// Cosine similarity against the profile; head versions must agree.
double ScoreEmbedding(const IdentityProfile& profile, const SpeakerEmbedding& embedding);
double Score(const IdentityProfile& profile, const AudioClip& clip, const Embedder& embedder);

// Inclusive: score == threshold is a match.
Verdict Decide(double score, double threshold, Task task);

inline constexpr int kProfileSchemaVersion = 1;

std::string SerializeProfile(const IdentityProfile& profile);
IdentityProfile ParseProfile(const std::string& text);
void SaveProfile(const IdentityProfile& profile, const std::filesystem::path& path);
IdentityProfile LoadProfile(const std::filesystem::path& path);

// Identity-keyed profiles; concurrent readers, exclusive writers.
class ProfileStore {
 public:
  ProfileStore() = default;
  ProfileStore(ProfileStore&& other) noexcept;
  void Put(IdentityProfile profile);
  std::optional<IdentityProfile> Get(const std::string& identity) const;
  std::map<std::string, IdentityProfile> Snapshot() const;
  size_t size() const;

  // <dir>/<identity>.profile.json
  void SaveTo(const std::filesystem::path& dir) const;
  static ProfileStore LoadFrom(const std::filesystem::path& dir);

 private:
  mutable std::shared_mutex mutex_;
  std::map<std::string, IdentityProfile> profiles_;
};

using EmbeddingTable = std::map<std::string, SpeakerEmbedding>;

// Loads every clip of the manifest at the canonical rate and embeds it with
// the backend (no head). Keyed by clip_id.
EmbeddingTable EmbedManifest(const Manifest& manifest, const EmbeddingBackend& backend,
                             int threads = 0);
EmbeddingTable ApplyEmbedder(const EmbeddingTable& base, const Embedder& embedder);

struct EnrollmentSelection {
  double max_seconds = 120.0;
  // Share of the eligible clips always left out of enrollment.
  double holdout_fraction = 0.5;
  uint64_t seed = 1;
};

// Seeded random draw of policy-conforming manifest entries for `identity`.
std::vector<ManifestEntry> SelectEnrollment(const Manifest& manifest,
                                            const std::string& identity,
                                            EnrollmentPolicy policy,
                                            const EnrollmentSelection& selection);

// Enrolls every identity of the manifest from a precomputed table.
std::map<std::string, IdentityProfile> EnrollManifest(const Manifest& manifest,
                                                      const EmbeddingTable& table,
                                                      EnrollmentPolicy policy,
                                                      const EnrollmentSelection& selection);

}  // namespace vf

#endif  // VF_FORENSICS_H_
