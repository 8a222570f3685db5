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

#include "vf/forensics.h"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "json.hpp"
#include "vf/common.h"

namespace vf {

using nlohmann::json;

std::string_view PolicyName(EnrollmentPolicy policy) {
  switch (policy) {
    case EnrollmentPolicy::kRealEnrollment: return "real-enrollment";
    case EnrollmentPolicy::kMixedDriver: return "mixed-driver";
    case EnrollmentPolicy::kSelfReenactmentOnly: return "self-reenactment-only";
  }
  return "unknown";
}

EnrollmentPolicy ParsePolicy(std::string_view name) {
  if (name == "real-enrollment") return EnrollmentPolicy::kRealEnrollment;
  if (name == "mixed-driver") return EnrollmentPolicy::kMixedDriver;
  if (name == "self-reenactment-only") return EnrollmentPolicy::kSelfReenactmentOnly;
  throw Error(ErrorCode::kConfiguration, "unknown enrollment policy '" + std::string(name) + "'");
}

std::string_view TaskName(Task task) {
  return task == Task::kSpoofDetection ? "spoof-detection" : "fingerprinting";
}

Task ParseTask(std::string_view name) {
  if (name == "spoof-detection" || name == "spoof") return Task::kSpoofDetection;
  if (name == "fingerprinting" || name == "fingerprint") return Task::kFingerprinting;
  throw Error(ErrorCode::kConfiguration, "unknown task '" + std::string(name) + "'");
}

void IdentityProfile::Validate() const {
  auto corrupt = [this](const std::string& what) {
    throw Error(ErrorCode::kCorruptProfile, "profile '" + identity + "': " + what);
  };
  if (identity.empty()) corrupt("empty identity");
  if (mean_embedding.size() == 0 || !mean_embedding.allFinite()) corrupt("bad embedding");
  if (std::abs(mean_embedding.norm() - 1.0) > 1e-6) corrupt("embedding is not unit-norm");
  if (clip_ids.empty()) corrupt("no enrollment clips");
  if (!(total_enrollment_seconds > 0.0)) corrupt("non-positive enrollment duration");
  if (head_version.empty()) corrupt("missing head version");
}

std::string_view Verdict::Label() const {
  if (task == Task::kSpoofDetection) return match ? "genuine" : "synthetic";
  return match ? "authorized" : "unauthorized";
}

bool ConformsToPolicy(const std::string& identity, EnrollmentPolicy policy,
                      const std::optional<ReenactmentLabel>& label) {
  switch (policy) {
    case EnrollmentPolicy::kRealEnrollment:
      return !label || (label->is_real() && label->driver == identity &&
                        label->target == identity);
    case EnrollmentPolicy::kMixedDriver:
      return label && !label->is_real() && label->driver == identity;
    case EnrollmentPolicy::kSelfReenactmentOnly:
      return label && label->is_self_reenactment() && label->driver == identity;
  }
  return false;
}

IdentityProfile EnrollEmbeddings(const std::string& identity,
                                 std::span<const EnrollmentItem> items,
                                 EnrollmentPolicy policy) {
  if (items.empty()) {
    throw Error(ErrorCode::kEnrollmentEmpty, "no enrollment clips for '" + identity + "'");
  }
  IdentityProfile profile;
  profile.identity = identity;
  profile.policy = policy;
  profile.head_version = items.front().embedding.head_version;
  const Eigen::Index dim = items.front().embedding.dim();

  // Sum in clip-id order so the mean does not depend on input order.
  std::vector<const EnrollmentItem*> ordered;
  for (const auto& item : items) {
    if (!ConformsToPolicy(identity, policy, item.label)) {
      throw Error(ErrorCode::kPolicyViolation,
                  "clip '" + item.clip_id + "' does not conform to " +
                      std::string(PolicyName(policy)) + " enrollment of '" + identity + "'");
    }
    if (item.embedding.head_version != profile.head_version) {
      throw Error(ErrorCode::kVersion, "enrollment clips embedded under different heads");
    }
    if (item.embedding.dim() != dim) {
      throw Error(ErrorCode::kDimension, "enrollment embeddings differ in dimension");
    }
    ordered.push_back(&item);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const EnrollmentItem* a, const EnrollmentItem* b) { return a->clip_id < b->clip_id; });
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  for (const EnrollmentItem* item : ordered) {
    sum += item->embedding.vector;
    profile.clip_ids.push_back(item->clip_id);
    profile.total_enrollment_seconds += item->seconds;
  }
  profile.mean_embedding = NormalizeOrThrow(sum);
  profile.Validate();
  return profile;
}

IdentityProfile Enroll(const std::string& identity, std::span<const EnrollmentClip> clips,
                       EnrollmentPolicy policy, const Embedder& embedder) {
  if (clips.empty()) {
    throw Error(ErrorCode::kEnrollmentEmpty, "no enrollment clips for '" + identity + "'");
  }
  // Reject policy violations before paying for embeddings.
  for (const auto& c : clips) {
    if (!ConformsToPolicy(identity, policy, c.label)) {
      throw Error(ErrorCode::kPolicyViolation,
                  "clip '" + c.clip.source_id + "' does not conform to " +
                      std::string(PolicyName(policy)) + " enrollment of '" + identity + "'");
    }
  }
  std::vector<EnrollmentItem> items;
  items.reserve(clips.size());
  for (const auto& c : clips) {
    const std::string id = c.label ? c.label->clip_id : c.clip.source_id;
    items.push_back({id.empty() ? c.clip.source_id : id, c.label, c.clip.DurationSeconds(),
                     embedder.EmbedClip(c.clip)});
  }
  return EnrollEmbeddings(identity, items, policy);
}

double ScoreEmbedding(const IdentityProfile& profile, const SpeakerEmbedding& embedding) {
  if (embedding.head_version != profile.head_version) {
    throw Error(ErrorCode::kVersion, "profile '" + profile.identity + "' was enrolled with " +
                                         profile.head_version + " but the clip was embedded with " +
                                         embedding.head_version);
  }
  return CosineSimilarity({profile.mean_embedding, profile.head_version}, embedding);
}

double Score(const IdentityProfile& profile, const AudioClip& clip, const Embedder& embedder) {
  if (embedder.head_version() != profile.head_version) {
    throw Error(ErrorCode::kVersion, "profile '" + profile.identity + "' was enrolled with " +
                                         profile.head_version + " but scoring uses " +
                                         embedder.head_version());
  }
  return ScoreEmbedding(profile, embedder.EmbedClip(clip));
}

Verdict Decide(double score, double threshold, Task task) {
  return {score, threshold, score >= threshold, task};
}

std::string SerializeProfile(const IdentityProfile& profile) {
  profile.Validate();
  json doc;
  doc["schema_version"] = kProfileSchemaVersion;
  doc["identity"] = profile.identity;
  doc["policy"] = PolicyName(profile.policy);
  doc["head_version"] = profile.head_version;
  doc["D"] = profile.mean_embedding.size();
  doc["embedding"] = std::vector<double>(profile.mean_embedding.data(),
                                         profile.mean_embedding.data() +
                                             profile.mean_embedding.size());
  doc["clip_ids"] = profile.clip_ids;
  doc["seconds"] = profile.total_enrollment_seconds;
  return doc.dump() + "\n";
}

IdentityProfile ParseProfile(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("profile is not JSON: ") + e.what());
  }
  IdentityProfile p;
  try {
    const int version = doc.at("schema_version").get<int>();
    if (version != kProfileSchemaVersion) {
      throw Error(ErrorCode::kVersion, "unsupported profile schema_version " +
                                           std::to_string(version));
    }
    p.identity = doc.at("identity").get<std::string>();
    p.policy = ParsePolicy(doc.at("policy").get<std::string>());
    p.head_version = doc.at("head_version").get<std::string>();
    const auto values = doc.at("embedding").get<std::vector<double>>();
    if (values.size() != doc.at("D").get<size_t>()) {
      throw Error(ErrorCode::kCorruptProfile, "embedding length does not match D");
    }
    p.mean_embedding = Eigen::Map<const Eigen::VectorXd>(
        values.data(), static_cast<Eigen::Index>(values.size()));
    p.clip_ids = doc.at("clip_ids").get<std::vector<std::string>>();
    p.total_enrollment_seconds = doc.at("seconds").get<double>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptProfile, std::string("malformed profile: ") + e.what());
  }
  p.Validate();
  return p;
}

void SaveProfile(const IdentityProfile& profile, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeProfile(profile));
}

IdentityProfile LoadProfile(const std::filesystem::path& path) {
  return ParseProfile(ReadTextFile(path));
}

ProfileStore::ProfileStore(ProfileStore&& other) noexcept {
  std::unique_lock lock(other.mutex_);
  profiles_ = std::move(other.profiles_);
}

void ProfileStore::Put(IdentityProfile profile) {
  profile.Validate();
  std::unique_lock lock(mutex_);
  const std::string key = profile.identity;
  profiles_[key] = std::move(profile);
}

std::optional<IdentityProfile> ProfileStore::Get(const std::string& identity) const {
  std::shared_lock lock(mutex_);
  const auto it = profiles_.find(identity);
  if (it == profiles_.end()) return std::nullopt;
  return it->second;
}

std::map<std::string, IdentityProfile> ProfileStore::Snapshot() const {
  std::shared_lock lock(mutex_);
  return profiles_;
}

size_t ProfileStore::size() const {
  std::shared_lock lock(mutex_);
  return profiles_.size();
}

void ProfileStore::SaveTo(const std::filesystem::path& dir) const {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  for (const auto& [id, profile] : Snapshot()) {
    SaveProfile(profile, dir / (id + ".profile.json"));
  }
}

ProfileStore ProfileStore::LoadFrom(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::kMissingArtifact, "profile directory " + dir.string() + " not found");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 13 && name.ends_with(".profile.json")) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  ProfileStore store;
  for (const auto& f : files) store.Put(LoadProfile(f));
  return store;
}

EmbeddingTable EmbedManifest(const Manifest& manifest, const EmbeddingBackend& backend,
                             int threads) {
  std::vector<SpeakerEmbedding> out(manifest.entries.size());
  ParallelFor(manifest.entries.size(), threads, [&](size_t i) {
    const ManifestEntry& e = manifest.entries[i];
    AudioClip clip = LoadCanonical(manifest.ResolvePath(e));
    clip.source_id = e.clip_id;
    out[i] = backend.EmbedBase(clip);
  });
  EmbeddingTable table;
  for (size_t i = 0; i < out.size(); ++i) {
    table.emplace(manifest.entries[i].clip_id, std::move(out[i]));
  }
  return table;
}

EmbeddingTable ApplyEmbedder(const EmbeddingTable& base, const Embedder& embedder) {
  EmbeddingTable out;
  for (const auto& [id, e] : base) out.emplace(id, embedder.FromBase(e));
  return out;
}

std::vector<ManifestEntry> SelectEnrollment(const Manifest& manifest,
                                            const std::string& identity,
                                            EnrollmentPolicy policy,
                                            const EnrollmentSelection& selection) {
  if (!(selection.holdout_fraction >= 0.0 && selection.holdout_fraction < 1.0)) {
    throw Error(ErrorCode::kConfiguration, "holdout fraction must be in [0, 1)");
  }
  std::vector<ManifestEntry> eligible;
  for (const auto& e : manifest.entries) {
    if (ConformsToPolicy(identity, policy, e.label)) eligible.push_back(e);
  }
  if (eligible.empty()) return {};
  Rng rng(DeriveSeed(selection.seed, "enroll|" + identity + "|" +
                                         std::string(PolicyName(policy))));
  rng.Shuffle(eligible);
  const auto held_out = static_cast<size_t>(
      std::ceil(selection.holdout_fraction * static_cast<double>(eligible.size())));
  const size_t cap = std::max<size_t>(1, eligible.size() - std::min(held_out, eligible.size()));
  std::vector<ManifestEntry> chosen;
  double seconds = 0.0;
  for (const auto& e : eligible) {
    if (chosen.size() >= cap || seconds >= selection.max_seconds) break;
    chosen.push_back(e);
    seconds += e.duration_s;
  }
  return chosen;
}

std::map<std::string, IdentityProfile> EnrollManifest(const Manifest& manifest,
                                                      const EmbeddingTable& table,
                                                      EnrollmentPolicy policy,
                                                      const EnrollmentSelection& selection) {
  std::map<std::string, IdentityProfile> profiles;
  for (const auto& identity : manifest.Identities()) {
    const auto chosen = SelectEnrollment(manifest, identity, policy, selection);
    std::vector<EnrollmentItem> items;
    for (const auto& e : chosen) {
      const auto it = table.find(e.clip_id);
      if (it == table.end()) {
        throw Error(ErrorCode::kMissingArtifact, "no embedding for clip '" + e.clip_id + "'");
      }
      items.push_back({e.clip_id, e.label, e.duration_s, it->second});
    }
    profiles.emplace(identity, EnrollEmbeddings(identity, items, policy));
  }
  return profiles;
}

}  // namespace vf
