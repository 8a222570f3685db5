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

#ifndef VF_MANIFEST_H_
#define VF_MANIFEST_H_

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

namespace vf {

enum class Authenticity { kReal, kSynthetic };

std::string_view AuthenticityName(Authenticity a);
Authenticity ParseAuthenticity(std::string_view name);

// ID_driver -> ID_target. Real clips are always driver == target.
struct ReenactmentLabel {
  std::string driver;
  std::string target;
  Authenticity authenticity = Authenticity::kSynthetic;
  std::string clip_id;

  bool is_real() const { return authenticity == Authenticity::kReal; }
  bool is_self_reenactment() const { return !is_real() && driver == target; }
  bool is_cross_reenactment() const { return !is_real() && driver != target; }
  // Throws kConfiguration for a real clip with driver != target.
  void Validate() const;
};

struct ManifestEntry {
  std::string clip_id;
  std::string path;  // relative to Manifest::root unless absolute
  ReenactmentLabel label;
  double duration_s = 0.0;
};

inline constexpr int kManifestSchemaVersion = 1;

struct Manifest {
  std::vector<ManifestEntry> entries;
  uint64_t corpus_seed = 0;
  std::string generator_params = "{}";  // JSON object text
  std::string split = "";               // JSON object text, empty when unsplit
  std::filesystem::path root;           // not serialized

  std::filesystem::path ResolvePath(const ManifestEntry& entry) const;
  std::set<std::string> Identities() const;
  // Unique clip ids and valid labels.
  void Validate() const;
};

// Newline-delimited JSON: one header record, then one record per entry.
std::string SerializeManifest(const Manifest& manifest);
Manifest ParseManifest(const std::string& text, const std::filesystem::path& root);

void WriteManifest(const Manifest& manifest, const std::filesystem::path& path);
// root defaults to the manifest's directory.
Manifest ReadManifest(const std::filesystem::path& path);

std::string ManifestHash(const Manifest& manifest);

struct ManifestCounts {
  size_t real = 0;
  size_t self = 0;
  size_t cross = 0;
};
ManifestCounts CountEntries(const Manifest& manifest);

}  // namespace vf

#endif  // VF_MANIFEST_H_
