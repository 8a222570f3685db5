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

#include "vf/manifest.h"

#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "vf/common.h"

namespace vf {

using nlohmann::json;

std::string_view AuthenticityName(Authenticity a) {
  return a == Authenticity::kReal ? "real" : "synthetic";
}

Authenticity ParseAuthenticity(std::string_view name) {
  if (name == "real") return Authenticity::kReal;
  if (name == "synthetic") return Authenticity::kSynthetic;
  throw Error(ErrorCode::kFormat, "unknown authenticity '" + std::string(name) + "'");
}

void ReenactmentLabel::Validate() const {
  if (driver.empty() || target.empty()) {
    throw Error(ErrorCode::kConfiguration, "label '" + clip_id + "' lacks identities");
  }
  if (is_real() && driver != target) {
    throw Error(ErrorCode::kConfiguration,
                "real clip '" + clip_id + "' must have driver == target");
  }
}

std::filesystem::path Manifest::ResolvePath(const ManifestEntry& entry) const {
  const std::filesystem::path p(entry.path);
  return p.is_absolute() ? p : root / p;
}

std::set<std::string> Manifest::Identities() const {
  std::set<std::string> ids;
  for (const auto& e : entries) {
    ids.insert(e.label.driver);
    ids.insert(e.label.target);
  }
  return ids;
}

void Manifest::Validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.clip_id).second) {
      throw Error(ErrorCode::kFormat, "duplicate clip_id '" + e.clip_id + "'");
    }
    if (e.label.clip_id != e.clip_id) {
      throw Error(ErrorCode::kFormat, "label clip_id mismatch for '" + e.clip_id + "'");
    }
    e.label.Validate();
  }
}

std::string SerializeManifest(const Manifest& manifest) {
  std::string out;
  json header;
  header["schema_version"] = kManifestSchemaVersion;
  header["corpus_seed"] = manifest.corpus_seed;
  header["generator_params"] = json::parse(manifest.generator_params);
  if (!manifest.split.empty()) header["split"] = json::parse(manifest.split);
  out += header.dump() + "\n";
  for (const auto& e : manifest.entries) {
    json rec;
    rec["clip_id"] = e.clip_id;
    rec["path"] = e.path;
    rec["driver"] = e.label.driver;
    rec["target"] = e.label.target;
    rec["authenticity"] = AuthenticityName(e.label.authenticity);
    rec["duration_s"] = e.duration_s;
    out += rec.dump() + "\n";
  }
  return out;
}

Manifest ParseManifest(const std::string& text, const std::filesystem::path& root) {
  Manifest manifest;
  manifest.root = root;
  std::istringstream lines(text);
  std::string line;
  size_t line_no = 0;
  bool have_header = false;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(line);
      if (!have_header) {
        const int version = rec.at("schema_version").get<int>();
        if (version != kManifestSchemaVersion) {
          throw Error(ErrorCode::kVersion,
                      "unsupported manifest schema_version " + std::to_string(version));
        }
        manifest.corpus_seed = rec.at("corpus_seed").get<uint64_t>();
        manifest.generator_params = rec.at("generator_params").dump();
        if (rec.contains("split")) manifest.split = rec["split"].dump();
        have_header = true;
        continue;
      }
      ManifestEntry e;
      e.clip_id = rec.at("clip_id").get<std::string>();
      e.path = rec.at("path").get<std::string>();
      e.label.driver = rec.at("driver").get<std::string>();
      e.label.target = rec.at("target").get<std::string>();
      e.label.authenticity = ParseAuthenticity(rec.at("authenticity").get<std::string>());
      e.label.clip_id = e.clip_id;
      e.duration_s = rec.at("duration_s").get<double>();
      manifest.entries.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw Error(ErrorCode::kFormat,
                  "manifest line " + std::to_string(line_no) + ": " + ex.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::kFormat, "manifest has no header record");
  manifest.Validate();
  return manifest;
}

void WriteManifest(const Manifest& manifest, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeManifest(manifest));
}

Manifest ReadManifest(const std::filesystem::path& path) {
  return ParseManifest(ReadTextFile(path), path.parent_path());
}

std::string ManifestHash(const Manifest& manifest) {
  return Sha256Hex(SerializeManifest(manifest));
}

ManifestCounts CountEntries(const Manifest& manifest) {
  ManifestCounts counts;
  for (const auto& e : manifest.entries) {
    if (e.label.is_real()) {
      ++counts.real;
    } else if (e.label.is_self_reenactment()) {
      ++counts.self;
    } else {
      ++counts.cross;
    }
  }
  return counts;
}

}  // namespace vf
