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

#ifndef VF_EMBEDDER_H_
#define VF_EMBEDDER_H_

#include <Eigen/Dense>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "vf/audio_io.h"
#include "vf/features.h"

namespace vf {

inline constexpr int kEmbeddingDim = 192;
inline constexpr int kPooledDim = 2 * kFeatureChannels;
inline constexpr const char* kBaseHeadVersion = "base";

struct SpeakerEmbedding {
  Eigen::VectorXd vector;
  std::string head_version = kBaseHeadVersion;

  Eigen::Index dim() const { return vector.size(); }
};

// Throws kDegenerateEmbedding when v has (near) zero or non-finite norm.
Eigen::VectorXd NormalizeOrThrow(const Eigen::VectorXd& v);

// Checks the SpeakerEmbedding invariants (unit norm within 1e-6, finite).
void ValidateEmbedding(const SpeakerEmbedding& e);

struct BaseEncoderConfig {
  int input_channels = kFeatureChannels;
  int dim = kEmbeddingDim;
  uint64_t seed = 1;
};

// Frozen stats-pooling encoder: [mean; population stddev] over time,
// multiplied by a seeded Gaussian projection scaled by 1/sqrt(pooled dim),
// then L2-normalized.
class BaseEncoder {
 public:
  explicit BaseEncoder(BaseEncoderConfig config = {});

  const BaseEncoderConfig& config() const { return config_; }
  // pooled_dim x dim.
  const Eigen::MatrixXd& projection() const { return projection_; }

  Eigen::VectorXd PooledStats(const FeatureMatrix& features) const;
  SpeakerEmbedding Embed(const FeatureMatrix& features) const;

 private:
  BaseEncoderConfig config_;
  Eigen::MatrixXd projection_;
};

inline SpeakerEmbedding EmbedBase(const FeatureMatrix& features,
                                  const BaseEncoder& encoder) {
  return encoder.Embed(features);
}

struct ProjectionHead {
  Eigen::MatrixXd weight;  // D x D
  Eigen::VectorXd bias;    // D
  uint64_t base_seed = 1;
  // Free-form record of how the head was produced (training config, data
  // hash). Part of the head file, not of the head identity.
  std::string provenance_json = "{}";

  static ProjectionHead Identity(int dim, uint64_t base_seed = 1);
  Eigen::Index dim() const { return bias.size(); }
  // "head-" + 16 hex chars of the parameter hash.
  std::string Version() const;
};

// normalize(tanh(W x + b)), with x the base embedding.
Eigen::VectorXd HeadForward(const Eigen::VectorXd& base, const ProjectionHead& head);
SpeakerEmbedding ApplyHead(const SpeakerEmbedding& base,
                           const ProjectionHead& head);

SpeakerEmbedding Embed(const FeatureMatrix& features, const BaseEncoder& encoder,
                       const ProjectionHead* head);

// Dot product clamped to [-1, 1].
double CosineSimilarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b);

inline constexpr int kHeadFileVersion = 1;

std::string SerializeHead(const ProjectionHead& head);
ProjectionHead ParseHead(const std::string& text);
void SaveHead(const ProjectionHead& head, const std::filesystem::path& path);
ProjectionHead LoadHead(const std::filesystem::path& path);

// Source of head-less embeddings for a clip. The stats-pooling encoder is
// the default; a precomputed table lets externally produced voiceprints
// stand in without touching downstream code.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual int dim() const = 0;
  virtual SpeakerEmbedding EmbedBase(const AudioClip& clip) const = 0;
};

class StatsPoolingBackend : public EmbeddingBackend {
 public:
  explicit StatsPoolingBackend(BaseEncoderConfig config = {}) : encoder_(config) {}
  int dim() const override { return encoder_.config().dim; }
  SpeakerEmbedding EmbedBase(const AudioClip& clip) const override;
  const BaseEncoder& encoder() const { return encoder_; }

 private:
  BaseEncoder encoder_;
};

// Newline-delimited JSON records {"clip_id": ..., "embedding": [D floats]},
// looked up by AudioClip::source_id. Vectors are L2-normalized on load.
class PrecomputedBackend : public EmbeddingBackend {
 public:
  static PrecomputedBackend Load(const std::filesystem::path& path);
  explicit PrecomputedBackend(std::map<std::string, Eigen::VectorXd> table);

  int dim() const override { return dim_; }
  SpeakerEmbedding EmbedBase(const AudioClip& clip) const override;
  bool Contains(const std::string& clip_id) const { return table_.count(clip_id) > 0; }

 private:
  std::map<std::string, Eigen::VectorXd> table_;
  int dim_ = 0;
};

// Backend plus optional head: the full clip-to-voiceprint path.
class Embedder {
 public:
  explicit Embedder(std::shared_ptr<const EmbeddingBackend> backend,
                    std::optional<ProjectionHead> head = std::nullopt);

  SpeakerEmbedding EmbedClip(const AudioClip& clip) const;
  SpeakerEmbedding FromBase(const SpeakerEmbedding& base) const;
  const EmbeddingBackend& backend() const { return *backend_; }
  const std::optional<ProjectionHead>& head() const { return head_; }
  std::string head_version() const;

 private:
  std::shared_ptr<const EmbeddingBackend> backend_;
  std::optional<ProjectionHead> head_;
  std::string head_version_;
};

}  // namespace vf

#endif  // VF_EMBEDDER_H_
