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

#include "vf/embedder.h"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "vf/common.h"

namespace vf {

using nlohmann::json;

Eigen::VectorXd NormalizeOrThrow(const Eigen::VectorXd& v) {
  const double norm = v.norm();
  if (!std::isfinite(norm) || norm < 1e-12) {
    throw Error(ErrorCode::kDegenerateEmbedding,
                "cannot normalize a zero or non-finite vector");
  }
  return v / norm;
}

void ValidateEmbedding(const SpeakerEmbedding& e) {
  if (e.vector.size() == 0 || !e.vector.allFinite()) {
    throw Error(ErrorCode::kDegenerateEmbedding, "embedding is empty or non-finite");
  }
  if (std::abs(e.vector.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::kPrecondition, "embedding is not unit-norm");
  }
}

BaseEncoder::BaseEncoder(BaseEncoderConfig config) : config_(config) {
  if (config_.input_channels <= 0 || config_.dim <= 0) {
    throw Error(ErrorCode::kConfiguration, "encoder dimensions must be positive");
  }
  const int pooled = 2 * config_.input_channels;
  const double scale = 1.0 / std::sqrt(static_cast<double>(pooled));
  Rng rng(config_.seed);
  projection_.resize(pooled, config_.dim);
  for (int r = 0; r < pooled; ++r) {
    for (int c = 0; c < config_.dim; ++c) projection_(r, c) = rng.Normal() * scale;
  }
}

Eigen::VectorXd BaseEncoder::PooledStats(const FeatureMatrix& features) const {
  const auto& x = features.frames;
  if (x.rows() == 0) {
    throw Error(ErrorCode::kInsufficientAudio, "feature matrix has no frames");
  }
  if (x.cols() != config_.input_channels) {
    throw Error(ErrorCode::kDimension,
                "feature matrix has " + std::to_string(x.cols()) +
                    " channels, encoder expects " +
                    std::to_string(config_.input_channels));
  }
  const double t = static_cast<double>(x.rows());
  const Eigen::RowVectorXd mean = x.colwise().sum() / t;
  // Variance of the data shifted by its first frame: same value, but a
  // constant channel gives exactly zero instead of rounding residue.
  const RowMatrix shifted = x.rowwise() - x.row(0);
  const Eigen::RowVectorXd shifted_mean = shifted.colwise().sum() / t;
  const Eigen::RowVectorXd var =
      (shifted.rowwise() - shifted_mean).array().square().colwise().sum() / t;
  Eigen::VectorXd pooled(2 * x.cols());
  pooled.head(x.cols()) = mean.transpose();
  pooled.tail(x.cols()) = var.transpose().array().sqrt();
  return pooled;
}

SpeakerEmbedding BaseEncoder::Embed(const FeatureMatrix& features) const {
  const Eigen::VectorXd pooled = PooledStats(features);
  const Eigen::VectorXd projected = projection_.transpose() * pooled;
  return {NormalizeOrThrow(projected), kBaseHeadVersion};
}

ProjectionHead ProjectionHead::Identity(int dim, uint64_t base_seed) {
  ProjectionHead head;
  head.weight = Eigen::MatrixXd::Identity(dim, dim);
  head.bias = Eigen::VectorXd::Zero(dim);
  head.base_seed = base_seed;
  return head;
}

std::string ProjectionHead::Version() const {
  std::string bytes;
  bytes.reserve(sizeof(double) * (weight.size() + bias.size()) + 8);
  auto append = [&bytes](const double* p, Eigen::Index n) {
    bytes.append(reinterpret_cast<const char*>(p), sizeof(double) * n);
  };
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = weight;
  append(w.data(), w.size());
  append(bias.data(), bias.size());
  bytes += std::to_string(base_seed);
  return "head-" + Sha256Hex(bytes).substr(0, 16);
}

Eigen::VectorXd HeadForward(const Eigen::VectorXd& base, const ProjectionHead& head) {
  if (head.weight.rows() != head.dim() || head.weight.cols() != base.size()) {
    throw Error(ErrorCode::kConfiguration,
                "head of dimension " + std::to_string(head.dim()) +
                    " does not match embedding dimension " +
                    std::to_string(base.size()));
  }
  const Eigen::VectorXd activated =
      (head.weight * base + head.bias).array().tanh().matrix();
  return NormalizeOrThrow(activated);
}

SpeakerEmbedding ApplyHead(const SpeakerEmbedding& base,
                           const ProjectionHead& head) {
  return {HeadForward(base.vector, head), head.Version()};
}

SpeakerEmbedding Embed(const FeatureMatrix& features, const BaseEncoder& encoder,
                       const ProjectionHead* head) {
  SpeakerEmbedding base = encoder.Embed(features);
  if (head == nullptr) return base;
  return ApplyHead(base, *head);
}

double CosineSimilarity(const SpeakerEmbedding& a, const SpeakerEmbedding& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCode::kDimension,
                "embedding dimensions differ: " + std::to_string(a.dim()) +
                    " vs " + std::to_string(b.dim()));
  }
  // Summation order fixed so the result is symmetric bit-for-bit.
  double dot = 0.0;
  for (Eigen::Index i = 0; i < a.dim(); ++i) dot += a.vector[i] * b.vector[i];
  return std::clamp(dot, -1.0, 1.0);
}

std::string SerializeHead(const ProjectionHead& head) {
  const Eigen::Index d = head.dim();
  json weight = json::array();
  for (Eigen::Index r = 0; r < d; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) weight.push_back(head.weight(r, c));
  }
  json bias = json::array();
  for (Eigen::Index i = 0; i < d; ++i) bias.push_back(head.bias[i]);
  json doc;
  doc["version"] = kHeadFileVersion;
  doc["D"] = d;
  doc["base_seed"] = head.base_seed;
  doc["head_id"] = head.Version();
  doc["provenance"] = json::parse(head.provenance_json);
  doc["weight"] = std::move(weight);
  doc["bias"] = std::move(bias);
  return doc.dump() + "\n";
}

ProjectionHead ParseHead(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("head file is not JSON: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kHeadFileVersion) {
      throw Error(ErrorCode::kVersion, "unsupported head file version " +
                                           doc.at("version").dump());
    }
    const auto d = doc.at("D").get<Eigen::Index>();
    const auto& weight = doc.at("weight");
    const auto& bias = doc.at("bias");
    if (d <= 0 || weight.size() != static_cast<size_t>(d * d) ||
        bias.size() != static_cast<size_t>(d)) {
      throw Error(ErrorCode::kFormat, "head arrays do not match D");
    }
    ProjectionHead head;
    head.weight.resize(d, d);
    head.bias.resize(d);
    for (Eigen::Index r = 0; r < d; ++r) {
      for (Eigen::Index c = 0; c < d; ++c) {
        head.weight(r, c) = weight[static_cast<size_t>(r * d + c)].get<double>();
      }
    }
    for (Eigen::Index i = 0; i < d; ++i) head.bias[i] = bias[static_cast<size_t>(i)].get<double>();
    if (!head.weight.allFinite() || !head.bias.allFinite()) {
      throw Error(ErrorCode::kFormat, "head contains non-finite values");
    }
    head.base_seed = doc.at("base_seed").get<uint64_t>();
    if (doc.contains("provenance")) head.provenance_json = doc["provenance"].dump();
    return head;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, std::string("malformed head file: ") + e.what());
  }
}

void SaveHead(const ProjectionHead& head, const std::filesystem::path& path) {
  WriteTextFile(path, SerializeHead(head));
}

ProjectionHead LoadHead(const std::filesystem::path& path) {
  return ParseHead(ReadTextFile(path));
}

SpeakerEmbedding StatsPoolingBackend::EmbedBase(const AudioClip& clip) const {
  return encoder_.Embed(ExtractFeatures(clip));
}

PrecomputedBackend::PrecomputedBackend(std::map<std::string, Eigen::VectorXd> table)
    : table_(std::move(table)) {
  for (auto& [id, v] : table_) {
    if (dim_ == 0) dim_ = static_cast<int>(v.size());
    if (v.size() != dim_) {
      throw Error(ErrorCode::kDimension, "embedding '" + id + "' has dimension " +
                                             std::to_string(v.size()));
    }
    v = NormalizeOrThrow(v);
  }
}

PrecomputedBackend PrecomputedBackend::Load(const std::filesystem::path& path) {
  std::istringstream lines(ReadTextFile(path));
  std::map<std::string, Eigen::VectorXd> table;
  std::string line;
  size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(line);
      const auto id = rec.at("clip_id").get<std::string>();
      const auto values = rec.at("embedding").get<std::vector<double>>();
      if (!table.emplace(id, Eigen::Map<const Eigen::VectorXd>(
                                 values.data(), static_cast<Eigen::Index>(values.size())))
               .second) {
        throw Error(ErrorCode::kFormat, "duplicate clip_id '" + id + "'");
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kFormat, path.string() + ":" + std::to_string(line_no) +
                                          ": " + e.what());
    }
  }
  if (table.empty()) throw Error(ErrorCode::kFormat, path.string() + ": no embeddings");
  return PrecomputedBackend(std::move(table));
}

SpeakerEmbedding PrecomputedBackend::EmbedBase(const AudioClip& clip) const {
  const auto it = table_.find(clip.source_id);
  if (it == table_.end()) {
    throw Error(ErrorCode::kMissingArtifact,
                "no precomputed embedding for clip '" + clip.source_id + "'");
  }
  return {it->second, kBaseHeadVersion};
}

Embedder::Embedder(std::shared_ptr<const EmbeddingBackend> backend,
                   std::optional<ProjectionHead> head)
    : backend_(std::move(backend)), head_(std::move(head)) {
  if (!backend_) throw Error(ErrorCode::kConfiguration, "embedder needs a backend");
  if (head_ && head_->dim() != backend_->dim()) {
    throw Error(ErrorCode::kConfiguration, "head dimension does not match backend");
  }
  head_version_ = head_ ? head_->Version() : kBaseHeadVersion;
}

SpeakerEmbedding Embedder::EmbedClip(const AudioClip& clip) const {
  return FromBase(backend_->EmbedBase(clip));
}

SpeakerEmbedding Embedder::FromBase(const SpeakerEmbedding& base) const {
  if (!head_) return base;
  return {HeadForward(base.vector, *head_), head_version_};
}

std::string Embedder::head_version() const { return head_version_; }

}  // namespace vf
