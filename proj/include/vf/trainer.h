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

#ifndef VF_TRAINER_H_
#define VF_TRAINER_H_

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vf/common.h"
#include "vf/embedder.h"
#include "vf/manifest.h"

namespace vf {

struct AamConfig {
  double scale = 30.0;
  double margin = 0.2;  // radians, in [0, 0.5]
  int num_classes = 0;  // set from the training data by TrainHead
  double learning_rate = 1e-3;
  int epochs = 10;
  int batch_size = 32;
  uint64_t seed = 1;

  void Validate() const;
};

// Clamp applied to every class cosine before the margin.
inline constexpr double kCosineClampEps = 1e-7;

struct AamForwardResult {
  double loss = 0.0;
  Eigen::VectorXd logits;  // scaled, margin applied to the target
};

struct AamGradients {
  double loss = 0.0;
  Eigen::VectorXd embedding;      // dL/dx
  Eigen::MatrixXd class_weights;  // dL/dW, one row per class
};

// Additive angular margin softmax for one sample. `class_weights` holds one
// prototype per row. The embedding must be unit-norm.
AamForwardResult AamForward(const Eigen::VectorXd& embedding, int label,
                            const AamConfig& config,
                            const Eigen::MatrixXd& class_weights);

// Analytic gradient of AamForward's loss. Coordinates whose cosine hit the
// clamp receive zero gradient.
AamGradients AamBackward(const Eigen::VectorXd& embedding, int label,
                         const AamConfig& config,
                         const Eigen::MatrixXd& class_weights);

namespace detail {
// Same computations without the unit-norm precondition; used where the
// embedding is perturbed off the sphere (finite differences).
AamForwardResult AamForwardUnchecked(const Eigen::VectorXd& embedding, int label,
                                     const AamConfig& config,
                                     const Eigen::MatrixXd& class_weights);
AamGradients AamBackwardUnchecked(const Eigen::VectorXd& embedding, int label,
                                  const AamConfig& config,
                                  const Eigen::MatrixXd& class_weights);
}  // namespace detail

struct HeadGradients {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
};

// Backpropagates dL/d(head output) through normalize(tanh(W x + b)).
// Throws kSingularGradient when tanh(W x + b) is numerically zero.
HeadGradients ChainThroughHead(const Eigen::VectorXd& base_embedding,
                               const ProjectionHead& head,
                               const Eigen::VectorXd& upstream);

struct AdamHyperparameters {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update, in place. `step` is the 1-based step
// index after increment.
void AdamUpdate(std::span<double> params, std::span<const double> grads,
                std::span<double> first_moment, std::span<double> second_moment,
                int64_t step, double learning_rate,
                const AdamHyperparameters& hyper = {});

// Class prototypes, one unit-norm row per class.
struct ClassWeights {
  Eigen::MatrixXd rows;

  static ClassWeights Random(int num_classes, int dim, uint64_t seed);
  void Renormalize();
};

struct TrainGradients {
  Eigen::MatrixXd head_weight;
  Eigen::VectorXd head_bias;
  Eigen::MatrixXd class_weights;

  static TrainGradients Zero(int dim, int num_classes);
  bool AllFinite() const;
};

struct TrainState {
  ProjectionHead head;
  ClassWeights class_weights;
  Eigen::MatrixXd m_weight, v_weight;
  Eigen::VectorXd m_bias, v_bias;
  Eigen::MatrixXd m_class, v_class;
  int64_t step = 0;
  Rng rng{0};

  static TrainState Initial(int dim, int num_classes, uint64_t seed,
                            uint64_t base_seed);
};

// Adam on every parameter, then class rows back to unit length. Throws
// kTrainingDivergence on non-finite gradients.
void AdamStep(TrainState& state, const TrainGradients& grads, const AamConfig& config);

struct TrainingSample {
  Eigen::VectorXd base_embedding;
  int label = 0;
};

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0.0;
  double wall_seconds = 0.0;
};

struct TrainResult {
  ProjectionHead head;
  ClassWeights class_weights;
  std::vector<EpochLog> log;
  std::vector<std::string> class_names;
};

// Loss and gradients of the summed AAM loss over a batch, accumulated in
// sample order.
double BatchGradients(const std::vector<TrainingSample>& samples,
                      std::span<const size_t> batch, const TrainState& state,
                      const AamConfig& config, TrainGradients& grads);

TrainResult TrainHeadOnSamples(const std::vector<TrainingSample>& samples,
                               AamConfig config, uint64_t base_seed,
                               const std::string& data_hash,
                               std::vector<std::string> class_names = {});

// Fine-tunes a head on the synthetic entries of `train`, labeled by
// driver identity.
TrainResult TrainHead(const Manifest& train, AamConfig config,
                      const EmbeddingBackend& backend, uint64_t base_seed,
                      int threads = 0);

std::string TrainingLogCsv(const std::vector<EpochLog>& log);

}  // namespace vf

#endif  // VF_TRAINER_H_
