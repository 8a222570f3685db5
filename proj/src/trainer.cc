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

#include "vf/trainer.h"

#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vf/forensics.h"

namespace vf {
namespace {

void CheckInputs(const Eigen::VectorXd& embedding, int label, const AamConfig& config,
                 const Eigen::MatrixXd& class_weights) {
  if (class_weights.rows() == 0 || class_weights.cols() != embedding.size()) {
    throw Error(ErrorCode::kDimension, "class weights do not match embedding dimension");
  }
  if (label < 0 || label >= class_weights.rows()) {
    throw Error(ErrorCode::kPrecondition, "label " + std::to_string(label) +
                                              " outside [0, " +
                                              std::to_string(class_weights.rows()) + ")");
  }
  if (config.margin < 0.0 || config.margin > 0.5 || !(config.scale > 0.0)) {
    throw Error(ErrorCode::kConfiguration, "invalid margin or scale");
  }
}

void CheckUnitNorm(const Eigen::VectorXd& embedding) {
  if (!embedding.allFinite() || std::abs(embedding.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::kPrecondition, "AAM input embedding must be unit-norm");
  }
}

struct ForwardTrace {
  Eigen::VectorXd raw;      // w_j . x
  Eigen::VectorXd cosines;  // clamped
  Eigen::VectorXd logits;
  double target_slope = 0.0;  // d logit_y / d cos_y
  double loss = 0.0;
  Eigen::VectorXd probs;
};

ForwardTrace Trace(const Eigen::VectorXd& x, int label, const AamConfig& config,
                   const Eigen::MatrixXd& w) {
  ForwardTrace tr;
  const double lo = -1.0 + kCosineClampEps;
  const double hi = 1.0 - kCosineClampEps;
  tr.raw = w * x;
  tr.cosines = tr.raw.cwiseMax(lo).cwiseMin(hi);
  tr.logits = config.scale * tr.cosines;

  const double m = config.margin;
  const double cos_m = std::cos(m);
  const double sin_m = std::sin(m);
  const double c = tr.cosines[label];
  double target;
  if (c > std::cos(M_PI - m)) {
    const double sine = std::sqrt(1.0 - c * c);
    target = c * cos_m - sine * sin_m;  // cos(theta + m)
    tr.target_slope = config.scale * (cos_m + c * sin_m / sine);
  } else {
    target = c - m * sin_m;
    tr.target_slope = config.scale;
  }
  tr.logits[label] = config.scale * target;

  const double max_logit = tr.logits.maxCoeff();
  const Eigen::VectorXd shifted = (tr.logits.array() - max_logit).exp().matrix();
  const double sum = shifted.sum();
  tr.loss = max_logit + std::log(sum) - tr.logits[label];
  tr.probs = shifted / sum;
  return tr;
}

}  // namespace

void AamConfig::Validate() const {
  if (!(scale > 0.0)) throw Error(ErrorCode::kConfiguration, "scale must be positive");
  if (!(margin >= 0.0 && margin <= 0.5)) {
    throw Error(ErrorCode::kConfiguration, "margin must be within [0, 0.5] radians");
  }
  if (!(learning_rate > 0.0)) {
    throw Error(ErrorCode::kConfiguration, "learning rate must be positive");
  }
  if (epochs <= 0 || batch_size <= 0) {
    throw Error(ErrorCode::kConfiguration, "epochs and batch size must be positive");
  }
}

namespace detail {

AamForwardResult AamForwardUnchecked(const Eigen::VectorXd& embedding, int label,
                                     const AamConfig& config,
                                     const Eigen::MatrixXd& class_weights) {
  CheckInputs(embedding, label, config, class_weights);
  ForwardTrace tr = Trace(embedding, label, config, class_weights);
  return {tr.loss, std::move(tr.logits)};
}

AamGradients AamBackwardUnchecked(const Eigen::VectorXd& embedding, int label,
                                  const AamConfig& config,
                                  const Eigen::MatrixXd& class_weights) {
  CheckInputs(embedding, label, config, class_weights);
  const ForwardTrace tr = Trace(embedding, label, config, class_weights);
  const double lo = -1.0 + kCosineClampEps;
  const double hi = 1.0 - kCosineClampEps;

  // dL/dlogit = p - onehot; logits are s * cos except the margin target.
  Eigen::VectorXd d_raw(class_weights.rows());
  for (Eigen::Index j = 0; j < d_raw.size(); ++j) {
    const double d_logit = tr.probs[j] - (j == label ? 1.0 : 0.0);
    const double slope = j == label ? tr.target_slope : config.scale;
    const bool clamped = tr.raw[j] < lo || tr.raw[j] > hi;
    d_raw[j] = clamped ? 0.0 : d_logit * slope;
  }
  AamGradients g;
  g.loss = tr.loss;
  g.embedding = class_weights.transpose() * d_raw;
  g.class_weights = d_raw * embedding.transpose();
  return g;
}

}  // namespace detail

AamForwardResult AamForward(const Eigen::VectorXd& embedding, int label,
                            const AamConfig& config,
                            const Eigen::MatrixXd& class_weights) {
  CheckUnitNorm(embedding);
  return detail::AamForwardUnchecked(embedding, label, config, class_weights);
}

AamGradients AamBackward(const Eigen::VectorXd& embedding, int label,
                         const AamConfig& config,
                         const Eigen::MatrixXd& class_weights) {
  CheckUnitNorm(embedding);
  return detail::AamBackwardUnchecked(embedding, label, config, class_weights);
}

HeadGradients ChainThroughHead(const Eigen::VectorXd& base_embedding,
                               const ProjectionHead& head,
                               const Eigen::VectorXd& upstream) {
  if (head.weight.cols() != base_embedding.size() || upstream.size() != head.dim()) {
    throw Error(ErrorCode::kDimension, "head, input and upstream sizes disagree");
  }
  const Eigen::VectorXd activated =
      (head.weight * base_embedding + head.bias).array().tanh().matrix();
  const double norm = activated.norm();
  if (!(norm > 1e-12) || !std::isfinite(norm)) {
    throw Error(ErrorCode::kSingularGradient,
                "head output has zero norm; normalization is not differentiable");
  }
  const Eigen::VectorXd direction = activated / norm;
  // Normalization Jacobian (I - v v^T) / ||u||, then tanh' = 1 - u^2.
  const Eigen::VectorXd d_activated =
      (upstream - direction * direction.dot(upstream)) / norm;
  const Eigen::VectorXd d_pre =
      d_activated.cwiseProduct((1.0 - activated.array().square()).matrix());
  return {d_pre * base_embedding.transpose(), d_pre};
}

void AdamUpdate(std::span<double> params, std::span<const double> grads,
                std::span<double> first_moment, std::span<double> second_moment,
                int64_t step, double learning_rate, const AdamHyperparameters& hyper) {
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size()) {
    throw Error(ErrorCode::kDimension, "Adam buffers differ in size");
  }
  const double correction1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    first_moment[i] = hyper.beta1 * first_moment[i] + (1.0 - hyper.beta1) * g;
    second_moment[i] = hyper.beta2 * second_moment[i] + (1.0 - hyper.beta2) * g * g;
    const double m_hat = first_moment[i] / correction1;
    const double v_hat = second_moment[i] / correction2;
    params[i] -= learning_rate * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

ClassWeights ClassWeights::Random(int num_classes, int dim, uint64_t seed) {
  Rng rng(seed);
  ClassWeights cw;
  cw.rows.resize(num_classes, dim);
  for (int r = 0; r < num_classes; ++r) {
    for (int c = 0; c < dim; ++c) cw.rows(r, c) = rng.Normal();
  }
  cw.Renormalize();
  return cw;
}

void ClassWeights::Renormalize() {
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    const double norm = rows.row(r).norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) {
      throw Error(ErrorCode::kTrainingDivergence, "class prototype collapsed to zero");
    }
    rows.row(r) /= norm;
  }
}

TrainGradients TrainGradients::Zero(int dim, int num_classes) {
  return {Eigen::MatrixXd::Zero(dim, dim), Eigen::VectorXd::Zero(dim),
          Eigen::MatrixXd::Zero(num_classes, dim)};
}

bool TrainGradients::AllFinite() const {
  return head_weight.allFinite() && head_bias.allFinite() && class_weights.allFinite();
}

TrainState TrainState::Initial(int dim, int num_classes, uint64_t seed,
                               uint64_t base_seed) {
  TrainState s;
  s.head = ProjectionHead::Identity(dim, base_seed);
  s.class_weights = ClassWeights::Random(num_classes, dim, DeriveSeed(seed, "class-weights"));
  s.m_weight = s.v_weight = Eigen::MatrixXd::Zero(dim, dim);
  s.m_bias = s.v_bias = Eigen::VectorXd::Zero(dim);
  s.m_class = s.v_class = Eigen::MatrixXd::Zero(num_classes, dim);
  s.rng = Rng(DeriveSeed(seed, "batch-order"));
  return s;
}

namespace {

template <typename Derived>
std::span<double> Flat(Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<size_t>(m.size())};
}

template <typename Derived>
std::span<const double> Flat(const Eigen::PlainObjectBase<Derived>& m) {
  return {m.data(), static_cast<size_t>(m.size())};
}

}  // namespace

void AdamStep(TrainState& state, const TrainGradients& grads, const AamConfig& config) {
  if (!grads.AllFinite()) {
    throw Error(ErrorCode::kTrainingDivergence, "non-finite gradient at step " +
                                                    std::to_string(state.step + 1));
  }
  ++state.step;
  const double lr = config.learning_rate;
  AdamUpdate(Flat(state.head.weight), Flat(grads.head_weight), Flat(state.m_weight),
             Flat(state.v_weight), state.step, lr);
  AdamUpdate(Flat(state.head.bias), Flat(grads.head_bias), Flat(state.m_bias),
             Flat(state.v_bias), state.step, lr);
  AdamUpdate(Flat(state.class_weights.rows), Flat(grads.class_weights),
             Flat(state.m_class), Flat(state.v_class), state.step, lr);
  state.class_weights.Renormalize();
}

double BatchGradients(const std::vector<TrainingSample>& samples,
                      std::span<const size_t> batch, const TrainState& state,
                      const AamConfig& config, TrainGradients& grads) {
  double loss = 0.0;
  for (size_t idx : batch) {
    const TrainingSample& sample = samples[idx];
    const Eigen::VectorXd out = HeadForward(sample.base_embedding, state.head);
    const AamGradients aam =
        AamBackward(out, sample.label, config, state.class_weights.rows);
    const HeadGradients hg = ChainThroughHead(sample.base_embedding, state.head, aam.embedding);
    grads.head_weight += hg.weight;
    grads.head_bias += hg.bias;
    grads.class_weights += aam.class_weights;
    loss += aam.loss;
  }
  return loss;
}

TrainResult TrainHeadOnSamples(const std::vector<TrainingSample>& samples,
                               AamConfig config, uint64_t base_seed,
                               const std::string& data_hash,
                               std::vector<std::string> class_names) {
  config.Validate();
  if (samples.empty()) {
    throw Error(ErrorCode::kInsufficientClasses, "no training samples");
  }
  std::set<int> labels;
  for (const auto& s : samples) labels.insert(s.label);
  const int num_classes = std::max(*labels.rbegin() + 1, static_cast<int>(class_names.size()));
  if (labels.size() < 2) {
    throw Error(ErrorCode::kInsufficientClasses,
                "training needs at least 2 driver identities, found " +
                    std::to_string(labels.size()));
  }
  if (*labels.begin() < 0) throw Error(ErrorCode::kPrecondition, "negative label");
  config.num_classes = num_classes;
  const auto dim = static_cast<int>(samples.front().base_embedding.size());

  TrainState state = TrainState::Initial(dim, num_classes, config.seed, base_seed);
  std::vector<size_t> order(samples.size());
  TrainResult result;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    state.rng.Shuffle(order);
    double epoch_loss = 0.0;
    for (size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const size_t end = std::min(order.size(), begin + config.batch_size);
      TrainGradients grads = TrainGradients::Zero(dim, num_classes);
      const double loss =
          BatchGradients(samples, std::span<const size_t>(order).subspan(begin, end - begin),
                         state, config, grads);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kTrainingDivergence,
                    "non-finite loss in epoch " + std::to_string(epoch));
      }
      epoch_loss += loss;
      AdamStep(state, grads, config);
    }
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
    result.log.push_back({epoch, epoch_loss / static_cast<double>(samples.size()),
                          elapsed.count()});
  }

  nlohmann::json provenance{
      {"scale", config.scale},
      {"margin", config.margin},
      {"num_classes", config.num_classes},
      {"learning_rate", config.learning_rate},
      {"epochs", config.epochs},
      {"batch_size", config.batch_size},
      {"seed", config.seed},
      {"data_hash", data_hash},
      {"num_samples", samples.size()},
      {"classes", class_names}};
  state.head.provenance_json = provenance.dump();
  result.head = std::move(state.head);
  result.class_weights = std::move(state.class_weights);
  result.class_names = std::move(class_names);
  return result;
}

TrainResult TrainHead(const Manifest& train, AamConfig config,
                      const EmbeddingBackend& backend, uint64_t base_seed, int threads) {
  Manifest synthetic = train;
  synthetic.entries.clear();
  std::set<std::string> drivers;
  for (const auto& e : train.entries) {
    if (e.label.is_real()) continue;
    synthetic.entries.push_back(e);
    drivers.insert(e.label.driver);
  }
  if (drivers.size() < 2) {
    throw Error(ErrorCode::kInsufficientClasses,
                "training manifest has " + std::to_string(drivers.size()) +
                    " driver identities; need at least 2");
  }
  std::vector<std::string> class_names(drivers.begin(), drivers.end());
  std::map<std::string, int> class_index;
  for (size_t i = 0; i < class_names.size(); ++i) {
    class_index[class_names[i]] = static_cast<int>(i);
  }
  const EmbeddingTable table = EmbedManifest(synthetic, backend, threads);
  std::vector<TrainingSample> samples;
  samples.reserve(synthetic.entries.size());
  for (const auto& e : synthetic.entries) {
    samples.push_back({table.at(e.clip_id).vector, class_index.at(e.label.driver)});
  }
  return TrainHeadOnSamples(samples, config, base_seed, ManifestHash(synthetic),
                            std::move(class_names));
}

std::string TrainingLogCsv(const std::vector<EpochLog>& log) {
  std::ostringstream out;
  out << "epoch,mean_loss,wall_seconds\n"
      << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.mean_loss << ',' << e.wall_seconds << '\n';
  }
  return out.str();
}

}  // namespace vf
