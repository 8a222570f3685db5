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

#ifndef VF_EVAL_H_
#define VF_EVAL_H_

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vf/forensics.h"
#include "vf/manifest.h"

namespace vf {

struct ScoredTrial {
  std::string clip_id;
  std::string claimed_identity;
  bool positive = false;
  double score = 0.0;
};

struct RocPoint {
  double threshold = 0.0;  // +inf / -inf at the anchors
  double fpr = 0.0;
  double tpr = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // (0,0) ... (1,1)
  double auc = 0.0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  std::string scope;  // identity id or "pooled"
  size_t positives = 0;
  size_t negatives = 0;
};

// Sweeps every distinct score as an inclusive threshold, highest first.
// Equal scores form a single step, so the trapezoid AUC equals the
// Mann-Whitney statistic with half credit for ties. Throws
// kDegenerateTrials without both classes.
RocCurve ComputeRoc(std::vector<ScoredTrial> trials, const std::string& scope);

struct TaskOptions {
  // Fingerprinting only: also count synthetic clips driven by another
  // identity toward a third identity as negatives.
  bool include_unrelated_negatives = true;
};

struct IdentityResult {
  std::string identity;
  std::optional<RocCurve> roc;
  std::string error;  // set when roc is empty
  std::vector<ScoredTrial> trials;
};

struct TaskReport {
  Task task = Task::kSpoofDetection;
  std::vector<IdentityResult> identities;
  RocCurve pooled;
  double mean_auc = 0.0;
  double mean_eer = 0.0;
  size_t scored_identities = 0;
};

// Builds the per-identity trials for `task`. Enrollment clips of each
// profile are excluded.
std::vector<ScoredTrial> BuildTrials(const IdentityProfile& profile, const Manifest& manifest,
                                     Task task, const EmbeddingTable& embeddings,
                                     const TaskOptions& options = {});

// Every identity of the manifest must have a profile (kMissingProfile).
// Identities whose trials are single-class are reported with an error and
// excluded from the means.
TaskReport EvaluateTask(const std::map<std::string, IdentityProfile>& profiles,
                        const Manifest& manifest, Task task,
                        const EmbeddingTable& embeddings, const TaskOptions& options = {});

inline constexpr int kReportSchemaVersion = 1;

std::string ReportJson(const TaskReport& report, const std::string& config_json);
// threshold,fpr,tpr rows including both anchors.
std::string RocCsv(const RocCurve& curve);
std::string RocSvg(const RocCurve& curve);

// report.json plus roc_<scope>.csv / roc_<scope>.svg for every curve.
void EmitReport(const TaskReport& report, const std::filesystem::path& out_dir,
                const std::string& config_json);

}  // namespace vf

#endif  // VF_EVAL_H_
