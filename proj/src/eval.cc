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

#include "vf/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vf/common.h"

namespace vf {

using nlohmann::json;

RocCurve ComputeRoc(std::vector<ScoredTrial> trials, const std::string& scope) {
  RocCurve curve;
  curve.scope = scope;
  for (const auto& t : trials) {
    if (!std::isfinite(t.score)) {
      throw Error(ErrorCode::kPrecondition, "non-finite score for clip '" + t.clip_id + "'");
    }
    (t.positive ? curve.positives : curve.negatives) += 1;
  }
  if (curve.positives == 0 || curve.negatives == 0) {
    throw Error(ErrorCode::kDegenerateTrials,
                "'" + scope + "' has " + std::to_string(curve.positives) + " positive and " +
                    std::to_string(curve.negatives) + " negative trials");
  }
  std::sort(trials.begin(), trials.end(), [](const ScoredTrial& a, const ScoredTrial& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.clip_id < b.clip_id;
  });

  const double p = static_cast<double>(curve.positives);
  const double n = static_cast<double>(curve.negatives);
  curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  size_t tp = 0, fp = 0;
  for (size_t i = 0; i < trials.size();) {
    const double threshold = trials[i].score;
    for (; i < trials.size() && trials[i].score == threshold; ++i) {
      (trials[i].positive ? tp : fp) += 1;
    }
    curve.points.push_back({threshold, fp / n, tp / p});
  }
  curve.points.push_back({-std::numeric_limits<double>::infinity(), 1.0, 1.0});

  double auc = 0.0;
  for (size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  curve.auc = auc;

  // fpr + tpr - 1 is non-decreasing along the curve; EER is its zero.
  for (size_t i = 1; i < curve.points.size(); ++i) {
    const auto& a = curve.points[i - 1];
    const auto& b = curve.points[i];
    const double da = a.fpr + a.tpr - 1.0;
    const double db = b.fpr + b.tpr - 1.0;
    if (db < 0.0) continue;
    const double alpha = db == da ? 1.0 : -da / (db - da);
    curve.eer = a.fpr + alpha * (b.fpr - a.fpr);
    if (std::isinf(a.threshold)) {
      curve.eer_threshold = b.threshold;
    } else if (std::isinf(b.threshold)) {
      curve.eer_threshold = a.threshold;
    } else {
      curve.eer_threshold = a.threshold + alpha * (b.threshold - a.threshold);
    }
    break;
  }
  return curve;
}

std::vector<ScoredTrial> BuildTrials(const IdentityProfile& profile, const Manifest& manifest,
                                     Task task, const EmbeddingTable& embeddings,
                                     const TaskOptions& options) {
  const std::set<std::string> enrolled(profile.clip_ids.begin(), profile.clip_ids.end());
  const std::string& id = profile.identity;
  std::vector<ScoredTrial> trials;
  for (const auto& e : manifest.entries) {
    if (enrolled.count(e.clip_id)) continue;
    const auto& l = e.label;
    std::optional<bool> positive;
    if (task == Task::kSpoofDetection) {
      if (l.target == id) positive = l.is_real();
    } else if (!l.is_real()) {
      if (l.driver == id) {
        positive = true;
      } else if (l.target == id || options.include_unrelated_negatives) {
        positive = false;
      }
    }
    if (!positive) continue;
    const auto it = embeddings.find(e.clip_id);
    if (it == embeddings.end()) {
      throw Error(ErrorCode::kMissingArtifact, "no embedding for clip '" + e.clip_id + "'");
    }
    trials.push_back({e.clip_id, id, *positive, ScoreEmbedding(profile, it->second)});
  }
  return trials;
}

TaskReport EvaluateTask(const std::map<std::string, IdentityProfile>& profiles,
                        const Manifest& manifest, Task task,
                        const EmbeddingTable& embeddings, const TaskOptions& options) {
  TaskReport report;
  report.task = task;
  std::vector<ScoredTrial> pooled;
  double auc_sum = 0.0, eer_sum = 0.0;
  for (const auto& identity : manifest.Identities()) {
    const auto it = profiles.find(identity);
    if (it == profiles.end()) {
      throw Error(ErrorCode::kMissingProfile, "no profile for identity '" + identity + "'");
    }
    IdentityResult result;
    result.identity = identity;
    result.trials = BuildTrials(it->second, manifest, task, embeddings, options);
    try {
      result.roc = ComputeRoc(result.trials, identity);
      auc_sum += result.roc->auc;
      eer_sum += result.roc->eer;
      ++report.scored_identities;
      pooled.insert(pooled.end(), result.trials.begin(), result.trials.end());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateTrials) throw;
      result.error = e.what();
    }
    report.identities.push_back(std::move(result));
  }
  if (report.scored_identities == 0) {
    throw Error(ErrorCode::kDegenerateTrials, "no identity produced a usable trial set");
  }
  report.pooled = ComputeRoc(std::move(pooled), "pooled");
  report.mean_auc = auc_sum / static_cast<double>(report.scored_identities);
  report.mean_eer = eer_sum / static_cast<double>(report.scored_identities);
  return report;
}

namespace {

json CurveSummary(const RocCurve& c) {
  return json{{"auc", c.auc},
              {"eer", c.eer},
              {"eer_threshold", c.eer_threshold},
              {"positives", c.positives},
              {"negatives", c.negatives}};
}

std::string Num(double v) {
  std::ostringstream ss;
  ss << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return ss.str();
}

}  // namespace

std::string ReportJson(const TaskReport& report, const std::string& config_json) {
  json doc;
  doc["schema_version"] = kReportSchemaVersion;
  doc["task"] = TaskName(report.task);
  doc["config"] = json::parse(config_json);
  doc["mean_auc"] = report.mean_auc;
  doc["mean_eer"] = report.mean_eer;
  doc["scored_identities"] = report.scored_identities;
  doc["pooled"] = CurveSummary(report.pooled);
  doc["identities"] = json::array();
  for (const auto& r : report.identities) {
    json entry = r.roc ? CurveSummary(*r.roc) : json{{"error", r.error}};
    entry["identity"] = r.identity;
    doc["identities"].push_back(std::move(entry));
  }
  return doc.dump(2) + "\n";
}

std::string RocCsv(const RocCurve& curve) {
  std::string out = "threshold,fpr,tpr\n";
  for (const auto& p : curve.points) {
    const std::string thr = std::isinf(p.threshold) ? (p.threshold > 0 ? "inf" : "-inf")
                                                     : Num(p.threshold);
    out += thr + "," + Num(p.fpr) + "," + Num(p.tpr) + "\n";
  }
  return out;
}

std::string RocSvg(const RocCurve& curve) {
  constexpr int kSize = 640;
  constexpr int kMargin = 40;
  constexpr int kPlot = kSize - 2 * kMargin;
  auto x = [](double fpr) { return kMargin + fpr * kPlot; };
  auto y = [](double tpr) { return kMargin + (1.0 - tpr) * kPlot; };
  std::ostringstream s;
  s << std::fixed << std::setprecision(2);
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize << "\" height=\""
    << kSize << "\" viewBox=\"0 0 " << kSize << " " << kSize << "\">\n"
    << "  <rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kPlot
    << "\" height=\"" << kPlot << "\" fill=\"none\" stroke=\"black\"/>\n"
    << "  <line x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(1) << "\" y2=\""
    << y(1) << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n"
    << "  <polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (size_t i = 0; i < curve.points.size(); ++i) {
    s << (i ? " " : "") << x(curve.points[i].fpr) << "," << y(curve.points[i].tpr);
  }
  s << "\"/>\n"
    << "  <text x=\"" << kSize / 2 << "\" y=\"" << kSize - 10
    << "\" text-anchor=\"middle\">false positive rate</text>\n"
    << "  <text x=\"12\" y=\"" << kSize / 2 << "\" transform=\"rotate(-90 12 " << kSize / 2
    << ")\" text-anchor=\"middle\">true positive rate</text>\n"
    << "  <text x=\"" << kSize / 2 << "\" y=\"25\" text-anchor=\"middle\">" << curve.scope
    << " AUC=" << std::setprecision(4) << curve.auc << "</text>\n"
    << "</svg>\n";
  return s.str();
}

void EmitReport(const TaskReport& report, const std::filesystem::path& out_dir,
                const std::string& config_json) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());
  WriteTextFile(out_dir / "report.json", ReportJson(report, config_json));
  auto emit = [&out_dir](const RocCurve& c) {
    WriteTextFile(out_dir / ("roc_" + c.scope + ".csv"), RocCsv(c));
    WriteTextFile(out_dir / ("roc_" + c.scope + ".svg"), RocSvg(c));
  };
  for (const auto& r : report.identities) {
    if (r.roc) emit(*r.roc);
  }
  emit(report.pooled);
}

}  // namespace vf
