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


#include "cli.h"

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vf/audio_io.h"
#include "vf/corpus.h"
#include "vf/embedder.h"
#include "vf/eval.h"
#include "vf/forensics.h"
#include "vf/manifest.h"
#include "vf/trainer.h"

namespace vf::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  uint64_t seed = 1;
  bool json = false;
  int threads = 0;
  std::string data_dir = ".";
  uint64_t encoder_seed = 1;
  std::string embeddings;  // optional precomputed NDJSON table
};

struct GenCorpusArgs {
  int identities = 16;
  int clips_per_pair = 6;
  int real_per_identity = 6;
  double duration_s = 4.0;
  int test_identities = 4;
  double val_fraction = 0.05;
  double jitter_scale = 0.2;
  double formant_perturbation = 0.02;
  double noise_floor = 1e-2;
  std::string out;
};

struct EnrollArgs {
  std::string manifest;
  std::string policy = "real-enrollment";
  std::vector<std::string> identities;
  std::vector<std::string> wavs;
  std::string head;
  double max_seconds = 120.0;
  double holdout = 0.5;
  std::string out;
};

struct ScoreArgs {
  std::string identity;
  std::string clip;
  std::string profiles;
  std::string head;
  std::optional<double> threshold;
  std::string calibration;  // report.json supplying per-identity EER thresholds
};

struct TrainArgs {
  std::string train;
  int epochs = 10;
  double learning_rate = 1e-3;
  int batch_size = 32;
  double scale = 30.0;
  double margin = 0.2;
  std::string out;
  std::string log;
};

struct EvalArgs {
  std::string task = "spoof-detection";
  std::string manifest;
  std::string profiles;
  std::string head;
  bool no_unrelated = false;
  std::string out;
};

struct ReportArgs {
  std::string report;
};

fs::path Under(const Globals& g, const std::string& given, const std::string& fallback) {
  return given.empty() ? fs::path(g.data_dir) / fallback : fs::path(given);
}

// Flags and file overlay as resolved by the parser, keyed by long name.
json ResolvedOptions(const CLI::App& app) {
  json out = json::object();
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_single_name();
    if (name.empty() || name == "help" || name == "config") continue;
    const auto& results = opt->results();
    if (opt->count() == 0) {
      out[name] = opt->get_default_str();
    } else if (results.size() == 1) {
      out[name] = results.front();
    } else {
      out[name] = results;
    }
  }
  return out;
}

json ConfigEcho(const CLI::App& root, const CLI::App& sub) {
  return json{{"command", sub.get_name()},
              {"global", ResolvedOptions(root)},
              {"options", ResolvedOptions(sub)}};
}

std::shared_ptr<const EmbeddingBackend> MakeBackend(const Globals& g) {
  if (!g.embeddings.empty()) {
    return std::make_shared<PrecomputedBackend>(PrecomputedBackend::Load(g.embeddings));
  }
  BaseEncoderConfig cfg;
  cfg.seed = g.encoder_seed;
  return std::make_shared<StatsPoolingBackend>(cfg);
}

std::optional<ProjectionHead> LoadHeadIfGiven(const Globals& g, const std::string& path) {
  if (path.empty()) return std::nullopt;
  ProjectionHead head = LoadHead(path);
  if (g.embeddings.empty() && head.base_seed != g.encoder_seed) {
    throw Error(ErrorCode::kConfiguration,
                "head " + path + " was trained on base encoder seed " +
                    std::to_string(head.base_seed) + ", not " +
                    std::to_string(g.encoder_seed));
  }
  return head;
}

Manifest Subset(const Manifest& m, std::vector<ManifestEntry> entries) {
  Manifest out = m;
  out.entries = std::move(entries);
  return out;
}

void Print(std::ostream& out, const Globals& g, const json& doc, const std::string& human) {
  if (g.json) {
    out << doc.dump() << "\n";
  } else {
    out << human;
  }
}

std::string Fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

int RunGenCorpus(const Globals& g, const GenCorpusArgs& a, const json& echo,
                 std::ostream& out) {
  const fs::path dir = Under(g, a.out, "corpus");
  CorpusConfig cfg;
  cfg.clips_per_pair = a.clips_per_pair;
  cfg.real_per_identity = a.real_per_identity;
  cfg.duration_s = a.duration_s;
  cfg.seed = g.seed;
  cfg.synthesis.synthetic_jitter_scale = a.jitter_scale;
  cfg.synthesis.formant_perturbation = a.formant_perturbation;
  cfg.synthesis.noise_floor = a.noise_floor;

  const auto identities = SampleIdentities(a.identities, g.seed);
  const Manifest manifest = GenerateCorpus(identities, cfg, dir, g.threads);
  const Splits splits = MakeSplits(manifest, a.test_identities, a.val_fraction, g.seed);
  WriteManifest(splits.train, dir / "train.jsonl");
  WriteManifest(splits.val, dir / "val.jsonl");
  WriteManifest(splits.test, dir / "test.jsonl");
  WriteTextFile(dir / "run_config.json", echo.dump(2) + "\n");

  const ManifestCounts counts = CountEntries(manifest);
  const auto n = static_cast<int64_t>(identities.size());
  const std::string hash = ManifestHash(manifest);
  json doc{{"manifest", (dir / "manifest.jsonl").string()},
           {"entries", manifest.entries.size()},
           {"real_clips", counts.real},
           {"self_clips", counts.self},
           {"cross_clips", counts.cross},
           {"self_pairs", n},
           {"cross_pairs", n * (n - 1)},
           {"train", splits.train.entries.size()},
           {"val", splits.val.entries.size()},
           {"test", splits.test.entries.size()},
           {"test_identities", splits.spec.test_identities},
           {"manifest_hash", hash}};
  std::ostringstream h;
  h << "wrote " << manifest.entries.size() << " clips to " << dir.string() << "\n"
    << "real " << counts.real << "\n"
    << "self " << n << " pairs, " << counts.self << " clips\n"
    << "cross " << n * (n - 1) << " pairs, " << counts.cross << " clips\n"
    << "splits train " << splits.train.entries.size() << " val "
    << splits.val.entries.size() << " test " << splits.test.entries.size() << "\n"
    << "manifest_hash " << hash << "\n";
  Print(out, g, doc, h.str());
  return kExitOk;
}

int RunEnroll(const Globals& g, const EnrollArgs& a, const json& echo, std::ostream& out) {
  const EnrollmentPolicy policy = ParsePolicy(a.policy);
  const fs::path profile_dir = Under(g, a.out, "profiles");
  const Embedder embedder(MakeBackend(g), LoadHeadIfGiven(g, a.head));

  std::vector<IdentityProfile> made;
  if (!a.wavs.empty()) {
    if (a.identities.size() != 1) {
      throw Error(ErrorCode::kConfiguration, "--wav enrollment needs exactly one --identity");
    }
    std::vector<EnrollmentClip> clips;
    for (const auto& path : a.wavs) clips.push_back({LoadCanonical(path), std::nullopt});
    made.push_back(Enroll(a.identities.front(), clips, policy, embedder));
  } else {
    const Manifest manifest = ReadManifest(Under(g, a.manifest, "corpus/manifest.jsonl"));
    EnrollmentSelection sel;
    sel.max_seconds = a.max_seconds;
    sel.holdout_fraction = a.holdout;
    sel.seed = g.seed;
    std::set<std::string> wanted(a.identities.begin(), a.identities.end());
    if (wanted.empty()) wanted = manifest.Identities();
    std::map<std::string, std::vector<ManifestEntry>> chosen;
    std::vector<ManifestEntry> needed;
    for (const auto& id : wanted) {
      chosen[id] = SelectEnrollment(manifest, id, policy, sel);
      needed.insert(needed.end(), chosen[id].begin(), chosen[id].end());
    }
    const EmbeddingTable table = ApplyEmbedder(
        EmbedManifest(Subset(manifest, needed), embedder.backend(), g.threads), embedder);
    for (const auto& [id, entries] : chosen) {
      std::vector<EnrollmentItem> items;
      for (const auto& e : entries) {
        items.push_back({e.clip_id, e.label, e.duration_s, table.at(e.clip_id)});
      }
      made.push_back(EnrollEmbeddings(id, items, policy));
    }
  }

  ProfileStore store;
  json list = json::array();
  std::ostringstream h;
  for (auto& p : made) {
    list.push_back({{"identity", p.identity},
                    {"clips", p.clip_ids.size()},
                    {"seconds", p.total_enrollment_seconds}});
    h << "enrolled " << p.identity << " from " << p.clip_ids.size() << " clips ("
      << Fixed(p.total_enrollment_seconds, 1) << " s)\n";
    store.Put(std::move(p));
  }
  store.SaveTo(profile_dir);
  WriteTextFile(profile_dir / "run_config.json", echo.dump(2) + "\n");
  json doc{{"profiles", list},
           {"policy", PolicyName(policy)},
           {"head_version", embedder.head_version()},
           {"out", profile_dir.string()}};
  h << "policy " << PolicyName(policy) << ", head " << embedder.head_version() << ", wrote "
    << profile_dir.string() << "\n";
  Print(out, g, doc, h.str());
  return kExitOk;
}

double ThresholdFor(const ScoreArgs& a) {
  if (a.threshold) return *a.threshold;
  if (a.calibration.empty()) {
    throw Error(ErrorCode::kConfiguration, "no threshold: pass --threshold or --calibration");
  }
  const json report = json::parse(ReadTextFile(a.calibration));
  for (const auto& entry : report.at("identities")) {
    if (entry.at("identity") == a.identity && entry.contains("eer_threshold")) {
      return entry.at("eer_threshold").get<double>();
    }
  }
  return report.at("pooled").at("eer_threshold").get<double>();
}

int RunScore(const Globals& g, const ScoreArgs& a, Task task, std::ostream& out) {
  // Fingerprinting is defined on the fine-tuned space; insist on a head file.
  const std::string head_path =
      task == Task::kFingerprinting ? Under(g, a.head, "heads/head.json").string() : a.head;
  const Embedder embedder(MakeBackend(g), LoadHeadIfGiven(g, head_path));
  const fs::path dir = Under(g, a.profiles, "profiles");
  const IdentityProfile profile = LoadProfile(dir / (a.identity + ".profile.json"));
  const double threshold = ThresholdFor(a);

  AudioClip clip = LoadCanonical(a.clip);
  clip.source_id = fs::path(a.clip).stem().string();
  const double score = Score(profile, clip, embedder);
  const Verdict v = Decide(score, threshold, task);

  json doc{{"task", TaskName(task)},
           {"identity", a.identity},
           {"clip", a.clip},
           {"score", v.score},
           {"threshold", v.threshold},
           {"match", v.match},
           {"decision", v.Label()},
           {"head_version", embedder.head_version()}};
  std::ostringstream h;
  h << "score " << Fixed(v.score, 6) << "\nthreshold " << Fixed(v.threshold, 6)
    << "\ndecision " << v.Label() << "\n";
  Print(out, g, doc, h.str());
  return v.match ? kExitOk : kExitNoMatch;
}

int RunTrain(const Globals& g, const TrainArgs& a, std::ostream& out) {
  const Manifest train = ReadManifest(Under(g, a.train, "corpus/train.jsonl"));
  AamConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.learning_rate;
  cfg.batch_size = a.batch_size;
  cfg.scale = a.scale;
  cfg.margin = a.margin;
  cfg.seed = g.seed;
  const auto backend = MakeBackend(g);
  const TrainResult result = TrainHead(train, cfg, *backend, g.encoder_seed, g.threads);

  const fs::path head_path = Under(g, a.out, "heads/head.json");
  const fs::path log_path =
      a.log.empty() ? head_path.parent_path() / "train_log.csv" : fs::path(a.log);
  SaveHead(result.head, head_path);
  WriteTextFile(log_path, TrainingLogCsv(result.log));

  json losses = json::array();
  std::ostringstream h;
  for (const auto& e : result.log) {
    losses.push_back(e.mean_loss);
    h << "epoch " << e.epoch << " loss " << Fixed(e.mean_loss, 6) << "\n";
  }
  const std::string version = result.head.Version();
  h << "classes " << result.class_names.size() << "\nhead " << head_path.string() << " ("
    << version << ")\n";
  json doc{{"head", head_path.string()},
           {"head_version", version},
           {"classes", result.class_names.size()},
           {"epoch_loss", losses}};
  Print(out, g, doc, h.str());
  return kExitOk;
}

int RunEval(const Globals& g, const EvalArgs& a, const json& echo, std::ostream& out) {
  const Task task = ParseTask(a.task);
  const Manifest manifest = ReadManifest(Under(g, a.manifest, "corpus/test.jsonl"));
  const Embedder embedder(MakeBackend(g), LoadHeadIfGiven(g, a.head));
  const ProfileStore store = ProfileStore::LoadFrom(Under(g, a.profiles, "profiles"));
  const EmbeddingTable table =
      ApplyEmbedder(EmbedManifest(manifest, embedder.backend(), g.threads), embedder);

  TaskOptions options;
  options.include_unrelated_negatives = !a.no_unrelated;
  const TaskReport report = EvaluateTask(store.Snapshot(), manifest, task, table, options);
  const fs::path dir = Under(g, a.out, "reports/" + std::string(TaskName(task)));
  EmitReport(report, dir, echo.dump());

  json doc{{"task", TaskName(task)},
           {"mean_auc", report.mean_auc},
           {"mean_eer", report.mean_eer},
           {"pooled_auc", report.pooled.auc},
           {"scored_identities", report.scored_identities},
           {"identities", report.identities.size()},
           {"report", (dir / "report.json").string()}};
  std::ostringstream h;
  h << TaskName(task) << ": mean AUC " << Fixed(report.mean_auc) << ", mean EER "
    << Fixed(report.mean_eer) << ", pooled AUC " << Fixed(report.pooled.auc) << " over "
    << report.scored_identities << "/" << report.identities.size() << " identities\n"
    << "report " << (dir / "report.json").string() << "\n";
  Print(out, g, doc, h.str());
  return kExitOk;
}

int RunReport(const Globals& g, const ReportArgs& a, std::ostream& out) {
  const fs::path path = Under(g, a.report, "reports/spoof-detection/report.json");
  json report;
  try {
    report = json::parse(ReadTextFile(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
  json doc{{"task", report.at("task")},
           {"mean_auc", report.at("mean_auc")},
           {"mean_eer", report.at("mean_eer")},
           {"pooled_auc", report.at("pooled").at("auc")},
           {"identities", json::array()}};
  std::ostringstream h;
  h << "task " << report.at("task").get<std::string>() << "\n"
    << "mean AUC " << Fixed(report.at("mean_auc").get<double>()) << ", mean EER "
    << Fixed(report.at("mean_eer").get<double>()) << ", pooled AUC "
    << Fixed(report.at("pooled").at("auc").get<double>()) << "\n";
  h << std::left << std::setw(12) << "identity" << std::setw(10) << "auc" << std::setw(10)
    << "eer" << "eer_threshold\n";
  for (const auto& e : report.at("identities")) {
    const std::string id = e.at("identity").get<std::string>();
    if (e.contains("error")) {
      doc["identities"].push_back({{"identity", id}, {"error", e.at("error")}});
      h << std::setw(12) << id << "error: " << e.at("error").get<std::string>() << "\n";
      continue;
    }
    doc["identities"].push_back(
        {{"identity", id}, {"auc", e.at("auc")}, {"eer", e.at("eer")}});
    h << std::setw(12) << id << std::setw(10) << Fixed(e.at("auc").get<double>())
      << std::setw(10) << Fixed(e.at("eer").get<double>())
      << Fixed(e.at("eer_threshold").get<double>()) << "\n";
  }
  Print(out, g, doc, h.str());
  return kExitOk;
}

}  // namespace

int ExitCodeFor(ErrorCode code) { return 10 + static_cast<int>(code); }

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Speaker-embedding audio forensics: spoof detection and avatar fingerprinting",
               "vf"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML/INI file with option defaults (flags win)");
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--seed", g.seed, "Seed for corpus, splits, enrollment and training");
  app.add_flag("--json", g.json, "One-line JSON on stdout");
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--data-dir", g.data_dir, "Default artifact root")->envname("VF_DATA_DIR");
  app.add_option("--encoder-seed", g.encoder_seed, "Seed of the frozen base projection");
  app.add_option("--embeddings", g.embeddings,
                 "Precomputed base embeddings (NDJSON) instead of the built-in encoder");

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "Synthesize a seeded reenactment corpus");
  gen_cmd->add_option("--identities", gen.identities, "Number of identities");
  gen_cmd->add_option("--clips-per-pair", gen.clips_per_pair,
                      "Synthetic clips per ordered (driver, target)");
  gen_cmd->add_option("--real-per-identity", gen.real_per_identity, "Real clips per identity");
  gen_cmd->add_option("--duration", gen.duration_s, "Clip length in seconds");
  gen_cmd->add_option("--test-identities", gen.test_identities, "Held-out identities");
  gen_cmd->add_option("--val-fraction", gen.val_fraction, "Validation share of the rest");
  gen_cmd->add_option("--jitter-scale", gen.jitter_scale, "Synthetic jitter multiplier");
  gen_cmd->add_option("--formant-perturbation", gen.formant_perturbation,
                      "Relative formant sigma for synthetic clips");
  gen_cmd->add_option("--noise-floor", gen.noise_floor, "Additive noise floor");
  gen_cmd->add_option("--out", gen.out, "Corpus directory [<data-dir>/corpus]");

  EnrollArgs enroll;
  auto* enroll_cmd = app.add_subcommand("enroll", "Build identity profiles");
  enroll_cmd->add_option("--manifest", enroll.manifest,
                         "Manifest to enroll from [<data-dir>/corpus/manifest.jsonl]");
  enroll_cmd->add_option("--policy", enroll.policy, "Enrollment policy")
      ->check(CLI::IsMember({"real-enrollment", "mixed-driver", "self-reenactment-only"}));
  enroll_cmd->add_option("--identity", enroll.identities, "Identities (default: all)");
  enroll_cmd->add_option("--wav", enroll.wavs, "Enroll from these files instead");
  enroll_cmd->add_option("--head", enroll.head, "Projection head file");
  enroll_cmd->add_option("--max-seconds", enroll.max_seconds, "Enrollment audio cap");
  enroll_cmd->add_option("--holdout", enroll.holdout, "Share of eligible clips kept out");
  enroll_cmd->add_option("--out", enroll.out, "Profile directory [<data-dir>/profiles]");

  ScoreArgs detect, fingerprint;
  auto add_score = [](CLI::App* cmd, ScoreArgs& a, const std::string& head_help) {
    cmd->add_option("--identity", a.identity, "Claimed identity")->required();
    cmd->add_option("--clip", a.clip, "Audio file")->required();
    cmd->add_option("--profiles", a.profiles, "Profile directory [<data-dir>/profiles]");
    cmd->add_option("--head", a.head, head_help);
    cmd->add_option("--threshold", a.threshold, "Decision threshold on cosine score");
    cmd->add_option("--calibration", a.calibration, "report.json with EER thresholds");
  };
  auto* detect_cmd = app.add_subcommand("detect", "Real vs synthetic against a profile");
  add_score(detect_cmd, detect, "Projection head file");
  auto* fp_cmd =
      app.add_subcommand("fingerprint", "Is a synthetic clip driven by the claimed identity");
  add_score(fp_cmd, fingerprint, "Projection head file [<data-dir>/heads/head.json]");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train-head", "Fine-tune the projection head");
  train_cmd->add_option("--train", train.train,
                        "Training manifest [<data-dir>/corpus/train.jsonl]");
  train_cmd->add_option("--epochs", train.epochs, "Epochs");
  train_cmd->add_option("--lr", train.learning_rate, "Adam learning rate");
  train_cmd->add_option("--batch-size", train.batch_size, "Mini-batch size");
  train_cmd->add_option("--scale", train.scale, "Logit scale s");
  train_cmd->add_option("--margin", train.margin, "Angular margin m (radians)");
  train_cmd->add_option("--out", train.out, "Head file [<data-dir>/heads/head.json]");
  train_cmd->add_option("--log", train.log, "Per-epoch CSV [next to the head]");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a test manifest and write ROC reports");
  eval_cmd->add_option("--task", eval.task, "Task")
      ->check(CLI::IsMember({"spoof-detection", "fingerprinting"}));
  eval_cmd->add_option("--manifest", eval.manifest,
                       "Test manifest [<data-dir>/corpus/test.jsonl]");
  eval_cmd->add_option("--profiles", eval.profiles, "Profile directory [<data-dir>/profiles]");
  eval_cmd->add_option("--head", eval.head, "Projection head file");
  eval_cmd->add_flag("--no-unrelated-negatives", eval.no_unrelated,
                     "Fingerprinting: only clips targeted at the enrollee are negatives");
  eval_cmd->add_option("--out", eval.out, "Report directory [<data-dir>/reports/<task>]");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Summarize a report.json");
  report_cmd->add_option("--report", report.report,
                         "Report [<data-dir>/reports/spoof-detection/report.json]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "vf: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return RunGenCorpus(g, gen, ConfigEcho(app, *gen_cmd), out);
    if (enroll_cmd->parsed()) return RunEnroll(g, enroll, ConfigEcho(app, *enroll_cmd), out);
    if (detect_cmd->parsed()) return RunScore(g, detect, Task::kSpoofDetection, out);
    if (fp_cmd->parsed()) return RunScore(g, fingerprint, Task::kFingerprinting, out);
    if (train_cmd->parsed()) return RunTrain(g, train, out);
    if (eval_cmd->parsed()) return RunEval(g, eval, ConfigEcho(app, *eval_cmd), out);
    if (report_cmd->parsed()) return RunReport(g, report, out);
  } catch (const Error& e) {
    err << "vf: " << ErrorCodeName(e.code()) << ": " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "vf: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}

int RunCli(int argc, const char* const* argv) {
  return RunCli(argc, argv, std::cout, std::cerr);
}

}  // namespace vf::cli
