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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vf/common.h"

namespace vf {
namespace {

namespace fs = std::filesystem;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no vf::Error thrown";
  return ErrorCode::kFormat;
}

Eigen::VectorXd Unit(int d, std::mt19937_64& gen) {
  std::normal_distribution<double> n;
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = n(gen);
  return v / v.norm();
}

ReenactmentLabel Label(const std::string& driver, const std::string& target, bool real,
                       const std::string& id = "c") {
  ReenactmentLabel l;
  l.driver = driver;
  l.target = target;
  l.authenticity = real ? Authenticity::kReal : Authenticity::kSynthetic;
  l.clip_id = id;
  return l;
}

EnrollmentItem Item(const std::string& id, const ReenactmentLabel& label, Eigen::VectorXd v,
                    double seconds = 4.0) {
  return {id, label, seconds, SpeakerEmbedding{std::move(v)}};
}

TEST(Policy, Conformance) {
  const auto real = Label("a", "a", true);
  const auto self = Label("a", "a", false);
  const auto cross_out = Label("a", "b", false);
  const auto cross_in = Label("b", "a", false);
  using P = EnrollmentPolicy;
  EXPECT_TRUE(ConformsToPolicy("a", P::kRealEnrollment, real));
  EXPECT_TRUE(ConformsToPolicy("a", P::kRealEnrollment, std::nullopt));
  EXPECT_FALSE(ConformsToPolicy("a", P::kRealEnrollment, self));
  EXPECT_TRUE(ConformsToPolicy("a", P::kMixedDriver, self));
  EXPECT_TRUE(ConformsToPolicy("a", P::kMixedDriver, cross_out));
  EXPECT_FALSE(ConformsToPolicy("a", P::kMixedDriver, cross_in));
  EXPECT_FALSE(ConformsToPolicy("a", P::kMixedDriver, real));
  EXPECT_FALSE(ConformsToPolicy("a", P::kMixedDriver, std::nullopt));
  EXPECT_TRUE(ConformsToPolicy("a", P::kSelfReenactmentOnly, self));
  EXPECT_FALSE(ConformsToPolicy("a", P::kSelfReenactmentOnly, cross_out));
  EXPECT_FALSE(ConformsToPolicy("a", P::kSelfReenactmentOnly, real));
}

TEST(Policy, NamesRoundTrip) {
  for (auto p : {EnrollmentPolicy::kRealEnrollment, EnrollmentPolicy::kMixedDriver,
                 EnrollmentPolicy::kSelfReenactmentOnly}) {
    EXPECT_EQ(ParsePolicy(PolicyName(p)), p);
  }
  EXPECT_EQ(PolicyName(EnrollmentPolicy::kSelfReenactmentOnly), "self-reenactment-only");
  EXPECT_EQ(CodeOf([] { ParsePolicy("anything"); }), ErrorCode::kConfiguration);
  EXPECT_EQ(ParseTask(TaskName(Task::kFingerprinting)), Task::kFingerprinting);
}

TEST(Enroll, SingleClipProfileIsThatEmbedding) {
  std::mt19937_64 gen(1);
  const Eigen::VectorXd v = Unit(16, gen);
  const std::vector<EnrollmentItem> items{Item("x", Label("a", "a", true), v, 3.5)};
  const IdentityProfile p = EnrollEmbeddings("a", items, EnrollmentPolicy::kRealEnrollment);
  EXPECT_LT((p.mean_embedding - v).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_EQ(p.clip_ids, std::vector<std::string>{"x"});
  EXPECT_DOUBLE_EQ(p.total_enrollment_seconds, 3.5);
  EXPECT_EQ(p.head_version, "base");
}

TEST(Enroll, IdenticalEmbeddingsAreIdempotent) {
  std::mt19937_64 gen(2);
  const Eigen::VectorXd v = Unit(16, gen);
  const std::vector<EnrollmentItem> items{Item("x", Label("a", "a", true), v),
                                          Item("y", Label("a", "a", true), v)};
  const IdentityProfile p = EnrollEmbeddings("a", items, EnrollmentPolicy::kRealEnrollment);
  EXPECT_LT((p.mean_embedding - v).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Enroll, MeanIsNormalizedAverage) {
  std::mt19937_64 gen(3);
  std::vector<EnrollmentItem> items;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(12);
  for (int i = 0; i < 5; ++i) {
    const Eigen::VectorXd v = Unit(12, gen);
    sum += v;
    items.push_back(Item("c" + std::to_string(i), Label("a", "b", false), v));
  }
  const IdentityProfile p = EnrollEmbeddings("a", items, EnrollmentPolicy::kMixedDriver);
  EXPECT_LT((p.mean_embedding - sum / sum.norm()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(p.mean_embedding.norm(), 1.0, 1e-12);
}

TEST(Enroll, PermutationInvariantBitForBit) {
  std::mt19937_64 gen(4);
  std::vector<EnrollmentItem> items;
  for (int i = 0; i < 9; ++i) {
    items.push_back(Item("c" + std::to_string(i), Label("a", "a", true), Unit(32, gen)));
  }
  const IdentityProfile a = EnrollEmbeddings("a", items, EnrollmentPolicy::kRealEnrollment);
  for (int trial = 0; trial < 5; ++trial) {
    std::shuffle(items.begin(), items.end(), gen);
    const IdentityProfile b = EnrollEmbeddings("a", items, EnrollmentPolicy::kRealEnrollment);
    EXPECT_TRUE((a.mean_embedding.array() == b.mean_embedding.array()).all());
  }
}

TEST(Enroll, EmptyIsError) {
  EXPECT_EQ(CodeOf([] { EnrollEmbeddings("a", {}, EnrollmentPolicy::kRealEnrollment); }),
            ErrorCode::kEnrollmentEmpty);
}

TEST(Enroll, SelfOnlyRejectsCrossClip) {
  std::mt19937_64 gen(5);
  const std::vector<EnrollmentItem> items{Item("x", Label("a", "a", false), Unit(8, gen)),
                                          Item("y", Label("a", "b", false), Unit(8, gen))};
  EXPECT_EQ(CodeOf([&] {
              EnrollEmbeddings("a", items, EnrollmentPolicy::kSelfReenactmentOnly);
            }),
            ErrorCode::kPolicyViolation);
}

TEST(Enroll, PolicyFilteringProperty) {
  // Random labeled sets: enrollment succeeds iff every member conforms.
  std::mt19937_64 gen(6);
  const std::vector<std::string> ids{"a", "b", "c"};
  std::uniform_int_distribution<int> pick(0, 2), coin(0, 1), size(1, 6);
  const EnrollmentPolicy policies[] = {EnrollmentPolicy::kRealEnrollment,
                                       EnrollmentPolicy::kMixedDriver,
                                       EnrollmentPolicy::kSelfReenactmentOnly};
  for (int trial = 0; trial < 500; ++trial) {
    const EnrollmentPolicy policy = policies[trial % 3];
    std::vector<EnrollmentItem> items;
    bool all_conform = true;
    const int n = size(gen);
    for (int i = 0; i < n; ++i) {
      const bool real = coin(gen) == 1;
      const std::string driver = ids[pick(gen)];
      const std::string target = real ? driver : ids[pick(gen)];
      const auto label = Label(driver, target, real);
      all_conform = all_conform && ConformsToPolicy("a", policy, label);
      items.push_back(Item("c" + std::to_string(i), label, Unit(6, gen)));
    }
    if (all_conform) {
      EXPECT_NO_THROW(EnrollEmbeddings("a", items, policy));
    } else {
      EXPECT_EQ(CodeOf([&] { EnrollEmbeddings("a", items, policy); }),
                ErrorCode::kPolicyViolation);
    }
  }
}

TEST(Enroll, MixedHeadVersionsRejected) {
  std::mt19937_64 gen(7);
  std::vector<EnrollmentItem> items{Item("x", Label("a", "a", true), Unit(8, gen)),
                                    Item("y", Label("a", "a", true), Unit(8, gen))};
  items[1].embedding.head_version = "head-0000000000000000";
  EXPECT_EQ(CodeOf([&] { EnrollEmbeddings("a", items, EnrollmentPolicy::kRealEnrollment); }),
            ErrorCode::kVersion);
}

// Audio-level path through a precomputed backend keyed by source_id.
TEST(Score, EnrollmentClipScoresOne) {
  std::mt19937_64 gen(8);
  std::map<std::string, Eigen::VectorXd> table{{"e1", Unit(8, gen)}, {"probe", Unit(8, gen)}};
  const Embedder embedder(std::make_shared<PrecomputedBackend>(table));
  AudioClip clip;
  clip.samples.assign(16000, 0.0);
  clip.source_id = "e1";
  const std::vector<EnrollmentClip> clips{{clip, std::nullopt}};
  const IdentityProfile p = Enroll("a", clips, EnrollmentPolicy::kRealEnrollment, embedder);
  EXPECT_NEAR(Score(p, clip, embedder), 1.0, 1e-6);
  AudioClip probe = clip;
  probe.source_id = "probe";
  EXPECT_NEAR(Score(p, probe, embedder), table["e1"].dot(table["probe"]), 1e-12);
  EXPECT_EQ(CodeOf([&] { Enroll("a", clips, EnrollmentPolicy::kMixedDriver, embedder); }),
            ErrorCode::kPolicyViolation);
}

TEST(Score, HeadVersionMismatch) {
  std::mt19937_64 gen(9);
  std::map<std::string, Eigen::VectorXd> table{{"e1", Unit(8, gen)}};
  auto backend = std::make_shared<PrecomputedBackend>(table);
  const Embedder base(backend);
  const Embedder headed(backend, ProjectionHead::Identity(8));
  AudioClip clip;
  clip.samples.assign(16000, 0.0);
  clip.source_id = "e1";
  const std::vector<EnrollmentClip> clips{{clip, std::nullopt}};
  const IdentityProfile p = Enroll("a", clips, EnrollmentPolicy::kRealEnrollment, base);
  EXPECT_EQ(CodeOf([&] { Score(p, clip, headed); }), ErrorCode::kVersion);
}

TEST(Score, EmbeddingScoreIsSymmetricCosine) {
  std::mt19937_64 gen(10);
  std::vector<EnrollmentItem> items{Item("x", Label("a", "a", true), Unit(8, gen))};
  const IdentityProfile p = EnrollEmbeddings("a", items, EnrollmentPolicy::kRealEnrollment);
  const SpeakerEmbedding e{Unit(8, gen)};
  const SpeakerEmbedding pe{p.mean_embedding};
  EXPECT_EQ(ScoreEmbedding(p, e), CosineSimilarity(e, pe));
}

TEST(Decide, ThresholdRule) {
  EXPECT_TRUE(Decide(0.9, 0.5, Task::kSpoofDetection).match);
  EXPECT_TRUE(Decide(0.5, 0.5, Task::kSpoofDetection).match);
  const Verdict v = Decide(0.2, 0.5, Task::kSpoofDetection);
  EXPECT_FALSE(v.match);
  EXPECT_EQ(v.Label(), "synthetic");
  EXPECT_EQ(Decide(0.7, 0.5, Task::kSpoofDetection).Label(), "genuine");
  EXPECT_EQ(Decide(0.2, 0.5, Task::kFingerprinting).Label(), "unauthorized");
  EXPECT_EQ(Decide(0.7, 0.5, Task::kFingerprinting).Label(), "authorized");
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int i = 0; i < 1000; ++i) {
    const double s = u(gen), t = u(gen);
    EXPECT_EQ(Decide(s, t, Task::kFingerprinting).match, s >= t);
  }
}

IdentityProfile SomeProfile(uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::vector<EnrollmentItem> items;
  for (int i = 0; i < 3; ++i) {
    items.push_back(Item("clip" + std::to_string(i), Label("a", "b", false), Unit(192, gen), 4.0));
  }
  return EnrollEmbeddings("a", items, EnrollmentPolicy::kMixedDriver);
}

TEST(ProfileFile, RoundTripBitExact) {
  const IdentityProfile p = SomeProfile(12);
  const IdentityProfile q = ParseProfile(SerializeProfile(p));
  EXPECT_TRUE((p.mean_embedding.array() == q.mean_embedding.array()).all());
  EXPECT_EQ(q.identity, "a");
  EXPECT_EQ(q.policy, EnrollmentPolicy::kMixedDriver);
  EXPECT_EQ(q.clip_ids, p.clip_ids);
  EXPECT_EQ(q.total_enrollment_seconds, p.total_enrollment_seconds);
  EXPECT_EQ(q.head_version, p.head_version);
}

TEST(ProfileFile, InvariantAndVersionChecks) {
  nlohmann::json doc = nlohmann::json::parse(SerializeProfile(SomeProfile(13)));
  auto half = doc;
  for (auto& x : half["embedding"]) x = x.get<double>() * 0.5;
  EXPECT_EQ(CodeOf([&] { ParseProfile(half.dump()); }), ErrorCode::kCorruptProfile);
  auto future = doc;
  future["schema_version"] = 2;
  EXPECT_EQ(CodeOf([&] { ParseProfile(future.dump()); }), ErrorCode::kVersion);
  auto no_clips = doc;
  no_clips["clip_ids"] = nlohmann::json::array();
  EXPECT_EQ(CodeOf([&] { ParseProfile(no_clips.dump()); }), ErrorCode::kCorruptProfile);
  auto no_time = doc;
  no_time["seconds"] = 0.0;
  EXPECT_EQ(CodeOf([&] { ParseProfile(no_time.dump()); }), ErrorCode::kCorruptProfile);
  EXPECT_EQ(CodeOf([] { LoadProfile("/nonexistent/x.profile.json"); }),
            ErrorCode::kMissingArtifact);
}

TEST(ProfileStore, SaveLoadAndConcurrentAccess) {
  ProfileStore store;
  std::vector<std::thread> writers;
  for (int t = 0; t < 4; ++t) {
    writers.emplace_back([&store, t] {
      for (int i = 0; i < 25; ++i) {
        IdentityProfile p = SomeProfile(100 + t * 25 + i);
        p.identity = "id" + std::to_string(t * 25 + i);
        store.Put(std::move(p));
        (void)store.Get("id0");
        (void)store.size();
      }
    });
  }
  for (auto& w : writers) w.join();
  EXPECT_EQ(store.size(), 100u);
  const fs::path dir = fs::temp_directory_path() / "vf_profile_store_test";
  fs::remove_all(dir);
  store.SaveTo(dir);
  const ProfileStore loaded = ProfileStore::LoadFrom(dir);
  EXPECT_EQ(loaded.size(), 100u);
  const auto a = store.Get("id42");
  const auto b = loaded.Get("id42");
  ASSERT_TRUE(a && b);
  EXPECT_TRUE((a->mean_embedding.array() == b->mean_embedding.array()).all());
  EXPECT_FALSE(loaded.Get("nobody").has_value());
  fs::remove_all(dir);
}

Manifest LabeledManifest() {
  Manifest m;
  for (const std::string a : {"p", "q"}) {
    for (int r = 0; r < 10; ++r) {
      m.entries.push_back({"real_" + a + std::to_string(r), "x.wav", Label(a, a, true), 4.0});
    }
    for (const std::string b : {"p", "q"}) {
      for (int k = 0; k < 4; ++k) {
        m.entries.push_back({"syn_" + a + b + std::to_string(k), "x.wav", Label(a, b, false), 4.0});
      }
    }
  }
  return m;
}

TEST(SelectEnrollment, HoldoutCapAndDeterminism) {
  const Manifest m = LabeledManifest();
  EnrollmentSelection sel;
  const auto real = SelectEnrollment(m, "p", EnrollmentPolicy::kRealEnrollment, sel);
  EXPECT_EQ(real.size(), 5u);  // half of 10 held out
  for (const auto& e : real) EXPECT_TRUE(e.label.is_real() && e.label.driver == "p");
  EXPECT_EQ(real.front().clip_id,
            SelectEnrollment(m, "p", EnrollmentPolicy::kRealEnrollment, sel).front().clip_id);
  sel.max_seconds = 8.0;
  EXPECT_EQ(SelectEnrollment(m, "p", EnrollmentPolicy::kRealEnrollment, sel).size(), 2u);
  sel.max_seconds = 1000.0;
  sel.holdout_fraction = 0.0;
  EXPECT_EQ(SelectEnrollment(m, "p", EnrollmentPolicy::kMixedDriver, sel).size(), 8u);
  EXPECT_EQ(SelectEnrollment(m, "p", EnrollmentPolicy::kSelfReenactmentOnly, sel).size(), 4u);
  sel.holdout_fraction = 1.0;
  EXPECT_EQ(CodeOf([&] { SelectEnrollment(m, "p", EnrollmentPolicy::kRealEnrollment, sel); }),
            ErrorCode::kConfiguration);
}

TEST(EnrollManifest, ProfilesForEveryIdentity) {
  const Manifest m = LabeledManifest();
  std::mt19937_64 gen(14);
  EmbeddingTable table;
  for (const auto& e : m.entries) table[e.clip_id] = SpeakerEmbedding{Unit(8, gen)};
  const auto profiles =
      EnrollManifest(m, table, EnrollmentPolicy::kSelfReenactmentOnly, EnrollmentSelection{});
  ASSERT_EQ(profiles.size(), 2u);
  for (const auto& [id, p] : profiles) {
    EXPECT_EQ(p.policy, EnrollmentPolicy::kSelfReenactmentOnly);
    EXPECT_EQ(p.clip_ids.size(), 2u);
    for (const auto& c : p.clip_ids) EXPECT_EQ(c.substr(0, 6), "syn_" + id + id);
  }
  table.erase(profiles.at("p").clip_ids.front());
  EXPECT_EQ(CodeOf([&] {
              EnrollManifest(m, table, EnrollmentPolicy::kSelfReenactmentOnly,
                             EnrollmentSelection{});
            }),
            ErrorCode::kMissingArtifact);
}

}  // namespace
}  // namespace vf
