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

#include "vf/corpus.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "fft.h"
#include "json.hpp"
#include "vf/common.h"

namespace vf {

using nlohmann::json;

namespace {

struct Range {
  double lo;
  double hi;
};

// Sampling ranges. All sit inside the IdentityFactors validity bounds.
constexpr Range kF1{300.0, 850.0};
constexpr Range kF2{1000.0, 2200.0};
constexpr Range kF3{2400.0, 3300.0};
constexpr Range kB1{60.0, 120.0};
constexpr Range kB2{80.0, 160.0};
constexpr Range kB3{120.0, 250.0};
constexpr Range kTilt{-6.0, -2.0};
constexpr Range kRegister{90.0, 250.0};
constexpr Range kSyllableRate{2.5, 7.5};
constexpr Range kPauseProbability{0.02, 0.1};
constexpr Range kPauseMean{0.05, 0.15};
constexpr Range kF0ModDepth{0.02, 0.3};
constexpr Range kF0ModRate{1.5, 5.0};
constexpr Range kEnergyModDepth{0.1, 0.9};
constexpr Range kJitter{0.005, 0.05};

constexpr double kOnsetGapSeconds = 0.06;
constexpr double kTiltReferenceHz = 100.0;
constexpr int kPulseHalfWidth = 8;

double Norm01(double v, Range r) { return (v - r.lo) / (r.hi - r.lo); }

[[noreturn]] void ConfigError(const std::string& what) {
  throw Error(ErrorCode::kConfiguration, what);
}

json FactorsToJson(const IdentityFactors& f) {
  const auto& t = f.timbre;
  const auto& m = f.mannerism;
  return json{
      {"identity", f.identity},
      {"timbre",
       {{"formant_hz", t.formant_hz},
        {"bandwidth_hz", t.bandwidth_hz},
        {"tilt_db_per_octave", t.tilt_db_per_octave},
        {"f0_register_hz", t.f0_register_hz}}},
      {"mannerism",
       {{"syllable_rate_hz", m.syllable_rate_hz},
        {"pause_probability", m.pause_probability},
        {"pause_mean_s", m.pause_mean_s},
        {"f0_mod_depth", m.f0_mod_depth},
        {"f0_mod_rate_hz", m.f0_mod_rate_hz},
        {"energy_mod_depth", m.energy_mod_depth},
        {"jitter_sigma", m.jitter_sigma}}}};
}

IdentityFactors FactorsFromJson(const json& j) {
  IdentityFactors f;
  f.identity = j.at("identity").get<std::string>();
  const auto& t = j.at("timbre");
  f.timbre.formant_hz = t.at("formant_hz").get<std::array<double, 3>>();
  f.timbre.bandwidth_hz = t.at("bandwidth_hz").get<std::array<double, 3>>();
  f.timbre.tilt_db_per_octave = t.at("tilt_db_per_octave").get<double>();
  f.timbre.f0_register_hz = t.at("f0_register_hz").get<double>();
  const auto& m = j.at("mannerism");
  f.mannerism.syllable_rate_hz = m.at("syllable_rate_hz").get<double>();
  f.mannerism.pause_probability = m.at("pause_probability").get<double>();
  f.mannerism.pause_mean_s = m.at("pause_mean_s").get<double>();
  f.mannerism.f0_mod_depth = m.at("f0_mod_depth").get<double>();
  f.mannerism.f0_mod_rate_hz = m.at("f0_mod_rate_hz").get<double>();
  f.mannerism.energy_mod_depth = m.at("energy_mod_depth").get<double>();
  f.mannerism.jitter_sigma = m.at("jitter_sigma").get<double>();
  f.Validate();
  return f;
}

json OptionsToJson(const SynthesisOptions& o) {
  return json{{"synthetic_jitter_scale", o.synthetic_jitter_scale},
              {"formant_perturbation", o.formant_perturbation},
              {"aspiration_level", o.aspiration_level},
              {"noise_floor", o.noise_floor},
              {"peak", o.peak}};
}

// Second-order digital resonator with unity gain at DC.
class Resonator {
 public:
  Resonator(double freq_hz, double bandwidth_hz, double rate) {
    const double t = 1.0 / rate;
    c_ = -std::exp(-2.0 * M_PI * bandwidth_hz * t);
    b_ = 2.0 * std::exp(-M_PI * bandwidth_hz * t) * std::cos(2.0 * M_PI * freq_hz * t);
    a_ = 1.0 - b_ - c_;
  }
  double Process(double x) {
    const double y = a_ * x + b_ * y1_ + c_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a_, b_, c_;
  double y1_ = 0.0, y2_ = 0.0;
};

// Adds a band-limited unit impulse centered at a fractional sample position.
void AddPulse(std::vector<double>& out, double position, double amplitude) {
  const auto center = static_cast<long>(std::floor(position));
  for (long k = center - kPulseHalfWidth + 1; k <= center + kPulseHalfWidth; ++k) {
    if (k < 0 || k >= static_cast<long>(out.size())) continue;
    const double x = static_cast<double>(k) - position;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    const double window = 0.5 + 0.5 * std::cos(M_PI * x / kPulseHalfWidth);
    out[static_cast<size_t>(k)] += amplitude * sinc * window;
  }
}

void ApplySpectralTilt(std::vector<double>& signal, double tilt_db_per_octave,
                       double rate) {
  const size_t n = signal.size();
  internal::RealFft fft(n);
  fft.Forward(signal);
  for (size_t k = 0; k < fft.bins(); ++k) {
    const double f = std::max(kTiltReferenceHz, k * rate / static_cast<double>(n));
    const double gain_db = tilt_db_per_octave * std::log2(f / kTiltReferenceHz);
    fft.SetBin(k, fft.Bin(k) * std::pow(10.0, gain_db / 20.0));
  }
  const auto out = fft.Inverse();
  for (size_t i = 0; i < n; ++i) signal[i] = out[i] / static_cast<double>(n);
}

std::string FormatDouble(double v) {
  std::ostringstream ss;
  ss << std::setprecision(17) << v;
  return ss.str();
}

}  // namespace

void IdentityFactors::Validate() const {
  const auto& f = timbre.formant_hz;
  if (!(f[0] < f[1] && f[1] < f[2])) ConfigError(identity + ": formants must be ordered");
  for (double x : f) {
    if (x < 200.0 || x > 3500.0) ConfigError(identity + ": formant outside 200-3500 Hz");
  }
  for (double b : timbre.bandwidth_hz) {
    if (!(b > 0.0)) ConfigError(identity + ": bandwidth must be positive");
  }
  if (timbre.f0_register_hz < 80.0 || timbre.f0_register_hz > 300.0) {
    ConfigError(identity + ": F0 register outside 80-300 Hz");
  }
  const auto& m = mannerism;
  if (m.syllable_rate_hz < 2.0 || m.syllable_rate_hz > 8.0) {
    ConfigError(identity + ": syllable rate outside 2-8 Hz");
  }
  if (m.pause_probability < 0.0 || m.pause_probability > 1.0) {
    ConfigError(identity + ": pause probability outside [0, 1]");
  }
  if (m.jitter_sigma < 0.0 || m.jitter_sigma > 0.05) {
    ConfigError(identity + ": jitter sigma outside [0, 0.05]");
  }
  if (m.pause_mean_s < 0.0 || m.f0_mod_depth < 0.0 || m.f0_mod_depth >= 1.0 ||
      m.f0_mod_rate_hz < 0.0 || m.energy_mod_depth < 0.0 || m.energy_mod_depth > 1.0) {
    ConfigError(identity + ": mannerism parameter out of range");
  }
}

std::vector<double> IdentityFactors::Normalized() const {
  const auto& t = timbre;
  const auto& m = mannerism;
  return {Norm01(t.formant_hz[0], kF1),       Norm01(t.formant_hz[1], kF2),
          Norm01(t.formant_hz[2], kF3),       Norm01(t.bandwidth_hz[0], kB1),
          Norm01(t.bandwidth_hz[1], kB2),     Norm01(t.bandwidth_hz[2], kB3),
          Norm01(t.tilt_db_per_octave, kTilt), Norm01(t.f0_register_hz, kRegister),
          Norm01(m.syllable_rate_hz, kSyllableRate),
          Norm01(m.pause_probability, kPauseProbability),
          Norm01(m.pause_mean_s, kPauseMean), Norm01(m.f0_mod_depth, kF0ModDepth),
          Norm01(m.f0_mod_rate_hz, kF0ModRate),
          Norm01(m.energy_mod_depth, kEnergyModDepth), Norm01(m.jitter_sigma, kJitter)};
}

std::vector<IdentityFactors> SampleIdentities(int n, uint64_t seed) {
  if (n < 2) {
    throw Error(ErrorCode::kInsufficientIdentities,
                "need at least 2 identities, got " + std::to_string(n));
  }
  Rng rng(DeriveSeed(seed, "identities"));
  auto draw = [&rng](Range r) { return rng.Uniform(r.lo, r.hi); };
  const int width = n <= 100 ? 2 : static_cast<int>(std::to_string(n - 1).size());
  std::vector<IdentityFactors> out;
  out.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    IdentityFactors f;
    std::ostringstream name;
    name << "id" << std::setw(width) << std::setfill('0') << i;
    f.identity = name.str();
    f.timbre.formant_hz = {draw(kF1), draw(kF2), draw(kF3)};
    f.timbre.bandwidth_hz = {draw(kB1), draw(kB2), draw(kB3)};
    f.timbre.tilt_db_per_octave = draw(kTilt);
    f.timbre.f0_register_hz = draw(kRegister);
    f.mannerism.syllable_rate_hz = draw(kSyllableRate);
    f.mannerism.pause_probability = draw(kPauseProbability);
    f.mannerism.pause_mean_s = draw(kPauseMean);
    f.mannerism.f0_mod_depth = draw(kF0ModDepth);
    f.mannerism.f0_mod_rate_hz = draw(kF0ModRate);
    f.mannerism.energy_mod_depth = draw(kEnergyModDepth);
    f.mannerism.jitter_sigma = draw(kJitter);
    f.Validate();
    out.push_back(std::move(f));
  }
  return out;
}

SynthesizedClip SynthesizeClip(const IdentityFactors& driver,
                               const IdentityFactors& target, double duration_s,
                               Authenticity authenticity, uint64_t seed,
                               const SynthesisOptions& options) {
  if (!(duration_s >= 2.0 && duration_s <= 10.0)) {
    ConfigError("clip duration must be within 2-10 s");
  }
  if (authenticity == Authenticity::kReal && driver.identity != target.identity) {
    ConfigError("a real clip must be driven by its own target identity");
  }
  driver.Validate();
  target.Validate();
  const bool synthetic = authenticity == Authenticity::kSynthetic;
  const double rate = kCanonicalSampleRate;
  const auto n = static_cast<size_t>(std::lround(duration_s * rate));
  const Mannerism& style = driver.mannerism;
  Rng rng(seed);

  Timbre timbre = target.timbre;
  if (synthetic && options.formant_perturbation > 0.0) {
    for (double& f : timbre.formant_hz) {
      f = std::clamp(f * (1.0 + options.formant_perturbation * rng.Normal()), 200.0, 3500.0);
    }
    std::sort(timbre.formant_hz.begin(), timbre.formant_hz.end());
  }
  const double jitter =
      style.jitter_sigma * (synthetic ? options.synthetic_jitter_scale : 1.0);

  // Syllable timeline: voiced nuclei with a raised-sine envelope, per-syllable
  // loudness, and occasional pauses at syllable boundaries.
  std::vector<double> envelope(n, 0.0);
  double t = rng.Uniform(0.0, 0.1);
  while (t < duration_s) {
    const double syllable = rng.Uniform(0.85, 1.15) / style.syllable_rate_hz;
    const double nucleus = syllable - kOnsetGapSeconds;
    const double loudness = 1.0 - style.energy_mod_depth * rng.Uniform();
    const auto begin = static_cast<size_t>(t * rate);
    const auto end = std::min(n, static_cast<size_t>((t + nucleus) * rate));
    for (size_t i = begin; i < end; ++i) {
      const double tau = (static_cast<double>(i) / rate - t) / nucleus;
      envelope[i] = loudness * std::sin(M_PI * std::clamp(tau, 0.0, 1.0));
    }
    t += syllable;
    if (rng.Uniform() < style.pause_probability) {
      t += style.pause_mean_s * rng.Uniform(0.5, 1.5);
    }
  }

  // Glottal excitation: jittered band-limited pulse train following the
  // target's register modulated by the driver's intonation.
  const double phase = rng.Uniform(0.0, 2.0 * M_PI);
  auto f0_at = [&](double pos) {
    return timbre.f0_register_hz *
           (1.0 + style.f0_mod_depth *
                      std::sin(2.0 * M_PI * style.f0_mod_rate_hz * pos / rate + phase));
  };
  std::vector<double> excitation(n, 0.0);
  double pos = rng.Uniform(0.0, rate / timbre.f0_register_hz);
  while (pos < static_cast<double>(n)) {
    const double amplitude = envelope[std::min(n - 1, static_cast<size_t>(pos))];
    if (amplitude > 0.0) AddPulse(excitation, pos, amplitude);
    const double period = rate / f0_at(pos);
    pos += period * std::max(0.5, 1.0 + jitter * rng.Normal());
  }
  for (size_t i = 0; i < n; ++i) {
    excitation[i] += options.aspiration_level * envelope[i] * rng.Normal();
  }

  std::vector<double> signal(n);
  Resonator r1(timbre.formant_hz[0], timbre.bandwidth_hz[0], rate);
  Resonator r2(timbre.formant_hz[1], timbre.bandwidth_hz[1], rate);
  Resonator r3(timbre.formant_hz[2], timbre.bandwidth_hz[2], rate);
  for (size_t i = 0; i < n; ++i) {
    signal[i] = r3.Process(r2.Process(r1.Process(excitation[i])));
  }
  ApplySpectralTilt(signal, timbre.tilt_db_per_octave, rate);

  double peak = 0.0;
  for (double s : signal) peak = std::max(peak, std::abs(s));
  if (peak <= 0.0) ConfigError("synthesis produced silence");
  const double gain = options.peak / peak;
  double floor_peak = 0.0;
  std::vector<double> floor_noise(n);
  for (size_t i = 0; i < n; ++i) {
    floor_noise[i] = options.noise_floor * rng.Normal();
    floor_peak = std::max(floor_peak, std::abs(signal[i] * gain + floor_noise[i]));
  }
  const double renorm = floor_peak > 0.0 ? options.peak / floor_peak : 1.0;

  SynthesizedClip out;
  out.clip.sample_rate_hz = kCanonicalSampleRate;
  out.clip.samples.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.clip.samples[i] = (signal[i] * gain + floor_noise[i]) * renorm;
  }
  std::ostringstream key;
  key << driver.identity << '|' << target.identity << '|'
      << AuthenticityName(authenticity) << '|' << FormatDouble(duration_s) << '|' << seed
      << '|' << OptionsToJson(options).dump();
  out.label.driver = driver.identity;
  out.label.target = target.identity;
  out.label.authenticity = authenticity;
  out.label.clip_id = Sha256Hex(key.str()).substr(0, 16);
  out.clip.source_id = out.label.clip_id;
  return out;
}

Manifest GenerateCorpus(const std::vector<IdentityFactors>& identities,
                        const CorpusConfig& config,
                        const std::filesystem::path& out_dir, int threads) {
  if (identities.size() < 2) {
    throw Error(ErrorCode::kInsufficientIdentities, "corpus needs at least 2 identities");
  }
  if (config.clips_per_pair < 0 || config.real_per_identity < 0) {
    ConfigError("clip counts must be non-negative");
  }
  struct Job {
    size_t driver;
    size_t target;
    Authenticity authenticity;
    uint64_t seed;
  };
  std::vector<Job> jobs;
  for (size_t i = 0; i < identities.size(); ++i) {
    for (int r = 0; r < config.real_per_identity; ++r) {
      const std::string key = "real|" + identities[i].identity + "|" + std::to_string(r);
      jobs.push_back({i, i, Authenticity::kReal, DeriveSeed(config.seed, key)});
    }
  }
  for (size_t d = 0; d < identities.size(); ++d) {
    for (size_t t = 0; t < identities.size(); ++t) {
      for (int k = 0; k < config.clips_per_pair; ++k) {
        const std::string key = "synthetic|" + identities[d].identity + "|" +
                                identities[t].identity + "|" + std::to_string(k);
        jobs.push_back({d, t, Authenticity::kSynthetic, DeriveSeed(config.seed, key)});
      }
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir / "clips", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  std::vector<ManifestEntry> entries(jobs.size());
  ParallelFor(jobs.size(), threads, [&](size_t j) {
    const Job& job = jobs[j];
    SynthesizedClip synth =
        SynthesizeClip(identities[job.driver], identities[job.target], config.duration_s,
                       job.authenticity, job.seed, config.synthesis);
    const std::string& id = synth.label.clip_id;
    const std::filesystem::path rel = std::filesystem::path("clips") / id.substr(0, 2) / (id + ".wav");
    std::error_code dir_ec;
    std::filesystem::create_directories((out_dir / rel).parent_path(), dir_ec);
    WriteWav(synth.clip, out_dir / rel);
    ManifestEntry& e = entries[j];
    e.clip_id = id;
    e.path = rel.generic_string();
    e.label = synth.label;
    e.duration_s = static_cast<double>(synth.clip.samples.size()) / kCanonicalSampleRate;
  });
  std::sort(entries.begin(), entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.clip_id < b.clip_id; });

  json params;
  params["clips_per_pair"] = config.clips_per_pair;
  params["real_per_identity"] = config.real_per_identity;
  params["duration_s"] = config.duration_s;
  params["synthesis"] = OptionsToJson(config.synthesis);
  params["identities"] = json::array();
  for (const auto& f : identities) params["identities"].push_back(FactorsToJson(f));

  Manifest manifest;
  manifest.entries = std::move(entries);
  manifest.corpus_seed = config.seed;
  manifest.generator_params = params.dump();
  manifest.root = out_dir;
  manifest.Validate();
  WriteManifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

std::vector<IdentityFactors> IdentitiesFromManifest(const Manifest& manifest) {
  const json params = json::parse(manifest.generator_params);
  std::vector<IdentityFactors> out;
  if (!params.contains("identities")) return out;
  for (const auto& j : params["identities"]) out.push_back(FactorsFromJson(j));
  return out;
}

Splits MakeSplits(const Manifest& manifest, int n_test_identities, double val_fraction,
                  uint64_t seed) {
  const std::set<std::string> id_set = manifest.Identities();
  std::vector<std::string> ids(id_set.begin(), id_set.end());
  if (n_test_identities < 0 || n_test_identities >= static_cast<int>(ids.size()) - 1) {
    ConfigError("cannot hold out " + std::to_string(n_test_identities) + " of " +
                std::to_string(ids.size()) + " identities");
  }
  if (!(val_fraction >= 0.0 && val_fraction < 1.0)) {
    ConfigError("validation fraction must be in [0, 1)");
  }
  Rng rng(DeriveSeed(seed, "split-identities"));
  rng.Shuffle(ids);
  std::set<std::string> test_ids(ids.begin(), ids.begin() + n_test_identities);

  Splits splits;
  splits.spec.val_fraction = val_fraction;
  splits.spec.test_identities.assign(test_ids.begin(), test_ids.end());
  for (const auto& id : id_set) {
    if (!test_ids.count(id)) splits.spec.train_identities.push_back(id);
  }

  std::vector<ManifestEntry> pool;
  for (const auto& e : manifest.entries) {
    const bool driver_test = test_ids.count(e.label.driver) > 0;
    const bool target_test = test_ids.count(e.label.target) > 0;
    if (driver_test && target_test) {
      splits.test.entries.push_back(e);
    } else if (!driver_test && !target_test) {
      pool.push_back(e);
    }
  }
  std::vector<size_t> order(pool.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng val_rng(DeriveSeed(seed, "split-validation"));
  val_rng.Shuffle(order);
  const auto n_val = static_cast<size_t>(std::llround(val_fraction * pool.size()));
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_val ? splits.val : splits.train).entries.push_back(pool[order[i]]);
  }

  json split_doc{{"seed", seed},
                 {"val_fraction", val_fraction},
                 {"train_identities", splits.spec.train_identities},
                 {"test_identities", splits.spec.test_identities}};
  auto finish = [&](Manifest& m, const char* part) {
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.clip_id < b.clip_id; });
    m.corpus_seed = manifest.corpus_seed;
    m.generator_params = manifest.generator_params;
    m.root = manifest.root;
    json doc = split_doc;
    doc["part"] = part;
    m.split = doc.dump();
  };
  finish(splits.train, "train");
  finish(splits.val, "val");
  finish(splits.test, "test");
  CheckSplitDisjointness(splits);
  return splits;
}

void CheckSplitDisjointness(const Splits& splits) {
  const std::set<std::string> test_ids(splits.spec.test_identities.begin(),
                                       splits.spec.test_identities.end());
  for (const auto& id : splits.spec.train_identities) {
    if (test_ids.count(id)) ConfigError("identity '" + id + "' is in both train and test");
  }
  for (const Manifest* m : {&splits.train, &splits.val}) {
    for (const auto& e : m->entries) {
      if (test_ids.count(e.label.driver) || test_ids.count(e.label.target)) {
        ConfigError("entry '" + e.clip_id + "' references a test identity");
      }
    }
  }
}

}  // namespace vf
