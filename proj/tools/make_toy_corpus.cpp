// Copyright 2026 The namegauge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Generates the bundled toy corpus: 20 participants naming 8 stimuli, with
// short WAV clips whose noise level tracks the rated accuracy, two sets of
// ASR hypotheses and per-participant covariates. Output is deterministic.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "namegauge/audio.hpp"
#include "namegauge/dataset.hpp"
#include "namegauge/io.hpp"
#include "namegauge/rng.hpp"

namespace fs = std::filesystem;
using namespace namegauge;

namespace {

const std::vector<std::string> kStimuli = {"acorn", "bench",  "candle", "dolphin",
                                           "feather", "hammer", "kettle", "ladder"};
const std::vector<std::string> kDistractors = {"apple", "chair", "lamp",  "fish",
                                               "bird",  "nail",  "pot",   "rope"};

struct Participant {
  std::string id;
  Cohort cohort;
  double p_correct;  // chance a trial is rated 2
  double p_zero;     // chance a trial is rated 0 (else 1)
};

std::vector<Participant> participants() {
  std::vector<Participant> out;
  for (int i = 1; i <= 8; ++i) {
    out.push_back({"h" + std::string(i < 10 ? "0" : "") + std::to_string(i), Cohort::kHealthy, 0.85, 0.05});
  }
  for (int i = 1; i <= 12; ++i) {
    const bool severe = i % 2 == 1;
    out.push_back({"p" + std::string(i < 10 ? "0" : "") + std::to_string(i), Cohort::kPatient,
                   severe ? 0.15 : 0.75, severe ? 0.6 : 0.1});
  }
  return out;
}

int draw_score(Rng& rng, const Participant& p) {
  const double u = rng.uniform();
  if (u < p.p_correct) return 2;
  return rng.uniform() < p.p_zero / (1.0 - p.p_correct) ? 0 : 1;
}

// Harmonic tone at a stimulus-specific pitch; lower scores add noise and
// shift energy away from the harmonics.
std::vector<double> synthesize(Rng& rng, int word, int score, int rate) {
  const double seconds = 0.3 + 0.05 * static_cast<double>(rng.below(5));
  const auto n = static_cast<std::size_t>(seconds * rate);
  const double f0 = 140.0 + 22.0 * word;
  const double tone = score == 2 ? 0.5 : score == 1 ? 0.25 : 0.05;
  const double noise = score == 2 ? 0.01 : score == 1 ? 0.12 : 0.35;
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double env = std::sin(std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    double s = 0.0;
    for (int h = 1; h <= 4; ++h) s += std::sin(2.0 * std::numbers::pi * f0 * h * t) / h;
    x[i] = std::clamp(env * tone * s + noise * rng.normal(), -0.99, 0.99);
  }
  return x;
}

std::string hypothesis_for(Rng& rng, const TrialRecord& r, int error_period, std::size_t index) {
  if (r.transcript.empty()) return rng.below(2) == 0 ? "" : "uh";
  if (index % static_cast<std::size_t>(error_period) != 0) return r.transcript;
  switch (rng.below(3)) {
    case 0: return kDistractors[rng.below(kDistractors.size())];
    case 1: return r.transcript + " " + r.target_word;
    default: return "";
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_toy_corpus <out-dir>\n";
    return 2;
  }
  const fs::path out = argv[1];
  fs::create_directories(out / "audio");
  Rng rng(20240517);

  Manifest manifest;
  manifest.stimuli = kStimuli;
  std::size_t trial_index = 0;
  for (const auto& p : participants()) {
    for (std::size_t w = 0; w < kStimuli.size(); ++w, ++trial_index) {
      const auto& word = kStimuli[w];
      TrialRecord r;
      r.trial_id = p.id + "-" + word;
      r.participant_id = p.id;
      r.cohort = p.cohort;
      r.target_word = word;
      const int score = draw_score(rng, p);
      if (score == 2) {
        r.transcript = word;
      } else if (score == 1) {
        r.transcript = rng.below(2) == 0 ? "um " + word : word.substr(0, word.size() - 1) + "s " + word;
      } else {
        r.transcript = rng.below(4) == 0 ? "" : kDistractors[w];
      }
      r.scores[Metric::kSemantic] = score;
      r.scores[Metric::kPhonology] = score == 1 && rng.below(2) == 0 ? 2 : score;
      r.scores[Metric::kDysfluency] = score == 0 ? static_cast<int>(rng.below(2)) : score;
      // Self-corrections are rare: almost everyone is rated 2.
      r.scores[Metric::kSelfCorrection] = p.cohort == Cohort::kPatient && trial_index % 29 == 0 ? 1 : 2;
      if (trial_index % 37 == 5) r.scores = Scores{};  // unrated trial

      const int rate = trial_index % 3 == 0 ? 8000 : 16000;
      const auto samples = synthesize(rng, static_cast<int>(w), score, rate);
      r.audio_path = "audio/" + r.trial_id + ".wav";
      io::write_atomic(out / r.audio_path, encode_wav(samples, rate, 1, SampleFormat::kPcm16));
      manifest.records.push_back(std::move(r));
    }
  }
  validate(manifest);
  write_manifest(manifest, out / "manifest.jsonl");

  const std::pair<const char*, int> models[] = {{"small_baseline", 3}, {"medium_finetuned", 7}};
  for (const auto& [name, period] : models) {
    HypothesisSet h;
    std::size_t i = 0;
    for (const auto& r : manifest.records) h.entries[r.trial_id] = hypothesis_for(rng, r, period, i++);
    io::write_atomic(out / (std::string("hypotheses.") + name + ".jsonl"), format_hypotheses(h));
  }

  std::string cov;
  std::size_t k = 0;
  for (const auto& p : participants()) {
    nlohmann::ordered_json j;
    j["participant_id"] = p.id;
    j["fluency"] = std::round((p.p_correct * 8.0 + rng.normal()) * 100.0) / 100.0;
    j["previous_stroke"] = rng.below(3) == 0;
    j["english_second_language"] = rng.below(4) == 0;
    j["sex"] = rng.below(2) == 0 ? "female" : "male";
    // Recorded for a single participant only, so that group is always too small.
    j["ldl_cholesterol"] = k == 9 ? nlohmann::ordered_json(3.1) : nlohmann::ordered_json(nullptr);
    j["smoking"] = rng.below(3) == 0;
    j["age"] = 45 + static_cast<int>(rng.below(40));
    cov += j.dump() + "\n";
    ++k;
  }
  io::write_atomic(out / "covariates.jsonl", cov);
  io::write_atomic(out / "stimuli.txt", [] {
    std::string s;
    for (const auto& w : kStimuli) s += w + "\n";
    return s;
  }());
  std::cout << "wrote " << manifest.records.size() << " trials to " << out.string() << "\n";
  return 0;
}
