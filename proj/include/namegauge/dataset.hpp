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

#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "namegauge/error.hpp"
#include "namegauge/io.hpp"

namespace namegauge {

enum class Cohort { kHealthy, kPatient, kSynthetic };

/// The four rater-scored accuracy dimensions of a naming trial.
enum class Metric { kSemantic, kDysfluency, kSelfCorrection, kPhonology };

inline constexpr std::array<Metric, 4> kAllMetrics = {
    Metric::kSemantic, Metric::kDysfluency, Metric::kSelfCorrection,
    Metric::kPhonology};

inline std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::kSemantic: return "semantic";
    case Metric::kDysfluency: return "dysfluency";
    case Metric::kSelfCorrection: return "self_correction";
    case Metric::kPhonology: return "phonology";
  }
  return "";
}

inline std::optional<Metric> parse_metric(std::string_view s) {
  for (auto m : kAllMetrics) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

inline std::string_view to_string(Cohort c) {
  switch (c) {
    case Cohort::kHealthy: return "healthy";
    case Cohort::kPatient: return "patient";
    case Cohort::kSynthetic: return "synthetic";
  }
  return "";
}

inline std::optional<Cohort> parse_cohort(std::string_view s) {
  for (auto c : {Cohort::kHealthy, Cohort::kPatient, Cohort::kSynthetic}) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

/// A 0/1/2 rating per metric; absent means the trial was not rated on it.
struct Scores {
  std::array<std::optional<int>, 4> values{};

  std::optional<int>& operator[](Metric m) { return values[static_cast<int>(m)]; }
  const std::optional<int>& operator[](Metric m) const {
    return values[static_cast<int>(m)];
  }
  bool any() const {
    return std::any_of(values.begin(), values.end(),
                       [](const auto& v) { return v.has_value(); });
  }
  friend bool operator==(const Scores&, const Scores&) = default;
};

struct TrialRecord {
  std::string trial_id;
  std::string participant_id;
  Cohort cohort = Cohort::kPatient;
  std::string audio_path;
  std::string transcript;
  std::string target_word;
  Scores scores;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct Manifest {
  std::vector<TrialRecord> records;
  std::vector<std::string> stimuli;

  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline bool has_whitespace(std::string_view s) {
  return s.find_first_of(" \t\r\n\f\v") != std::string_view::npos;
}

/// Checks every TrialRecord/Manifest invariant; throws on the first violation.
inline void validate(const Manifest& manifest) {
  std::set<std::string_view> ids;
  std::set<std::string_view> stimuli(manifest.stimuli.begin(), manifest.stimuli.end());
  for (const auto& r : manifest.records) {
    if (r.trial_id.empty()) fail(ErrorKind::kInvalidData, "empty trial_id");
    if (!ids.insert(r.trial_id).second) {
      fail(ErrorKind::kDuplicateId, "duplicate trial_id '" + r.trial_id + "'");
    }
    if (r.target_word.empty() || has_whitespace(r.target_word)) {
      fail(ErrorKind::kInvalidData,
           "trial '" + r.trial_id + "': target_word must be one non-empty token");
    }
    for (auto m : kAllMetrics) {
      const auto& s = r.scores[m];
      if (s && (*s < 0 || *s > 2)) {
        fail(ErrorKind::kInvalidData, "trial '" + r.trial_id + "': score for " +
                                          std::string(to_string(m)) +
                                          " must be 0, 1 or 2");
      }
    }
    if (!stimuli.contains(r.target_word)) {
      fail(ErrorKind::kInvalidData, "trial '" + r.trial_id + "': target_word '" +
                                        r.target_word + "' not in stimulus list");
    }
  }
}

namespace detail {

inline std::string required_string(const nlohmann::json& j, const char* key,
                                   std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) +
                                ": missing required field '" + key + "'");
  }
  if (!it->is_string()) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": field '" + key +
                                "' must be a string");
  }
  return it->get<std::string>();
}

inline TrialRecord record_from_json(const nlohmann::json& j, std::size_t line) {
  if (!j.is_object()) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": expected a JSON object");
  }
  TrialRecord r;
  r.trial_id = required_string(j, "trial_id", line);
  r.participant_id = required_string(j, "participant_id", line);
  const auto cohort = required_string(j, "cohort", line);
  auto c = parse_cohort(cohort);
  if (!c) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": unknown cohort '" +
                                cohort + "'");
  }
  r.cohort = *c;
  r.audio_path = required_string(j, "audio_path", line);
  r.transcript = required_string(j, "transcript", line);
  r.target_word = required_string(j, "target_word", line);
  if (auto it = j.find("scores"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) {
      fail(ErrorKind::kParse, "line " + std::to_string(line) + ": 'scores' must be an object");
    }
    for (const auto& [key, value] : it->items()) {
      auto m = parse_metric(key);
      if (!m) {
        fail(ErrorKind::kParse, "line " + std::to_string(line) + ": trial '" +
                                    r.trial_id + "': unknown metric '" + key + "'");
      }
      if (value.is_null()) continue;
      const bool integral = value.is_number_integer() ||
                            (value.is_number_float() &&
                             value.get<double>() == static_cast<int>(value.get<double>()));
      const int s = integral ? static_cast<int>(value.get<double>()) : -1;
      if (!integral || s < 0 || s > 2) {
        fail(ErrorKind::kInvalidData, "line " + std::to_string(line) + ": trial '" +
                                          r.trial_id + "': score for " + key +
                                          " must be 0, 1 or 2, got " + value.dump());
      }
      r.scores[*m] = s;
    }
  }
  return r;
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const TrialRecord& r) {
  nlohmann::ordered_json scores = nlohmann::ordered_json::object();
  for (auto m : kAllMetrics) {
    const auto& s = r.scores[m];
    scores[std::string(to_string(m))] = s ? nlohmann::ordered_json(*s) : nullptr;
  }
  return {{"trial_id", r.trial_id},           {"participant_id", r.participant_id},
          {"cohort", to_string(r.cohort)},    {"audio_path", r.audio_path},
          {"transcript", r.transcript},       {"target_word", r.target_word},
          {"scores", scores}};
}

/// Stimuli in order of first appearance among the records.
inline std::vector<std::string> stimuli_of(const std::vector<TrialRecord>& records) {
  std::vector<std::string> out;
  std::set<std::string_view> seen;
  for (const auto& r : records) {
    if (seen.insert(r.target_word).second) out.push_back(r.target_word);
  }
  return out;
}

/// Parses JSON-Lines manifest text. Blank lines are ignored; errors carry the
/// 1-based line number. The stimulus list is derived from the records.
inline Manifest parse_manifest(std::string_view text) {
  Manifest m;
  const auto lines = io::split_lines(text);
  std::map<std::string, std::size_t> first_line;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::is_blank(lines[i])) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::kParse, "line " + std::to_string(i + 1) + ": " + e.what());
    }
    auto r = detail::record_from_json(j, i + 1);
    auto [it, inserted] = first_line.emplace(r.trial_id, i + 1);
    if (!inserted) {
      fail(ErrorKind::kDuplicateId, "line " + std::to_string(i + 1) +
                                        ": duplicate trial_id '" + r.trial_id +
                                        "' (first seen on line " +
                                        std::to_string(it->second) + ")");
    }
    m.records.push_back(std::move(r));
  }
  m.stimuli = stimuli_of(m.records);
  validate(m);
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(io::read_text(path));
}

inline std::string format_manifest(const Manifest& m) {
  std::string out;
  for (const auto& r : m.records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

inline void write_manifest(const Manifest& m, const std::filesystem::path& path) {
  io::write_atomic(path, format_manifest(m));
}

/// Keeps the records rated on at least one metric, in input order.
inline Manifest filter_scored(const Manifest& manifest) {
  Manifest out;
  out.stimuli = manifest.stimuli;
  for (const auto& r : manifest.records) {
    if (r.scores.any()) out.records.push_back(r);
  }
  return out;
}

/// One synthetic record per (stimulus, accent): the spoken word is the target
/// itself and every metric is rated 2.
inline Manifest generate_synthetic_manifest(const std::vector<std::string>& stimuli,
                                            const std::vector<std::string>& accents) {
  if (stimuli.empty()) fail(ErrorKind::kInvalidData, "stimulus list is empty");
  if (accents.empty()) fail(ErrorKind::kInvalidData, "accent list is empty");
  std::set<std::string_view> seen;
  for (const auto& s : stimuli) {
    if (!seen.insert(s).second) {
      fail(ErrorKind::kDuplicateId, "duplicate stimulus '" + s + "'");
    }
  }
  std::set<std::string_view> seen_accents;
  for (const auto& a : accents) {
    if (!seen_accents.insert(a).second) {
      fail(ErrorKind::kDuplicateId, "duplicate accent '" + a + "'");
    }
  }
  Manifest m;
  m.stimuli = stimuli;
  for (const auto& accent : accents) {
    for (const auto& word : stimuli) {
      TrialRecord r;
      r.trial_id = "syn-" + accent + "-" + word;
      r.participant_id = "syn-" + accent;
      r.cohort = Cohort::kSynthetic;
      r.audio_path = "synthetic/" + accent + "/" + word + ".wav";
      r.transcript = word;
      r.target_word = word;
      for (auto metric : kAllMetrics) r.scores[metric] = 2;
      m.records.push_back(std::move(r));
    }
  }
  validate(m);
  return m;
}

/// trial_id -> ASR hypothesis (possibly empty).
struct HypothesisSet {
  std::map<std::string, std::string> entries;
};

inline HypothesisSet parse_hypotheses(std::string_view text) {
  HypothesisSet h;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::is_blank(lines[i])) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::kParse, "line " + std::to_string(i + 1) + ": " + e.what());
    }
    if (!j.is_object()) {
      fail(ErrorKind::kParse, "line " + std::to_string(i + 1) + ": expected a JSON object");
    }
    auto id = detail::required_string(j, "trial_id", i + 1);
    auto hyp = detail::required_string(j, "hypothesis", i + 1);
    if (!h.entries.emplace(id, std::move(hyp)).second) {
      fail(ErrorKind::kDuplicateId, "line " + std::to_string(i + 1) +
                                        ": duplicate trial_id '" + id + "'");
    }
  }
  return h;
}

inline HypothesisSet load_hypotheses(const std::filesystem::path& path) {
  return parse_hypotheses(io::read_text(path));
}

inline std::string format_hypotheses(const HypothesisSet& h) {
  std::string out;
  for (const auto& [id, hyp] : h.entries) {
    nlohmann::ordered_json j{{"trial_id", id}, {"hypothesis", hyp}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace namegauge
