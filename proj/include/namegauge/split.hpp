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
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "namegauge/dataset.hpp"
#include "namegauge/error.hpp"
#include "namegauge/rng.hpp"

namespace namegauge {

enum class Partition { kTrain, kValidation, kTest };

inline std::string_view to_string(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kValidation: return "validation";
    case Partition::kTest: return "test";
  }
  return "";
}

struct SplitRatios {
  double train = 0.7;
  double validation = 0.1;
  double test = 0.2;
};

struct SplitAssignment {
  std::map<std::string, Partition> assignment;
  std::uint64_t seed = 0;
  SplitRatios ratios;

  std::optional<Partition> partition_of(const std::string& participant) const {
    auto it = assignment.find(participant);
    if (it == assignment.end()) return std::nullopt;
    return it->second;
  }

  std::array<std::size_t, 3> sizes() const {
    std::array<std::size_t, 3> n{};
    for (const auto& [_, p] : assignment) ++n[static_cast<int>(p)];
    return n;
  }
};

/// Parses "a:b:c" (e.g. "7:1:2") and normalizes by the sum.
inline SplitRatios parse_ratios(std::string_view text) {
  std::array<double, 3> v{};
  std::size_t start = 0;
  for (int i = 0; i < 3; ++i) {
    auto end = text.find(':', start);
    if ((i < 2) != (end != std::string_view::npos)) {
      fail(ErrorKind::kParse, "ratios must look like a:b:c, got '" + std::string(text) + "'");
    }
    auto part = std::string(text.substr(start, end == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : end - start));
    try {
      std::size_t used = 0;
      v[i] = std::stod(part, &used);
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      fail(ErrorKind::kParse, "bad ratio component '" + part + "'");
    }
    if (!(v[i] >= 0.0) || !std::isfinite(v[i])) {
      fail(ErrorKind::kDomain, "ratio components must be non-negative");
    }
    start = end + 1;
  }
  const double sum = v[0] + v[1] + v[2];
  if (!(sum > 0.0)) fail(ErrorKind::kDomain, "ratios sum to zero");
  return {v[0] / sum, v[1] / sum, v[2] / sum};
}

namespace detail {

inline void check_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.validation < 0 || r.test < 0) {
    fail(ErrorKind::kDomain, "split ratios must be non-negative");
  }
  if (std::abs(r.train + r.validation + r.test - 1.0) > 1e-9) {
    fail(ErrorKind::kDomain, "split ratios must sum to 1");
  }
}

inline void assign_group(std::vector<std::string> participants, const SplitRatios& ratios,
                         std::uint64_t seed, SplitAssignment& out) {
  const int nonzero = (ratios.train > 0) + (ratios.validation > 0) + (ratios.test > 0);
  const auto count = participants.size();
  if (count < static_cast<std::size_t>(nonzero) || count < 3) {
    fail(ErrorKind::kInvalidData,
         "cannot split " + std::to_string(count) + " participants into " +
             std::to_string(nonzero) + " partitions (need at least 3 participants)");
  }
  std::sort(participants.begin(), participants.end());
  Rng rng(seed);
  rng.shuffle(participants);
  // Floors for validation/test; whatever is left over goes to train.
  const auto n = static_cast<double>(count);
  const auto n_val = static_cast<std::size_t>(std::floor(ratios.validation * n + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(ratios.test * n + 1e-9));
  const auto n_train = count - n_val - n_test;
  for (std::size_t i = 0; i < count; ++i) {
    Partition p = i < n_train           ? Partition::kTrain
                  : i < n_train + n_val ? Partition::kValidation
                                        : Partition::kTest;
    out.assignment.emplace(participants[i], p);
  }
}

}  // namespace detail

/// Participant-level split of all participants in the manifest. Sizes are
/// floor(r * P) for validation and test with the remainder in train.
inline SplitAssignment split_participants(const Manifest& manifest, const SplitRatios& ratios,
                                          std::uint64_t seed) {
  detail::check_ratios(ratios);
  std::set<std::string> ids;
  for (const auto& r : manifest.records) ids.insert(r.participant_id);
  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  detail::assign_group({ids.begin(), ids.end()}, ratios, seed, out);
  return out;
}

/// Splits each cohort on its own (same ratios and seed) and takes the union.
inline SplitAssignment split_by_cohort(const Manifest& manifest, const SplitRatios& ratios,
                                       std::uint64_t seed) {
  detail::check_ratios(ratios);
  std::map<Cohort, std::set<std::string>> groups;
  std::map<std::string, Cohort> seen;
  for (const auto& r : manifest.records) {
    auto [it, inserted] = seen.emplace(r.participant_id, r.cohort);
    if (!inserted && it->second != r.cohort) {
      fail(ErrorKind::kInvalidData, "participant '" + r.participant_id +
                                        "' appears in more than one cohort");
    }
    groups[r.cohort].insert(r.participant_id);
  }
  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  for (const auto& [cohort, ids] : groups) {
    detail::assign_group({ids.begin(), ids.end()}, ratios, seed, out);
  }
  return out;
}

inline nlohmann::ordered_json to_json(const SplitAssignment& s) {
  nlohmann::ordered_json assignment = nlohmann::ordered_json::object();
  for (const auto& [id, p] : s.assignment) assignment[id] = to_string(p);
  return {{"seed", s.seed},
          {"ratios", {s.ratios.train, s.ratios.validation, s.ratios.test}},
          {"assignment", assignment}};
}

inline SplitAssignment split_from_json(const nlohmann::json& j) {
  SplitAssignment s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& r = j.at("ratios");
    s.ratios = {r.at(0).get<double>(), r.at(1).get<double>(), r.at(2).get<double>()};
    for (const auto& [id, value] : j.at("assignment").items()) {
      const auto name = value.get<std::string>();
      Partition p;
      if (name == "train") p = Partition::kTrain;
      else if (name == "validation") p = Partition::kValidation;
      else if (name == "test") p = Partition::kTest;
      else fail(ErrorKind::kParse, "unknown partition '" + name + "' for '" + id + "'");
      s.assignment.emplace(id, p);
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kParse, std::string("malformed split file: ") + e.what());
  }
  return s;
}

/// Random class balancing for one metric: each of the classes 0/1/2 keeps
/// exactly min-class-count trials, drawn without replacement. Retained trials
/// keep their input order.
inline std::vector<TrialRecord> downsample_to_minority(const std::vector<TrialRecord>& trials,
                                                       Metric metric, std::uint64_t seed) {
  std::array<std::vector<std::size_t>, 3> by_class;
  for (std::size_t i = 0; i < trials.size(); ++i) {
    const auto& s = trials[i].scores[metric];
    if (!s) {
      fail(ErrorKind::kInvalidData, "trial '" + trials[i].trial_id + "' has no " +
                                        std::string(to_string(metric)) + " score");
    }
    by_class[*s].push_back(i);
  }
  for (int c = 0; c < 3; ++c) {
    if (by_class[c].empty()) {
      fail(ErrorKind::kInvalidData, "class " + std::to_string(c) + " has no trials for " +
                                        std::string(to_string(metric)));
    }
  }
  const auto m = std::min({by_class[0].size(), by_class[1].size(), by_class[2].size()});
  Rng rng(seed);
  std::vector<bool> keep(trials.size(), false);
  for (auto& idx : by_class) {
    rng.shuffle(idx);
    for (std::size_t k = 0; k < m; ++k) keep[idx[k]] = true;
  }
  std::vector<TrialRecord> out;
  out.reserve(3 * m);
  for (std::size_t i = 0; i < trials.size(); ++i) {
    if (keep[i]) out.push_back(trials[i]);
  }
  return out;
}

/// Records whose participant falls in `partition`.
inline std::vector<TrialRecord> select_partition(const Manifest& manifest,
                                                 const SplitAssignment& split,
                                                 Partition partition) {
  std::vector<TrialRecord> out;
  for (const auto& r : manifest.records) {
    auto p = split.partition_of(r.participant_id);
    if (!p) {
      fail(ErrorKind::kInvalidData, "participant '" + r.participant_id +
                                        "' is missing from the split assignment");
    }
    if (*p == partition) out.push_back(r);
  }
  return out;
}

/// Records scored on `metric`.
inline std::vector<TrialRecord> with_score(const std::vector<TrialRecord>& trials,
                                           Metric metric) {
  std::vector<TrialRecord> out;
  for (const auto& r : trials) {
    if (r.scores[metric]) out.push_back(r);
  }
  return out;
}

}  // namespace namegauge
