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
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "namegauge/error.hpp"

namespace namegauge {

namespace detail {

inline bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c >= 0x80;
}

}  // namespace detail

/// Lowercases ASCII, turns punctuation into spaces (apostrophes and hyphens
/// survive between word characters), then splits on whitespace. Non-ASCII
/// bytes and non-words pass through untouched.
inline std::vector<std::string> normalize_text(std::string_view s) {
  std::string cleaned;
  cleaned.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (detail::is_word_byte(c)) {
      cleaned += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    } else if ((c == '\'' || c == '-') && i > 0 && i + 1 < s.size() &&
               detail::is_word_byte(static_cast<unsigned char>(s[i - 1])) &&
               detail::is_word_byte(static_cast<unsigned char>(s[i + 1]))) {
      cleaned += static_cast<char>(c);
    } else {
      cleaned += ' ';
    }
  }
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && cleaned[i] == ' ') ++i;
    std::size_t j = i;
    while (j < cleaned.size() && cleaned[j] != ' ') ++j;
    if (j > i) tokens.emplace_back(cleaned.substr(i, j - i));
    i = j;
  }
  return tokens;
}

struct EditCounts {
  std::uint64_t substitutions = 0;
  std::uint64_t insertions = 0;
  std::uint64_t deletions = 0;
  std::uint64_t reference_words = 0;

  std::uint64_t errors() const { return substitutions + insertions + deletions; }

  EditCounts& operator+=(const EditCounts& o) {
    substitutions += o.substitutions;
    insertions += o.insertions;
    deletions += o.deletions;
    reference_words += o.reference_words;
    return *this;
  }
  friend bool operator==(const EditCounts&, const EditCounts&) = default;
};

/// Word-level Levenshtein alignment with unit costs. On ties the backtrace
/// prefers match/substitution, then deletion, then insertion.
inline EditCounts edit_ops(std::span<const std::string> ref, std::span<const std::string> hyp) {
  if (ref.empty()) fail(ErrorKind::kDomain, "WER is undefined for an empty reference");
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::uint32_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::uint32_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = static_cast<std::uint32_t>(i);
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<std::uint32_t>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::uint32_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  EditCounts out;
  out.reference_words = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++out.substitutions;
        --i, --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++out.deletions;
      --i;
    } else {
      ++out.insertions;
      --j;
    }
  }
  return out;
}

/// 100 * (S + I + D) / N; exceeds 100 when insertions dominate.
inline double wer(const EditCounts& c) {
  if (c.reference_words == 0) fail(ErrorKind::kDomain, "WER is undefined for N = 0");
  return 100.0 * static_cast<double>(c.errors()) / static_cast<double>(c.reference_words);
}

enum class WerMode { kMeanPerTrial, kPooled };

struct CorpusWer {
  double value = 0.0;
  std::size_t scored_trials = 0;
  std::size_t skipped_empty_reference = 0;
  EditCounts totals;
};

/// Corpus WER over (reference, hypothesis) token-list pairs. Pairs with an
/// empty reference are skipped and counted.
inline CorpusWer corpus_wer(
    std::span<const std::pair<std::vector<std::string>, std::vector<std::string>>> pairs,
    WerMode mode) {
  CorpusWer out;
  double sum = 0.0;
  for (const auto& [ref, hyp] : pairs) {
    if (ref.empty()) {
      ++out.skipped_empty_reference;
      continue;
    }
    const auto c = edit_ops(ref, hyp);
    out.totals += c;
    sum += wer(c);
    ++out.scored_trials;
  }
  if (out.scored_trials == 0) {
    fail(ErrorKind::kDomain, "corpus WER needs at least one non-empty reference");
  }
  out.value = mode == WerMode::kPooled ? wer(out.totals)
                                       : sum / static_cast<double>(out.scored_trials);
  return out;
}

enum class Detection { kTruePositive, kTrueNegative, kFalsePositive, kFalseNegative };

inline std::string_view to_string(Detection d) {
  switch (d) {
    case Detection::kTruePositive: return "TP";
    case Detection::kTrueNegative: return "TN";
    case Detection::kFalsePositive: return "FP";
    case Detection::kFalseNegative: return "FN";
  }
  return "";
}

/// Exact-token membership of the (normalized) target in reference and
/// hypothesis: "combs" does not count as "comb".
inline Detection detect_target(std::string_view ref, std::string_view hyp,
                               std::string_view target) {
  const auto target_tokens = normalize_text(target);
  if (target_tokens.size() != 1) {
    fail(ErrorKind::kDomain, "target '" + std::string(target) + "' is not a single word");
  }
  const auto& word = target_tokens.front();
  auto contains = [&](std::string_view text) {
    for (const auto& t : normalize_text(text)) {
      if (t == word) return true;
    }
    return false;
  };
  const bool in_ref = contains(ref);
  const bool in_hyp = contains(hyp);
  if (in_ref) return in_hyp ? Detection::kTruePositive : Detection::kFalseNegative;
  return in_hyp ? Detection::kFalsePositive : Detection::kTrueNegative;
}

struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }

  void add(Detection d) {
    switch (d) {
      case Detection::kTruePositive: ++tp; break;
      case Detection::kTrueNegative: ++tn; break;
      case Detection::kFalsePositive: ++fp; break;
      case Detection::kFalseNegative: ++fn; break;
    }
  }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline double confusion_accuracy(const ConfusionCounts& c) {
  if (c.total() == 0) fail(ErrorKind::kDomain, "accuracy of empty confusion counts");
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

/// Impaired (0) for ratings 0 and 1, unimpaired (1) for rating 2.
inline int binarize_score(int score) {
  if (score < 0 || score > 2) {
    fail(ErrorKind::kDomain, "score must be 0, 1 or 2, got " + std::to_string(score));
  }
  return score == 2 ? 1 : 0;
}

struct ClassScores {
  std::array<double, 2> precision{};
  std::array<double, 2> recall{};
  std::array<double, 2> f1{};
  int n_classes = 2;
  double macro = 0.0;
};

/// Binary per-class precision/recall/F1 and their unweighted mean. Any 0/0
/// ratio is defined as 0, so a class absent from both inputs scores F1 = 0.
inline ClassScores f1_macro(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size()) {
    fail(ErrorKind::kDimension, "prediction and label counts differ");
  }
  if (preds.empty()) fail(ErrorKind::kDomain, "F1 of an empty prediction set");
  std::array<std::array<std::uint64_t, 2>, 2> cm{};  // [label][pred]
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if ((preds[i] != 0 && preds[i] != 1) || (labels[i] != 0 && labels[i] != 1)) {
      fail(ErrorKind::kDomain, "f1_macro expects binarized 0/1 values");
    }
    ++cm[labels[i]][preds[i]];
  }
  auto ratio = [](double num, double den) { return den > 0 ? num / den : 0.0; };
  ClassScores s;
  for (int c = 0; c < 2; ++c) {
    const double tp = static_cast<double>(cm[c][c]);
    const double predicted = static_cast<double>(cm[0][c] + cm[1][c]);
    const double actual = static_cast<double>(cm[c][0] + cm[c][1]);
    s.precision[c] = ratio(tp, predicted);
    s.recall[c] = ratio(tp, actual);
    s.f1[c] = ratio(2.0 * s.precision[c] * s.recall[c], s.precision[c] + s.recall[c]);
  }
  s.macro = (s.f1[0] + s.f1[1]) / 2.0;
  return s;
}

}  // namespace namegauge
