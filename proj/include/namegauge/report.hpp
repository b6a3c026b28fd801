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
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "namegauge/dataset.hpp"
#include "namegauge/error.hpp"
#include "namegauge/metrics.hpp"
#include "namegauge/tsv.hpp"

namespace namegauge::report {

/// (dataset, size, model) identifies one row of the comparison tables.
struct RowKey {
  std::string dataset;
  std::string size;
  std::string model;

  auto tie() const { return std::tie(dataset, size, model); }
  friend bool operator<(const RowKey& a, const RowKey& b) { return a.tie() < b.tie(); }
  friend bool operator==(const RowKey& a, const RowKey& b) { return a.tie() == b.tie(); }
};

/// Splits a "size/model" label; a label without '/' is a model with no size.
inline RowKey parse_label(const std::string& dataset, const std::string& label) {
  const auto slash = label.find('/');
  if (slash == std::string::npos) return {dataset, "", label};
  return {dataset, label.substr(0, slash), label.substr(slash + 1)};
}

struct WerRow {
  RowKey key;
  std::string mode;
  double wer = 0.0;
  std::size_t trials = 0;
  std::size_t skipped_empty = 0;
};

struct DetectionRow {
  RowKey key;
  ConfusionCounts counts;
};

struct F1Row {
  RowKey key;
  std::string metric;
  std::size_t n = 0;
  double f1_macro = 0.0;
  double f1_impaired = 0.0;
  double f1_unimpaired = 0.0;
};

struct HistoryPoint {
  std::size_t step = 0;
  double validation_wer = 0.0;
};

struct ResultsBundle {
  std::vector<WerRow> wer;
  std::vector<DetectionRow> detection;
  std::vector<F1Row> f1;
  std::map<std::string, tsv::Table> batteries;            // metric -> battery TSV
  std::map<std::string, std::vector<HistoryPoint>> finetune;  // source -> history

  bool empty() const {
    return wer.empty() && detection.empty() && f1.empty() && batteries.empty() && finetune.empty();
  }
};

inline const std::vector<std::string> kWerColumns = {"dataset", "size",   "model",
                                                     "mode",    "wer",    "n_trials",
                                                     "skipped_empty_reference"};
inline const std::vector<std::string> kDetectionColumns = {"dataset", "size", "model", "accuracy",
                                                           "tp",      "tn",   "fp",    "fn"};
inline const std::vector<std::string> kF1Columns = {"dataset", "size",     "model",     "metric",
                                                    "n",       "f1_macro", "f1_class0", "f1_class1"};

inline tsv::Table wer_table(std::vector<WerRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  tsv::Table t{kWerColumns, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.key.dataset, r.key.size, r.key.model, r.mode, tsv::fixed(r.wer, 2),
                      std::to_string(r.trials), std::to_string(r.skipped_empty)});
  }
  return t;
}

inline tsv::Table detection_table(std::vector<DetectionRow> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
  tsv::Table t{kDetectionColumns, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.key.dataset, r.key.size, r.key.model,
                      tsv::fixed(confusion_accuracy(r.counts), 2), std::to_string(r.counts.tp),
                      std::to_string(r.counts.tn), std::to_string(r.counts.fp),
                      std::to_string(r.counts.fn)});
  }
  return t;
}

inline tsv::Table f1_table(std::vector<F1Row> rows) {
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return std::tie(a.key, a.metric) < std::tie(b.key, b.metric);
  });
  tsv::Table t{kF1Columns, {}};
  for (const auto& r : rows) {
    t.rows.push_back({r.key.dataset, r.key.size, r.key.model, r.metric, std::to_string(r.n),
                      tsv::fixed(r.f1_macro, 4), tsv::fixed(r.f1_impaired, 4),
                      tsv::fixed(r.f1_unimpaired, 4)});
  }
  return t;
}

namespace detail {

inline RowKey key_of(const tsv::Table& t, std::size_t i) {
  return {t.cell(i, "dataset"), t.cell(i, "size"), t.cell(i, "model")};
}

inline std::size_t to_count(const std::string& cell, std::string_view what) {
  const double v = tsv::to_double(cell, what);
  if (v < 0 || v != std::floor(v)) {
    fail(ErrorKind::kFormat, std::string(what) + " must be a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace detail

inline std::vector<WerRow> parse_wer_table(const tsv::Table& t) {
  std::vector<WerRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    rows.push_back({detail::key_of(t, i), t.cell(i, "mode"), tsv::to_double(t.cell(i, "wer"), "wer"),
                    detail::to_count(t.cell(i, "n_trials"), "n_trials"),
                    detail::to_count(t.cell(i, "skipped_empty_reference"), "skipped_empty_reference")});
  }
  return rows;
}

inline std::vector<DetectionRow> parse_detection_table(const tsv::Table& t) {
  std::vector<DetectionRow> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    DetectionRow r{detail::key_of(t, i), {}};
    r.counts.tp = detail::to_count(t.cell(i, "tp"), "tp");
    r.counts.tn = detail::to_count(t.cell(i, "tn"), "tn");
    r.counts.fp = detail::to_count(t.cell(i, "fp"), "fp");
    r.counts.fn = detail::to_count(t.cell(i, "fn"), "fn");
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<F1Row> parse_f1_table(const tsv::Table& t) {
  std::vector<F1Row> rows;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    rows.push_back({detail::key_of(t, i), t.cell(i, "metric"), detail::to_count(t.cell(i, "n"), "n"),
                    tsv::to_double(t.cell(i, "f1_macro"), "f1_macro"),
                    tsv::to_double(t.cell(i, "f1_class0"), "f1_class0"),
                    tsv::to_double(t.cell(i, "f1_class1"), "f1_class1")});
  }
  return rows;
}

/// Fine-tuning history as written by the model adapter: columns step and
/// validation_wer (extra columns are ignored).
inline std::vector<HistoryPoint> parse_finetune_history(const tsv::Table& t) {
  std::vector<HistoryPoint> out;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    out.push_back({detail::to_count(t.cell(i, "step"), "step"),
                   tsv::to_double(t.cell(i, "validation_wer"), "validation_wer")});
  }
  if (out.empty()) fail(ErrorKind::kFormat, "fine-tuning history has no rows");
  return out;
}

/// "accuracy | tp | tn | fp | fn" cells of a detection row.
inline std::string detection_cells(const ConfusionCounts& c) {
  return tsv::fixed(confusion_accuracy(c), 2) + " | " + std::to_string(c.tp) + " | " +
         std::to_string(c.tn) + " | " + std::to_string(c.fp) + " | " + std::to_string(c.fn);
}

/// Markdown rendering of every table present in the bundle. WER and
/// detection accuracy use 2 decimals, F1 macro 4.
inline std::string render_markdown(const ResultsBundle& b) {
  if (b.empty()) fail(ErrorKind::kMissingInput, "results bundle is empty");
  std::string md = "# Evaluation report\n";

  if (!b.wer.empty()) {
    std::set<std::string> sizes;
    std::map<std::tuple<std::string, std::string, std::string>, std::map<std::string, double>> cells;
    for (const auto& r : b.wer) {
      sizes.insert(r.key.size);
      cells[{r.key.dataset, r.key.model, r.mode}][r.key.size] = r.wer;
    }
    md += "\n## Word error rate (%)\n\n| Testing dataset | Model | Mode |";
    for (const auto& s : sizes) md += " " + (s.empty() ? std::string("-") : s) + " |";
    md += "\n|---|---|---|";
    for (std::size_t i = 0; i < sizes.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& [key, by_size] : cells) {
      md += "| " + std::get<0>(key) + " | " + std::get<1>(key) + " | " + std::get<2>(key) + " |";
      for (const auto& s : sizes) {
        auto it = by_size.find(s);
        md += " " + (it == by_size.end() ? std::string("") : tsv::fixed(it->second, 2)) + " |";
      }
      md += "\n";
    }
  }

  if (!b.detection.empty()) {
    auto rows = b.detection;
    std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.key < y.key; });
    md += "\n## Target word detection\n\n"
          "| Testing dataset | Size | Model | Accuracy | TP | TN | FP | FN |\n"
          "|---|---|---|---|---|---|---|---|\n";
    for (const auto& r : rows) {
      md += "| " + r.key.dataset + " | " + r.key.size + " | " + r.key.model + " | " +
            detection_cells(r.counts) + " |\n";
    }
  }

  if (!b.f1.empty()) {
    std::map<RowKey, std::map<std::string, double>> cells;
    for (const auto& r : b.f1) cells[r.key][r.metric] = r.f1_macro;
    md += "\n## F1 macro (binarized)\n\n| Testing dataset | Size | Encoder | Semantic | Dysfluency "
          "| Self-correction | Phonology |\n|---|---|---|---|---|---|---|\n";
    for (const auto& [key, by_metric] : cells) {
      md += "| " + key.dataset + " | " + key.size + " | " + key.model + " |";
      for (auto m : kAllMetrics) {
        auto it = by_metric.find(std::string(to_string(m)));
        md += " " + (it == by_metric.end() ? std::string("") : tsv::fixed(it->second, 4)) + " |";
      }
      md += "\n";
    }
  }

  for (const auto& [metric, table] : b.batteries) {
    md += "\n## Validity battery: " + metric + "\n\n|";
    for (const auto& h : table.header) md += " " + h + " |";
    md += "\n|";
    for (std::size_t i = 0; i < table.header.size(); ++i) md += "---|";
    md += "\n";
    for (const auto& row : table.rows) {
      md += "|";
      for (const auto& c : row) md += " " + c + " |";
      md += "\n";
    }
  }

  for (const auto& [source, history] : b.finetune) {
    const auto best = std::min_element(history.begin(), history.end(), [](const auto& x, const auto& y) {
      return x.validation_wer < y.validation_wer;
    });
    md += "\n## Fine-tuning history: " + source + "\n\n" + std::to_string(history.size()) +
          " evaluations; best validation WER " + tsv::fixed(best->validation_wer, 2) + " at step " +
          std::to_string(best->step) + ".\n";
  }
  return md;
}

}  // namespace namegauge::report
