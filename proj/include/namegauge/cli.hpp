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
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "namegauge/audio.hpp"
#include "namegauge/dataset.hpp"
#include "namegauge/embeddings.hpp"
#include "namegauge/error.hpp"
#include "namegauge/io.hpp"
#include "namegauge/mel.hpp"
#include "namegauge/metrics.hpp"
#include "namegauge/probe.hpp"
#include "namegauge/report.hpp"
#include "namegauge/split.hpp"
#include "namegauge/stats.hpp"
#include "namegauge/tsv.hpp"
#include "namegauge/validity.hpp"
#include "namegauge/version.hpp"

namespace namegauge::cli {

namespace fs = std::filesystem;

/// Everything a subcommand can be configured with. Unset optionals fall
/// back to the library defaults.
struct RunConfig {
  std::string subcommand;
  std::string manifest;
  std::string embeddings;
  std::vector<std::string> hypotheses;
  std::string covariates;
  std::string split;
  std::string probe;
  std::string predictions;
  std::vector<std::string> results;
  std::string stimuli;
  std::string accents;
  std::string out;
  std::uint64_t seed = 42;
  std::string metric;
  std::string mode = "mean";
  std::string ratios = "7:1:2";
  std::string partition = "test";
  std::string dataset;
  std::string size;
  std::string model;
  std::optional<std::size_t> max_steps;
  std::optional<std::size_t> warmup;
  std::optional<std::size_t> batch;
  std::optional<double> lr;
  std::optional<std::size_t> hidden;
  std::optional<std::size_t> eval_interval;
  std::optional<double> weight_decay;
  double pad_to = 30.0;
};

/// Collects the inputs, outputs and parameters of one invocation for run.json.
class RunRecord {
 public:
  explicit RunRecord(const RunConfig& cfg) : cfg_(cfg), start_(std::chrono::steady_clock::now()) {}

  void input(const std::string& name, const std::string& path) { inputs_[name].push_back(path); }
  void output(const fs::path& path) { outputs_.push_back(path.filename().string()); }
  void parameter(const std::string& name, nlohmann::ordered_json value) {
    parameters_[name] = std::move(value);
  }

  nlohmann::ordered_json to_json() const {
    const auto elapsed = std::chrono::duration<double, std::milli>(
        std::chrono::steady_clock::now() - start_).count();
    nlohmann::ordered_json inputs = nlohmann::ordered_json::object();
    for (const auto& [k, v] : inputs_) inputs[k] = v;
    return {{"tool", "namegauge"},
            {"version", kVersion},
            {"subcommand", cfg_.subcommand},
            {"seed", cfg_.seed},
            {"inputs", inputs},
            {"parameters", parameters_.empty() ? nlohmann::ordered_json::object() : parameters_},
            {"outputs", outputs_},
            {"timings_ms", {{"total", elapsed}}}};
  }

 private:
  const RunConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
  std::map<std::string, std::vector<std::string>> inputs_;
  std::vector<std::string> outputs_;
  nlohmann::ordered_json parameters_ = nlohmann::ordered_json::object();
};

namespace detail {

inline const std::string& require(const std::string& value, const char* flag) {
  if (value.empty()) fail(ErrorKind::kMissingInput, std::string("missing required flag ") + flag);
  return value;
}

inline fs::path existing(const std::string& value, const char* flag) {
  const fs::path p = require(value, flag);
  if (!fs::exists(p)) fail(ErrorKind::kMissingInput, std::string(flag) + ": no such file " + p.string());
  return p;
}

inline Metric metric_of(const RunConfig& cfg) {
  auto m = parse_metric(require(cfg.metric, "--metric"));
  if (!m) fail(ErrorKind::kParse, "unknown metric '" + cfg.metric + "'");
  return *m;
}

inline fs::path out_dir(const RunConfig& cfg) {
  const fs::path dir = require(cfg.out, "--out");
  fs::create_directories(dir);
  return dir;
}

inline void write_text(RunRecord& run, const fs::path& path, const std::string& text) {
  io::write_atomic(path, text);
  run.output(path);
}

/// "[label=]path" -> (label, path); the label defaults to the file stem.
inline std::pair<std::string, fs::path> labeled_path(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

inline std::string file_safe(std::string label) {
  for (auto& c : label) {
    if (c == '/' || c == '\\' || c == ' ' || c == ':') c = '_';
  }
  return label;
}

inline SplitAssignment load_split(const fs::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorKind::kParse, path.string() + ": " + e.what());
  }
  return split_from_json(j);
}

inline std::vector<double> features_for(const EmbeddingSet& set, const std::string& id) {
  const auto* v = set.find(id);
  if (!v) fail(ErrorKind::kMissingInput, "no embedding for trial '" + id + "'");
  return {v->begin(), v->end()};
}

inline probe::LabeledData labeled(const std::vector<TrialRecord>& trials, const EmbeddingSet& set,
                                  Metric metric) {
  probe::LabeledData data;
  data.dim = set.dim;
  for (const auto& r : trials) data.push(features_for(set, r.trial_id), *r.scores[metric]);
  return data;
}

inline probe::TrainConfig train_config(const RunConfig& cfg) {
  probe::TrainConfig t;
  t.seed = cfg.seed;
  if (cfg.max_steps) t.max_steps = *cfg.max_steps;
  if (cfg.warmup) t.warmup_steps = *cfg.warmup;
  if (cfg.batch) t.batch_size = *cfg.batch;
  if (cfg.lr) t.peak_lr = *cfg.lr;
  if (cfg.hidden) t.hidden = *cfg.hidden;
  if (cfg.eval_interval) t.eval_interval = *cfg.eval_interval;
  if (cfg.weight_decay) t.weight_decay = *cfg.weight_decay;
  return t;
}

inline std::size_t thread_budget() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("NAMEGAUGE_THREADS"); env && *env) {
    try {
      const long v = std::stol(env);
      if (v >= 1) n = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      fail(ErrorKind::kParse, std::string("NAMEGAUGE_THREADS must be a positive integer, got '") + env + "'");
    }
  }
  return n;
}

struct ScoredModel {
  std::string label;
  report::RowKey key;
  std::vector<double> per_trial_wer;  // aligned with the non-empty-reference trials
};

}  // namespace detail

/// Participant-level train/validation/test assignment, per cohort.
inline void cmd_split(const RunConfig& cfg, RunRecord& run) {
  const auto manifest_path = detail::existing(cfg.manifest, "--manifest");
  run.input("manifest", manifest_path.string());
  const auto manifest = load_manifest(manifest_path);
  const auto ratios = parse_ratios(cfg.ratios);
  const auto split = split_by_cohort(manifest, ratios, cfg.seed);
  run.parameter("ratios", {ratios.train, ratios.validation, ratios.test});
  const auto sizes = split.sizes();
  run.parameter("sizes", {sizes[0], sizes[1], sizes[2]});
  detail::write_text(run, detail::out_dir(cfg) / "split.json", to_json(split).dump(2) + "\n");
}

/// Class-balanced training subset for one metric.
inline void cmd_balance(const RunConfig& cfg, RunRecord& run) {
  const auto manifest_path = detail::existing(cfg.manifest, "--manifest");
  const auto split_path = detail::existing(cfg.split, "--split");
  run.input("manifest", manifest_path.string());
  run.input("split", split_path.string());
  const auto metric = detail::metric_of(cfg);
  const auto manifest = filter_scored(load_manifest(manifest_path));
  const auto split = detail::load_split(split_path);
  const auto train = with_score(select_partition(manifest, split, Partition::kTrain), metric);
  const auto balanced = downsample_to_minority(train, metric, cfg.seed);

  tsv::Table counts{{"metric", "class", "before", "after"}, {}};
  for (int c = 0; c < 3; ++c) {
    auto count = [&](const std::vector<TrialRecord>& v) {
      return std::count_if(v.begin(), v.end(), [&](const auto& r) { return *r.scores[metric] == c; });
    };
    counts.rows.push_back({std::string(to_string(metric)), std::to_string(c),
                           std::to_string(count(train)), std::to_string(count(balanced))});
  }
  const auto dir = detail::out_dir(cfg);
  Manifest out{balanced, stimuli_of(balanced)};
  const std::string m(to_string(metric));
  detail::write_text(run, dir / ("balanced_train." + m + ".jsonl"), format_manifest(out));
  detail::write_text(run, dir / ("balance_summary." + m + ".tsv"), tsv::format(counts));
  run.parameter("metric", m);
}

/// Fallback features: 16 kHz log-Mel, pooled to per-channel mean and std.
inline void cmd_featurize(const RunConfig& cfg, RunRecord& run) {
  const auto manifest_path = detail::existing(cfg.manifest, "--manifest");
  run.input("manifest", manifest_path.string());
  const auto manifest = load_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  const auto& records = manifest.records;

  std::vector<std::vector<float>> features(records.size());
  std::vector<std::exception_ptr> errors(records.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < records.size(); i = next++) {
      try {
        auto audio = read_wav(base / records[i].audio_path);
        audio = resample(audio, mel::kSampleRate);
        const auto spec = mel::log_mel(audio, cfg.pad_to);
        const auto pooled = mel::pool_features(spec, spec.content_frames);
        features[i].assign(pooled.values.begin(), pooled.values.end());
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto threads = std::min(detail::thread_budget(), std::max<std::size_t>(1, records.size()));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EmbeddingSet set;
  set.dim = 2 * mel::kMelChannels;
  for (std::size_t i = 0; i < records.size(); ++i) set.insert(records[i].trial_id, std::move(features[i]));
  run.parameter("pad_to", cfg.pad_to);
  run.parameter("threads", threads);
  const auto path = detail::out_dir(cfg) / "features.cseb";
  write_embeddings(set, path);
  run.output(path);
}

/// WER (+ per-trial detection outcome) for one or more hypothesis sets, and
/// Friedman / pairwise Mann-Whitney model comparison when there are several.
inline void cmd_wer(const RunConfig& cfg, RunRecord& run) {
  const auto manifest_path = detail::existing(cfg.manifest, "--manifest");
  run.input("manifest", manifest_path.string());
  if (cfg.hypotheses.empty()) fail(ErrorKind::kMissingInput, "missing required flag --hypotheses");
  const auto manifest = load_manifest(manifest_path);
  const WerMode mode = cfg.mode == "pooled" ? WerMode::kPooled : WerMode::kMeanPerTrial;
  if (cfg.mode != "mean" && cfg.mode != "pooled") {
    fail(ErrorKind::kParse, "--mode must be mean or pooled");
  }
  const std::string dataset = cfg.dataset.empty() ? manifest_path.stem().string() : cfg.dataset;
  const auto dir = detail::out_dir(cfg);

  std::vector<report::WerRow> wer_rows;
  std::vector<report::DetectionRow> det_rows;
  std::vector<detail::ScoredModel> models;
  std::set<std::string> labels;
  for (const auto& spec : cfg.hypotheses) {
    auto [label, path] = detail::labeled_path(spec);
    if (!labels.insert(label).second) fail(ErrorKind::kDuplicateId, "duplicate model label '" + label + "'");
    if (!fs::exists(path)) fail(ErrorKind::kMissingInput, "--hypotheses: no such file " + path.string());
    run.input("hypotheses", path.string());
    const auto hyps = load_hypotheses(path);

    tsv::Table trials{{"trial_id", "N", "S", "I", "D", "wer", "detection_outcome"}, {}};
    std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
    detail::ScoredModel scored{label, report::parse_label(dataset, label), {}};
    ConfusionCounts confusion;
    for (const auto& r : manifest.records) {
      auto it = hyps.entries.find(r.trial_id);
      if (it == hyps.entries.end()) {
        fail(ErrorKind::kMissingInput, path.string() + ": no hypothesis for trial '" + r.trial_id + "'");
      }
      const auto detection = detect_target(r.transcript, it->second, r.target_word);
      confusion.add(detection);
      auto ref = normalize_text(r.transcript);
      auto hyp = normalize_text(it->second);
      if (ref.empty()) {
        trials.rows.push_back({r.trial_id, "0", "", "", "", "", std::string(to_string(detection))});
      } else {
        const auto c = edit_ops(ref, hyp);
        scored.per_trial_wer.push_back(wer(c));
        trials.rows.push_back({r.trial_id, std::to_string(c.reference_words),
                               std::to_string(c.substitutions), std::to_string(c.insertions),
                               std::to_string(c.deletions), tsv::fixed(wer(c), 2),
                               std::string(to_string(detection))});
      }
      pairs.emplace_back(std::move(ref), std::move(hyp));
    }
    const auto corpus = corpus_wer(pairs, mode);
    wer_rows.push_back({scored.key, cfg.mode, corpus.value, corpus.scored_trials,
                        corpus.skipped_empty_reference});
    det_rows.push_back({scored.key, confusion});
    detail::write_text(run, dir / (detail::file_safe(label) + ".trials.tsv"), tsv::format(trials));
    models.push_back(std::move(scored));
  }
  detail::write_text(run, dir / "wer_summary.tsv", tsv::format(report::wer_table(wer_rows)));
  detail::write_text(run, dir / "detect_summary.tsv", tsv::format(report::detection_table(det_rows)));

  if (models.size() >= 2 && models.front().per_trial_wer.size() >= 2) {
    tsv::Table cmp{{"comparison", "test", "statistic", "df", "n", "p_raw", "p_adjusted"}, {}};
    std::vector<std::vector<double>> blocks(models.front().per_trial_wer.size());
    for (std::size_t t = 0; t < blocks.size(); ++t) {
      for (const auto& m : models) blocks[t].push_back(m.per_trial_wer[t]);
    }
    const auto fr = stats::friedman(blocks);
    cmp.rows.push_back({"all", std::string(stats::to_string(fr.method)), tsv::num(fr.statistic),
                        tsv::num(fr.df), std::to_string(blocks.size()), tsv::num(fr.p_value),
                        tsv::num(fr.p_adjusted)});
    const double pairs = static_cast<double>(models.size() * (models.size() - 1) / 2);
    for (std::size_t a = 0; a < models.size(); ++a) {
      for (std::size_t b = a + 1; b < models.size(); ++b) {
        const auto mw = stats::mann_whitney_u(models[a].per_trial_wer, models[b].per_trial_wer, pairs);
        cmp.rows.push_back({models[a].label + " vs " + models[b].label,
                            std::string(stats::to_string(mw.method)), tsv::num(mw.statistic), "",
                            std::to_string(models[a].per_trial_wer.size()), tsv::num(mw.p_value),
                            tsv::num(mw.p_adjusted)});
      }
    }
    detail::write_text(run, dir / "model_comparison.tsv", tsv::format(cmp));
    run.parameter("bonferroni_factor", pairs);
  }
  run.parameter("mode", cfg.mode);
  run.parameter("dataset", dataset);
}

/// Target-word detection outcomes and confusion counts per hypothesis set.
inline void cmd_detect(const RunConfig& cfg, RunRecord& run) {
  const auto manifest_path = detail::existing(cfg.manifest, "--manifest");
  run.input("manifest", manifest_path.string());
  if (cfg.hypotheses.empty()) fail(ErrorKind::kMissingInput, "missing required flag --hypotheses");
  const auto manifest = load_manifest(manifest_path);
  const std::string dataset = cfg.dataset.empty() ? manifest_path.stem().string() : cfg.dataset;
  const auto dir = detail::out_dir(cfg);
  std::vector<report::DetectionRow> rows;
  for (const auto& spec : cfg.hypotheses) {
    auto [label, path] = detail::labeled_path(spec);
    if (!fs::exists(path)) fail(ErrorKind::kMissingInput, "--hypotheses: no such file " + path.string());
    run.input("hypotheses", path.string());
    const auto hyps = load_hypotheses(path);
    tsv::Table table{{"trial_id", "target_word", "detection_outcome"}, {}};
    ConfusionCounts counts;
    for (const auto& r : manifest.records) {
      auto it = hyps.entries.find(r.trial_id);
      if (it == hyps.entries.end()) {
        fail(ErrorKind::kMissingInput, path.string() + ": no hypothesis for trial '" + r.trial_id + "'");
      }
      const auto d = detect_target(r.transcript, it->second, r.target_word);
      counts.add(d);
      table.rows.push_back({r.trial_id, r.target_word, std::string(to_string(d))});
    }
    rows.push_back({report::parse_label(dataset, label), counts});
    detail::write_text(run, dir / (detail::file_safe(label) + ".detect.tsv"), tsv::format(table));
  }
  detail::write_text(run, dir / "detect_summary.tsv", tsv::format(report::detection_table(rows)));
}

/// Trains the probe head on the balanced train partition, selecting on the
/// validation partition.
inline void cmd_probe_train(const RunConfig& cfg, RunRecord& run) {
  const auto manifest_path = detail::existing(cfg.manifest, "--manifest");
  const auto split_path = detail::existing(cfg.split, "--split");
  const auto emb_path = detail::existing(cfg.embeddings, "--embeddings");
  run.input("manifest", manifest_path.string());
  run.input("split", split_path.string());
  run.input("embeddings", emb_path.string());
  const auto metric = detail::metric_of(cfg);
  const auto manifest = filter_scored(load_manifest(manifest_path));
  const auto split = detail::load_split(split_path);
  const auto embeddings = read_embeddings(emb_path);

  const auto train_trials = downsample_to_minority(
      with_score(select_partition(manifest, split, Partition::kTrain), metric), metric, cfg.seed);
  const auto val_trials = with_score(select_partition(manifest, split, Partition::kValidation), metric);
  const auto tcfg = detail::train_config(cfg);
  const auto result = probe::train_probe(detail::labeled(train_trials, embeddings, metric),
                                         detail::labeled(val_trials, embeddings, metric), tcfg);
  const auto dir = detail::out_dir(cfg);
  const auto probe_path = dir / "probe.csph";
  io::write_atomic(probe_path, probe::encode_probe(result.probe));
  run.output(probe_path);
  detail::write_text(run, dir / "history.tsv", probe::format_history(result.history));
  run.parameter("metric", std::string(to_string(metric)));
  run.parameter("train_trials", train_trials.size());
  run.parameter("validation_trials", val_trials.size());
  run.parameter("max_steps", tcfg.max_steps);
  run.parameter("warmup_steps", tcfg.warmup_steps);
  run.parameter("batch_size", tcfg.batch_size);
  run.parameter("peak_lr", tcfg.peak_lr);
  run.parameter("hidden", tcfg.hidden);
  run.parameter("best_step", result.history.best_step);
  run.parameter("best_f1", result.history.best_f1);
}

/// Predicts 0/1/2 scores for the scored trials of one partition (or all)
/// and reports binarized F1.
inline void cmd_probe_eval(const RunConfig& cfg, RunRecord& run) {
  const auto manifest_path = detail::existing(cfg.manifest, "--manifest");
  const auto split_path = detail::existing(cfg.split, "--split");
  const auto emb_path = detail::existing(cfg.embeddings, "--embeddings");
  const auto probe_path = detail::existing(cfg.probe, "--probe");
  run.input("manifest", manifest_path.string());
  run.input("split", split_path.string());
  run.input("embeddings", emb_path.string());
  run.input("probe", probe_path.string());
  const auto metric = detail::metric_of(cfg);
  const auto manifest = filter_scored(load_manifest(manifest_path));
  const auto split = detail::load_split(split_path);
  const auto embeddings = read_embeddings(emb_path);
  const auto trained = probe::decode_probe(io::read_bytes(probe_path));

  std::vector<TrialRecord> trials;
  if (cfg.partition == "all") {
    trials = with_score(manifest.records, metric);
  } else {
    Partition p;
    if (cfg.partition == "train") p = Partition::kTrain;
    else if (cfg.partition == "validation") p = Partition::kValidation;
    else if (cfg.partition == "test") p = Partition::kTest;
    else fail(ErrorKind::kParse, "--partition must be train, validation, test or all");
    trials = with_score(select_partition(manifest, split, p), metric);
  }
  if (trials.empty()) fail(ErrorKind::kInvalidData, "no scored trials in partition '" + cfg.partition + "'");

  const std::string m(to_string(metric));
  tsv::Table preds{{"trial_id", "participant_id", "cohort", "partition", "metric", "label",
                    "prediction", "p0", "p1", "p2"}, {}};
  std::vector<int> bin_pred, bin_label;
  for (const auto& r : trials) {
    const auto x = detail::features_for(embeddings, r.trial_id);
    const auto p = probe::predict(trained.head, x);
    const int label = *r.scores[metric];
    bin_pred.push_back(binarize_score(p.score));
    bin_label.push_back(binarize_score(label));
    preds.rows.push_back({r.trial_id, r.participant_id, std::string(to_string(r.cohort)),
                          std::string(to_string(*split.partition_of(r.participant_id))), m,
                          std::to_string(label), std::to_string(p.score),
                          tsv::fixed(p.probabilities[0], 6), tsv::fixed(p.probabilities[1], 6),
                          tsv::fixed(p.probabilities[2], 6)});
  }
  const auto scores = f1_macro(bin_pred, bin_label);
  const std::string dataset = cfg.dataset.empty() ? manifest_path.stem().string() : cfg.dataset;
  const report::F1Row row{{dataset, cfg.size, cfg.model.empty() ? "probe" : cfg.model}, m, trials.size(),
                          scores.macro, scores.f1[0], scores.f1[1]};
  const auto dir = detail::out_dir(cfg);
  detail::write_text(run, dir / "predictions.tsv", tsv::format(preds));
  detail::write_text(run, dir / "probe_metrics.tsv", tsv::format(report::f1_table({row})));
  run.parameter("metric", m);
  run.parameter("partition", cfg.partition);
  run.parameter("f1_macro", scores.macro);
}

/// Patient-level impairment status and the validity battery.
inline void cmd_validity(const RunConfig& cfg, RunRecord& run) {
  const auto pred_path = detail::existing(cfg.predictions, "--predictions");
  const auto cov_path = detail::existing(cfg.covariates, "--covariates");
  run.input("predictions", pred_path.string());
  run.input("covariates", cov_path.string());
  const auto table = tsv::load(pred_path);
  const auto covariates = validity::load_covariates(cov_path);

  std::string metric = cfg.metric;
  std::map<std::string, std::vector<int>> per_patient;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row_metric = table.cell(i, "metric");
    if (metric.empty()) metric = row_metric;
    if (row_metric != metric) continue;
    if (table.cell(i, "cohort") != "patient") continue;
    const double v = tsv::to_double(table.cell(i, "prediction"), "prediction");
    per_patient[table.cell(i, "participant_id")].push_back(static_cast<int>(v));
  }
  if (metric.empty() || !parse_metric(metric)) fail(ErrorKind::kInvalidData, "predictions carry no valid metric");
  if (per_patient.empty()) fail(ErrorKind::kInvalidData, "no patient predictions for metric " + metric);

  const auto status = validity::derive_patient_status(per_patient);
  const auto dir = detail::out_dir(cfg);
  tsv::Table status_table{{"participant_id", "trials", "mean_score", "status"}, {}};
  for (const auto& [id, s] : status) {
    status_table.rows.push_back({id, std::to_string(s.trials), tsv::fixed(s.mean_score, 4),
                                 s.impaired ? "impaired" : "unimpaired"});
  }
  detail::write_text(run, dir / ("patient_status." + metric + ".tsv"), tsv::format(status_table));

  const auto battery = validity::validity_analysis(status, covariates);
  tsv::Table out{{"variable", "group_impaired_n", "group_unimpaired_n", "test", "statistic", "df",
                  "p_raw", "p_adjusted", "skipped_reason", "direction"}, {}};
  for (const auto& r : battery.rows) {
    out.rows.push_back({r.variable, std::to_string(r.impaired_n), std::to_string(r.unimpaired_n),
                        r.test, tsv::num(r.statistic), tsv::num(r.df), tsv::num(r.p_raw),
                        tsv::num(r.p_adjusted), r.skipped_reason, tsv::num(r.direction)});
  }
  detail::write_text(run, dir / ("validity_battery." + metric + ".tsv"), tsv::format(out));
  run.parameter("metric", metric);
  run.parameter("patients", status.size());
}

/// Merges result directories into report.md plus sorted summary tables.
inline void cmd_report(const RunConfig& cfg, RunRecord& run) {
  if (cfg.results.empty()) fail(ErrorKind::kMissingInput, "missing required flag --results");
  report::ResultsBundle bundle;
  std::set<std::pair<report::RowKey, std::string>> seen;
  for (const auto& d : cfg.results) {
    const fs::path dir(d);
    if (!fs::is_directory(dir)) fail(ErrorKind::kMissingInput, "--results: no such directory " + d);
    run.input("results", d);
    auto load_if = [&](const char* name, auto&& sink) {
      if (fs::exists(dir / name)) sink(tsv::load(dir / name));
    };
    load_if("wer_summary.tsv", [&](const tsv::Table& t) {
      for (auto& r : report::parse_wer_table(t)) {
        if (!seen.insert({r.key, "wer:" + r.mode}).second) {
          fail(ErrorKind::kDuplicateId, "duplicate WER row " + r.key.dataset + "/" + r.key.size + "/" + r.key.model);
        }
        bundle.wer.push_back(r);
      }
    });
    load_if("detect_summary.tsv", [&](const tsv::Table& t) {
      for (auto& r : report::parse_detection_table(t)) {
        if (!seen.insert({r.key, "detect"}).second) {
          fail(ErrorKind::kDuplicateId, "duplicate detection row " + r.key.dataset + "/" + r.key.size + "/" + r.key.model);
        }
        bundle.detection.push_back(r);
      }
    });
    load_if("probe_metrics.tsv", [&](const tsv::Table& t) {
      for (auto& r : report::parse_f1_table(t)) {
        if (!seen.insert({r.key, "f1:" + r.metric}).second) {
          fail(ErrorKind::kDuplicateId, "duplicate F1 row " + r.key.dataset + "/" + r.key.size + "/" + r.key.model);
        }
        bundle.f1.push_back(r);
      }
    });
    load_if("finetune_history.tsv", [&](const tsv::Table& t) {
      bundle.finetune[dir.filename().string()] = report::parse_finetune_history(t);
    });
    std::vector<fs::path> batteries;
    for (const auto& entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (name.starts_with("validity_battery.") && name.ends_with(".tsv")) batteries.push_back(entry.path());
    }
    std::sort(batteries.begin(), batteries.end());
    for (const auto& p : batteries) {
      auto metric = p.filename().string();
      metric = metric.substr(17, metric.size() - 17 - 4);
      if (bundle.batteries.contains(metric)) {
        fail(ErrorKind::kDuplicateId, "duplicate validity battery for " + metric);
      }
      bundle.batteries.emplace(metric, tsv::load(p));
    }
  }
  const auto md = report::render_markdown(bundle);
  const auto out = detail::out_dir(cfg);
  detail::write_text(run, out / "report.md", md);
  if (!bundle.wer.empty()) detail::write_text(run, out / "table_wer.tsv", tsv::format(report::wer_table(bundle.wer)));
  if (!bundle.detection.empty()) {
    detail::write_text(run, out / "table_detection.tsv", tsv::format(report::detection_table(bundle.detection)));
  }
  if (!bundle.f1.empty()) detail::write_text(run, out / "table_f1.tsv", tsv::format(report::f1_table(bundle.f1)));
  for (const auto& [metric, table] : bundle.batteries) {
    detail::write_text(run, out / ("validity_battery." + metric + ".tsv"), tsv::format(table));
  }
}

/// Synthetic manifest: one all-correct record per (stimulus, accent).
inline void cmd_synth_manifest(const RunConfig& cfg, RunRecord& run) {
  const auto stimuli_path = detail::existing(cfg.stimuli, "--stimuli");
  run.input("stimuli", stimuli_path.string());
  std::vector<std::string> stimuli;
  const auto text = io::read_text(stimuli_path);
  for (auto line : io::split_lines(text)) {
    const auto tokens = normalize_text(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 1) fail(ErrorKind::kInvalidData, "stimulus '" + std::string(line) + "' is not one word");
    stimuli.push_back(tokens.front());
  }
  std::vector<std::string> accents;
  const auto& spec = detail::require(cfg.accents, "--accents");
  for (std::size_t start = 0; start <= spec.size();) {
    auto end = spec.find(',', start);
    if (end == std::string::npos) end = spec.size();
    if (end > start) accents.push_back(spec.substr(start, end - start));
    start = end + 1;
  }
  const auto manifest = generate_synthetic_manifest(stimuli, accents);
  detail::write_text(run, detail::out_dir(cfg) / "synthetic.jsonl", format_manifest(manifest));
  run.parameter("records", manifest.records.size());
}

inline std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  std::replace(s.begin(), s.end(), '\r', ' ');
  return s;
}

/// Entry point. Exit codes: 0 success, 1 validation/input error (one-line
/// diagnostic on `err`), 2 usage error.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
  CLI::App app{"namegauge: naming-task speech assessment toolkit", "namegauge"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  RunConfig cfg;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "Output directory");
    sub->add_option("--seed", cfg.seed, "Random seed (default 42)");
  };
  auto add_training = [&](CLI::App* sub) {
    sub->add_option("--max-steps", cfg.max_steps, "Optimizer steps (default 8000)");
    sub->add_option("--warmup", cfg.warmup, "Warmup steps (default 500)");
    sub->add_option("--batch", cfg.batch, "Batch size (default 16)");
    sub->add_option("--lr", cfg.lr, "Peak learning rate (default 1e-5)");
    sub->add_option("--hidden", cfg.hidden, "Hidden width (default 256)");
    sub->add_option("--eval-interval", cfg.eval_interval, "Steps between evaluations (default 100)");
    sub->add_option("--weight-decay", cfg.weight_decay, "AdamW weight decay (default 0.01)");
  };
  const std::vector<std::string> metrics = {"semantic", "dysfluency", "self_correction", "phonology"};
  auto add_metric = [&](CLI::App* sub) {
    sub->add_option("--metric", cfg.metric, "Accuracy metric")->check(CLI::IsMember(metrics));
  };
  auto add_labels = [&](CLI::App* sub) {
    sub->add_option("--dataset", cfg.dataset, "Dataset label for reports");
    sub->add_option("--size", cfg.size, "Model size label for reports");
    sub->add_option("--model", cfg.model, "Model/encoder label for reports");
  };

  auto* split = app.add_subcommand("split", "Participant-level train/validation/test split");
  split->add_option("--manifest", cfg.manifest);
  split->add_option("--ratios", cfg.ratios, "Ratios a:b:c (default 7:1:2)");
  add_common(split);

  auto* balance = app.add_subcommand("balance", "Downsample training trials to the minority class");
  balance->add_option("--manifest", cfg.manifest);
  balance->add_option("--split", cfg.split);
  add_metric(balance);
  add_common(balance);

  auto* featurize = app.add_subcommand("featurize", "Pooled log-Mel fallback features");
  featurize->add_option("--manifest", cfg.manifest);
  featurize->add_option("--pad-to", cfg.pad_to, "Analysis window in seconds (default 30)")
      ->check(CLI::PositiveNumber);
  add_common(featurize);

  auto* wer_cmd = app.add_subcommand("wer", "Word error rate and model comparison");
  wer_cmd->add_option("--manifest", cfg.manifest);
  wer_cmd->add_option("--hypotheses", cfg.hypotheses, "[size/model=]hypotheses.jsonl (repeatable)");
  wer_cmd->add_option("--mode", cfg.mode, "mean or pooled")->check(CLI::IsMember({"mean", "pooled"}));
  add_labels(wer_cmd);
  add_common(wer_cmd);

  auto* detect = app.add_subcommand("detect", "Target word detection");
  detect->add_option("--manifest", cfg.manifest);
  detect->add_option("--hypotheses", cfg.hypotheses, "[size/model=]hypotheses.jsonl (repeatable)");
  add_labels(detect);
  add_common(detect);

  auto* train = app.add_subcommand("probe-train", "Train the accuracy-score probe");
  train->add_option("--manifest", cfg.manifest);
  train->add_option("--split", cfg.split);
  train->add_option("--embeddings", cfg.embeddings);
  add_metric(train);
  add_training(train);
  add_common(train);

  auto* eval = app.add_subcommand("probe-eval", "Evaluate a trained probe");
  eval->add_option("--manifest", cfg.manifest);
  eval->add_option("--split", cfg.split);
  eval->add_option("--embeddings", cfg.embeddings);
  eval->add_option("--probe", cfg.probe);
  eval->add_option("--partition", cfg.partition, "train, validation, test (default) or all")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));
  add_metric(eval);
  add_labels(eval);
  add_common(eval);

  auto* validity_cmd = app.add_subcommand("validity", "Patient status and validity battery");
  validity_cmd->add_option("--predictions", cfg.predictions);
  validity_cmd->add_option("--covariates", cfg.covariates);
  add_metric(validity_cmd);
  add_common(validity_cmd);

  auto* report_cmd = app.add_subcommand("report", "Render tables from result directories");
  report_cmd->add_option("--results", cfg.results, "Result directory (repeatable)");
  add_common(report_cmd);

  auto* synth = app.add_subcommand("synth-manifest", "Manifest for synthesized stimulus audio");
  synth->add_option("--stimuli", cfg.stimuli, "One stimulus word per line");
  synth->add_option("--accents", cfg.accents, "Comma-separated accent labels");
  add_common(synth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "namegauge: error[usage]: " << one_line(e.what()) << "\n";
    return 2;
  }

  const std::map<CLI::App*, void (*)(const RunConfig&, RunRecord&)> handlers = {
      {split, cmd_split},           {balance, cmd_balance},     {featurize, cmd_featurize},
      {wer_cmd, cmd_wer},           {detect, cmd_detect},       {train, cmd_probe_train},
      {eval, cmd_probe_eval},       {validity_cmd, cmd_validity}, {report_cmd, cmd_report},
      {synth, cmd_synth_manifest}};
  CLI::App* chosen = app.get_subcommands().front();
  cfg.subcommand = chosen->get_name();
  RunRecord record(cfg);
  try {
    handlers.at(chosen)(cfg, record);
    io::write_atomic(fs::path(cfg.out) / "run.json", record.to_json().dump(2) + "\n");
  } catch (const Error& e) {
    err << "namegauge: error[" << to_string(e.kind()) << "]: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "namegauge: error[io]: " << one_line(e.what()) << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "namegauge: error[internal]: " << one_line(e.what()) << "\n";
    return 1;
  }
  return 0;
}

}  // namespace namegauge::cli
