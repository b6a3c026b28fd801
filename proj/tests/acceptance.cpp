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

// Acceptance gate. Prints one PASS/FAIL line per criterion; with a numeric
// argument runs only that criterion and exits non-zero if it fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "namegauge/cli.hpp"
#include "namegauge/metrics.hpp"
#include "namegauge/mel.hpp"
#include "namegauge/probe.hpp"
#include "namegauge/rng.hpp"
#include "namegauge/schema.hpp"
#include "namegauge/split.hpp"
#include "namegauge/stats.hpp"
#include "namegauge/tsv.hpp"
#include "namegauge/validity.hpp"

namespace fs = std::filesystem;
using namespace namegauge;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail = what;
      pass = false;
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------- 1

// Exhaustive recursion over alignments; equal leading tokens are matched
// greedily, which never loses optimality.
std::size_t brute_distance(std::span<const std::string> a, std::span<const std::string> b) {
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  if (a[0] == b[0]) return brute_distance(a.subspan(1), b.subspan(1));
  return 1 + std::min({brute_distance(a.subspan(1), b), brute_distance(a, b.subspan(1)),
                       brute_distance(a.subspan(1), b.subspan(1))});
}

Outcome wer_oracle() {
  Outcome o;
  Rng rng(1);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> pairs;
  for (int i = 0; i < 1000; ++i) {
    const auto k = 1 + rng.below(alphabet.size());
    auto draw = [&](std::size_t len) {
      std::vector<std::string> v;
      for (std::size_t j = 0; j < len; ++j) v.push_back(alphabet[rng.below(k)]);
      return v;
    };
    auto ref = draw(1 + rng.below(6));
    auto hyp = draw(rng.below(7));
    pairs.emplace_back(std::move(ref), std::move(hyp));
  }
  const auto t0 = Clock::now();
  std::vector<EditCounts> counts;
  for (const auto& [ref, hyp] : pairs) counts.push_back(edit_ops(ref, hyp));
  const double elapsed = seconds_since(t0);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& [ref, hyp] = pairs[i];
    const auto& c = counts[i];
    const auto expect = brute_distance(ref, hyp);
    const bool consistent = ref.size() - c.deletions == hyp.size() - c.insertions &&
                            c.reference_words == ref.size();
    if (c.errors() != expect || !consistent) ++mismatches;
  }
  o.require(mismatches == 0, std::to_string(mismatches) + " pairs differ from brute force");
  o.require(elapsed < 5.0, "runtime " + fmt("%.3f", elapsed) + " s >= 5 s");
  if (o.pass) o.detail = "1000 pairs exact, " + fmt("%.4f", elapsed) + " s";
  return o;
}

// ---------------------------------------------------------------- 2

struct TableIvRow {
  const char* cohort;
  const char* size;
  const char* model;
  const char* printed;
  std::uint64_t tp, tn, fp, fn;
};

// Printed accuracy and counts, transcribed from the published table.
constexpr TableIvRow kTableIv[] = {
    {"healthy", "Small", "Baseline", "0.36", 256, 24, 0, 496},
    {"healthy", "Small", "ft-syn", "0.60", 442, 24, 0, 310},
    {"healthy", "Small", "ft-h", "0.97", 725, 24, 0, 27},
    {"healthy", "Small", "ft-p", "0.92", 693, 24, 0, 59},
    {"healthy", "Small", "ft-hp", "0.96", 723, 24, 0, 29},
    {"healthy", "Small", "ft-all", "0.96", 719, 24, 0, 33},
    {"healthy", "Medium", "Baseline", "0.40", 284, 24, 0, 468},
    {"healthy", "Medium", "ft-syn", "0.59", 432, 24, 0, 320},
    {"healthy", "Medium", "ft-h", "0.96", 724, 24, 0, 28},
    {"healthy", "Medium", "ft-p", "0.95", 716, 24, 0, 36},
    {"healthy", "Medium", "ft-hp", "0.95", 714, 24, 0, 38},
    {"healthy", "Medium", "ft-all", "0.96", 721, 24, 0, 38},
    {"patient", "Small", "Baseline", "0.41", 126, 87, 1, 310},
    {"patient", "Small", "ft-syn", "0.52", 188, 87, 1, 248},
    {"patient", "Small", "ft-h", "0.91", 390, 85, 3, 46},
    {"patient", "Small", "ft-p", "0.90", 383, 86, 2, 53},
    {"patient", "Small", "ft-hp", "0.92", 397, 86, 2, 39},
    {"patient", "Small", "ft-all", "0.90", 389, 85, 3, 47},
    {"patient", "Medium", "Baseline", "0.45", 150, 88, 0, 286},
    {"patient", "Medium", "ft-syn", "0.48", 165, 87, 1, 271},
    {"patient", "Medium", "ft-h", "0.91", 393, 85, 3, 43},
    {"patient", "Medium", "ft-p", "0.91", 389, 86, 2, 47},
    {"patient", "Medium", "ft-hp", "0.92", 397, 86, 2, 39},
    {"patient", "Medium", "ft-all", "0.88", 375, 86, 2, 61},
};

Outcome table_iv() {
  Outcome o;
  std::size_t matched = 0;
  std::vector<std::string> misses;
  for (const auto& r : kTableIv) {
    ConfusionCounts c{r.tp, r.tn, r.fp, r.fn};
    const auto got = tsv::fixed(confusion_accuracy(c), 2);
    if (got == r.printed) {
      ++matched;
    } else {
      misses.push_back(std::string(r.cohort) + "/" + r.size + "/" + r.model + " -> " + got +
                       " (printed " + r.printed + ")");
    }
  }
  o.require(misses.empty(), std::to_string(matched) + "/24 rows; mismatch: " +
                                (misses.empty() ? "" : misses.front()));
  if (o.pass) o.detail = "24/24 rows reproduce";
  return o;
}

// ---------------------------------------------------------------- 3

// Per-class F1 straight from a 2x2 confusion matrix; 0/0 counts as 0.
double oracle_f1_macro(const std::vector<int>& pred, const std::vector<int>& label) {
  double cm[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < pred.size(); ++i) cm[label[i]][pred[i]] += 1;
  double total = 0;
  for (int k = 0; k < 2; ++k) {
    const double tp = cm[k][k], fp = cm[1 - k][k], fn = cm[k][1 - k];
    const double denom = 2 * tp + fp + fn;
    total += denom == 0 ? 0.0 : 2 * tp / denom;
  }
  return total / 2;
}

Outcome f1_machinery() {
  Outcome o;
  Rng rng(3);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto n = 1 + rng.below(60);
    const double bias = rng.uniform();
    std::vector<int> pred(n), label(n);
    for (std::size_t i = 0; i < n; ++i) {
      label[i] = rng.uniform() < bias ? 1 : 0;
      pred[i] = rng.uniform() < 0.8 ? label[i] : 1 - label[i];
    }
    worst = std::max(worst, std::abs(f1_macro(pred, label).macro - oracle_f1_macro(pred, label)));
  }
  o.require(worst <= 1e-12, "max |diff| " + fmt("%.3g", worst));
  const bool bin = binarize_score(0) == 0 && binarize_score(1) == 0 && binarize_score(2) == 1;
  o.require(bin, "binarize_score does not map {0,1,2} to {0,0,1}");
  if (o.pass) o.detail = "1000 vectors, max |diff| " + fmt("%.2g", worst) + "; binarize {0,1,2}->{0,0,1}";
  return o;
}

// ---------------------------------------------------------------- 4

double reference_loss(const probe::ProbeHead& head, const probe::LabeledData& data) {
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto logits = probe::forward(head, data.row(i));
    double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double l : logits) z += std::exp(l - mx);
    total += -(logits[data.labels[i]] - mx - std::log(z));
  }
  return total / static_cast<double>(data.size());
}

Outcome gradient_check() {
  Outcome o;
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(100 + seed);
    const std::size_t d = 5, h = 4, c = 3, batch = 7;
    auto head = probe::init_head(d, h, c, seed);
    for (auto& p : head.params()) p += 0.3 * rng.normal();  // move off the init scale
    probe::LabeledData data;
    for (std::size_t i = 0; i < batch; ++i) {
      std::vector<double> x(d);
      for (auto& v : x) v = rng.normal();
      data.push(x, static_cast<int>(rng.below(c)));
    }
    std::vector<std::size_t> idx(batch);
    for (std::size_t i = 0; i < batch; ++i) idx[i] = i;
    std::vector<double> grad;
    probe::loss_and_gradient(head, data, idx, grad);
    const double eps = 1e-4;
    for (std::size_t k = 0; k < grad.size(); ++k) {
      auto plus = head, minus = head;
      plus.params()[k] += eps;
      minus.params()[k] -= eps;
      const double numeric = (reference_loss(plus, data) - reference_loss(minus, data)) / (2 * eps);
      const double denom = std::max({std::abs(numeric), std::abs(grad[k]), 1e-6});
      worst = std::max(worst, std::abs(numeric - grad[k]) / denom);
    }
  }
  const double elapsed = seconds_since(t0);
  o.require(worst < 1e-4, "max relative error " + fmt("%.3g", worst));
  o.require(elapsed < 10.0, "runtime " + fmt("%.2f", elapsed) + " s");
  if (o.pass) o.detail = "20 heads, max rel err " + fmt("%.2e", worst) + ", " + fmt("%.3f", elapsed) + " s";
  return o;
}

// ---------------------------------------------------------------- 5

std::pair<probe::LabeledData, probe::LabeledData> blobs(std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t d = 32;
  std::array<std::vector<double>, 3> centres;
  for (auto& c : centres) {
    c.resize(d);
    for (auto& v : c) v = rng.normal();
    double norm = 0.0;
    for (double v : c) norm += v * v;
    for (auto& v : c) v *= 5.0 / std::sqrt(norm);  // centres 5 sigma from the origin
  }
  probe::LabeledData train, val;
  for (int split = 0; split < 2; ++split) {
    for (int k = 0; k < 3; ++k) {
      for (int i = 0; i < 100; ++i) {
        std::vector<double> x(d);
        for (std::size_t j = 0; j < d; ++j) x[j] = centres[k][j] + rng.normal();
        (split == 0 ? train : val).push(x, k);
      }
    }
  }
  return {train, val};
}

Outcome probe_learning() {
  Outcome o;
  const auto [train, val] = blobs(5);
  probe::TrainConfig cfg;
  cfg.max_steps = 2000;
  cfg.warmup_steps = 100;
  cfg.peak_lr = 1e-3;
  cfg.seed = 42;
  const auto t0 = Clock::now();
  const auto a = probe::train_probe(train, val, cfg);
  const double elapsed = seconds_since(t0);
  const auto b = probe::train_probe(train, val, cfg);
  const bool same = probe::encode_probe(a.probe) == probe::encode_probe(b.probe) &&
                    probe::format_history(a.history) == probe::format_history(b.history);
  o.require(a.history.best_f1 >= 0.95, "best validation F1 " + fmt("%.4f", a.history.best_f1));
  o.require(same, "two runs with the same seed differ");
  o.require(elapsed < 60.0, "runtime " + fmt("%.2f", elapsed) + " s");
  if (o.pass) {
    o.detail = "best F1 " + fmt("%.4f", a.history.best_f1) + " at step " +
               std::to_string(a.history.best_step) + ", deterministic, " + fmt("%.2f", elapsed) + " s";
  }
  return o;
}

// ---------------------------------------------------------------- 6

Outcome optimizer_values() {
  Outcome o;
  probe::TrainConfig cfg;
  cfg.weight_decay = 0.01;
  std::vector<double> theta{1.0};
  const std::vector<double> g{1.0};
  probe::AdamState state(1);
  const double lr = 1e-3;
  probe::adamw_step(theta, g, state, lr, cfg);
  // First step: m_hat = g, v_hat = g^2, so the update is lr * g / (|g| + eps).
  const double by_hand = 1.0 - lr * 0.01 * 1.0 - lr * 1.0 / (1.0 + cfg.epsilon);
  o.require(std::abs(theta[0] - by_hand) < 1e-12, "AdamW step != hand formula");
  o.require(std::abs(theta[0] - 0.99899) < 1e-6, "AdamW step " + fmt("%.9f", theta[0]));
  cfg.warmup_steps = 500;
  cfg.peak_lr = 1e-5;
  cfg.max_steps = 8000;
  o.require(probe::lr_at(250, cfg) == 5e-6, "lr_at(250) = " + fmt("%.17g", probe::lr_at(250, cfg)));
  o.require(probe::lr_at(500, cfg) == 1e-5, "lr_at(500) = " + fmt("%.17g", probe::lr_at(500, cfg)));
  if (o.pass) o.detail = "theta " + fmt("%.8f", theta[0]) + ", lr_at(250)=5e-6, lr_at(500)=1e-5";
  return o;
}

// ---------------------------------------------------------------- 7

double u_statistic(std::span<const double> x, std::span<const double> y) {
  double u = 0.0;
  for (double a : x) {
    for (double b : y) u += a > b ? 1.0 : a == b ? 0.5 : 0.0;
  }
  return u;
}

// Two-sided permutation p for U, as a proportion of random relabelings.
std::pair<double, double> mw_monte_carlo(std::vector<double> x, std::vector<double> y, Rng& rng,
                                         int draws) {
  const double centre = static_cast<double>(x.size() * y.size()) / 2.0;
  const double observed = std::abs(u_statistic(x, y) - centre);
  std::vector<double> pooled = x;
  pooled.insert(pooled.end(), y.begin(), y.end());
  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    rng.shuffle(pooled);
    std::span<const double> all(pooled);
    const double u = u_statistic(all.first(x.size()), all.subspan(x.size()));
    if (std::abs(u - centre) >= observed - 1e-12) ++hits;
  }
  const double p = static_cast<double>(hits) / draws;
  return {p, std::sqrt(std::max(p * (1 - p), 1e-12) / draws)};
}

double hypergeom(std::uint64_t a, std::uint64_t r1, std::uint64_t c1, std::uint64_t n) {
  auto lc = [](double nn, double k) {
    return std::lgamma(nn + 1) - std::lgamma(k + 1) - std::lgamma(nn - k + 1);
  };
  return std::exp(lc(c1, a) + lc(n - c1, r1 - a) - lc(n, r1));
}

// Fisher p by shuffling column labels against fixed row labels.
std::pair<double, double> fisher_monte_carlo(std::uint64_t a, std::uint64_t b, std::uint64_t c,
                                             std::uint64_t d, Rng& rng, int draws) {
  const auto r1 = a + b, c1 = a + c, n = a + b + c + d;
  const double p_obs = hypergeom(a, r1, c1, n);
  std::vector<int> cols(n, 0);
  for (std::uint64_t i = 0; i < c1; ++i) cols[i] = 1;
  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    rng.shuffle(cols);
    std::uint64_t cell = 0;
    for (std::uint64_t k = 0; k < r1; ++k) cell += static_cast<std::uint64_t>(cols[k]);
    if (hypergeom(cell, r1, c1, n) <= p_obs * (1 + 1e-7)) ++hits;
  }
  const double p = static_cast<double>(hits) / draws;
  return {p, std::sqrt(std::max(p * (1 - p), 1e-12) / draws)};
}

std::vector<std::vector<std::string>> read_golden(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> lines;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    lines.push_back(tok);
  }
  return lines;
}

Outcome statistics_golden() {
  Outcome o;
  const std::vector<double> x{1, 2, 3}, y{4, 5, 6};
  const auto mw = stats::mann_whitney_u(x, y);
  o.require(mw.statistic == 0.0 && std::abs(mw.p_value - 0.1) < 1e-12 &&
                mw.method == stats::Method::kMannWhitneyExact,
            "Mann-Whitney U=" + fmt("%g", mw.statistic) + " p=" + fmt("%.6g", mw.p_value));
  const auto fe = stats::fisher_exact_2x2(3, 0, 0, 3);
  o.require(std::abs(fe.p_value - 0.1) < 1e-12, "Fisher p=" + fmt("%.6g", fe.p_value));
  const auto chi = stats::chi_square_independence({{20, 0}, {0, 20}});
  o.require(std::abs(chi.statistic - 40.0) < 1e-9, "chi-square " + fmt("%.6g", chi.statistic));
  const auto fr = stats::friedman({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
  o.require(std::abs(fr.statistic - 6.0) < 1e-9, "Friedman " + fmt("%.6g", fr.statistic));
  const std::vector<double> t1{1, 2, 3}, t2{2, 3, 4};
  const auto tt = stats::t_test_two_sample(t1, t2);
  o.require(std::abs(tt.statistic - (-1.2247)) < 5e-5 && tt.df && *tt.df == 4.0,
            "t-test t=" + fmt("%.6g", tt.statistic));

  const fs::path data = fs::path(NAMEGAUGE_SOURCE_DIR) / "tests" / "data";
  double sw_worst = 0.0;
  {
    const auto lines = read_golden(data / "shapiro_golden.txt");
    double w = 0, p = 0;
    std::vector<double> sample;
    for (const auto& l : lines) {
      if (l.size() == 2 && l[0] == "W") w = std::stod(l[1]);
      else if (l.size() == 2 && l[0] == "p") p = std::stod(l[1]);
      else if (l.size() == 1) sample.push_back(std::stod(l[0]));
    }
    const auto sw = stats::shapiro_wilk(sample);
    sw_worst = std::max({std::abs(sw.statistic - w), std::abs(sw.p_value - p)});
    for (const auto& l : read_golden(data / "shapiro_cases.txt")) {
      std::vector<double> v;
      for (std::size_t i = 3; i < l.size(); ++i) v.push_back(std::stod(l[i]));
      const auto r = stats::shapiro_wilk(v);
      sw_worst = std::max({sw_worst, std::abs(r.statistic - std::stod(l[1])),
                           std::abs(r.p_value - std::stod(l[2]))});
    }
  }
  o.require(sw_worst < 1e-4, "Shapiro-Wilk off by " + fmt("%.3g", sw_worst));

  Rng rng(7);
  const int draws = 100000;
  double worst_se = 0.0;
  auto check_mc = [&](double exact, std::pair<double, double> mc, const std::string& what) {
    const double z = std::abs(exact - mc.first) / mc.second;
    worst_se = std::max(worst_se, z);
    o.require(z <= 3.0, what + ": exact " + fmt("%.5f", exact) + " vs MC " + fmt("%.5f", mc.first));
  };
  check_mc(mw.p_value, mw_monte_carlo(x, y, rng, draws), "Mann-Whitney [1,2,3]/[4,5,6]");
  {
    const std::vector<double> a{0.3, 1.9, 2.4, 4.1, 5.5}, b{1.2, 3.3, 3.9, 6.0, 7.2, 8.1};
    check_mc(stats::mann_whitney_u(a, b).p_value, mw_monte_carlo(a, b, rng, draws), "Mann-Whitney 5/6");
  }
  check_mc(fe.p_value, fisher_monte_carlo(3, 0, 0, 3, rng, draws), "Fisher [[3,0],[0,3]]");
  check_mc(stats::fisher_exact_2x2(5, 2, 1, 6).p_value, fisher_monte_carlo(5, 2, 1, 6, rng, draws),
           "Fisher [[5,2],[1,6]]");
  if (o.pass) {
    o.detail = "golden values exact; Shapiro-Wilk max diff " + fmt("%.1e", sw_worst) +
               "; MC within " + fmt("%.2f", worst_se) + " SE";
  }
  return o;
}

// ---------------------------------------------------------------- 8

Manifest random_manifest(Rng& rng, std::size_t index) {
  Manifest m;
  const std::size_t cohorts = 1 + rng.below(3);
  std::size_t pid = 0;
  for (std::size_t c = 0; c < cohorts; ++c) {
    const auto people = 3 + rng.below(30);
    for (std::size_t p = 0; p < people; ++p, ++pid) {
      const auto trials = 1 + rng.below(8);
      for (std::size_t t = 0; t < trials; ++t) {
        TrialRecord r;
        r.participant_id = "m" + std::to_string(index) + "p" + std::to_string(pid);
        r.trial_id = r.participant_id + "t" + std::to_string(t);
        r.cohort = static_cast<Cohort>(c);
        r.audio_path = r.trial_id + ".wav";
        r.transcript = "word";
        r.target_word = "word";
        for (auto metric : kAllMetrics) {
          if (rng.below(10) != 0) r.scores[metric] = static_cast<int>(rng.below(3));
        }
        m.records.push_back(r);
      }
    }
  }
  m.stimuli = {"word"};
  return m;
}

Outcome split_balance_invariants() {
  Outcome o;
  Rng rng(8);
  std::size_t balanced_checked = 0;
  for (std::size_t i = 0; i < 500 && o.pass; ++i) {
    const auto manifest = random_manifest(rng, i);
    const auto seed = rng.next();
    const std::array<SplitRatios, 3> choices = {SplitRatios{0.7, 0.1, 0.2}, SplitRatios{0.5, 0.25, 0.25},
                                                SplitRatios{0.6, 0.2, 0.2}};
    const auto ratios = choices[rng.below(3)];
    const auto split = split_by_cohort(manifest, ratios, seed);
    const auto again = split_by_cohort(manifest, ratios, seed);
    o.require(split.assignment == again.assignment, "split not deterministic");

    std::map<Cohort, std::set<std::string>> people;
    for (const auto& r : manifest.records) people[r.cohort].insert(r.participant_id);
    std::size_t total = 0;
    for (const auto& [cohort, ids] : people) {
      std::array<std::size_t, 3> n{};
      for (const auto& id : ids) {
        const auto p = split.partition_of(id);
        o.require(p.has_value(), "participant missing from split");
        if (p) ++n[static_cast<int>(*p)];
      }
      const double count = static_cast<double>(ids.size());
      const auto val = static_cast<std::size_t>(std::floor(ratios.validation * count + 1e-9));
      const auto test = static_cast<std::size_t>(std::floor(ratios.test * count + 1e-9));
      o.require(n[1] == val && n[2] == test && n[0] == ids.size() - val - test,
                "partition sizes off the floor rule");
      total += ids.size();
    }
    o.require(split.assignment.size() == total, "split assigns unknown participants");

    // Every trial lands in exactly one partition with its participant.
    std::size_t covered = 0;
    for (auto part : {Partition::kTrain, Partition::kValidation, Partition::kTest}) {
      for (const auto& r : select_partition(manifest, split, part)) {
        o.require(split.partition_of(r.participant_id) == part, "trial in the wrong partition");
        ++covered;
      }
    }
    o.require(covered == manifest.records.size(), "partitions do not cover the manifest");

    for (auto metric : kAllMetrics) {
      const auto train = with_score(select_partition(manifest, split, Partition::kTrain), metric);
      std::array<std::size_t, 3> before{};
      for (const auto& r : train) ++before[*r.scores[metric]];
      const auto minority = *std::min_element(before.begin(), before.end());
      if (minority == 0) continue;
      const auto bal = downsample_to_minority(train, metric, seed);
      const auto bal2 = downsample_to_minority(train, metric, seed);
      std::array<std::size_t, 3> after{};
      for (const auto& r : bal) ++after[*r.scores[metric]];
      o.require(after[0] == minority && after[1] == minority && after[2] == minority,
                "balanced class counts differ from the minority count");
      bool same = bal.size() == bal2.size();
      for (std::size_t k = 0; same && k < bal.size(); ++k) same = bal[k].trial_id == bal2[k].trial_id;
      o.require(same, "balancing not deterministic");
      // Subsequence of the input.
      std::size_t cursor = 0;
      for (const auto& r : bal) {
        while (cursor < train.size() && train[cursor].trial_id != r.trial_id) ++cursor;
        o.require(cursor < train.size(), "balanced set is not an ordered subset");
        ++cursor;
      }
      ++balanced_checked;
    }
  }
  if (o.pass) o.detail = "500 manifests, " + std::to_string(balanced_checked) + " balanced sets";
  return o;
}

// ---------------------------------------------------------------- 9

std::vector<double> oracle_power(const std::vector<double>& frame) {
  const std::size_t n = frame.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      acc += frame[t] * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / n);
    }
    out[k] = std::norm(acc);
  }
  return out;
}

// Slaney mel: linear below 1 kHz, logarithmic above.
double slaney_mel(double hz) {
  const double f_sp = 200.0 / 3.0, min_log_hz = 1000.0;
  const double logstep = std::log(6.4) / 27.0;
  return hz < min_log_hz ? hz / f_sp : min_log_hz / f_sp + std::log(hz / min_log_hz) / logstep;
}

double slaney_hz(double mel) {
  const double f_sp = 200.0 / 3.0, min_log_mel = 15.0;
  const double logstep = std::log(6.4) / 27.0;
  return mel < min_log_mel ? mel * f_sp : 1000.0 * std::exp(logstep * (mel - min_log_mel));
}

Outcome frontend_checks() {
  Outcome o;
  AudioBuffer silence{std::vector<double>(30 * 16000, 0.0), 16000};
  const auto mel = mel::log_mel(silence, 30.0);
  o.require(mel.values.size() == 80u * 3000u && mel.frames == 3000, "silence shape");
  o.require(std::all_of(mel.values.begin(), mel.values.end(), [](double v) { return v == -1.5; }),
            "silence cells are not all -1.5");

  for (double secs : {0.25, 1.0, 12.3, 29.99, 30.0}) {
    AudioBuffer a{std::vector<double>(static_cast<std::size_t>(secs * 16000), 0.01), 16000};
    const auto m = mel::log_mel(a, 30.0);
    o.require(m.frames == 3000 && m.values.size() == 240000, "shape for " + fmt("%.2f", secs) + " s");
  }

  // 1 kHz sine: the oracle spectrum and independently built filters pick a channel.
  std::vector<double> sine(16000);
  for (std::size_t i = 0; i < sine.size(); ++i) {
    sine[i] = 0.5 * std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(i) / 16000.0);
  }
  std::vector<double> frame(400);
  for (int n = 0; n < 400; ++n) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / 400.0);
    frame[n] = w * sine[4000 + n];
  }
  const auto power = oracle_power(frame);
  std::vector<double> centres(82);
  const double top = slaney_mel(8000.0);
  for (int i = 0; i < 82; ++i) centres[i] = slaney_hz(top * i / 81.0);
  int oracle_bin = 0;
  double best = -1.0;
  for (int m = 0; m < 80; ++m) {
    double e = 0.0;
    for (int k = 0; k <= 200; ++k) {
      const double f = k * 40.0;
      const double w = std::max(0.0, std::min((f - centres[m]) / (centres[m + 1] - centres[m]),
                                              (centres[m + 2] - f) / (centres[m + 2] - centres[m + 1])));
      e += w * 2.0 / (centres[m + 2] - centres[m]) * power[k];
    }
    if (e > best) best = e, oracle_bin = m;
  }
  const auto sm = mel::log_mel(AudioBuffer{sine, 16000}, 30.0);
  const std::size_t mid = 50;
  int got_bin = 0;
  for (int m = 1; m < 80; ++m) {
    if (sm.at(m, mid) > sm.at(got_bin, mid)) got_bin = m;
  }
  o.require(got_bin == oracle_bin, "1 kHz peak in channel " + std::to_string(got_bin) +
                                       ", oracle says " + std::to_string(oracle_bin));

  // Parseval with one-sided weighting, and agreement with the oracle DFT.
  Rng rng(9);
  double worst = 0.0, dft_worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    std::array<double, 400> x{};
    double energy = 0.0;
    for (auto& v : x) {
      v = rng.normal();
      energy += v * v;
    }
    const auto p = mel::power_spectrum(x);
    double spectral = p[0] + p[200];
    for (int k = 1; k < 200; ++k) spectral += 2.0 * p[k];
    spectral /= 400.0;
    worst = std::max(worst, std::abs(spectral - energy) / energy);
    const auto ref = oracle_power(std::vector<double>(x.begin(), x.end()));
    for (int k = 0; k <= 200; ++k) {
      dft_worst = std::max(dft_worst, std::abs(p[k] - ref[k]) / std::max(ref[k], 1e-9 * energy));
    }
  }
  o.require(worst < 1e-6, "Parseval relative error " + fmt("%.3g", worst));
  o.require(dft_worst < 1e-6, "power spectrum differs from oracle DFT by " + fmt("%.3g", dft_worst));
  if (o.pass) {
    o.detail = "silence -1.5, 80x3000, 1 kHz -> channel " + std::to_string(got_bin) +
               ", Parseval " + fmt("%.1e", worst);
  }
  return o;
}

// ---------------------------------------------------------------- 10

int cli(std::vector<std::string> args, std::string& err_text) {
  std::vector<const char*> argv{"namegauge"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int rc = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  err_text = err.str();
  return rc;
}

nlohmann::json load_json(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

Outcome end_to_end() {
  Outcome o;
  const fs::path src = NAMEGAUGE_SOURCE_DIR;
  const fs::path toy = src / "data" / "toy";
  const fs::path schemas = src / "schemas";
  const fs::path work = fs::temp_directory_path() / "namegauge-acceptance";
  fs::remove_all(work);
  const std::string manifest = (toy / "manifest.jsonl").string();
  const std::string split = (work / "split" / "split.json").string();
  const std::string emb = (work / "features" / "features.cseb").string();

  const std::vector<std::vector<std::string>> steps = {
      {"split", "--manifest", manifest, "--out", (work / "split").string()},
      {"balance", "--manifest", manifest, "--split", split, "--metric", "semantic", "--out",
       (work / "balance").string()},
      {"featurize", "--manifest", manifest, "--out", (work / "features").string()},
      {"probe-train", "--manifest", manifest, "--split", split, "--embeddings", emb, "--metric",
       "semantic", "--out", (work / "probe").string()},
      {"probe-eval", "--manifest", manifest, "--split", split, "--embeddings", emb, "--probe",
       (work / "probe" / "probe.csph").string(), "--metric", "semantic", "--partition", "all", "--dataset",
       "toy", "--out", (work / "eval").string()},
      {"validity", "--predictions", (work / "eval" / "predictions.tsv").string(), "--covariates",
       (toy / "covariates.jsonl").string(), "--out", (work / "validity").string()},
  };
  const auto t0 = Clock::now();
  for (const auto& s : steps) {
    std::string err;
    const int rc = cli(s, err);
    o.require(rc == 0, s[0] + " exited " + std::to_string(rc) + ": " + err);
    if (rc != 0) return o;
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 180.0, "chain took " + fmt("%.1f", elapsed) + " s");

  const auto run_schema = load_json(schemas / "run.schema.json");
  const std::map<std::string, std::string> tsv_schemas = {
      {"history.tsv", "history"},
      {"predictions.tsv", "predictions"},
      {"probe_metrics.tsv", "probe_metrics"},
      {"patient_status.semantic.tsv", "patient_status"},
      {"validity_battery.semantic.tsv", "validity_battery"},
  };
  std::size_t validated = 0;
  for (const auto& dir : {"split", "balance", "features", "probe", "eval", "validity"}) {
    const auto errs = schema::validate(load_json(work / dir / "run.json"), run_schema);
    o.require(errs.empty(), std::string(dir) + "/run.json: " + (errs.empty() ? "" : errs.front()));
    ++validated;
    for (const auto& entry : fs::directory_iterator(work / dir)) {
      const auto name = entry.path().filename().string();
      auto it = tsv_schemas.find(name);
      if (it == tsv_schemas.end()) continue;
      const auto sch = load_json(schemas / (it->second + ".schema.json"));
      const auto e = schema::validate_tsv(io::read_text(entry.path()), sch);
      o.require(e.empty(), name + ": " + (e.empty() ? "" : e.front()));
      ++validated;
    }
  }
  o.require(validated == 11, "expected 11 validated artifacts, got " + std::to_string(validated));

  // Recount group sizes per variable and confirm the skip rule.
  const auto status = tsv::load(work / "validity" / "patient_status.semantic.tsv");
  const auto covariates = validity::load_covariates(toy / "covariates.jsonl");
  std::map<std::string, bool> impaired;
  for (std::size_t i = 0; i < status.rows.size(); ++i) {
    impaired[status.cell(i, "participant_id")] = status.cell(i, "status") == "impaired";
  }
  const auto battery = tsv::load(work / "validity" / "validity_battery.semantic.tsv");
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < battery.rows.size(); ++i) {
    const auto var = battery.cell(i, "variable");
    std::size_t ni = 0, nu = 0;
    for (const auto& [id, imp] : impaired) {
      const auto& c = covariates.at(id);
      bool present = false;
      if (var == "fluency") present = c.fluency.has_value();
      else if (var == "previous_stroke") present = c.previous_stroke.has_value();
      else if (var == "english_second_language") present = c.english_second_language.has_value();
      else if (var.starts_with("sex")) present = c.sex.has_value();
      else if (var == "ldl_cholesterol") present = c.ldl_cholesterol.has_value();
      else if (var == "smoking") present = c.smoking.has_value();
      else if (var == "age") present = c.age.has_value();
      if (present) ++(imp ? ni : nu);
    }
    const bool too_small = std::min(ni, nu) < 2;
    const bool was_skipped = !battery.cell(i, "skipped_reason").empty() && battery.cell(i, "test").empty();
    o.require(too_small == was_skipped, var + ": groups " + std::to_string(ni) + "/" + std::to_string(nu) +
                                            (was_skipped ? " skipped" : " tested"));
    o.require(battery.cell(i, "group_impaired_n") == std::to_string(ni) &&
                  battery.cell(i, "group_unimpaired_n") == std::to_string(nu),
              var + ": reported group sizes differ");
    skipped += was_skipped;
  }
  o.require(skipped >= 1, "no variable was skipped");
  fs::remove_all(work);
  if (o.pass) {
    o.detail = "chain " + fmt("%.1f", elapsed) + " s, " + std::to_string(validated) +
               " artifacts schema-valid, " + std::to_string(skipped) + " variable(s) skipped";
  }
  return o;
}

struct Criterion {
  int id;
  const char* name;
  Outcome (*run)();
};

const Criterion kCriteria[] = {
    {1, "WER oracle equivalence", wer_oracle},
    {2, "detection accuracy table arithmetic", table_iv},
    {3, "F1 machinery", f1_machinery},
    {4, "probe gradient check", gradient_check},
    {5, "probe learning on separable blobs", probe_learning},
    {6, "optimizer and scheduler values", optimizer_values},
    {7, "statistics golden values", statistics_golden},
    {8, "split and balance invariants", split_balance_invariants},
    {9, "log-Mel frontend checks", frontend_checks},
    {10, "end-to-end smoke on the toy corpus", end_to_end},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  int failures = 0;
  for (const auto& c : kCriteria) {
    if (only != 0 && c.id != only) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << c.id << ": " << c.name << " -- "
              << o.detail << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
