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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "namegauge/error.hpp"
#include "namegauge/io.hpp"
#include "namegauge/metrics.hpp"
#include "namegauge/rng.hpp"

namespace namegauge::probe {

inline constexpr std::size_t kNumClasses = 3;

/// Two linear layers with a GELU between them:
///   logits = W2 * gelu(W1 * x + b1) + b2
/// Parameters live in one flat vector (W1, b1, W2, b2; row-major) so the
/// optimizer can treat them uniformly.
class ProbeHead {
 public:
  ProbeHead() = default;
  ProbeHead(std::size_t input_dim, std::size_t hidden, std::size_t classes)
      : d_(input_dim), h_(hidden), c_(classes), params_(size_for(input_dim, hidden, classes), 0.0) {
    if (d_ == 0 || h_ == 0 || c_ == 0) fail(ErrorKind::kDimension, "head dimensions must be >= 1");
  }

  static std::size_t size_for(std::size_t d, std::size_t h, std::size_t c) {
    return h * d + h + c * h + c;
  }

  std::size_t input_dim() const { return d_; }
  std::size_t hidden() const { return h_; }
  std::size_t classes() const { return c_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  double& w1(std::size_t row, std::size_t col) { return params_[row * d_ + col]; }
  double w1(std::size_t row, std::size_t col) const { return params_[row * d_ + col]; }
  double& b1(std::size_t i) { return params_[h_ * d_ + i]; }
  double b1(std::size_t i) const { return params_[h_ * d_ + i]; }
  double& w2(std::size_t row, std::size_t col) { return params_[w2_offset() + row * h_ + col]; }
  double w2(std::size_t row, std::size_t col) const { return params_[w2_offset() + row * h_ + col]; }
  double& b2(std::size_t i) { return params_[w2_offset() + c_ * h_ + i]; }
  double b2(std::size_t i) const { return params_[w2_offset() + c_ * h_ + i]; }

  std::size_t w2_offset() const { return h_ * d_ + h_; }

  friend bool operator==(const ProbeHead&, const ProbeHead&) = default;

 private:
  std::size_t d_ = 0, h_ = 0, c_ = 0;
  std::vector<double> params_;
};

/// Weights ~ U(-sqrt(1/fan_in), +sqrt(1/fan_in)), biases zero.
inline ProbeHead init_head(std::size_t d, std::size_t h, std::size_t c, std::uint64_t seed) {
  ProbeHead head(d, h, c);
  Rng rng(seed);
  const double bound1 = std::sqrt(1.0 / static_cast<double>(d));
  const double bound2 = std::sqrt(1.0 / static_cast<double>(h));
  for (std::size_t i = 0; i < h; ++i)
    for (std::size_t j = 0; j < d; ++j) head.w1(i, j) = rng.uniform(-bound1, bound1);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < h; ++j) head.w2(i, j) = rng.uniform(-bound2, bound2);
  return head;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

inline double gelu_grad(double x) {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

struct Activations {
  std::vector<double> pre;     // W1 x + b1
  std::vector<double> hidden;  // gelu(pre)
  std::vector<double> logits;
};

inline Activations forward_full(const ProbeHead& head, std::span<const double> x) {
  if (x.size() != head.input_dim()) {
    fail(ErrorKind::kDimension, "feature length " + std::to_string(x.size()) +
                                    " does not match head input " +
                                    std::to_string(head.input_dim()));
  }
  Activations a;
  a.pre.resize(head.hidden());
  a.hidden.resize(head.hidden());
  a.logits.resize(head.classes());
  for (std::size_t i = 0; i < head.hidden(); ++i) {
    double z = head.b1(i);
    for (std::size_t j = 0; j < head.input_dim(); ++j) z += head.w1(i, j) * x[j];
    a.pre[i] = z;
    a.hidden[i] = gelu(z);
  }
  for (std::size_t k = 0; k < head.classes(); ++k) {
    double z = head.b2(k);
    for (std::size_t i = 0; i < head.hidden(); ++i) z += head.w2(k, i) * a.hidden[i];
    a.logits[k] = z;
  }
  return a;
}

inline std::vector<double> forward(const ProbeHead& head, std::span<const double> x) {
  return forward_full(head, x).logits;
}

/// Max-subtracted softmax.
inline std::vector<double> softmax(std::span<const double> logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) sum += (p[k] = std::exp(logits[k] - mx));
  for (auto& v : p) v /= sum;
  return p;
}

struct LossResult {
  double loss = 0.0;
  /// d loss / d logits, batch x classes row-major.
  std::vector<double> grad;
};

/// Mean cross-entropy of a batch of logit rows (`classes` wide) against
/// integer labels. The gradient is (softmax - onehot) / batch.
inline LossResult cross_entropy(std::span<const double> logits, std::span<const int> labels,
                                std::size_t classes) {
  if (labels.empty()) fail(ErrorKind::kDomain, "cross-entropy of an empty batch");
  if (logits.size() != labels.size() * classes) {
    fail(ErrorKind::kDimension, "logit batch shape does not match labels");
  }
  const auto batch = static_cast<double>(labels.size());
  LossResult r;
  r.grad.resize(logits.size());
  for (std::size_t b = 0; b < labels.size(); ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= classes) {
      fail(ErrorKind::kDomain, "label " + std::to_string(labels[b]) + " out of range");
    }
    const auto row = logits.subspan(b * classes, classes);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double z : row) sum += std::exp(z - mx);
    const double log_norm = mx + std::log(sum);
    r.loss -= (row[labels[b]] - log_norm) / batch;
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = std::exp(row[k] - log_norm);
      r.grad[b * classes + k] = (p - (static_cast<int>(k) == labels[b] ? 1.0 : 0.0)) / batch;
    }
  }
  return r;
}

/// Row-major feature matrix with integer labels.
struct LabeledData {
  std::size_t dim = 0;
  std::vector<double> features;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * dim, dim);
  }
  void push(std::span<const double> x, int label) {
    if (dim == 0) dim = x.size();
    if (x.size() != dim) fail(ErrorKind::kDimension, "inconsistent feature length");
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }
};

/// Batch loss and its gradient with respect to every head parameter (same
/// flat layout as ProbeHead::params()).
inline double loss_and_gradient(const ProbeHead& head, const LabeledData& data,
                                std::span<const std::size_t> batch, std::vector<double>& grad) {
  const std::size_t c = head.classes(), h = head.hidden(), d = head.input_dim();
  std::vector<Activations> acts;
  acts.reserve(batch.size());
  std::vector<double> logits;
  std::vector<int> labels;
  for (auto i : batch) {
    acts.push_back(forward_full(head, data.row(i)));
    logits.insert(logits.end(), acts.back().logits.begin(), acts.back().logits.end());
    labels.push_back(data.labels[i]);
  }
  const auto ce = cross_entropy(logits, labels, c);
  grad.assign(head.params().size(), 0.0);
  const std::size_t off_b1 = h * d, off_w2 = head.w2_offset(), off_b2 = off_w2 + c * h;
  std::vector<double> dhidden(h);
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const auto& a = acts[b];
    const double* dlogit = &ce.grad[b * c];
    std::fill(dhidden.begin(), dhidden.end(), 0.0);
    for (std::size_t k = 0; k < c; ++k) {
      grad[off_b2 + k] += dlogit[k];
      for (std::size_t i = 0; i < h; ++i) {
        grad[off_w2 + k * h + i] += dlogit[k] * a.hidden[i];
        dhidden[i] += dlogit[k] * head.w2(k, i);
      }
    }
    const auto x = data.row(batch[b]);
    for (std::size_t i = 0; i < h; ++i) {
      const double dpre = dhidden[i] * gelu_grad(a.pre[i]);
      grad[off_b1 + i] += dpre;
      for (std::size_t j = 0; j < d; ++j) grad[i * d + j] += dpre * x[j];
    }
  }
  return ce.loss;
}

struct TrainConfig {
  std::size_t max_steps = 8000;
  std::size_t batch_size = 16;
  double peak_lr = 1e-5;
  std::size_t warmup_steps = 500;
  std::size_t eval_interval = 100;
  std::uint64_t seed = 42;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double weight_decay = 0.01;
  std::size_t hidden = 256;

  void validate() const {
    if (max_steps == 0) fail(ErrorKind::kDomain, "max_steps must be >= 1");
    if (warmup_steps > max_steps) fail(ErrorKind::kDomain, "warmup_steps exceeds max_steps");
    if (batch_size == 0) fail(ErrorKind::kDomain, "batch_size must be >= 1");
    if (eval_interval == 0) fail(ErrorKind::kDomain, "eval_interval must be >= 1");
    if (hidden == 0) fail(ErrorKind::kDomain, "hidden width must be >= 1");
    if (!(peak_lr >= 0) || !(weight_decay >= 0) || !(epsilon > 0)) {
      fail(ErrorKind::kDomain, "learning rate, weight decay and epsilon must be non-negative");
    }
  }
};

/// Linear warmup to peak_lr over warmup_steps, then linear decay to 0 at
/// max_steps.
inline double lr_at(std::size_t step, const TrainConfig& cfg) {
  if (step <= cfg.warmup_steps) {
    return cfg.warmup_steps == 0 ? cfg.peak_lr
                                 : cfg.peak_lr * (static_cast<double>(step) /
                                                  static_cast<double>(cfg.warmup_steps));
  }
  if (step >= cfg.max_steps) return 0.0;
  return cfg.peak_lr * (static_cast<double>(cfg.max_steps - step) /
                        static_cast<double>(cfg.max_steps - cfg.warmup_steps));
}

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// One AdamW update: decoupled decay theta -= lr * wd * theta, then the
/// bias-corrected Adam step.
inline void adamw_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                       double lr, const TrainConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size()) {
    fail(ErrorKind::kDimension, "AdamW parameter/gradient/state sizes differ");
  }
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      fail(ErrorKind::kNumeric, "non-finite gradient at parameter " + std::to_string(i) +
                                    " (optimizer step " + std::to_string(state.step + 1) + ")");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(cfg.beta1, t);
  const double correction2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    const double decayed = params[i] - lr * cfg.weight_decay * params[i];
    params[i] = decayed - lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
  }
}

struct Prediction {
  int score = 0;
  std::vector<double> probabilities;
};

/// Argmax of the softmax; ties go to the lower class index.
inline Prediction predict_logits(std::span<const double> logits) {
  Prediction p;
  p.probabilities = softmax(logits);
  for (std::size_t k = 1; k < logits.size(); ++k) {
    if (logits[k] > logits[static_cast<std::size_t>(p.score)]) p.score = static_cast<int>(k);
  }
  return p;
}

inline Prediction predict(const ProbeHead& head, std::span<const double> x) {
  return predict_logits(forward(head, x));
}

struct EvalRecord {
  std::size_t step = 0;
  double train_loss = 0.0;
  double val_f1_macro = 0.0;
  double lr = 0.0;

  friend bool operator==(const EvalRecord&, const EvalRecord&) = default;
};

struct TrainHistory {
  std::vector<EvalRecord> records;
  std::size_t best_step = 0;
  double best_f1 = 0.0;

  friend bool operator==(const TrainHistory&, const TrainHistory&) = default;
};

struct TrainedProbe {
  ProbeHead head;
  std::uint64_t seed = 0;
  std::size_t best_step = 0;
  double best_f1 = 0.0;
};

struct TrainResult {
  TrainedProbe probe;
  TrainHistory history;
};

inline double mean_loss(const ProbeHead& head, const LabeledData& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  std::vector<double> scratch;
  return loss_and_gradient(head, data, all, scratch);
}

/// Binarized F1 macro of 3-class predictions against 3-class labels.
inline double binarized_f1(const ProbeHead& head, const LabeledData& data) {
  std::vector<int> preds, labels;
  preds.reserve(data.size());
  labels.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    preds.push_back(binarize_score(predict(head, data.row(i)).score));
    labels.push_back(binarize_score(data.labels[i]));
  }
  return f1_macro(preds, labels).macro;
}

/// Trains the head on frozen features. Mini-batches come from a seeded
/// reshuffle each epoch (ceil(n / batch) steps, short last batch kept).
/// Every eval_interval steps (and at step 0 and the final step) the
/// full-train loss and binarized validation F1 macro are recorded; the
/// parameters of the first best-F1 evaluation are returned.
inline TrainResult train_probe(const LabeledData& train, const LabeledData& validation,
                               const TrainConfig& cfg) {
  cfg.validate();
  if (train.size() == 0) fail(ErrorKind::kDomain, "empty training set");
  if (validation.size() == 0) fail(ErrorKind::kDomain, "empty validation set");
  if (train.dim != validation.dim) {
    fail(ErrorKind::kDimension, "train and validation feature dimensions differ");
  }
  for (int y : train.labels) {
    if (y < 0 || y >= static_cast<int>(kNumClasses)) {
      fail(ErrorKind::kDomain, "training label " + std::to_string(y) + " out of range");
    }
  }

  Rng rng(cfg.seed);
  ProbeHead head = init_head(train.dim, cfg.hidden, kNumClasses, rng.next());
  AdamState state(head.params().size());

  TrainResult result;
  auto evaluate = [&](std::size_t step) {
    EvalRecord rec{step, mean_loss(head, train), binarized_f1(head, validation),
                   step == 0 ? 0.0 : lr_at(step, cfg)};
    result.history.records.push_back(rec);
    if (result.history.records.size() == 1 || rec.val_f1_macro > result.history.best_f1) {
      result.history.best_f1 = rec.val_f1_macro;
      result.history.best_step = step;
      result.probe.head = head;
    }
  };

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = order.size();
  std::vector<double> grad;
  evaluate(0);
  for (std::size_t step = 1; step <= cfg.max_steps; ++step) {
    if (cursor >= order.size()) {
      rng.shuffle(order);
      cursor = 0;
    }
    const std::size_t end = std::min(order.size(), cursor + cfg.batch_size);
    const std::span<const std::size_t> batch(order.data() + cursor, end - cursor);
    cursor = end;
    loss_and_gradient(head, train, batch, grad);
    adamw_step(head.params(), grad, state, lr_at(step, cfg), cfg);
    if (step % cfg.eval_interval == 0 || step == cfg.max_steps) evaluate(step);
  }
  result.probe.seed = cfg.seed;
  result.probe.best_step = result.history.best_step;
  result.probe.best_f1 = result.history.best_f1;
  return result;
}

inline constexpr char kProbeMagic[4] = {'C', 'S', 'P', 'H'};
inline constexpr std::uint32_t kProbeVersion = 1;

/// CSPH layout: magic, u32 version, u32 d, u32 h, u32 C, u64 seed,
/// u64 best_step, f64 best_f1, then W1, b1, W2, b2 as row-major f32.
inline std::vector<std::uint8_t> encode_probe(const TrainedProbe& p) {
  io::ByteWriter w;
  w.put_bytes(std::string_view(kProbeMagic, 4));
  w.put<std::uint32_t>(kProbeVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.head.input_dim()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.head.hidden()));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(p.head.classes()));
  w.put<std::uint64_t>(p.seed);
  w.put<std::uint64_t>(p.best_step);
  w.put<double>(p.best_f1);
  for (double v : p.head.params()) w.put<float>(static_cast<float>(v));
  return w.bytes();
}

inline TrainedProbe decode_probe(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes);
  if (r.get_string(4, "magic") != std::string_view(kProbeMagic, 4)) {
    fail(ErrorKind::kFormat, "bad magic: expected CSPH");
  }
  const auto version = r.get<std::uint32_t>("version");
  if (version != kProbeVersion) {
    fail(ErrorKind::kFormat, "unsupported CSPH version " + std::to_string(version));
  }
  const auto d = r.get<std::uint32_t>("d");
  const auto h = r.get<std::uint32_t>("h");
  const auto c = r.get<std::uint32_t>("C");
  TrainedProbe p;
  p.seed = r.get<std::uint64_t>("seed");
  p.best_step = r.get<std::uint64_t>("best_step");
  p.best_f1 = r.get<double>("best_f1");
  p.head = ProbeHead(d, h, c);
  for (auto& v : p.head.params()) v = r.get<float>("parameters");
  if (r.remaining() != 0) fail(ErrorKind::kFormat, "trailing bytes after CSPH parameters");
  return p;
}

inline std::string format_history(const TrainHistory& h) {
  std::string out = "step\ttrain_loss\tval_f1_macro\tlr\n";
  char buf[160];
  for (const auto& r : h.records) {
    std::snprintf(buf, sizeof buf, "%zu\t%.8f\t%.6f\t%.6e\n", r.step, r.train_loss,
                  r.val_f1_macro, r.lr);
    out += buf;
  }
  return out;
}

}  // namespace namegauge::probe
