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

#include <cmath>
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
#include "namegauge/stats.hpp"

namespace namegauge::validity {

/// Clinical and demographic variables of one participant; any may be missing.
struct Covariates {
  std::optional<double> fluency;
  std::optional<bool> previous_stroke;
  std::optional<bool> english_second_language;
  std::optional<std::string> sex;
  std::optional<double> ldl_cholesterol;
  std::optional<bool> smoking;
  std::optional<double> age;
};

using CovariateTable = std::map<std::string, Covariates>;

namespace detail {

inline std::optional<double> number_field(const nlohmann::json& j, const char* key,
                                          std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) {
    fail(ErrorKind::kParse, "line " + std::to_string(line) + ": '" + key + "' must be a number");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) {
    fail(ErrorKind::kInvalidData, "line " + std::to_string(line) + ": '" + key + "' is not finite");
  }
  return v;
}

inline std::optional<bool> bool_field(const nlohmann::json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (it->is_boolean()) return it->get<bool>();
  if (it->is_number_integer() && (it->get<int>() == 0 || it->get<int>() == 1)) {
    return it->get<int>() == 1;
  }
  fail(ErrorKind::kParse, "line " + std::to_string(line) + ": '" + key + "' must be a boolean");
}

}  // namespace detail

/// JSON Lines, one object per participant; null or omitted fields are missing.
inline CovariateTable parse_covariates(std::string_view text) {
  CovariateTable table;
  const auto lines = io::split_lines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (io::is_blank(lines[i])) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(lines[i]);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorKind::kParse, "line " + std::to_string(i + 1) + ": " + e.what());
    }
    const auto line = i + 1;
    if (!j.is_object() || !j.contains("participant_id") || !j["participant_id"].is_string()) {
      fail(ErrorKind::kParse, "line " + std::to_string(line) + ": missing participant_id");
    }
    Covariates c;
    c.fluency = detail::number_field(j, "fluency", line);
    c.previous_stroke = detail::bool_field(j, "previous_stroke", line);
    c.english_second_language = detail::bool_field(j, "english_second_language", line);
    if (auto it = j.find("sex"); it != j.end() && !it->is_null()) {
      if (!it->is_string()) fail(ErrorKind::kParse, "line " + std::to_string(line) + ": 'sex' must be a string");
      c.sex = it->get<std::string>();
    }
    c.ldl_cholesterol = detail::number_field(j, "ldl_cholesterol", line);
    c.smoking = detail::bool_field(j, "smoking", line);
    c.age = detail::number_field(j, "age", line);
    const auto id = j["participant_id"].get<std::string>();
    if (!table.emplace(id, std::move(c)).second) {
      fail(ErrorKind::kDuplicateId, "line " + std::to_string(line) + ": duplicate participant '" + id + "'");
    }
  }
  return table;
}

inline CovariateTable load_covariates(const std::filesystem::path& path) {
  return parse_covariates(io::read_text(path));
}

struct PatientStatus {
  double mean_score = 0.0;
  std::size_t trials = 0;
  bool impaired = false;
};

using ImpairmentStatus = std::map<std::string, PatientStatus>;

/// Mean of each patient's predicted 0/1/2 scores; impaired when the mean is
/// at most 1 (a mean of exactly 1 counts as impaired).
inline ImpairmentStatus derive_patient_status(
    const std::map<std::string, std::vector<int>>& predictions) {
  ImpairmentStatus out;
  for (const auto& [patient, scores] : predictions) {
    if (scores.empty()) {
      fail(ErrorKind::kInvalidData, "patient '" + patient + "' has no scored trials");
    }
    double sum = 0.0;
    for (int s : scores) {
      if (s < 0 || s > 2) fail(ErrorKind::kDomain, "predicted score out of range for '" + patient + "'");
      sum += s;
    }
    PatientStatus st;
    st.trials = scores.size();
    st.mean_score = sum / static_cast<double>(scores.size());
    st.impaired = st.mean_score <= 1.0;
    out.emplace(patient, st);
  }
  return out;
}

struct BatteryRow {
  std::string variable;
  std::size_t impaired_n = 0;
  std::size_t unimpaired_n = 0;
  std::string test;  // empty when skipped
  std::optional<double> statistic;
  std::optional<double> df;
  std::optional<double> p_raw;
  std::optional<double> p_adjusted;
  std::string skipped_reason;
  /// Impaired minus unimpaired: group means for continuous variables,
  /// proportions for categorical ones.
  std::optional<double> direction;

  bool skipped() const { return !skipped_reason.empty(); }
};

struct BatteryReport {
  std::vector<BatteryRow> rows;
};

inline constexpr double kNormalityAlpha = 0.05;

namespace detail {

inline BatteryRow continuous_row(std::string name, const std::vector<double>& impaired,
                                 const std::vector<double>& unimpaired) {
  BatteryRow row;
  row.variable = std::move(name);
  row.impaired_n = impaired.size();
  row.unimpaired_n = unimpaired.size();
  if (impaired.size() < 2 || unimpaired.size() < 2) {
    row.skipped_reason = "group with fewer than 2 members";
    return row;
  }
  const double m_imp = stats::mean(impaired), m_un = stats::mean(unimpaired);
  row.direction = m_imp - m_un;
  // Normality on residuals pooled across both groups.
  std::vector<double> residuals;
  for (double v : impaired) residuals.push_back(v - m_imp);
  for (double v : unimpaired) residuals.push_back(v - m_un);
  bool normal = false;
  try {
    normal = stats::shapiro_wilk(residuals).p_value >= kNormalityAlpha;
  } catch (const Error&) {
    normal = false;  // zero-variance residuals: fall through to the rank test
  }
  std::optional<stats::TestResult> result;
  if (normal) {
    try {
      result = stats::t_test_two_sample(impaired, unimpaired);
    } catch (const Error&) {
      result.reset();
    }
  }
  if (!result) result = stats::mann_whitney_u(impaired, unimpaired);
  row.test = std::string(stats::to_string(result->method));
  row.statistic = result->statistic;
  row.df = result->df;
  row.p_raw = result->p_value;
  row.p_adjusted = result->p_adjusted;
  return row;
}

inline BatteryRow categorical_row(std::string name, std::uint64_t imp_yes, std::uint64_t imp_no,
                                  std::uint64_t un_yes, std::uint64_t un_no) {
  BatteryRow row;
  row.variable = std::move(name);
  row.impaired_n = imp_yes + imp_no;
  row.unimpaired_n = un_yes + un_no;
  if (row.impaired_n < 2 || row.unimpaired_n < 2) {
    row.skipped_reason = "group with fewer than 2 members";
    return row;
  }
  row.direction = static_cast<double>(imp_yes) / static_cast<double>(row.impaired_n) -
                  static_cast<double>(un_yes) / static_cast<double>(row.unimpaired_n);
  if (imp_yes + un_yes == 0 || imp_no + un_no == 0) {
    row.skipped_reason = "no variation in variable";
    return row;
  }
  const auto r = stats::fisher_exact_2x2(imp_yes, imp_no, un_yes, un_no);
  row.test = std::string(stats::to_string(r.method));
  row.statistic = r.statistic;
  row.p_raw = r.p_value;
  row.p_adjusted = r.p_adjusted;
  return row;
}

}  // namespace detail

/// Convergent/divergent validity battery. Continuous variables go through a
/// Shapiro-Wilk gate (p >= 0.05 -> Student's t, else Mann-Whitney U);
/// categorical variables through Fisher's exact test on status x category.
/// Missing values are dropped per variable. Variables where either status
/// group has fewer than 2 members are reported as skipped.
inline BatteryReport validity_analysis(const ImpairmentStatus& status,
                                       const CovariateTable& covariates) {
  std::size_t impaired = 0, unimpaired = 0;
  for (const auto& [_, s] : status) (s.impaired ? impaired : unimpaired)++;
  if (impaired == 0) fail(ErrorKind::kInvalidData, "no patient is classified as impaired");
  if (unimpaired == 0) fail(ErrorKind::kInvalidData, "no patient is classified as unimpaired");

  auto lookup = [&](const std::string& id) -> const Covariates* {
    auto it = covariates.find(id);
    return it == covariates.end() ? nullptr : &it->second;
  };

  BatteryReport report;
  auto continuous = [&](const char* name, std::optional<double> Covariates::*field) {
    std::vector<double> imp, un;
    for (const auto& [id, s] : status) {
      const auto* c = lookup(id);
      if (!c || !(c->*field)) continue;
      (s.impaired ? imp : un).push_back(*(c->*field));
    }
    report.rows.push_back(detail::continuous_row(name, imp, un));
  };
  auto boolean = [&](const char* name, std::optional<bool> Covariates::*field) {
    std::uint64_t iy = 0, in = 0, uy = 0, un = 0;
    for (const auto& [id, s] : status) {
      const auto* c = lookup(id);
      if (!c || !(c->*field)) continue;
      const bool v = *(c->*field);
      if (s.impaired) (v ? iy : in)++;
      else (v ? uy : un)++;
    }
    report.rows.push_back(detail::categorical_row(name, iy, in, uy, un));
  };

  continuous("fluency", &Covariates::fluency);
  boolean("previous_stroke", &Covariates::previous_stroke);
  boolean("english_second_language", &Covariates::english_second_language);

  std::set<std::string> sex_levels;
  for (const auto& [id, _] : status) {
    if (const auto* c = lookup(id); c && c->sex) sex_levels.insert(*c->sex);
  }
  if (sex_levels.empty()) {
    report.rows.push_back(detail::categorical_row("sex", 0, 0, 0, 0));
  }
  std::size_t emitted = 0;
  for (const auto& level : sex_levels) {
    // With exactly two levels both indicator tables carry the same test.
    if (sex_levels.size() == 2 && emitted == 1) break;
    std::uint64_t iy = 0, in = 0, uy = 0, un = 0;
    for (const auto& [id, s] : status) {
      const auto* c = lookup(id);
      if (!c || !c->sex) continue;
      const bool v = *c->sex == level;
      if (s.impaired) (v ? iy : in)++;
      else (v ? uy : un)++;
    }
    report.rows.push_back(detail::categorical_row("sex=" + level, iy, in, uy, un));
    ++emitted;
  }

  continuous("ldl_cholesterol", &Covariates::ldl_cholesterol);
  boolean("smoking", &Covariates::smoking);
  continuous("age", &Covariates::age);
  return report;
}

}  // namespace namegauge::validity
