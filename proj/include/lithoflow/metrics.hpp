/*
 * Copyright 2026 The lithoflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <map>
#include <string>
#include <vector>

#include "lithoflow/core.hpp"

namespace lithoflow {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  long long support = 0;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::vector<ClassId> classes;  // sorted union of labels seen in pred or truth
  std::vector<ClassScores> per_class;
  // confusion[i][j]: truth classes[i] predicted as classes[j].
  std::vector<std::vector<long long>> confusion;
  std::vector<std::string> warnings;
};

// Support-weighted precision/recall/F1; undefined per-class ratios count as 0.
inline Metrics weighted_prf(const Labels& pred, const Labels& truth) {
  require(!pred.empty() && !truth.empty(), ErrorCode::EmptyInput, "weighted_prf: empty input");
  require(pred.size() == truth.size(), ErrorCode::DimensionMismatch, "weighted_prf: length mismatch");
  std::map<ClassId, std::size_t> index;
  for (ClassId c : truth) index.emplace(c, 0);
  for (ClassId c : pred) index.emplace(c, 0);
  Metrics m;
  for (auto& [c, i] : index) {
    i = m.classes.size();
    m.classes.push_back(c);
  }
  const std::size_t n = m.classes.size();
  m.confusion.assign(n, std::vector<long long>(n, 0));
  for (std::size_t t = 0; t < pred.size(); ++t) ++m.confusion[index[truth[t]]][index[pred[t]]];

  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ClassScores s;
    long long predicted = 0;
    for (std::size_t r = 0; r < n; ++r) predicted += m.confusion[r][i];
    for (std::size_t j = 0; j < n; ++j) s.support += m.confusion[i][j];
    const double tp = static_cast<double>(m.confusion[i][i]);
    const std::string cls = std::to_string(m.classes[i]);
    if (predicted > 0) s.precision = tp / static_cast<double>(predicted);
    else if (s.support > 0) m.warnings.push_back("precision undefined for class " + cls + "; set to 0");
    if (s.support > 0) s.recall = tp / static_cast<double>(s.support);
    if (s.precision + s.recall > 0.0) s.f1 = 2.0 * s.precision * s.recall / (s.precision + s.recall);
    const double w = static_cast<double>(s.support);
    m.precision += w * s.precision;
    m.recall += w * s.recall;
    m.f1 += w * s.f1;
    total += w;
    m.per_class.push_back(s);
  }
  m.precision /= total;
  m.recall /= total;
  m.f1 /= total;
  return m;
}

struct SegmentRun {
  ClassId label = 0;
  std::size_t start = 0;
  std::size_t length = 0;
  double thickness = 0.0;
};

inline std::vector<SegmentRun> run_length(const Labels& seq, double interval) {
  std::vector<SegmentRun> runs;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (runs.empty() || runs.back().label != seq[i]) runs.push_back({seq[i], i, 0, 0.0});
    ++runs.back().length;
  }
  for (auto& r : runs) r.thickness = static_cast<double>(r.length) * interval;
  return runs;
}

// Fraction of runs thinner than min_thickness (meters).
inline double fragmentation_rate(const Labels& pred, double interval, double min_thickness) {
  require(!pred.empty(), ErrorCode::EmptyInput, "fragmentation_rate: empty sequence");
  require(interval > 0.0 && min_thickness > 0.0, ErrorCode::InvalidArgument,
          "fragmentation_rate: interval and min_thickness must be positive");
  const auto runs = run_length(pred, interval);
  // Tolerance keeps 3 x 0.5 m from reading as thinner than 1.5 m.
  const double eps = 1e-9 * min_thickness;
  std::size_t thin = 0;
  for (const auto& r : runs)
    if (r.thickness < min_thickness - eps) ++thin;
  return static_cast<double>(thin) / static_cast<double>(runs.size());
}

// Fragmentation pooled over several sequences (thin runs / all runs).
inline double fragmentation_rate(const std::vector<Labels>& preds, double interval, double min_thickness) {
  require(!preds.empty(), ErrorCode::EmptyInput, "fragmentation_rate: no sequences");
  std::size_t thin = 0;
  std::size_t total = 0;
  const double eps = 1e-9 * min_thickness;
  for (const auto& p : preds) {
    require(!p.empty(), ErrorCode::EmptyInput, "fragmentation_rate: empty sequence");
    require(interval > 0.0 && min_thickness > 0.0, ErrorCode::InvalidArgument,
            "fragmentation_rate: interval and min_thickness must be positive");
    for (const auto& r : run_length(p, interval)) {
      ++total;
      if (r.thickness < min_thickness - eps) ++thin;
    }
  }
  return static_cast<double>(thin) / static_cast<double>(total);
}

}  // namespace lithoflow
