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

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lithoflow/reasoning.hpp"
#include "lithoflow/welldata.hpp"

namespace lithoflow {

// ---------------------------------------------------------------------------
// Folds at well granularity

struct FoldAssignment {
  int k = 0;
  std::map<std::string, int> fold_of;

  int fold(const std::string& well) const {
    const auto it = fold_of.find(well);
    require(it != fold_of.end(), ErrorCode::InvalidArgument, "fold assignment has no well " + well);
    return it->second;
  }
  std::vector<std::string> wells_in(int f) const {
    std::vector<std::string> out;
    for (const auto& [w, k2] : fold_of)
      if (k2 == f) out.push_back(w);
    return out;
  }
};

inline FoldAssignment kfold_split(std::vector<std::string> wells, int k, std::uint64_t seed) {
  std::sort(wells.begin(), wells.end());
  wells.erase(std::unique(wells.begin(), wells.end()), wells.end());
  require(k >= 2, ErrorCode::InvalidArgument, "kfold_split: K must be >= 2");
  require(static_cast<std::size_t>(k) <= wells.size(), ErrorCode::InvalidArgument,
          "kfold_split: K exceeds the number of wells");
  Rng rng(seed);
  rng.shuffle(wells);
  FoldAssignment fa;
  fa.k = k;
  for (std::size_t i = 0; i < wells.size(); ++i) fa.fold_of[wells[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return fa;
}

// ---------------------------------------------------------------------------
// Stand-in numerical predictors

enum class PredictorKind { Knn, Logistic };

inline const char* to_string(PredictorKind k) { return k == PredictorKind::Knn ? "knn" : "logistic"; }

inline PredictorKind predictor_kind_from_string(std::string_view s) {
  if (s == "knn") return PredictorKind::Knn;
  if (s == "logistic") return PredictorKind::Logistic;
  fail(ErrorCode::Config, "unknown predictor kind: " + std::string(s));
}

struct PredictorSpec {
  PredictorKind kind = PredictorKind::Logistic;
  int k = 5;
  double lr = 0.05;
  int epochs = 8;
  double l2 = 1e-4;
  int batch_size = 32;
  std::uint64_t seed = 0;

  void validate() const {
    require(k >= 1, ErrorCode::Config, "predictor: k must be >= 1");
    require(lr > 0.0 && epochs >= 1 && batch_size >= 1 && l2 >= 0.0, ErrorCode::Config,
            "predictor: lr, epochs and batch size must be positive, l2 non-negative");
  }
};

namespace detail {

// Flattened window, per-channel mean and std, bias.
inline std::vector<double> logistic_features(const Window& w) {
  std::vector<double> f = w.flatten();
  for (std::size_t c = 0; c < w.num_channels(); ++c) {
    const auto col = w.values.column(c);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    f.push_back(mean);
    f.push_back(std::sqrt(ss / static_cast<double>(col.size())));
  }
  f.push_back(1.0);
  return f;
}

inline void softmax_inplace(std::vector<double>& z) {
  const double top = *std::max_element(z.begin(), z.end());
  double s = 0.0;
  for (auto& v : z) s += v = std::exp(v - top);
  for (auto& v : z) v /= s;
}

}  // namespace detail

class Predictor {
 public:
  PredictorSpec spec;
  std::size_t num_classes = 0;
  std::size_t window_len = 0;
  std::size_t num_channels = 0;
  std::vector<int> training_folds;  // empty when trained outside a fold scheme
  std::string fingerprint;

  // knn: stored training windows
  std::vector<std::vector<double>> knn_x;
  std::vector<Labels> knn_y;
  // logistic: weights [position][class][feature]
  std::size_t num_features = 0;
  std::vector<double> weights;

  std::vector<ClassDistribution> predict(const Window& w) const {
    require(w.length() == window_len && w.num_channels() == num_channels, ErrorCode::DimensionMismatch,
            "predictor: window shape differs from training data");
    return spec.kind == PredictorKind::Knn ? predict_knn(w) : predict_logistic(w);
  }

  Labels predict_labels(const Window& w) const {
    Labels out;
    for (const auto& d : predict(w)) out.push_back(d.argmax());
    return out;
  }

 private:
  std::vector<ClassDistribution> predict_knn(const Window& w) const {
    const auto q = w.flatten();
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(knn_x.size());
    for (std::size_t i = 0; i < knn_x.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < q.size(); ++j) s += (q[j] - knn_x[i][j]) * (q[j] - knn_x[i][j]);
      d.emplace_back(s, i);
    }
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(spec.k), d.size());
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k), d.end());
    std::vector<ClassDistribution> out(window_len, ClassDistribution{std::vector<double>(num_classes, 0.0)});
    for (std::size_t n = 0; n < k; ++n)
      for (std::size_t u = 0; u < window_len; ++u)
        out[u].probs[static_cast<std::size_t>(knn_y[d[n].second][u])] += 1.0 / static_cast<double>(k);
    return out;
  }

  std::vector<ClassDistribution> predict_logistic(const Window& w) const {
    const auto f = detail::logistic_features(w);
    std::vector<ClassDistribution> out;
    out.reserve(window_len);
    for (std::size_t u = 0; u < window_len; ++u) {
      std::vector<double> z(num_classes, 0.0);
      for (std::size_t c = 0; c < num_classes; ++c) {
        const double* wr = &weights[(u * num_classes + c) * num_features];
        double s = 0.0;
        for (std::size_t j = 0; j < num_features; ++j) s += wr[j] * f[j];
        z[c] = s;
      }
      detail::softmax_inplace(z);
      out.push_back({std::move(z)});
    }
    return out;
  }
};

inline std::string predictor_fingerprint(const PredictorSpec& spec, std::size_t num_classes,
                                         const std::vector<Window>& train, const std::vector<int>& folds) {
  Fnv1a h;
  h.add(to_string(spec.kind));
  h.add(spec.k);
  h.add(spec.lr);
  h.add(spec.epochs);
  h.add(spec.l2);
  h.add(spec.batch_size);
  h.add(static_cast<std::int64_t>(spec.seed));
  h.add(num_classes);
  h.add(dataset_fingerprint(train));
  for (int f : folds) h.add(f);
  return h.hex();
}

inline Predictor train_predictor(const PredictorSpec& spec, const std::vector<Window>& train,
                                 std::size_t num_classes, std::vector<int> training_folds = {}) {
  spec.validate();
  require(!train.empty(), ErrorCode::EmptyInput, "train_predictor: no training windows");
  require(num_classes >= 2, ErrorCode::InvalidArgument, "train_predictor: need at least two classes");
  std::set<ClassId> present;
  for (const auto& w : train) {
    require(w.labels.has_value(), ErrorCode::InvalidArgument, "train_predictor: unlabeled window");
    for (ClassId c : *w.labels) {
      require(c >= 0 && static_cast<std::size_t>(c) < num_classes, ErrorCode::UnknownClass,
              "train_predictor: label outside class set");
      present.insert(c);
    }
  }
  if (spec.kind == PredictorKind::Logistic)
    require(present.size() >= 2, ErrorCode::InvalidArgument, "train_predictor: single-class training set");
  std::sort(training_folds.begin(), training_folds.end());

  Predictor p;
  p.spec = spec;
  p.num_classes = num_classes;
  p.window_len = train.front().length();
  p.num_channels = train.front().num_channels();
  p.training_folds = training_folds;
  p.fingerprint = predictor_fingerprint(spec, num_classes, train, training_folds);
  for (const auto& w : train)
    require(w.length() == p.window_len && w.num_channels() == p.num_channels, ErrorCode::DimensionMismatch,
            "train_predictor: mixed window shapes");

  if (spec.kind == PredictorKind::Knn) {
    for (const auto& w : train) {
      p.knn_x.push_back(w.flatten());
      p.knn_y.push_back(*w.labels);
    }
    return p;
  }

  std::vector<std::vector<double>> feats;
  feats.reserve(train.size());
  for (const auto& w : train) feats.push_back(detail::logistic_features(w));
  const std::size_t nf = feats.front().size();
  const std::size_t l = p.window_len;
  const std::size_t c = num_classes;
  p.num_features = nf;
  p.weights.assign(l * c * nf, 0.0);

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(spec.seed, 0x5EED));
  std::vector<double> grad(p.weights.size());
  std::vector<double> z(c);
  const auto bs = static_cast<std::size_t>(spec.batch_size);
  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t b0 = 0; b0 < order.size(); b0 += bs) {
      const std::size_t b1 = std::min(order.size(), b0 + bs);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t bi = b0; bi < b1; ++bi) {
        const auto& f = feats[order[bi]];
        const auto& y = *train[order[bi]].labels;
        for (std::size_t u = 0; u < l; ++u) {
          for (std::size_t k = 0; k < c; ++k) {
            const double* wr = &p.weights[(u * c + k) * nf];
            double s = 0.0;
            for (std::size_t j = 0; j < nf; ++j) s += wr[j] * f[j];
            z[k] = s;
          }
          detail::softmax_inplace(z);
          for (std::size_t k = 0; k < c; ++k) {
            const double err = z[k] - (static_cast<std::size_t>(y[u]) == k ? 1.0 : 0.0);
            double* gr = &grad[(u * c + k) * nf];
            for (std::size_t j = 0; j < nf; ++j) gr[j] += err * f[j];
          }
        }
      }
      const double scale = spec.lr / static_cast<double>(b1 - b0);
      for (std::size_t i = 0; i < p.weights.size(); ++i)
        p.weights[i] -= scale * grad[i] + spec.lr * spec.l2 * p.weights[i];
    }
  }
  return p;
}

inline nlohmann::json to_json(const Predictor& p) {
  nlohmann::json j = {{"format", "lithoflow-predictor"},
                      {"version", 1},
                      {"kind", to_string(p.spec.kind)},
                      {"k", p.spec.k},
                      {"lr", p.spec.lr},
                      {"epochs", p.spec.epochs},
                      {"l2", p.spec.l2},
                      {"batch_size", p.spec.batch_size},
                      {"seed", p.spec.seed},
                      {"num_classes", p.num_classes},
                      {"window_len", p.window_len},
                      {"num_channels", p.num_channels},
                      {"training_folds", p.training_folds},
                      {"fingerprint", p.fingerprint}};
  if (p.spec.kind == PredictorKind::Knn) {
    j["knn_x"] = p.knn_x;
    j["knn_y"] = p.knn_y;
  } else {
    j["num_features"] = p.num_features;
    j["weights"] = p.weights;
  }
  return j;
}

inline Predictor predictor_from_json(const nlohmann::json& j) {
  try {
    require(j.at("format") == "lithoflow-predictor" && j.at("version") == 1, ErrorCode::ParseError,
            "predictor: unrecognized format");
    Predictor p;
    p.spec.kind = predictor_kind_from_string(j.at("kind").get<std::string>());
    p.spec.k = j.at("k").get<int>();
    p.spec.lr = j.at("lr").get<double>();
    p.spec.epochs = j.at("epochs").get<int>();
    p.spec.l2 = j.at("l2").get<double>();
    p.spec.batch_size = j.at("batch_size").get<int>();
    p.spec.seed = j.at("seed").get<std::uint64_t>();
    p.num_classes = j.at("num_classes").get<std::size_t>();
    p.window_len = j.at("window_len").get<std::size_t>();
    p.num_channels = j.at("num_channels").get<std::size_t>();
    p.training_folds = j.at("training_folds").get<std::vector<int>>();
    p.fingerprint = j.at("fingerprint").get<std::string>();
    if (p.spec.kind == PredictorKind::Knn) {
      p.knn_x = j.at("knn_x").get<std::vector<std::vector<double>>>();
      p.knn_y = j.at("knn_y").get<std::vector<Labels>>();
    } else {
      p.num_features = j.at("num_features").get<std::size_t>();
      p.weights = j.at("weights").get<std::vector<double>>();
      require(p.weights.size() == p.window_len * p.num_classes * p.num_features, ErrorCode::ParseError,
              "predictor: weight count does not match shape");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("predictor: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Out-of-fold signals

struct OofRecord {
  std::string well_id;
  int segment = 0;
  std::size_t start_index = 0;
  int fold = 0;
  std::string fingerprint;
  std::vector<int> producer_folds;
  std::vector<ClassDistribution> probs;
};

struct OofDataset {
  std::size_t num_classes = 0;
  std::vector<OofRecord> records;
};

inline OofDataset generate_oof(const std::vector<Window>& windows, const PredictorSpec& spec,
                               const FoldAssignment& folds, std::size_t num_classes) {
  require(!windows.empty(), ErrorCode::EmptyInput, "generate_oof: no windows");
  for (const auto& w : windows) folds.fold(w.well_id);
  OofDataset out;
  out.num_classes = num_classes;
  for (int k = 0; k < folds.k; ++k) {
    std::vector<Window> train;
    std::vector<const Window*> held;
    for (const auto& w : windows) {
      if (folds.fold(w.well_id) == k) held.push_back(&w);
      else train.push_back(w);
    }
    if (held.empty()) continue;
    require(!train.empty(), ErrorCode::InvalidArgument, "generate_oof: fold leaves no training data");
    std::vector<int> producer;
    for (int f = 0; f < folds.k; ++f)
      if (f != k) producer.push_back(f);
    const auto model = train_predictor(spec, train, num_classes, producer);
    for (const auto* w : held)
      out.records.push_back({w->well_id, w->segment, w->start_index, k, model.fingerprint, producer,
                             model.predict(*w)});
  }
  std::sort(out.records.begin(), out.records.end(), [](const OofRecord& a, const OofRecord& b) {
    return std::tie(a.well_id, a.segment, a.start_index) < std::tie(b.well_id, b.segment, b.start_index);
  });
  return out;
}

// Records whose producer saw the record's own fold.
inline std::size_t provenance_violations(const OofDataset& oof) {
  std::size_t bad = 0;
  for (const auto& r : oof.records)
    if (std::find(r.producer_folds.begin(), r.producer_folds.end(), r.fold) != r.producer_folds.end()) ++bad;
  return bad;
}

inline Predictor train_master(const std::vector<Window>& windows, const PredictorSpec& spec,
                              std::size_t num_classes, const FoldAssignment* folds = nullptr) {
  std::vector<int> all;
  if (folds)
    for (int f = 0; f < folds->k; ++f) all.push_back(f);
  return train_predictor(spec, windows, num_classes, all);
}

inline std::string oof_csv(const OofDataset& oof) {
  std::ostringstream out;
  out << "well_id,start_index,position,fold,fingerprint";
  for (std::size_t c = 1; c <= oof.num_classes; ++c) out << ",p_" << c;
  out << '\n';
  for (const auto& r : oof.records)
    for (std::size_t u = 0; u < r.probs.size(); ++u) {
      out << r.well_id << ',' << r.start_index << ',' << u << ',' << r.fold << ',' << r.fingerprint;
      for (double p : r.probs[u].probs) out << ',' << format_double(p);
      out << '\n';
    }
  return out.str();
}

}  // namespace lithoflow
