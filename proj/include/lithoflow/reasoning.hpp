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
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lithoflow/core.hpp"
#include "lithoflow/perception.hpp"

namespace lithoflow {

struct ClassDistribution {
  std::vector<double> probs;

  std::size_t num_classes() const noexcept { return probs.size(); }

  static ClassDistribution uniform(std::size_t c) {
    return {std::vector<double>(c, 1.0 / static_cast<double>(c))};
  }
  static ClassDistribution one_hot(std::size_t c, ClassId k) {
    ClassDistribution d{std::vector<double>(c, 0.0)};
    d.probs.at(static_cast<std::size_t>(k)) = 1.0;
    return d;
  }

  // Lowest class id among maxima.
  ClassId argmax() const {
    return static_cast<ClassId>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }

  void validate(double tol = 1e-9) const {
    require(!probs.empty(), ErrorCode::InvalidArgument, "empty class distribution");
    double sum = 0.0;
    for (double p : probs) {
      require(p >= -tol && p <= 1.0 + tol, ErrorCode::InvalidArgument,
              "class probability outside [0,1]");
      sum += p;
    }
    require(std::abs(sum - 1.0) <= tol, ErrorCode::InvalidArgument,
            "class probabilities do not sum to 1");
  }
};

// Similarity-weighted label vote of the neighborhood at one window position.
inline ClassDistribution aggregate_votes(const Neighborhood& nbh, std::size_t position,
                                         std::size_t num_classes) {
  require(!nbh.neighbors.empty(), ErrorCode::EmptyInput, "aggregate_votes: empty neighborhood");
  ClassDistribution p{std::vector<double>(num_classes, 0.0)};
  for (const auto& n : nbh.neighbors) {
    require(position < n.labels.size(), ErrorCode::InvalidArgument,
            "aggregate_votes: neighbor lacks a label at position");
    const ClassId c = n.labels[position];
    require(c >= 0 && static_cast<std::size_t>(c) < num_classes, ErrorCode::UnknownClass,
            "aggregate_votes: neighbor label outside class set");
    p.probs[static_cast<std::size_t>(c)] += n.weight;
  }
  return p;
}

inline std::vector<ClassDistribution> aggregate_votes_all(const Neighborhood& nbh,
                                                          std::size_t length,
                                                          std::size_t num_classes) {
  std::vector<ClassDistribution> out;
  out.reserve(length);
  for (std::size_t u = 0; u < length; ++u) out.push_back(aggregate_votes(nbh, u, num_classes));
  return out;
}

// ---------------------------------------------------------------------------
// Neural probability interpretation

enum class ConfidenceBand { High, Moderate, Low };

inline const char* to_string(ConfidenceBand b) {
  switch (b) {
    case ConfidenceBand::High: return "high";
    case ConfidenceBand::Moderate: return "moderate";
    case ConfidenceBand::Low: return "low";
  }
  return "?";
}

struct InterpretStatement {
  ClassId cls = 0;
  double confidence = 0.0;
  ConfidenceBand band = ConfidenceBand::Low;
};

struct Interpretation {
  std::vector<InterpretStatement> statements;
  bool uncertain = false;
  std::string text;
};

inline constexpr double kHighBand = 0.6;
inline constexpr double kModerateBand = 0.3;

inline Interpretation interpret_probs(const ClassDistribution& p, double tau = 0.15) {
  require(tau > 0.0 && tau < 1.0, ErrorCode::InvalidArgument, "interpret_probs: tau must be in (0,1)");
  p.validate();
  Interpretation out;
  for (std::size_t c = 0; c < p.probs.size(); ++c) {
    if (p.probs[c] < tau) continue;
    const double v = p.probs[c];
    out.statements.push_back({static_cast<ClassId>(c), v,
                              v >= kHighBand       ? ConfidenceBand::High
                              : v >= kModerateBand ? ConfidenceBand::Moderate
                                                   : ConfidenceBand::Low});
  }
  std::stable_sort(out.statements.begin(), out.statements.end(),
                   [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
  const double top = *std::max_element(p.probs.begin(), p.probs.end());
  out.uncertain = top < 2.0 / static_cast<double>(p.probs.size());

  std::ostringstream text;
  if (out.statements.empty()) text << "No class reaches the reporting threshold.";
  for (std::size_t i = 0; i < out.statements.size(); ++i) {
    const auto& s = out.statements[i];
    text << (i ? " " : "") << "Class " << s.cls << " is supported with " << to_string(s.band)
         << " confidence (" << format_fixed(s.confidence, 2) << ").";
  }
  if (out.uncertain) text << " The predictor is uncertain.";
  out.text = text.str();
  return out;
}

// ---------------------------------------------------------------------------
// Semantic reasoning backends

struct ReasonerRequest {
  std::size_t num_classes = 0;
  std::size_t length = 0;
  std::string window_table;
  std::optional<TrendNarrative> narrative;
  std::string neighborhood_summary;
  std::optional<std::vector<ClassDistribution>> p_nbr;
  std::optional<std::vector<ClassDistribution>> p_nn;
};

struct ReasonerResponse {
  std::string trace;
  Labels labels;
  std::optional<std::vector<ClassDistribution>> distributions;
};

inline void validate_response(const ReasonerResponse& r, std::size_t length,
                              std::size_t num_classes) {
  require(!r.trace.empty(), ErrorCode::ParseError, "reasoner: empty reasoning trace");
  require(r.labels.size() == length, ErrorCode::ParseError,
          "reasoner: expected " + std::to_string(length) + " labels, got " +
              std::to_string(r.labels.size()));
  for (ClassId c : r.labels)
    require(c >= 0 && static_cast<std::size_t>(c) < num_classes, ErrorCode::UnknownClass,
            "reasoner: label outside class set");
}

// Text table of a window: one line per depth sample.
inline std::string render_window_table(const Window& w, const std::vector<std::string>& names = {}) {
  std::ostringstream out;
  out << "depth";
  for (std::size_t c = 0; c < w.num_channels(); ++c)
    out << ' ' << (c < names.size() ? names[c] : "ch" + std::to_string(c));
  out << '\n';
  for (std::size_t r = 0; r < w.length(); ++r) {
    out << format_fixed(w.depths.empty() ? static_cast<double>(r) : w.depths[r], 2);
    for (std::size_t c = 0; c < w.num_channels(); ++c) out << ' ' << format_fixed(w.values(r, c), 3);
    out << '\n';
  }
  return out.str();
}

// Prompt text sent to language-model backends.
inline std::string render_prompt(const ReasonerRequest& req) {
  std::ostringstream out;
  out << "Classify the lithology at every depth sample of this well-log window into one of "
      << req.num_classes << " classes (ids 0.." << req.num_classes - 1 << ").\n\n";
  out << "Window table:\n" << req.window_table << '\n';
  if (req.narrative) out << "Trend narrative:\n" << req.narrative->rendered_text << '\n';
  if (!req.neighborhood_summary.empty())
    out << "Similar historical windows:\n" << req.neighborhood_summary << '\n';
  auto dump = [&](const char* title, const std::vector<ClassDistribution>& ps) {
    out << title << ":\n";
    for (std::size_t u = 0; u < ps.size(); ++u) {
      out << u << ':';
      for (double p : ps[u].probs) out << ' ' << format_fixed(p, 3);
      out << '\n';
    }
  };
  if (req.p_nbr) dump("Neighbor vote confidences", *req.p_nbr);
  if (req.p_nn) dump("Neural classifier probabilities", *req.p_nn);
  out << "\nReason step by step, then end with a single line of the form\nLABELS: c1,c2,...,c"
      << req.length << '\n';
  return out.str();
}

enum class ReasoningMode { WithNarrative, Direct };

class Reasoner {
 public:
  virtual ~Reasoner() = default;
  // Throws Error with ErrorCode::Transport or ErrorCode::ParseError on
  // backend failure. `call_seed` drives any stochastic decoding.
  virtual ReasonerResponse reason(const ReasonerRequest& request, std::uint64_t call_seed) const = 0;
  virtual std::string name() const = 0;
};

struct StubConfig {
  double alpha = 0.5;
  double temperature = 0.0;
  std::uint64_t seed = 0;
  // Dominant trend direction -> class favored on ties (and lifted, if
  // trend_lift > 0) when a narrative is present.
  std::map<Direction, ClassId> trend_class;
  double trend_lift = 0.0;
};

// Log-linear pool p ~ a^alpha * b^(1-alpha); falls back to the linear mix
// when the supports are disjoint.
inline ClassDistribution log_linear_pool(const ClassDistribution& a, const ClassDistribution& b,
                                         double alpha) {
  require(a.num_classes() == b.num_classes(), ErrorCode::DimensionMismatch,
          "pool: class count mismatch");
  const std::size_t c = a.num_classes();
  ClassDistribution out{std::vector<double>(c)};
  double total = 0.0;
  for (std::size_t k = 0; k < c; ++k) {
    out.probs[k] = std::pow(a.probs[k], alpha) * std::pow(b.probs[k], 1.0 - alpha);
    total += out.probs[k];
  }
  if (total <= 0.0) {
    total = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      out.probs[k] = alpha * a.probs[k] + (1.0 - alpha) * b.probs[k];
      total += out.probs[k];
    }
  }
  for (auto& p : out.probs) p /= total;
  return out;
}

// Move `lift` probability mass onto class k, taken proportionally from the
// other classes.
inline ClassDistribution lift_class(const ClassDistribution& p, ClassId k, double lift) {
  ClassDistribution out = p;
  const auto kk = static_cast<std::size_t>(k);
  const double rest = 1.0 - p.probs[kk];
  const double delta = std::min(lift, rest);
  if (delta <= 0.0) return out;
  for (std::size_t c = 0; c < out.probs.size(); ++c)
    out.probs[c] = c == kk ? p.probs[c] + delta : p.probs[c] * (rest - delta) / rest;
  return out;
}

inline ReasonerResponse stub_reason(const ReasonerRequest& req, const StubConfig& cfg,
                                    std::uint64_t call_seed) {
  require(cfg.alpha >= 0.0 && cfg.alpha <= 1.0, ErrorCode::InvalidArgument,
          "stub_reason: alpha must be in [0,1]");
  require(cfg.temperature >= 0.0, ErrorCode::InvalidArgument,
          "stub_reason: temperature must be >= 0");
  require(req.num_classes >= 1 && req.length >= 1, ErrorCode::InvalidArgument,
          "stub_reason: empty request");
  require(!req.window_table.empty(), ErrorCode::InvalidArgument, "stub_reason: missing window table");
  const std::size_t c = req.num_classes;
  const auto uniform = ClassDistribution::uniform(c);

  std::optional<ClassId> trend_pick;
  std::optional<Direction> trend_dir;
  if (req.narrative) {
    trend_dir = dominant_direction(*req.narrative);
    if (auto it = cfg.trend_class.find(*trend_dir); it != cfg.trend_class.end()) {
      require(it->second >= 0 && static_cast<std::size_t>(it->second) < c, ErrorCode::UnknownClass,
              "stub_reason: trend mapping names an unknown class");
      trend_pick = it->second;
    }
  }

  Rng rng(derive_seed(cfg.seed, call_seed));
  ReasonerResponse resp;
  resp.distributions.emplace();
  std::ostringstream trace;
  trace << "evidence: window table";
  if (req.narrative) trace << ", trend narrative (dominant " << to_string(*trend_dir) << ")";
  if (req.p_nbr) trace << ", neighbor vote";
  if (req.p_nn) trace << ", neural probabilities";
  trace << "\npool: alpha=" << format_fixed(cfg.alpha, 3)
        << " temperature=" << format_fixed(cfg.temperature, 3) << '\n';

  for (std::size_t u = 0; u < req.length; ++u) {
    const auto& a = req.p_nbr ? req.p_nbr->at(u) : uniform;
    const auto& b = req.p_nn ? req.p_nn->at(u) : uniform;
    auto pooled = log_linear_pool(a, b, cfg.alpha);
    if (trend_pick && cfg.trend_lift > 0.0) pooled = lift_class(pooled, *trend_pick, cfg.trend_lift);

    ClassId pick = 0;
    if (cfg.temperature == 0.0) {
      const double top = *std::max_element(pooled.probs.begin(), pooled.probs.end());
      pick = pooled.argmax();
      if (trend_pick && pooled.probs[static_cast<std::size_t>(*trend_pick)] == top) pick = *trend_pick;
    } else {
      std::vector<double> w(c);
      for (std::size_t k = 0; k < c; ++k) w[k] = std::pow(pooled.probs[k], 1.0 / cfg.temperature);
      pick = static_cast<ClassId>(rng.categorical(w));
    }
    resp.labels.push_back(pick);
    resp.distributions->push_back(std::move(pooled));
  }
  trace << "labels chosen from the pooled distribution at each depth sample";
  resp.trace = trace.str();
  return resp;
}

class StubReasoner final : public Reasoner {
 public:
  explicit StubReasoner(StubConfig cfg = {}) : cfg_(std::move(cfg)) {
    require(cfg_.alpha >= 0.0 && cfg_.alpha <= 1.0, ErrorCode::InvalidArgument,
            "stub: alpha must be in [0,1]");
  }
  ReasonerResponse reason(const ReasonerRequest& request, std::uint64_t call_seed) const override {
    return stub_reason(request, cfg_, call_seed);
  }
  std::string name() const override { return "stub"; }
  const StubConfig& config() const noexcept { return cfg_; }

 private:
  StubConfig cfg_;
};

// Parse a reply that ends with a `LABELS: c1,c2,...` line; everything above
// it is the reasoning trace.
inline ReasonerResponse parse_labeled_reply(const std::string& text) {
  std::vector<std::string> lines;
  for (auto& l : split(text, '\n')) lines.push_back(trim(l));
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  require(!lines.empty(), ErrorCode::ParseError, "reasoner reply is empty");
  const std::string& last = lines.back();
  require(last.rfind("LABELS:", 0) == 0, ErrorCode::ParseError,
          "reasoner reply lacks a final LABELS: line");
  ReasonerResponse resp;
  for (const auto& tok : split(last.substr(7), ',')) {
    const auto t = trim(tok);
    require(!t.empty(), ErrorCode::ParseError, "reasoner reply has an empty label");
    resp.labels.push_back(parse_int(t, "LABELS line"));
  }
  std::ostringstream trace;
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) trace << lines[i] << (i + 2 < lines.size() ? "\n" : "");
  resp.trace = trim(trace.str());
  require(!resp.trace.empty(), ErrorCode::ParseError, "reasoner reply has no reasoning trace");
  return resp;
}

// Settings of the HTTP chat-completion backend (see remote_reasoner.hpp).
struct RemoteConfig {
  std::string url;  // http://host:port/path
  std::string model = "default";
  std::string api_key;
  double temperature = 0.0;
  int timeout_s = 30;
  int retries = 1;
};

// Endpoint and key are read from the named environment variables.
inline RemoteConfig remote_config_from_env(const std::string& url_var, const std::string& key_var,
                                           RemoteConfig base = {}) {
  if (const char* u = std::getenv(url_var.c_str())) base.url = u;
  if (const char* k = std::getenv(key_var.c_str())) base.api_key = k;
  require(!base.url.empty(), ErrorCode::Config,
          "remote reasoner endpoint not set (environment variable " + url_var + ")");
  return base;
}

}  // namespace lithoflow
