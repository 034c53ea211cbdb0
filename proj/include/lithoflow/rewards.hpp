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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lithoflow/perception.hpp"
#include "lithoflow/reasoning.hpp"
#include "lithoflow/workflow.hpp"

namespace lithoflow {

// ---------------------------------------------------------------------------
// Scalar rewards

inline double r_llm_acc(const Labels& pred, const Labels& truth) {
  require(!pred.empty() && !truth.empty(), ErrorCode::EmptyInput, "r_llm_acc: empty sequence");
  require(pred.size() == truth.size(), ErrorCode::DimensionMismatch, "r_llm_acc: length mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(pred.size());
}

inline int agreement_level(std::span<const ClassId> candidates) {
  require(candidates.size() >= 2 && candidates.size() <= 3, ErrorCode::InvalidArgument,
          "agreement_level: need two or three candidates");
  int best = 0;
  for (ClassId c : candidates)
    best = std::max(best, static_cast<int>(std::count(candidates.begin(), candidates.end(), c)));
  return best;
}

// Disagreement level m -> penalty.
using PenaltyMap = std::map<int, double>;

inline PenaltyMap default_eta() { return {{1, 0.5}, {2, 1.0}, {3, 1.0}}; }

inline double r_refl(std::span<const ClassId> candidates, ClassId chosen, ClassId truth,
                     const PenaltyMap& eta = default_eta()) {
  const int m = agreement_level(candidates);
  if (std::find(candidates.begin(), candidates.end(), truth) == candidates.end()) return 0.0;
  if (chosen == truth) return 1.0;
  const auto it = eta.find(m);
  require(it != eta.end(), ErrorCode::InvalidArgument,
          "r_refl: penalty undefined for agreement level " + std::to_string(m));
  return -it->second;
}

// Unbiased estimate 1 - C(n-c, k) / C(n, k), as a running product.
inline double pass_at_k(int n, int c, int k) {
  require(n >= 1 && c >= 0 && c <= n, ErrorCode::InvalidArgument, "pass_at_k: need 0 <= c <= n");
  require(k >= 1 && k <= n, ErrorCode::InvalidArgument, "pass_at_k: need 1 <= k <= n");
  if (n - c < k) return 1.0;
  double fail_all = 1.0;
  for (int i = 0; i < k; ++i) fail_all *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
  return 1.0 - fail_all;
}

// ---------------------------------------------------------------------------
// Trend-helpfulness

struct TrendHelpfulness {
  double delta = 0.0;
  bool helpful = false;
  int successes_trend = 0;
  int successes_direct = 0;
  double pass_trend = 0.0;
  double pass_direct = 0.0;
};

struct TrendTrialSpec {
  int n = 50;
  int k = 5;
  std::uint64_t seed = 0;
  // A trial succeeds when its window accuracy reaches this value.
  double success_accuracy = 0.5;
  double slope_tol = 0.05;
};

// `base` carries the non-narrative evidence shared by both modes.
inline TrendHelpfulness trend_helpful(const Window& window, const Labels& truth, const Reasoner& reasoner,
                                      const TrendTrialSpec& spec, ReasonerRequest base = {}) {
  require(spec.n >= spec.k && spec.k >= 1, ErrorCode::InvalidArgument, "trend_helpful: need n >= k >= 1");
  require(truth.size() == window.length(), ErrorCode::DimensionMismatch, "trend_helpful: truth length");
  if (base.num_classes == 0) {
    ClassId top = 0;
    for (ClassId c : truth) top = std::max(top, c);
    base.num_classes = static_cast<std::size_t>(top) + 1;
  }
  base.length = window.length();
  if (base.window_table.empty()) base.window_table = render_window_table(window);

  auto run_mode = [&](ReasoningMode mode) {
    ReasonerRequest req = base;
    req.narrative.reset();
    if (mode == ReasoningMode::WithNarrative) req.narrative = narrate(window, spec.slope_tol);
    // Separate stream per mode so no draw is shared between the two arms.
    const std::uint64_t stream = derive_seed(spec.seed, mode == ReasoningMode::WithNarrative ? 0x7E11 : 0xD1EC);
    int successes = 0;
    for (int i = 0; i < spec.n; ++i) {
      const auto resp = reasoner.reason(req, derive_seed(stream, static_cast<std::uint64_t>(i)));
      if (r_llm_acc(resp.labels, truth) >= spec.success_accuracy) ++successes;
    }
    return successes;
  };
  TrendHelpfulness out;
  out.successes_trend = run_mode(ReasoningMode::WithNarrative);
  out.successes_direct = run_mode(ReasoningMode::Direct);
  out.pass_trend = pass_at_k(spec.n, out.successes_trend, spec.k);
  out.pass_direct = pass_at_k(spec.n, out.successes_direct, spec.k);
  out.delta = out.pass_trend - out.pass_direct;
  out.helpful = out.delta > 0.0;
  return out;
}

// ---------------------------------------------------------------------------
// Structured perturbations

enum class PerturbKind { ShiftTurningPoint, FlipTrend, ShiftDepth };

struct PerturbOp {
  PerturbKind kind = PerturbKind::FlipTrend;
  std::size_t channel = 0;  // FlipTrend only
  int delta = 0;            // shifts only

  static PerturbOp flip_trend(std::size_t channel) { return {PerturbKind::FlipTrend, channel, 0}; }
  static PerturbOp shift_depth(int delta) { return {PerturbKind::ShiftDepth, 0, delta}; }
  static PerturbOp shift_turning_point(int delta) { return {PerturbKind::ShiftTurningPoint, 0, delta}; }
};

namespace detail {

inline double interp_at(std::span<const double> x, double pos) {
  const double clamped = std::clamp(pos, 0.0, static_cast<double>(x.size() - 1));
  const auto lo = static_cast<std::size_t>(std::floor(clamped));
  const std::size_t hi = std::min(lo + 1, x.size() - 1);
  const double f = clamped - static_cast<double>(lo);
  return x[lo] + f * (x[hi] - x[lo]);
}

// Moves each turning point of one channel by delta through a piecewise
// linear warp of the sample axis.
inline std::vector<double> warp_turning_points(std::span<const double> x, int delta, double slope_tol) {
  const std::size_t n = x.size();
  const auto trend = narrate_series(x, "", slope_tol);
  std::vector<double> out(x.begin(), x.end());
  if (trend.turning_points.empty() || delta == 0) return out;
  std::vector<double> src{0.0};
  std::vector<double> dst{0.0};
  for (auto tp : trend.turning_points) {
    src.push_back(static_cast<double>(tp));
    dst.push_back(static_cast<double>(tp) + delta);
  }
  src.push_back(static_cast<double>(n - 1));
  dst.push_back(static_cast<double>(n - 1));
  for (std::size_t i = 1; i < dst.size(); ++i)
    require(dst[i] > dst[i - 1], ErrorCode::InvalidArgument,
            "shift_turning_point: shifted turning point leaves the window");
  for (std::size_t j = 0; j < n; ++j) {
    const double t = static_cast<double>(j);
    std::size_t seg = 1;
    while (seg + 1 < dst.size() && t > dst[seg]) ++seg;
    const double f = (t - dst[seg - 1]) / (dst[seg] - dst[seg - 1]);
    out[j] = interp_at(x, src[seg - 1] + f * (src[seg] - src[seg - 1]));
  }
  return out;
}

}  // namespace detail

inline Window perturb(const Window& window, const std::vector<PerturbOp>& ops, double slope_tol = 0.05) {
  Window w = window;
  const std::size_t len = w.length();
  for (const auto& op : ops) {
    if (op.kind != PerturbKind::FlipTrend)
      require(static_cast<std::size_t>(std::abs(op.delta)) < len, ErrorCode::InvalidArgument,
              "perturb: shift must be smaller than the window length");
    switch (op.kind) {
      case PerturbKind::FlipTrend: {
        require(op.channel < w.num_channels(), ErrorCode::ChannelMissing, "perturb: channel out of range");
        double mean = 0.0;
        for (std::size_t r = 0; r < len; ++r) mean += w.values(r, op.channel);
        mean /= static_cast<double>(len);
        for (std::size_t r = 0; r < len; ++r) w.values(r, op.channel) = 2.0 * mean - w.values(r, op.channel);
        break;
      }
      case PerturbKind::ShiftDepth: {
        const Matrix src = w.values;
        for (std::size_t r = 0; r < len; ++r) {
          const long from = std::clamp<long>(static_cast<long>(r) - op.delta, 0, static_cast<long>(len) - 1);
          for (std::size_t c = 0; c < w.num_channels(); ++c)
            w.values(r, c) = src(static_cast<std::size_t>(from), c);
        }
        break;
      }
      case PerturbKind::ShiftTurningPoint: {
        for (std::size_t c = 0; c < w.num_channels(); ++c) {
          const auto col = w.values.column(c);
          const auto warped = detail::warp_turning_points(col, op.delta, slope_tol);
          for (std::size_t r = 0; r < len; ++r) w.values(r, c) = warped[r];
        }
        break;
      }
    }
  }
  return w;
}

// ---------------------------------------------------------------------------
// Rubric scoring of narratives

struct RubricScores {
  double accuracy = 0.0;
  double completeness = 0.0;
  double clarity = 0.0;
  double depth_alignment = 0.0;

  double mean() const { return (accuracy + completeness + clarity + depth_alignment) / 4.0; }
};

namespace detail {

inline std::size_t overlap(const TrendSegment& a, const TrendSegment& b) {
  const auto lo = std::max(a.start, b.start);
  const auto hi = std::min(a.end, b.end);
  return hi > lo ? hi - lo : 0;
}

inline std::vector<double> boundaries(const ChannelTrend& ch, std::size_t length) {
  std::vector<double> out{0.0, static_cast<double>(length)};
  for (std::size_t s = 1; s < ch.segments.size(); ++s) out.push_back(static_cast<double>(ch.segments[s].start));
  return out;
}

inline double mean_nearest(const std::vector<double>& from, const std::vector<double>& to) {
  double total = 0.0;
  for (double b : from) {
    double best = std::numeric_limits<double>::infinity();
    for (double t : to) best = std::min(best, std::abs(b - t));
    total += best;
  }
  return total / static_cast<double>(from.size());
}

}  // namespace detail

inline RubricScores rubric_score(const TrendNarrative& candidate, const TrendNarrative& reference) {
  require(candidate.channels.size() == reference.channels.size(), ErrorCode::ChannelMissing,
          "rubric_score: channel sets differ");
  for (std::size_t c = 0; c < candidate.channels.size(); ++c)
    require(candidate.channels[c].channel == reference.channels[c].channel, ErrorCode::ChannelMissing,
            "rubric_score: channel sets differ");
  const std::size_t length = std::max<std::size_t>(reference.length, 1);

  std::size_t cand_total = 0, cand_correct = 0;
  std::size_t ref_total = 0, ref_matched = 0;
  double align_total = 0.0;
  for (std::size_t c = 0; c < reference.channels.size(); ++c) {
    const auto& cs = candidate.channels[c].segments;
    const auto& rs = reference.channels[c].segments;
    for (const auto& s : cs) {
      ++cand_total;
      const TrendSegment* best = nullptr;
      std::size_t best_ov = 0;
      for (const auto& r : rs) {
        const auto ov = detail::overlap(s, r);
        if (ov > best_ov) {
          best_ov = ov;
          best = &r;
        }
      }
      if (best && best->direction == s.direction) ++cand_correct;
    }
    for (const auto& r : rs) {
      ++ref_total;
      const bool matched = std::any_of(cs.begin(), cs.end(), [&](const TrendSegment& s) {
        return s.direction == r.direction && detail::overlap(s, r) > 0;
      });
      if (matched) ++ref_matched;
    }
    const auto cb = detail::boundaries(candidate.channels[c], length);
    const auto rb = detail::boundaries(reference.channels[c], length);
    const double offset = 0.5 * (detail::mean_nearest(cb, rb) + detail::mean_nearest(rb, cb));
    align_total += std::clamp(1.0 - offset / static_cast<double>(length), 0.0, 1.0);
  }

  RubricScores s;
  s.accuracy = cand_total ? static_cast<double>(cand_correct) / static_cast<double>(cand_total) : 0.0;
  s.completeness = ref_total ? static_cast<double>(ref_matched) / static_cast<double>(ref_total) : 1.0;
  if (ref_total == 0) {
    s.clarity = cand_total == 0 ? 1.0 : 0.0;
  } else {
    const double excess = cand_total > ref_total ? static_cast<double>(cand_total - ref_total) : 0.0;
    s.clarity = 1.0 - std::clamp(excess / static_cast<double>(ref_total), 0.0, 1.0);
  }
  s.depth_alignment = reference.channels.empty() ? 1.0 : align_total / static_cast<double>(reference.channels.size());
  if (cand_total == 0 && ref_total == 0) s.accuracy = 1.0;
  return s;
}

// ---------------------------------------------------------------------------
// Attaching rewards to trajectories

struct RewardRecord {
  Module module = Module::Trend;
  double value = 0.0;
  std::string provenance;
};

inline Trajectory attach_rewards(Trajectory traj, const Labels& truth,
                                 const std::optional<TrendNarrative>& reference,
                                 const PenaltyMap& eta = default_eta()) {
  if (auto* e = traj.find(Module::Trend); e && reference && e->response.contains("narrative")) {
    const auto cand = narrative_from_json(e->response.at("narrative"));
    const auto rs = rubric_score(cand, *reference);
    e->reward = rs.mean();
    e->provenance = "rubric_mean(acc=" + format_fixed(rs.accuracy, 4) + ",comp=" +
                    format_fixed(rs.completeness, 4) + ",clar=" + format_fixed(rs.clarity, 4) +
                    ",align=" + format_fixed(rs.depth_alignment, 4) + ")";
  }
  if (auto* e = traj.find(Module::Reasoning); e && e->response.contains("labels")) {
    e->reward = r_llm_acc(e->response.at("labels").get<Labels>(), truth);
    e->provenance = "r_llm_acc";
  }
  if (auto* e = traj.find(Module::Reflector); e && e->response.contains("candidates")) {
    const auto chosen = e->response.at("labels").get<Labels>();
    const auto cands = e->response.at("candidates").get<std::vector<Labels>>();
    require(chosen.size() == truth.size() && cands.size() == truth.size(), ErrorCode::DimensionMismatch,
            "attach_rewards: reflector payload length differs from truth");
    double total = 0.0;
    std::size_t used = 0;
    std::map<std::string, int> fired;
    for (std::size_t u = 0; u < truth.size(); ++u) {
      if (cands[u].size() < 2) continue;
      const double r = r_refl(cands[u], chosen[u], truth[u], eta);
      ++fired[r > 0 ? "correct" : r == 0 ? "truth_absent" : "penalty_m" + std::to_string(agreement_level(cands[u]))];
      total += r;
      ++used;
    }
    if (used > 0) {
      e->reward = total / static_cast<double>(used);
      std::ostringstream p;
      p << "r_refl_mean(";
      bool first = true;
      for (const auto& [k, v] : fired) {
        p << (first ? "" : ",") << k << '=' << v;
        first = false;
      }
      p << ')';
      e->provenance = p.str();
    }
  }
  return traj;
}

inline std::string reward_audit_csv(const std::vector<Trajectory>& trajs, const std::string& run_id) {
  std::ostringstream out;
  out << "run_id,well_id,window_start,module,reward,provenance\n";
  for (const auto& t : trajs)
    for (const auto& e : t.events) {
      out << run_id << ',' << t.well_id << ',' << t.window_start << ',' << to_string(e.module) << ','
          << (e.reward ? format_double(*e.reward) : "") << ",\"" << e.provenance << "\"\n";
    }
  return out.str();
}

}  // namespace lithoflow
