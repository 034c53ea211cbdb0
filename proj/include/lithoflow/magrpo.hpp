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

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lithoflow/core.hpp"

namespace lithoflow {

inline constexpr std::size_t kToyModules = 3;  // Trend, Reasoning, Reflector

// ---------------------------------------------------------------------------
// Toy task: three chained modules over small discrete action spaces

struct ToyTaskSpec {
  int num_contexts = 8;
  int num_actions = 4;
  int context_mult = 3;
  std::uint64_t target_seed = 20260101;
  std::array<std::vector<int>, kToyModules> targets;  // per module, per context

  void validate() const {
    require(num_contexts >= 2 && num_actions >= 2, ErrorCode::InvalidArgument,
            "toy task: need at least 2 contexts and 2 actions");
    for (const auto& t : targets)
      require(t.size() == static_cast<std::size_t>(num_contexts), ErrorCode::InvalidArgument,
              "toy task: target table size");
  }

  int next_context(std::size_t module, int context, int action) const {
    const int off = module == 0 ? 0 : 1;
    return (context_mult * context + action + off) % num_contexts;
  }

  // Final-module target along the all-correct chain from input x.
  int outcome_target(int x) const {
    int c = x;
    for (std::size_t m = 0; m + 1 < kToyModules; ++m) c = next_context(m, c, targets[m][c]);
    return targets[kToyModules - 1][c];
  }
};

inline ToyTaskSpec canonical_toy_task(int num_contexts = 8, int num_actions = 4,
                                      std::uint64_t target_seed = 20260101) {
  ToyTaskSpec t;
  t.num_contexts = num_contexts;
  t.num_actions = num_actions;
  t.target_seed = target_seed;
  Rng rng(target_seed);
  for (auto& table : t.targets) {
    table.resize(static_cast<std::size_t>(num_contexts));
    for (auto& v : table) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(num_actions)));
  }
  t.validate();
  return t;
}

// ---------------------------------------------------------------------------
// Tabular softmax policy

struct ToyPolicy {
  int num_contexts = 8;
  int num_actions = 4;
  double temperature = 1.0;
  std::vector<double> logits;  // [module][context][action]

  static ToyPolicy uniform(const ToyTaskSpec& task, double temperature = 1.0) {
    ToyPolicy p;
    p.num_contexts = task.num_contexts;
    p.num_actions = task.num_actions;
    p.temperature = temperature;
    p.logits.assign(kToyModules * static_cast<std::size_t>(task.num_contexts * task.num_actions), 0.0);
    return p;
  }

  std::size_t size() const noexcept { return logits.size(); }
  std::size_t offset(std::size_t m, int c) const {
    return (m * static_cast<std::size_t>(num_contexts) + static_cast<std::size_t>(c)) *
           static_cast<std::size_t>(num_actions);
  }

  std::vector<double> probs(std::size_t m, int c) const {
    const std::size_t o = offset(m, c);
    const auto a = static_cast<std::size_t>(num_actions);
    std::vector<double> p(a);
    if (temperature <= 0.0) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < a; ++k)
        if (logits[o + k] > logits[o + best]) best = k;
      p[best] = 1.0;
      return p;
    }
    double top = logits[o];
    for (std::size_t k = 1; k < a; ++k) top = std::max(top, logits[o + k]);
    double z = 0.0;
    for (std::size_t k = 0; k < a; ++k) z += p[k] = std::exp((logits[o + k] - top) / temperature);
    for (auto& v : p) v /= z;
    return p;
  }

  void check_shape(const ToyPolicy& other) const {
    require(other.num_contexts == num_contexts && other.num_actions == num_actions &&
                other.logits.size() == logits.size(),
            ErrorCode::DimensionMismatch, "toy policy: parameter shapes differ");
  }
};

inline double kl_divergence(std::span<const double> p, std::span<const double> q) {
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k)
    if (p[k] > 0.0) kl += p[k] * std::log(p[k] / q[k]);
  return kl;
}

// Mean KL(pi || ref) over every (module, context) table.
inline double mean_kl(const ToyPolicy& pi, const ToyPolicy& ref) {
  pi.check_shape(ref);
  double total = 0.0;
  for (std::size_t m = 0; m < kToyModules; ++m)
    for (int c = 0; c < pi.num_contexts; ++c) total += kl_divergence(pi.probs(m, c), ref.probs(m, c));
  return total / static_cast<double>(kToyModules * static_cast<std::size_t>(pi.num_contexts));
}

// ---------------------------------------------------------------------------
// Group rollouts

struct Rollout {
  std::array<int, kToyModules> contexts{};
  std::array<int, kToyModules> actions{};
  std::array<std::optional<double>, kToyModules> rewards;
  double outcome = 0.0;
};

struct GroupBatch {
  int input = 0;
  std::vector<Rollout> rollouts;
};

inline Rollout rollout_once(const ToyPolicy& policy, const ToyTaskSpec& task, int input, Rng& rng) {
  Rollout r;
  int c = input;
  for (std::size_t m = 0; m < kToyModules; ++m) {
    const auto p = policy.probs(m, c);
    const int a = static_cast<int>(rng.categorical(p));
    r.contexts[m] = c;
    r.actions[m] = a;
    r.rewards[m] = a == task.targets[m][static_cast<std::size_t>(c)] ? 1.0 : 0.0;
    if (m + 1 < kToyModules) c = task.next_context(m, c, a);
  }
  r.outcome = r.actions[kToyModules - 1] == task.outcome_target(input) ? 1.0 : 0.0;
  return r;
}

inline GroupBatch sample_group(const ToyPolicy& policy, const ToyTaskSpec& task, int input, int group_size,
                               std::uint64_t seed) {
  require(group_size >= 2, ErrorCode::InvalidArgument, "sample_group: G must be >= 2");
  require(input >= 0 && input < task.num_contexts, ErrorCode::InvalidArgument, "sample_group: input out of range");
  GroupBatch b;
  b.input = input;
  for (int g = 0; g < group_size; ++g) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(g)));
    b.rollouts.push_back(rollout_once(policy, task, input, rng));
  }
  return b;
}

// ---------------------------------------------------------------------------
// Advantages

struct AdvantageSet {
  // advantages[m][g]; an empty row marks a module without rewards.
  std::array<std::vector<double>, kToyModules> advantages;
  std::array<double, kToyModules> mean{};
  std::array<double, kToyModules> stddev{};
  double epsilon = 1e-8;
};

// (r - mean) / (population std + eps)
inline std::vector<double> group_normalize(std::span<const double> r, double eps, double* mean_out = nullptr,
                                           double* std_out = nullptr) {
  require(!r.empty(), ErrorCode::EmptyInput, "group_normalize: empty group");
  double mu = 0.0;
  for (double v : r) {
    require(std::isfinite(v), ErrorCode::InvalidArgument, "group_normalize: non-finite reward");
    mu += v;
  }
  mu /= static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r) var += (v - mu) * (v - mu);
  const double sigma = std::sqrt(var / static_cast<double>(r.size()));
  std::vector<double> a;
  a.reserve(r.size());
  const double denom = sigma + eps;
  for (double v : r) a.push_back(denom > 0.0 ? (v - mu) / denom : 0.0);
  if (mean_out) *mean_out = mu;
  if (std_out) *std_out = sigma;
  return a;
}

inline AdvantageSet module_advantage(const GroupBatch& batch, double eps = 1e-8) {
  AdvantageSet set;
  set.epsilon = eps;
  for (std::size_t m = 0; m < kToyModules; ++m) {
    std::vector<double> r;
    bool complete = true;
    for (const auto& ro : batch.rollouts) {
      if (!ro.rewards[m]) {
        complete = false;
        break;
      }
      r.push_back(*ro.rewards[m]);
    }
    if (!complete || r.empty()) continue;
    set.advantages[m] = group_normalize(r, eps, &set.mean[m], &set.stddev[m]);
  }
  return set;
}

// One outcome-based advantage per rollout, shared by every module.
inline AdvantageSet grpo_baseline_advantage(const GroupBatch& batch, double eps = 1e-8) {
  std::vector<double> r;
  for (const auto& ro : batch.rollouts) r.push_back(ro.outcome);
  AdvantageSet set;
  set.epsilon = eps;
  double mu = 0.0, sigma = 0.0;
  const auto a = group_normalize(r, eps, &mu, &sigma);
  for (std::size_t m = 0; m < kToyModules; ++m) {
    set.advantages[m] = a;
    set.mean[m] = mu;
    set.stddev[m] = sigma;
  }
  return set;
}

// ---------------------------------------------------------------------------
// Clipped, KL-regularized surrogate

enum class OptimMode { MaGrpo, Grpo };

inline const char* to_string(OptimMode m) { return m == OptimMode::MaGrpo ? "magrpo" : "grpo"; }

inline OptimMode optim_mode_from_string(std::string_view s) {
  if (s == "magrpo" || s == "ma-grpo") return OptimMode::MaGrpo;
  if (s == "grpo") return OptimMode::Grpo;
  fail(ErrorCode::Config, "unknown optimizer mode: " + std::string(s));
}

struct OptimConfig {
  int group_size = 8;
  double beta = 0.04;
  double eps_low = 0.1;
  double eps_high = 0.3;
  double adv_eps = 1e-8;
  double learning_rate = 0.5;
  int iterations = 1000;
  int inner_epochs = 1;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  OptimMode mode = OptimMode::MaGrpo;

  void validate() const {
    require(group_size >= 2, ErrorCode::Config, "optim: G must be >= 2");
    require(beta >= 0.0, ErrorCode::Config, "optim: beta must be >= 0");
    require(eps_low > 0.0 && eps_low < 1.0 && eps_high > 0.0 && eps_high < 1.0, ErrorCode::Config,
            "optim: clip bounds must lie in (0,1)");
    require(learning_rate >= 0.0 && iterations >= 1 && inner_epochs >= 1, ErrorCode::Config,
            "optim: invalid schedule");
  }
};

struct ModuleEventSample {
  int context = 0;
  int action = 0;
  double advantage = 0.0;
};

using ModuleEventSets = std::array<std::vector<ModuleEventSample>, kToyModules>;

inline void append_events(ModuleEventSets& sets, const GroupBatch& batch, const AdvantageSet& adv) {
  for (std::size_t m = 0; m < kToyModules; ++m) {
    if (adv.advantages[m].empty()) continue;
    for (std::size_t g = 0; g < batch.rollouts.size(); ++g)
      sets[m].push_back({batch.rollouts[g].contexts[m], batch.rollouts[g].actions[m], adv.advantages[m][g]});
  }
}

struct SurrogateResult {
  double objective = 0.0;
  std::array<double, kToyModules> module_objective{};
  std::vector<double> gradient;
};

// Objective and gradient contribution of module m alone, accumulated into grad.
inline double module_surrogate(std::size_t m, const std::vector<ModuleEventSample>& events, const ToyPolicy& pi,
                               const ToyPolicy& old, const ToyPolicy& ref, const OptimConfig& cfg,
                               std::vector<double>* grad) {
  if (events.empty()) return 0.0;
  require(cfg.beta >= 0.0, ErrorCode::InvalidArgument, "surrogate: beta must be >= 0");
  const double inv_n = 1.0 / static_cast<double>(events.size());
  const double inv_t = 1.0 / pi.temperature;
  const auto na = static_cast<std::size_t>(pi.num_actions);
  double obj = 0.0;
  for (const auto& e : events) {
    const auto p = pi.probs(m, e.context);
    const auto po = old.probs(m, e.context);
    const auto pr = ref.probs(m, e.context);
    const auto a = static_cast<std::size_t>(e.action);
    const double rho = p[a] / po[a];
    const double clipped = std::clamp(rho, 1.0 - cfg.eps_low, 1.0 + cfg.eps_high);
    const double unclipped_term = rho * e.advantage;
    const double clipped_term = clipped * e.advantage;
    const bool ratio_active = unclipped_term <= clipped_term || clipped == rho;
    const double kl = kl_divergence(p, pr);
    obj += inv_n * (std::min(unclipped_term, clipped_term) - cfg.beta * kl);
    if (!grad) continue;
    const std::size_t o = pi.offset(m, e.context);
    for (std::size_t k = 0; k < na; ++k) {
      double g = 0.0;
      if (ratio_active) g += e.advantage * rho * ((k == a ? 1.0 : 0.0) - p[k]) * inv_t;
      if (p[k] > 0.0) g -= cfg.beta * p[k] * (std::log(p[k] / pr[k]) - kl) * inv_t;
      (*grad)[o + k] += inv_n * g;
    }
  }
  return obj;
}

inline SurrogateResult surrogate(const ModuleEventSets& events, const ToyPolicy& pi, const ToyPolicy& old,
                                 const ToyPolicy& ref, const OptimConfig& cfg) {
  pi.check_shape(old);
  pi.check_shape(ref);
  SurrogateResult r;
  r.gradient.assign(pi.size(), 0.0);
  for (std::size_t m = 0; m < kToyModules; ++m) {
    r.module_objective[m] = module_surrogate(m, events[m], pi, old, ref, cfg, &r.gradient);
    r.objective += r.module_objective[m];
  }
  return r;
}

// Joint gradient versus the sum of gradients computed one module at a time
// into scratch buffers; returns the max absolute difference.
inline double decomposition_check(const ModuleEventSets& events, const ToyPolicy& pi, const ToyPolicy& old,
                                  const ToyPolicy& ref, const OptimConfig& cfg) {
  const auto joint = surrogate(events, pi, old, ref, cfg);
  std::vector<double> summed(pi.size(), 0.0);
  for (std::size_t m = 0; m < kToyModules; ++m) {
    std::vector<double> scratch(pi.size(), 0.0);
    module_surrogate(m, events[m], pi, old, ref, cfg, &scratch);
    for (std::size_t i = 0; i < summed.size(); ++i) summed[i] += scratch[i];
  }
  double diff = 0.0;
  for (std::size_t i = 0; i < summed.size(); ++i) diff = std::max(diff, std::abs(summed[i] - joint.gradient[i]));
  return diff;
}

// ---------------------------------------------------------------------------
// Training harness

// Exact expected outcome over a uniform input distribution.
inline double expected_return(const ToyPolicy& pi, const ToyTaskSpec& task) {
  double total = 0.0;
  for (int x = 0; x < task.num_contexts; ++x) {
    const int y = task.outcome_target(x);
    const auto p1 = pi.probs(0, x);
    for (int a1 = 0; a1 < task.num_actions; ++a1) {
      const int c2 = task.next_context(0, x, a1);
      const auto p2 = pi.probs(1, c2);
      for (int a2 = 0; a2 < task.num_actions; ++a2) {
        const int c3 = task.next_context(1, c2, a2);
        total += p1[static_cast<std::size_t>(a1)] * p2[static_cast<std::size_t>(a2)] *
                 pi.probs(2, c3)[static_cast<std::size_t>(y)];
      }
    }
  }
  return total / static_cast<double>(task.num_contexts);
}

struct CurveRecord {
  OptimMode mode = OptimMode::MaGrpo;
  std::uint64_t seed = 0;
  int iteration = 0;
  double train_return = 0.0;
  double val_return = 0.0;
  double grad_norm = 0.0;
  double kl_to_ref = 0.0;
};

struct TrainResult {
  std::vector<CurveRecord> curve;
  ToyPolicy policy;
};

inline TrainResult train_toy(const OptimConfig& cfg, const ToyTaskSpec& task) {
  cfg.validate();
  task.validate();
  const ToyPolicy ref = ToyPolicy::uniform(task, cfg.temperature);
  ToyPolicy pi = ref;
  TrainResult out;
  for (int it = 0; it < cfg.iterations; ++it) {
    const std::uint64_t it_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(it));
    ModuleEventSets events;
    double train_return = 0.0;
    std::size_t n_rollouts = 0;
    for (int x = 0; x < task.num_contexts; ++x) {
      const auto batch = sample_group(pi, task, x, cfg.group_size, derive_seed(it_seed, static_cast<std::uint64_t>(x)));
      for (const auto& r : batch.rollouts) {
        train_return += r.outcome;
        ++n_rollouts;
      }
      append_events(events, batch,
                    cfg.mode == OptimMode::MaGrpo ? module_advantage(batch, cfg.adv_eps)
                                                  : grpo_baseline_advantage(batch, cfg.adv_eps));
    }
    const ToyPolicy old = pi;
    double grad_norm = 0.0;
    for (int epoch = 0; epoch < cfg.inner_epochs; ++epoch) {
      const auto s = surrogate(events, pi, old, ref, cfg);
      require(std::isfinite(s.objective), ErrorCode::Divergence,
              "train_toy: objective became non-finite at iteration " + std::to_string(it));
      double sq = 0.0;
      for (double g : s.gradient) sq += g * g;
      if (epoch == 0) grad_norm = std::sqrt(sq);
      for (std::size_t i = 0; i < pi.size(); ++i) pi.logits[i] += cfg.learning_rate * s.gradient[i];
    }
    for (double v : pi.logits)
      require(std::isfinite(v), ErrorCode::Divergence, "train_toy: parameters became non-finite");
    out.curve.push_back({cfg.mode, cfg.seed, it, train_return / static_cast<double>(n_rollouts),
                         expected_return(pi, task), grad_norm, mean_kl(pi, ref)});
  }
  out.policy = std::move(pi);
  return out;
}

// First iteration whose validation return reaches `fraction` of the maximum
// achievable return (1.0); the iteration budget when never reached.
inline int iterations_to_fraction(const std::vector<CurveRecord>& curve, double fraction, double max_return = 1.0) {
  for (const auto& r : curve)
    if (r.val_return >= fraction * max_return) return r.iteration + 1;
  return static_cast<int>(curve.size());
}

inline double grad_norm_std_last_half(const std::vector<CurveRecord>& curve) {
  const std::size_t start = curve.size() / 2;
  std::vector<double> g;
  for (std::size_t i = start; i < curve.size(); ++i) g.push_back(curve[i].grad_norm);
  if (g.empty()) return 0.0;
  double mu = 0.0;
  for (double v : g) mu += v;
  mu /= static_cast<double>(g.size());
  double var = 0.0;
  for (double v : g) var += (v - mu) * (v - mu);
  return std::sqrt(var / static_cast<double>(g.size()));
}

inline std::string curve_csv(const std::vector<CurveRecord>& records) {
  std::ostringstream out;
  out << "mode,seed,iteration,train_return,val_return,grad_norm,kl_to_ref\n";
  for (const auto& r : records)
    out << to_string(r.mode) << ',' << r.seed << ',' << r.iteration << ',' << format_double(r.train_return) << ','
        << format_double(r.val_return) << ',' << format_double(r.grad_norm) << ',' << format_double(r.kl_to_ref)
        << '\n';
  return out.str();
}

}  // namespace lithoflow
