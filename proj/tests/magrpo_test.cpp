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


#include <cmath>

#include <gtest/gtest.h>

#include "lithoflow/magrpo.hpp"
#include "test_util.hpp"

namespace lithoflow {
namespace {

using testing::error_code_of;

ToyPolicy random_policy(const ToyTaskSpec& task, Rng& rng, double scale) {
  auto p = ToyPolicy::uniform(task);
  for (auto& v : p.logits) v = scale * rng.normal();
  return p;
}

TEST(GroupNormalize, TwoRewards) {
  const std::vector<double> r{1.0, 0.0};
  const auto a = group_normalize(r, 0.0);
  EXPECT_DOUBLE_EQ(a[0], 1.0);
  EXPECT_DOUBLE_EQ(a[1], -1.0);
  const std::vector<double> same{0.3, 0.3, 0.3};
  for (double v : group_normalize(same, 1e-8)) EXPECT_DOUBLE_EQ(v, 0.0);
  for (double v : group_normalize(same, 0.0)) EXPECT_DOUBLE_EQ(v, 0.0);
  const std::vector<double> bad{1.0, NAN};
  EXPECT_EQ(error_code_of([&] { group_normalize(bad, 0.0); }), ErrorCode::InvalidArgument);
}

TEST(GroupNormalize, ZeroMeanProperty) {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> r(2 + rng.below(10));
    for (auto& v : r) v = rng.uniform(-2, 2);
    const auto a = group_normalize(r, 0.0);
    double s = 0.0, ss = 0.0;
    for (double v : a) s += v, ss += v * v;
    EXPECT_NEAR(s, 0.0, 1e-9);
    EXPECT_NEAR(ss / double(a.size()), 1.0, 1e-9);
  }
}

TEST(Advantage, GrpoOutcome) {
  GroupBatch b;
  for (double o : {1.0, 1.0, 0.0, 0.0}) {
    Rollout r;
    r.outcome = o;
    b.rollouts.push_back(r);
  }
  const auto a = grpo_baseline_advantage(b, 0.0);
  for (std::size_t m = 0; m < kToyModules; ++m)
    EXPECT_EQ(a.advantages[m], (std::vector<double>{1.0, 1.0, -1.0, -1.0}));
  const auto ma = module_advantage(b, 0.0);
  for (const auto& row : ma.advantages) EXPECT_TRUE(row.empty());
}

TEST(Surrogate, RatioClippedAbove) {
  const auto task = canonical_toy_task(8, 4);
  const auto old = ToyPolicy::uniform(task);
  auto pi = old;
  pi.logits[pi.offset(0, 0)] = std::log(3.0);
  ASSERT_NEAR(pi.probs(0, 0)[0], 0.5, 1e-12);
  OptimConfig cfg;
  cfg.beta = 0.0;
  ModuleEventSets ev;
  ev[0] = {{0, 0, 1.0}};
  auto s = surrogate(ev, pi, old, old, cfg);
  EXPECT_NEAR(s.objective, 1.3, 1e-12);
  for (double g : s.gradient) EXPECT_EQ(g, 0.0);
  ev[0] = {{0, 0, -1.0}};
  s = surrogate(ev, pi, old, old, cfg);
  EXPECT_NEAR(s.objective, -2.0, 1e-12);
  EXPECT_LT(s.gradient[pi.offset(0, 0)], 0.0);
}

TEST(Surrogate, RatioClippedBelow) {
  const auto task = canonical_toy_task(8, 4);
  const auto old = ToyPolicy::uniform(task);
  auto pi = old;
  pi.logits[pi.offset(1, 2) + 3] = -5.0;
  const double rho = pi.probs(1, 2)[3] / 0.25;
  ASSERT_LT(rho, 0.9);
  OptimConfig cfg;
  cfg.beta = 0.0;
  ModuleEventSets ev;
  ev[1] = {{2, 3, -2.0}};
  EXPECT_NEAR(surrogate(ev, pi, old, old, cfg).objective, -2.0 * 0.9, 1e-12);
  ev[1] = {{2, 3, 2.0}};
  EXPECT_NEAR(surrogate(ev, pi, old, old, cfg).objective, 2.0 * rho, 1e-12);
}

TEST(Surrogate, IdenticalPoliciesGiveMeanAdvantage) {
  const auto task = canonical_toy_task(8, 4);
  Rng rng(5);
  const auto pi = random_policy(task, rng, 1.0);
  ModuleEventSets ev;
  double expect = 0.0;
  for (std::size_t m = 0; m < kToyModules; ++m) {
    double s = 0.0;
    for (int i = 0; i < 12; ++i) {
      ev[m].push_back({int(rng.below(8)), int(rng.below(4)), rng.normal()});
      s += ev[m].back().advantage;
    }
    expect += s / 12.0;
  }
  EXPECT_NEAR(surrogate(ev, pi, pi, pi, OptimConfig{}).objective, expect, 1e-12);
}

TEST(Surrogate, HandTwoAction) {
  const auto task = canonical_toy_task(2, 2);
  const auto ref = ToyPolicy::uniform(task);
  auto pi = ref;
  pi.logits[pi.offset(2, 1)] = 0.5;
  OptimConfig cfg;
  ModuleEventSets ev;
  ev[2] = {{1, 0, 0.8}};
  const double p0 = 1.0 / (1.0 + std::exp(-0.5)), p1 = 1.0 - p0;
  const double rho = p0 / 0.5;
  const double kl = p0 * std::log(p0 / 0.5) + p1 * std::log(p1 / 0.5);
  const auto s = surrogate(ev, pi, ref, ref, cfg);
  EXPECT_NEAR(s.objective, rho * 0.8 - 0.04 * kl, 1e-12);
  EXPECT_NEAR(s.module_objective[2], s.objective, 1e-15);
  // d/dz0 of rho*A - beta*KL with p0 = sigmoid(z0 - z1)
  const double dp = p0 * p1;
  const double grad0 = 0.8 * dp / 0.5 - 0.04 * dp * std::log(p0 / p1);
  EXPECT_NEAR(s.gradient[pi.offset(2, 1)], grad0, 1e-12);
  EXPECT_NEAR(s.gradient[pi.offset(2, 1) + 1], -grad0, 1e-12);
}

TEST(Surrogate, FiniteDifferenceGradient) {
  const auto task = canonical_toy_task(4, 3);
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto ref = random_policy(task, rng, 0.5);
    const auto old = random_policy(task, rng, 0.5);
    auto pi = old;
    for (auto& v : pi.logits) v += 0.05 * rng.normal();
    ModuleEventSets ev;
    for (std::size_t m = 0; m < kToyModules; ++m)
      for (int i = 0; i < 10; ++i) ev[m].push_back({int(rng.below(4)), int(rng.below(3)), rng.normal()});
    OptimConfig cfg;
    cfg.beta = 0.3;
    cfg.eps_low = 0.5;
    cfg.eps_high = 0.5;
    const auto s = surrogate(ev, pi, old, ref, cfg);
    const double h = 1e-6;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      auto up = pi, dn = pi;
      up.logits[i] += h;
      dn.logits[i] -= h;
      const double fd = (surrogate(ev, up, old, ref, cfg).objective - surrogate(ev, dn, old, ref, cfg).objective) / (2 * h);
      EXPECT_NEAR(s.gradient[i], fd, 1e-6) << i;
    }
  }
}

TEST(Surrogate, CreditIsolation) {
  const auto task = canonical_toy_task(8, 4);
  Rng rng(21);
  const auto pi = random_policy(task, rng, 0.7);
  auto batch = sample_group(pi, task, 3, 8, 99);
  const auto a = module_advantage(batch, 1e-8);
  for (auto& r : batch.rollouts) r.rewards[1] = 1.0 - *r.rewards[1];
  const auto b = module_advantage(batch, 1e-8);
  EXPECT_EQ(a.advantages[0], b.advantages[0]);
  EXPECT_EQ(a.advantages[2], b.advantages[2]);

  ModuleEventSets ea, eb;
  append_events(ea, batch, a);
  append_events(eb, batch, b);
  const auto ga = surrogate(ea, pi, pi, pi, OptimConfig{}).gradient;
  const auto gb = surrogate(eb, pi, pi, pi, OptimConfig{}).gradient;
  for (int c = 0; c < 8; ++c)
    for (int k = 0; k < 4; ++k) {
      EXPECT_EQ(ga[pi.offset(0, c) + k], gb[pi.offset(0, c) + k]);
      EXPECT_EQ(ga[pi.offset(2, c) + k], gb[pi.offset(2, c) + k]);
    }
  EXPECT_LT(decomposition_check(ea, pi, pi, pi, OptimConfig{}), 1e-12);
}

TEST(Surrogate, ShapeMismatch) {
  const auto a = ToyPolicy::uniform(canonical_toy_task(8, 4));
  const auto b = ToyPolicy::uniform(canonical_toy_task(4, 4));
  EXPECT_EQ(error_code_of([&] { surrogate({}, a, b, a, OptimConfig{}); }), ErrorCode::DimensionMismatch);
}

TEST(Rollouts, GreedyIdentical) {
  const auto task = canonical_toy_task(8, 4);
  Rng rng(1);
  auto pi = random_policy(task, rng, 1.0);
  pi.temperature = 0.0;
  const auto b = sample_group(pi, task, 2, 8, 5);
  for (const auto& r : b.rollouts) {
    EXPECT_EQ(r.actions, b.rollouts[0].actions);
    EXPECT_EQ(r.contexts, b.rollouts[0].contexts);
  }
  EXPECT_EQ(error_code_of([&] { sample_group(pi, task, 2, 1, 5); }), ErrorCode::InvalidArgument);
}

TEST(Rollouts, ExpectedReturnMatchesSampling) {
  const auto task = canonical_toy_task(8, 4);
  Rng rng(6);
  const auto pi = random_policy(task, rng, 1.0);
  double hits = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) hits += rollout_once(pi, task, int(rng.below(8)), rng).outcome;
  EXPECT_NEAR(hits / n, expected_return(pi, task), 0.015);
  EXPECT_NEAR(expected_return(ToyPolicy::uniform(task), task), 0.25, 1e-12);
}

TEST(Train, ZeroLearningRateIsFlat) {
  OptimConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.iterations = 20;
  const auto r = train_toy(cfg, canonical_toy_task());
  for (const auto& c : r.curve) {
    EXPECT_NEAR(c.val_return, 0.25, 1e-12);
    EXPECT_NEAR(c.kl_to_ref, 0.0, 1e-15);
  }
}

TEST(Train, Reproducible) {
  OptimConfig cfg;
  cfg.iterations = 30;
  cfg.seed = 4;
  const auto task = canonical_toy_task();
  EXPECT_EQ(curve_csv(train_toy(cfg, task).curve), curve_csv(train_toy(cfg, task).curve));
  cfg.mode = OptimMode::Grpo;
  EXPECT_EQ(curve_csv(train_toy(cfg, task).curve), curve_csv(train_toy(cfg, task).curve));
}

TEST(Train, KlShrinksWithBeta) {
  const auto task = canonical_toy_task();
  std::vector<double> kls;
  for (double beta : {0.0, 0.1, 1.0}) {
    OptimConfig cfg;
    cfg.beta = beta;
    cfg.iterations = 200;
    cfg.learning_rate = 0.2;
    kls.push_back(train_toy(cfg, task).curve.back().kl_to_ref);
  }
  EXPECT_GT(kls[0], kls[1]);
  EXPECT_GT(kls[1], kls[2]);
}

TEST(Train, LargeBetaStaysNearReference) {
  OptimConfig cfg;
  cfg.beta = 10.0;
  cfg.iterations = 200;
  cfg.learning_rate = 0.05;
  const auto r = train_toy(cfg, canonical_toy_task());
  EXPECT_LT(r.curve.back().kl_to_ref, 0.01);
}

TEST(Train, ConfigValidation) {
  OptimConfig cfg;
  cfg.group_size = 1;
  EXPECT_EQ(error_code_of([&] { train_toy(cfg, canonical_toy_task()); }), ErrorCode::Config);
  EXPECT_EQ(error_code_of([] { optim_mode_from_string("ppo"); }), ErrorCode::Config);
  EXPECT_EQ(optim_mode_from_string("grpo"), OptimMode::Grpo);
}

TEST(Curve, Helpers) {
  std::vector<CurveRecord> c;
  for (int i = 0; i < 6; ++i) c.push_back({OptimMode::MaGrpo, 0, i, 0.0, 0.2 * i, double(i % 2), 0.0});
  EXPECT_EQ(iterations_to_fraction(c, 0.5), 4);
  EXPECT_EQ(iterations_to_fraction(c, 2.0), 6);
  EXPECT_NEAR(grad_norm_std_last_half(c), std::sqrt(2.0 / 9.0), 1e-12);
  const auto csv = curve_csv(c);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "mode,seed,iteration,train_return,val_return,grad_norm,kl_to_ref");
}

}  // namespace
}  // namespace lithoflow
