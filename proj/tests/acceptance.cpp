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


// Acceptance checks; prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lithoflow/cli.hpp"
#include "lithoflow/lithoflow.hpp"

namespace lf = lithoflow;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("lithoflow_accept_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string fmt(double v, int digits = 4) { return lf::format_fixed(v, digits); }

// ---------------------------------------------------------------------------

Outcome criterion1() {
  const lf::PenaltyMap eta = {{1, 0.5}, {2, 1.0}, {3, 1.0}};
  int cases = 0, mismatches = 0;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b)
      for (int c = 0; c < 3; ++c)
        for (int chosen = 0; chosen < 3; ++chosen)
          for (int truth = 0; truth < 3; ++truth) {
            ++cases;
            std::set<int> distinct{a, b, c};
            const int m = distinct.size() == 1 ? 3 : distinct.size() == 2 ? 2 : 1;
            double expect;
            if (!distinct.count(truth)) expect = 0.0;
            else if (chosen == truth) expect = 1.0;
            else expect = m == 1 ? -0.5 : -1.0;
            const std::vector<lf::ClassId> cands{a, b, c};
            if (lf::r_refl(cands, chosen, truth, eta) != expect) ++mismatches;
          }
  const std::vector<lf::ClassId> maj{0, 0, 1}, split{0, 1, 2};
  const double anchor2 = lf::r_refl(maj, 1, 0), anchor1 = lf::r_refl(split, 1, 0);
  const bool ok = cases == 243 && mismatches == 0 && anchor2 == -1.0 && anchor1 == -0.5;
  return {ok, std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches; anchors " +
                  fmt(anchor2, 1) + ", " + fmt(anchor1, 1)};
}

Outcome criterion2() {
  long long triples = 0, bad = 0, a2 = 0;
  for (int c = 1; c <= 6; ++c)
    for (int x = 0; x < c; ++x)
      for (int y = 0; y < c; ++y)
        for (int z = 0; z < c; ++z) {
          ++triples;
          const auto rep = lf::scan_conflict(lf::Labels{x}, lf::Labels{y}, lf::Labels{z});
          const auto& r = rep.records[0];
          const int expect_m = (x == y && y == z) ? 3 : (x == y || x == z || y == z) ? 2 : 1;
          if (r.agreement_count == 2) ++a2;
          const bool ok = r.level == expect_m && ((r.agreement_count == 3) == (r.level == 3)) &&
                          ((r.agreement_count == 1) == (r.level == 2)) &&
                          ((r.agreement_count == 0) == (r.level == 1));
          if (!ok) ++bad;
        }
  return {bad == 0 && a2 == 0, std::to_string(triples) + " triples over |C| <= 6, " + std::to_string(bad) +
                                   " violations, A=2 reached " + std::to_string(a2) + " times"};
}

Outcome criterion3() {
  const std::vector<std::vector<double>> p = {
      {0.70, 0.20, 0.05, 0.05}, {0.10, 0.60, 0.25, 0.05}, {0.05, 0.15, 0.50, 0.30}, {0.20, 0.05, 0.15, 0.60}};
  lf::Rng rng(3);
  std::vector<lf::Labels> seqs;
  long long transitions = 0;
  for (int w = 0; w < 4; ++w) {
    lf::Labels s{static_cast<int>(rng.below(4))};
    for (int t = 1; t < 4000; ++t) s.push_back(static_cast<int>(rng.categorical(p[std::size_t(s.back())])));
    transitions += static_cast<long long>(s.size()) - 1;
    seqs.push_back(std::move(s));
  }
  // Class 4 never occurs, so its row rests on smoothing alone.
  const auto model = lf::fit_transition(seqs, 5, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    double l1 = 0.0;
    for (int j = 0; j < 4; ++j) l1 += std::abs(model.prob(i, j) - p[std::size_t(i)][std::size_t(j)]);
    l1 += model.prob(i, 4);
    worst = std::max(worst, l1);
  }
  bool uniform = true;
  for (int j = 0; j < 5; ++j) uniform = uniform && model.prob(4, j) == 0.2;
  return {transitions >= 10000 && worst < 0.05 && uniform,
          std::to_string(transitions) + " transitions, worst row L1 " + fmt(worst) +
              (uniform ? ", zero-count row exactly uniform" : ", zero-count row NOT uniform")};
}

Outcome criterion4() {
  lf::Rng rng(4);
  double worst_mean = 0.0, min_std = 2.0, max_std = 0.0;
  int groups = 0;
  while (groups < 1000) {
    lf::GroupBatch batch;
    for (int g = 0; g < 8; ++g) {
      lf::Rollout r;
      for (auto& v : r.rewards) v = groups % 2 ? rng.uniform() : double(rng.below(2));
      batch.rollouts.push_back(r);
    }
    const auto adv = lf::module_advantage(batch, 1e-8);
    bool degenerate = false;
    for (std::size_t m = 0; m < lf::kToyModules; ++m) degenerate = degenerate || adv.stddev[m] == 0.0;
    if (degenerate) continue;
    ++groups;
    for (const auto& a : adv.advantages) {
      double mu = 0.0, ss = 0.0;
      for (double v : a) mu += v;
      mu /= double(a.size());
      for (double v : a) ss += (v - mu) * (v - mu);
      const double sd = std::sqrt(ss / double(a.size()));
      worst_mean = std::max(worst_mean, std::abs(mu));
      min_std = std::min(min_std, sd);
      max_std = std::max(max_std, sd);
    }
  }
  const bool ok = worst_mean < 1e-9 && min_std >= 0.999 && max_std <= 1.0;
  char buf[160];
  std::snprintf(buf, sizeof buf, "1000 groups x 3 modules, max |mean| %.2e, std in [%.9f, %.9f]", worst_mean,
                min_std, max_std);
  return {ok, buf};
}

Outcome criterion5() {
  const auto task = lf::canonical_toy_task(4, 3);
  lf::Rng rng(5);
  auto random_policy = [&](double scale) {
    auto p = lf::ToyPolicy::uniform(task);
    for (auto& v : p.logits) v = scale * rng.normal();
    return p;
  };
  auto random_events = [&] {
    lf::ModuleEventSets ev;
    for (std::size_t m = 0; m < lf::kToyModules; ++m)
      for (int i = 0, n = 4 + int(rng.below(12)); i < n; ++i)
        ev[m].push_back({int(rng.below(4)), int(rng.below(3)), rng.normal()});
    return ev;
  };
  double worst_rel = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto ref = random_policy(0.5), old = random_policy(0.5);
    auto pi = old;
    for (auto& v : pi.logits) v += 0.05 * rng.normal();
    const auto ev = random_events();
    lf::OptimConfig cfg;
    cfg.beta = rng.uniform(0.0, 0.5);
    cfg.eps_low = cfg.eps_high = 0.5;  // keep every ratio away from the clip kinks
    const auto g = lf::surrogate(ev, pi, old, ref, cfg).gradient;
    double num = 0.0, den = 0.0;
    const double h = 1e-6;
    for (std::size_t i = 0; i < pi.size(); ++i) {
      auto up = pi, dn = pi;
      up.logits[i] += h;
      dn.logits[i] -= h;
      const double fd =
          (lf::surrogate(ev, up, old, ref, cfg).objective - lf::surrogate(ev, dn, old, ref, cfg).objective) / (2 * h);
      num += (g[i] - fd) * (g[i] - fd);
      den += fd * fd;
    }
    worst_rel = std::max(worst_rel, std::sqrt(num) / std::max(std::sqrt(den), 1e-12));
  }
  double worst_dec = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto ref = random_policy(1.0), old = random_policy(1.0), pi = random_policy(1.0);
    lf::OptimConfig cfg;
    cfg.beta = rng.uniform(0.0, 1.0);
    worst_dec = std::max(worst_dec, lf::decomposition_check(random_events(), pi, old, ref, cfg));
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "max relative FD error %.2e over 50 instances, max decomposition diff %.2e over 100",
                worst_rel, worst_dec);
  return {worst_rel < 1e-4 && worst_dec < 1e-9, buf};
}

Outcome criterion6() {
  const auto task = lf::canonical_toy_task();
  std::vector<int> ma_iters, grpo_iters;
  std::vector<double> ma_std, grpo_std;
  int smoother = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    lf::OptimConfig cfg;
    cfg.seed = seed;
    cfg.mode = lf::OptimMode::MaGrpo;
    const auto a = lf::train_toy(cfg, task);
    cfg.mode = lf::OptimMode::Grpo;
    const auto b = lf::train_toy(cfg, task);
    ma_iters.push_back(lf::iterations_to_fraction(a.curve, 0.9));
    grpo_iters.push_back(lf::iterations_to_fraction(b.curve, 0.9));
    ma_std.push_back(lf::grad_norm_std_last_half(a.curve));
    grpo_std.push_back(lf::grad_norm_std_last_half(b.curve));
    smoother += ma_std.back() < grpo_std.back();
  }
  auto median = [](auto v) {
    std::sort(v.begin(), v.end());
    return 0.5 * (double(v[v.size() / 2 - 1]) + double(v[v.size() / 2]));
  };
  const double mi = median(ma_iters), gi = median(grpo_iters);
  const double ms = median(ma_std), gs = median(grpo_std);
  const bool ok = mi <= 0.5 * gi && ms < gs;
  return {ok, "median iterations to 90%: MA-GRPO " + fmt(mi, 1) + " vs GRPO " + fmt(gi, 1) + " (ratio " +
                  fmt(mi / gi, 3) + "); median last-half grad-norm std " + fmt(ms, 5) + " vs " + fmt(gs, 5) +
                  " (lower in " + std::to_string(smoother) + "/10 seeds)"};
}

// Twenty synthetic wells with 5 folds by well; every fold's predictor, index
// and transition model see only the other folds.
struct Benchmark {
  std::vector<lf::WellLog> wells;
  lf::FoldAssignment folds;
};

const Benchmark& benchmark() {
  static const Benchmark b = [] {
    Benchmark out;
    const auto spec = lf::make_synth_spec(5, 4, 0.97, 1.5, 0.5, 7);
    auto raw = lf::synth_wells(spec, 20, 2000);
    const auto stats = lf::compute_stats(raw);
    std::vector<std::string> ids;
    for (const auto& w : raw) {
      out.wells.push_back(lf::normalize(w, stats));
      ids.push_back(w.well_id);
    }
    out.folds = lf::kfold_split(ids, 5, 1);
    return out;
  }();
  return b;
}

Outcome criterion7() {
  const auto& b = benchmark();
  lf::Labels wf_all, raw_all, truth_all;
  std::vector<lf::Labels> wf_seqs, raw_seqs;
  for (int f = 0; f < b.folds.k; ++f) {
    std::vector<lf::WellLog> train, test;
    for (const auto& w : b.wells) (b.folds.fold(w.well_id) == f ? test : train).push_back(w);
    const auto windows = lf::window_all(train, 16, 4);
    const auto predictor = lf::train_predictor(lf::PredictorSpec{}, windows, 5);
    const auto index = lf::build_index(windows);
    std::vector<lf::Labels> seqs;
    for (const auto& w : train) seqs.push_back(*w.labels);
    const auto transition = lf::fit_transition(seqs, 5);
    const lf::StubReasoner stub(lf::StubConfig{});
    lf::WorkflowContext ctx;
    ctx.num_classes = 5;
    ctx.index = &index;
    ctx.predictor = [&](const lf::Window& w) { return predictor.predict(w); };
    ctx.reasoner = &stub;
    ctx.transition = &transition;
    for (const auto& w : test) {
      const auto run = lf::run_well(w, ctx, 16);
      lf::Labels raw;
      for (std::size_t s = 0; s < w.length(); s += 16) {
        const auto l = predictor.predict_labels(lf::extract_window(w, s, 16));
        raw.insert(raw.end(), l.begin(), l.end());
      }
      wf_all.insert(wf_all.end(), run.predictions.begin(), run.predictions.end());
      raw_all.insert(raw_all.end(), raw.begin(), raw.end());
      truth_all.insert(truth_all.end(), w.labels->begin(), w.labels->end());
      wf_seqs.push_back(run.predictions);
      raw_seqs.push_back(raw);
    }
  }
  const double f1_wf = lf::weighted_prf(wf_all, truth_all).f1;
  const double f1_raw = lf::weighted_prf(raw_all, truth_all).f1;
  const double fr_wf = lf::fragmentation_rate(wf_seqs, 0.5, 1.5);
  const double fr_raw = lf::fragmentation_rate(raw_seqs, 0.5, 1.5);
  const bool ok = fr_wf <= 0.9 * fr_raw && f1_wf >= f1_raw - 0.01;
  return {ok, "workflow F1 " + fmt(f1_wf) + " vs predictor " + fmt(f1_raw) + "; fragmentation " + fmt(fr_wf) +
                  " vs " + fmt(fr_raw) + " (ratio " + fmt(fr_wf / fr_raw, 3) + ")"};
}

Outcome criterion8() {
  const auto& b = benchmark();
  const auto windows = lf::window_all(b.wells, 16, 4);
  const auto oof = lf::generate_oof(windows, lf::PredictorSpec{}, b.folds, 5);
  const auto violations = lf::provenance_violations(oof);

  lf::PredictorSpec knn;
  knn.kind = lf::PredictorKind::Knn;
  knn.k = 1;
  auto accuracy = [&](const lf::Predictor& p, const std::vector<const lf::Window*>& ws) {
    std::size_t hit = 0, total = 0;
    for (const auto* w : ws) {
      const auto y = p.predict_labels(*w);
      for (std::size_t u = 0; u < y.size(); ++u, ++total) hit += y[u] == (*w->labels)[u];
    }
    return double(hit) / double(total);
  };
  // In-fold: the model has seen every window it labels.
  std::vector<const lf::Window*> all;
  for (const auto& w : windows) all.push_back(&w);
  const auto master = lf::train_predictor(knn, windows, 5);
  const double in_fold = accuracy(master, all);
  const auto knn_oof = lf::generate_oof(windows, knn, b.folds, 5);
  std::size_t hit = 0, total = 0;
  std::map<std::tuple<std::string, int, std::size_t>, const lf::Window*> by_key;
  for (const auto& w : windows) by_key[{w.well_id, w.segment, w.start_index}] = &w;
  for (const auto& r : knn_oof.records) {
    const auto* w = by_key.at({r.well_id, r.segment, r.start_index});
    for (std::size_t u = 0; u < r.probs.size(); ++u, ++total) hit += r.probs[u].argmax() == (*w->labels)[u];
  }
  const double oof_acc = double(hit) / double(total);
  const bool ok = violations == 0 && lf::provenance_violations(knn_oof) == 0 && in_fold == 1.0 && oof_acc < in_fold;
  return {ok, std::to_string(oof.records.size()) + " OOF windows, " + std::to_string(violations) +
                  " provenance violations; knn(k=1) in-fold accuracy " + fmt(in_fold) + ", OOF accuracy " +
                  fmt(oof_acc)};
}

Outcome criterion9() {
  lf::Rng rng(9);
  int triples = 0, bad = 0;
  const auto spec = lf::make_synth_spec(3, 2, 0.9, 1.0, 0.5, 9);
  for (int t = 0; t < 300; ++t) {
    const std::size_t len = 2 + rng.below(40), stride = 1 + rng.below(20), n = len + rng.below(300);
    const auto well = lf::synth_wells(spec, 1, n)[0];
    const auto set = lf::window(well, int(len), int(stride));
    ++triples;
    if (set.windows.size() != (n - len) / stride + 1) ++bad;
  }
  auto wells = lf::synth_wells(lf::make_synth_spec(4, 3, 0.95, 2.0, 0.5, 10), 6, 500);
  std::vector<lf::WellLog> train(wells.begin(), wells.begin() + 4);
  const auto stats = lf::compute_stats(train);
  double worst_mean = 0.0, worst_std = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0, ss = 0.0;
    std::size_t n = 0;
    for (const auto& w : train) {
      const auto z = lf::normalize(w, stats);
      for (std::size_t r = 0; r < z.length(); ++r, ++n) s += z.values(r, c);
    }
    const double mu = s / double(n);
    for (const auto& w : train) {
      const auto z = lf::normalize(w, stats);
      for (std::size_t r = 0; r < z.length(); ++r) ss += (z.values(r, c) - mu) * (z.values(r, c) - mu);
    }
    worst_mean = std::max(worst_mean, std::abs(mu));
    worst_std = std::max(worst_std, std::abs(std::sqrt(ss / double(n)) - 1.0));
  }
  const auto cfg = lf::load_config(fs::path(LITHOFLOW_SOURCE_DIR) / "config" / "default.ini");
  const bool defaults = cfg.preprocess.window_len == 16 && cfg.preprocess.stride == 4;
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "%d random (T,L,S) triples, %d count mismatches; z-score max |mean| %.1e, max |std-1| %.1e; "
                "defaults L=%d S=%d",
                triples, bad, worst_mean, worst_std, cfg.preprocess.window_len, cfg.preprocess.stride);
  return {bad == 0 && worst_mean < 1e-9 && worst_std < 1e-9 && defaults, buf};
}

Outcome criterion10() {
  lf::Rng rng(10);
  double worst = 0.0;
  int points = 0;
  const int draws = 20000;
  for (int n = 1; n <= 20; ++n)
    for (int c = 0; c <= n; c += std::max(1, n / 5))
      for (int k = 1; k <= n; k += std::max(1, n / 4)) {
        std::vector<int> urn(std::size_t(n), 0);
        std::fill(urn.begin(), urn.begin() + c, 1);
        int any = 0;
        for (int d = 0; d < draws; ++d) {
          // Partial Fisher-Yates draw of k items without replacement.
          for (int i = 0; i < k; ++i) std::swap(urn[std::size_t(i)], urn[std::size_t(i) + rng.below(std::uint64_t(n - i))]);
          any += std::any_of(urn.begin(), urn.begin() + k, [](int v) { return v == 1; });
        }
        worst = std::max(worst, std::abs(double(any) / draws - lf::pass_at_k(n, c, k)));
        ++points;
      }

  // Rising window whose truth class the narrative mode favors by +0.3.
  std::vector<double> rising;
  for (int j = 0; j < 8; ++j) rising.push_back(0.5 * j);
  lf::Window w;
  w.well_id = "H";
  w.values = lf::Matrix(8, 1);
  for (std::size_t r = 0; r < 8; ++r) {
    w.values(r, 0) = rising[r];
    w.depths.push_back(100.0 + 0.5 * double(r));
  }
  const lf::Labels truth(8, 1);
  lf::ReasonerRequest base;
  base.num_classes = 3;
  base.p_nn = std::vector<lf::ClassDistribution>(8, lf::ClassDistribution{{0.35, 0.30, 0.35}});
  int helpful = 0;
  double lift_seen = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    lf::StubConfig sc;
    sc.temperature = 1.0;
    sc.seed = seed;
    sc.trend_class = {{lf::Direction::Rising, 1}};
    sc.trend_lift = 0.3;
    const lf::StubReasoner stub(sc);
    if (seed == 0) {
      auto with = base;
      with.length = 8;
      with.window_table = lf::render_window_table(w);
      auto without = with;
      with.narrative = lf::narrate(w, 0.05);
      lift_seen = (*stub.reason(with, 1).distributions)[0].probs[1] - (*stub.reason(without, 1).distributions)[0].probs[1];
    }
    lf::TrendTrialSpec ts;
    ts.seed = seed;
    if (lf::trend_helpful(w, truth, stub, ts, base).delta > 0.0) ++helpful;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "pass@k vs Monte Carlo max |diff| %.4f over %d (n,c,k) points; truth lift %.3f, delta > 0 in %d/100 seeds",
                worst, points, lift_seen, helpful);
  return {worst < 0.02 && std::abs(lift_seen - 0.3) < 1e-12 && helpful >= 95, buf};
}

Outcome criterion11() {
  const int table[3][3] = {{2, 1, 0}, {0, 2, 0}, {1, 0, 4}};  // rows truth, columns prediction
  lf::Labels pred, truth;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int n = 0; n < table[i][j]; ++n) {
        truth.push_back(i);
        pred.push_back(j);
      }
  // Hand: P = (2/3, 2/3, 1), R = (2/3, 1, 4/5), F1 = (2/3, 4/5, 8/9), support (3, 2, 5).
  const double hand = (3.0 * (2.0 / 3.0) + 2.0 * 0.8 + 5.0 * (8.0 / 9.0)) / 10.0;
  const double got = lf::weighted_prf(pred, truth).f1;
  const bool frag = lf::fragmentation_rate(lf::Labels{0, 1, 0}, 0.5, 1.5) == 1.0 &&
                    lf::fragmentation_rate(lf::Labels{0, 0, 0, 1, 1, 1}, 0.5, 1.5) == 0.0 &&
                    lf::fragmentation_rate(lf::Labels(10, 2), 0.5, 1.5) == 0.0 &&
                    lf::fragmentation_rate(lf::Labels{0, 0, 0, 1, 0, 0, 0}, 0.5, 1.5) == 1.0 / 3.0;
  return {std::abs(got - hand) < 0.001 && frag,
          "weighted F1 " + fmt(got, 5) + " vs hand " + fmt(hand, 5) + "; fragmentation hand cases " +
              (frag ? "exact" : "WRONG")};
}

Outcome criterion12() {
  auto pipeline = [](const fs::path& dir, std::string& err) {
    for (const char* cmd : {"synth", "stack", "index", "run", "evaluate"}) {
      std::ostringstream out, e;
      const int code = lf::cli_dispatch({cmd, "--out-dir", dir.string(), "--seed", "42"}, out, e);
      if (code != lf::kExitOk) {
        err = std::string(cmd) + ": " + e.str();
        return false;
      }
    }
    return true;
  };
  TempDir a, b;
  std::string err;
  if (!pipeline(a.path(), err) || !pipeline(b.path(), err)) return {false, "pipeline failed: " + err};
  std::string detail;
  bool same = true;
  for (const char* f : {"predictions.csv", "metrics.csv", "trajectories.jsonl", "oof.csv"}) {
    const auto x = lf::read_file(a.path() / f), y = lf::read_file(b.path() / f);
    same = same && x == y;
    detail += std::string(detail.empty() ? "" : ", ") + f + (x == y ? " identical" : " DIFFER") + " (" +
              lf::digest(x) + ")";
  }
  return {same, detail};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    double budget_s;
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria = {
      {1, 1, criterion1},   {2, 1, criterion2},    {3, 5, criterion3},   {4, 5, criterion4},
      {5, 30, criterion5},  {6, 300, criterion6},  {7, 180, criterion7}, {8, 60, criterion8},
      {9, 5, criterion9},   {10, 60, criterion10}, {11, 1, criterion11}, {12, 300, criterion12},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failures += !pass;
    std::printf("%s criterion %d: %s [%.2f s of %.0f s budget%s]\n", pass ? "PASS" : "FAIL", c.id, o.detail.c_str(),
                secs, c.budget_s, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", int(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
