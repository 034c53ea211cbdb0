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


#include <gtest/gtest.h>

#include "lithoflow/analysis.hpp"
#include "lithoflow/welldata.hpp"
#include "test_util.hpp"

namespace lithoflow {
namespace {

using testing::error_code_of;

TEST(ScanConflict, Consensus) {
  const auto r = scan_conflict(Labels{0}, Labels{0}, Labels{0});
  EXPECT_EQ(r.records[0].agreement_count, 3);
  EXPECT_EQ(r.records[0].level, 3);
  EXPECT_FALSE(r.records[0].conflict);
}

TEST(ScanConflict, Majority) {
  const auto r = scan_conflict(Labels{0}, Labels{0}, Labels{1});
  EXPECT_EQ(r.records[0].agreement_count, 1);
  EXPECT_EQ(r.records[0].level, 2);
  EXPECT_TRUE(r.records[0].conflict);
  EXPECT_EQ(r.records[0].pairs[0], true);
  EXPECT_EQ(r.records[0].pairs[1], false);
  EXPECT_EQ(r.records[0].pairs[2], false);
}

TEST(ScanConflict, FullSplit) {
  const auto r = scan_conflict(Labels{0}, Labels{1}, Labels{2});
  EXPECT_EQ(r.records[0].agreement_count, 0);
  EXPECT_EQ(r.records[0].level, 1);
  EXPECT_TRUE(r.records[0].conflict);
}

TEST(ScanConflict, TwoSourcesAbstain) {
  const auto r = scan_conflict(Labels{0, 1}, std::nullopt, Labels{0, 2});
  EXPECT_EQ(r.sources, 2);
  EXPECT_EQ(r.records[0].level, 3);
  EXPECT_EQ(r.records[1].level, 1);
  EXPECT_EQ(r.records[1].agreement_count, 0);
  EXPECT_FALSE(r.records[0].pairs[0].has_value());
  EXPECT_EQ(r.records[0].pairs[1], true);
  EXPECT_NE(r.summary.find("Conflict at samples 1"), std::string::npos);
}

TEST(ScanConflict, Errors) {
  EXPECT_EQ(error_code_of([] { scan_conflict(Labels{0}, Labels{0, 1}, Labels{0}); }), ErrorCode::DimensionMismatch);
  EXPECT_EQ(error_code_of([] { scan_conflict(Labels{0}, std::nullopt, std::nullopt); }), ErrorCode::InvalidArgument);
}

TEST(ScanConflict, CorrespondenceExhaustive) {
  for (int c = 1; c <= 6; ++c)
    for (ClassId a = 0; a < c; ++a)
      for (ClassId b = 0; b < c; ++b)
        for (ClassId d = 0; d < c; ++d) {
          const auto r = agreement_of(a, b, d);
          EXPECT_NE(r.agreement_count, 2);
          EXPECT_EQ(r.agreement_count == 3, r.level == 3);
          EXPECT_EQ(r.agreement_count == 1, r.level == 2);
          EXPECT_EQ(r.agreement_count == 0, r.level == 1);
        }
}

TEST(FitTransition, HandCount) {
  const auto m = fit_transition({{0, 0, 1}}, 2, 1.0);
  EXPECT_EQ(m.count(0, 0), 1);
  EXPECT_EQ(m.count(0, 1), 1);
  EXPECT_DOUBLE_EQ(m.prob(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(m.prob(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m.prob(1, 0), 0.5);
}

TEST(FitTransition, ZeroCountRowUniform) {
  const auto m = fit_transition({{0, 1, 2, 2, 1, 0}}, 4, 1.0);
  for (ClassId b = 0; b < 4; ++b) EXPECT_EQ(m.prob(3, b), 0.25);
}

TEST(FitTransition, RowsStochasticAndNoCrossSequence) {
  const auto m = fit_transition({{0, 0}, {1, 1}, {2}}, 3, 0.5);
  EXPECT_EQ(m.count(0, 1), 0);
  for (std::size_t a = 0; a < 3; ++a) {
    double s = 0;
    for (std::size_t b = 0; b < 3; ++b) s += m.probs(a, b);
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(FitTransition, Errors) {
  EXPECT_EQ(error_code_of([] { fit_transition({}, 2); }), ErrorCode::EmptyInput);
  EXPECT_EQ(error_code_of([] { fit_transition({{0, 5}}, 2); }), ErrorCode::UnknownClass);
  EXPECT_EQ(error_code_of([] { fit_transition({{0, 1}}, 2, 0.0); }), ErrorCode::InvalidArgument);
}

TEST(FitTransition, RecoversKnownChain) {
  auto spec = make_synth_spec(4, 1, 0.6, 1.0, 0.5, 5);
  std::vector<Labels> seqs;
  for (const auto& w : synth_wells(spec, 4, 5000)) seqs.push_back(*w.labels);
  const auto m = fit_transition(seqs, 4, 1.0);
  for (std::size_t a = 0; a < 4; ++a) {
    double l1 = 0;
    for (std::size_t b = 0; b < 4; ++b) l1 += std::abs(m.probs(a, b) - spec.transition(a, b));
    EXPECT_LT(l1, 0.05);
  }
}

TEST(FitTransition, LambdaPreservesDominantArgmax) {
  for (double lambda : {0.01, 0.5, 1.0, 5.0, 50.0}) {
    const auto m = transition_from_counts(3, {10, 2, 0, 0, 7, 1, 3, 3, 9}, lambda);
    EXPECT_GT(m.prob(0, 0), m.prob(0, 1));
    EXPECT_GT(m.prob(1, 1), m.prob(1, 2));
    EXPECT_GT(m.prob(2, 2), m.prob(2, 0));
  }
}

TEST(TransitionFormat, RoundTrip) {
  const auto m = fit_transition({{0, 1, 1, 2, 0}}, 3, 0.5);
  const auto back = deserialize_transition(serialize_transition(m));
  EXPECT_EQ(back.counts, m.counts);
  EXPECT_EQ(back.probs, m.probs);
  EXPECT_EQ(error_code_of([] { deserialize_transition("lithoflow-transition 1\nclasses 2\nlambda 1\n1 2 3"); }),
            ErrorCode::ParseError);
  const auto text = serialize_transition(fit_transition({{0, 1, 1, 2, 0, 12, 12}}, 13, 0.5));
  EXPECT_EQ(error_code_of([&] { deserialize_transition(text.substr(0, text.size() - 6)); }), ErrorCode::ParseError);
}

TEST(ValidateSequence, NoFlagsOnPlausible) {
  const auto m = fit_transition({{0, 0, 1, 1, 0, 0}}, 2);
  EXPECT_TRUE(validate_sequence(m, {0, 0, 1, 1}, 0.05).flagged.empty());
}

TEST(ValidateSequence, InjectedJumpFlagged) {
  // Class 2 is never entered from 0 in training.
  std::vector<long long> counts = {97, 3, 0, 2, 97, 1, 1, 1, 98};
  const auto m = transition_from_counts(3, counts, 1.0);
  EXPECT_NEAR(m.prob(0, 2), 0.0097, 1e-4);
  const auto v = validate_sequence(m, {0, 0, 0, 2, 2}, 0.05);
  EXPECT_EQ(v.flagged, (std::vector<std::size_t>{3}));
  EXPECT_FALSE(v.transition_probs[0].has_value());
  EXPECT_NE(v.summary.find("sample 3"), std::string::npos);
}

TEST(ValidateSequence, SingletonAndContext) {
  const auto m = transition_from_counts(3, {97, 3, 0, 2, 97, 1, 1, 1, 98}, 1.0);
  EXPECT_TRUE(validate_sequence(m, {2}, 0.05).flagged.empty());
  EXPECT_EQ(validate_sequence(m, {2}, 0.05, ClassId{0}).flagged, (std::vector<std::size_t>{0}));
  EXPECT_EQ(error_code_of([&] { validate_sequence(m, {3}, 0.05); }), ErrorCode::UnknownClass);
  EXPECT_EQ(error_code_of([&] { validate_sequence(m, {}, 0.05); }), ErrorCode::EmptyInput);
}

TEST(ValidateSequence, FlagCountMonotoneInTheta) {
  auto spec = make_synth_spec(5, 1, 0.8, 1.0, 0.5, 2);
  std::vector<Labels> seqs;
  for (const auto& w : synth_wells(spec, 3, 500)) seqs.push_back(*w.labels);
  const auto m = fit_transition(seqs, 5);
  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    Labels seq(40);
    for (auto& c : seq) c = ClassId(rng.below(5));
    std::size_t prev = 0;
    for (double theta = 0.01; theta < 0.99; theta += 0.02) {
      const auto n = validate_sequence(m, seq, theta).flagged.size();
      EXPECT_GE(n, prev);
      prev = n;
    }
  }
}

}  // namespace
}  // namespace lithoflow
