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
#include <optional>
#include <string>
#include <vector>

#include "lithoflow/core.hpp"

namespace lithoflow {

// ---------------------------------------------------------------------------
// Consensus conflict scanning

enum class Source { Neighbor = 0, Neural = 1, Llm = 2 };

struct ConflictRecord {
  int agreement_count = 0;  // A_t in {0, 1, 3}
  int level = 1;            // m_t in {1, 2, 3}
  // (nbr = nn, nbr = llm, nn = llm); empty when a side abstains.
  std::array<std::optional<bool>, 3> pairs;
  bool conflict = false;
};

struct ConflictReport {
  std::vector<ConflictRecord> records;
  int sources = 0;
  std::string summary;
};

// Agreement of three candidate labels: pairwise count and max class count.
inline ConflictRecord agreement_of(ClassId nbr, ClassId nn, ClassId llm) {
  ConflictRecord r;
  r.pairs = {nbr == nn, nbr == llm, nn == llm};
  r.agreement_count = int(nbr == nn) + int(nbr == llm) + int(nn == llm);
  const int count_nbr = 1 + int(nbr == nn) + int(nbr == llm);
  const int count_nn = 1 + int(nn == nbr) + int(nn == llm);
  const int count_llm = 1 + int(llm == nbr) + int(llm == nn);
  r.level = std::max({count_nbr, count_nn, count_llm});
  r.conflict = r.level < 3;
  return r;
}

// Absent sources abstain. With two present sources, agreement is read as
// consensus (A=3, m=3) and disagreement as full conflict (A=0, m=1).
inline ConflictReport scan_conflict(const std::optional<Labels>& y_nbr,
                                    const std::optional<Labels>& y_nn,
                                    const std::optional<Labels>& y_llm) {
  const std::array<const std::optional<Labels>*, 3> src = {&y_nbr, &y_nn, &y_llm};
  std::optional<std::size_t> len;
  int present = 0;
  for (const auto* s : src) {
    if (!s->has_value()) continue;
    ++present;
    if (len && (*s)->size() != *len)
      fail(ErrorCode::DimensionMismatch, "scan_conflict: candidate lengths differ");
    len = (*s)->size();
  }
  require(present >= 2, ErrorCode::InvalidArgument, "scan_conflict: need at least two candidate sources");

  ConflictReport report;
  report.sources = present;
  std::size_t conflicts = 0;
  std::size_t splits = 0;
  for (std::size_t u = 0; u < *len; ++u) {
    ConflictRecord r;
    if (present == 3) {
      r = agreement_of((*y_nbr)[u], (*y_nn)[u], (*y_llm)[u]);
    } else {
      std::vector<ClassId> have;
      for (const auto* s : src)
        if (s->has_value()) have.push_back((**s)[u]);
      const bool agree = have[0] == have[1];
      r.agreement_count = agree ? 3 : 0;
      r.level = agree ? 3 : 1;
      r.conflict = !agree;
      auto pair = [&](const std::optional<Labels>& a, const std::optional<Labels>& b)
          -> std::optional<bool> {
        if (!a || !b) return std::nullopt;
        return (*a)[u] == (*b)[u];
      };
      r.pairs = {pair(y_nbr, y_nn), pair(y_nbr, y_llm), pair(y_nn, y_llm)};
    }
    if (r.conflict) ++conflicts;
    if (r.level == 1) ++splits;
    report.records.push_back(r);
  }
  std::ostringstream s;
  s << present << " sources compared over " << *len << " samples; " << conflicts
    << " in conflict (" << splits << " fully split).";
  if (conflicts > 0) {
    s << " Conflict at samples";
    for (std::size_t u = 0; u < report.records.size(); ++u)
      if (report.records[u].conflict) s << ' ' << u;
    s << '.';
  }
  report.summary = s.str();
  return report;
}

// ---------------------------------------------------------------------------
// Markov transition model

struct TransitionModel {
  std::size_t num_classes = 0;
  double lambda = 1.0;
  std::vector<long long> counts;  // C x C, row = from
  Matrix probs;                   // C x C, row-stochastic

  long long count(ClassId a, ClassId b) const {
    return counts[static_cast<std::size_t>(a) * num_classes + static_cast<std::size_t>(b)];
  }
  double prob(ClassId a, ClassId b) const {
    require(a >= 0 && b >= 0 && static_cast<std::size_t>(a) < num_classes &&
                static_cast<std::size_t>(b) < num_classes,
            ErrorCode::UnknownClass, "transition: class id outside model");
    return probs(static_cast<std::size_t>(a), static_cast<std::size_t>(b));
  }
};

// P(a->b) = (N(a->b) + lambda) / (sum_b' N(a->b') + lambda * C)
inline TransitionModel transition_from_counts(std::size_t num_classes, std::vector<long long> counts,
                                              double lambda) {
  require(lambda > 0.0, ErrorCode::InvalidArgument, "transition: lambda must be > 0");
  require(num_classes >= 1 && counts.size() == num_classes * num_classes,
          ErrorCode::DimensionMismatch, "transition: count matrix must be C x C");
  TransitionModel m;
  m.num_classes = num_classes;
  m.lambda = lambda;
  m.counts = std::move(counts);
  m.probs = Matrix(num_classes, num_classes);
  for (std::size_t a = 0; a < num_classes; ++a) {
    long long row = 0;
    for (std::size_t b = 0; b < num_classes; ++b) {
      require(m.counts[a * num_classes + b] >= 0, ErrorCode::InvalidArgument,
              "transition: negative count");
      row += m.counts[a * num_classes + b];
    }
    const double denom = static_cast<double>(row) + lambda * static_cast<double>(num_classes);
    for (std::size_t b = 0; b < num_classes; ++b)
      m.probs(a, b) = (static_cast<double>(m.counts[a * num_classes + b]) + lambda) / denom;
  }
  return m;
}

// Counts adjacent pairs within each sequence; never across sequences.
inline TransitionModel fit_transition(const std::vector<Labels>& sequences, std::size_t num_classes,
                                      double lambda = 1.0) {
  require(!sequences.empty(), ErrorCode::EmptyInput, "fit_transition: no sequences");
  require(num_classes >= 1, ErrorCode::InvalidArgument, "fit_transition: no classes");
  std::vector<long long> counts(num_classes * num_classes, 0);
  for (const auto& seq : sequences) {
    for (ClassId c : seq)
      require(c >= 0 && static_cast<std::size_t>(c) < num_classes, ErrorCode::UnknownClass,
              "fit_transition: unknown class id " + std::to_string(c));
    for (std::size_t i = 1; i < seq.size(); ++i)
      ++counts[static_cast<std::size_t>(seq[i - 1]) * num_classes + static_cast<std::size_t>(seq[i])];
  }
  return transition_from_counts(num_classes, std::move(counts), lambda);
}

//   lithoflow-transition 1
//   classes <C>
//   lambda <lambda>
//   <C lines of C counts>
inline std::string serialize_transition(const TransitionModel& m) {
  std::ostringstream out;
  out << "lithoflow-transition 1\nclasses " << m.num_classes << "\nlambda "
      << format_double(m.lambda) << '\n';
  for (std::size_t a = 0; a < m.num_classes; ++a) {
    for (std::size_t b = 0; b < m.num_classes; ++b)
      out << (b ? " " : "") << m.counts[a * m.num_classes + b];
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

inline TransitionModel deserialize_transition(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  require(tag == "lithoflow-transition" && version == 1, ErrorCode::ParseError,
          "transition: bad header");
  std::size_t c = 0;
  double lambda = 0.0;
  in >> tag >> c;
  require(in && tag == "classes", ErrorCode::ParseError, "transition: missing classes");
  in >> tag >> lambda;
  require(in && tag == "lambda", ErrorCode::ParseError, "transition: missing lambda");
  std::vector<long long> counts(c * c);
  for (auto& n : counts) in >> n;
  require(static_cast<bool>(in), ErrorCode::ParseError, "transition: truncated counts");
  in >> tag;
  require(in && tag == "end", ErrorCode::ParseError, "transition: missing end marker (truncated file?)");
  return transition_from_counts(c, std::move(counts), lambda);
}

// ---------------------------------------------------------------------------
// Sequence validation

struct ValidationSignal {
  double threshold = 0.05;
  // Incoming transition probability per position; empty at position 0
  // unless a context label precedes the sequence.
  std::vector<std::optional<double>> transition_probs;
  std::vector<std::size_t> flagged;
  std::string summary;
};

inline ValidationSignal validate_sequence(const TransitionModel& model, const Labels& seq,
                                          double theta = 0.05,
                                          std::optional<ClassId> context = std::nullopt) {
  require(theta > 0.0 && theta < 1.0, ErrorCode::InvalidArgument, "validate: theta must be in (0,1)");
  require(!seq.empty(), ErrorCode::EmptyInput, "validate: empty sequence");
  ValidationSignal v;
  v.threshold = theta;
  v.transition_probs.resize(seq.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    std::optional<ClassId> prev;
    if (i > 0) prev = seq[i - 1];
    else if (context) prev = context;
    if (!prev) {
      model.prob(seq[i], seq[i]);  // class check
      continue;
    }
    const double p = model.prob(*prev, seq[i]);
    v.transition_probs[i] = p;
    if (p < theta) v.flagged.push_back(i);
  }
  std::ostringstream s;
  s << v.flagged.size() << " low-probability transitions (P < " << format_fixed(theta, 3) << ")";
  for (auto i : v.flagged) s << (i == v.flagged.front() ? ": " : ", ") << "sample " << i << " P="
                             << format_fixed(*v.transition_probs[i], 4);
  s << '.';
  v.summary = s.str();
  return v;
}

}  // namespace lithoflow
