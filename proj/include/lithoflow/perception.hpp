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
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "lithoflow/core.hpp"
#include "lithoflow/welldata.hpp"

namespace lithoflow {

// ---------------------------------------------------------------------------
// Case retrieval

struct MetricWeights {
  double euclidean = 1.0 / 3.0;
  double manhattan = 1.0 / 3.0;
  double cosine = 1.0 / 3.0;

  void validate() const {
    require(euclidean >= 0.0 && manhattan >= 0.0 && cosine >= 0.0, ErrorCode::InvalidArgument,
            "metric weights must be nonnegative");
    require(std::abs(euclidean + manhattan + cosine - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
            "metric weights must sum to 1");
  }
};

struct IndexEntry {
  std::vector<double> vector;
  Labels labels;
  std::string well_id;
  std::size_t start_index = 0;
};

struct RetrievalIndex {
  std::size_t window_len = 0;
  std::size_t num_channels = 0;
  MetricWeights weights;
  std::string fingerprint;
  std::vector<IndexEntry> entries;

  std::size_t dim() const noexcept { return window_len * num_channels; }
  std::size_t size() const noexcept { return entries.size(); }
  bool contains_well(const std::string& well_id) const {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const IndexEntry& e) { return e.well_id == well_id; });
  }
};

// Fingerprint of a labeled window collection (values, labels, provenance).
inline std::string dataset_fingerprint(const std::vector<Window>& windows) {
  Fnv1a h;
  for (const auto& w : windows) {
    h.add(w.well_id);
    h.add(w.start_index);
    for (double v : w.values.data()) h.add(v);
    if (w.labels)
      for (ClassId c : *w.labels) h.add(c);
  }
  return h.hex();
}

inline RetrievalIndex build_index(const std::vector<Window>& train_windows,
                                  const MetricWeights& weights = {}) {
  weights.validate();
  require(!train_windows.empty(), ErrorCode::EmptyInput, "build_index: no windows");
  RetrievalIndex index;
  index.window_len = train_windows.front().length();
  index.num_channels = train_windows.front().num_channels();
  index.weights = weights;
  index.fingerprint = dataset_fingerprint(train_windows);
  index.entries.reserve(train_windows.size());
  for (const auto& w : train_windows) {
    require(w.length() == index.window_len && w.num_channels() == index.num_channels,
            ErrorCode::DimensionMismatch, "build_index: mixed window dimensionality");
    require(w.labels.has_value(), ErrorCode::InvalidArgument, "build_index: unlabeled window");
    index.entries.push_back({w.flatten(), *w.labels, w.well_id, w.start_index});
  }
  return index;
}

struct Neighbor {
  std::size_t entry = 0;  // position in RetrievalIndex::entries
  std::string well_id;
  std::size_t start_index = 0;
  Labels labels;
  double similarity = 0.0;
  double weight = 0.0;
};

struct Neighborhood {
  std::vector<Neighbor> neighbors;
  std::string query_well;
  std::size_t query_start = 0;
  bool truncated = false;  // fewer entries than requested K
};

struct RawDistances {
  double euclidean;
  double manhattan;
  double cosine;  // 1 - cosine similarity
};

inline RawDistances raw_distances(std::span<const double> a, std::span<const double> b) {
  double sq = 0.0, abs_sum = 0.0, dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    sq += diff * diff;
    abs_sum += std::abs(diff);
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  double cos_sim = 0.0;
  if (na > 0.0 && nb > 0.0)
    cos_sim = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  else if (na == 0.0 && nb == 0.0)
    cos_sim = 1.0;
  return {std::sqrt(sq), abs_sum, 1.0 - cos_sim};
}

// K most similar entries. Each metric's distances are min-max scaled over the
// candidate pool and turned into similarity 1 - scaled; the combined score is
// the weighted sum. Entries from `exclude_well` are left out of the pool.
inline Neighborhood retrieve(const RetrievalIndex& index, const Window& query, int k,
                             const std::optional<std::string>& exclude_well = std::nullopt) {
  require(k >= 1, ErrorCode::InvalidArgument, "retrieve: K must be >= 1");
  require(!index.entries.empty(), ErrorCode::EmptyInput, "retrieve: empty index");
  require(query.length() == index.window_len && query.num_channels() == index.num_channels,
          ErrorCode::DimensionMismatch, "retrieve: query dimension does not match index");

  const auto q = query.values.data();
  std::vector<std::size_t> pool;
  std::vector<RawDistances> dist;
  pool.reserve(index.entries.size());
  dist.reserve(index.entries.size());
  for (std::size_t i = 0; i < index.entries.size(); ++i) {
    if (exclude_well && index.entries[i].well_id == *exclude_well) continue;
    pool.push_back(i);
    dist.push_back(raw_distances(q, index.entries[i].vector));
  }
  require(!pool.empty(), ErrorCode::EmptyInput, "retrieve: candidate pool empty after exclusion");

  auto scaled_similarity = [&](auto get) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& d : dist) {
      lo = std::min(lo, get(d));
      hi = std::max(hi, get(d));
    }
    std::vector<double> s(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i)
      s[i] = hi > lo ? 1.0 - (get(dist[i]) - lo) / (hi - lo) : 1.0;
    return s;
  };
  const auto se = scaled_similarity([](const RawDistances& d) { return d.euclidean; });
  const auto sm = scaled_similarity([](const RawDistances& d) { return d.manhattan; });
  const auto sc = scaled_similarity([](const RawDistances& d) { return d.cosine; });

  std::vector<double> score(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i)
    score[i] = index.weights.euclidean * se[i] + index.weights.manhattan * sm[i] +
               index.weights.cosine * sc[i];

  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(k), pool.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    const auto& ea = index.entries[pool[a]];
    const auto& eb = index.entries[pool[b]];
    if (ea.well_id != eb.well_id) return ea.well_id < eb.well_id;
    return ea.start_index < eb.start_index;
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                    better);

  Neighborhood nbh;
  nbh.query_well = query.well_id;
  nbh.query_start = query.start_index;
  nbh.truncated = take < static_cast<std::size_t>(k);
  double total = 0.0;
  for (std::size_t i = 0; i < take; ++i) {
    const auto& e = index.entries[pool[order[i]]];
    nbh.neighbors.push_back({pool[order[i]], e.well_id, e.start_index, e.labels,
                             std::clamp(score[order[i]], 0.0, 1.0), 0.0});
    total += nbh.neighbors.back().similarity;
  }
  for (auto& n : nbh.neighbors)
    n.weight = total > 0.0 ? n.similarity / total : 1.0 / static_cast<double>(take);
  return nbh;
}

// Index text format, version 1:
//   lithoflow-index 1
//   dims <L> <d>
//   weights <w_euclid> <w_manhattan> <w_cosine>
//   fingerprint <hex>
//   entries <N>
//   <well_id> <start> <label,label,...> <v_0> ... <v_{L*d-1}>      (N lines)
inline std::string serialize_index(const RetrievalIndex& index) {
  std::ostringstream out;
  out << "lithoflow-index 1\n";
  out << "dims " << index.window_len << ' ' << index.num_channels << '\n';
  out << "weights " << format_double(index.weights.euclidean) << ' '
      << format_double(index.weights.manhattan) << ' ' << format_double(index.weights.cosine)
      << '\n';
  out << "fingerprint " << index.fingerprint << '\n';
  out << "entries " << index.entries.size() << '\n';
  for (const auto& e : index.entries) {
    out << e.well_id << ' ' << e.start_index << ' ';
    for (std::size_t i = 0; i < e.labels.size(); ++i) out << (i ? "," : "") << e.labels[i];
    for (double v : e.vector) out << ' ' << format_double(v);
    out << '\n';
  }
  out << "end\n";
  return out.str();
}

inline RetrievalIndex deserialize_index(const std::string& text) {
  std::istringstream in(text);
  std::string tag;
  int version = 0;
  in >> tag >> version;
  require(tag == "lithoflow-index" && version == 1, ErrorCode::ParseError,
          "index: bad header or version");
  RetrievalIndex index;
  std::size_t n = 0;
  in >> tag >> index.window_len >> index.num_channels;
  require(in && tag == "dims", ErrorCode::ParseError, "index: missing dims");
  in >> tag >> index.weights.euclidean >> index.weights.manhattan >> index.weights.cosine;
  require(in && tag == "weights", ErrorCode::ParseError, "index: missing weights");
  in >> tag >> index.fingerprint;
  require(in && tag == "fingerprint", ErrorCode::ParseError, "index: missing fingerprint");
  in >> tag >> n;
  require(in && tag == "entries", ErrorCode::ParseError, "index: missing entry count");
  index.entries.resize(n);
  for (auto& e : index.entries) {
    std::string labels;
    in >> e.well_id >> e.start_index >> labels;
    for (const auto& s : split(labels, ',')) e.labels.push_back(parse_int(s, "index labels"));
    e.vector.resize(index.dim());
    for (auto& v : e.vector) in >> v;
    require(static_cast<bool>(in), ErrorCode::ParseError, "index: truncated entry");
    require(e.labels.size() == index.window_len, ErrorCode::ParseError,
            "index: label count mismatch");
  }
  in >> tag;
  require(in && tag == "end", ErrorCode::ParseError, "index: missing end marker (truncated file?)");
  index.weights.validate();
  return index;
}

// ---------------------------------------------------------------------------
// Trend narration

enum class Direction { Rising, Falling, Stable };

inline const char* to_string(Direction d) {
  switch (d) {
    case Direction::Rising: return "rising";
    case Direction::Falling: return "falling";
    case Direction::Stable: return "stable";
  }
  return "?";
}

inline Direction flipped(Direction d) {
  if (d == Direction::Rising) return Direction::Falling;
  if (d == Direction::Falling) return Direction::Rising;
  return d;
}

inline Direction direction_from_string(std::string_view s) {
  if (s == "rising") return Direction::Rising;
  if (s == "falling") return Direction::Falling;
  if (s == "stable") return Direction::Stable;
  fail(ErrorCode::ParseError, "unknown trend direction: " + std::string(s));
}

// Samples [start, end) of one channel.
struct TrendSegment {
  std::size_t start = 0;
  std::size_t end = 0;
  Direction direction = Direction::Stable;
  double delta = 0.0;
  bool operator==(const TrendSegment&) const = default;
};

struct ChannelTrend {
  std::string channel;
  std::vector<TrendSegment> segments;
  std::vector<std::size_t> turning_points;  // sample indices on segment boundaries
};

struct TrendNarrative {
  std::size_t length = 0;
  std::vector<ChannelTrend> channels;
  std::string rendered_text;
};

inline ChannelTrend narrate_series(std::span<const double> x, const std::string& name,
                                   double slope_tol) {
  const std::size_t n = x.size();
  ChannelTrend trend;
  trend.channel = name;
  auto classify = [&](std::size_t i) {
    const double diff = x[i + 1] - x[i];
    if (diff > slope_tol) return Direction::Rising;
    if (diff < -slope_tol) return Direction::Falling;
    return Direction::Stable;
  };
  std::size_t i = 0;
  while (i + 1 < n) {
    const Direction dir = classify(i);
    std::size_t j = i;
    while (j + 2 < n && classify(j + 1) == dir) ++j;
    trend.segments.push_back({i, j + 1, dir, 0.0});
    i = j + 1;
  }
  if (!trend.segments.empty()) trend.segments.back().end = n;
  for (auto& s : trend.segments) s.delta = x[std::min(s.end, n - 1)] - x[s.start];
  for (std::size_t s = 1; s < trend.segments.size(); ++s) {
    const auto a = trend.segments[s - 1].direction;
    const auto b = trend.segments[s].direction;
    if (a != Direction::Stable && b != Direction::Stable && a != b)
      trend.turning_points.push_back(trend.segments[s].start);
  }
  return trend;
}

inline std::string render_narrative(const TrendNarrative& nar, std::span<const double> depths) {
  std::ostringstream out;
  auto depth_at = [&](std::size_t i) {
    if (depths.empty()) return format_fixed(static_cast<double>(i), 0);
    return format_fixed(depths[std::min(i, depths.size() - 1)], 2);
  };
  for (const auto& ch : nar.channels) {
    out << ch.channel << ":";
    for (std::size_t s = 0; s < ch.segments.size(); ++s) {
      const auto& seg = ch.segments[s];
      out << (s ? ";" : "") << ' ' << to_string(seg.direction) << " from " << depth_at(seg.start)
          << " m to " << depth_at(std::min(seg.end, nar.length - 1))
          << " m (change " << format_fixed(seg.delta, 3) << ")";
    }
    if (ch.turning_points.empty()) {
      out << "; no turning points";
    } else {
      out << "; turning points at";
      for (auto tp : ch.turning_points) out << ' ' << depth_at(tp) << " m";
    }
    out << ".\n";
  }
  return out.str();
}

inline TrendNarrative narrate(const Window& window, double slope_tol = 0.05,
                              const std::vector<std::string>& channel_names = {}) {
  require(window.length() >= 2, ErrorCode::InvalidArgument, "narrate: window length must be >= 2");
  TrendNarrative nar;
  nar.length = window.length();
  for (std::size_t c = 0; c < window.num_channels(); ++c) {
    const auto series = window.values.column(c);
    const std::string name =
        c < channel_names.size() ? channel_names[c] : "ch" + std::to_string(c);
    nar.channels.push_back(narrate_series(series, name, slope_tol));
  }
  nar.rendered_text = render_narrative(nar, window.depths);
  return nar;
}

// Direction carrying the larger total magnitude over the non-stable
// segments of all channels; Stable when nothing moves.
inline Direction dominant_direction(const TrendNarrative& nar) {
  double rising = 0.0;
  double falling = 0.0;
  for (const auto& ch : nar.channels)
    for (const auto& s : ch.segments) {
      if (s.direction == Direction::Rising) rising += std::abs(s.delta);
      if (s.direction == Direction::Falling) falling += std::abs(s.delta);
    }
  if (rising == 0.0 && falling == 0.0) return Direction::Stable;
  return rising >= falling ? Direction::Rising : Direction::Falling;
}

}  // namespace lithoflow
