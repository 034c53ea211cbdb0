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
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lithoflow/core.hpp"

namespace lithoflow {

enum class Transform { Linear, Log10 };

// Offset inside log10 so zero-valued resistivity stays finite.
inline constexpr double kLogEpsilon = 1e-6;

struct ChannelInfo {
  std::string name;
  std::string unit;
  Transform transform = Transform::Linear;
  bool operator==(const ChannelInfo&) const = default;
};

struct LogCurve {
  std::string name;
  std::string unit;
  Transform transform = Transform::Linear;
  std::vector<double> values;
};

// Depth-indexed multichannel record. `values` is T x d; `missing` is either
// empty (nothing missing) or a T*d row-major mask.
struct WellLog {
  std::string well_id;
  int segment = 0;
  std::vector<double> depths;
  double interval = 1.0;
  std::vector<ChannelInfo> channels;
  Matrix values;
  std::vector<std::uint8_t> missing;
  std::optional<Labels> labels;

  std::size_t length() const noexcept { return depths.size(); }
  std::size_t num_channels() const noexcept { return channels.size(); }

  bool is_missing(std::size_t row, std::size_t col) const {
    return !missing.empty() && missing[row * channels.size() + col] != 0;
  }

  LogCurve curve(std::size_t col) const {
    return {channels.at(col).name, channels[col].unit, channels[col].transform,
            values.column(col)};
  }

  std::optional<std::size_t> channel_index(std::string_view name) const {
    for (std::size_t i = 0; i < channels.size(); ++i)
      if (channels[i].name == name) return i;
    return std::nullopt;
  }

  void validate() const {
    const std::size_t t = depths.size();
    require(interval > 0.0, ErrorCode::InvalidArgument, "well " + well_id + ": interval must be > 0");
    require(values.rows() == t && values.cols() == channels.size(), ErrorCode::DimensionMismatch,
            "well " + well_id + ": channel matrix does not match depth length");
    require(missing.empty() || missing.size() == t * channels.size(), ErrorCode::DimensionMismatch,
            "well " + well_id + ": missing mask size mismatch");
    for (std::size_t i = 1; i < t; ++i)
      require(depths[i] > depths[i - 1], ErrorCode::NonMonotoneDepth,
              "well " + well_id + ": depths not strictly increasing");
    if (labels)
      require(labels->size() == t, ErrorCode::DimensionMismatch,
              "well " + well_id + ": label length mismatch");
  }

  bool operator==(const WellLog&) const = default;
};

struct Window {
  std::string well_id;
  int segment = 0;
  std::size_t start_index = 0;
  Matrix values;  // L x d
  std::vector<double> depths;
  std::optional<Labels> labels;

  std::size_t length() const noexcept { return values.rows(); }
  std::size_t num_channels() const noexcept { return values.cols(); }
  std::vector<double> flatten() const { return values.data(); }
};

struct ChannelBounds {
  double min = -std::numeric_limits<double>::infinity();
  double max = std::numeric_limits<double>::infinity();
};

struct PreprocessSpec {
  std::map<std::string, ChannelBounds> physical_bounds;
  double max_gap_m = 2.0;
  int window_len = 16;
  int stride = 4;
  int test_stride = 16;

  void validate() const {
    require(window_len > 0, ErrorCode::InvalidArgument, "window_len must be > 0");
    require(stride > 0 && test_stride > 0, ErrorCode::InvalidArgument, "stride must be > 0");
    require(max_gap_m > 0.0, ErrorCode::InvalidArgument, "max_gap_m must be > 0");
  }
};

// ---------------------------------------------------------------------------
// CSV ingestion

struct CsvSchema {
  std::string well_column = "well_id";
  std::string depth_column = "depth";
  std::string label_column = "label";
  // Channel columns to keep; empty means every remaining column.
  std::vector<std::string> channels;
  std::set<std::string> log10_channels;
  std::map<std::string, std::string> units;
  double default_interval = 1.0;
};

namespace detail {

inline std::vector<std::string> csv_fields(const std::string& line) {
  auto fields = split(line, ',');
  for (auto& f : fields) f = trim(f);
  return fields;
}

inline double median_step(const std::vector<double>& depths, double fallback) {
  if (depths.size() < 2) return fallback;
  std::vector<double> steps;
  steps.reserve(depths.size() - 1);
  for (std::size_t i = 1; i < depths.size(); ++i) steps.push_back(depths[i] - depths[i - 1]);
  std::nth_element(steps.begin(), steps.begin() + static_cast<std::ptrdiff_t>(steps.size() / 2),
                   steps.end());
  return steps[steps.size() / 2];
}

}  // namespace detail

// Parse a well-log CSV body. Wells are returned sorted by well_id.
inline std::vector<WellLog> parse_csv_text(const std::string& text, const CsvSchema& schema) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (header.empty() && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
      line.erase(0, 3);
    if (!trim(line).empty()) {
      header = detail::csv_fields(line);
      break;
    }
  }
  if (header.empty()) fail(ErrorCode::EmptyInput, "no rows");

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    return std::nullopt;
  };
  const auto well_col = find_col(schema.well_column);
  const auto depth_col = find_col(schema.depth_column);
  if (!well_col) fail(ErrorCode::MissingColumn, "missing column: " + schema.well_column);
  if (!depth_col) fail(ErrorCode::MissingColumn, "missing column: " + schema.depth_column);
  const auto label_col = find_col(schema.label_column);

  std::vector<std::size_t> channel_cols;
  std::vector<std::string> channel_names;
  if (schema.channels.empty()) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i == *well_col || i == *depth_col || (label_col && i == *label_col)) continue;
      channel_cols.push_back(i);
      channel_names.push_back(header[i]);
    }
  } else {
    for (const auto& name : schema.channels) {
      const auto c = find_col(name);
      if (!c) fail(ErrorCode::MissingColumn, "missing column: " + name);
      channel_cols.push_back(*c);
      channel_names.push_back(name);
    }
  }
  if (channel_cols.empty()) fail(ErrorCode::MissingColumn, "no channel columns in header");

  struct Row {
    double depth;
    std::vector<double> values;
    std::vector<std::uint8_t> missing;
    int label;
  };
  std::map<std::string, std::vector<Row>> rows_by_well;
  std::size_t line_no = 1;
  std::size_t data_rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = detail::csv_fields(line);
    if (fields.size() != header.size())
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                      std::to_string(header.size()) + " fields");
    const std::string ctx = "line " + std::to_string(line_no);
    Row row;
    row.depth = parse_double(fields[*depth_col], ctx);
    row.values.resize(channel_cols.size());
    row.missing.resize(channel_cols.size(), 0);
    for (std::size_t c = 0; c < channel_cols.size(); ++c) {
      const auto& cell = fields[channel_cols[c]];
      if (cell.empty()) {
        row.missing[c] = 1;
        row.values[c] = 0.0;
      } else {
        row.values[c] = parse_double(cell, ctx + " column " + channel_names[c]);
      }
    }
    row.label = label_col ? parse_int(fields[*label_col], ctx + " label") : 0;
    if (label_col && row.label < 0) fail(ErrorCode::ParseError, ctx + ": negative label");
    rows_by_well[fields[*well_col]].push_back(std::move(row));
    ++data_rows;
  }
  if (data_rows == 0) fail(ErrorCode::EmptyInput, "no rows");

  std::vector<WellLog> wells;
  for (auto& [id, rows] : rows_by_well) {
    if (rows.size() > 1 && rows.front().depth > rows.back().depth)
      std::reverse(rows.begin(), rows.end());
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (!(rows[i].depth > rows[i - 1].depth))
        fail(ErrorCode::NonMonotoneDepth, "well " + id + ": non-monotone depth");

    WellLog w;
    w.well_id = id;
    for (const auto& name : channel_names) {
      ChannelInfo info{name, "", schema.log10_channels.count(name) ? Transform::Log10
                                                                   : Transform::Linear};
      if (auto u = schema.units.find(name); u != schema.units.end()) info.unit = u->second;
      w.channels.push_back(info);
    }
    const std::size_t t = rows.size();
    const std::size_t d = channel_names.size();
    w.values = Matrix(t, d);
    w.missing.assign(t * d, 0);
    bool any_missing = false;
    if (label_col) w.labels = Labels(t);
    for (std::size_t r = 0; r < t; ++r) {
      w.depths.push_back(rows[r].depth);
      for (std::size_t c = 0; c < d; ++c) {
        w.values(r, c) = rows[r].values[c];
        w.missing[r * d + c] = rows[r].missing[c];
        any_missing = any_missing || rows[r].missing[c];
      }
      if (w.labels) (*w.labels)[r] = rows[r].label;
    }
    if (!any_missing) w.missing.clear();
    w.interval = detail::median_step(w.depths, schema.default_interval);
    w.validate();
    wells.push_back(std::move(w));
  }
  return wells;
}

inline std::vector<WellLog> parse_csv(const std::filesystem::path& path, const CsvSchema& schema) {
  if (!std::filesystem::exists(path))
    fail(ErrorCode::MissingArtifact, "file not found: " + path.string());
  return parse_csv_text(read_file(path), schema);
}

// Serialize wells in the ingestion schema (labels appended when present).
inline std::string to_csv(const std::vector<WellLog>& wells) {
  std::ostringstream out;
  if (wells.empty()) return {};
  const bool with_labels = wells.front().labels.has_value();
  out << "well_id,depth";
  for (const auto& c : wells.front().channels) out << ',' << c.name;
  if (with_labels) out << ",label";
  out << '\n';
  for (const auto& w : wells) {
    for (std::size_t r = 0; r < w.length(); ++r) {
      out << w.well_id << ',' << format_double(w.depths[r]);
      for (std::size_t c = 0; c < w.num_channels(); ++c) {
        out << ',';
        if (!w.is_missing(r, c)) out << format_double(w.values(r, c));
      }
      if (with_labels) out << ',' << (w.labels ? (*w.labels)[r] : 0);
      out << '\n';
    }
  }
  return out.str();
}

// ---------------------------------------------------------------------------
// Cleaning

// Bound-filter every channel, bridge short missing runs by depth-linear
// interpolation, and split the well at runs (or depth jumps) wider than
// max_gap_m. Returns the surviving segments in depth order.
inline std::vector<WellLog> clean(const WellLog& well, const PreprocessSpec& spec) {
  spec.validate();
  well.validate();
  const std::size_t t = well.length();
  const std::size_t d = well.num_channels();
  if (t == 0) return {};

  Matrix values = well.values;
  std::vector<std::uint8_t> missing(t * d, 0);
  for (std::size_t r = 0; r < t; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      bool miss = well.is_missing(r, c) || !std::isfinite(values(r, c));
      if (!miss) {
        if (auto b = spec.physical_bounds.find(well.channels[c].name);
            b != spec.physical_bounds.end()) {
          miss = values(r, c) < b->second.min || values(r, c) > b->second.max;
        }
      }
      missing[r * d + c] = miss ? 1 : 0;
    }
  }

  std::vector<std::uint8_t> cut(t, 0);
  for (std::size_t c = 0; c < d; ++c) {
    bool any_valid = false;
    for (std::size_t r = 0; r < t; ++r) any_valid = any_valid || !missing[r * d + c];
    if (!any_valid)
      fail(ErrorCode::ChannelMissing,
           "well " + well.well_id + ": channel " + well.channels[c].name + " entirely missing");

    std::size_t r = 0;
    while (r < t) {
      if (!missing[r * d + c]) {
        ++r;
        continue;
      }
      const std::size_t begin = r;
      while (r < t && missing[r * d + c]) ++r;
      const std::size_t end = r;  // exclusive
      const bool bridged = begin > 0 && end < t &&
                           well.depths[end] - well.depths[begin - 1] <= spec.max_gap_m;
      if (bridged) {
        const double d0 = well.depths[begin - 1];
        const double d1 = well.depths[end];
        const double v0 = values(begin - 1, c);
        const double v1 = values(end, c);
        for (std::size_t k = begin; k < end; ++k)
          values(k, c) = v0 + (v1 - v0) * (well.depths[k] - d0) / (d1 - d0);
      } else {
        for (std::size_t k = begin; k < end; ++k) cut[k] = 1;
      }
    }
  }

  std::vector<WellLog> segments;
  std::size_t r = 0;
  while (r < t) {
    if (cut[r]) {
      ++r;
      continue;
    }
    const std::size_t begin = r;
    ++r;
    while (r < t && !cut[r] && well.depths[r] - well.depths[r - 1] <= spec.max_gap_m) ++r;
    WellLog seg;
    seg.well_id = well.well_id;
    seg.segment = well.segment + static_cast<int>(segments.size());
    seg.depths.assign(well.depths.begin() + static_cast<std::ptrdiff_t>(begin),
                      well.depths.begin() + static_cast<std::ptrdiff_t>(r));
    seg.interval = well.interval;
    seg.channels = well.channels;
    seg.values = values.slice_rows(begin, r - begin);
    if (well.labels)
      seg.labels = Labels(well.labels->begin() + static_cast<std::ptrdiff_t>(begin),
                          well.labels->begin() + static_cast<std::ptrdiff_t>(r));
    segments.push_back(std::move(seg));
  }
  return segments;
}

// ---------------------------------------------------------------------------
// Normalization

struct ChannelStat {
  double mean = 0.0;
  double stddev = 1.0;
};

using ChannelStats = std::map<std::string, ChannelStat>;

inline double apply_transform(double x, Transform t, const std::string& channel) {
  if (t == Transform::Linear) return x;
  const double shifted = x + kLogEpsilon;
  require(shifted > 0.0, ErrorCode::InvalidArgument,
          "log10 channel " + channel + " has non-positive value");
  return std::log10(shifted);
}

// Population mean / standard deviation per channel over the given wells,
// measured after each channel's transform.
inline ChannelStats compute_stats(const std::vector<WellLog>& wells) {
  require(!wells.empty(), ErrorCode::EmptyInput, "no wells for statistics");
  ChannelStats stats;
  const auto& channels = wells.front().channels;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& w : wells) {
      const auto idx = w.channel_index(channels[c].name);
      require(idx.has_value(), ErrorCode::DimensionMismatch,
              "well " + w.well_id + " lacks channel " + channels[c].name);
      for (std::size_t r = 0; r < w.length(); ++r)
        sum += apply_transform(w.values(r, *idx), w.channels[*idx].transform, channels[c].name);
      n += w.length();
    }
    require(n > 0, ErrorCode::EmptyInput, "no samples for statistics");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const auto& w : wells) {
      const auto idx = *w.channel_index(channels[c].name);
      for (std::size_t r = 0; r < w.length(); ++r) {
        const double dv =
            apply_transform(w.values(r, idx), w.channels[idx].transform, channels[c].name) - mean;
        ss += dv * dv;
      }
    }
    stats[channels[c].name] = {mean, std::sqrt(ss / static_cast<double>(n))};
  }
  return stats;
}

// Transform then z-score every channel; zero-variance channels map to 0.
inline WellLog normalize(const WellLog& well, const ChannelStats& stats) {
  WellLog out = well;
  for (std::size_t c = 0; c < well.num_channels(); ++c) {
    const auto& name = well.channels[c].name;
    auto it = stats.find(name);
    if (it == stats.end()) fail(ErrorCode::MissingStats, "no statistics for channel " + name);
    const auto [mu, sigma] = it->second;
    require(std::isfinite(mu) && std::isfinite(sigma), ErrorCode::MissingStats,
            "non-finite statistics for channel " + name);
    for (std::size_t r = 0; r < well.length(); ++r) {
      if (sigma == 0.0) {
        out.values(r, c) = 0.0;
        continue;
      }
      out.values(r, c) = (apply_transform(well.values(r, c), well.channels[c].transform, name) - mu) / sigma;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Windowing

struct WindowSet {
  std::vector<Window> windows;
  bool too_short = false;  // L > T: no windows produced
};

inline Window extract_window(const WellLog& well, std::size_t start, std::size_t len) {
  require(start + len <= well.length() && len > 0, ErrorCode::InvalidArgument,
          "window out of range");
  Window w;
  w.well_id = well.well_id;
  w.segment = well.segment;
  w.start_index = start;
  w.values = well.values.slice_rows(start, len);
  w.depths.assign(well.depths.begin() + static_cast<std::ptrdiff_t>(start),
                  well.depths.begin() + static_cast<std::ptrdiff_t>(start + len));
  if (well.labels)
    w.labels = Labels(well.labels->begin() + static_cast<std::ptrdiff_t>(start),
                      well.labels->begin() + static_cast<std::ptrdiff_t>(start + len));
  return w;
}

// Windows at starts 0, S, 2S, ... with start + L <= T.
inline WindowSet window(const WellLog& well, int len, int stride) {
  require(len > 0 && stride > 0, ErrorCode::InvalidArgument, "window length and stride must be > 0");
  WindowSet out;
  const auto t = well.length();
  const auto l = static_cast<std::size_t>(len);
  if (l > t) {
    out.too_short = true;
    return out;
  }
  for (std::size_t s = 0; s + l <= t; s += static_cast<std::size_t>(stride))
    out.windows.push_back(extract_window(well, s, l));
  return out;
}

inline std::vector<Window> window_all(const std::vector<WellLog>& wells, int len, int stride) {
  std::vector<Window> out;
  for (const auto& w : wells) {
    auto ws = window(w, len, stride);
    for (auto& x : ws.windows) out.push_back(std::move(x));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic wells

struct SynthSpec {
  int num_classes = 0;
  Matrix transition;     // C x C, row-stochastic
  Matrix emission_mean;  // C x d
  Matrix emission_std;   // C x d
  double interval = 0.5;
  std::uint64_t seed = 0;
  std::vector<std::string> channel_names;  // defaults to ch0..ch{d-1}

  void validate() const {
    require(num_classes >= 1, ErrorCode::InvalidArgument, "num_classes must be >= 1");
    const auto c = static_cast<std::size_t>(num_classes);
    require(transition.rows() == c && transition.cols() == c, ErrorCode::DimensionMismatch,
            "transition must be C x C");
    for (std::size_t a = 0; a < c; ++a) {
      double sum = 0.0;
      for (std::size_t b = 0; b < c; ++b) {
        require(transition(a, b) >= 0.0, ErrorCode::InvalidArgument, "negative transition entry");
        sum += transition(a, b);
      }
      require(std::abs(sum - 1.0) <= 1e-9, ErrorCode::InvalidArgument,
              "transition row " + std::to_string(a) + " is not stochastic");
    }
    require(emission_mean.rows() == c && emission_std.rows() == c &&
                emission_mean.cols() == emission_std.cols() && emission_mean.cols() > 0,
            ErrorCode::DimensionMismatch, "emission tables must be C x d");
    for (double s : emission_std.data())
      require(s > 0.0, ErrorCode::InvalidArgument, "emission_std must be > 0");
    require(interval > 0.0, ErrorCode::InvalidArgument, "interval must be > 0");
    require(channel_names.empty() || channel_names.size() == emission_mean.cols(),
            ErrorCode::DimensionMismatch, "channel_names size mismatch");
  }
};

// Chain with `stay` on the diagonal; leaving mass goes mostly to the next
// class in order (stratigraphic succession), some to the previous one, and a
// small remainder spread over the rest. Emission means are drawn from a
// seeded stream in [-1.5, 1.5].
inline SynthSpec make_synth_spec(int num_classes, int num_channels, double stay, double noise_std,
                                 double interval, std::uint64_t seed) {
  require(num_classes >= 1 && num_channels >= 1, ErrorCode::InvalidArgument,
          "num_classes and num_channels must be >= 1");
  require(stay > 0.0 && stay <= 1.0, ErrorCode::InvalidArgument, "stay must be in (0,1]");
  const auto c = static_cast<std::size_t>(num_classes);
  const auto d = static_cast<std::size_t>(num_channels);
  SynthSpec spec;
  spec.num_classes = num_classes;
  spec.interval = interval;
  spec.seed = seed;
  spec.transition = Matrix(c, c, 0.0);
  for (std::size_t a = 0; a < c; ++a) {
    if (c == 1) {
      spec.transition(a, a) = 1.0;
      continue;
    }
    const double leave = 1.0 - stay;
    spec.transition(a, a) = stay;
    if (c == 2) {
      spec.transition(a, 1 - a) = leave;
      continue;
    }
    const std::size_t next = (a + 1) % c;
    const std::size_t prev = (a + c - 1) % c;
    const std::size_t rest = c - 3;
    const double rest_share = rest > 0 ? 0.1 : 0.0;
    spec.transition(a, next) += leave * (rest > 0 ? 0.7 : 0.75);
    spec.transition(a, prev) += leave * (rest > 0 ? 0.2 : 0.25);
    for (std::size_t b = 0; b < c; ++b)
      if (b != a && b != next && b != prev)
        spec.transition(a, b) += leave * rest_share / static_cast<double>(rest);
  }
  Rng rng(derive_seed(seed, 0xE111));
  spec.emission_mean = Matrix(c, d);
  spec.emission_std = Matrix(c, d, noise_std);
  for (auto& m : spec.emission_mean.data()) m = -1.5 + 3.0 * rng.uniform();
  for (std::size_t j = 0; j < d; ++j) spec.channel_names.push_back("ch" + std::to_string(j));
  return spec;
}

inline std::vector<WellLog> synth_wells(const SynthSpec& spec, int num_wells, int length) {
  spec.validate();
  require(num_wells >= 0 && length >= 1, ErrorCode::InvalidArgument, "invalid well count or length");
  const auto c = static_cast<std::size_t>(spec.num_classes);
  const auto d = spec.emission_mean.cols();
  std::vector<WellLog> wells;
  for (int i = 0; i < num_wells; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    WellLog w;
    char id[32];
    std::snprintf(id, sizeof id, "W%03d", i);
    w.well_id = id;
    w.interval = spec.interval;
    for (std::size_t j = 0; j < d; ++j)
      w.channels.push_back(
          {spec.channel_names.empty() ? "ch" + std::to_string(j) : spec.channel_names[j], "",
           Transform::Linear});
    const auto t = static_cast<std::size_t>(length);
    w.values = Matrix(t, d);
    w.labels = Labels(t);
    std::size_t state = rng.below(c);
    for (std::size_t r = 0; r < t; ++r) {
      if (r > 0) state = rng.categorical(spec.transition.row(state));
      (*w.labels)[r] = static_cast<ClassId>(state);
      w.depths.push_back(1000.0 + static_cast<double>(r) * spec.interval);
      for (std::size_t j = 0; j < d; ++j)
        w.values(r, j) = spec.emission_mean(state, j) + spec.emission_std(state, j) * rng.normal();
    }
    wells.push_back(std::move(w));
  }
  return wells;
}

}  // namespace lithoflow
