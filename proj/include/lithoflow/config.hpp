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

#include <charconv>
#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "lithoflow/magrpo.hpp"
#include "lithoflow/perception.hpp"
#include "lithoflow/reasoning.hpp"
#include "lithoflow/rewards.hpp"
#include "lithoflow/stacking.hpp"
#include "lithoflow/welldata.hpp"
#include "lithoflow/workflow.hpp"

namespace lithoflow {

// Every recognized key with its default. Keys are `section.name`.
inline const std::map<std::string, std::string>& config_defaults() {
  static const std::map<std::string, std::string> defaults = {
      {"run.seed", "42"},
      {"run.out_dir", "out"},
      {"run.id", ""},

      {"data.path", ""},  // empty: <out_dir>/synth.csv
      {"data.well_column", "well_id"},
      {"data.depth_column", "depth"},
      {"data.label_column", "label"},
      {"data.channels", ""},
      {"data.log10_channels", ""},
      {"data.num_classes", "0"},  // 0: inferred from labels
      {"data.test_fraction", "0.25"},
      {"data.default_interval", "0.5"},

      {"synth.num_wells", "8"},
      {"synth.length", "400"},
      {"synth.num_classes", "5"},
      {"synth.num_channels", "4"},
      {"synth.stay", "0.97"},
      {"synth.noise_std", "1.5"},
      {"synth.interval", "0.5"},

      {"preprocess.window_len", "16"},
      {"preprocess.stride", "4"},
      {"preprocess.test_stride", "16"},
      {"preprocess.max_gap_m", "2.0"},
      {"preprocess.bounds", ""},  // channel:min:max, comma separated

      {"retrieval.k", "8"},
      {"retrieval.w_euclidean", "0.3333333333333333"},
      {"retrieval.w_manhattan", "0.3333333333333333"},
      {"retrieval.w_cosine", "0.3333333333333334"},
      {"retrieval.exclude_same_well", "true"},

      {"tools.slope_tol", "0.05"},
      {"tools.tau", "0.15"},
      {"tools.lambda", "1.0"},
      {"tools.theta", "0.05"},

      {"reflector.gap", "0.15"},
      {"reflector.planner", "heuristic"},

      {"reasoner.backend", "stub"},
      {"reasoner.alpha", "0.5"},
      {"reasoner.temperature", "0.0"},
      {"reasoner.trend_lift", "0.0"},
      {"reasoner.model", "default"},
      {"reasoner.url_env", "LITHOFLOW_REASONER_URL"},
      {"reasoner.key_env", "LITHOFLOW_REASONER_KEY"},
      {"reasoner.timeout_s", "30"},
      {"reasoner.retries", "1"},

      {"predictor.kind", "logistic"},
      {"predictor.k", "5"},
      {"predictor.lr", "0.05"},
      {"predictor.epochs", "8"},
      {"predictor.l2", "0.0001"},
      {"predictor.batch_size", "32"},

      {"stacking.folds", "5"},

      {"rewards.eta1", "0.5"},
      {"rewards.eta2", "1.0"},
      {"rewards.eta3", "1.0"},

      {"metrics.min_thickness_factor", "3"},

      {"magrpo.group_size", "8"},
      {"magrpo.beta", "0.04"},
      {"magrpo.eps_low", "0.1"},
      {"magrpo.eps_high", "0.3"},
      {"magrpo.adv_eps", "1e-8"},
      {"magrpo.learning_rate", "0.5"},
      {"magrpo.iterations", "1000"},
      {"magrpo.temperature", "1.0"},
      {"magrpo.mode", "both"},
      {"magrpo.seeds", "10"},
      {"magrpo.num_contexts", "8"},
      {"magrpo.num_actions", "4"},
      {"magrpo.target_seed", "20260101"},
  };
  return defaults;
}

struct SynthParams {
  int num_wells = 8;
  int length = 400;
  int num_classes = 5;
  int num_channels = 4;
  double stay = 0.97;
  double noise_std = 1.5;
  double interval = 0.5;
};

struct RunConfig {
  std::map<std::string, std::string> values;  // fully resolved key table

  std::uint64_t seed = 42;
  std::filesystem::path out_dir = "out";
  std::string run_id;

  std::filesystem::path data_path;
  CsvSchema schema;
  int num_classes = 0;
  double test_fraction = 0.25;

  SynthParams synth;
  PreprocessSpec preprocess;
  MetricWeights weights;
  WorkflowParams params;
  double lambda = 1.0;
  std::string planner = "heuristic";

  std::string backend = "stub";
  StubConfig stub;
  RemoteConfig remote;
  std::string url_env;
  std::string key_env;

  PredictorSpec predictor;
  int folds = 5;
  PenaltyMap eta = default_eta();
  double min_thickness_factor = 3.0;

  OptimConfig optim;
  std::string toy_mode = "both";
  int toy_seeds = 10;
  int toy_contexts = 8;
  int toy_actions = 4;
  std::uint64_t toy_target_seed = 20260101;

  // Stable digest of the resolved key table; the output location is not
  // part of a run's identity.
  std::string hash() const {
    Fnv1a h;
    for (const auto& [k, v] : values) {
      if (k == "run.out_dir") continue;
      h.add(k);
      h.add(v);
    }
    return h.hex();
  }
  std::string render() const {
    std::ostringstream out;
    for (const auto& [k, v] : values) out << k << " = " << v << '\n';
    return out.str();
  }
};

namespace detail {

inline bool parse_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  fail(ErrorCode::Config, key + ": expected a boolean, got '" + s + "'");
}

inline std::vector<std::string> parse_list(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& item : split(s, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(std::move(t));
  }
  return out;
}

inline void set_value(std::map<std::string, std::string>& values, const std::string& key, const std::string& value) {
  if (!config_defaults().count(key)) fail(ErrorCode::Config, "unknown config key: " + key);
  values[key] = value;
}

}  // namespace detail

// Build the typed configuration; numeric ranges are enforced here.
inline RunConfig resolve_config(std::map<std::string, std::string> values) {
  RunConfig cfg;
  auto get = [&](const std::string& k) -> const std::string& { return values.at(k); };
  auto num = [&](const std::string& k) {
    try {
      return parse_double(get(k), k);
    } catch (const Error& e) {
      fail(ErrorCode::Config, e.what());
    }
  };
  auto integer = [&](const std::string& k) {
    try {
      return parse_int(get(k), k);
    } catch (const Error& e) {
      fail(ErrorCode::Config, e.what());
    }
  };
  auto u64 = [&](const std::string& k) {
    const auto& v = get(k);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    require(ec == std::errc() && ptr == v.data() + v.size(), ErrorCode::Config,
            k + ": expected an unsigned integer, got '" + v + "'");
    return out;
  };
  auto range = [&](const std::string& k, double lo, double hi) {
    const double v = num(k);
    require(v >= lo && v <= hi, ErrorCode::Config,
            k + " = " + get(k) + " outside [" + format_double(lo) + ", " + format_double(hi) + "]");
    return v;
  };
  auto irange = [&](const std::string& k, int lo, int hi) {
    const int v = integer(k);
    require(v >= lo && v <= hi, ErrorCode::Config,
            k + " = " + get(k) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return v;
  };

  cfg.seed = u64("run.seed");
  cfg.out_dir = get("run.out_dir");
  cfg.run_id = get("run.id");

  cfg.data_path = get("data.path");
  cfg.schema.well_column = get("data.well_column");
  cfg.schema.depth_column = get("data.depth_column");
  cfg.schema.label_column = get("data.label_column");
  cfg.schema.channels = detail::parse_list(get("data.channels"));
  for (auto& c : detail::parse_list(get("data.log10_channels"))) cfg.schema.log10_channels.insert(c);
  cfg.schema.default_interval = range("data.default_interval", 1e-6, 1e6);
  cfg.num_classes = irange("data.num_classes", 0, 1000);
  cfg.test_fraction = range("data.test_fraction", 0.0, 0.9);

  cfg.synth.num_wells = irange("synth.num_wells", 1, 100000);
  cfg.synth.length = irange("synth.length", 1, 10000000);
  cfg.synth.num_classes = irange("synth.num_classes", 2, 1000);
  cfg.synth.num_channels = irange("synth.num_channels", 1, 1000);
  cfg.synth.stay = range("synth.stay", 1e-9, 1.0);
  cfg.synth.noise_std = range("synth.noise_std", 1e-9, 1e6);
  cfg.synth.interval = range("synth.interval", 1e-6, 1e6);

  cfg.preprocess.window_len = irange("preprocess.window_len", 2, 100000);
  cfg.preprocess.stride = irange("preprocess.stride", 1, 100000);
  cfg.preprocess.test_stride = irange("preprocess.test_stride", 1, 100000);
  cfg.preprocess.max_gap_m = range("preprocess.max_gap_m", 1e-9, 1e9);
  for (const auto& b : detail::parse_list(get("preprocess.bounds"))) {
    const auto parts = split(b, ':');
    require(parts.size() == 3, ErrorCode::Config, "preprocess.bounds entry must be channel:min:max: " + b);
    ChannelBounds cb{parse_double(trim(parts[1]), "bounds"), parse_double(trim(parts[2]), "bounds")};
    require(cb.min <= cb.max, ErrorCode::Config, "preprocess.bounds: min > max for " + b);
    cfg.preprocess.physical_bounds[trim(parts[0])] = cb;
  }

  cfg.params.k = irange("retrieval.k", 1, 100000);
  cfg.weights = {range("retrieval.w_euclidean", 0, 1), range("retrieval.w_manhattan", 0, 1),
                 range("retrieval.w_cosine", 0, 1)};
  try {
    cfg.weights.validate();
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
  cfg.params.exclude_same_well = detail::parse_bool(get("retrieval.exclude_same_well"), "retrieval.exclude_same_well");
  cfg.params.slope_tol = range("tools.slope_tol", 0.0, 1e6);
  cfg.params.tau = range("tools.tau", 0.0, 1.0);
  cfg.lambda = range("tools.lambda", 1e-12, 1e6);
  cfg.params.theta = range("tools.theta", 1e-12, 1.0 - 1e-12);
  cfg.params.reflector_gap = range("reflector.gap", 0.0, 1.0);
  cfg.planner = get("reflector.planner");
  require(cfg.planner == "heuristic" || cfg.planner == "fixed", ErrorCode::Config,
          "reflector.planner must be heuristic or fixed");

  cfg.backend = get("reasoner.backend");
  require(cfg.backend == "stub" || cfg.backend == "remote", ErrorCode::Config,
          "reasoner.backend must be stub or remote");
  cfg.stub.alpha = range("reasoner.alpha", 0.0, 1.0);
  cfg.stub.temperature = range("reasoner.temperature", 0.0, 100.0);
  cfg.stub.trend_lift = range("reasoner.trend_lift", 0.0, 1.0);
  cfg.stub.seed = cfg.seed;
  cfg.remote.model = get("reasoner.model");
  cfg.remote.temperature = cfg.stub.temperature;
  cfg.remote.timeout_s = irange("reasoner.timeout_s", 1, 3600);
  cfg.remote.retries = irange("reasoner.retries", 0, 10);
  cfg.url_env = get("reasoner.url_env");
  cfg.key_env = get("reasoner.key_env");

  try {
    cfg.predictor.kind = predictor_kind_from_string(get("predictor.kind"));
  } catch (const Error& e) {
    fail(ErrorCode::Config, e.what());
  }
  cfg.predictor.k = irange("predictor.k", 1, 100000);
  cfg.predictor.lr = range("predictor.lr", 1e-12, 100.0);
  cfg.predictor.epochs = irange("predictor.epochs", 1, 100000);
  cfg.predictor.l2 = range("predictor.l2", 0.0, 100.0);
  cfg.predictor.batch_size = irange("predictor.batch_size", 1, 1000000);
  cfg.predictor.seed = cfg.seed;
  cfg.folds = irange("stacking.folds", 2, 1000);

  cfg.eta = {{1, range("rewards.eta1", 0.0, 100.0)},
             {2, range("rewards.eta2", 0.0, 100.0)},
             {3, range("rewards.eta3", 0.0, 100.0)}};
  cfg.min_thickness_factor = range("metrics.min_thickness_factor", 1e-9, 1e6);

  cfg.optim.group_size = irange("magrpo.group_size", 2, 100000);
  cfg.optim.beta = range("magrpo.beta", 0.0, 1e6);
  cfg.optim.eps_low = range("magrpo.eps_low", 1e-9, 1.0 - 1e-9);
  cfg.optim.eps_high = range("magrpo.eps_high", 1e-9, 1.0 - 1e-9);
  cfg.optim.adv_eps = range("magrpo.adv_eps", 0.0, 1.0);
  cfg.optim.learning_rate = range("magrpo.learning_rate", 0.0, 1e6);
  cfg.optim.iterations = irange("magrpo.iterations", 1, 10000000);
  cfg.optim.temperature = range("magrpo.temperature", 1e-9, 1e6);
  cfg.optim.seed = cfg.seed;
  cfg.toy_mode = get("magrpo.mode");
  require(cfg.toy_mode == "both" || cfg.toy_mode == "magrpo" || cfg.toy_mode == "grpo", ErrorCode::Config,
          "magrpo.mode must be both, magrpo or grpo");
  cfg.toy_seeds = irange("magrpo.seeds", 1, 100000);
  cfg.toy_contexts = irange("magrpo.num_contexts", 2, 100000);
  cfg.toy_actions = irange("magrpo.num_actions", 2, 100000);
  cfg.toy_target_seed = u64("magrpo.target_seed");

  cfg.values = std::move(values);
  return cfg;
}

// Defaults, then the ini text, then `section.key=value` overrides.
inline RunConfig load_config_text(const std::string& ini_text, const std::vector<std::string>& overrides = {}) {
  auto values = config_defaults();
  if (!trim(ini_text).empty()) {
    boost::property_tree::ptree tree;
    std::istringstream in(ini_text);
    try {
      boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
      fail(ErrorCode::Config, std::string("config parse error: ") + e.what());
    }
    for (const auto& [section, body] : tree) {
      if (body.empty()) fail(ErrorCode::Config, "config entry outside a section: " + section);
      for (const auto& [key, leaf] : body) detail::set_value(values, section + "." + key, trim(leaf.data()));
    }
  }
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    require(eq != std::string::npos, ErrorCode::Config, "override must be section.key=value: " + o);
    detail::set_value(values, trim(o.substr(0, eq)), trim(o.substr(eq + 1)));
  }
  return resolve_config(std::move(values));
}

inline RunConfig load_config(const std::optional<std::filesystem::path>& path,
                             const std::vector<std::string>& overrides = {}) {
  std::string text;
  if (path) {
    if (!std::filesystem::exists(*path)) fail(ErrorCode::Config, "config file not found: " + path->string());
    text = read_file(*path);
  }
  return load_config_text(text, overrides);
}

}  // namespace lithoflow
