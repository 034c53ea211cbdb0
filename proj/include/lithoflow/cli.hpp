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
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lithoflow/config.hpp"
#include "lithoflow/metrics.hpp"
#include "lithoflow/remote_reasoner.hpp"

namespace lithoflow {

namespace fs = std::filesystem;

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitMissingArtifact = 3;

namespace cli {

struct Paths {
  fs::path out;
  fs::path synth() const { return out / "synth.csv"; }
  fs::path predictor() const { return out / "predictor.json"; }
  fs::path oof() const { return out / "oof.csv"; }
  fs::path index() const { return out / "index.txt"; }
  fs::path transition() const { return out / "transition.txt"; }
  fs::path predictions() const { return out / "predictions.csv"; }
  fs::path predictor_predictions() const { return out / "predictions_predictor.csv"; }
  fs::path trajectories() const { return out / "trajectories.jsonl"; }
  fs::path metrics() const { return out / "metrics.csv"; }
  fs::path confusion() const { return out / "confusion.csv"; }
  fs::path rewards() const { return out / "rewards.csv"; }
  fs::path curve() const { return out / "learning_curve.csv"; }
};

// Artifacts written by one command, recorded in its manifest.
class Session {
 public:
  Session(std::string command, RunConfig cfg) : command_(std::move(command)), cfg_(std::move(cfg)) {
    paths_.out = cfg_.out_dir;
    fs::create_directories(paths_.out);
  }

  const RunConfig& cfg() const { return cfg_; }
  const Paths& paths() const { return paths_; }
  std::string run_id() const { return cfg_.run_id.empty() ? "run-" + cfg_.hash() : cfg_.run_id; }

  void write(const fs::path& path, const std::string& content) {
    write_file_atomic(path, content);
    artifacts_.emplace_back(path.filename().string(), digest(content));
  }

  void finish() const {
    std::ostringstream m;
    m << "command " << command_ << "\nrun_id " << run_id() << "\nconfig_hash " << cfg_.hash() << "\nseed "
      << cfg_.seed << "\n[artifacts]\n";
    for (const auto& [name, dig] : artifacts_) m << name << ' ' << dig << '\n';
    m << "[config]\n" << cfg_.render();
    write_file_atomic(paths_.out / ("manifest_" + command_ + ".txt"), m.str());
  }

 private:
  std::string command_;
  RunConfig cfg_;
  Paths paths_;
  std::vector<std::pair<std::string, std::string>> artifacts_;
};

inline void require_artifact(const fs::path& p, const std::string& producer) {
  if (!fs::exists(p))
    fail(ErrorCode::MissingArtifact, p.string() + " not found (run `" + producer + "` first)");
}

// Cleaned, split and normalized data shared by the pipeline commands.
struct Prepared {
  std::vector<WellLog> train;  // normalized segments
  std::vector<WellLog> test;
  ChannelStats stats;
  std::size_t num_classes = 0;
  std::vector<std::string> train_wells;
  std::vector<std::string> test_wells;
  std::vector<std::string> channel_names;
};

inline Prepared prepare(const Session& s) {
  const auto& cfg = s.cfg();
  const fs::path data = cfg.data_path.empty() ? s.paths().synth() : cfg.data_path;
  require_artifact(data, "synth");
  auto schema = cfg.schema;
  const auto wells = parse_csv(data, schema);
  require(!wells.empty(), ErrorCode::EmptyInput, "no wells in " + data.string());
  for (const auto& w : wells)
    require(w.labels.has_value(), ErrorCode::MissingColumn, "input data has no label column");

  std::vector<std::string> ids;
  for (const auto& w : wells) ids.push_back(w.well_id);
  Rng rng(derive_seed(cfg.seed, 0x5B117));
  auto shuffled = ids;
  rng.shuffle(shuffled);
  std::size_t n_test = 0;
  if (cfg.test_fraction > 0.0 && ids.size() >= 2)
    n_test = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(ids.size()))), 1,
        ids.size() - 1);
  std::set<std::string> test_ids(shuffled.begin(), shuffled.begin() + static_cast<std::ptrdiff_t>(n_test));

  Prepared p;
  std::vector<WellLog> train_raw, test_raw;
  ClassId top = 0;
  for (const auto& w : wells) {
    for (ClassId c : *w.labels) top = std::max(top, c);
    auto segs = clean(w, cfg.preprocess);
    auto& dst = test_ids.count(w.well_id) ? test_raw : train_raw;
    (test_ids.count(w.well_id) ? p.test_wells : p.train_wells).push_back(w.well_id);
    for (auto& seg : segs) dst.push_back(std::move(seg));
  }
  require(!train_raw.empty(), ErrorCode::EmptyInput, "no training data after cleaning");
  if (test_raw.empty()) test_raw = train_raw;
  p.stats = compute_stats(train_raw);
  for (const auto& w : train_raw) p.train.push_back(normalize(w, p.stats));
  for (const auto& w : test_raw) p.test.push_back(normalize(w, p.stats));
  p.num_classes = cfg.num_classes > 0 ? static_cast<std::size_t>(cfg.num_classes) : static_cast<std::size_t>(top) + 1;
  for (const auto& c : wells.front().channels) p.channel_names.push_back(c.name);
  return p;
}

inline std::vector<Window> train_windows(const Prepared& p, const RunConfig& cfg) {
  auto w = window_all(p.train, cfg.preprocess.window_len, cfg.preprocess.stride);
  require(!w.empty(), ErrorCode::EmptyInput, "no training windows (wells shorter than the window length?)");
  return w;
}

inline TransitionModel fit_train_transition(const Prepared& p, const RunConfig& cfg) {
  std::vector<Labels> seqs;
  for (const auto& w : p.train) seqs.push_back(*w.labels);
  return fit_transition(seqs, p.num_classes, cfg.lambda);
}

// Non-overlapping windows with a tail window ending at T, argmax labels.
inline Labels predict_well(const Predictor& pred, const WellLog& well, std::size_t len) {
  Labels out;
  std::size_t covered = 0;
  while (covered < well.length()) {
    const std::size_t start = covered + len <= well.length() ? covered : well.length() - len;
    const auto labels = pred.predict_labels(extract_window(well, start, len));
    for (std::size_t u = covered - start; u < len; ++u) out.push_back(labels[u]);
    covered = start + len;
  }
  return out;
}

inline void append_prediction_rows(std::ostringstream& out, const WellLog& well, const Labels& pred) {
  for (std::size_t r = 0; r < pred.size(); ++r) {
    out << well.well_id << ',' << format_double(well.depths[r]) << ',' << pred[r];
    if (well.labels) out << ',' << (*well.labels)[r];
    out << '\n';
  }
}

struct PredictionTable {
  std::vector<std::string> wells;
  std::vector<double> depths;
  Labels pred;
  Labels truth;
};

inline PredictionTable read_predictions(const fs::path& path) {
  const auto text = read_file(path);
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  const auto header = split(trim(line), ',');
  require(header.size() >= 3 && header[0] == "well_id" && header[1] == "depth" && header[2] == "pred_label",
          ErrorCode::ParseError, path.string() + ": unexpected prediction header");
  require(header.size() == 4 && header[3] == "true_label", ErrorCode::MissingColumn,
          path.string() + ": predictions carry no true_label column to evaluate against");
  PredictionTable t;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const auto f = split(trim(line), ',');
    require(f.size() == 4, ErrorCode::ParseError, path.string() + ": malformed row");
    t.wells.push_back(f[0]);
    t.depths.push_back(parse_double(f[1], "depth"));
    t.pred.push_back(parse_int(f[2], "pred_label"));
    t.truth.push_back(parse_int(f[3], "true_label"));
  }
  require(!t.pred.empty(), ErrorCode::EmptyInput, path.string() + ": no prediction rows");
  return t;
}

// Sequences split at well changes and depth jumps, with the median step.
inline std::pair<std::vector<Labels>, double> prediction_sequences(const PredictionTable& t) {
  std::vector<double> steps;
  for (std::size_t i = 1; i < t.pred.size(); ++i)
    if (t.wells[i] == t.wells[i - 1]) steps.push_back(t.depths[i] - t.depths[i - 1]);
  double interval = 1.0;
  if (!steps.empty()) {
    auto sorted = steps;
    std::sort(sorted.begin(), sorted.end());
    interval = sorted[sorted.size() / 2];
  }
  std::vector<Labels> seqs;
  for (std::size_t i = 0; i < t.pred.size(); ++i) {
    const bool brk = i == 0 || t.wells[i] != t.wells[i - 1] || t.depths[i] - t.depths[i - 1] > 1.5 * interval;
    if (brk) seqs.emplace_back();
    seqs.back().push_back(t.pred[i]);
  }
  return {seqs, interval};
}

// ---------------------------------------------------------------------------
// Commands

inline std::string cmd_synth(Session& s) {
  const auto& c = s.cfg();
  const auto spec = make_synth_spec(c.synth.num_classes, c.synth.num_channels, c.synth.stay, c.synth.noise_std,
                                    c.synth.interval, c.seed);
  const auto wells = synth_wells(spec, c.synth.num_wells, c.synth.length);
  s.write(s.paths().synth(), to_csv(wells));
  return "synth: wrote " + std::to_string(wells.size()) + " wells x " + std::to_string(c.synth.length) +
         " samples to " + s.paths().synth().string();
}

inline std::string cmd_ingest(Session& s) {
  const auto& cfg = s.cfg();
  const fs::path data = cfg.data_path.empty() ? s.paths().synth() : cfg.data_path;
  require_artifact(data, "synth");
  const auto wells = parse_csv(data, cfg.schema);
  std::ostringstream out;
  out << "well_id,rows,channels,missing_cells,interval,labeled\n";
  std::size_t rows = 0;
  for (const auto& w : wells) {
    std::size_t miss = 0;
    for (auto m : w.missing) miss += m;
    rows += w.length();
    out << w.well_id << ',' << w.length() << ',' << w.num_channels() << ',' << miss << ','
        << format_double(w.interval) << ',' << (w.labels ? 1 : 0) << '\n';
  }
  s.write(s.paths().out / "ingest.csv", out.str());
  return "ingest: " + std::to_string(wells.size()) + " wells, " + std::to_string(rows) + " rows";
}

inline std::string cmd_preprocess(Session& s) {
  const auto p = prepare(s);
  std::ostringstream stats;
  stats << "channel,mean,std\n";
  for (const auto& [name, st] : p.stats) stats << name << ',' << format_double(st.mean) << ',' << format_double(st.stddev) << '\n';
  s.write(s.paths().out / "stats.csv", stats.str());
  std::ostringstream split_csv;
  split_csv << "well_id,role\n";
  for (const auto& w : p.train_wells) split_csv << w << ",train\n";
  for (const auto& w : p.test_wells) split_csv << w << ",test\n";
  s.write(s.paths().out / "split.csv", split_csv.str());
  const auto& pp = s.cfg().preprocess;
  const auto tw = window_all(p.train, pp.window_len, pp.stride);
  const auto ew = window_all(p.test, pp.window_len, pp.test_stride);
  s.write(s.paths().out / "preprocessed_train.csv", to_csv(p.train));
  return "preprocess: " + std::to_string(p.train.size()) + " train segments (" + std::to_string(tw.size()) +
         " windows), " + std::to_string(p.test.size()) + " test segments (" + std::to_string(ew.size()) +
         " windows)";
}

inline std::string cmd_train_predictor(Session& s) {
  const auto p = prepare(s);
  const auto model = train_master(train_windows(p, s.cfg()), s.cfg().predictor, p.num_classes);
  s.write(s.paths().predictor(), to_json(model).dump());
  return std::string("train-predictor: ") + to_string(model.spec.kind) + " fingerprint " + model.fingerprint;
}

inline std::string cmd_stack(Session& s) {
  const auto& cfg = s.cfg();
  const auto p = prepare(s);
  const auto windows = train_windows(p, cfg);
  const int k = std::min<int>(cfg.folds, static_cast<int>(p.train_wells.size()));
  const auto folds = kfold_split(p.train_wells, k, derive_seed(cfg.seed, 0xF01D));
  const auto oof = generate_oof(windows, cfg.predictor, folds, p.num_classes);
  const auto bad = provenance_violations(oof);
  require(bad == 0, ErrorCode::Dependency, "stack: " + std::to_string(bad) + " provenance violations");
  s.write(s.paths().oof(), oof_csv(oof));
  const auto master = train_master(windows, cfg.predictor, p.num_classes, &folds);
  s.write(s.paths().predictor(), to_json(master).dump());
  return "stack: " + std::to_string(oof.records.size()) + " OOF windows over " + std::to_string(k) +
         " folds, 0 provenance violations; master " + master.fingerprint;
}

inline std::string cmd_index(Session& s) {
  const auto& cfg = s.cfg();
  const auto p = prepare(s);
  const auto index = build_index(train_windows(p, cfg), cfg.weights);
  s.write(s.paths().index(), serialize_index(index));
  s.write(s.paths().transition(), serialize_transition(fit_train_transition(p, cfg)));
  return "index: " + std::to_string(index.size()) + " windows, fingerprint " + index.fingerprint;
}

inline std::unique_ptr<Reasoner> make_reasoner(const RunConfig& cfg) {
  if (cfg.backend == "remote") return std::make_unique<RemoteReasoner>(remote_config_from_env(cfg.url_env, cfg.key_env, cfg.remote));
  return std::make_unique<StubReasoner>(cfg.stub);
}

inline std::string cmd_run(Session& s) {
  const auto& cfg = s.cfg();
  const auto p = prepare(s);
  const auto len = static_cast<std::size_t>(cfg.preprocess.window_len);

  std::optional<Predictor> predictor;
  if (fs::exists(s.paths().predictor()))
    predictor = predictor_from_json(nlohmann::json::parse(read_file(s.paths().predictor())));
  std::optional<RetrievalIndex> index;
  if (fs::exists(s.paths().index())) index = deserialize_index(read_file(s.paths().index()));
  const TransitionModel transition = fs::exists(s.paths().transition())
                                         ? deserialize_transition(read_file(s.paths().transition()))
                                         : fit_train_transition(p, cfg);
  const auto reasoner = make_reasoner(cfg);
  static const HeuristicPlanner heuristic;
  static const FixedPlanner fixed;

  WorkflowContext ctx;
  ctx.num_classes = p.num_classes;
  ctx.index = index ? &*index : nullptr;
  if (predictor) ctx.predictor = [&](const Window& w) { return predictor->predict(w); };
  ctx.reasoner = reasoner.get();
  ctx.transition = &transition;
  ctx.planner = cfg.planner == "fixed" ? static_cast<const Planner*>(&fixed) : &heuristic;
  ctx.params = cfg.params;
  ctx.params.channel_names = p.channel_names;
  ctx.seed = cfg.seed;

  std::ostringstream preds, raw;
  preds << "well_id,depth,pred_label,true_label\n";
  raw << "well_id,depth,pred_label,true_label\n";
  std::vector<Trajectory> trajs;
  std::size_t skipped = 0, samples = 0;
  for (const auto& well : p.test) {
    if (well.length() < len) {
      ++skipped;
      continue;
    }
    auto run = run_well(well, ctx, static_cast<int>(len));
    append_prediction_rows(preds, well, run.predictions);
    if (predictor) append_prediction_rows(raw, well, predict_well(*predictor, well, len));
    samples += run.predictions.size();
    for (auto& t : run.trajectories) trajs.push_back(std::move(t));
  }
  require(samples > 0, ErrorCode::EmptyInput, "run: no test segment is as long as the window");
  s.write(s.paths().predictions(), preds.str());
  if (predictor) s.write(s.paths().predictor_predictions(), raw.str());
  s.write(s.paths().trajectories(), trajectory_jsonl(trajs, s.run_id()));
  std::ostringstream msg;
  msg << "run: " << samples << " samples labeled in " << trajs.size() << " windows (index "
      << (index ? "yes" : "no") << ", predictor " << (predictor ? "yes" : "no") << ", reasoner " << reasoner->name()
      << ")";
  if (skipped) msg << "; " << skipped << " segments shorter than the window skipped";
  return msg.str();
}

inline std::string cmd_evaluate(Session& s) {
  const auto& cfg = s.cfg();
  require_artifact(s.paths().predictions(), "run");
  std::ostringstream csv;
  csv << "dataset,precision,recall,f1,fragmentation\n";
  std::ostringstream conf;
  conf << "dataset,true_label,pred_label,count\n";
  std::ostringstream summary;
  auto add = [&](const std::string& name, const fs::path& path) {
    const auto t = read_predictions(path);
    const auto m = weighted_prf(t.pred, t.truth);
    const auto [seqs, interval] = prediction_sequences(t);
    const double frag = fragmentation_rate(seqs, interval, cfg.min_thickness_factor * interval);
    csv << name << ',' << format_fixed(m.precision, 6) << ',' << format_fixed(m.recall, 6) << ','
        << format_fixed(m.f1, 6) << ',' << format_fixed(frag, 6) << '\n';
    for (std::size_t i = 0; i < m.classes.size(); ++i)
      for (std::size_t j = 0; j < m.classes.size(); ++j)
        conf << name << ',' << m.classes[i] << ',' << m.classes[j] << ',' << m.confusion[i][j] << '\n';
    summary << ' ' << name << " f1=" << format_fixed(m.f1, 4) << " frag=" << format_fixed(frag, 4);
  };
  add("workflow", s.paths().predictions());
  if (fs::exists(s.paths().predictor_predictions())) add("predictor", s.paths().predictor_predictions());
  s.write(s.paths().metrics(), csv.str());
  s.write(s.paths().confusion(), conf.str());
  return "evaluate:" + summary.str();
}

inline std::string cmd_rewards_audit(Session& s) {
  const auto& cfg = s.cfg();
  require_artifact(s.paths().trajectories(), "run");
  std::string run_id;
  const auto trajs = parse_trajectory_jsonl(read_file(s.paths().trajectories()), &run_id);
  const auto p = prepare(s);
  const auto len = static_cast<std::size_t>(cfg.preprocess.window_len);
  std::map<std::tuple<std::string, int, std::size_t>, Window> windows;
  for (const auto& well : p.test) {
    if (well.length() < len) continue;
    std::size_t covered = 0;
    while (covered < well.length()) {
      const std::size_t start = covered + len <= well.length() ? covered : well.length() - len;
      windows.emplace(std::make_tuple(well.well_id, well.segment, start), extract_window(well, start, len));
      covered = start + len;
    }
  }
  std::vector<Trajectory> rewarded;
  for (const auto& t : trajs) {
    const auto it = windows.find({t.well_id, t.segment, t.window_start});
    require(it != windows.end(), ErrorCode::Dependency,
            "rewards-audit: trajectory window " + t.well_id + "@" + std::to_string(t.window_start) +
                " not found in the configured test data");
    const auto reference = narrate(it->second, cfg.params.slope_tol, p.channel_names);
    rewarded.push_back(attach_rewards(t, *it->second.labels, reference, cfg.eta));
  }
  s.write(s.paths().rewards(), reward_audit_csv(rewarded, run_id));
  std::array<double, 3> sum{};
  std::array<int, 3> n{};
  for (const auto& t : rewarded)
    for (const auto& e : t.events)
      if (e.reward) {
        sum[static_cast<std::size_t>(e.module)] += *e.reward;
        ++n[static_cast<std::size_t>(e.module)];
      }
  std::ostringstream msg;
  msg << "rewards-audit: " << rewarded.size() << " trajectories;";
  for (Module m : {Module::Trend, Module::Reasoning, Module::Reflector}) {
    const auto i = static_cast<std::size_t>(m);
    msg << ' ' << to_string(m) << '=' << (n[i] ? format_fixed(sum[i] / n[i], 4) : std::string("unset"));
  }
  return msg.str();
}

inline std::string cmd_magrpo_toy(Session& s) {
  const auto& cfg = s.cfg();
  const auto task = canonical_toy_task(cfg.toy_contexts, cfg.toy_actions, cfg.toy_target_seed);
  std::vector<OptimMode> modes;
  if (cfg.toy_mode != "grpo") modes.push_back(OptimMode::MaGrpo);
  if (cfg.toy_mode != "magrpo") modes.push_back(OptimMode::Grpo);
  std::vector<CurveRecord> all;
  std::ostringstream msg;
  msg << "magrpo-toy:";
  for (OptimMode mode : modes) {
    std::vector<int> hits;
    for (int k = 0; k < cfg.toy_seeds; ++k) {
      OptimConfig oc = cfg.optim;
      oc.mode = mode;
      oc.seed = cfg.seed + static_cast<std::uint64_t>(k);
      const auto res = train_toy(oc, task);
      hits.push_back(iterations_to_fraction(res.curve, 0.9));
      all.insert(all.end(), res.curve.begin(), res.curve.end());
    }
    std::sort(hits.begin(), hits.end());
    const double median = hits.size() % 2 ? hits[hits.size() / 2]
                                          : 0.5 * (hits[hits.size() / 2 - 1] + hits[hits.size() / 2]);
    msg << ' ' << to_string(mode) << " median iterations to 90% = " << format_fixed(median, 1) << ';';
  }
  s.write(s.paths().curve(), curve_csv(all));
  msg << ' ' << all.size() << " curve rows";
  return msg.str();
}

}  // namespace cli

// Runs one subcommand; `args` excludes the program name.
inline int cli_dispatch(const std::vector<std::string>& args, std::ostream& out = std::cout,
                        std::ostream& err = std::cerr) {
  CLI::App app{"lithoflow: well-log lithology labeling workflow"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::vector<std::string> sets;
  std::string toy_mode;
  std::optional<int> toy_seeds;
  std::optional<int> toy_iterations;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Config file (ini)");
    sub->add_option("--seed", seed, "Base seed");
    sub->add_option("--out-dir", out_dir, "Output directory");
    sub->add_option("--set", sets, "Override a config key: section.key=value")->take_all();
  };
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"synth", "Generate synthetic labeled wells"},
      {"ingest", "Parse a well-log CSV and summarize it"},
      {"preprocess", "Clean, split and normalize; write statistics"},
      {"train-predictor", "Train the numerical predictor on training wells"},
      {"stack", "K-fold out-of-fold signals and master predictor"},
      {"index", "Build the retrieval index and transition model"},
      {"run", "Run the workflow over the test wells"},
      {"evaluate", "Weighted P/R/F1 and fragmentation of predictions"},
      {"rewards-audit", "Attach process rewards to logged trajectories"},
      {"magrpo-toy", "Train the toy multi-module policy with MA-GRPO and GRPO"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    common(sub);
    if (name == "magrpo-toy") {
      sub->add_option("--mode", toy_mode, "both, magrpo or grpo");
      sub->add_option("--seeds", toy_seeds, "Number of paired seeds");
      sub->add_option("--iterations", toy_iterations, "Training iterations per seed");
    }
  }

  std::vector<std::string> argv_store{"lithoflow"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error [usage]: " << e.what() << '\n';
    return kExitUsage;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    std::vector<std::string> overrides = sets;
    if (seed) overrides.push_back("run.seed=" + std::to_string(*seed));
    if (!out_dir.empty()) overrides.push_back("run.out_dir=" + out_dir);
    if (!toy_mode.empty()) overrides.push_back("magrpo.mode=" + toy_mode);
    if (toy_seeds) overrides.push_back("magrpo.seeds=" + std::to_string(*toy_seeds));
    if (toy_iterations) overrides.push_back("magrpo.iterations=" + std::to_string(*toy_iterations));
    auto cfg = load_config(config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path), overrides);
    cli::Session session(command, std::move(cfg));
    std::string summary;
    if (command == "synth") summary = cli::cmd_synth(session);
    else if (command == "ingest") summary = cli::cmd_ingest(session);
    else if (command == "preprocess") summary = cli::cmd_preprocess(session);
    else if (command == "train-predictor") summary = cli::cmd_train_predictor(session);
    else if (command == "stack") summary = cli::cmd_stack(session);
    else if (command == "index") summary = cli::cmd_index(session);
    else if (command == "run") summary = cli::cmd_run(session);
    else if (command == "evaluate") summary = cli::cmd_evaluate(session);
    else if (command == "rewards-audit") summary = cli::cmd_rewards_audit(session);
    else summary = cli::cmd_magrpo_toy(session);
    session.finish();
    out << summary << '\n';
    return kExitOk;
  } catch (const Error& e) {
    err << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    if (e.code() == ErrorCode::MissingArtifact) return kExitMissingArtifact;
    if (e.code() == ErrorCode::Config) return kExitUsage;
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error [internal]: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace lithoflow
