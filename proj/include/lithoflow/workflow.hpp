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

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lithoflow/analysis.hpp"
#include "lithoflow/perception.hpp"
#include "lithoflow/reasoning.hpp"
#include "lithoflow/welldata.hpp"

namespace lithoflow {

using Json = nlohmann::json;

enum class Tool { Retrieve, Narrate, Vote, Interpret, Reason, ScanConflict, Validate };

inline const char* to_string(Tool t) {
  switch (t) {
    case Tool::Retrieve: return "retrieve";
    case Tool::Narrate: return "narrate";
    case Tool::Vote: return "vote";
    case Tool::Interpret: return "interpret";
    case Tool::Reason: return "reason";
    case Tool::ScanConflict: return "scan_conflict";
    case Tool::Validate: return "validate";
  }
  return "?";
}

inline bool produces_candidate(Tool t) {
  return t == Tool::Vote || t == Tool::Interpret || t == Tool::Reason;
}

struct ToolAction {
  Tool tool = Tool::Narrate;
  Json args = Json::object();
};

struct Plan {
  std::vector<ToolAction> actions;
  std::string rationale;

  bool contains(Tool t) const {
    return std::any_of(actions.begin(), actions.end(), [t](const auto& a) { return a.tool == t; });
  }
  std::vector<Tool> tools() const {
    std::vector<Tool> out;
    for (const auto& a : actions) out.push_back(a.tool);
    return out;
  }
};

// Checks ordering and argument schemas; throws ErrorCode::Dependency.
inline void validate_plan(const Plan& plan) {
  require(!plan.actions.empty(), ErrorCode::Dependency, "plan is empty");
  bool retrieved = false;
  int candidates = 0;
  for (const auto& a : plan.actions) {
    const std::string name = to_string(a.tool);
    auto positive = [&](const char* key) {
      if (a.args.contains(key))
        require(a.args[key].is_number() && a.args[key].get<double>() > 0.0, ErrorCode::Dependency,
                name + ": argument " + key + " must be positive");
    };
    switch (a.tool) {
      case Tool::Retrieve: positive("k"); retrieved = true; break;
      case Tool::Narrate: positive("slope_tol"); break;
      case Tool::Vote:
        require(retrieved, ErrorCode::Dependency, "vote scheduled before retrieve");
        break;
      case Tool::Interpret: positive("tau"); break;
      case Tool::Reason: break;
      case Tool::ScanConflict:
        require(candidates >= 2, ErrorCode::Dependency,
                "scan_conflict needs two candidate sources scheduled before it");
        break;
      case Tool::Validate:
        positive("theta");
        require(candidates >= 1, ErrorCode::Dependency,
                "validate needs a candidate prediction scheduled before it");
        break;
    }
    if (produces_candidate(a.tool)) ++candidates;
  }
}

struct WindowStats {
  std::vector<double> channel_std;
  bool depth_gap = false;
};

inline WindowStats window_stats(const Window& w) {
  WindowStats s;
  for (std::size_t c = 0; c < w.num_channels(); ++c) {
    const auto col = w.values.column(c);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= static_cast<double>(col.size());
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    s.channel_std.push_back(std::sqrt(ss / static_cast<double>(col.size())));
  }
  if (w.depths.size() >= 3) {
    std::vector<double> steps;
    for (std::size_t i = 1; i < w.depths.size(); ++i) steps.push_back(w.depths[i] - w.depths[i - 1]);
    auto sorted = steps;
    std::sort(sorted.begin(), sorted.end());
    const double median = sorted[sorted.size() / 2];
    s.depth_gap = std::any_of(steps.begin(), steps.end(), [&](double d) { return d > 1.5 * median; });
  }
  return s;
}

struct ContextFlags {
  bool has_index = false;
  bool has_predictor = false;
  bool has_transition_model = false;
};

class Planner {
 public:
  virtual ~Planner() = default;
  virtual Plan plan(const WindowStats& stats, const ContextFlags& flags) const = 0;
};

// Rule table: narrate always; retrieve + vote with an index; interpret with
// a numerical predictor; reason always; scan_conflict with two or more
// candidate sources; validate with a transition model.
class HeuristicPlanner final : public Planner {
 public:
  Plan plan(const WindowStats& stats, const ContextFlags& flags) const override {
    Plan p;
    p.actions.push_back({Tool::Narrate});
    if (flags.has_index) {
      p.actions.push_back({Tool::Retrieve});
      p.actions.push_back({Tool::Vote});
    }
    if (flags.has_predictor) p.actions.push_back({Tool::Interpret});
    p.actions.push_back({Tool::Reason});
    const int sources = 1 + int(flags.has_index) + int(flags.has_predictor);
    if (sources >= 2) p.actions.push_back({Tool::ScanConflict});
    if (flags.has_transition_model) p.actions.push_back({Tool::Validate});

    double max_std = 0.0;
    for (double s : stats.channel_std) max_std = std::max(max_std, s);
    std::ostringstream why;
    why << "max channel std " << format_fixed(max_std, 3) << (stats.depth_gap ? ", depth gap present" : ", continuous depth")
        << "; " << sources << " candidate source(s) available";
    p.rationale = why.str();
    validate_plan(p);
    return p;
  }
};

// Every tool, regardless of context; missing resources are skipped at run time.
class FixedPlanner final : public Planner {
 public:
  Plan plan(const WindowStats&, const ContextFlags&) const override {
    Plan p;
    for (Tool t : {Tool::Narrate, Tool::Retrieve, Tool::Vote, Tool::Interpret, Tool::Reason,
                   Tool::ScanConflict, Tool::Validate})
      p.actions.push_back({t});
    p.rationale = "fixed full plan";
    return p;
  }
};

// ---------------------------------------------------------------------------
// Context, evidence, trajectories

using ProbabilitySource = std::function<std::vector<ClassDistribution>(const Window&)>;

struct WorkflowParams {
  int k = 8;
  double slope_tol = 0.05;
  double tau = 0.15;
  double theta = 0.05;
  double reflector_gap = 0.15;
  bool exclude_same_well = true;
  std::vector<std::string> channel_names;
};

struct WorkflowContext {
  std::size_t num_classes = 0;
  const RetrievalIndex* index = nullptr;
  ProbabilitySource predictor;
  const Reasoner* reasoner = nullptr;
  const TransitionModel* transition = nullptr;
  const Planner* planner = nullptr;  // defaults to HeuristicPlanner
  WorkflowParams params;
  std::uint64_t seed = 0;
  std::optional<ClassId> previous_label;  // last prediction of the preceding window

  ContextFlags flags() const {
    return {index != nullptr, static_cast<bool>(predictor), transition != nullptr};
  }
};

struct EvidenceBundle {
  std::size_t length = 0;
  std::size_t num_classes = 0;
  std::optional<TrendNarrative> narrative;
  std::optional<Neighborhood> neighborhood;
  std::optional<std::vector<ClassDistribution>> p_nbr;
  std::optional<std::vector<ClassDistribution>> p_nn;
  std::optional<std::vector<Interpretation>> interpretations;
  std::optional<ReasonerResponse> reasoning;
  std::optional<ConflictReport> conflict;
  std::optional<ValidationSignal> validation;
  // Model behind `validation`, consulted for per-candidate plausibility.
  const TransitionModel* transition = nullptr;
  std::optional<ClassId> context_label;
  double reflector_gap = 0.15;
  std::vector<std::string> notes;

  static std::optional<Labels> argmax_labels(const std::optional<std::vector<ClassDistribution>>& p) {
    if (!p) return std::nullopt;
    Labels out;
    for (const auto& d : *p) out.push_back(d.argmax());
    return out;
  }
  std::optional<Labels> y_nbr() const { return argmax_labels(p_nbr); }
  std::optional<Labels> y_nn() const { return argmax_labels(p_nn); }
  std::optional<Labels> y_llm() const {
    if (!reasoning) return std::nullopt;
    return reasoning->labels;
  }
  int candidate_sources() const {
    return int(p_nbr.has_value()) + int(p_nn.has_value()) + int(reasoning.has_value());
  }
};

enum class Module { Trend, Reasoning, Reflector };

inline const char* to_string(Module m) {
  switch (m) {
    case Module::Trend: return "Trend";
    case Module::Reasoning: return "Reasoning";
    case Module::Reflector: return "Reflector";
  }
  return "?";
}

inline Module module_from_string(std::string_view s) {
  if (s == "Trend") return Module::Trend;
  if (s == "Reasoning") return Module::Reasoning;
  if (s == "Reflector") return Module::Reflector;
  fail(ErrorCode::ParseError, "unknown module: " + std::string(s));
}

struct ModuleEvent {
  Module module = Module::Trend;
  std::string query;
  Json response;
  std::optional<double> reward;
  std::string provenance;
};

struct Trajectory {
  std::string well_id;
  int segment = 0;
  std::size_t window_start = 0;
  std::vector<ModuleEvent> events;
  Labels prediction;
  std::string explanation;

  const ModuleEvent* find(Module m) const {
    for (const auto& e : events)
      if (e.module == m) return &e;
    return nullptr;
  }
  ModuleEvent* find(Module m) {
    for (auto& e : events)
      if (e.module == m) return &e;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// JSON forms of structured payloads

inline Json to_json(const TrendNarrative& n) {
  Json channels = Json::array();
  for (const auto& ch : n.channels) {
    Json segs = Json::array();
    for (const auto& s : ch.segments)
      segs.push_back({s.start, s.end, to_string(s.direction), s.delta});
    channels.push_back({{"channel", ch.channel}, {"segments", segs}, {"turning_points", ch.turning_points}});
  }
  return {{"length", n.length}, {"channels", channels}, {"text", n.rendered_text}};
}

inline TrendNarrative narrative_from_json(const Json& j) {
  TrendNarrative n;
  n.length = j.at("length").get<std::size_t>();
  n.rendered_text = j.value("text", "");
  for (const auto& ch : j.at("channels")) {
    ChannelTrend t;
    t.channel = ch.at("channel").get<std::string>();
    for (const auto& s : ch.at("segments"))
      t.segments.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(),
                            direction_from_string(s.at(2).get<std::string>()), s.at(3).get<double>()});
    t.turning_points = ch.at("turning_points").get<std::vector<std::size_t>>();
    n.channels.push_back(std::move(t));
  }
  return n;
}

// ---------------------------------------------------------------------------
// Executor

struct ExecutionResult {
  EvidenceBundle bundle;
  std::vector<ModuleEvent> events;  // Trend and Reasoning
};

// Provisional per-position choice: majority of present candidates, else the
// candidate with the highest mean confidence.
inline Labels provisional_labels(const EvidenceBundle& b);

inline ExecutionResult execute(const Plan& plan, const Window& window, const WorkflowContext& ctx,
                               std::uint64_t call_seed) {
  validate_plan(plan);
  require(ctx.num_classes >= 1, ErrorCode::InvalidArgument, "execute: num_classes not set");
  ExecutionResult out;
  EvidenceBundle& b = out.bundle;
  b.length = window.length();
  b.num_classes = ctx.num_classes;
  b.reflector_gap = ctx.params.reflector_gap;
  b.context_label = ctx.previous_label;
  const auto& params = ctx.params;
  const std::string table = render_window_table(window, params.channel_names);

  for (const auto& action : plan.actions) {
    switch (action.tool) {
      case Tool::Narrate: {
        const double tol = action.args.value("slope_tol", params.slope_tol);
        if (window.length() < 2) {
          b.notes.push_back("narrate skipped: window shorter than 2 samples");
          break;
        }
        b.narrative = narrate(window, tol, params.channel_names);
        out.events.push_back({Module::Trend,
                              table + "slope_tol=" + format_fixed(tol, 4),
                              {{"text", b.narrative->rendered_text}, {"narrative", to_json(*b.narrative)}},
                              std::nullopt,
                              ""});
        break;
      }
      case Tool::Retrieve: {
        if (!ctx.index) {
          b.notes.push_back("retrieve skipped: no index");
          break;
        }
        const int k = action.args.value("k", params.k);
        std::optional<std::string> exclude;
        if (params.exclude_same_well && ctx.index->contains_well(window.well_id)) exclude = window.well_id;
        b.neighborhood = retrieve(*ctx.index, window, k, exclude);
        if (b.neighborhood->truncated) b.notes.push_back("retrieve: fewer entries than K");
        break;
      }
      case Tool::Vote: {
        if (!b.neighborhood) {
          b.notes.push_back("vote skipped: no neighborhood");
          break;
        }
        b.p_nbr = aggregate_votes_all(*b.neighborhood, window.length(), ctx.num_classes);
        break;
      }
      case Tool::Interpret: {
        if (!ctx.predictor) {
          b.notes.push_back("interpret skipped: no numerical predictor");
          break;
        }
        const double tau = action.args.value("tau", params.tau);
        auto p = ctx.predictor(window);
        require(p.size() == window.length(), ErrorCode::DimensionMismatch,
                "predictor returned wrong number of positions");
        b.interpretations.emplace();
        for (const auto& d : p) b.interpretations->push_back(interpret_probs(d, tau));
        b.p_nn = std::move(p);
        break;
      }
      case Tool::Reason: {
        if (!ctx.reasoner) {
          b.notes.push_back("reason skipped: no reasoner");
          break;
        }
        ReasonerRequest req;
        req.num_classes = ctx.num_classes;
        req.length = window.length();
        req.window_table = table;
        req.narrative = b.narrative;
        req.p_nbr = b.p_nbr;
        req.p_nn = b.p_nn;
        if (b.neighborhood) {
          std::ostringstream s;
          for (const auto& n : b.neighborhood->neighbors)
            s << n.well_id << '@' << n.start_index << " s=" << format_fixed(n.similarity, 3) << '\n';
          req.neighborhood_summary = s.str();
        }
        const std::string prompt = render_prompt(req);
        try {
          auto resp = ctx.reasoner->reason(req, call_seed);
          validate_response(resp, window.length(), ctx.num_classes);
          std::ostringstream labels;
          for (std::size_t i = 0; i < resp.labels.size(); ++i) labels << (i ? "," : "") << resp.labels[i];
          out.events.push_back({Module::Reasoning,
                                prompt,
                                {{"trace", resp.trace}, {"labels", resp.labels}},
                                std::nullopt,
                                ""});
          b.reasoning = std::move(resp);
        } catch (const Error& e) {
          if (e.code() != ErrorCode::Transport && e.code() != ErrorCode::ParseError &&
              e.code() != ErrorCode::UnknownClass)
            throw;
          b.notes.push_back(std::string("reason failed (") + lithoflow::to_string(e.code()) + "): " + e.what());
        }
        break;
      }
      case Tool::ScanConflict: {
        if (b.candidate_sources() < 2) {
          b.notes.push_back("scan_conflict skipped: fewer than two candidate sources");
          break;
        }
        b.conflict = scan_conflict(b.y_nbr(), b.y_nn(), b.y_llm());
        break;
      }
      case Tool::Validate: {
        if (!ctx.transition) {
          b.notes.push_back("validate skipped: no transition model");
          break;
        }
        if (b.candidate_sources() < 1) {
          b.notes.push_back("validate skipped: no candidate prediction");
          break;
        }
        const double theta = action.args.value("theta", params.theta);
        b.validation = validate_sequence(*ctx.transition, provisional_labels(b), theta, ctx.previous_label);
        b.transition = ctx.transition;
        break;
      }
    }
  }
  if (b.candidate_sources() == 0) fail(ErrorCode::NoCandidates, "execute: all candidate sources failed");
  return out;
}

// ---------------------------------------------------------------------------
// Reflector

namespace detail {

struct PositionView {
  std::vector<ClassId> candidates;  // in source order nbr, nn, llm
  std::vector<const ClassDistribution*> dists;
};

inline PositionView position_view(const EvidenceBundle& b, std::size_t u) {
  PositionView v;
  if (b.p_nbr) v.candidates.push_back((*b.p_nbr)[u].argmax());
  if (b.p_nn) v.candidates.push_back((*b.p_nn)[u].argmax());
  if (b.reasoning) v.candidates.push_back(b.reasoning->labels[u]);
  if (b.p_nbr) v.dists.push_back(&(*b.p_nbr)[u]);
  if (b.p_nn) v.dists.push_back(&(*b.p_nn)[u]);
  if (b.reasoning && b.reasoning->distributions) v.dists.push_back(&(*b.reasoning->distributions)[u]);
  return v;
}

inline double pooled_confidence(const PositionView& v, ClassId c) {
  if (v.dists.empty()) return 0.0;
  double s = 0.0;
  for (const auto* d : v.dists) s += d->probs[static_cast<std::size_t>(c)];
  return s / static_cast<double>(v.dists.size());
}

// Majority label and its count among the candidates.
inline std::pair<ClassId, int> majority(const std::vector<ClassId>& cands) {
  ClassId best = cands.front();
  int best_n = 0;
  for (ClassId c : cands) {
    const int n = static_cast<int>(std::count(cands.begin(), cands.end(), c));
    if (n > best_n) {
      best = c;
      best_n = n;
    }
  }
  return {best, best_n};
}

// Highest pooled confidence among the distinct candidates; transition
// probability from `prev` breaks ties, then source order.
inline ClassId resolve_split(const PositionView& v, const TransitionModel* model,
                             std::optional<ClassId> prev) {
  ClassId best = v.candidates.front();
  double best_conf = -1.0;
  double best_tp = -1.0;
  for (ClassId c : v.candidates) {
    const double conf = pooled_confidence(v, c);
    const double tp = (model && prev) ? model->prob(*prev, c) : 0.0;
    if (conf > best_conf || (conf == best_conf && tp > best_tp)) {
      best = c;
      best_conf = conf;
      best_tp = tp;
    }
  }
  return best;
}

}  // namespace detail

inline Labels provisional_labels(const EvidenceBundle& b) {
  Labels out;
  for (std::size_t u = 0; u < b.length; ++u) {
    const auto v = detail::position_view(b, u);
    const auto [m, n] = detail::majority(v.candidates);
    out.push_back(n >= 2 || v.candidates.size() == 1 ? m : detail::resolve_split(v, nullptr, std::nullopt));
  }
  return out;
}

struct Reflection {
  Labels labels;
  std::string explanation;
  ModuleEvent event;
};

inline Reflection reflect(const EvidenceBundle& b) {
  require(b.candidate_sources() >= 1, ErrorCode::NoCandidates, "reflect: no candidates");
  const TransitionModel* model = b.validation ? b.transition : nullptr;
  const double theta = b.validation ? b.validation->threshold : 0.0;
  const int sources = b.candidate_sources();

  Reflection r;
  int n_consensus = 0, n_majority = 0, n_override = 0, n_split = 0, n_single = 0;
  std::vector<std::size_t> overrides;
  Json cand_json = Json::array();
  std::optional<ClassId> prev = b.context_label;
  for (std::size_t u = 0; u < b.length; ++u) {
    const auto v = detail::position_view(b, u);
    cand_json.push_back(v.candidates);
    const auto [maj, count] = detail::majority(v.candidates);
    ClassId choice = maj;
    if (sources == 1) {
      ++n_single;
    } else if (count == static_cast<int>(v.candidates.size())) {
      ++n_consensus;
    } else if (count >= 2) {
      ClassId minority = maj;
      for (ClassId c : v.candidates)
        if (c != maj) minority = c;
      bool take_minority = false;
      if (model && prev && !v.dists.empty()) {
        const bool flagged = model->prob(*prev, maj) < theta;
        const bool plausible = model->prob(*prev, minority) >= theta;
        const bool close = std::abs(detail::pooled_confidence(v, minority) -
                                    detail::pooled_confidence(v, maj)) <= b.reflector_gap;
        take_minority = flagged && plausible && close;
      }
      if (take_minority) {
        choice = minority;
        ++n_override;
        overrides.push_back(u);
      } else {
        ++n_majority;
      }
    } else {
      choice = detail::resolve_split(v, model, prev);
      ++n_split;
    }
    r.labels.push_back(choice);
    prev = choice;
  }

  std::ostringstream h;
  h << "consensus at " << n_consensus << ", majority at " << n_majority << ", validator-backed minority at "
    << n_override << ", confidence-resolved split at " << n_split << ", single source at " << n_single
    << " of " << b.length << " samples.";
  if (!overrides.empty()) {
    h << " Overrides at samples";
    for (auto u : overrides) h << ' ' << u;
    h << '.';
  }
  h << " Evidence consulted:";
  if (b.p_nbr) h << " neighbor vote;";
  if (b.p_nn) h << " neural probabilities;";
  if (b.reasoning) h << " reasoning trace;";
  if (b.conflict) h << " conflict report (" << b.conflict->summary << ");";
  if (b.validation) h << " validation signal (" << b.validation->summary << ");";
  r.explanation = h.str();

  std::ostringstream q;
  q << "candidates=" << cand_json.dump();
  if (b.conflict) q << "\nconflict=" << b.conflict->summary;
  if (b.validation) q << "\nvalidation=" << b.validation->summary;
  if (b.context_label) q << "\ncontext_label=" << *b.context_label;
  r.event = {Module::Reflector,
             q.str(),
             {{"labels", r.labels}, {"explanation", r.explanation}, {"candidates", cand_json}},
             std::nullopt,
             ""};
  return r;
}

// ---------------------------------------------------------------------------
// Whole-well inference

struct WellRun {
  Labels predictions;
  std::vector<Trajectory> trajectories;
};

inline std::uint64_t window_seed(std::uint64_t base, const Window& w) {
  Fnv1a h;
  h.add(w.well_id);
  h.add(w.segment);
  h.add(w.start_index);
  return derive_seed(base, h.value());
}

inline Trajectory run_window(const Window& w, const WorkflowContext& ctx) {
  static const HeuristicPlanner kDefaultPlanner;
  const Planner& planner = ctx.planner ? *ctx.planner : kDefaultPlanner;
  const Plan plan = planner.plan(window_stats(w), ctx.flags());
  auto exec = execute(plan, w, ctx, window_seed(ctx.seed, w));
  auto refl = reflect(exec.bundle);
  Trajectory t;
  t.well_id = w.well_id;
  t.segment = w.segment;
  t.window_start = w.start_index;
  t.events = std::move(exec.events);
  t.events.push_back(std::move(refl.event));
  t.prediction = std::move(refl.labels);
  t.explanation = std::move(refl.explanation);
  return t;
}

// Non-overlapping windows of length L cover the well; a final window ending
// at T supplies labels for any tail shorter than L.
inline WellRun run_well(const WellLog& well, WorkflowContext ctx, int window_len) {
  require(window_len >= 1, ErrorCode::InvalidArgument, "run_well: window length must be >= 1");
  const auto l = static_cast<std::size_t>(window_len);
  const auto t = well.length();
  require(t >= l, ErrorCode::InvalidArgument,
          "run_well: well " + well.well_id + " shorter than the window length");
  WellRun run;
  run.predictions.reserve(t);
  std::size_t covered = 0;
  while (covered < t) {
    const std::size_t start = covered + l <= t ? covered : t - l;
    const Window w = extract_window(well, start, l);
    auto traj = run_window(w, ctx);
    for (std::size_t u = covered - start; u < l; ++u) run.predictions.push_back(traj.prediction[u]);
    covered = start + l;
    ctx.previous_label = run.predictions.back();
    run.trajectories.push_back(std::move(traj));
  }
  return run;
}

// ---------------------------------------------------------------------------
// Trajectory persistence (JSON lines, one record per module event)

inline std::string trajectory_jsonl(const std::vector<Trajectory>& trajs, const std::string& run_id) {
  std::ostringstream out;
  for (const auto& t : trajs) {
    for (const auto& e : t.events) {
      Json rec = {{"run_id", run_id},
                  {"well_id", t.well_id},
                  {"segment", t.segment},
                  {"window_start", t.window_start},
                  {"module", to_string(e.module)},
                  {"query_digest", digest(e.query)},
                  {"response", e.response},
                  {"reward", e.reward ? Json(*e.reward) : Json(nullptr)}};
      out << rec.dump() << '\n';
    }
  }
  return out.str();
}

inline std::vector<Trajectory> parse_trajectory_jsonl(const std::string& text, std::string* run_id = nullptr) {
  std::vector<Trajectory> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      fail(ErrorCode::ParseError, std::string("trajectory line is not JSON: ") + e.what());
    }
    const auto well = j.at("well_id").get<std::string>();
    const auto seg = j.value("segment", 0);
    const auto start = j.at("window_start").get<std::size_t>();
    if (run_id) *run_id = j.value("run_id", "");
    if (out.empty() || out.back().well_id != well || out.back().segment != seg ||
        out.back().window_start != start) {
      Trajectory t;
      t.well_id = well;
      t.segment = seg;
      t.window_start = start;
      out.push_back(std::move(t));
    }
    ModuleEvent e;
    e.module = module_from_string(j.at("module").get<std::string>());
    e.query = j.at("query_digest").get<std::string>();
    e.response = j.at("response");
    if (!j.at("reward").is_null()) e.reward = j.at("reward").get<double>();
    if (e.module == Module::Reflector) {
      out.back().prediction = e.response.at("labels").get<Labels>();
      out.back().explanation = e.response.value("explanation", "");
    }
    out.back().events.push_back(std::move(e));
  }
  return out;
}

}  // namespace lithoflow
