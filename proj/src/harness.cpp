#include "parley/harness.hpp"

#include "parley/answer.hpp"
#include "parley/rng.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace parley::harness {
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFault("cannot open \"" + path.string() + "\" for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void spill(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFault("cannot open \"" + path.string() + "\" for writing");
  out << content;
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

std::uint64_t repeat_master_seed(std::uint64_t base, int repeat) {
  return chain_seed(chain_seed(base, SeedDomain::kRepeat), static_cast<std::uint64_t>(repeat));
}

}  // namespace

// ---------------------------------------------------------------------------
// Spec enums and JSON
// ---------------------------------------------------------------------------

std::string to_string(ScalingMethod m) {
  switch (m) {
    case ScalingMethod::kCorrectFirst: return "correct_first";
    case ScalingMethod::kIncorrectFirst: return "incorrect_first";
    case ScalingMethod::kAlternating: return "alternating";
  }
  throw ConfigError("scaling_method: unknown enum value");
}

ScalingMethod scaling_method_from_string(std::string_view s) {
  if (s == "correct_first") return ScalingMethod::kCorrectFirst;
  if (s == "incorrect_first") return ScalingMethod::kIncorrectFirst;
  if (s == "alternating") return ScalingMethod::kAlternating;
  throw ConfigError("scaling_method: expected correct_first|incorrect_first|alternating, got \"" +
                    std::string(s) + "\"");
}

std::string to_string(ResponderMode m) {
  switch (m) {
    case ResponderMode::kSingleResponder: return "single_responder";
    case ResponderMode::kAllAgents: return "all_agents";
  }
  throw ConfigError("responder_mode: unknown enum value");
}

ResponderMode responder_mode_from_string(std::string_view s) {
  if (s == "single_responder") return ResponderMode::kSingleResponder;
  if (s == "all_agents") return ResponderMode::kAllAgents;
  throw ConfigError("responder_mode: expected single_responder|all_agents, got \"" +
                    std::string(s) + "\"");
}

void ThresholdSpec::validate() const {
  if (max_per_class < 1) throw ConfigError("threshold.max_per_class: must be >= 1");
  if (count_range.first < 1 || count_range.first > count_range.second) {
    throw ConfigError("threshold.count_range: must satisfy 1 <= lo <= hi");
  }
  if (count_range.second > 2 * max_per_class) {
    throw ConfigError("threshold.count_range: hi must be <= 2 * max_per_class (" +
                      std::to_string(2 * max_per_class) + ")");
  }
  if (repetitions_per_count < 1) {
    throw ConfigError("threshold.repetitions_per_count: must be >= 1");
  }
  if (experiment_repeats < 1) throw ConfigError("threshold.experiment_repeats: must be >= 1");
}

void to_json(nlohmann::json& j, const ThresholdSpec& s) {
  j = nlohmann::json{{"scaling_method", to_string(s.scaling_method)},
                     {"max_per_class", s.max_per_class},
                     {"count_range", {s.count_range.first, s.count_range.second}},
                     {"repetitions_per_count", s.repetitions_per_count},
                     {"experiment_repeats", s.experiment_repeats},
                     {"responder_mode", to_string(s.responder_mode)}};
}

void from_json(const nlohmann::json& j, ThresholdSpec& s) {
  s = ThresholdSpec{};
  if (j.contains("scaling_method")) {
    s.scaling_method = scaling_method_from_string(j.at("scaling_method").get<std::string>());
  }
  s.max_per_class = j.value("max_per_class", s.max_per_class);
  if (j.contains("count_range")) {
    const auto& r = j.at("count_range");
    if (!r.is_array() || r.size() != 2) {
      throw ConfigError("threshold.count_range: expected [lo, hi]");
    }
    s.count_range = {r[0].get<int>(), r[1].get<int>()};
  }
  s.repetitions_per_count = j.value("repetitions_per_count", s.repetitions_per_count);
  s.experiment_repeats = j.value("experiment_repeats", s.experiment_repeats);
  if (j.contains("responder_mode")) {
    s.responder_mode = responder_mode_from_string(j.at("responder_mode").get<std::string>());
  }
}

std::string to_string(ScalingSpec::Axis a) {
  switch (a) {
    case ScalingSpec::Axis::kAgents: return "agents";
    case ScalingSpec::Axis::kRounds: return "rounds";
  }
  throw ConfigError("scaling.axis: unknown enum value");
}

ScalingSpec::Axis axis_from_string(std::string_view s) {
  if (s == "agents") return ScalingSpec::Axis::kAgents;
  if (s == "rounds") return ScalingSpec::Axis::kRounds;
  throw ConfigError("scaling.axis: expected agents|rounds, got \"" + std::string(s) + "\"");
}

void ScalingSpec::validate() const {
  if (values.empty()) throw ConfigError("scaling.values: must not be empty");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < 1) throw ConfigError("scaling.values: all values must be >= 1");
    if (i > 0 && values[i] <= values[i - 1]) {
      throw ConfigError("scaling.values: must be strictly increasing");
    }
  }
  if (strategies.empty()) throw ConfigError("scaling.strategies: must not be empty");
  if (repeats < 1) throw ConfigError("scaling.repeats: must be >= 1");
}

void to_json(nlohmann::json& j, const ScalingSpec& s) {
  nlohmann::json strategies = nlohmann::json::array();
  for (Strategy st : s.strategies) strategies.push_back(to_string(st));
  j = nlohmann::json{{"axis", to_string(s.axis)},
                     {"values", s.values},
                     {"strategies", strategies},
                     {"repeats", s.repeats}};
}

void from_json(const nlohmann::json& j, ScalingSpec& s) {
  s = ScalingSpec{};
  if (j.contains("axis")) s.axis = axis_from_string(j.at("axis").get<std::string>());
  if (j.contains("values")) j.at("values").get_to(s.values);
  s.strategies.clear();
  if (j.contains("strategies")) {
    for (const auto& item : j.at("strategies")) {
      s.strategies.push_back(strategy_from_string(item.get<std::string>()));
    }
  }
  s.repeats = j.value("repeats", s.repeats);
}

// ---------------------------------------------------------------------------
// Rosters
// ---------------------------------------------------------------------------

std::vector<bool> roster_pattern(ScalingMethod method, int count, int max_per_class) {
  if (count < 0) throw ConfigError("count: must be >= 0");
  if (count > 2 * max_per_class) {
    throw ConfigError("count: exceeds 2 * max_per_class (" + std::to_string(2 * max_per_class) +
                      ")");
  }
  std::vector<bool> pattern;
  pattern.reserve(static_cast<std::size_t>(count));
  int budget_correct = max_per_class;
  int budget_incorrect = max_per_class;

  switch (method) {
    case ScalingMethod::kCorrectFirst:
    case ScalingMethod::kIncorrectFirst: {
      const bool lead_correct = method == ScalingMethod::kCorrectFirst;
      const int lead = std::min(count, max_per_class);
      for (int i = 0; i < count; ++i) pattern.push_back((i < lead) == lead_correct);
      return pattern;
    }
    case ScalingMethod::kAlternating: {
      bool want_correct = true;  // the correct class leads
      for (int i = 0; i < count; ++i) {
        bool take_correct = want_correct;
        if (budget_correct == 0) take_correct = false;
        if (budget_incorrect == 0) take_correct = true;
        pattern.push_back(take_correct);
        (take_correct ? budget_correct : budget_incorrect) -= 1;
        want_correct = !take_correct;
      }
      return pattern;
    }
  }
  throw ConfigError("scaling_method: unknown enum value");
}

std::vector<RosterEntry> build_roster(const ThresholdSpec& spec, int count,
                                      const backends::ViewpointPool& pool, std::uint64_t seed) {
  const std::vector<bool> pattern = roster_pattern(spec.scaling_method, count, spec.max_per_class);
  const int n_correct = static_cast<int>(std::count(pattern.begin(), pattern.end(), true));

  backends::Composition comp;
  comp.n_correct = n_correct;
  comp.n_incorrect = count - n_correct;
  const std::vector<backends::PoolEntry> drawn =
      backends::pool_draw(pool, count, comp, seed, /*without_replacement=*/true);

  std::vector<RosterEntry> roster;
  roster.reserve(static_cast<std::size_t>(count));
  std::size_t next_correct = 0;                                  // correct block start
  std::size_t next_incorrect = static_cast<std::size_t>(n_correct);  // incorrect block start
  for (int pos = 0; pos < count; ++pos) {
    const bool correct = pattern[static_cast<std::size_t>(pos)];
    const backends::PoolEntry& entry = drawn[correct ? next_correct++ : next_incorrect++];
    RosterEntry re;
    re.correct = correct;
    re.viewpoint.agent_index = pos;
    re.viewpoint.round = 1;
    re.viewpoint.text = entry.text;
    re.viewpoint.answer = entry.answer;
    roster.push_back(std::move(re));
  }
  return roster;
}

// ---------------------------------------------------------------------------
// Strategy comparison
// ---------------------------------------------------------------------------

std::vector<StrategyCell> standard_cells(const ExperimentConfig& base,
                                         const std::vector<Strategy>& strategies,
                                         bool include_baselines) {
  std::vector<StrategyCell> cells;
  if (include_baselines) {
    ExperimentConfig single = base;
    single.strategy = Strategy::kFixed;
    single.n_agents = 1;
    single.n_rounds = 1;
    cells.push_back({"single_cot", single});

    ExperimentConfig sc = base;
    sc.strategy = Strategy::kFixed;
    sc.n_rounds = 1;
    sc.aggregation = Aggregation::kMajorityVote;
    cells.push_back({"self_consistency", sc});
  }
  for (Strategy s : strategies) {
    ExperimentConfig cfg = base;
    cfg.strategy = s;
    cells.push_back({to_string(s), cfg});
  }
  return cells;
}

std::vector<double> per_repeat_accuracy(const std::vector<DebateTranscript>& transcripts,
                                        const Dataset& dataset, int repeats) {
  if (repeats < 1) throw ConfigError("repeats: must be >= 1");
  if (transcripts.size() % static_cast<std::size_t>(repeats) != 0) {
    throw ConfigError("transcripts: count is not a multiple of repeats");
  }
  const std::size_t n_questions = transcripts.size() / static_cast<std::size_t>(repeats);
  std::vector<double> acc(static_cast<std::size_t>(repeats), 0.0);
  for (std::size_t q = 0; q < n_questions; ++q) {
    for (int r = 0; r < repeats; ++r) {
      const DebateTranscript& t = transcripts[q * static_cast<std::size_t>(repeats) +
                                              static_cast<std::size_t>(r)];
      const Question* question = dataset.find(t.question_id);
      if (question == nullptr || !question->answer_key) {
        throw ConfigError("answer_key: missing question or key for id: " + t.question_id);
      }
      if (t.final_answer == *question->answer_key) acc[static_cast<std::size_t>(r)] += 1.0;
    }
  }
  for (double& a : acc) a /= static_cast<double>(n_questions);
  return acc;
}

namespace {

struct CellOutcome {
  std::vector<DebateTranscript> transcripts;
  SummaryRow summary;
};

// Runs one labeled cell (or reloads its persisted transcripts) and writes
// the cell directory: transcripts.jsonl, metrics.csv, repeats.csv,
// config.json.
CellOutcome run_cell(const StrategyCell& cell, const Dataset& dataset,
                     const backends::PoolSet* pools, const PromptBundle& prompts,
                     const fs::path& cell_dir, const RunOptions& options) {
  cell.config.validate();
  prompts.validate();
  if (dataset.questions.empty()) throw ConfigError("dataset: no questions");
  fs::create_directories(cell_dir);

  const fs::path transcripts_path = cell_dir / "transcripts.jsonl";
  CellOutcome outcome;
  if (fs::exists(transcripts_path)) {
    outcome.transcripts = load_transcripts(transcripts_path.string());
  } else {
    const std::unique_ptr<backends::AgentBackend> backend =
        backends::make_backend(cell.config.backend, pools);
    for (const Question& q : dataset.questions) {
      for (int r = 0; r < cell.config.repeats; ++r) {
        ExperimentConfig run_config = cell.config;
        run_config.master_seed = repeat_master_seed(cell.config.master_seed, r);
        outcome.transcripts.push_back(run_debate(q, run_config, *backend, prompts, options));
      }
    }
    save_transcripts(transcripts_path.string(), outcome.transcripts);
  }

  std::vector<MetricRow> rows;
  std::vector<double> final_entropies;
  std::vector<double> final_ll;
  int ll_undefined = 0;
  for (const DebateTranscript& t : outcome.transcripts) {
    const Question* q = dataset.find(t.question_id);
    if (q == nullptr) {
      throw ConfigError("dataset: transcript question \"" + t.question_id + "\" not found");
    }
    const std::vector<MetricRow> tr = metric_rows(t, *q);
    for (const MetricRow& row : tr) {
      if (row.round == t.n_rounds) {
        final_entropies.push_back(row.entropy_bits);
        if (row.ll.undefined) {
          ++ll_undefined;
        } else {
          final_ll.push_back(row.ll.bits);
        }
      }
    }
    rows.insert(rows.end(), tr.begin(), tr.end());
  }
  spill(cell_dir / "metrics.csv", metrics_csv(rows));

  const std::vector<double> accs =
      per_repeat_accuracy(outcome.transcripts, dataset, cell.config.repeats);
  std::string repeats_csv = "repeat,accuracy\n";
  for (std::size_t r = 0; r < accs.size(); ++r) {
    repeats_csv += std::to_string(r) + "," + format_double(accs[r]) + "\n";
  }
  spill(cell_dir / "repeats.csv", repeats_csv);
  spill(cell_dir / "config.json", nlohmann::json(cell.config).dump(2) + "\n");

  outcome.summary.label = cell.label;
  outcome.summary.n_questions = static_cast<int>(dataset.questions.size());
  outcome.summary.repeats = cell.config.repeats;
  outcome.summary.accuracy_mean = mean_of(accs);
  outcome.summary.accuracy_sd = sample_sd(accs);
  outcome.summary.entropy_mean = mean_of(final_entropies);
  outcome.summary.ll_mean = mean_of(final_ll);
  outcome.summary.ll_undefined_rows = ll_undefined;
  return outcome;
}

std::string summary_csv(const std::vector<SummaryRow>& rows) {
  std::string out =
      "label,questions,repeats,accuracy_mean,accuracy_sd,entropy_mean,ll_mean,ll_undefined_rows\n";
  for (const SummaryRow& r : rows) {
    out += r.label + "," + std::to_string(r.n_questions) + "," + std::to_string(r.repeats) + "," +
           format_double(r.accuracy_mean) + "," + format_double(r.accuracy_sd) + "," +
           format_double(r.entropy_mean) + "," + format_double(r.ll_mean) + "," +
           std::to_string(r.ll_undefined_rows) + "\n";
  }
  return out;
}

}  // namespace

std::vector<SummaryRow> run_strategy_comparison(const std::vector<StrategyCell>& cells,
                                                const Dataset& dataset,
                                                const backends::PoolSet* pools,
                                                const PromptBundle& prompts,
                                                const fs::path& out_dir,
                                                const RunOptions& options) {
  if (cells.empty()) throw ConfigError("cells: no configurations to run");
  fs::create_directories(out_dir);
  std::vector<SummaryRow> summaries;
  for (const StrategyCell& cell : cells) {
    if (cell.label.empty()) throw ConfigError("cells: empty label");
    summaries.push_back(
        run_cell(cell, dataset, pools, prompts, out_dir / cell.label, options).summary);
  }
  spill(out_dir / "summary.csv", summary_csv(summaries));
  write_manifest(out_dir);
  return summaries;
}

// ---------------------------------------------------------------------------
// Threshold sweep
// ---------------------------------------------------------------------------

namespace {

std::string threshold_prompt(const Question& question, const std::vector<RosterEntry>& roster,
                             const PromptBundle& prompts) {
  // The responder is outside the roster, so every roster solution appears.
  AllocationOrder order;
  order.strategy_name = "roster";
  order.round = 1;
  std::vector<Viewpoint> context;
  context.reserve(roster.size());
  for (const RosterEntry& re : roster) context.push_back(re.viewpoint);
  for (std::size_t i = 0; i <= roster.size(); ++i) {
    order.permutation.push_back(static_cast<int>(i));
  }
  // Reuse the debate assembly by treating the responder as agent `count`,
  // whose slot is skipped; give it a placeholder viewpoint.
  Viewpoint responder;
  responder.agent_index = static_cast<int>(roster.size());
  responder.round = 1;
  responder.answer = std::string(kNoAnswer);
  context.push_back(responder);
  return assemble_debate_prompt(question, static_cast<int>(roster.size()), order, context,
                                prompts);
}

std::string sample_answer(const Question& question, const std::vector<RosterEntry>& roster,
                          backends::AgentBackend& backend, const PromptBundle& prompts,
                          ResponderMode mode, std::uint64_t seed) {
  std::vector<std::string> roster_answers;
  roster_answers.reserve(roster.size());
  for (const RosterEntry& re : roster) roster_answers.push_back(re.viewpoint.answer);

  if (mode == ResponderMode::kSingleResponder) {
    Viewpoint fresh;
    fresh.agent_index = static_cast<int>(roster.size());
    fresh.round = 1;
    fresh.answer = std::string(kNoAnswer);
    const std::string prompt = threshold_prompt(question, roster, prompts);
    backends::CallContext ctx{question, static_cast<int>(roster.size()),
                              static_cast<int>(roster.size()) + 1, 2, seed, 0};
    try {
      return extract_answer(backend.debate_response(ctx, prompt, fresh, roster_answers));
    } catch (const RuntimeFault&) {
      return std::string(kNoAnswer);
    }
  }

  // all_agents: every roster member updates against the frozen context,
  // then majority vote decides.
  std::vector<Viewpoint> context;
  context.reserve(roster.size());
  for (const RosterEntry& re : roster) context.push_back(re.viewpoint);
  AllocationOrder order;
  order.strategy_name = "roster";
  order.round = 1;
  for (std::size_t i = 0; i < roster.size(); ++i) order.permutation.push_back(static_cast<int>(i));

  std::vector<Viewpoint> updated(roster.size());
  for (std::size_t i = 0; i < roster.size(); ++i) {
    const std::string prompt =
        assemble_debate_prompt(question, static_cast<int>(i), order, context, prompts);
    const std::vector<std::string> peers =
        peer_answers_for(static_cast<int>(i), order, context);
    backends::CallContext ctx{question, static_cast<int>(i), static_cast<int>(roster.size()), 2,
                              chain_seed(seed, static_cast<std::uint64_t>(i)), 0};
    Viewpoint v;
    v.agent_index = static_cast<int>(i);
    v.round = 2;
    try {
      v.text = backend.debate_response(ctx, prompt, context[i], peers);
      v.answer = extract_answer(v.text);
    } catch (const RuntimeFault&) {
      v.answer = std::string(kNoAnswer);
    }
    updated[i] = std::move(v);
  }
  return aggregate(updated, Aggregation::kMajorityVote);
}

std::string pattern_string(const std::vector<bool>& pattern) {
  std::string s;
  s.reserve(pattern.size());
  for (bool c : pattern) s.push_back(c ? 'C' : 'I');
  return s;
}

}  // namespace

ThresholdResult run_threshold(const ThresholdSpec& spec, const Question& question,
                              const backends::ViewpointPool& pool,
                              const backends::BackendDescriptor& backend_desc,
                              const PromptBundle& prompts, std::uint64_t master_seed,
                              const fs::path& out_dir) {
  spec.validate();
  backend_desc.validate();
  prompts.validate();
  if (backend_desc.kind == backends::Kind::kPool) {
    throw ConfigError("backend: threshold sweeps need an llm or synthetic backend");
  }
  if (!question.answer_key) {
    throw ConfigError("answer_key: threshold sweeps require the question's answer key");
  }

  const fs::path parts_dir = out_dir / "parts";
  fs::create_directories(parts_dir);
  const std::unique_ptr<backends::AgentBackend> backend = backends::make_backend(backend_desc);

  const int lo = spec.count_range.first;
  const int hi = spec.count_range.second;

  for (int repeat = 0; repeat < spec.experiment_repeats; ++repeat) {
    for (int count = lo; count <= hi; ++count) {
      const fs::path part = parts_dir / ("r" + std::to_string(repeat) + "_c" +
                                         std::to_string(count) + ".csv");
      if (fs::exists(part)) continue;  // resume: never recompute a finished cell

      std::uint64_t roster_seed = chain_seed(master_seed, SeedDomain::kRoster);
      roster_seed = chain_seed(roster_seed, static_cast<std::uint64_t>(repeat));
      roster_seed = chain_seed(roster_seed, static_cast<std::uint64_t>(count));
      const std::vector<RosterEntry> roster = build_roster(spec, count, pool, roster_seed);

      int correct = 0;
      for (int rep = 0; rep < spec.repetitions_per_count; ++rep) {
        std::uint64_t seed = chain_seed(master_seed, SeedDomain::kResponder);
        seed = chain_seed(seed, static_cast<std::uint64_t>(repeat));
        seed = chain_seed(seed, static_cast<std::uint64_t>(count));
        seed = chain_seed(seed, static_cast<std::uint64_t>(rep));
        const std::string answer =
            sample_answer(question, roster, *backend, prompts, spec.responder_mode, seed);
        if (answer == *question.answer_key) ++correct;
      }
      const double acc =
          static_cast<double>(correct) / static_cast<double>(spec.repetitions_per_count);
      spill(part, std::to_string(count) + "," + std::to_string(repeat) + "," +
                      format_double(acc) + "\n");
    }
  }

  // Merge parts (verbatim) into the curve; parse them for the result.
  ThresholdResult result;
  result.per_repeat.assign(static_cast<std::size_t>(spec.experiment_repeats), {});
  std::string curve = "count,repeat,accuracy\n";
  for (int count = lo; count <= hi; ++count) {
    result.counts.push_back(count);
    for (int repeat = 0; repeat < spec.experiment_repeats; ++repeat) {
      const fs::path part = parts_dir / ("r" + std::to_string(repeat) + "_c" +
                                         std::to_string(count) + ".csv");
      const std::string line = slurp(part);
      curve += line;
      const std::size_t last_comma = line.rfind(',');
      result.per_repeat[static_cast<std::size_t>(repeat)].push_back(
          std::stod(line.substr(last_comma + 1)));
    }
  }
  std::string mean_curve = "count,mean_accuracy\n";
  for (std::size_t ci = 0; ci < result.counts.size(); ++ci) {
    std::vector<double> accs;
    for (const std::vector<double>& row : result.per_repeat) accs.push_back(row[ci]);
    result.mean_accuracy.push_back(mean_of(accs));
    mean_curve += std::to_string(result.counts[ci]) + "," +
                  format_double(result.mean_accuracy[ci]) + "\n";
  }
  spill(out_dir / "curve.csv", curve);
  spill(out_dir / "mean_curve.csv", mean_curve);

  nlohmann::json rosters = nlohmann::json::array();
  for (int count = lo; count <= hi; ++count) {
    rosters.push_back(
        {{"count", count},
         {"pattern", pattern_string(roster_pattern(spec.scaling_method, count,
                                                   spec.max_per_class))}});
  }
  spill(out_dir / "rosters.json", rosters.dump(2) + "\n");

  const nlohmann::json config{{"threshold", spec},
                              {"backend", backend_desc},
                              {"master_seed", master_seed},
                              {"question_id", question.id}};
  spill(out_dir / "config.json", config.dump(2) + "\n");
  write_manifest(out_dir);
  return result;
}

// ---------------------------------------------------------------------------
// Scaling sweep
// ---------------------------------------------------------------------------

std::vector<ScalingRow> run_scaling(const ScalingSpec& spec, const ExperimentConfig& base,
                                    const Dataset& dataset, const backends::PoolSet* pools,
                                    const PromptBundle& prompts, const fs::path& out_dir,
                                    const RunOptions& options) {
  spec.validate();
  fs::create_directories(out_dir);

  std::vector<ScalingRow> rows;
  for (Strategy strategy : spec.strategies) {
    for (int value : spec.values) {
      StrategyCell cell;
      cell.config = base;
      cell.config.strategy = strategy;
      cell.config.repeats = spec.repeats;
      if (spec.axis == ScalingSpec::Axis::kAgents) {
        cell.config.n_agents = value;
      } else {
        cell.config.n_rounds = value;
      }
      cell.label = to_string(strategy) + "_" + to_string(spec.axis) + "_" + std::to_string(value);

      const SummaryRow summary =
          run_cell(cell, dataset, pools, prompts, out_dir / cell.label, options).summary;
      ScalingRow row;
      row.axis = to_string(spec.axis);
      row.value = value;
      row.strategy = to_string(strategy);
      row.accuracy_mean = summary.accuracy_mean;
      row.accuracy_sd = summary.accuracy_sd;
      row.entropy_mean = summary.entropy_mean;
      rows.push_back(std::move(row));
    }
  }

  std::string csv = "axis,value,strategy,accuracy_mean,accuracy_sd,entropy_mean\n";
  for (const ScalingRow& r : rows) {
    csv += r.axis + "," + std::to_string(r.value) + "," + r.strategy + "," +
           format_double(r.accuracy_mean) + "," + format_double(r.accuracy_sd) + "," +
           format_double(r.entropy_mean) + "\n";
  }
  spill(out_dir / "scaling.csv", csv);
  write_manifest(out_dir);
  return rows;
}

// ---------------------------------------------------------------------------
// Support
// ---------------------------------------------------------------------------

std::string wrong_answer_for(const Question& q) {
  if (!q.answer_key) throw ConfigError("answer_key: required to derive a wrong answer");
  const std::string key = normalize_answer(*q.answer_key);
  for (const QuestionOption& o : q.options) {
    if (o.label != key) return o.label;
  }
  // Integer keys get key+1; anything else gets a suffix.
  bool integral = !key.empty();
  for (std::size_t i = key[0] == '-' || key[0] == '+' ? 1 : 0; i < key.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(key[i]))) integral = false;
  }
  if (integral && key.size() > (key[0] == '-' || key[0] == '+' ? 1u : 0u)) {
    return std::to_string(std::stoll(key) + 1);
  }
  return key + "X";
}

backends::PoolSet generate_pools(const Dataset& dataset, int per_class) {
  if (per_class < 1) throw ConfigError("per_class: must be >= 1");
  backends::PoolSet pools;
  for (const Question& q : dataset.questions) {
    if (!q.answer_key) {
      throw ConfigError("answer_key: required to generate a pool for question \"" + q.id + "\"");
    }
    const std::string key = normalize_answer(*q.answer_key);
    const std::string wrong = wrong_answer_for(q);
    backends::ViewpointPool pool;
    pool.question_id = q.id;
    for (int i = 0; i < per_class; ++i) {
      backends::PoolEntry e;
      e.answer = key;
      e.correct = true;
      e.text = "synthetic reasoning #" + std::to_string(i) + ". The answer is: (" + key + ")";
      pool.entries.push_back(std::move(e));
    }
    for (int i = 0; i < per_class; ++i) {
      backends::PoolEntry e;
      e.answer = wrong;
      e.correct = false;
      e.text = "synthetic reasoning #" + std::to_string(per_class + i) + ". The answer is: (" +
               wrong + ")";
      pool.entries.push_back(std::move(e));
    }
    pools[q.id] = std::move(pool);
  }
  return pools;
}

void write_manifest(const fs::path& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string rel = fs::relative(entry.path(), dir).generic_string();
    if (rel == "manifest.json") continue;
    files.push_back(rel);
  }
  std::sort(files.begin(), files.end());

  nlohmann::json hashes = nlohmann::json::object();
  for (const std::string& rel : files) {
    hashes[rel] = content_hash(slurp(dir / rel));
  }

  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

  const nlohmann::json manifest{{"created_at", stamp}, {"files", hashes}};
  spill(dir / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace parley::harness
