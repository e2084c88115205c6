#pragma once

#include "parley/backends.hpp"
#include "parley/config.hpp"
#include "parley/core.hpp"
#include "parley/engine.hpp"
#include "parley/metrics.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace parley::harness {

// ---------------------------------------------------------------------------
// Sweep specs
// ---------------------------------------------------------------------------

enum class ScalingMethod { kCorrectFirst, kIncorrectFirst, kAlternating };
enum class ResponderMode { kSingleResponder, kAllAgents };

std::string to_string(ScalingMethod m);
ScalingMethod scaling_method_from_string(std::string_view s);
std::string to_string(ResponderMode m);
ResponderMode responder_mode_from_string(std::string_view s);

// Reversal-threshold sweep: how many same-class viewpoints must stack up
// before a responder flips.  Counts run over roster sizes; each class is
// capped at max_per_class entries.
struct ThresholdSpec {
  ScalingMethod scaling_method = ScalingMethod::kCorrectFirst;
  int max_per_class = 40;
  std::pair<int, int> count_range{1, 80};  // inclusive, within [1, 2 * max_per_class]
  int repetitions_per_count = 10;          // answer samples against one frozen roster
  int experiment_repeats = 5;              // independent roster draws
  ResponderMode responder_mode = ResponderMode::kSingleResponder;

  void validate() const;

  bool operator==(const ThresholdSpec&) const = default;
};

void to_json(nlohmann::json& j, const ThresholdSpec& s);
void from_json(const nlohmann::json& j, ThresholdSpec& s);

// Round/agent scaling sweep.
struct ScalingSpec {
  enum class Axis { kAgents, kRounds };
  Axis axis = Axis::kAgents;
  std::vector<int> values;  // strictly increasing, all >= 1
  std::vector<Strategy> strategies;
  int repeats = 1;

  void validate() const;

  bool operator==(const ScalingSpec&) const = default;
};

std::string to_string(ScalingSpec::Axis a);
ScalingSpec::Axis axis_from_string(std::string_view s);
void to_json(nlohmann::json& j, const ScalingSpec& s);
void from_json(const nlohmann::json& j, ScalingSpec& s);

// ---------------------------------------------------------------------------
// Rosters
// ---------------------------------------------------------------------------

struct RosterEntry {
  Viewpoint viewpoint;  // agent_index = position - 1, round = 1
  bool correct = false;
};

// Correctness-by-position placement rule (true = correct viewpoint):
//   correct_first   -> min(count, max_per_class) correct, then incorrect
//   incorrect_first -> the mirror image
//   alternating     -> correct leads and classes alternate until one class
//                      hits max_per_class, after which the other fills in
std::vector<bool> roster_pattern(ScalingMethod method, int count, int max_per_class);

// Draws the needed entries from each class of the pool (seeded, without
// replacement) and places them by the pattern; later additions always sit
// later in the context.  Throws ConfigError when a class runs short.
std::vector<RosterEntry> build_roster(const ThresholdSpec& spec, int count,
                                      const backends::ViewpointPool& pool, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Runners
// ---------------------------------------------------------------------------

// One labeled configuration in a strategy-comparison run.
struct StrategyCell {
  std::string label;
  ExperimentConfig config;
};

struct SummaryRow {
  std::string label;
  int n_questions = 0;
  int repeats = 0;
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;       // sample stddev across repeats (0 when repeats == 1)
  double entropy_mean = 0.0;      // mean final-round entropy
  double ll_mean = 0.0;           // mean final-round log-likelihood over defined rows
  int ll_undefined_rows = 0;

  bool operator==(const SummaryRow&) const = default;
};

// The standard comparison set: single-agent chain-of-thought (n=1, m=1),
// self-consistency (n agents, one round, majority vote), and one cell per
// requested debate strategy.
std::vector<StrategyCell> standard_cells(const ExperimentConfig& base,
                                         const std::vector<Strategy>& strategies,
                                         bool include_baselines = true);

// Runs every cell over the full dataset for config.repeats repeats.  Each
// repeat r uses master seed chain(chain(master_seed, kRepeat), r).  Per
// cell, <out_dir>/<label>/ receives transcripts.jsonl, metrics.csv,
// repeats.csv, and config.json; <out_dir> receives summary.csv and a
// manifest.  A cell whose transcripts.jsonl already exists is not rerun:
// its outputs are recomputed from the persisted transcripts, which makes
// rerunning a finished sweep byte-identical.
std::vector<SummaryRow> run_strategy_comparison(const std::vector<StrategyCell>& cells,
                                                const Dataset& dataset,
                                                const backends::PoolSet* pools,
                                                const PromptBundle& prompts,
                                                const std::filesystem::path& out_dir,
                                                const RunOptions& options = {});

// Accuracy curves from a threshold sweep.
struct ThresholdResult {
  std::vector<int> counts;
  std::vector<std::vector<double>> per_repeat;  // [experiment_repeat][count index]
  std::vector<double> mean_accuracy;            // [count index]
};

// Reversal-threshold sweep for one question.  For every count in range and
// every experiment repeat, a roster is drawn and placed, the context is
// frozen, and repetitions_per_count answers are sampled (a fresh responder
// by default, or every roster agent with majority aggregation).  Results
// land in <out_dir>/parts/ (one file per repeat x count, enabling resume:
// existing parts are never recomputed), merged into curve.csv
// ("count,repeat,accuracy"), mean_curve.csv, rosters.json, config.json and
// a manifest.  Backend must be synthetic or llm.
ThresholdResult run_threshold(const ThresholdSpec& spec, const Question& question,
                              const backends::ViewpointPool& pool,
                              const backends::BackendDescriptor& backend_desc,
                              const PromptBundle& prompts, std::uint64_t master_seed,
                              const std::filesystem::path& out_dir);

struct ScalingRow {
  std::string axis;
  int value = 0;
  std::string strategy;
  double accuracy_mean = 0.0;
  double accuracy_sd = 0.0;
  double entropy_mean = 0.0;

  bool operator==(const ScalingRow&) const = default;
};

// Sweeps the chosen axis (agents or rounds) over every strategy in the
// spec, holding everything else at the base config.  Each (strategy, value)
// cell persists like a comparison cell; scaling.csv collects the rows.
std::vector<ScalingRow> run_scaling(const ScalingSpec& spec, const ExperimentConfig& base,
                                    const Dataset& dataset, const backends::PoolSet* pools,
                                    const PromptBundle& prompts,
                                    const std::filesystem::path& out_dir,
                                    const RunOptions& options = {});

// ---------------------------------------------------------------------------
// Support
// ---------------------------------------------------------------------------

// Balanced synthetic pools: per question, per_class correct entries (the
// answer key) and per_class incorrect entries (a fixed wrong answer derived
// from the options).  Entry texts are unique within a pool so that
// without-replacement draws never collide.
backends::PoolSet generate_pools(const Dataset& dataset, int per_class);

// Wrong-answer label used by generated pools (first non-key option label,
// else key+1 for integer keys, else the key with an "X" suffix).
std::string wrong_answer_for(const Question& q);

// Writes manifest.json: {"created_at": ..., "files": {relative path: FNV-1a
// 64 hash}} over every regular file under dir (manifest.json excluded).
// The timestamp is the only non-reproducible output of a sweep.
void write_manifest(const std::filesystem::path& dir);

// Mean final-round accuracy per repeat for one cell's transcripts, in
// (question-major, repeat-minor) persisted order.
std::vector<double> per_repeat_accuracy(const std::vector<DebateTranscript>& transcripts,
                                        const Dataset& dataset, int repeats);

}  // namespace parley::harness
