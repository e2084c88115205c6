// parley: multi-agent debate runner.
//
// Subcommands
//   debate      run one debate for a single question, write its transcript
//   experiment  strategy-comparison sweep over a dataset
//   threshold   reversal-threshold sweep for one question
//   scaling     agent-count / round-count sweep
//   metrics     recompute metric CSVs from persisted transcripts
//   validate    schema-check a config (and its dataset / prompt file)
//
// Exit codes: 0 success, 1 configuration/validation error, 2 runtime fault.
// Errors additionally emit one machine-readable JSON line on stderr.

#include <CLI11.hpp>
#include <json.hpp>

#include "parley/backends.hpp"
#include "parley/config.hpp"
#include "parley/core.hpp"
#include "parley/engine.hpp"
#include "parley/harness.hpp"
#include "parley/metrics.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace parley;

namespace {

struct Args {
  std::string config_path;
  std::string out_dir;
  std::string in_dir;  // metrics only
  std::vector<std::string> overrides;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int parallelism = 0;  // 0 = auto
  std::string backend_kind;
};

void error_line(const std::string& type, const std::string& message) {
  const nlohmann::json j{{"error", {{"type", type}, {"message", message}}}};
  std::cerr << j.dump() << "\n";
}

void add_run_flags(CLI::App* cmd, Args& a) {
  cmd->add_option("--config", a.config_path, "JSON config file")->required();
  cmd->add_option("--out", a.out_dir, "output directory (overrides config output_path)");
  cmd->add_option("--seed", a.seed, "master seed (overrides config master_seed)")
      ->each([&a](const std::string&) { a.seed_set = true; });
  cmd->add_option("--overrides", a.overrides,
                  "dotted-path config overrides, key=value (last one wins)");
  cmd->add_option("--parallelism", a.parallelism,
                  "concurrent backend calls per round (default: logical processors, "
                  "capped at 8 for llm backends)");
  cmd->add_option("--backend", a.backend_kind, "backend kind override")
      ->check(CLI::IsMember({"llm", "pool", "synthetic"}));
}

// Loads the config file and folds in the command-line overrides.
nlohmann::json resolved_config(const Args& a) {
  nlohmann::json j = load_config_json(a.config_path);
  if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
  if (!a.backend_kind.empty()) {
    nlohmann::json& b = j["backend"];
    b["kind"] = a.backend_kind;
    for (const std::string key : {"llm", "pool", "synthetic"}) {
      if (key != a.backend_kind && b.contains(key)) b.erase(key);
    }
    if (!b.contains(a.backend_kind)) b[a.backend_kind] = nlohmann::json::object();
  }
  apply_overrides(j, a.overrides);
  if (a.seed_set) j["master_seed"] = a.seed;
  if (!a.out_dir.empty()) j["output_path"] = a.out_dir;
  return j;
}

ExperimentConfig experiment_config(const nlohmann::json& j) {
  ExperimentConfig cfg = j.get<ExperimentConfig>();
  cfg.validate();
  return cfg;
}

Dataset dataset_for(const ExperimentConfig& cfg) {
  if (cfg.dataset_path.empty()) throw ConfigError("dataset_path: required");
  Dataset ds = load_dataset(cfg.dataset_path);
  const std::vector<std::string> problems = ds.validate();
  if (!problems.empty()) throw ConfigError("dataset: " + problems.front());
  return ds;
}

PromptBundle prompts_for(const nlohmann::json& j) {
  if (j.contains("prompts_path")) {
    return PromptBundle::from_file(j.at("prompts_path").get<std::string>());
  }
  return PromptBundle::defaults();
}

// Viewpoint pools, when the config supplies them: an explicit pool file
// ("pool_path") or balanced synthetic pools ("synthetic_pools.per_class").
std::optional<backends::PoolSet> pools_for(const nlohmann::json& j, const Dataset& dataset) {
  if (j.contains("pool_path")) {
    return backends::load_pools(j.at("pool_path").get<std::string>());
  }
  if (j.contains("synthetic_pools")) {
    const nlohmann::json& sp = j.at("synthetic_pools");
    if (!sp.is_object()) throw ConfigError("synthetic_pools: must be an object");
    return harness::generate_pools(dataset, sp.value("per_class", 40));
  }
  return std::nullopt;
}

const Question& pick_question(const Dataset& dataset, const nlohmann::json& j) {
  if (j.contains("question_id")) {
    const std::string id = j.at("question_id").get<std::string>();
    const Question* q = dataset.find(id);
    if (q == nullptr) throw ConfigError("question_id: \"" + id + "\" not in dataset");
    return *q;
  }
  if (dataset.questions.empty()) throw ConfigError("dataset: no questions");
  return dataset.questions.front();
}

int effective_parallelism(int flag, backends::Kind kind) {
  if (flag > 0) return flag;
  int p = static_cast<int>(std::thread::hardware_concurrency());
  if (p < 1) p = 1;
  if (kind == backends::Kind::kLlm) p = std::min(p, 8);
  return p;
}

fs::path out_dir_for(const Args& a, const ExperimentConfig& cfg, const std::string& fallback) {
  if (!a.out_dir.empty()) return a.out_dir;
  if (!cfg.output_path.empty()) return cfg.output_path;
  return fs::path("runs") / fallback;
}

std::vector<Strategy> strategies_for(const nlohmann::json& j) {
  std::vector<Strategy> strategies;
  if (j.contains("strategies")) {
    for (const auto& item : j.at("strategies")) {
      strategies.push_back(strategy_from_string(item.get<std::string>()));
    }
    if (strategies.empty()) throw ConfigError("strategies: must not be empty");
  } else {
    strategies = {Strategy::kFixed, Strategy::kRandom, Strategy::kMadc, Strategy::kTruthFirst,
                  Strategy::kTruthLast};
  }
  return strategies;
}

void spill(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFault("cannot open \"" + path.string() + "\" for writing");
  out << content;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_debate(const Args& a) {
  const nlohmann::json j = resolved_config(a);
  const ExperimentConfig cfg = experiment_config(j);
  std::cout << "master_seed: " << cfg.master_seed << "\n";

  const Dataset dataset = dataset_for(cfg);
  const Question& question = pick_question(dataset, j);
  const std::optional<backends::PoolSet> pools = pools_for(j, dataset);
  const PromptBundle prompts = prompts_for(j);
  const std::unique_ptr<backends::AgentBackend> backend =
      backends::make_backend(cfg.backend, pools ? &*pools : nullptr);
  RunOptions options;
  options.parallelism = effective_parallelism(a.parallelism, cfg.backend.kind);

  const DebateTranscript t = run_debate(question, cfg, *backend, prompts, options);

  const fs::path out = out_dir_for(a, cfg, "debate");
  fs::create_directories(out);
  spill(out / "transcript.json", nlohmann::json(t).dump(2) + "\n");
  spill(out / "metrics.csv", metrics_csv(metric_rows(t, question)));

  std::cout << "final_answer: " << t.final_answer << "\n";
  std::cout << "transcript: " << (out / "transcript.json").string() << "\n";
  return 0;
}

int cmd_experiment(const Args& a) {
  const nlohmann::json j = resolved_config(a);
  const ExperimentConfig cfg = experiment_config(j);
  std::cout << "master_seed: " << cfg.master_seed << "\n";

  const Dataset dataset = dataset_for(cfg);
  const std::optional<backends::PoolSet> pools = pools_for(j, dataset);
  const PromptBundle prompts = prompts_for(j);
  const std::vector<harness::StrategyCell> cells =
      harness::standard_cells(cfg, strategies_for(j), j.value("include_baselines", true));
  RunOptions options;
  options.parallelism = effective_parallelism(a.parallelism, cfg.backend.kind);

  const fs::path out = out_dir_for(a, cfg, "experiment");
  const std::vector<harness::SummaryRow> rows = harness::run_strategy_comparison(
      cells, dataset, pools ? &*pools : nullptr, prompts, out, options);

  for (const harness::SummaryRow& r : rows) {
    std::cout << "cell " << r.label << ": accuracy_mean=" << format_double(r.accuracy_mean)
              << " accuracy_sd=" << format_double(r.accuracy_sd)
              << " entropy_mean=" << format_double(r.entropy_mean) << "\n";
  }
  std::cout << "summary: " << (out / "summary.csv").string() << "\n";
  return 0;
}

int cmd_threshold(const Args& a) {
  const nlohmann::json j = resolved_config(a);
  const ExperimentConfig cfg = experiment_config(j);
  std::cout << "master_seed: " << cfg.master_seed << "\n";

  const Dataset dataset = dataset_for(cfg);
  const Question& question = pick_question(dataset, j);
  const std::optional<backends::PoolSet> pools = pools_for(j, dataset);
  if (!pools) {
    throw ConfigError("pool_path: threshold sweeps need pool_path or synthetic_pools");
  }
  const auto it = pools->find(question.id);
  if (it == pools->end()) {
    throw ConfigError("pool: no entries for question \"" + question.id + "\"");
  }
  harness::ThresholdSpec spec;
  if (j.contains("threshold")) spec = j.at("threshold").get<harness::ThresholdSpec>();
  const PromptBundle prompts = prompts_for(j);

  const fs::path out = out_dir_for(a, cfg, "threshold");
  harness::run_threshold(spec, question, it->second, cfg.backend, prompts, cfg.master_seed, out);
  std::cout << "curve: " << (out / "curve.csv").string() << "\n";
  std::cout << "mean_curve: " << (out / "mean_curve.csv").string() << "\n";
  return 0;
}

int cmd_scaling(const Args& a) {
  const nlohmann::json j = resolved_config(a);
  const ExperimentConfig cfg = experiment_config(j);
  std::cout << "master_seed: " << cfg.master_seed << "\n";

  if (!j.contains("scaling")) throw ConfigError("scaling: section required");
  const harness::ScalingSpec spec = j.at("scaling").get<harness::ScalingSpec>();
  const Dataset dataset = dataset_for(cfg);
  const std::optional<backends::PoolSet> pools = pools_for(j, dataset);
  const PromptBundle prompts = prompts_for(j);
  RunOptions options;
  options.parallelism = effective_parallelism(a.parallelism, cfg.backend.kind);

  const fs::path out = out_dir_for(a, cfg, "scaling");
  const std::vector<harness::ScalingRow> rows = harness::run_scaling(
      spec, cfg, dataset, pools ? &*pools : nullptr, prompts, out, options);
  for (const harness::ScalingRow& r : rows) {
    std::cout << "cell " << r.strategy << " " << r.axis << "=" << r.value
              << ": accuracy_mean=" << format_double(r.accuracy_mean) << "\n";
  }
  std::cout << "scaling: " << (out / "scaling.csv").string() << "\n";
  return 0;
}

int cmd_metrics(const Args& a) {
  if (!fs::exists(a.in_dir)) throw ConfigError("in: \"" + a.in_dir + "\" does not exist");

  // Every transcripts.jsonl below --in gets its metrics.csv recomputed from
  // the persisted transcripts and the dataset named in the sibling
  // config.json (written in place, or mirrored under --out when given).
  std::vector<fs::path> transcript_files;
  if (fs::is_regular_file(a.in_dir)) {
    transcript_files.push_back(a.in_dir);
  } else {
    for (const auto& entry : fs::recursive_directory_iterator(a.in_dir)) {
      if (entry.is_regular_file() && entry.path().filename() == "transcripts.jsonl") {
        transcript_files.push_back(entry.path());
      }
    }
    std::sort(transcript_files.begin(), transcript_files.end());
  }
  if (transcript_files.empty()) {
    throw ConfigError("in: no transcripts.jsonl found under \"" + a.in_dir + "\"");
  }

  for (const fs::path& tpath : transcript_files) {
    const fs::path cell_dir = tpath.parent_path();
    const fs::path config_path = cell_dir / "config.json";
    if (!fs::exists(config_path)) {
      throw ConfigError("config: \"" + config_path.string() + "\" not found next to transcripts");
    }
    const ExperimentConfig cfg =
        load_config_json(config_path.string()).get<ExperimentConfig>();
    const Dataset dataset = dataset_for(cfg);

    std::vector<MetricRow> rows;
    for (const DebateTranscript& t : load_transcripts(tpath.string())) {
      const Question* q = dataset.find(t.question_id);
      if (q == nullptr) {
        throw ConfigError("dataset: transcript question \"" + t.question_id + "\" not found");
      }
      const std::vector<MetricRow> tr = metric_rows(t, *q);
      rows.insert(rows.end(), tr.begin(), tr.end());
    }

    fs::path dest_dir = cell_dir;
    if (!a.out_dir.empty()) {
      dest_dir = fs::path(a.out_dir) / fs::relative(cell_dir, a.in_dir);
      fs::create_directories(dest_dir);
    }
    spill(dest_dir / "metrics.csv", metrics_csv(rows));
    std::cout << "metrics: " << (dest_dir / "metrics.csv").string() << "\n";
  }
  return 0;
}

int cmd_validate(const Args& a) {
  const nlohmann::json j = resolved_config(a);
  const ExperimentConfig cfg = experiment_config(j);
  std::cout << "config: ok\n";

  if (!cfg.dataset_path.empty()) {
    const Dataset dataset = dataset_for(cfg);
    std::cout << "dataset: ok (" << dataset.questions.size() << " questions)\n";
  }
  if (j.contains("prompts_path")) {
    prompts_for(j);
    std::cout << "prompts: ok\n";
  }
  if (j.contains("threshold")) {
    j.at("threshold").get<harness::ThresholdSpec>().validate();
    std::cout << "threshold: ok\n";
  }
  if (j.contains("scaling")) {
    j.at("scaling").get<harness::ScalingSpec>().validate();
    std::cout << "scaling: ok\n";
  }
  if (j.contains("pool_path")) {
    backends::load_pools(j.at("pool_path").get<std::string>());
    std::cout << "pools: ok\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parley: role-allocation experiments for multi-agent debate"};
  app.require_subcommand(1);

  Args args;
  CLI::App* debate = app.add_subcommand("debate", "run one debate and write its transcript");
  add_run_flags(debate, args);
  CLI::App* experiment = app.add_subcommand("experiment", "strategy-comparison sweep");
  add_run_flags(experiment, args);
  CLI::App* threshold = app.add_subcommand("threshold", "reversal-threshold sweep");
  add_run_flags(threshold, args);
  CLI::App* scaling = app.add_subcommand("scaling", "agent/round scaling sweep");
  add_run_flags(scaling, args);
  CLI::App* metrics = app.add_subcommand("metrics", "recompute metric CSVs from transcripts");
  metrics->add_option("--in", args.in_dir, "sweep directory or transcripts.jsonl")->required();
  metrics->add_option("--out", args.out_dir, "mirror output directory (default: in place)");
  CLI::App* validate = app.add_subcommand("validate", "schema-check a config");
  validate->add_option("--config", args.config_path, "JSON config file")->required();
  validate->add_option("--overrides", args.overrides, "dotted-path overrides, key=value");
  validate->add_option("--backend", args.backend_kind, "backend kind override")
      ->check(CLI::IsMember({"llm", "pool", "synthetic"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    error_line("config", e.what());
    return 1;
  }

  try {
    if (debate->parsed()) return cmd_debate(args);
    if (experiment->parsed()) return cmd_experiment(args);
    if (threshold->parsed()) return cmd_threshold(args);
    if (scaling->parsed()) return cmd_scaling(args);
    if (metrics->parsed()) return cmd_metrics(args);
    if (validate->parsed()) return cmd_validate(args);
  } catch (const ConfigError& e) {
    error_line("config", e.what());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    error_line("config", e.what());
    return 1;
  } catch (const RuntimeFault& e) {
    error_line("runtime", e.what());
    return 2;
  } catch (const std::exception& e) {
    error_line("runtime", e.what());
    return 2;
  }
  return 1;
}
