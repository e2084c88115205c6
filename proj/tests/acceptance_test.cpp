// Acceptance suite: one deterministic check per release criterion, each
// printed as a single PASS/FAIL line.  Exits nonzero if any criterion fails.
#include "helpers.hpp"
#include "parley/allocation.hpp"
#include "parley/answer.hpp"
#include "parley/backends.hpp"
#include "parley/engine.hpp"
#include "parley/harness.hpp"
#include "parley/metrics.hpp"
#include "parley/rng.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <map>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

using namespace parley;
using parley::testing::TempDir;
using parley::testing::make_question;
using parley::testing::read_file;

namespace {

const std::string kSentinel{kNoAnswer};

struct Outcome {
  bool pass = false;
  std::string detail;
};

int count_occurrences(const std::string& haystack, const std::string& needle) {
  if (needle.empty()) return 0;
  int count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

std::string fmt(double v) { return format_double(v); }

// ---------------------------------------------------------------------------
// Criterion 1: frozen entropy and log-likelihood reference values.
// ---------------------------------------------------------------------------
Outcome criterion_metrics() {
  RoundDistribution skewed;
  skewed.counts = {{"A", 8}, {"B", 1}, {"C", 1}};
  skewed.n = 10;
  const double h = entropy_bits(skewed);

  RoundDistribution near_consensus;
  near_consensus.counts = {{"A", 9}, {"B", 1}};
  near_consensus.n = 10;
  const LogLikelihood ll = log_likelihood_bits(near_consensus, "A");

  Outcome o;
  o.pass = std::abs(h - 0.9219) <= 1e-4 && !ll.undefined && std::abs(ll.bits - (-0.152)) <= 1e-3;
  o.detail = "entropy(8:1:1)=" + fmt(h) + " (want 0.9219 +/- 1e-4), ll(9:1)=" + fmt(ll.bits) +
             " (want -0.152 +/- 1e-3)";
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 2: consistency scores equal a brute-force pairwise oracle on
// every answer assignment with n <= 6 over a 3-letter alphabet, and the
// max-consistency selection is always modal.
// ---------------------------------------------------------------------------
Outcome criterion_consistency_oracle() {
  const std::vector<std::string> alphabet = {"A", "B", kSentinel};
  long cases = 0;
  for (int n = 1; n <= 6; ++n) {
    long total = 1;
    for (int i = 0; i < n; ++i) total *= 3;
    for (long code = 0; code < total; ++code) {
      std::vector<std::string> answers;
      long c = code;
      for (int i = 0; i < n; ++i) {
        answers.push_back(alphabet[static_cast<std::size_t>(c % 3)]);
        c /= 3;
      }
      const auto vps = parley::testing::make_viewpoints(answers);
      const ConsistencyScores cs = consistency_scores(vps);
      for (int i = 0; i < n; ++i) {
        int oracle = 0;
        for (int k = 0; k < n; ++k) {
          if (k == i) continue;
          if (answers[static_cast<std::size_t>(i)] != kSentinel &&
              answers[static_cast<std::size_t>(i)] == answers[static_cast<std::size_t>(k)]) {
            ++oracle;
          }
        }
        if (cs.scores[static_cast<std::size_t>(i)] != static_cast<double>(oracle)) {
          return {false, "score mismatch at n=" + std::to_string(n) +
                             " code=" + std::to_string(code) + " agent " + std::to_string(i)};
        }
      }

      const auto [winner, answer] = select_max_prob(cs, vps);
      if (answer != vps[static_cast<std::size_t>(winner)].answer) {
        return {false, "selected answer does not belong to the selected agent"};
      }
      std::map<std::string, int> freq;
      for (const auto& a : answers) {
        if (a != kSentinel) ++freq[a];
      }
      if (freq.empty()) {
        if (answer != kSentinel) return {false, "all-sentinel round selected a real answer"};
      } else {
        int max_count = 0;
        for (const auto& [a, count] : freq) max_count = std::max(max_count, count);
        if (answer == kSentinel || freq[answer] != max_count) {
          return {false, "non-modal selection at n=" + std::to_string(n) +
                             " code=" + std::to_string(code)};
        }
      }
      ++cases;
    }
  }
  return {true, std::to_string(cases) + " exhaustive assignments checked"};
}

// ---------------------------------------------------------------------------
// Criterion 3: consistency ordering yields a permutation whose scores are
// nondecreasing with the argmax agent last, over 10,000 random vectors.
// ---------------------------------------------------------------------------
Outcome criterion_ordering_properties() {
  Rng rng(0xC3);
  for (int trial = 0; trial < 10000; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(50));
    ConsistencyScores cs;
    cs.scores.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      cs.scores.push_back(static_cast<double>(rng.below(static_cast<std::uint64_t>(n))));
    }
    const AllocationOrder order = madc_order(cs);

    std::vector<int> sorted = order.permutation;
    std::sort(sorted.begin(), sorted.end());
    for (int i = 0; i < n; ++i) {
      if (sorted[static_cast<std::size_t>(i)] != i) {
        return {false, "not a permutation at trial " + std::to_string(trial)};
      }
    }
    double prev = -1.0;
    for (int idx : order.permutation) {
      const double s = cs.scores[static_cast<std::size_t>(idx)];
      if (s < prev) return {false, "scores decrease at trial " + std::to_string(trial)};
      prev = s;
    }
    const double max_score = *std::max_element(cs.scores.begin(), cs.scores.end());
    if (cs.scores[static_cast<std::size_t>(order.permutation.back())] != max_score) {
      return {false, "final agent misses the maximum at trial " + std::to_string(trial)};
    }
  }
  return {true, "10000 random score vectors, n <= 50"};
}

// ---------------------------------------------------------------------------
// Criterion 4: protocol invariants over 1,000 seeded synthetic debates.
// ---------------------------------------------------------------------------
class RecordingBackend : public backends::AgentBackend {
 public:
  explicit RecordingBackend(backends::AgentBackend& inner) : inner_(inner) {}
  std::string name() const override { return inner_.name(); }
  std::string initial_response(const backends::CallContext& ctx,
                               const std::string& prompt) override {
    return inner_.initial_response(ctx, prompt);
  }
  std::string debate_response(const backends::CallContext& ctx, const std::string& prompt,
                              const Viewpoint& own_prev,
                              const std::vector<std::string>& peers) override {
    {
      std::lock_guard<std::mutex> lock(mu_);
      seen_.push_back({ctx.round, ctx.agent_index, prompt, own_prev.text});
    }
    return inner_.debate_response(ctx, prompt, own_prev, peers);
  }

  struct Rec {
    int round;
    int agent;
    std::string prompt;
    std::string own_text;
  };
  std::vector<Rec> seen() const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_;
  }

 private:
  backends::AgentBackend& inner_;
  mutable std::mutex mu_;
  std::vector<Rec> seen_;
};

Outcome criterion_protocol_invariants() {
  Dataset ds;
  const char* keys[] = {"A", "B", "C"};
  for (int i = 0; i < 10; ++i) {
    ds.questions.push_back(make_question("p" + std::to_string(i), keys[i % 3]));
  }
  const backends::PoolSet pools = harness::generate_pools(ds, 10);

  backends::BackendDescriptor desc;
  desc.kind = backends::Kind::kSynthetic;
  backends::SyntheticConfig sc;
  sc.gamma = 2.0;
  sc.self_weight = 1.0;
  sc.noise_epsilon = 0.05;
  desc.synthetic = sc;

  const Strategy strategies[] = {Strategy::kFixed, Strategy::kRandom, Strategy::kTruthFirst,
                                 Strategy::kTruthLast, Strategy::kMadc};

  for (int run = 0; run < 1000; ++run) {
    ExperimentConfig cfg;
    cfg.backend = desc;
    cfg.n_agents = 2 + run % 9;   // 2..10
    cfg.n_rounds = 2 + run % 3;   // 2..4
    cfg.strategy = strategies[run % 5];
    cfg.master_seed = 10000 + static_cast<std::uint64_t>(run);
    const Question& q = ds.questions[static_cast<std::size_t>(run % 10)];

    const auto inner = backends::make_backend(desc, &pools);
    RecordingBackend backend(*inner);
    const DebateTranscript t = run_debate(q, cfg, backend, PromptBundle::defaults());

    const auto problems = validate_transcript(t);
    if (!problems.empty()) {
      return {false, "run " + std::to_string(run) + ": " + problems.front()};
    }

    for (const RecordingBackend::Rec& rec : backend.seen()) {
      const int blocks = count_occurrences(rec.prompt, "One agent solution:");
      if (blocks != cfg.n_agents - 1) {
        return {false, "run " + std::to_string(run) + ": round " + std::to_string(rec.round) +
                           " prompt shows " + std::to_string(blocks) + " solutions, want " +
                           std::to_string(cfg.n_agents - 1)};
      }
      // The receiver's own previous text may appear only as often as other
      // agents hold a byte-identical text.
      int duplicates = 0;
      for (int k = 0; k < cfg.n_agents; ++k) {
        if (k == rec.agent) continue;
        if (t.paths[static_cast<std::size_t>(k)]
                .viewpoints[static_cast<std::size_t>(rec.round - 2)]
                .text == rec.own_text) {
          ++duplicates;
        }
      }
      if (count_occurrences(rec.prompt, rec.own_text) != duplicates) {
        return {false, "run " + std::to_string(run) + ": receiver's own round-" +
                           std::to_string(rec.round - 1) + " text leaked into its prompt"};
      }
      const std::string& recorded_hash = t.paths[static_cast<std::size_t>(rec.agent)]
                                             .viewpoints[static_cast<std::size_t>(rec.round - 1)]
                                             .prompt_hash;
      if (content_hash(rec.prompt) != recorded_hash) {
        return {false, "run " + std::to_string(run) + ": transcript prompt hash differs from " +
                           "the prompt the backend received"};
      }
    }

    const auto inner2 = backends::make_backend(desc, &pools);
    RecordingBackend backend2(*inner2);
    const DebateTranscript t2 = run_debate(q, cfg, backend2, PromptBundle::defaults());
    if (nlohmann::json(t).dump() != nlohmann::json(t2).dump()) {
      return {false, "run " + std::to_string(run) + ": identical seeds produced different bytes"};
    }
  }
  return {true, "1000 debates, n in [2,10], rounds in [2,4], all strategies"};
}

// ---------------------------------------------------------------------------
// Criteria 5 and 7 share one batch of strategy-comparison runs.
// ---------------------------------------------------------------------------
struct ComparisonRuns {
  std::map<std::string, double> accuracy;      // by strategy label
  std::map<std::string, double> mean_entropy;  // final round, by strategy label
  int n_questions = 0;
};

ComparisonRuns compute_comparison_runs() {
  Dataset ds;
  const char* keys[] = {"A", "B", "C"};
  for (int i = 0; i < 200; ++i) {
    ds.questions.push_back(make_question("c" + std::to_string(i), keys[i % 3]));
  }
  const backends::PoolSet pools = harness::generate_pools(ds, 10);  // 50% correct

  ExperimentConfig base;
  base.backend.kind = backends::Kind::kSynthetic;
  backends::SyntheticConfig sc;
  sc.gamma = 2.0;
  sc.self_weight = 1.0;
  sc.noise_epsilon = 0.05;
  base.backend.synthetic = sc;
  base.n_agents = 10;
  base.n_rounds = 2;
  base.master_seed = 777;

  ComparisonRuns runs;
  runs.n_questions = static_cast<int>(ds.questions.size());
  for (Strategy s : {Strategy::kFixed, Strategy::kRandom, Strategy::kTruthFirst,
                     Strategy::kTruthLast}) {
    ExperimentConfig cfg = base;
    cfg.strategy = s;
    const auto backend = backends::make_backend(cfg.backend, &pools);
    int hits = 0;
    double entropy_sum = 0.0;
    for (const Question& q : ds.questions) {
      const DebateTranscript t = run_debate(q, cfg, *backend, PromptBundle::defaults());
      if (t.final_answer == *q.answer_key) ++hits;
      entropy_sum += entropy_bits(round_distribution(t, t.n_rounds));
    }
    const std::string label = to_string(s);
    runs.accuracy[label] = static_cast<double>(hits) / static_cast<double>(runs.n_questions);
    runs.mean_entropy[label] = entropy_sum / static_cast<double>(runs.n_questions);
  }
  return runs;
}

const ComparisonRuns& comparison_runs() {
  static const ComparisonRuns runs = compute_comparison_runs();
  return runs;
}

Outcome criterion_strategy_separation() {
  const ComparisonRuns& runs = comparison_runs();
  const double fixed = runs.accuracy.at("fixed");
  const double truth_last = runs.accuracy.at("truth_last");
  const double truth_first = runs.accuracy.at("truth_first");
  Outcome o;
  o.pass = truth_last >= fixed + 0.15 && truth_first < fixed;
  o.detail = "accuracy over " + std::to_string(runs.n_questions) +
             " questions: truth_last=" + fmt(truth_last) + " fixed=" + fmt(fixed) +
             " truth_first=" + fmt(truth_first) + " (need truth_last - fixed >= 0.15 and " +
             "truth_first < fixed)";
  return o;
}

Outcome criterion_entropy_order() {
  const ComparisonRuns& runs = comparison_runs();
  const double tl = runs.mean_entropy.at("truth_last");
  const double rnd = runs.mean_entropy.at("random");
  Outcome o;
  o.pass = tl <= rnd;
  o.detail = "mean final-round entropy: truth_last=" + fmt(tl) + " random=" + fmt(rnd) +
             " (need truth_last <= random)";
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 6: reversal-threshold curve shapes for all three placements.
// ---------------------------------------------------------------------------
Outcome criterion_threshold_shape() {
  const Question q = make_question("t1", "A");
  Dataset ds;
  ds.questions.push_back(q);
  const backends::PoolSet pools = harness::generate_pools(ds, 40);

  backends::BackendDescriptor desc;
  desc.kind = backends::Kind::kSynthetic;
  backends::SyntheticConfig sc;
  sc.gamma = 2.0;
  sc.self_weight = 1.0;
  sc.noise_epsilon = 0.05;
  desc.synthetic = sc;

  TempDir tmp;
  std::map<std::string, harness::ThresholdResult> results;
  for (auto method : {harness::ScalingMethod::kCorrectFirst,
                      harness::ScalingMethod::kIncorrectFirst,
                      harness::ScalingMethod::kAlternating}) {
    harness::ThresholdSpec spec;
    spec.scaling_method = method;
    spec.max_per_class = 40;
    spec.count_range = {1, 80};
    spec.repetitions_per_count = 10;
    spec.experiment_repeats = 5;
    spec.responder_mode = harness::ResponderMode::kSingleResponder;
    results[harness::to_string(method)] = harness::run_threshold(
        spec, q, pools.at("t1"), desc, PromptBundle::defaults(), 4242,
        tmp.path() / harness::to_string(method));
  }

  auto at_count = [](const harness::ThresholdResult& r, int count) {
    for (std::size_t i = 0; i < r.counts.size(); ++i) {
      if (r.counts[i] == count) return r.mean_accuracy[i];
    }
    return -1.0;
  };
  const double cf20 = at_count(results.at("correct_first"), 20);
  const double cf80 = at_count(results.at("correct_first"), 80);
  const double if20 = at_count(results.at("incorrect_first"), 20);
  const double if80 = at_count(results.at("incorrect_first"), 80);
  const double alt80 = at_count(results.at("alternating"), 80);

  Outcome o;
  o.pass = cf20 >= 0.9 && cf80 <= 0.2 && if20 <= 0.1 && if80 >= 0.8 && cf80 < alt80 &&
           alt80 < if80;
  o.detail = "mean accuracy: correct_first@20=" + fmt(cf20) + " @80=" + fmt(cf80) +
             ", incorrect_first@20=" + fmt(if20) + " @80=" + fmt(if80) +
             ", alternating@80=" + fmt(alt80) +
             " (need >=0.9, <=0.2, <=0.1, >=0.8, strictly between)";
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 8: extraction fidelity on long free-form transcript excerpts.
// ---------------------------------------------------------------------------
Outcome criterion_extraction_fidelity() {
  const std::string dir = PARLEY_FIXTURES_DIR;
  const std::string first = extract_answer(read_file(dir + "/excerpt_306.txt"));
  const std::string second = extract_answer(read_file(dir + "/excerpt_162.txt"));
  Outcome o;
  o.pass = first == "306" && second == "162";
  o.detail = "extracted \"" + first + "\" and \"" + second + "\" (want \"306\" and \"162\")";
  return o;
}

// ---------------------------------------------------------------------------
// Criterion 9: the self-consistency baseline equals an independent majority
// vote over the initial-round answers of every transcript.
// ---------------------------------------------------------------------------
std::string majority_oracle(const std::vector<std::string>& answers) {
  int best = 0;
  std::string winner = kSentinel;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    if (answers[i] == kSentinel) continue;
    int count = 0;
    for (const std::string& a : answers) {
      if (a == answers[i]) ++count;
    }
    if (count > best) {
      best = count;
      winner = answers[i];
    }
  }
  return winner;
}

Outcome criterion_self_consistency() {
  Dataset ds;
  const char* keys[] = {"A", "B", "C"};
  for (int i = 0; i < 200; ++i) {
    ds.questions.push_back(make_question("s" + std::to_string(i), keys[i % 3]));
  }
  const backends::PoolSet pools = harness::generate_pools(ds, 10);

  ExperimentConfig base;
  base.backend.kind = backends::Kind::kSynthetic;
  base.backend.synthetic = backends::SyntheticConfig{2.0, 1.0, 0.05};
  base.n_agents = 10;
  base.n_rounds = 3;  // the baseline cell must collapse this to one round
  base.master_seed = 888;

  const auto cells = harness::standard_cells(base, {}, /*include_baselines=*/true);
  const harness::StrategyCell* sc_cell = nullptr;
  for (const auto& cell : cells) {
    if (cell.label == "self_consistency") sc_cell = &cell;
  }
  if (sc_cell == nullptr || sc_cell->config.n_rounds != 1 ||
      sc_cell->config.aggregation != Aggregation::kMajorityVote) {
    return {false, "self-consistency cell is not a one-round majority-vote configuration"};
  }

  const auto backend = backends::make_backend(sc_cell->config.backend, &pools);
  for (const Question& q : ds.questions) {
    const DebateTranscript t = run_debate(q, sc_cell->config, *backend, PromptBundle::defaults());
    std::vector<std::string> initial;
    for (const DebatePath& p : t.paths) initial.push_back(p.viewpoints.front().answer);
    const std::string expected = majority_oracle(initial);
    if (t.final_answer != expected) {
      return {false, q.id + ": final answer \"" + t.final_answer +
                         "\" differs from the recomputed majority \"" + expected + "\""};
    }
  }
  return {true, "200 seeded runs match the recomputed initial-round majority exactly"};
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------
bool run_criterion(int number, const std::string& label, double budget_seconds,
                   const std::function<Outcome()>& fn) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail = std::string("exception: ") + e.what();
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  bool within_budget = budget_seconds <= 0.0 || elapsed < budget_seconds;
  char timing[96];
  if (budget_seconds > 0.0) {
    std::snprintf(timing, sizeof(timing), "[%.2fs, budget %.0fs]", elapsed, budget_seconds);
  } else {
    std::snprintf(timing, sizeof(timing), "[%.2fs]", elapsed);
  }
  const bool pass = o.pass && within_budget;
  std::string line = std::string(pass ? "PASS" : "FAIL") + " criterion " +
                     std::to_string(number) + ": " + label + " — " + o.detail;
  if (!within_budget) line += " — over time budget";
  line += " ";
  line += timing;
  std::printf("%s\n", line.c_str());
  std::fflush(stdout);
  return pass;
}

}  // namespace

int main() {
  int failures = 0;
  failures += !run_criterion(1, "frozen entropy and log-likelihood values", 1.0,
                             criterion_metrics);
  failures += !run_criterion(2, "consistency scores match an exhaustive pairwise oracle", 10.0,
                             criterion_consistency_oracle);
  failures += !run_criterion(3, "consistency ordering is a nondecreasing permutation, argmax last",
                             10.0, criterion_ordering_properties);
  failures += !run_criterion(4, "debate protocol invariants over 1000 seeded synthetic runs",
                             60.0, criterion_protocol_invariants);
  failures += !run_criterion(5, "ordering strategies separate accuracy on the synthetic model",
                             120.0, criterion_strategy_separation);
  failures += !run_criterion(6, "reversal-threshold curves have the expected shape", 300.0,
                             criterion_threshold_shape);
  failures += !run_criterion(7, "truth-last consensus entropy does not exceed random's", 0.0,
                             criterion_entropy_order);
  failures += !run_criterion(8, "answer extraction on long transcript excerpts", 0.0,
                             criterion_extraction_fidelity);
  failures += !run_criterion(9, "self-consistency equals a recomputed majority vote", 0.0,
                             criterion_self_consistency);

  std::printf("acceptance: %d/9 criteria passed\n", 9 - failures);
  return failures == 0 ? 0 : 1;
}
