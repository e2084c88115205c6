#include "parley/engine.hpp"

#include "parley/answer.hpp"
#include "parley/rng.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <thread>

namespace parley {
namespace {

constexpr std::string_view kQuestionPlaceholder = "{question}";
constexpr std::string_view kSolutionPlaceholder = "{solution}";

std::size_t count_occurrences(const std::string& text, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

std::string render(const std::string& tmpl, std::string_view placeholder,
                   const std::string& value) {
  const std::size_t pos = tmpl.find(placeholder);
  if (pos == std::string::npos) return tmpl;
  std::string out = tmpl;
  out.replace(pos, placeholder.size(), value);
  return out;
}

void require_placeholders(const std::string& text, const std::string& field,
                          std::size_t want_question, std::size_t want_solution) {
  if (count_occurrences(text, kQuestionPlaceholder) != want_question) {
    throw ConfigError("prompts." + field + ": must contain exactly " +
                      std::to_string(want_question) + " {question} placeholder(s)");
  }
  if (count_occurrences(text, kSolutionPlaceholder) != want_solution) {
    throw ConfigError("prompts." + field + ": must contain exactly " +
                      std::to_string(want_solution) + " {solution} placeholder(s)");
  }
}

// Runs fn(0..n-1) with up to `parallelism` worker threads.  Results keyed
// by index stay deterministic regardless of scheduling; the lowest-index
// exception is rethrown after all workers finish.
void parallel_for(int n, int parallelism, const std::function<void(int)>& fn) {
  if (n <= 0) return;
  const int workers = std::max(1, std::min(parallelism, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::atomic<int> next{0};
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

// Barrier precondition: prev_round must hold agent i's viewpoint at slot i,
// all from the same round.
void require_complete_round(const std::vector<Viewpoint>& prev_round, std::size_t n_agents) {
  if (prev_round.size() != n_agents) {
    throw RuntimeFault("round barrier violated: round holds " +
                       std::to_string(prev_round.size()) + " of " + std::to_string(n_agents) +
                       " viewpoints");
  }
  for (std::size_t i = 0; i < prev_round.size(); ++i) {
    if (prev_round[i].agent_index != static_cast<int>(i)) {
      throw RuntimeFault("round barrier violated: slot " + std::to_string(i) +
                         " holds agent " + std::to_string(prev_round[i].agent_index));
    }
    if (prev_round[i].round != prev_round.front().round) {
      throw RuntimeFault("round barrier violated: mixed rounds in context");
    }
  }
}

Viewpoint make_viewpoint(int agent_index, int round, std::string text,
                         const std::string& prompt) {
  Viewpoint v;
  v.agent_index = agent_index;
  v.round = round;
  v.text = std::move(text);
  v.answer = extract_answer(v.text);
  v.prompt_hash = content_hash(prompt);
  return v;
}

Viewpoint fault_viewpoint(int agent_index, int round, const std::string& prompt,
                          const Question& question, const std::exception& error) {
  std::cerr << "warning: backend fault (question " << question.id << ", agent " << agent_index
            << ", round " << round << "): " << error.what() << '\n';
  Viewpoint v;
  v.agent_index = agent_index;
  v.round = round;
  v.answer = kNoAnswer;
  v.prompt_hash = content_hash(prompt);
  return v;
}

}  // namespace

PromptBundle PromptBundle::defaults() {
  PromptBundle p;
  p.question_template =
      "Can you answer the following question as accurately as possible? {question} "
      "Explain your answer.\n"
      "Make sure putting the answer in the form (X) at the end of your response.";
  p.debate_header = "These are the solutions to the problem from other agents:";
  p.solution_wrapper = "\n\nOne agent solution: {solution}";
  p.debate_footer =
      "\n\nUsing the reasoning from other agents as additional advice, can you give an "
      "updated answer? Examine your solution and that other agents step by step. "
      "Put your answer in the form (X) at the end of your response.";
  return p;
}

PromptBundle PromptBundle::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("prompts: cannot open file \"" + path + "\"");

  PromptBundle bundle = defaults();
  std::map<std::string, std::string*> sections = {
      {"system_preamble", &bundle.system_preamble},
      {"fewshot", &bundle.fewshot},
      {"question_template", &bundle.question_template},
      {"debate_header", &bundle.debate_header},
      {"solution_wrapper", &bundle.solution_wrapper},
      {"debate_footer", &bundle.debate_footer}};

  std::string* current = nullptr;
  std::string accumulated;
  std::string line;
  auto flush = [&] {
    if (current != nullptr) {
      // Drop the final newline added by accumulation.
      if (!accumulated.empty() && accumulated.back() == '\n') accumulated.pop_back();
      *current = accumulated;
    }
    accumulated.clear();
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line[0] == '@') {
      flush();
      const std::string name = line.substr(1);
      const auto it = sections.find(name);
      if (it == sections.end()) {
        throw ConfigError("prompts: unknown section \"@" + name + "\" in \"" + path + "\"");
      }
      current = it->second;
      continue;
    }
    if (current == nullptr) {
      if (line.find_first_not_of(" \t") != std::string::npos) {
        throw ConfigError("prompts: text before the first @section in \"" + path + "\"");
      }
      continue;
    }
    accumulated += line;
    accumulated += '\n';
  }
  flush();

  bundle.validate();
  return bundle;
}

void PromptBundle::validate() const {
  require_placeholders(system_preamble, "system_preamble", 0, 0);
  require_placeholders(fewshot, "fewshot", 0, 0);
  require_placeholders(question_template, "question_template", 1, 0);
  require_placeholders(debate_header, "debate_header", 0, 0);
  require_placeholders(solution_wrapper, "solution_wrapper", 0, 1);
  require_placeholders(debate_footer, "debate_footer", 0, 0);
}

std::string initial_prompt(const Question& question, const PromptBundle& prompts) {
  std::string out;
  if (!prompts.system_preamble.empty()) out += prompts.system_preamble + "\n\n";
  if (!prompts.fewshot.empty()) out += prompts.fewshot + "\n\n";
  out += render(prompts.question_template, kQuestionPlaceholder, question.prompt);
  return out;
}

std::string assemble_debate_prompt(const Question& question, int receiver_index,
                                   const AllocationOrder& order,
                                   const std::vector<Viewpoint>& prev_round,
                                   const PromptBundle& prompts) {
  require_complete_round(prev_round, order.permutation.size());
  if (receiver_index < 0 || receiver_index >= static_cast<int>(prev_round.size())) {
    throw ConfigError("receiver_index: out of range");
  }

  std::string prompt = render(prompts.question_template, kQuestionPlaceholder, question.prompt);
  if (!prompts.debate_header.empty()) prompt += "\n\n" + prompts.debate_header;
  for (int agent : order.permutation) {
    if (agent == receiver_index) continue;
    prompt += render(prompts.solution_wrapper, kSolutionPlaceholder,
                     prev_round[static_cast<std::size_t>(agent)].text);
  }
  prompt += prompts.debate_footer;
  return prompt;
}

std::vector<std::string> peer_answers_for(int receiver_index, const AllocationOrder& order,
                                          const std::vector<Viewpoint>& prev_round) {
  require_complete_round(prev_round, order.permutation.size());
  std::vector<std::string> peers;
  peers.reserve(prev_round.size() - 1);
  for (int agent : order.permutation) {
    if (agent == receiver_index) continue;
    peers.push_back(prev_round[static_cast<std::size_t>(agent)].answer);
  }
  return peers;
}

std::vector<Viewpoint> run_initial_round(const Question& question, int n_agents,
                                         backends::AgentBackend& backend,
                                         const PromptBundle& prompts, std::uint64_t master_seed,
                                         const RunOptions& options) {
  if (n_agents < 1) throw ConfigError("n_agents: must be >= 1");
  const std::string prompt = initial_prompt(question, prompts);
  const std::uint64_t shared = round_draw_seed(master_seed, question.id, 1);

  std::vector<Viewpoint> round(static_cast<std::size_t>(n_agents));
  parallel_for(n_agents, options.parallelism, [&](int i) {
    backends::CallContext ctx{question, i, n_agents, 1,
                              call_seed(master_seed, question.id, i, 1, 0), shared};
    try {
      round[static_cast<std::size_t>(i)] =
          make_viewpoint(i, 1, backend.initial_response(ctx, prompt), prompt);
    } catch (const RuntimeFault& e) {
      round[static_cast<std::size_t>(i)] = fault_viewpoint(i, 1, prompt, question, e);
    }
  });
  return round;
}

std::string aggregate(const std::vector<Viewpoint>& final_round, Aggregation mode) {
  if (final_round.empty()) throw ConfigError("final_round: no agents");

  if (mode == Aggregation::kMajorityVote) {
    // Scan in agent order: the first-seen answer among those with maximal
    // count wins, which is exactly "ties by the lowest agent index".
    std::map<std::string, int> counts;
    for (const Viewpoint& v : final_round) {
      if (!is_no_answer(v.answer)) ++counts[v.answer];
    }
    if (counts.empty()) return std::string(kNoAnswer);
    std::string best;
    int best_count = 0;
    for (const Viewpoint& v : final_round) {
      if (is_no_answer(v.answer)) continue;
      const int c = counts[v.answer];
      if (c > best_count) {
        best = v.answer;
        best_count = c;
      }
    }
    return best;
  }

  // Max consistency: argmax of the agreement scores over agents holding a
  // real answer (ties by the lowest agent index).
  const ConsistencyScores scores = consistency_scores(final_round);
  int best = -1;
  for (std::size_t i = 0; i < final_round.size(); ++i) {
    if (is_no_answer(final_round[i].answer)) continue;
    if (best < 0 || scores.scores[i] > scores.scores[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) return std::string(kNoAnswer);
  return final_round[static_cast<std::size_t>(best)].answer;
}

DebateTranscript run_debate(const Question& question, const ExperimentConfig& config,
                            backends::AgentBackend& backend, const PromptBundle& prompts,
                            const RunOptions& options) {
  if (config.n_agents < 1) throw ConfigError("n_agents: must be >= 1");
  if (config.n_rounds < 1) throw ConfigError("n_rounds: must be >= 1");
  prompts.validate();

  const int n = config.n_agents;
  const int m = config.n_rounds;
  const std::uint64_t master = config.master_seed;

  std::vector<std::vector<Viewpoint>> rounds;
  rounds.reserve(static_cast<std::size_t>(m));
  rounds.push_back(run_initial_round(question, n, backend, prompts, master, options));

  std::vector<AllocationOrder> orderings;
  orderings.reserve(static_cast<std::size_t>(m - 1));

  for (int source_round = 1; source_round < m; ++source_round) {
    const std::vector<Viewpoint>& prev = rounds.back();

    Rng order_rng(ordering_seed(master, question.id, source_round));
    StrategyContext sctx{prev, question.answer_key, &order_rng, source_round};
    const AllocationOrder order = strategy_order(config.strategy, sctx);
    orderings.push_back(order);

    const int target_round = source_round + 1;
    const std::uint64_t shared = round_draw_seed(master, question.id, target_round);
    std::vector<Viewpoint> next(static_cast<std::size_t>(n));
    parallel_for(n, options.parallelism, [&](int i) {
      const std::string prompt = assemble_debate_prompt(question, i, order, prev, prompts);
      const std::vector<std::string> peers = peer_answers_for(i, order, prev);
      backends::CallContext cctx{question, i, n, target_round,
                                 call_seed(master, question.id, i, target_round, 0), shared};
      try {
        next[static_cast<std::size_t>(i)] = make_viewpoint(
            i, target_round,
            backend.debate_response(cctx, prompt, prev[static_cast<std::size_t>(i)], peers),
            prompt);
      } catch (const RuntimeFault& e) {
        next[static_cast<std::size_t>(i)] = fault_viewpoint(i, target_round, prompt, question, e);
      }
    });
    rounds.push_back(std::move(next));
  }

  DebateTranscript t;
  t.question_id = question.id;
  t.n_agents = n;
  t.n_rounds = m;
  t.paths.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    DebatePath& path = t.paths[static_cast<std::size_t>(i)];
    path.agent_index = i;
    path.viewpoints.reserve(static_cast<std::size_t>(m));
    for (const std::vector<Viewpoint>& round : rounds) {
      path.viewpoints.push_back(round[static_cast<std::size_t>(i)]);
    }
  }
  t.orderings = std::move(orderings);
  t.final_answer = aggregate(rounds.back(), config.aggregation);
  t.config_snapshot = config;
  return t;
}

std::string content_hash(std::string_view content) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(content)));
  return buf;
}

}  // namespace parley
