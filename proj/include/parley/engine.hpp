#pragma once

#include "parley/allocation.hpp"
#include "parley/backends.hpp"
#include "parley/config.hpp"
#include "parley/core.hpp"

#include <string>
#include <vector>

namespace parley {

// Prompt templates.  question_template must contain exactly one {question}
// placeholder, solution_wrapper exactly one {solution}; the other sections
// are literal text.  Defaults follow the standard debate phrasing: round 1
// asks for an answer "in the form (X)", debate rounds show every other
// agent's previous solution and ask for an updated answer.
struct PromptBundle {
  std::string system_preamble;  // optional, prepended to round 1
  std::string fewshot;          // optional, prepended to round 1
  std::string question_template;
  std::string debate_header;
  std::string solution_wrapper;
  std::string debate_footer;

  static PromptBundle defaults();

  // Plain-text template file with "@section" header lines:
  //   @question_template
  //   ...text...
  //   @debate_footer
  //   ...text...
  // Unnamed sections keep their defaults.  Throws ConfigError on unknown
  // section names or placeholder-count violations.
  static PromptBundle from_file(const std::string& path);

  // Throws ConfigError unless each template carries exactly its declared
  // placeholders.
  void validate() const;

  bool operator==(const PromptBundle&) const = default;
};

struct RunOptions {
  int parallelism = 1;  // concurrent backend calls per round
};

// Round-1 prompt: system preamble and few-shot block (when configured)
// followed by the rendered question template.
std::string initial_prompt(const Question& question, const PromptBundle& prompts);

// Debate prompt for one receiver: rendered question, debate header, then
// one solution block per *other* agent in the allocation order (the
// receiver's own entry is skipped), then the debate footer.  prev_round
// must hold one viewpoint per agent, all from the same round; anything
// less violates the round barrier and faults.
std::string assemble_debate_prompt(const Question& question, int receiver_index,
                                   const AllocationOrder& order,
                                   const std::vector<Viewpoint>& prev_round,
                                   const PromptBundle& prompts);

// Peer answers in assembled-context order for one receiver (position
// p = index + 1 in the returned vector), for backends that consume
// structured positions.
std::vector<std::string> peer_answers_for(int receiver_index, const AllocationOrder& order,
                                          const std::vector<Viewpoint>& prev_round);

// Runs the independent round: every agent receives the same initial prompt
// and answers without seeing anyone else.  Viewpoints return in agent-index
// order.  A backend fault yields a sentinel viewpoint with empty text
// rather than aborting the round.
std::vector<Viewpoint> run_initial_round(const Question& question, int n_agents,
                                         backends::AgentBackend& backend,
                                         const PromptBundle& prompts, std::uint64_t master_seed,
                                         const RunOptions& options = {});

// Majority vote (ties by the lowest agent index holding the tied answer)
// or the most consistent viewpoint.  The sentinel never wins unless every
// answer is the sentinel.
std::string aggregate(const std::vector<Viewpoint>& final_round, Aggregation mode);

// Full debate: initial round, then n_rounds - 1 simultaneous-talk debate
// rounds.  Before each debate round the strategy orders the previous
// round's viewpoints; every agent then updates concurrently against that
// frozen context (the round barrier).  All randomness derives from
// (master_seed, question id, agent, round, attempt), so identical configs
// reproduce byte-identical transcripts regardless of parallelism.
DebateTranscript run_debate(const Question& question, const ExperimentConfig& config,
                            backends::AgentBackend& backend, const PromptBundle& prompts,
                            const RunOptions& options = {});

// FNV-1a 64 hex digest used for prompt_hash fields and output manifests.
std::string content_hash(std::string_view content);

}  // namespace parley
