#pragma once

#include "parley/core.hpp"
#include "parley/rng.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace parley {

// Per-agent agreement scores for one round.  scores[i] counts the other
// agents whose extracted answer equals agent i's answer (the no-answer
// sentinel matches nothing, in either direction).
struct ConsistencyScores {
  int round = 1;
  std::vector<double> scores;

  bool operator==(const ConsistencyScores&) const = default;
};

// round_viewpoints must hold exactly one viewpoint per agent, indexed by
// agent_index.  Throws ConfigError on empty input.
ConsistencyScores consistency_scores(const std::vector<Viewpoint>& round_viewpoints);

// The most consistent viewpoint: (agent index, answer) of the score argmax
// over agents that produced an answer, ties broken by the lowest agent index.
// The winning answer is always a modal answer among the real answers of the
// round; the no-answer sentinel is returned only when every agent abstained.
std::pair<int, std::string> select_max_prob(const ConsistencyScores& scores,
                                            const std::vector<Viewpoint>& round_viewpoints);

// Consistency-ordered allocation: all agents except the argmax, sorted by
// ascending score (ties by ascending agent index), with the argmax agent
// appended last — the position with the most influence on the next round.
AllocationOrder madc_order(const ConsistencyScores& scores);

// Inputs a strategy needs to order the next round's context.
struct StrategyContext {
  const std::vector<Viewpoint>& round_viewpoints;
  std::optional<std::string> answer_key;  // required by truth_first/truth_last
  Rng* rng_stream = nullptr;              // required by random
  int round = 1;
};

// Dispatch on strategy:
//   fixed       -> identity order
//   random      -> fresh uniform permutation from ctx.rng_stream
//   truth_first -> correct answers first, incorrect last (stable)
//   truth_last  -> incorrect answers first, correct last (stable)
//   madc        -> madc_order over this round's consistency scores
// Throws ConfigError when a required context field is missing.
AllocationOrder strategy_order(Strategy strategy, const StrategyContext& ctx);

}  // namespace parley
