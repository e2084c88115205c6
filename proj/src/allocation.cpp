#include "parley/allocation.hpp"

#include <algorithm>
#include <numeric>

namespace parley {
namespace {

void require_round(const std::vector<Viewpoint>& round_viewpoints) {
  if (round_viewpoints.empty()) throw ConfigError("round_viewpoints: no agents");
}

std::vector<int> identity_permutation(std::size_t n) {
  std::vector<int> p(n);
  std::iota(p.begin(), p.end(), 0);
  return p;
}

// Stable two-block order: agents failing `in_back` first, the rest last.
std::vector<int> partition_order(const std::vector<Viewpoint>& vps,
                                 const std::string& answer_key, bool correct_last) {
  std::vector<int> front, back;
  for (std::size_t i = 0; i < vps.size(); ++i) {
    const bool correct = vps[i].answer == answer_key && !is_no_answer(vps[i].answer);
    if (correct == correct_last) {
      back.push_back(static_cast<int>(i));
    } else {
      front.push_back(static_cast<int>(i));
    }
  }
  front.insert(front.end(), back.begin(), back.end());
  return front;
}

}  // namespace

ConsistencyScores consistency_scores(const std::vector<Viewpoint>& round_viewpoints) {
  require_round(round_viewpoints);
  const std::size_t n = round_viewpoints.size();
  ConsistencyScores result;
  result.round = round_viewpoints.front().round;
  result.scores.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (is_no_answer(round_viewpoints[i].answer)) continue;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      if (round_viewpoints[k].answer == round_viewpoints[i].answer) result.scores[i] += 1.0;
    }
  }
  return result;
}

std::pair<int, std::string> select_max_prob(const ConsistencyScores& scores,
                                            const std::vector<Viewpoint>& round_viewpoints) {
  require_round(round_viewpoints);
  if (scores.scores.size() != round_viewpoints.size()) {
    throw ConfigError("scores: length does not match round_viewpoints");
  }
  // Abstentions never outrank a real answer: restrict the argmax to agents
  // that answered, falling back to agent 0 only when every agent abstained.
  // Ties (equal scores) keep the lowest agent index among answering agents.
  int best = -1;
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    if (is_no_answer(round_viewpoints[i].answer)) continue;
    if (best < 0 || scores.scores[i] > scores.scores[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  if (best < 0) best = 0;
  return {best, round_viewpoints[static_cast<std::size_t>(best)].answer};
}

AllocationOrder madc_order(const ConsistencyScores& scores) {
  if (scores.scores.empty()) throw ConfigError("scores: no agents");
  const std::size_t n = scores.scores.size();

  int best = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (scores.scores[i] > scores.scores[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }

  std::vector<int> rest;
  rest.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (static_cast<int>(i) != best) rest.push_back(static_cast<int>(i));
  }
  std::sort(rest.begin(), rest.end(), [&](int a, int b) {
    const double sa = scores.scores[static_cast<std::size_t>(a)];
    const double sb = scores.scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa < sb;
    return a < b;
  });
  rest.push_back(best);

  AllocationOrder order;
  order.permutation = std::move(rest);
  order.strategy_name = to_string(Strategy::kMadc);
  order.round = scores.round;
  return order;
}

AllocationOrder strategy_order(Strategy strategy, const StrategyContext& ctx) {
  require_round(ctx.round_viewpoints);
  const std::size_t n = ctx.round_viewpoints.size();

  AllocationOrder order;
  order.strategy_name = to_string(strategy);
  order.round = ctx.round;

  switch (strategy) {
    case Strategy::kFixed:
      order.permutation = identity_permutation(n);
      return order;
    case Strategy::kRandom:
      if (ctx.rng_stream == nullptr) {
        throw ConfigError("rng_stream: random strategy requires a random stream");
      }
      order.permutation = ctx.rng_stream->permutation(static_cast<int>(n));
      return order;
    case Strategy::kTruthFirst:
    case Strategy::kTruthLast: {
      if (!ctx.answer_key) {
        throw ConfigError("answer_key: " + to_string(strategy) +
                          " strategy requires the question's answer key");
      }
      const bool correct_last = strategy == Strategy::kTruthLast;
      order.permutation = partition_order(ctx.round_viewpoints, *ctx.answer_key, correct_last);
      return order;
    }
    case Strategy::kMadc: {
      AllocationOrder m = madc_order(consistency_scores(ctx.round_viewpoints));
      m.round = ctx.round;
      return m;
    }
  }
  throw ConfigError("strategy: unknown enum value");
}

}  // namespace parley
