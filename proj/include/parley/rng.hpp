#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace parley {

// Seed derivation scheme
// ----------------------
// Every random decision in a run is driven by a seed derived from the run's
// master seed plus the coordinates that identify the decision (question id,
// agent index, round, attempt, stream domain).  Derivation is a fixed chain
// of splitmix64 finalizer steps:
//
//   chain(s, v) = splitmix64(s ^ splitmix64(v))
//
// applied left-to-right over the coordinate list.  The chain is splittable:
// sibling streams (different agent, round, or attempt) share no state, so
// execution order and thread scheduling cannot affect any drawn value.

inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += kGoldenGamma;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t chain_seed(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value));
}

// FNV-1a, used to fold string identifiers (question ids) into seed chains.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Domain tags keep unrelated streams disjoint even when their numeric
// coordinates coincide (e.g. agent 0 round 1 vs the round-1 pool draw).
enum class SeedDomain : std::uint64_t {
  kAgentCall = 1,  // one backend call (agent, round, attempt)
  kOrdering = 2,   // allocation-order randomness for one round
  kRoundDraw = 3,  // round-level shared draw (pool sampling)
  kRepeat = 4,     // per-repeat master seed in experiment sweeps
  kRoster = 5,     // roster construction in threshold sweeps
  kResponder = 6,  // responder samples in threshold sweeps
  kPoolGen = 7,    // synthesized pool generation
};

constexpr std::uint64_t chain_seed(std::uint64_t seed, SeedDomain domain) {
  return chain_seed(seed, static_cast<std::uint64_t>(domain));
}

// Seed for one backend call: (master, question, agent, round, attempt).
constexpr std::uint64_t call_seed(std::uint64_t master_seed, std::string_view question_id,
                                  int agent_index, int round, int attempt) {
  std::uint64_t s = chain_seed(master_seed, SeedDomain::kAgentCall);
  s = chain_seed(s, fnv1a64(question_id));
  s = chain_seed(s, static_cast<std::uint64_t>(agent_index));
  s = chain_seed(s, static_cast<std::uint64_t>(round));
  return chain_seed(s, static_cast<std::uint64_t>(attempt));
}

// Seed for the allocation-order stream of one debate round.
constexpr std::uint64_t ordering_seed(std::uint64_t master_seed, std::string_view question_id,
                                      int round) {
  std::uint64_t s = chain_seed(master_seed, SeedDomain::kOrdering);
  s = chain_seed(s, fnv1a64(question_id));
  return chain_seed(s, static_cast<std::uint64_t>(round));
}

// Seed shared by all agents of one round (pool draws must agree across the
// round, so this seed deliberately excludes the agent index).
constexpr std::uint64_t round_draw_seed(std::uint64_t master_seed, std::string_view question_id,
                                        int round) {
  std::uint64_t s = chain_seed(master_seed, SeedDomain::kRoundDraw);
  s = chain_seed(s, fnv1a64(question_id));
  return chain_seed(s, static_cast<std::uint64_t>(round));
}

// Deterministic random stream over a mt19937_64 core.  The bounded-draw and
// shuffle helpers are spelled out here (instead of std::uniform_int_distribution
// or std::shuffle) because the standard leaves those algorithms
// implementation-defined; this keeps byte-identical runs portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Unbiased draw in [0, n) by rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return v % n;
  }

  // Uniform double in [0, 1) with 53 bits of precision.
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Uniform random permutation of [0, n).
  std::vector<int> permutation(int n) {
    std::vector<int> p(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
    shuffle(p);
    return p;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace parley
