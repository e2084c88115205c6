#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"
#include "parley/engine.hpp"
#include "parley/rng.hpp"

#include <algorithm>
#include <string>
#include <vector>

using namespace parley;
using parley::testing::NonceBackend;
using parley::testing::ScriptedBackend;
using parley::testing::TempDir;
using parley::testing::make_question;
using parley::testing::make_viewpoints;
using parley::testing::write_file;

namespace {

const std::string kSentinel{kNoAnswer};

ExperimentConfig engine_config(int n_agents, int n_rounds, Strategy strategy = Strategy::kFixed,
                               std::uint64_t seed = 0) {
  ExperimentConfig cfg;
  cfg.strategy = strategy;
  cfg.backend.kind = backends::Kind::kSynthetic;
  cfg.backend.synthetic = backends::SyntheticConfig{};
  cfg.n_agents = n_agents;
  cfg.n_rounds = n_rounds;
  cfg.master_seed = seed;
  return cfg;
}

int count_occurrences(const std::string& haystack, const std::string& needle) {
  int count = 0;
  std::size_t pos = 0;
  while ((pos = haystack.find(needle, pos)) != std::string::npos) {
    ++count;
    pos += needle.size();
  }
  return count;
}

}  // namespace

TEST_CASE("initial prompt renders the question into the template") {
  Question q = make_question();
  q.prompt = "Q?";
  const std::string p = initial_prompt(q, PromptBundle::defaults());
  CHECK(p ==
        "Can you answer the following question as accurately as possible? Q? Explain your "
        "answer.\nMake sure putting the answer in the form (X) at the end of your response.");
}

TEST_CASE("initial prompt prepends preamble and few-shot blocks") {
  Question q = make_question();
  q.prompt = "Q?";
  PromptBundle prompts = PromptBundle::defaults();
  prompts.system_preamble = "PREAMBLE";
  prompts.fewshot = "SHOT";
  const std::string p = initial_prompt(q, prompts);
  CHECK(p.rfind("PREAMBLE\n\nSHOT\n\n", 0) == 0);
}

TEST_CASE("debate prompt lists every other agent's solution in allocation order") {
  Question q = make_question();
  q.prompt = "Q?";
  const auto prev = make_viewpoints({"A", "B", "C"});
  AllocationOrder order;
  order.permutation = {2, 0, 1};
  order.strategy_name = "fixed";
  order.round = 1;

  const std::string p = assemble_debate_prompt(q, 0, order, prev, PromptBundle::defaults());
  CHECK(count_occurrences(p, "One agent solution:") == 2);
  // Receiver 0's own solution is skipped; order of the rest is preserved.
  const std::size_t pos2 = p.find(prev[2].text);
  const std::size_t pos1 = p.find(prev[1].text);
  REQUIRE(pos2 != std::string::npos);
  REQUIRE(pos1 != std::string::npos);
  CHECK(p.find(prev[0].text) == std::string::npos);
  CHECK(pos2 < pos1);
  CHECK(p.find("These are the solutions to the problem from other agents:") != std::string::npos);
  CHECK(p.find("Using the reasoning from other agents as additional advice") != std::string::npos);
}

TEST_CASE("single-agent debate prompt degrades gracefully") {
  Question q = make_question();
  const auto prev = make_viewpoints({"A"});
  AllocationOrder order;
  order.permutation = {0};
  order.round = 1;
  const std::string p = assemble_debate_prompt(q, 0, order, prev, PromptBundle::defaults());
  CHECK(count_occurrences(p, "One agent solution:") == 0);
}

TEST_CASE("round barrier: incomplete context is rejected") {
  Question q = make_question();
  AllocationOrder order;
  order.permutation = {0, 1, 2};
  order.round = 1;

  SUBCASE("missing viewpoint") {
    const auto prev = make_viewpoints({"A", "B"});
    CHECK_THROWS_WITH_AS(assemble_debate_prompt(q, 0, order, prev, PromptBundle::defaults()),
                         doctest::Contains("round barrier"), RuntimeFault);
  }
  SUBCASE("mixed rounds") {
    auto prev = make_viewpoints({"A", "B", "C"});
    prev[1].round = 2;
    CHECK_THROWS_WITH_AS(assemble_debate_prompt(q, 0, order, prev, PromptBundle::defaults()),
                         doctest::Contains("round barrier"), RuntimeFault);
  }
}

TEST_CASE("peer answers arrive in assembled-context order") {
  const auto prev = make_viewpoints({"A", "B", "C", "D"});
  AllocationOrder order;
  order.permutation = {3, 1, 0, 2};
  order.round = 1;
  CHECK(peer_answers_for(0, order, prev) == std::vector<std::string>{"D", "B", "C"});
  CHECK(peer_answers_for(3, order, prev) == std::vector<std::string>{"B", "A", "C"});
}

TEST_CASE("prompt bundle file parsing") {
  TempDir tmp;
  SUBCASE("a file spelling out the defaults reproduces them") {
    const auto path = tmp.path() / "prompts.txt";
    write_file(path,
               "@question_template\n"
               "Can you answer the following question as accurately as possible? {question} "
               "Explain your answer.\n"
               "Make sure putting the answer in the form (X) at the end of your response.\n"
               "@debate_header\n"
               "These are the solutions to the problem from other agents:\n"
               "@solution_wrapper\n"
               "\n"
               "\n"
               "One agent solution: {solution}\n"
               "@debate_footer\n"
               "\n"
               "\n"
               "Using the reasoning from other agents as additional advice, can you give an "
               "updated answer? Examine your solution and that other agents step by step. Put "
               "your answer in the form (X) at the end of your response.\n");
    CHECK(PromptBundle::from_file(path.string()) == PromptBundle::defaults());
  }
  SUBCASE("unknown sections are rejected") {
    const auto path = tmp.path() / "bad.txt";
    write_file(path, "@no_such_section\nhello\n");
    CHECK_THROWS_WITH_AS(PromptBundle::from_file(path.string()),
                         doctest::Contains("no_such_section"), ConfigError);
  }
  SUBCASE("text before the first section is rejected") {
    const auto path = tmp.path() / "lead.txt";
    write_file(path, "stray\n@debate_header\nh\n");
    CHECK_THROWS_AS(PromptBundle::from_file(path.string()), ConfigError);
  }
  SUBCASE("placeholder counts are validated") {
    const auto path = tmp.path() / "ph.txt";
    write_file(path, "@question_template\nno placeholder here\n");
    CHECK_THROWS_WITH_AS(PromptBundle::from_file(path.string()),
                         doctest::Contains("{question}"), ConfigError);
    write_file(path, "@solution_wrapper\n{solution} and {solution}\n");
    CHECK_THROWS_AS(PromptBundle::from_file(path.string()), ConfigError);
  }
}

TEST_CASE("initial round returns one viewpoint per agent, in agent order") {
  const Question q = make_question();
  ScriptedBackend backend({"alpha says (A)", "beta says (B)", "gamma says (b)"});
  const auto vps = run_initial_round(q, 3, backend, PromptBundle::defaults(), 1);
  REQUIRE(vps.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(vps[static_cast<std::size_t>(i)].agent_index == i);
    CHECK(vps[static_cast<std::size_t>(i)].round == 1);
  }
  CHECK(vps[0].answer == "A");
  CHECK(vps[1].answer == "B");
  CHECK(vps[2].answer == "B");  // normalized
  // All agents receive the identical independent prompt.
  const auto seen = backend.seen();
  for (const auto& s : seen) CHECK(s.prompt == seen[0].prompt);
}

TEST_CASE("initial round turns backend faults into sentinel viewpoints") {
  const Question q = make_question();
  class FaultyBackend : public backends::AgentBackend {
   public:
    std::string name() const override { return "faulty"; }
    std::string initial_response(const backends::CallContext& ctx, const std::string&) override {
      if (ctx.agent_index == 1) throw RuntimeFault("backend exploded");
      return "fine (A)";
    }
    std::string debate_response(const backends::CallContext&, const std::string&,
                                const Viewpoint&, const std::vector<std::string>&) override {
      return "fine (A)";
    }
  } backend;
  const auto vps = run_initial_round(q, 3, backend, PromptBundle::defaults(), 1);
  REQUIRE(vps.size() == 3);
  CHECK(vps[0].answer == "A");
  CHECK(vps[1].answer == kSentinel);
  CHECK(vps[1].text.empty());
  CHECK(vps[2].answer == "A");
}

TEST_CASE("aggregation rules") {
  SUBCASE("majority vote, ties to the lowest agent index") {
    CHECK(aggregate(make_viewpoints({"A", "B", "B", "A"}), Aggregation::kMajorityVote) == "A");
    CHECK(aggregate(make_viewpoints({"B", "A", "A"}), Aggregation::kMajorityVote) == "A");
    CHECK(aggregate(make_viewpoints({"C"}), Aggregation::kMajorityVote) == "C");
  }
  SUBCASE("the sentinel never wins unless unanimous") {
    CHECK(aggregate(make_viewpoints({kSentinel, kSentinel, "B"}), Aggregation::kMajorityVote) ==
          "B");
    CHECK(aggregate(make_viewpoints({kSentinel, kSentinel}), Aggregation::kMajorityVote) ==
          kSentinel);
  }
  SUBCASE("max consistency picks the most agreed-with answer") {
    CHECK(aggregate(make_viewpoints({"A", "A", "B"}), Aggregation::kMaxConsistency) == "A");
    CHECK(aggregate(make_viewpoints({kSentinel, "A", "B"}), Aggregation::kMaxConsistency) == "A");
    CHECK(aggregate(make_viewpoints({kSentinel, kSentinel}), Aggregation::kMaxConsistency) ==
          kSentinel);
  }
}

TEST_CASE("run_debate produces a structurally valid transcript") {
  const Question q = make_question();
  NonceBackend backend;
  const ExperimentConfig cfg = engine_config(4, 3);
  const DebateTranscript t = run_debate(q, cfg, backend, PromptBundle::defaults());

  CHECK(validate_transcript(t).empty());
  CHECK(t.question_id == q.id);
  CHECK(t.n_agents == 4);
  CHECK(t.n_rounds == 3);
  REQUIRE(t.paths.size() == 4);
  for (const DebatePath& p : t.paths) REQUIRE(p.viewpoints.size() == 3);
  REQUIRE(t.orderings.size() == 2);
  CHECK(t.config_snapshot == nlohmann::json(cfg));

  SUBCASE("fixed strategy orderings are the identity") {
    for (const AllocationOrder& o : t.orderings) {
      CHECK(o.permutation == std::vector<int>{0, 1, 2, 3});
      CHECK(o.strategy_name == "fixed");
    }
  }
  SUBCASE("m = 1 yields no orderings and no debate prompts") {
    NonceBackend single;
    const DebateTranscript t1 = run_debate(q, engine_config(3, 1), single, PromptBundle::defaults());
    CHECK(t1.orderings.empty());
    CHECK(validate_transcript(t1).empty());
    for (const auto& s : single.seen()) CHECK(s.round == 1);
  }
}

TEST_CASE("debate prompts are built from the complete previous round, never the receiver's own") {
  const Question q = make_question();
  NonceBackend backend;
  const int n = 4;
  run_debate(q, engine_config(n, 3), backend, PromptBundle::defaults());

  for (const auto& s : backend.seen()) {
    if (s.round == 1) continue;  // independent round: no peer material
    const int source_round = s.round - 1;
    for (int other = 0; other < n; ++other) {
      const std::string nonce = NonceBackend::nonce(other, source_round);
      if (other == s.agent) {
        CHECK_MESSAGE(s.prompt.find(nonce) == std::string::npos,
                      "own round-", source_round, " text leaked into agent ", s.agent,
                      "'s round-", s.round, " prompt");
      } else {
        CHECK_MESSAGE(s.prompt.find(nonce) != std::string::npos,
                      "agent ", other, "'s round-", source_round,
                      " text missing from agent ", s.agent, "'s round-", s.round, " prompt");
      }
      // Nothing from the round being generated (or later) can appear.
      CHECK(s.prompt.find(NonceBackend::nonce(other, s.round)) == std::string::npos);
    }
  }
}

TEST_CASE("prompt hashes in the transcript match the prompts the backend saw") {
  const Question q = make_question();
  NonceBackend backend;
  const DebateTranscript t = run_debate(q, engine_config(3, 2), backend, PromptBundle::defaults());
  for (const auto& s : backend.seen()) {
    const Viewpoint& v = t.paths[static_cast<std::size_t>(s.agent)]
                             .viewpoints[static_cast<std::size_t>(s.round - 1)];
    CHECK(v.prompt_hash == content_hash(s.prompt));
  }
}

TEST_CASE("madc strategy orders the next round by consistency, argmax last") {
  const Question q = make_question();
  // Round-1 answers A, A, B, A -> scores [2,2,0,2] -> order [2,1,3,0].
  ScriptedBackend backend({"says (A)", "says (A)", "says (B)", "says (A)"},
                          [](const backends::CallContext& ctx, const std::string&,
                             const Viewpoint& own, const std::vector<std::string>&) {
                            return own.text;
                          });
  const DebateTranscript t =
      run_debate(q, engine_config(4, 2, Strategy::kMadc), backend, PromptBundle::defaults());
  REQUIRE(t.orderings.size() == 1);
  CHECK(t.orderings[0].permutation == std::vector<int>{2, 1, 3, 0});
  CHECK(t.orderings[0].strategy_name == "madc");
}

TEST_CASE("random strategy ordering is reproducible from the derived seed") {
  const Question q = make_question();
  NonceBackend backend;
  const std::uint64_t master = 0xabcdef;
  const DebateTranscript t = run_debate(q, engine_config(5, 3, Strategy::kRandom, master),
                                        backend, PromptBundle::defaults());
  REQUIRE(t.orderings.size() == 2);
  for (int source_round = 1; source_round <= 2; ++source_round) {
    Rng rng(ordering_seed(master, q.id, source_round));
    CHECK(t.orderings[static_cast<std::size_t>(source_round - 1)].permutation ==
          rng.permutation(5));
  }
}

TEST_CASE("truth strategies use the answer key; missing key is a config error") {
  Question q = make_question();
  ScriptedBackend backend({"says (A)", "says (B)", "says (A)"});
  const DebateTranscript t = run_debate(q, engine_config(3, 2, Strategy::kTruthLast), backend,
                                        PromptBundle::defaults());
  CHECK(t.orderings[0].permutation == std::vector<int>{1, 0, 2});

  q.answer_key.reset();
  ScriptedBackend backend2({"says (A)", "says (B)", "says (A)"});
  CHECK_THROWS_AS(
      run_debate(q, engine_config(3, 2, Strategy::kTruthLast), backend2, PromptBundle::defaults()),
      ConfigError);
}

TEST_CASE("identical configs replay byte-identically, regardless of parallelism") {
  const Question q = make_question();
  const ExperimentConfig cfg = engine_config(6, 4, Strategy::kRandom, 0x5eed5);

  RunOptions serial;
  serial.parallelism = 1;
  RunOptions wide;
  wide.parallelism = 6;

  NonceBackend b1, b2, b3;
  const DebateTranscript t1 = run_debate(q, cfg, b1, PromptBundle::defaults(), serial);
  const DebateTranscript t2 = run_debate(q, cfg, b2, PromptBundle::defaults(), serial);
  const DebateTranscript t3 = run_debate(q, cfg, b3, PromptBundle::defaults(), wide);

  CHECK(t1 == t2);
  CHECK(t1 == t3);
  CHECK(nlohmann::json(t1).dump() == nlohmann::json(t3).dump());
}

TEST_CASE("debate-round faults become sentinel viewpoints but the debate completes") {
  const Question q = make_question();
  class FlakyBackend : public backends::AgentBackend {
   public:
    std::string name() const override { return "flaky"; }
    std::string initial_response(const backends::CallContext& ctx, const std::string&) override {
      return "initial (A)";
    }
    std::string debate_response(const backends::CallContext& ctx, const std::string&,
                                const Viewpoint&, const std::vector<std::string>&) override {
      if (ctx.agent_index == 0) throw RuntimeFault("flaked");
      return "updated (B)";
    }
  } backend;
  const DebateTranscript t = run_debate(q, engine_config(3, 2), backend, PromptBundle::defaults());
  CHECK(validate_transcript(t).empty());
  CHECK(t.paths[0].viewpoints[1].answer == kSentinel);
  CHECK(t.paths[1].viewpoints[1].answer == "B");
  CHECK(t.final_answer == "B");
}

TEST_CASE("content hash is a stable FNV-1a 64 hex digest") {
  CHECK(content_hash("") == "cbf29ce484222325");
  CHECK(content_hash("a") == content_hash("a"));
  CHECK(content_hash("a") != content_hash("b"));
  CHECK(content_hash("prompt text").size() == 16);
}
