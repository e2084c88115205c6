// Shared test scaffolding: scripted backends, temp directories, small
// builders for questions, viewpoints and pools.
#pragma once

#include "parley/backends.hpp"
#include "parley/core.hpp"
#include "parley/engine.hpp"

#include <unistd.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

namespace parley::testing {

// Self-deleting temporary directory.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    const auto base = std::filesystem::temp_directory_path();
    path_ = base / ("parley_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline Question make_question(std::string id = "q1", std::string key = "A") {
  Question q;
  q.id = std::move(id);
  q.prompt = "What is the label of the first option?";
  q.options = {{"A", "the first"}, {"B", "the second"}, {"C", "the third"}};
  q.answer_key = std::move(key);
  return q;
}

// Viewpoints for one round, one per agent, already carrying answers.
inline std::vector<Viewpoint> make_viewpoints(const std::vector<std::string>& answers,
                                              int round = 1) {
  std::vector<Viewpoint> vps;
  for (std::size_t i = 0; i < answers.size(); ++i) {
    Viewpoint v;
    v.agent_index = static_cast<int>(i);
    v.round = round;
    v.answer = answers[i];
    v.text = "viewpoint of agent " + std::to_string(i) + ": (" + answers[i] + ")";
    vps.push_back(std::move(v));
  }
  return vps;
}

inline backends::ViewpointPool make_pool(const std::string& question_id, int n_correct,
                                         int n_incorrect, const std::string& correct_answer = "A",
                                         const std::string& wrong_answer = "B") {
  backends::ViewpointPool pool;
  pool.question_id = question_id;
  for (int i = 0; i < n_correct; ++i) {
    pool.entries.push_back({correct_answer,
                            "pooled reasoning #" + std::to_string(i) + ". The answer is (" +
                                correct_answer + ")",
                            true});
  }
  for (int i = 0; i < n_incorrect; ++i) {
    pool.entries.push_back({wrong_answer,
                            "pooled reasoning #" + std::to_string(n_correct + i) +
                                ". The answer is (" + wrong_answer + ")",
                            false});
  }
  return pool;
}

// Backend whose responses are fully scripted: fixed texts for round 1 (per
// agent index) and a function for debate rounds.  Records every prompt it
// sees, keyed by (round, agent), for round-barrier audits.
class ScriptedBackend : public backends::AgentBackend {
 public:
  using DebateFn = std::function<std::string(const backends::CallContext&, const std::string&,
                                             const Viewpoint&, const std::vector<std::string>&)>;

  explicit ScriptedBackend(std::vector<std::string> initial_texts, DebateFn debate_fn = {})
      : initial_texts_(std::move(initial_texts)), debate_fn_(std::move(debate_fn)) {}

  std::string name() const override { return "scripted"; }

  std::string initial_response(const backends::CallContext& ctx,
                               const std::string& prompt) override {
    record(ctx, prompt);
    return initial_texts_.at(static_cast<std::size_t>(ctx.agent_index));
  }

  std::string debate_response(const backends::CallContext& ctx, const std::string& prompt,
                              const Viewpoint& own_prev,
                              const std::vector<std::string>& peers) override {
    record(ctx, prompt);
    if (debate_fn_) return debate_fn_(ctx, prompt, own_prev, peers);
    return own_prev.text;
  }

  struct Seen {
    int round;
    int agent;
    std::string prompt;
  };
  std::vector<Seen> seen() const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_;
  }

 private:
  void record(const backends::CallContext& ctx, const std::string& prompt) {
    std::lock_guard<std::mutex> lock(mu_);
    seen_.push_back({ctx.round, ctx.agent_index, prompt});
  }

  std::vector<std::string> initial_texts_;
  DebateFn debate_fn_;
  mutable std::mutex mu_;
  std::vector<Seen> seen_;
};

// Every response embeds a nonce unique to (agent, round) so prompts can be
// audited for exactly which viewpoints they were assembled from.  The
// extracted answer is always "N<agent>".
class NonceBackend : public backends::AgentBackend {
 public:
  static std::string nonce(int agent, int round) {
    return "NONCE_a" + std::to_string(agent) + "_r" + std::to_string(round) + "_";
  }

  std::string name() const override { return "nonce"; }

  std::string initial_response(const backends::CallContext& ctx,
                               const std::string& prompt) override {
    record(ctx, prompt);
    return nonce(ctx.agent_index, ctx.round) + " reasoning. The answer is (N" +
           std::to_string(ctx.agent_index) + ")";
  }

  std::string debate_response(const backends::CallContext& ctx, const std::string& prompt,
                              const Viewpoint&, const std::vector<std::string>&) override {
    record(ctx, prompt);
    return nonce(ctx.agent_index, ctx.round) + " revised. The answer is (N" +
           std::to_string(ctx.agent_index) + ")";
  }

  struct Seen {
    int round;
    int agent;
    std::string prompt;
  };
  std::vector<Seen> seen() const {
    std::lock_guard<std::mutex> lock(mu_);
    return seen_;
  }

 private:
  void record(const backends::CallContext& ctx, const std::string& prompt) {
    std::lock_guard<std::mutex> lock(mu_);
    seen_.push_back({ctx.round, ctx.agent_index, prompt});
  }

  mutable std::mutex mu_;
  std::vector<Seen> seen_;
};

}  // namespace parley::testing
