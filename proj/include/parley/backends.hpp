#pragma once

#include "parley/core.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace parley::backends {

// ---------------------------------------------------------------------------
// Descriptors (plain config data)
// ---------------------------------------------------------------------------

struct LlmConfig {
  std::string base_url;        // e.g. "http://localhost:8080/v1"
  std::string model_name;
  double temperature = 1.0;
  int max_tokens = 1024;
  std::string api_key_env_var = "PARLEY_API_KEY";
  double timeout_seconds = 30.0;  // per attempt
  int max_retries = 2;            // retries after the first attempt

  bool operator==(const LlmConfig&) const = default;
};

struct PoolConfig {
  std::string pool_path;
  bool sample_without_replacement = true;

  bool operator==(const PoolConfig&) const = default;
};

struct SyntheticConfig {
  double gamma = 2.0;         // positional weight base (> 0); > 1 favors late positions
  double self_weight = 1.0;   // weight bonus for the agent's own previous answer
  double noise_epsilon = 0.0; // mass spread uniformly over seen answers, in [0, 1]

  bool operator==(const SyntheticConfig&) const = default;
};

enum class Kind { kLlm, kPool, kSynthetic };

std::string to_string(Kind k);
Kind kind_from_string(std::string_view s);

// Exactly one sub-config — the one matching `kind` — may be populated.
struct BackendDescriptor {
  Kind kind = Kind::kSynthetic;
  std::optional<LlmConfig> llm;
  std::optional<PoolConfig> pool;
  std::optional<SyntheticConfig> synthetic;

  // Throws ConfigError unless exactly the sub-config for `kind` is
  // populated and its fields are in range.
  void validate() const;

  bool operator==(const BackendDescriptor&) const = default;
};

void to_json(nlohmann::json& j, const LlmConfig& c);
void from_json(const nlohmann::json& j, LlmConfig& c);
void to_json(nlohmann::json& j, const PoolConfig& c);
void from_json(const nlohmann::json& j, PoolConfig& c);
void to_json(nlohmann::json& j, const SyntheticConfig& c);
void from_json(const nlohmann::json& j, SyntheticConfig& c);
void to_json(nlohmann::json& j, const BackendDescriptor& d);
void from_json(const nlohmann::json& j, BackendDescriptor& d);

// ---------------------------------------------------------------------------
// Pre-sampled viewpoint pools
// ---------------------------------------------------------------------------

struct PoolEntry {
  std::string answer;  // canonical answer
  std::string text;    // full response text
  bool correct = false;

  bool operator==(const PoolEntry&) const = default;
};

struct ViewpointPool {
  std::string question_id;
  std::vector<PoolEntry> entries;

  int count_correct() const;
  int count_incorrect() const;

  bool operator==(const ViewpointPool&) const = default;
};

using PoolSet = std::map<std::string, ViewpointPool>;

// JSONL: {"question_id": ..., "answer": ..., "text": ..., "correct": ...}
// one entry per line, grouped into one pool per question id.
PoolSet load_pools(const std::string& path);
void save_pools(const std::string& path, const PoolSet& pools);

struct Composition {
  int n_correct = 0;
  int n_incorrect = 0;
};

// Seeded draw of k entries.  Without a composition the draw is uniform over
// the whole pool; with one, exactly n_correct are drawn from the correct
// class and n_incorrect from the incorrect class, returned as the correct
// block followed by the incorrect block (callers place them).  The sampler
// is a partial Fisher-Yates over entry indices driven by mt19937_64(seed)
// (without replacement), or k independent bounded draws (with replacement).
// Throws ConfigError when a class cannot supply the requested count,
// naming the deficit.
std::vector<PoolEntry> pool_draw(const ViewpointPool& pool, int k,
                                 std::optional<Composition> composition, std::uint64_t seed,
                                 bool without_replacement = true);

// ---------------------------------------------------------------------------
// Synthetic positional-bias model
// ---------------------------------------------------------------------------

// Closed-form adoption distribution.  Each peer at 1-based position p adds
// gamma^p to its answer's weight; the agent's own previous answer adds
// self_weight.  Adoption probability is
//   (1 - noise) * weight(a) / total_weight  +  noise / #seen
// over the distinct non-sentinel answers seen (own + peers).  Sentinel
// entries contribute nothing.  Returns an empty map when nothing was seen.
std::map<std::string, double> synthetic_adoption_probabilities(
    const std::string& own_answer, const std::vector<std::string>& peer_answers_in_order,
    const SyntheticConfig& cfg);

// Samples the next-round answer from the closed-form distribution using the
// seeded stream.  An empty peer list returns own_prev.answer unchanged; if
// no answer was seen at all the sentinel is returned.
std::string synthetic_update(const Viewpoint& own_prev,
                             const std::vector<std::string>& peer_answers_in_order,
                             const SyntheticConfig& cfg, std::uint64_t seed);

// Response text emitted by the synthetic model for a chosen answer.
std::string synthetic_response_text(const std::string& answer);

// ---------------------------------------------------------------------------
// Live chat-completions client
// ---------------------------------------------------------------------------

struct HttpResponse {
  int status = 0;  // 0 means transport failure (connect/read error)
  std::string body;
};

// Seam for tests; the default implementation speaks HTTP via cpp-httplib.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& base_url, const std::string& path,
                                 const std::string& body,
                                 const std::vector<std::pair<std::string, std::string>>& headers,
                                 double timeout_seconds) = 0;
};

HttpTransport& default_transport();

struct LlmCallStats {
  int attempts = 0;
};

// POSTs {base_url}/chat/completions with body
//   {"model": ..., "messages": [{"role": "user", "content": prompt}],
//    "temperature": ..., "max_tokens": ...}
// and returns choices[0].message.content.  The API key is read from the
// configured environment variable and sent as a bearer token.  Transport
// errors, 408/429 and 5xx responses are retried with exponential backoff
// (jittered by attempt_seed); other statuses fault immediately.  Total
// wall-clock time never exceeds timeout_seconds * (max_retries + 1).
std::string llm_complete(const std::string& prompt, const LlmConfig& cfg,
                         std::uint64_t attempt_seed, HttpTransport& transport,
                         LlmCallStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Agent backends
// ---------------------------------------------------------------------------

// Call coordinates handed to a backend by the engine.  call_seed is unique
// per (master seed, question, agent, round, attempt); shared_seed is unique
// per (master seed, question, round) and identical across agents, which
// round-level draws (pool sampling) require.
struct CallContext {
  const Question& question;
  int agent_index = 0;
  int n_agents = 1;
  int round = 1;
  std::uint64_t call_seed = 0;
  std::uint64_t shared_seed = 0;
};

// A backend produces raw response text; the engine extracts answers.
// Structured peer answers (in assembled order) accompany the prompt so
// models that reason over positions need not re-parse the prompt text; the
// live client ignores them.
class AgentBackend {
 public:
  virtual ~AgentBackend() = default;
  virtual std::string name() const = 0;
  virtual std::string initial_response(const CallContext& ctx, const std::string& prompt) = 0;
  virtual std::string debate_response(const CallContext& ctx, const std::string& prompt,
                                      const Viewpoint& own_prev,
                                      const std::vector<std::string>& peer_answers_in_order) = 0;
};

class LlmBackend : public AgentBackend {
 public:
  explicit LlmBackend(LlmConfig cfg, HttpTransport* transport = nullptr);
  std::string name() const override { return "llm"; }
  std::string initial_response(const CallContext& ctx, const std::string& prompt) override;
  std::string debate_response(const CallContext& ctx, const std::string& prompt,
                              const Viewpoint& own_prev,
                              const std::vector<std::string>& peer_answers_in_order) override;

 private:
  LlmConfig cfg_;
  HttpTransport* transport_;
};

// Serves pre-sampled viewpoints.  Round 1 draws n_agents entries from the
// question's pool with the round's shared seed and hands entry i to agent
// i.  Debate rounds return the agent's previous text unchanged: a sampled
// viewpoint has no generative model, so pools are meant for single-round
// runs and for seeding other backends.
class PoolBackend : public AgentBackend {
 public:
  PoolBackend(PoolSet pools, bool sample_without_replacement);
  std::string name() const override { return "pool"; }
  std::string initial_response(const CallContext& ctx, const std::string& prompt) override;
  std::string debate_response(const CallContext& ctx, const std::string& prompt,
                              const Viewpoint& own_prev,
                              const std::vector<std::string>& peer_answers_in_order) override;

  const ViewpointPool& pool_for(const std::string& question_id) const;

 private:
  PoolSet pools_;
  bool without_replacement_;
};

// Positional-bias model over an initial pool: round 1 draws from the
// question's pool (like PoolBackend), debate rounds sample from the
// closed-form adoption distribution.
class SyntheticBackend : public AgentBackend {
 public:
  SyntheticBackend(SyntheticConfig cfg, PoolSet initial_pools,
                   bool sample_without_replacement = true);
  std::string name() const override { return "synthetic"; }
  std::string initial_response(const CallContext& ctx, const std::string& prompt) override;
  std::string debate_response(const CallContext& ctx, const std::string& prompt,
                              const Viewpoint& own_prev,
                              const std::vector<std::string>& peer_answers_in_order) override;

  const SyntheticConfig& config() const { return cfg_; }

 private:
  SyntheticConfig cfg_;
  PoolBackend initial_;
};

// Builds the backend for a validated descriptor.  Pool-backed kinds load
// their pool file; `extra_pools`, when given, overrides or supplies the
// initial pools (used for synthesized pools and threshold sweeps).
std::unique_ptr<AgentBackend> make_backend(const BackendDescriptor& desc,
                                           const PoolSet* extra_pools = nullptr);

}  // namespace parley::backends
