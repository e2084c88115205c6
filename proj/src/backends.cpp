#include "parley/backends.hpp"

#include "parley/answer.hpp"
#include "parley/rng.hpp"

#include <httplib.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

namespace parley::backends {
namespace {

constexpr double kBackoffBaseSeconds = 0.25;
constexpr double kBackoffCapSeconds = 60.0;

std::string excerpt(const std::string& s, std::size_t limit = 200) {
  if (s.size() <= limit) return s;
  return s.substr(0, limit) + "...";
}

}  // namespace

std::string to_string(Kind k) {
  switch (k) {
    case Kind::kLlm: return "llm";
    case Kind::kPool: return "pool";
    case Kind::kSynthetic: return "synthetic";
  }
  throw ConfigError("backend.kind: unknown enum value");
}

Kind kind_from_string(std::string_view s) {
  if (s == "llm") return Kind::kLlm;
  if (s == "pool") return Kind::kPool;
  if (s == "synthetic") return Kind::kSynthetic;
  throw ConfigError("backend.kind: expected llm|pool|synthetic, got \"" + std::string(s) + "\"");
}

void BackendDescriptor::validate() const {
  const int populated = (llm ? 1 : 0) + (pool ? 1 : 0) + (synthetic ? 1 : 0);
  if (populated != 1) {
    throw ConfigError("backend: exactly one of llm|pool|synthetic must be populated, found " +
                      std::to_string(populated));
  }
  const bool matches = (kind == Kind::kLlm && llm) || (kind == Kind::kPool && pool) ||
                       (kind == Kind::kSynthetic && synthetic);
  if (!matches) {
    throw ConfigError("backend: populated sub-config does not match kind \"" + to_string(kind) +
                      "\"");
  }
  if (llm) {
    if (llm->base_url.empty()) throw ConfigError("backend.llm.base_url: must not be empty");
    if (llm->model_name.empty()) throw ConfigError("backend.llm.model_name: must not be empty");
    if (llm->temperature < 0.0) throw ConfigError("backend.llm.temperature: must be >= 0");
    if (llm->max_tokens < 1) throw ConfigError("backend.llm.max_tokens: must be >= 1");
    if (llm->timeout_seconds <= 0.0) throw ConfigError("backend.llm.timeout: must be > 0");
    if (llm->max_retries < 0) throw ConfigError("backend.llm.max_retries: must be >= 0");
  }
  if (synthetic) {
    if (!(synthetic->gamma > 0.0)) throw ConfigError("backend.synthetic.gamma: must be > 0");
    if (synthetic->self_weight < 0.0) {
      throw ConfigError("backend.synthetic.self_weight: must be >= 0");
    }
    if (synthetic->noise_epsilon < 0.0 || synthetic->noise_epsilon > 1.0) {
      throw ConfigError("backend.synthetic.noise_epsilon: must be in [0, 1]");
    }
  }
}

void to_json(nlohmann::json& j, const LlmConfig& c) {
  j = nlohmann::json{{"base_url", c.base_url},
                     {"model_name", c.model_name},
                     {"temperature", c.temperature},
                     {"max_tokens", c.max_tokens},
                     {"api_key_env_var", c.api_key_env_var},
                     {"timeout", c.timeout_seconds},
                     {"max_retries", c.max_retries}};
}

void from_json(const nlohmann::json& j, LlmConfig& c) {
  c = LlmConfig{};
  j.at("base_url").get_to(c.base_url);
  j.at("model_name").get_to(c.model_name);
  c.temperature = j.value("temperature", c.temperature);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  c.api_key_env_var = j.value("api_key_env_var", c.api_key_env_var);
  c.timeout_seconds = j.value("timeout", c.timeout_seconds);
  c.max_retries = j.value("max_retries", c.max_retries);
}

void to_json(nlohmann::json& j, const PoolConfig& c) {
  j = nlohmann::json{{"pool_path", c.pool_path},
                     {"sample_without_replacement", c.sample_without_replacement}};
}

void from_json(const nlohmann::json& j, PoolConfig& c) {
  c = PoolConfig{};
  c.pool_path = j.value("pool_path", std::string());
  c.sample_without_replacement =
      j.value("sample_without_replacement", c.sample_without_replacement);
}

void to_json(nlohmann::json& j, const SyntheticConfig& c) {
  j = nlohmann::json{{"gamma", c.gamma},
                     {"self_weight", c.self_weight},
                     {"noise_epsilon", c.noise_epsilon}};
}

void from_json(const nlohmann::json& j, SyntheticConfig& c) {
  c = SyntheticConfig{};
  c.gamma = j.value("gamma", c.gamma);
  c.self_weight = j.value("self_weight", c.self_weight);
  c.noise_epsilon = j.value("noise_epsilon", c.noise_epsilon);
}

void to_json(nlohmann::json& j, const BackendDescriptor& d) {
  j = nlohmann::json{{"kind", to_string(d.kind)}};
  if (d.llm) j["llm"] = *d.llm;
  if (d.pool) j["pool"] = *d.pool;
  if (d.synthetic) j["synthetic"] = *d.synthetic;
}

void from_json(const nlohmann::json& j, BackendDescriptor& d) {
  d = BackendDescriptor{};
  d.kind = kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("llm")) d.llm = j.at("llm").get<LlmConfig>();
  if (j.contains("pool")) d.pool = j.at("pool").get<PoolConfig>();
  if (j.contains("synthetic")) d.synthetic = j.at("synthetic").get<SyntheticConfig>();
}

// ---------------------------------------------------------------------------
// Pools
// ---------------------------------------------------------------------------

int ViewpointPool::count_correct() const {
  return static_cast<int>(std::count_if(entries.begin(), entries.end(),
                                        [](const PoolEntry& e) { return e.correct; }));
}

int ViewpointPool::count_incorrect() const {
  return static_cast<int>(entries.size()) - count_correct();
}

PoolSet load_pools(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("pool: cannot open file \"" + path + "\"");
  PoolSet pools;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      const std::string qid = j.at("question_id").get<std::string>();
      PoolEntry entry;
      entry.answer = normalize_answer(j.at("answer").get<std::string>());
      entry.text = j.at("text").get<std::string>();
      entry.correct = j.at("correct").get<bool>();
      ViewpointPool& pool = pools[qid];
      pool.question_id = qid;
      pool.entries.push_back(std::move(entry));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("pool: parse error at " + path + ":" + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return pools;
}

void save_pools(const std::string& path, const PoolSet& pools) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFault("pool: cannot open \"" + path + "\" for writing");
  for (const auto& [qid, pool] : pools) {
    for (const PoolEntry& e : pool.entries) {
      out << nlohmann::json{{"question_id", qid},
                            {"answer", e.answer},
                            {"text", e.text},
                            {"correct", e.correct}}
                 .dump()
          << '\n';
    }
  }
}

namespace {

// Draw `count` of the given entry indices with one shared stream.
std::vector<std::size_t> draw_indices(const std::vector<std::size_t>& candidates, int count,
                                      Rng& rng, bool without_replacement,
                                      const std::string& deficit_context) {
  std::vector<std::size_t> out;
  out.reserve(static_cast<std::size_t>(count));
  if (without_replacement) {
    if (count > static_cast<int>(candidates.size())) {
      throw ConfigError(deficit_context + ": has " + std::to_string(candidates.size()) +
                        " entries, requested " + std::to_string(count));
    }
    std::vector<std::size_t> idx = candidates;
    for (int i = 0; i < count; ++i) {
      const std::size_t j =
          static_cast<std::size_t>(i) +
          static_cast<std::size_t>(rng.below(idx.size() - static_cast<std::size_t>(i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[j]);
      out.push_back(idx[static_cast<std::size_t>(i)]);
    }
  } else {
    if (candidates.empty() && count > 0) {
      throw ConfigError(deficit_context + ": has 0 entries, requested " + std::to_string(count));
    }
    for (int i = 0; i < count; ++i) {
      out.push_back(candidates[static_cast<std::size_t>(rng.below(candidates.size()))]);
    }
  }
  return out;
}

}  // namespace

std::vector<PoolEntry> pool_draw(const ViewpointPool& pool, int k,
                                 std::optional<Composition> composition, std::uint64_t seed,
                                 bool without_replacement) {
  if (k < 0) throw ConfigError("pool_draw: k must be >= 0");
  Rng rng(seed);
  const std::string ctx = "pool: question \"" + pool.question_id + "\"";

  std::vector<std::size_t> chosen;
  if (composition) {
    if (composition->n_correct < 0 || composition->n_incorrect < 0 ||
        composition->n_correct + composition->n_incorrect != k) {
      throw ConfigError("pool_draw: composition must be non-negative and sum to k");
    }
    std::vector<std::size_t> correct_idx, incorrect_idx;
    for (std::size_t i = 0; i < pool.entries.size(); ++i) {
      (pool.entries[i].correct ? correct_idx : incorrect_idx).push_back(i);
    }
    chosen = draw_indices(correct_idx, composition->n_correct, rng, without_replacement,
                          ctx + " correct class");
    const std::vector<std::size_t> wrong = draw_indices(
        incorrect_idx, composition->n_incorrect, rng, without_replacement, ctx + " incorrect class");
    chosen.insert(chosen.end(), wrong.begin(), wrong.end());
  } else {
    std::vector<std::size_t> all(pool.entries.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    chosen = draw_indices(all, k, rng, without_replacement, ctx);
  }

  std::vector<PoolEntry> out;
  out.reserve(chosen.size());
  for (std::size_t i : chosen) out.push_back(pool.entries[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic positional-bias model
// ---------------------------------------------------------------------------

std::map<std::string, double> synthetic_adoption_probabilities(
    const std::string& own_answer, const std::vector<std::string>& peer_answers_in_order,
    const SyntheticConfig& cfg) {
  // Weights are computed as gamma^(p - shift) with shift anchored at the
  // largest exponent, so gamma^80 style terms stay inside double range; a
  // common factor cancels in the normalization.
  const int n_peers = static_cast<int>(peer_answers_in_order.size());
  const double shift = cfg.gamma > 1.0 ? static_cast<double>(n_peers) : 0.0;

  std::map<std::string, double> weights;
  if (!is_no_answer(own_answer)) weights[own_answer] = 0.0;  // seen even at zero weight
  for (int p = 1; p <= n_peers; ++p) {
    const std::string& a = peer_answers_in_order[static_cast<std::size_t>(p - 1)];
    if (is_no_answer(a)) continue;
    weights[a] += std::pow(cfg.gamma, static_cast<double>(p) - shift);
  }
  if (!is_no_answer(own_answer)) {
    weights[own_answer] += cfg.self_weight * std::pow(cfg.gamma, -shift);
  }
  if (weights.empty()) return {};

  double total = 0.0;
  for (const auto& [a, w] : weights) total += w;

  const double uniform = 1.0 / static_cast<double>(weights.size());
  std::map<std::string, double> probs;
  for (const auto& [a, w] : weights) {
    const double proportional = total > 0.0 ? w / total : uniform;
    probs[a] = (1.0 - cfg.noise_epsilon) * proportional + cfg.noise_epsilon * uniform;
  }
  return probs;
}

std::string synthetic_update(const Viewpoint& own_prev,
                             const std::vector<std::string>& peer_answers_in_order,
                             const SyntheticConfig& cfg, std::uint64_t seed) {
  if (peer_answers_in_order.empty()) return own_prev.answer;
  const std::map<std::string, double> probs =
      synthetic_adoption_probabilities(own_prev.answer, peer_answers_in_order, cfg);
  if (probs.empty()) return std::string(kNoAnswer);

  Rng rng(seed);
  const double r = rng.unit();
  double cum = 0.0;
  for (const auto& [answer, p] : probs) {
    cum += p;
    if (r < cum) return answer;
  }
  return probs.rbegin()->first;  // guard against rounding at cum ~ 1.0
}

std::string synthetic_response_text(const std::string& answer) {
  if (is_no_answer(answer)) return "synthetic reasoning. no answer.";
  return "synthetic reasoning. The answer is: (" + answer + ")";
}

// ---------------------------------------------------------------------------
// Live chat-completions client
// ---------------------------------------------------------------------------

namespace {

// Splits "http://host:port/prefix" into origin and path prefix.
std::pair<std::string, std::string> split_base_url(const std::string& base_url) {
  const std::size_t scheme = base_url.find("://");
  const std::size_t path_start =
      base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {base_url, ""};
  std::string prefix = base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {base_url.substr(0, path_start), prefix};
}

class HttplibTransport : public HttpTransport {
 public:
  HttpResponse post_json(const std::string& base_url, const std::string& path,
                         const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         double timeout_seconds) override {
    const auto [origin, prefix] = split_base_url(base_url);
    httplib::Client client(origin);
    const auto timeout = std::chrono::microseconds(
        static_cast<std::int64_t>(std::max(timeout_seconds, 0.001) * 1e6));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers hl;
    for (const auto& [k, v] : headers) hl.emplace(k, v);
    const httplib::Result res = client.Post(prefix + path, hl, body, "application/json");
    if (!res) return HttpResponse{0, httplib::to_string(res.error())};
    return HttpResponse{res->status, res->body};
  }
};

bool retryable_status(int status) {
  return status == 0 || status == 408 || status == 429 || status >= 500;
}

}  // namespace

HttpTransport& default_transport() {
  static HttplibTransport transport;
  return transport;
}

std::string llm_complete(const std::string& prompt, const LlmConfig& cfg,
                         std::uint64_t attempt_seed, HttpTransport& transport,
                         LlmCallStats* stats) {
  using Clock = std::chrono::steady_clock;
  const double budget_seconds = cfg.timeout_seconds * static_cast<double>(cfg.max_retries + 1);
  const Clock::time_point deadline =
      Clock::now() + std::chrono::duration_cast<Clock::duration>(
                         std::chrono::duration<double>(budget_seconds));

  const nlohmann::json body = {
      {"model", cfg.model_name},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})},
      {"temperature", cfg.temperature},
      {"max_tokens", cfg.max_tokens}};

  std::vector<std::pair<std::string, std::string>> headers;
  if (const char* key = std::getenv(cfg.api_key_env_var.c_str()); key != nullptr && *key != '\0') {
    headers.emplace_back("Authorization", std::string("Bearer ") + key);
  }

  Rng jitter(attempt_seed);
  if (stats != nullptr) stats->attempts = 0;
  std::string last_error = "no attempt made";

  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    const double remaining =
        std::chrono::duration<double>(deadline - Clock::now()).count();
    if (remaining <= 0.0) break;
    if (stats != nullptr) stats->attempts = attempt + 1;

    const HttpResponse res =
        transport.post_json(cfg.base_url, "/chat/completions", body.dump(), headers,
                            std::min(cfg.timeout_seconds, remaining));
    if (res.status == 200) {
      try {
        const nlohmann::json j = nlohmann::json::parse(res.body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw RuntimeFault(std::string("llm: malformed completion response: ") + e.what() +
                           "; body: " + excerpt(res.body));
      }
    }
    last_error = "status " + std::to_string(res.status) + ": " + excerpt(res.body);
    if (!retryable_status(res.status)) {
      throw RuntimeFault("llm: non-retryable response: " + last_error);
    }
    if (attempt == cfg.max_retries) break;

    // Exponential backoff with jitter in [0.5x, 1.5x), capped by both the
    // absolute ceiling and the remaining wall-clock budget.
    double delay = kBackoffBaseSeconds * std::pow(2.0, attempt) * (0.5 + jitter.unit());
    delay = std::min(delay, kBackoffCapSeconds);
    const double left = std::chrono::duration<double>(deadline - Clock::now()).count();
    delay = std::min(delay, left);
    if (delay > 0.0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(delay));
    }
  }
  throw RuntimeFault("llm: retries exhausted: " + last_error);
}

// ---------------------------------------------------------------------------
// Agent backends
// ---------------------------------------------------------------------------

LlmBackend::LlmBackend(LlmConfig cfg, HttpTransport* transport)
    : cfg_(std::move(cfg)), transport_(transport != nullptr ? transport : &default_transport()) {}

std::string LlmBackend::initial_response(const CallContext& ctx, const std::string& prompt) {
  return llm_complete(prompt, cfg_, ctx.call_seed, *transport_);
}

std::string LlmBackend::debate_response(const CallContext& ctx, const std::string& prompt,
                                        const Viewpoint&, const std::vector<std::string>&) {
  return llm_complete(prompt, cfg_, ctx.call_seed, *transport_);
}

PoolBackend::PoolBackend(PoolSet pools, bool sample_without_replacement)
    : pools_(std::move(pools)), without_replacement_(sample_without_replacement) {}

const ViewpointPool& PoolBackend::pool_for(const std::string& question_id) const {
  const auto it = pools_.find(question_id);
  if (it == pools_.end()) {
    throw ConfigError("pool: no entries for question \"" + question_id + "\"");
  }
  return it->second;
}

std::string PoolBackend::initial_response(const CallContext& ctx, const std::string&) {
  // One shared draw per (run, question, round): every agent recomputes the
  // same k-entry draw from the shared seed and takes its own slot.
  const std::vector<PoolEntry> drawn = pool_draw(pool_for(ctx.question.id), ctx.n_agents,
                                                 std::nullopt, ctx.shared_seed,
                                                 without_replacement_);
  return drawn[static_cast<std::size_t>(ctx.agent_index)].text;
}

std::string PoolBackend::debate_response(const CallContext&, const std::string&,
                                         const Viewpoint& own_prev,
                                         const std::vector<std::string>&) {
  return own_prev.text;
}

SyntheticBackend::SyntheticBackend(SyntheticConfig cfg, PoolSet initial_pools,
                                   bool sample_without_replacement)
    : cfg_(cfg), initial_(std::move(initial_pools), sample_without_replacement) {}

std::string SyntheticBackend::initial_response(const CallContext& ctx, const std::string& prompt) {
  return initial_.initial_response(ctx, prompt);
}

std::string SyntheticBackend::debate_response(const CallContext& ctx, const std::string&,
                                              const Viewpoint& own_prev,
                                              const std::vector<std::string>& peer_answers) {
  return synthetic_response_text(synthetic_update(own_prev, peer_answers, cfg_, ctx.call_seed));
}

std::unique_ptr<AgentBackend> make_backend(const BackendDescriptor& desc,
                                           const PoolSet* extra_pools) {
  desc.validate();
  switch (desc.kind) {
    case Kind::kLlm:
      return std::make_unique<LlmBackend>(*desc.llm);
    case Kind::kPool: {
      PoolSet pools;
      if (extra_pools != nullptr) {
        pools = *extra_pools;
      } else if (!desc.pool->pool_path.empty()) {
        pools = load_pools(desc.pool->pool_path);
      } else {
        throw ConfigError("backend.pool.pool_path: required when no pools are supplied");
      }
      return std::make_unique<PoolBackend>(std::move(pools), desc.pool->sample_without_replacement);
    }
    case Kind::kSynthetic: {
      PoolSet pools;
      if (extra_pools != nullptr) pools = *extra_pools;
      return std::make_unique<SyntheticBackend>(*desc.synthetic, std::move(pools));
    }
  }
  throw ConfigError("backend.kind: unknown enum value");
}

}  // namespace parley::backends
