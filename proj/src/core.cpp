#include "parley/core.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace parley {
namespace {

std::string indexed(std::string_view field, std::size_t i) {
  return std::string(field) + "[" + std::to_string(i) + "]";
}

}  // namespace

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kFixed: return "fixed";
    case Strategy::kRandom: return "random";
    case Strategy::kTruthFirst: return "truth_first";
    case Strategy::kTruthLast: return "truth_last";
    case Strategy::kMadc: return "madc";
  }
  throw ConfigError("strategy: unknown enum value");
}

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kMajorityVote: return "majority_vote";
    case Aggregation::kMaxConsistency: return "max_consistency";
  }
  throw ConfigError("aggregation: unknown enum value");
}

Strategy strategy_from_string(std::string_view s) {
  if (s == "fixed") return Strategy::kFixed;
  if (s == "random") return Strategy::kRandom;
  if (s == "truth_first") return Strategy::kTruthFirst;
  if (s == "truth_last") return Strategy::kTruthLast;
  if (s == "madc") return Strategy::kMadc;
  throw ConfigError("strategy: expected one of fixed|random|truth_first|truth_last|madc, got \"" +
                    std::string(s) + "\"");
}

Aggregation aggregation_from_string(std::string_view s) {
  if (s == "majority_vote") return Aggregation::kMajorityVote;
  if (s == "max_consistency") return Aggregation::kMaxConsistency;
  throw ConfigError("aggregation: expected majority_vote|max_consistency, got \"" +
                    std::string(s) + "\"");
}

std::vector<std::string> validate_transcript(const DebateTranscript& t) {
  std::vector<std::string> violations;
  const int n = t.n_agents;
  const int m = t.n_rounds;

  if (n < 1) violations.push_back("n_agents: must be >= 1");
  if (m < 1) violations.push_back("n_rounds: must be >= 1");

  if (static_cast<int>(t.paths.size()) != n) {
    violations.push_back("paths: expected n_agents (" + std::to_string(n) + ") paths, found " +
                         std::to_string(t.paths.size()));
  }
  if (static_cast<int>(t.orderings.size()) != m - 1) {
    violations.push_back("orderings: ordering count must be n_rounds - 1 (expected " +
                         std::to_string(m - 1) + ", found " + std::to_string(t.orderings.size()) +
                         ")");
  }

  std::set<int> seen_agents;
  for (std::size_t i = 0; i < t.paths.size(); ++i) {
    const DebatePath& p = t.paths[i];
    const std::string where = indexed("paths", i);
    if (p.agent_index < 0 || p.agent_index >= n) {
      violations.push_back(where + ".agent_index: out of range [0, n_agents)");
    } else if (!seen_agents.insert(p.agent_index).second) {
      violations.push_back(where + ".agent_index: duplicate agent index " +
                           std::to_string(p.agent_index));
    }
    if (static_cast<int>(p.viewpoints.size()) != m) {
      violations.push_back(where + ".viewpoints: expected one viewpoint per round (" +
                           std::to_string(m) + "), found " + std::to_string(p.viewpoints.size()));
    }
    for (std::size_t k = 0; k < p.viewpoints.size(); ++k) {
      const Viewpoint& v = p.viewpoints[k];
      if (v.round != static_cast<int>(k) + 1) {
        violations.push_back(where + "." + indexed("viewpoints", k) + ".round: expected " +
                             std::to_string(k + 1) + ", found " + std::to_string(v.round));
      }
      if (v.agent_index != p.agent_index) {
        violations.push_back(where + "." + indexed("viewpoints", k) +
                             ".agent_index: does not match the path's agent_index");
      }
    }
  }

  for (std::size_t k = 0; k < t.orderings.size(); ++k) {
    const std::vector<int>& perm = t.orderings[k].permutation;
    const std::string where = indexed("orderings", k);
    if (static_cast<int>(perm.size()) != n) {
      violations.push_back(where + ".permutation: ordering not a permutation of [0, n_agents) "
                           "(wrong length)");
      continue;
    }
    std::vector<bool> hit(static_cast<std::size_t>(std::max(n, 0)), false);
    bool ok = true;
    for (int a : perm) {
      if (a < 0 || a >= n || hit[static_cast<std::size_t>(a)]) {
        ok = false;
        break;
      }
      hit[static_cast<std::size_t>(a)] = true;
    }
    if (!ok) {
      violations.push_back(where + ".permutation: ordering not a permutation of [0, n_agents)");
    }
  }

  return violations;
}

void to_json(nlohmann::json& j, const QuestionOption& o) {
  j = nlohmann::json{{"label", o.label}, {"text", o.text}};
}

void from_json(const nlohmann::json& j, QuestionOption& o) {
  j.at("label").get_to(o.label);
  j.at("text").get_to(o.text);
}

void to_json(nlohmann::json& j, const Question& q) {
  j = nlohmann::json{{"id", q.id}, {"prompt", q.prompt}};
  if (!q.options.empty()) j["options"] = q.options;
  if (q.answer_key) j["answer_key"] = *q.answer_key;
}

void from_json(const nlohmann::json& j, Question& q) {
  j.at("id").get_to(q.id);
  j.at("prompt").get_to(q.prompt);
  q.options.clear();
  if (j.contains("options")) j.at("options").get_to(q.options);
  q.answer_key.reset();
  if (j.contains("answer_key") && !j.at("answer_key").is_null()) {
    q.answer_key = j.at("answer_key").get<std::string>();
  }
}

void to_json(nlohmann::json& j, const Viewpoint& v) {
  j = nlohmann::json{{"agent_index", v.agent_index},
                     {"round", v.round},
                     {"text", v.text},
                     {"answer", v.answer},
                     {"prompt_hash", v.prompt_hash}};
}

void from_json(const nlohmann::json& j, Viewpoint& v) {
  j.at("agent_index").get_to(v.agent_index);
  j.at("round").get_to(v.round);
  j.at("text").get_to(v.text);
  j.at("answer").get_to(v.answer);
  v.prompt_hash.clear();
  if (j.contains("prompt_hash")) j.at("prompt_hash").get_to(v.prompt_hash);
}

void to_json(nlohmann::json& j, const DebatePath& p) {
  j = nlohmann::json{{"agent_index", p.agent_index}, {"viewpoints", p.viewpoints}};
}

void from_json(const nlohmann::json& j, DebatePath& p) {
  j.at("agent_index").get_to(p.agent_index);
  j.at("viewpoints").get_to(p.viewpoints);
}

void to_json(nlohmann::json& j, const AllocationOrder& o) {
  j = nlohmann::json{
      {"permutation", o.permutation}, {"strategy_name", o.strategy_name}, {"round", o.round}};
}

void from_json(const nlohmann::json& j, AllocationOrder& o) {
  j.at("permutation").get_to(o.permutation);
  j.at("strategy_name").get_to(o.strategy_name);
  j.at("round").get_to(o.round);
}

void to_json(nlohmann::json& j, const DebateTranscript& t) {
  j = nlohmann::json{{"question_id", t.question_id},
                     {"n_agents", t.n_agents},
                     {"n_rounds", t.n_rounds},
                     {"paths", t.paths},
                     {"orderings", t.orderings},
                     {"final_answer", t.final_answer},
                     {"config_snapshot", t.config_snapshot}};
}

void from_json(const nlohmann::json& j, DebateTranscript& t) {
  j.at("question_id").get_to(t.question_id);
  j.at("n_agents").get_to(t.n_agents);
  j.at("n_rounds").get_to(t.n_rounds);
  j.at("paths").get_to(t.paths);
  j.at("orderings").get_to(t.orderings);
  j.at("final_answer").get_to(t.final_answer);
  t.config_snapshot = j.value("config_snapshot", nlohmann::json::object());
}

const Question* Dataset::find(std::string_view id) const {
  for (const Question& q : questions) {
    if (q.id == id) return &q;
  }
  return nullptr;
}

std::vector<std::string> Dataset::validate() const {
  std::vector<std::string> violations;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < questions.size(); ++i) {
    const Question& q = questions[i];
    const std::string where = indexed("questions", i);
    if (q.id.empty()) violations.push_back(where + ".id: must not be empty");
    if (!ids.insert(q.id).second) violations.push_back(where + ".id: duplicate id \"" + q.id + "\"");
    if (q.prompt.empty()) violations.push_back(where + ".prompt: must not be empty");
    if (q.answer_key && is_no_answer(*q.answer_key)) {
      violations.push_back(where + ".answer_key: must not be the no-answer sentinel");
    }
    if (q.answer_key && !q.options.empty()) {
      bool matches = std::any_of(q.options.begin(), q.options.end(),
                                 [&](const QuestionOption& o) { return o.label == *q.answer_key; });
      if (!matches) {
        violations.push_back(where + ".answer_key: \"" + *q.answer_key +
                             "\" matches no option label");
      }
    }
    std::set<std::string> labels;
    for (std::size_t k = 0; k < q.options.size(); ++k) {
      if (!labels.insert(q.options[k].label).second) {
        violations.push_back(where + "." + indexed("options", k) + ".label: duplicate label \"" +
                             q.options[k].label + "\"");
      }
    }
  }
  return violations;
}

namespace {

template <typename T>
std::vector<T> load_jsonl(const std::string& path, std::string_view what) {
  std::ifstream in(path);
  if (!in) throw ConfigError(std::string(what) + ": cannot open file \"" + path + "\"");
  std::vector<T> items;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      items.push_back(nlohmann::json::parse(line).get<T>());
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string(what) + ": parse error at " + path + ":" +
                        std::to_string(line_no) + ": " + e.what());
    }
  }
  return items;
}

}  // namespace

Dataset load_dataset(const std::string& path) {
  Dataset d;
  d.questions = load_jsonl<Question>(path, "dataset");
  return d;
}

std::vector<DebateTranscript> load_transcripts(const std::string& path) {
  return load_jsonl<DebateTranscript>(path, "transcripts");
}

void append_transcript(std::ostream& out, const DebateTranscript& t) {
  out << nlohmann::json(t).dump() << '\n';
}

void save_transcripts(const std::string& path, const std::vector<DebateTranscript>& transcripts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFault("transcripts: cannot open \"" + path + "\" for writing");
  for (const DebateTranscript& t : transcripts) append_transcript(out, t);
}

}  // namespace parley
