#pragma once

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace parley {

// Answer slot used when no parenthesized answer could be extracted.  The
// sentinel never equals an answer key and never matches another viewpoint
// when consistency is scored, so downstream math needs no special cases.
inline constexpr std::string_view kNoAnswer = "<NO_ANSWER>";

inline bool is_no_answer(std::string_view answer) { return answer == kNoAnswer; }

// Raised for malformed configs, datasets, and violated preconditions.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for faults at run time (backend failures, IO errors, broken
// protocol preconditions such as an incomplete round).
class RuntimeFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuestionOption {
  std::string label;  // canonical answer label, e.g. "A"
  std::string text;

  bool operator==(const QuestionOption&) const = default;
};

struct Question {
  std::string id;
  std::string prompt;
  std::vector<QuestionOption> options;      // empty for free-form questions
  std::optional<std::string> answer_key;    // canonical answer, if known

  bool operator==(const Question&) const = default;
};

// One agent response in one round.  prompt_hash records the FNV-1a 64 hash
// (hex) of the exact prompt that produced the text, so a persisted
// transcript can be audited for the round-barrier guarantee.
struct Viewpoint {
  int agent_index = 0;
  int round = 1;  // 1-based; round 1 is the independent answer
  std::string text;
  std::string answer;
  std::string prompt_hash;

  bool operator==(const Viewpoint&) const = default;
};

// One agent's viewpoints across rounds, in round order.
struct DebatePath {
  int agent_index = 0;
  std::vector<Viewpoint> viewpoints;

  bool operator==(const DebatePath&) const = default;
};

// Context order for one debate round: permutation[k] is the agent whose
// previous-round solution occupies position k+1 (1-based) of the assembled
// context.  Later positions sit closer to the end of the prompt.
struct AllocationOrder {
  std::vector<int> permutation;
  std::string strategy_name;
  int round = 1;  // round whose viewpoints the order was computed from

  bool operator==(const AllocationOrder&) const = default;
};

enum class Strategy { kFixed, kRandom, kTruthFirst, kTruthLast, kMadc };
enum class Aggregation { kMajorityVote, kMaxConsistency };

std::string to_string(Strategy s);
std::string to_string(Aggregation a);
Strategy strategy_from_string(std::string_view s);
Aggregation aggregation_from_string(std::string_view s);

struct DebateTranscript {
  std::string question_id;
  int n_agents = 0;
  int n_rounds = 0;
  std::vector<DebatePath> paths;           // one per agent
  std::vector<AllocationOrder> orderings;  // one per debate round (n_rounds - 1)
  std::string final_answer;
  nlohmann::json config_snapshot = nlohmann::json::object();

  bool operator==(const DebateTranscript&) const = default;
};

// Structural audit of a transcript.  Returns one message per violation,
// each naming the field and the rule broken; empty means well-formed.
std::vector<std::string> validate_transcript(const DebateTranscript& t);

// JSON serialization (nlohmann ADL hooks).  Keys are emitted sorted, so a
// given value always serializes to the same bytes.
void to_json(nlohmann::json& j, const QuestionOption& o);
void from_json(const nlohmann::json& j, QuestionOption& o);
void to_json(nlohmann::json& j, const Question& q);
void from_json(const nlohmann::json& j, Question& q);
void to_json(nlohmann::json& j, const Viewpoint& v);
void from_json(const nlohmann::json& j, Viewpoint& v);
void to_json(nlohmann::json& j, const DebatePath& p);
void from_json(const nlohmann::json& j, DebatePath& p);
void to_json(nlohmann::json& j, const AllocationOrder& o);
void from_json(const nlohmann::json& j, AllocationOrder& o);
void to_json(nlohmann::json& j, const DebateTranscript& t);
void from_json(const nlohmann::json& j, DebateTranscript& t);

// Dataset: ordered questions with id lookup.
struct Dataset {
  std::vector<Question> questions;

  const Question* find(std::string_view id) const;
  // Messages for structural problems (duplicate ids, empty prompts, answer
  // keys that match none of the listed options); empty means valid.
  std::vector<std::string> validate() const;
};

// One JSON object per line.  Blank lines are ignored; parse errors carry
// the 1-based line number.
Dataset load_dataset(const std::string& path);
std::vector<DebateTranscript> load_transcripts(const std::string& path);
void append_transcript(std::ostream& out, const DebateTranscript& t);
void save_transcripts(const std::string& path, const std::vector<DebateTranscript>& transcripts);

}  // namespace parley
