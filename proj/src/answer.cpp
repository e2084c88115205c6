#include "parley/answer.hpp"

#include "parley/core.hpp"

#include <cctype>
#include <vector>

namespace parley {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Canonical form for plain integers ("007" -> "7", "+12" -> "12",
// "-0" -> "0").  Non-integers pass through untouched.
std::string canonicalize_integer(const std::string& s) {
  std::size_t i = 0;
  bool negative = false;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) {
    negative = s[i] == '-';
    ++i;
  }
  if (i == s.size()) return s;  // bare sign
  for (std::size_t k = i; k < s.size(); ++k) {
    if (std::isdigit(static_cast<unsigned char>(s[k])) == 0) return s;
  }
  while (i + 1 < s.size() && s[i] == '0') ++i;  // keep at least one digit
  std::string digits = s.substr(i);
  if (digits == "0") return "0";
  return negative ? "-" + digits : digits;
}

std::string normalize_impl(std::string_view raw, bool normalize_case) {
  std::string_view t = trim(raw);

  // Strip trailing sentence punctuation: any run of periods and spaces at
  // the end.  Stripping the whole run (rather than a single period) keeps
  // the function idempotent.
  while (!t.empty() && (t.back() == '.' || is_space(t.back()))) t.remove_suffix(1);

  // Collapse internal whitespace runs.
  std::string s;
  s.reserve(t.size());
  bool in_space = false;
  for (char c : t) {
    if (is_space(c)) {
      in_space = true;
      continue;
    }
    if (in_space && !s.empty()) s.push_back(' ');
    in_space = false;
    s.push_back(c);
  }

  if (s.empty()) return std::string(kNoAnswer);
  if (s.size() == 1 && normalize_case && std::isalpha(static_cast<unsigned char>(s[0])) != 0) {
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  }
  return canonicalize_integer(s);
}

}  // namespace

std::string normalize_answer(std::string_view raw) { return normalize_impl(raw, true); }

std::string extract_answer(std::string_view text, const ExtractionPolicy& policy) {
  std::string_view region = text;
  if (policy.require_trailing && region.size() > kTrailingWindow) {
    region = region.substr(region.size() - kTrailingWindow);
  }

  // Single left-to-right pass tracking open positions; the balanced group
  // with the last closing parenthesis wins, and for nested groups that is
  // always the outermost one ("((2,-2))" -> "(2,-2)").
  std::vector<std::size_t> open_stack;
  bool found = false;
  std::size_t best_open = 0, best_close = 0;
  for (std::size_t i = 0; i < region.size(); ++i) {
    if (region[i] == '(') {
      open_stack.push_back(i);
    } else if (region[i] == ')' && !open_stack.empty()) {
      best_open = open_stack.back();
      best_close = i;
      found = true;
      open_stack.pop_back();
    }
  }
  if (!found) return std::string(kNoAnswer);

  std::string_view content = region.substr(best_open + 1, best_close - best_open - 1);
  return normalize_impl(content, policy.normalize_case);
}

}  // namespace parley
