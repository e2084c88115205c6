#pragma once

#include <string>
#include <string_view>

namespace parley {

// How answers are pulled out of raw response text.
struct ExtractionPolicy {
  // Only accept an answer group that closes within the final
  // kTrailingWindow characters of the text.
  bool require_trailing = true;
  // Uppercase single-letter option labels during normalization.
  bool normalize_case = true;

  bool operator==(const ExtractionPolicy&) const = default;
};

inline constexpr std::size_t kTrailingWindow = 200;

// Canonical answer form:
//   - surrounding whitespace trimmed,
//   - trailing sentence periods stripped,
//   - internal whitespace runs collapsed to single spaces,
//   - single letters uppercased ("a" -> "A"),
//   - integers reduced to canonical form ("007" -> "7", "+12" -> "12").
// Empty results become the no-answer sentinel.  The function is idempotent:
// normalize_answer(normalize_answer(x)) == normalize_answer(x).
std::string normalize_answer(std::string_view raw);

// Returns the normalized content of the last parenthesized group in the
// text ("The answer is: (306)." -> "306"), honoring the policy's trailing
// window.  Nested groups keep one level of parentheses: "((2,-2))" yields
// "(2,-2)".  Returns the sentinel when no balanced group exists.
std::string extract_answer(std::string_view text, const ExtractionPolicy& policy = {});

}  // namespace parley
