#pragma once

#include "parley/core.hpp"

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace parley {

// Answer frequencies for one round.  The no-answer sentinel is tracked as
// its own key so missing answers still shape the distribution.
struct RoundDistribution {
  std::map<std::string, int> counts;
  int n = 0;

  bool operator==(const RoundDistribution&) const = default;
};

// Distribution of the given round (1-based) across all paths.
RoundDistribution round_distribution(const DebateTranscript& t, int round);
RoundDistribution round_distribution(const std::vector<Viewpoint>& round_viewpoints);

// Shannon entropy of the answer distribution, in bits.  Zero-probability
// terms contribute zero; a unanimous round has entropy 0, and entropy never
// exceeds log2(#distinct answers).
double entropy_bits(const RoundDistribution& dist);

// log2 of the answer-key mass.  When no agent holds the key the value is
// undefined (the correct fraction is exactly zero) and flagged instead of
// clamped; aggregation must exclude flagged rows and report their count.
struct LogLikelihood {
  double bits = 0.0;
  bool undefined = false;

  bool operator==(const LogLikelihood&) const = default;
};

LogLikelihood log_likelihood_bits(const RoundDistribution& dist, const std::string& answer_key);

// Fraction of transcripts whose final answer equals the question's answer
// key.  Throws ConfigError when a transcript's question or key is missing
// (the message lists the offending ids) or when no transcripts are given.
double accuracy(const std::vector<DebateTranscript>& transcripts, const Dataset& dataset);

// One CSV row per (question, round).
struct MetricRow {
  std::string question_id;
  int round = 1;
  int accuracy_flag = 0;  // final answer equals the answer key
  double entropy_bits = 0.0;
  LogLikelihood ll;

  bool operator==(const MetricRow&) const = default;
};

// Rows for every round of one transcript, in round order.  The accuracy
// flag is the transcript-level final-answer correctness, repeated per row.
std::vector<MetricRow> metric_rows(const DebateTranscript& t, const Question& question);

// Header: question_id,round,accuracy_flag,entropy_bits,ll_bits,ll_undefined
// Undefined log-likelihood rows leave ll_bits empty and set ll_undefined=1.
// Formatting is fixed ("%.10g"), so equal rows always produce equal bytes.
void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);
std::string metrics_csv(const std::vector<MetricRow>& rows);

// Fixed-format float used by every CSV emitter.
std::string format_double(double value);

}  // namespace parley
