#include "parley/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace parley {

RoundDistribution round_distribution(const std::vector<Viewpoint>& round_viewpoints) {
  RoundDistribution dist;
  dist.n = static_cast<int>(round_viewpoints.size());
  for (const Viewpoint& v : round_viewpoints) ++dist.counts[v.answer];
  return dist;
}

RoundDistribution round_distribution(const DebateTranscript& t, int round) {
  RoundDistribution dist;
  for (const DebatePath& p : t.paths) {
    for (const Viewpoint& v : p.viewpoints) {
      if (v.round == round) {
        ++dist.counts[v.answer];
        ++dist.n;
      }
    }
  }
  return dist;
}

double entropy_bits(const RoundDistribution& dist) {
  if (dist.n <= 0) return 0.0;
  double h = 0.0;
  for (const auto& [answer, count] : dist.counts) {
    if (count <= 0) continue;
    const double p = static_cast<double>(count) / static_cast<double>(dist.n);
    h += p * std::log2(p);
  }
  return h == 0.0 ? 0.0 : -h;  // avoid -0.0 on unanimous rounds
}

LogLikelihood log_likelihood_bits(const RoundDistribution& dist, const std::string& answer_key) {
  LogLikelihood ll;
  const auto it = dist.counts.find(answer_key);
  const int count = it == dist.counts.end() ? 0 : it->second;
  if (dist.n <= 0 || count <= 0) {
    ll.undefined = true;
    return ll;
  }
  const double p = static_cast<double>(count) / static_cast<double>(dist.n);
  ll.bits = std::log2(p);
  if (ll.bits == 0.0) ll.bits = 0.0;  // normalize -0.0 when every agent is correct
  return ll;
}

double accuracy(const std::vector<DebateTranscript>& transcripts, const Dataset& dataset) {
  if (transcripts.empty()) throw ConfigError("transcripts: no transcripts");
  std::string missing;
  int correct = 0;
  for (const DebateTranscript& t : transcripts) {
    const Question* q = dataset.find(t.question_id);
    if (q == nullptr || !q->answer_key) {
      if (!missing.empty()) missing += ", ";
      missing += t.question_id;
      continue;
    }
    if (t.final_answer == *q->answer_key) ++correct;
  }
  if (!missing.empty()) {
    throw ConfigError("answer_key: missing question or key for ids: " + missing);
  }
  return static_cast<double>(correct) / static_cast<double>(transcripts.size());
}

std::vector<MetricRow> metric_rows(const DebateTranscript& t, const Question& question) {
  if (!question.answer_key) {
    throw ConfigError("answer_key: metrics require an answer key for question \"" + question.id +
                      "\"");
  }
  std::vector<MetricRow> rows;
  rows.reserve(static_cast<std::size_t>(t.n_rounds));
  const int flag = t.final_answer == *question.answer_key ? 1 : 0;
  for (int round = 1; round <= t.n_rounds; ++round) {
    const RoundDistribution dist = round_distribution(t, round);
    MetricRow row;
    row.question_id = t.question_id;
    row.round = round;
    row.accuracy_flag = flag;
    row.entropy_bits = entropy_bits(dist);
    row.ll = log_likelihood_bits(dist, *question.answer_key);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", value);
  return buf;
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  out << "question_id,round,accuracy_flag,entropy_bits,ll_bits,ll_undefined\n";
  for (const MetricRow& row : rows) {
    out << row.question_id << ',' << row.round << ',' << row.accuracy_flag << ','
        << format_double(row.entropy_bits) << ',';
    if (!row.ll.undefined) out << format_double(row.ll.bits);
    out << ',' << (row.ll.undefined ? 1 : 0) << '\n';
  }
}

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::ostringstream out;
  write_metrics_csv(out, rows);
  return out.str();
}

}  // namespace parley
