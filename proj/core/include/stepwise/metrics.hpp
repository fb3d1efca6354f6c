#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stepwise/config.hpp"
#include "stepwise/orchestrator.hpp"

namespace stepwise {

struct TokenTotals {
  std::int64_t srm = 0;     // SRM tokens kept in the trajectory
  std::int64_t lrm = 0;     // LRM tokens kept in the trajectory
  std::int64_t wasted = 0;  // tokens of discarded SRM drafts
};

TokenTotals token_totals(const Session& session);

/// Share of trajectory tokens produced by the SRM. Discarded drafts count
/// nowhere. Throws EmptySession when the trajectory holds no tokens.
double smt_percentage(const Session& session);

struct CallCounts {
  int srm_calls = 0;
  int lrm_calls = 0;
  std::int64_t srm_tokens = 0;  // completion tokens across SRM calls
  std::int64_t lrm_tokens = 0;  // completion tokens across LRM calls
};

/// Every backend call the session made, including drafts, judge calls
/// (subject to model.count_judge_calls) and the answer phase.
CallCounts call_counts(const Session& session, const CostModel& model);

/// Sum over calls of prompt_tokens * input price + completion_tokens * output
/// price. prompt_tokens is the full resent prefix of each call.
double estimate_cost(const Session& session, const CostModel& model);

/// LRM call: rtt + completion_tokens * lrm_token_latency.
/// SRM call: completion_tokens * srm_token_latency.
double estimate_latency(const Session& session, const CostModel& model);

enum class AnswerKind { kIntegerBoxed, kMultipleChoice };

std::string_view to_string(AnswerKind k);
std::optional<AnswerKind> parse_answer_kind(std::string_view s);

/// IntegerBoxed: the last \boxed{...} whose content is an integer in
/// [0,999], returned without leading zeros. MultipleChoice: the last
/// standalone letter A-D.
std::optional<std::string> extract_answer(std::string_view answer_text, AnswerKind kind);

/// Exact match after extraction and normalisation of both sides.
bool grade_answer(const std::optional<std::string>& answer_text, std::string_view expected, AnswerKind kind);

/// Mean over questions of the mean correctness of that question's runs.
/// Throws EmptyInput when there are no questions or a question has no runs.
double pass_at_1(const std::map<std::string, std::vector<bool>>& per_question_runs);

/// One line of a benchmark file:
/// {"id": ..., "question": ..., "answer": ..., "kind": "IntegerBoxed"|"MultipleChoice"}.
struct BenchmarkItem {
  std::string id;
  std::string question;
  std::string answer;
  AnswerKind kind = AnswerKind::kIntegerBoxed;

  bool operator==(const BenchmarkItem&) const = default;
};

/// Blank lines are skipped; "kind" defaults to IntegerBoxed. Throws
/// SchemaError naming the line for malformed records or duplicate ids.
std::vector<BenchmarkItem> parse_benchmark(std::string_view jsonl);
std::vector<BenchmarkItem> load_benchmark(const std::string& path);

struct SessionReport {
  std::optional<std::string> answer;  // extracted answer (boxed integer, else choice letter)
  std::optional<bool> correct;
  std::int64_t srm_tokens = 0;
  std::int64_t lrm_tokens = 0;
  std::int64_t wasted_draft_tokens = 0;
  double smt_percentage = 0.0;
  std::map<TriggerKind, int> trigger_counts;
  std::map<Origin, int> step_counts;
  int lrm_calls = 0;
  double est_latency = 0.0;
  double est_cost = 0.0;

  bool operator==(const SessionReport&) const = default;
};

struct GradingKey {
  std::string expected;
  AnswerKind kind = AnswerKind::kIntegerBoxed;
};

SessionReport make_session_report(const Session& session, const CostModel& model,
                                  const std::optional<GradingKey>& key = std::nullopt);
std::string session_report_json(const SessionReport& report);
std::string format_session_report(const SessionReport& report);

/// Trigger firings as a percentage of all trajectory steps.
struct ActivationRow {
  std::string label;
  std::int64_t total_steps = 0;
  double cognitive_offload_pct = 0.0;
  double strategic_priming_pct = 0.0;
  double intervention_request_pct = 0.0;
  double total_pct = 0.0;
  std::optional<double> accuracy;  // percent
};

/// "rho-n-m", e.g. "0.85-20-1".
std::string config_label(const SessionConfig& config);

/// Throws EmptyInput for an empty session list.
ActivationRow trigger_activation_report(std::span<const Session> sessions, std::string label = {});

std::string format_activation_table(std::span<const ActivationRow> rows);
/// Keys: label, steps, cognitive_offload_pct, strategic_priming_pct,
/// intervention_request_pct, total_pct, accuracy.
std::string activation_row_json(const ActivationRow& row);

/// Fraction of SRM-scored steps (accepted or discarded) with ratio > rho.
double overconfident_step_fraction(std::span<const Session> sessions, double rho);

/// Thread-safe aggregate over many sessions.
class ReportAccumulator {
 public:
  void add(const std::string& question_id, const Session& session, std::optional<bool> correct = std::nullopt);
  /// A run that produced no session; graded as incorrect.
  void add_failed_run(const std::string& question_id);

  ActivationRow activation(std::string label = {}) const;
  /// Throws EmptyInput when nothing graded was added.
  double pass_at_1() const;
  std::size_t sessions() const;
  std::size_t failed_runs() const;

 private:
  mutable std::mutex mu_;
  std::size_t sessions_ = 0;
  std::size_t failed_ = 0;
  std::int64_t steps_ = 0;
  std::map<TriggerKind, std::int64_t> fired_;
  std::map<std::string, std::vector<bool>> runs_;
};

}  // namespace stepwise
