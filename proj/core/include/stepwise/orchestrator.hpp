#pragma once

#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "stepwise/backend.hpp"
#include "stepwise/config.hpp"
#include "stepwise/errors.hpp"
#include "stepwise/triggers.hpp"
#include "stepwise/types.hpp"

namespace stepwise {

enum class FinishCheck { kContinue, kFinishedByMarker, kFinishedByEos, kFinishedByBudget };

std::string_view to_string(FinishCheck f);
std::optional<FinishCheck> parse_finish_check(std::string_view s);

/// Marker > end-of-sequence > budget. A marker counts when it occurs in the
/// step text or is the stop string the endpoint matched.
FinishCheck check_finished(const ReasoningStep& step, int used, const SessionConfig& config);

struct AnswerPhase {
  Origin origin = Origin::kSrm;
  std::vector<TokenSample> tokens;
  FinishReason finish = FinishReason::kStopSequence;
  CallUsage usage;

  bool operator==(const AnswerPhase&) const = default;
};

struct Session {
  std::string question;
  SessionConfig config;
  std::vector<ReasoningStep> steps;   // the trajectory, indices 1..N
  std::vector<ReasoningStep> drafts;  // discarded SRM drafts, index = step they were replaced at
  std::vector<TriggerEvent> events;
  InterventionState intervention;
  int thinking_tokens_used = 0;
  bool finished = false;
  FinishCheck termination = FinishCheck::kContinue;
  std::optional<AnswerPhase> answer_phase;
  std::optional<std::string> answer_text;  // absent when the answer phase produced nothing

  bool operator==(const Session&) const = default;
};

/// Thinking ended on the budget and the answer phase yielded nothing.
bool budget_exhausted_without_answer(const Session& session);

/// A backend failed mid-session. The partial session is kept for diagnostics;
/// cause() rethrows the original TransportError/ProtocolError/LogprobsUnavailable.
class SessionAborted : public Error {
 public:
  SessionAborted(Session partial, std::exception_ptr cause, const std::string& what)
      : Error(what), partial_(std::move(partial)), cause_(std::move(cause)) {}
  const Session& partial() const noexcept { return partial_; }
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

 private:
  Session partial_;
  std::exception_ptr cause_;
};

/// question + delimiter + each step text followed by the delimiter.
std::string build_context(const std::string& question, const std::vector<ReasoningStep>& steps,
                          const std::string& delimiter);

/// Trigger-based collaboration: LRM priming for steps 1..n, then SRM drafts
/// that are replaced by the LRM on cognitive offload or during a
/// rectification window opened by k consecutive hesitant steps.
Session run_trigreason(const std::string& question, const SessionConfig& config, Backend& srm, Backend& lrm);

/// Polling baseline: the LRM judges every SRM draft and regenerates the step
/// when the score is below judge_threshold or unparseable.
Session run_specreason(const std::string& question, const SessionConfig& config, Backend& srm, Backend& lrm);

/// One model produces every step and the answer.
Session run_single_model(const std::string& question, const SessionConfig& config, Backend& client,
                         Origin origin);

/// Dispatches on config.strategy.
Session run_session(const std::string& question, const SessionConfig& config, Backend& srm, Backend& lrm);

}  // namespace stepwise
