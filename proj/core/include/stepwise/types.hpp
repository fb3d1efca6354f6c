#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace stepwise {

enum class Origin { kSrm, kLrm };

enum class FinishReason { kStopSequence, kLength, kEndOfSequence };

enum class TriggerKind { kStrategicPriming, kCognitiveOffload, kInterventionRequest };

enum class Strategy { kTrigReason, kSpecReason, kSrmOnly, kLrmOnly };

/// What a backend call is for. Scripted and replayed backends key their
/// responses on (purpose, step index).
enum class Purpose { kReasoning, kJudge, kAnswer };

/// One generated token. `logprob` is the natural log of the sampling
/// probability; absent when the endpoint did not report it.
struct TokenSample {
  std::string text;
  std::optional<double> logprob;
  bool special = false;

  bool operator==(const TokenSample&) const = default;
};

/// Token accounting for a single backend call.
struct CallUsage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
  double wall_time = 0.0;

  bool operator==(const CallUsage&) const = default;
};

struct JudgeVerdict {
  std::optional<int> score;  // absent when the reply held no integer in [0,9]
  std::string reply;
  CallUsage usage;

  bool operator==(const JudgeVerdict&) const = default;
};

struct ReasoningStep {
  int index = 0;  // 1-based
  Origin origin = Origin::kSrm;
  std::vector<TokenSample> tokens;
  std::string text;
  std::optional<double> low_ppl_ratio;  // SRM-origin only
  bool hesitation = false;
  bool discarded_draft = false;
  FinishReason finish = FinishReason::kStopSequence;
  std::optional<std::string> matched_stop;
  CallUsage usage;
  std::optional<JudgeVerdict> judge;  // set when a SpecReason judge scored this step

  bool operator==(const ReasoningStep&) const = default;
};

struct TriggerEvent {
  TriggerKind kind = TriggerKind::kStrategicPriming;
  int step_index = 0;
  std::optional<double> ratio;     // CognitiveOffload: r_s
  std::vector<int> hesitant_steps; // InterventionRequest: indices whose flags completed the run

  bool operator==(const TriggerEvent&) const = default;
};

std::string_view to_string(Origin o);
std::string_view to_string(FinishReason f);
std::string_view to_string(TriggerKind k);
std::string_view to_string(Strategy s);
std::string_view to_string(Purpose p);

// Parsers accept the spellings produced by to_string plus the lower-case
// kebab forms used on the command line ("srm", "trigreason", "srm-only").
std::optional<Origin> parse_origin(std::string_view s);
std::optional<FinishReason> parse_finish_reason(std::string_view s);
std::optional<TriggerKind> parse_trigger_kind(std::string_view s);
std::optional<Strategy> parse_strategy(std::string_view s);

/// Concatenation of token texts.
std::string join_tokens(const std::vector<TokenSample>& tokens);

/// Rough token estimate for text with no tokenizer at hand (4 bytes/token).
int approx_token_count(std::string_view text);

}  // namespace stepwise
