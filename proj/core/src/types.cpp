#include "stepwise/types.hpp"

#include <algorithm>
#include <cctype>

namespace stepwise {
namespace {

std::string normalize(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    if (c == '-' || c == '_') continue;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

}  // namespace

std::string_view to_string(Origin o) {
  return o == Origin::kSrm ? "SRM" : "LRM";
}

std::string_view to_string(FinishReason f) {
  switch (f) {
    case FinishReason::kStopSequence: return "stop";
    case FinishReason::kLength: return "length";
    case FinishReason::kEndOfSequence: return "eos";
  }
  return "stop";
}

std::string_view to_string(TriggerKind k) {
  switch (k) {
    case TriggerKind::kStrategicPriming: return "StrategicPriming";
    case TriggerKind::kCognitiveOffload: return "CognitiveOffload";
    case TriggerKind::kInterventionRequest: return "InterventionRequest";
  }
  return "StrategicPriming";
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kTrigReason: return "TrigReason";
    case Strategy::kSpecReason: return "SpecReason";
    case Strategy::kSrmOnly: return "SrmOnly";
    case Strategy::kLrmOnly: return "LrmOnly";
  }
  return "TrigReason";
}

std::string_view to_string(Purpose p) {
  switch (p) {
    case Purpose::kReasoning: return "reasoning";
    case Purpose::kJudge: return "judge";
    case Purpose::kAnswer: return "answer";
  }
  return "reasoning";
}

std::optional<Origin> parse_origin(std::string_view s) {
  const auto n = normalize(s);
  if (n == "srm") return Origin::kSrm;
  if (n == "lrm") return Origin::kLrm;
  return std::nullopt;
}

std::optional<FinishReason> parse_finish_reason(std::string_view s) {
  const auto n = normalize(s);
  if (n == "stop" || n == "stopsequence") return FinishReason::kStopSequence;
  if (n == "length") return FinishReason::kLength;
  if (n == "eos" || n == "endofsequence") return FinishReason::kEndOfSequence;
  return std::nullopt;
}

std::optional<TriggerKind> parse_trigger_kind(std::string_view s) {
  const auto n = normalize(s);
  if (n == "strategicpriming") return TriggerKind::kStrategicPriming;
  if (n == "cognitiveoffload") return TriggerKind::kCognitiveOffload;
  if (n == "interventionrequest") return TriggerKind::kInterventionRequest;
  return std::nullopt;
}

std::optional<Strategy> parse_strategy(std::string_view s) {
  const auto n = normalize(s);
  if (n == "trigreason") return Strategy::kTrigReason;
  if (n == "specreason") return Strategy::kSpecReason;
  if (n == "srmonly") return Strategy::kSrmOnly;
  if (n == "lrmonly") return Strategy::kLrmOnly;
  return std::nullopt;
}

std::string join_tokens(const std::vector<TokenSample>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t.text;
  return out;
}

int approx_token_count(std::string_view text) {
  return static_cast<int>((text.size() + 3) / 4);
}

}  // namespace stepwise
