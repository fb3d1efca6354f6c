#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "stepwise/types.hpp"

namespace stepwise {

/// One generation call: continue `context` until a stop string, the token
/// cap, or end-of-sequence.
struct StepRequest {
  Purpose purpose = Purpose::kReasoning;
  int step_index = 0;  // trajectory index being generated; 0 for the answer phase
  std::string context;
  std::vector<std::string> stop;
  int max_tokens = 1;
  double temperature = 0.0;
  double top_p = 1.0;
  bool want_logprobs = false;
  int prefix_tokens = 0;  // caller's estimate of the context length in tokens
};

struct StepResponse {
  std::vector<TokenSample> tokens;
  FinishReason finish_reason = FinishReason::kStopSequence;
  std::optional<std::string> matched_stop;
  double wall_time = 0.0;
  int prompt_tokens = 0;
  int completion_tokens = 0;

  bool operator==(const StepResponse&) const = default;
};

/// A model endpoint. Implementations must tolerate concurrent generate()
/// calls from independent sessions.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual StepResponse generate(const StepRequest& request) = 0;
};

/// Calls `client` and checks the response contract: no more than max_tokens
/// tokens and, when logprobs were requested, a logprob on every token
/// (LogprobsUnavailable otherwise).
StepResponse generate_step(Backend& client, const StepRequest& request);

// ---------------------------------------------------------------------------
// Scripted backend

struct ScriptedReply {
  std::vector<TokenSample> tokens;
  FinishReason finish = FinishReason::kStopSequence;
  std::optional<std::string> matched_stop;
  double wall_time = 0.0;
  std::optional<int> prompt_tokens;  // defaults to the request's prefix_tokens

  bool operator==(const ScriptedReply&) const = default;
};

/// Deterministic backend for tests and offline runs. Replies registered for
/// a (purpose, step index) key are served whenever that key is requested;
/// otherwise the sequential queue is consumed in call order.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<ScriptedReply> sequence);

  /// Script file: {"steps": [...], "judge": [...], "answer": {...}, "sequence": [...]}.
  /// Entries hold "tokens", optional "logprobs", "finish", "idx", "reply".
  static std::unique_ptr<ScriptedBackend> from_json(std::string_view json_text);

  void set_reply(Purpose purpose, int step_index, ScriptedReply reply);
  void push_reply(ScriptedReply reply);

  StepResponse generate(const StepRequest& request) override;

  std::vector<StepRequest> requests() const;

 private:
  mutable std::mutex mu_;
  std::map<std::pair<Purpose, int>, ScriptedReply> keyed_;
  std::vector<ScriptedReply> sequence_;
  std::size_t next_ = 0;
  std::vector<StepRequest> log_;
};

/// Reply text as a single token without logprob (judge and answer scripts).
ScriptedReply text_reply(std::string text);

// ---------------------------------------------------------------------------
// Replay backend

/// Serves recorded responses keyed by (purpose, step index). Stateless after
/// construction, so replays are byte-identical.
class ReplayBackend : public Backend {
 public:
  using Key = std::pair<Purpose, int>;
  explicit ReplayBackend(std::map<Key, StepResponse> records) : records_(std::move(records)) {}

  StepResponse generate(const StepRequest& request) override;
  std::size_t size() const noexcept { return records_.size(); }

 private:
  std::map<Key, StepResponse> records_;
};

// ---------------------------------------------------------------------------
// OpenAI-compatible HTTP backend

enum class ApiFlavor { kCompletions, kChat };

struct HttpBackendOptions {
  std::string base_url;  // scheme://host[:port][/prefix]; requests go to {base_url}/v1/...
  std::string model;
  std::string api_key;   // sent as "Authorization: Bearer ..." when non-empty
  ApiFlavor flavor = ApiFlavor::kCompletions;
  std::chrono::milliseconds timeout{120000};
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{250};
};

class HttpBackend : public Backend {
 public:
  explicit HttpBackend(HttpBackendOptions options);
  StepResponse generate(const StepRequest& request) override;
  const HttpBackendOptions& options() const noexcept { return options_; }

 private:
  HttpBackendOptions options_;
  std::string scheme_host_port_;
  std::string path_prefix_;
};

/// JSON body for POST /v1/completions (or /v1/chat/completions).
std::string build_completion_request_body(const StepRequest& request, const std::string& model,
                                          ApiFlavor flavor = ApiFlavor::kCompletions);

/// Parses a /v1/completions response. Throws ProtocolError on a missing
/// choice or mismatched token/logprob lists.
StepResponse parse_completion_response(std::string_view body);
StepResponse parse_chat_completion_response(std::string_view body);

// ---------------------------------------------------------------------------
// Judge

struct JudgeOptions {
  std::string prompt_template;  // "{context}" and "{step}" are substituted
  int max_tokens = 16;
  int step_index = 0;
  int prefix_tokens = 0;
};

/// First integer in [0,9] appearing in `reply`, scanning maximal digit runs.
std::optional<int> parse_judge_score(std::string_view reply);

std::string render_judge_prompt(std::string_view prompt_template, std::string_view context,
                                std::string_view candidate_step);

/// Asks the judge for a score. An unparseable reply yields a verdict without
/// a score rather than throwing.
JudgeVerdict request_judgement(Backend& client, std::string_view context, std::string_view candidate_step,
                               const JudgeOptions& options);

/// Score in [0,9]. Throws UnparseableScore when the reply holds none.
int judge_step(Backend& client, std::string_view context, std::string_view candidate_step,
               const JudgeOptions& options = {});

}  // namespace stepwise
