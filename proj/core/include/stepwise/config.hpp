#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "stepwise/types.hpp"

namespace stepwise {

/// Phrase list used to flag hesitant steps when none is configured.
const std::vector<std::string>& default_hesitation_phrases();

inline constexpr std::string_view kDefaultJudgePrompt =
    "Question and partial solution:\n{context}\n\n"
    "Candidate next step:\n{step}\n\n"
    "Rate the following candidate reasoning step from 0-9 for usefulness and "
    "correctness given the partial solution; reply with one integer.\nScore:";

/// Every protocol knob of a collaborative session. Default member values are
/// the shipped defaults; a config file or CLI flags override individual fields.
struct SessionConfig {
  int n = 20;              // priming steps produced by the LRM
  int m = 1;               // rectification steps after an intervention request
  int k = 3;               // consecutive hesitant steps that request intervention
  double tau = 1.05;       // per-token perplexity threshold
  double rho = 0.85;       // low-perplexity coverage threshold
  int budget = 8192;       // thinking-token budget
  double temperature = 0.6;
  double top_p = 0.95;
  std::string step_delimiter = "\n\n";
  int max_step_tokens = 512;
  std::vector<std::string> lexicon = default_hesitation_phrases();
  Strategy strategy = Strategy::kTrigReason;
  int judge_threshold = 7;
  Origin answer_model = Origin::kSrm;
  std::vector<std::string> finish_markers = {"</think>"};

  bool skip_draft_during_rectify = false;
  std::string judge_prompt = std::string(kDefaultJudgePrompt);
  int judge_max_tokens = 16;
  std::string answer_suffix = "\n</think>\n\n";
  int answer_max_tokens = 1024;

  bool operator==(const SessionConfig&) const = default;
};

/// Edge-cloud pricing and latency model. Prices are per token.
struct CostModel {
  double srm_input_price = 0.0;
  double srm_output_price = 0.0;
  double lrm_input_price = 0.0;
  double lrm_output_price = 0.0;
  double rtt_latency = 0.0;        // seconds per LRM round trip
  double srm_token_latency = 0.0;  // seconds per token on the edge
  double lrm_token_latency = 0.0;  // seconds per token in the cloud
  bool count_judge_calls = true;   // include SpecReason judge calls in cost/latency

  bool operator==(const CostModel&) const = default;
};

/// Checks every field range. Returns the config unchanged when valid.
/// Throws RangeError naming the field, or EmptyLexicon for a TrigReason
/// config without hesitation phrases.
SessionConfig validate_config(const SessionConfig& config);

void validate_cost_model(const CostModel& model);

/// Reads a TOML document whose keys mirror SessionConfig field names.
/// Fields not present keep their value from `base`. Unknown keys and wrongly
/// typed values raise RangeError.
SessionConfig config_from_toml(std::string_view toml_text, SessionConfig base = {});
SessionConfig load_config_file(const std::string& path, SessionConfig base = {});
std::string config_to_toml(const SessionConfig& config);

CostModel cost_model_from_toml(std::string_view toml_text, CostModel base = {});
CostModel load_cost_model_file(const std::string& path);
std::string cost_model_to_toml(const CostModel& model);

}  // namespace stepwise
