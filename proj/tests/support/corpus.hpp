#pragma once

// Scripted corpora engineered to exact trigger frequencies. Running the
// orchestrator over them must recover the frequencies; nothing here calls
// the metrics code that reports them.

#include <string>
#include <vector>

#include "scenario.hpp"
#include "stepwise/config.hpp"

namespace stepwise::testing {

struct ActivationTarget {
  std::string label;  // "rho-n-m"
  double rho = 0.85;
  int n = 20;
  int m = 1;
  int k = 3;
  int steps = 10000;
  int cognitive = 0;     // steps with a cognitive offload
  int priming = 0;       // priming steps
  int intervention = 0;  // intervention requests
  double accuracy = 0.0; // reported accuracy for the row (percent), context only

  double cognitive_pct() const { return 100.0 * cognitive / steps; }
  double priming_pct() const { return 100.0 * priming / steps; }
  double intervention_pct() const { return 100.0 * intervention / steps; }
};

/// Five reference configurations of the activation table, as counts
/// over 10,000 steps.
std::vector<ActivationTarget> activation_table_targets();

SessionConfig activation_config(const ActivationTarget& target);

/// Scenarios whose TrigReason run under activation_config(target) fires
/// exactly target.cognitive / priming / intervention triggers over exactly
/// target.steps steps. Unit order is shuffled with `seed`.
std::vector<Scenario> activation_corpus(const ActivationTarget& target, unsigned seed = 7);

/// Paired edge-cloud workload: `sessions` scripts of n + polled_steps steps.
/// Under TrigReason (n priming, rho 0.85, k 3, m 1) each session makes
/// `trigger_lrm_steps` LRM steps of lrm_step_tokens tokens; under the polling
/// baseline on the post-priming suffix every one of polled_steps drafts is
/// judged with a judge reply of judge_reply_tokens tokens and accepted.
struct PairedWorkload {
  int sessions = 10;
  int n = 20;
  int polled_steps = 100;
  int trigger_lrm_steps = 39;  // priming included
  int srm_step_tokens = 24;
  int lrm_step_tokens = 100;
  int judge_reply_tokens = 39;
};

struct PairedScripts {
  std::vector<Scenario> trigger;  // full scripts including priming steps
  std::vector<Scenario> polling;  // post-priming suffix, judged by the LRM
  SessionConfig trigger_config;
  SessionConfig polling_config;
};

PairedScripts paired_workload(const PairedWorkload& w);

/// Multi-token judge reply: the score followed by filler tokens.
ScriptedReply judge_reply(int score, int tokens);

}  // namespace stepwise::testing
