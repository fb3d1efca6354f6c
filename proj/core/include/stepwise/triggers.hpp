#pragma once

#include <deque>
#include <span>
#include <vector>

#include "stepwise/types.hpp"

namespace stepwise {

/// exp(-logprob). Throws DomainError for a positive or non-finite logprob.
double token_perplexity(double logprob);

/// Fraction of tokens whose perplexity is strictly below `tau`.
/// Special tokens must already be removed (see content_tokens).
/// Throws EmptyStep on an empty span and LogprobsUnavailable when a token
/// carries no logprob.
double low_ppl_ratio(std::span<const TokenSample> tokens, double tau);

/// Tokens with `special == false`.
std::vector<TokenSample> content_tokens(std::span<const TokenSample> tokens);

/// True iff r > rho. Throws DomainError when r is outside [0,1] or rho outside (0,1].
bool cognitive_trigger(double r, double rho);

/// True iff 1 <= step_index <= n.
bool is_priming(int step_index, int n);

struct InterventionState {
  std::deque<bool> recent_h;  // newest at the back, at most k entries
  int rectify_steps_remaining = 0;

  bool operator==(const InterventionState&) const = default;
};

struct InterventionOutcome {
  InterventionState state;
  bool fired = false;
};

/// Pushes `new_h` and fires when the last k flags are all set. On firing the
/// ring is cleared and rectify_steps_remaining becomes m.
InterventionOutcome intervention_trigger(InterventionState state, bool new_h, int k, int m);

/// Pushes `new_h` without evaluating the window (steps the trigger does not
/// inspect still occupy a slot in the hesitation history).
InterventionState record_hesitation(InterventionState state, bool new_h, int k);

}  // namespace stepwise
