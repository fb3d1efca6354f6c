#include "stepwise/triggers.hpp"

#include <algorithm>
#include <cmath>

#include "stepwise/errors.hpp"

namespace stepwise {

double token_perplexity(double logprob) {
  if (!std::isfinite(logprob) || logprob > 0.0) {
    throw DomainError("token logprob must be finite and <= 0, got " + std::to_string(logprob));
  }
  return std::exp(-logprob);
}

double low_ppl_ratio(std::span<const TokenSample> tokens, double tau) {
  if (tokens.empty()) throw EmptyStep();
  std::size_t low = 0;
  for (const auto& t : tokens) {
    if (!t.logprob) throw LogprobsUnavailable("token \"" + t.text + "\" has no logprob");
    if (token_perplexity(*t.logprob) < tau) ++low;
  }
  return static_cast<double>(low) / static_cast<double>(tokens.size());
}

std::vector<TokenSample> content_tokens(std::span<const TokenSample> tokens) {
  std::vector<TokenSample> out;
  out.reserve(tokens.size());
  std::copy_if(tokens.begin(), tokens.end(), std::back_inserter(out),
               [](const TokenSample& t) { return !t.special; });
  return out;
}

bool cognitive_trigger(double r, double rho) {
  if (!(r >= 0.0 && r <= 1.0)) throw DomainError("low-perplexity ratio outside [0,1]");
  if (!(rho > 0.0 && rho <= 1.0)) throw DomainError("rho outside (0,1]");
  return r > rho;
}

bool is_priming(int step_index, int n) {
  return step_index >= 1 && step_index <= n;
}

InterventionState record_hesitation(InterventionState state, bool new_h, int k) {
  state.recent_h.push_back(new_h);
  while (static_cast<int>(state.recent_h.size()) > std::max(k, 1)) state.recent_h.pop_front();
  return state;
}

InterventionOutcome intervention_trigger(InterventionState state, bool new_h, int k, int m) {
  if (k < 1) throw DomainError("k must be >= 1");
  state = record_hesitation(std::move(state), new_h, k);
  const bool fired = static_cast<int>(state.recent_h.size()) == k &&
                     std::all_of(state.recent_h.begin(), state.recent_h.end(), [](bool h) { return h; });
  if (fired) {
    state.recent_h.clear();
    state.rectify_steps_remaining = m;
  }
  return {std::move(state), fired};
}

}  // namespace stepwise
