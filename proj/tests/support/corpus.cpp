#include "corpus.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

namespace stepwise::testing {
namespace {

enum class Unit { kPlain, kCognitive, kIntervention };

StepSpec plain_step() { return step_with_ratio(0, 10); }
StepSpec overconfident_step() { return step_with_ratio(10, 10); }

}  // namespace

std::vector<ActivationTarget> activation_table_targets() {
  // label, rho, n, m, k, steps, cognitive, priming, intervention, accuracy
  return {
      {"0.75-20-1", 0.75, 20, 1, 3, 10000, 3850, 806, 436, 30.0},
      {"0.85-20-1", 0.85, 20, 1, 3, 10000, 2595, 831, 473, 29.6},
      {"0.95-20-1", 0.95, 20, 1, 3, 10000, 1149, 864, 495, 26.25},
      {"0.85-10-1", 0.85, 10, 1, 3, 10000, 2641, 423, 487, 27.5},
      {"0.85-20-0", 0.85, 20, 0, 3, 10000, 2604, 823, 0, 23.33},
  };
}

SessionConfig activation_config(const ActivationTarget& t) {
  SessionConfig c;
  c.rho = t.rho;
  c.n = t.n;
  c.m = t.m;
  c.k = t.k;
  return c;
}

std::vector<Scenario> activation_corpus(const ActivationTarget& t, unsigned seed) {
  if (t.n <= 0 && t.priming > 0) throw std::invalid_argument("priming steps need n > 0");
  const int full_sessions = t.n > 0 ? t.priming / t.n : 1;
  const int short_priming = t.n > 0 ? t.priming % t.n : 0;
  const int unit_steps = t.cognitive + t.intervention * (t.k + t.m);
  const int plain = t.steps - t.priming - unit_steps;
  if (plain < 0 || full_sessions < 1) throw std::invalid_argument("target frequencies do not fit in the step count");

  std::vector<Unit> units;
  units.insert(units.end(), static_cast<std::size_t>(plain), Unit::kPlain);
  units.insert(units.end(), static_cast<std::size_t>(t.cognitive), Unit::kCognitive);
  units.insert(units.end(), static_cast<std::size_t>(t.intervention), Unit::kIntervention);
  std::mt19937 rng(seed);
  std::shuffle(units.begin(), units.end(), rng);

  std::vector<Scenario> corpus(static_cast<std::size_t>(full_sessions));
  for (auto& sc : corpus) sc.steps.assign(static_cast<std::size_t>(t.n), StepSpec{});
  for (std::size_t i = 0; i < units.size(); ++i) {
    auto& steps = corpus[i % corpus.size()].steps;
    switch (units[i]) {
      case Unit::kPlain: steps.push_back(plain_step()); break;
      case Unit::kCognitive: steps.push_back(overconfident_step()); break;
      case Unit::kIntervention:
        for (int j = 0; j < t.k; ++j) steps.push_back(step_with_ratio(0, 10, /*hesitant=*/true));
        for (int j = 0; j < t.m; ++j) steps.push_back(plain_step());
        break;
    }
  }
  if (short_priming > 0) {
    Scenario sc;
    sc.steps.assign(static_cast<std::size_t>(short_priming), StepSpec{});
    corpus.push_back(sc);
  }
  return corpus;
}

ScriptedReply judge_reply(int score, int tokens) {
  ScriptedReply r;
  r.tokens.push_back({std::to_string(score), std::nullopt, false});
  for (int i = 1; i < tokens; ++i) r.tokens.push_back({" ok", std::nullopt, false});
  return r;
}

PairedScripts paired_workload(const PairedWorkload& w) {
  const int offloads = w.trigger_lrm_steps - w.n;
  if (offloads < 0 || offloads > w.polled_steps) throw std::invalid_argument("infeasible paired workload");
  PairedScripts out;
  for (int s = 0; s < w.sessions; ++s) {
    Scenario trig;
    Scenario poll;
    for (int i = 0; i < w.n; ++i) {
      StepSpec primed;
      primed.lrm_tokens = w.lrm_step_tokens;
      trig.steps.push_back(primed);
    }
    for (int i = 0; i < w.polled_steps; ++i) {
      // Spread the offloaded steps evenly through the suffix.
      const bool offload = (i * offloads) / w.polled_steps != ((i + 1) * offloads) / w.polled_steps;
      StepSpec st = offload ? step_with_ratio(w.srm_step_tokens, w.srm_step_tokens)
                            : step_with_ratio(0, w.srm_step_tokens);
      st.lrm_tokens = w.lrm_step_tokens;
      trig.steps.push_back(st);
      poll.steps.push_back(st);
    }
    out.trigger.push_back(trig);
    out.polling.push_back(poll);
  }
  out.trigger_config.n = w.n;
  out.trigger_config.rho = 0.85;
  out.trigger_config.k = 3;
  out.trigger_config.m = 1;
  out.trigger_config.budget = 32768;
  out.polling_config = out.trigger_config;
  out.polling_config.strategy = Strategy::kSpecReason;
  out.polling_config.n = 0;
  out.polling_config.judge_max_tokens = w.judge_reply_tokens;
  return out;
}

}  // namespace stepwise::testing
