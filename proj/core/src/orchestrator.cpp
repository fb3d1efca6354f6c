#include "stepwise/orchestrator.hpp"

#include <algorithm>
#include <cctype>

#include "stepwise/lexicon.hpp"

namespace stepwise {

std::string_view to_string(FinishCheck f) {
  switch (f) {
    case FinishCheck::kContinue: return "continue";
    case FinishCheck::kFinishedByMarker: return "marker";
    case FinishCheck::kFinishedByEos: return "eos";
    case FinishCheck::kFinishedByBudget: return "budget";
  }
  return "continue";
}

std::optional<FinishCheck> parse_finish_check(std::string_view s) {
  if (s == "continue") return FinishCheck::kContinue;
  if (s == "marker") return FinishCheck::kFinishedByMarker;
  if (s == "eos") return FinishCheck::kFinishedByEos;
  if (s == "budget") return FinishCheck::kFinishedByBudget;
  return std::nullopt;
}

FinishCheck check_finished(const ReasoningStep& step, int used, const SessionConfig& config) {
  for (const auto& marker : config.finish_markers) {
    if (step.text.find(marker) != std::string::npos) return FinishCheck::kFinishedByMarker;
    if (step.matched_stop && *step.matched_stop == marker) return FinishCheck::kFinishedByMarker;
  }
  if (step.finish == FinishReason::kEndOfSequence) return FinishCheck::kFinishedByEos;
  if (used >= config.budget) return FinishCheck::kFinishedByBudget;
  return FinishCheck::kContinue;
}

bool budget_exhausted_without_answer(const Session& session) {
  return session.termination == FinishCheck::kFinishedByBudget && !session.answer_text;
}

std::string build_context(const std::string& question, const std::vector<ReasoningStep>& steps,
                          const std::string& delimiter) {
  std::string ctx = question + delimiter;
  for (const auto& s : steps) {
    ctx += s.text;
    ctx += delimiter;
  }
  return ctx;
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
  return s.substr(b, e - b);
}

// Per-session mutable state; one instance per run_* call.
class SessionRunner {
 public:
  SessionRunner(const std::string& question, const SessionConfig& config)
      : lexicon_(config.lexicon) {
    session_.question = question;
    session_.config = config;
    question_tokens_ = approx_token_count(question);
  }

  Session& session() { return session_; }
  const SessionConfig& config() const { return session_.config; }
  int next_index() const { return static_cast<int>(session_.steps.size()) + 1; }

  ReasoningStep generate(Backend& client, Origin origin, int index) {
    StepRequest req;
    req.purpose = Purpose::kReasoning;
    req.step_index = index;
    req.context = build_context(session_.question, session_.steps, config().step_delimiter);
    req.stop.push_back(config().step_delimiter);
    for (const auto& m : config().finish_markers) req.stop.push_back(m);
    req.max_tokens = std::min(config().max_step_tokens, config().budget - session_.thinking_tokens_used);
    req.temperature = config().temperature;
    req.top_p = config().top_p;
    req.want_logprobs = origin == Origin::kSrm;
    req.prefix_tokens = prefix_tokens();

    const auto response = call(client, req);
    ReasoningStep step;
    step.index = index;
    step.origin = origin;
    step.tokens = response.tokens;
    step.text = join_tokens(step.tokens);
    step.finish = response.finish_reason;
    step.matched_stop = response.matched_stop;
    step.usage = CallUsage{response.prompt_tokens, response.completion_tokens, response.wall_time};
    if (step.usage.completion_tokens == 0 && step.finish == FinishReason::kStopSequence) {
      step.finish = FinishReason::kEndOfSequence;
    }
    if (origin == Origin::kSrm) {
      const auto content = content_tokens(step.tokens);
      step.low_ppl_ratio = content.empty() ? 0.0 : low_ppl_ratio(content, config().tau);
    }
    step.hesitation = detect_hesitation(step.text, lexicon_);
    return step;
  }

  JudgeVerdict judge(Backend& client, const ReasoningStep& draft) {
    JudgeOptions opts;
    opts.prompt_template = config().judge_prompt;
    opts.max_tokens = config().judge_max_tokens;
    opts.step_index = draft.index;
    opts.prefix_tokens = prefix_tokens() + draft.usage.completion_tokens;
    try {
      return request_judgement(client, build_context(session_.question, session_.steps, config().step_delimiter),
                               draft.text.empty() ? std::string(" ") : draft.text, opts);
    } catch (const TransportError&) {
      abort();
    } catch (const ProtocolError&) {
      abort();
    }
  }

  void append(ReasoningStep step) {
    session_.thinking_tokens_used += step.usage.completion_tokens;
    session_.steps.push_back(std::move(step));
  }

  void discard(ReasoningStep draft) {
    draft.discarded_draft = true;
    session_.drafts.push_back(std::move(draft));
  }

  void event(TriggerEvent e) { session_.events.push_back(std::move(e)); }

  /// Appends and feeds the hesitation window without acting on it, so every
  /// strategy records the same window state for the same trajectory.
  void append_tracked(ReasoningStep step) {
    auto& state = session_.intervention;
    state = record_hesitation(std::move(state), step.hesitation, session_.config.k);
    append(std::move(step));
  }

  /// Evaluates termination on the last appended step.
  bool finished() {
    const auto status = check_finished(session_.steps.back(), session_.thinking_tokens_used, config());
    if (status == FinishCheck::kContinue) return false;
    session_.termination = status;
    session_.finished = true;
    return true;
  }

  void run_answer_phase(Backend& client, Origin origin) {
    StepRequest req;
    req.purpose = Purpose::kAnswer;
    req.step_index = 0;
    req.context = build_context(session_.question, session_.steps, config().step_delimiter);
    const auto& last = session_.steps.back();
    bool marker_in_text = false;
    for (const auto& m : config().finish_markers) marker_in_text |= last.text.find(m) != std::string::npos;
    if (!marker_in_text) {
      if (session_.termination == FinishCheck::kFinishedByMarker && last.matched_stop) {
        req.context += *last.matched_stop + config().step_delimiter;
      } else {
        req.context += config().answer_suffix;
      }
    }
    req.max_tokens = config().answer_max_tokens;
    req.temperature = config().temperature;
    req.top_p = config().top_p;
    req.want_logprobs = false;
    req.prefix_tokens = prefix_tokens();

    const auto response = call(client, req);
    AnswerPhase answer;
    answer.origin = origin;
    answer.tokens = response.tokens;
    answer.finish = response.finish_reason;
    answer.usage = CallUsage{response.prompt_tokens, response.completion_tokens, response.wall_time};
    auto text = trim(join_tokens(answer.tokens));
    if (!text.empty()) session_.answer_text = std::move(text);
    session_.answer_phase = std::move(answer);
  }

  [[noreturn]] void abort() {
    const auto cause = std::current_exception();
    std::string what = "session aborted at step " + std::to_string(next_index());
    try {
      std::rethrow_exception(cause);
    } catch (const std::exception& e) {
      what += ": ";
      what += e.what();
    }
    throw SessionAborted(session_, cause, what);
  }

 private:
  int prefix_tokens() const { return question_tokens_ + session_.thinking_tokens_used; }

  StepResponse call(Backend& client, const StepRequest& req) {
    try {
      return generate_step(client, req);
    } catch (const TransportError&) {
      abort();
    } catch (const ProtocolError&) {
      abort();
    } catch (const LogprobsUnavailable&) {
      abort();
    }
  }

  Session session_;
  HesitationLexicon lexicon_;
  int question_tokens_ = 0;
};

Backend& answer_client(const SessionConfig& config, Backend& srm, Backend& lrm) {
  return config.answer_model == Origin::kSrm ? srm : lrm;
}

}  // namespace

Session run_trigreason(const std::string& question, const SessionConfig& config, Backend& srm, Backend& lrm) {
  SessionRunner run(question, config);
  auto& state = run.session().intervention;

  while (true) {
    const int t = run.next_index();
    if (is_priming(t, config.n)) {
      auto step = run.generate(lrm, Origin::kLrm, t);
      state = record_hesitation(std::move(state), step.hesitation, config.k);
      run.event({TriggerKind::kStrategicPriming, t, std::nullopt, {}});
      run.append(std::move(step));
    } else {
      std::optional<ReasoningStep> draft;
      bool cognitive = false;
      if (!(config.skip_draft_during_rectify && state.rectify_steps_remaining > 0)) {
        draft = run.generate(srm, Origin::kSrm, t);
        cognitive = cognitive_trigger(*draft->low_ppl_ratio, config.rho);
      }

      if (state.rectify_steps_remaining > 0 || cognitive) {
        auto step = run.generate(lrm, Origin::kLrm, t);
        if (cognitive) {
          run.event({TriggerKind::kCognitiveOffload, t, draft->low_ppl_ratio, {}});
        } else {
          --state.rectify_steps_remaining;
        }
        if (draft) run.discard(std::move(*draft));
        state = record_hesitation(std::move(state), step.hesitation, config.k);
        run.append(std::move(step));
      } else {
        auto outcome = intervention_trigger(std::move(state), draft->hesitation, config.k, config.m);
        state = std::move(outcome.state);
        if (outcome.fired && config.m > 0) {
          std::vector<int> window;
          for (int i = t - config.k + 1; i <= t; ++i) window.push_back(i);
          run.event({TriggerKind::kInterventionRequest, t, std::nullopt, std::move(window)});
        }
        run.append(std::move(*draft));
      }
    }
    if (run.finished()) break;
  }

  run.run_answer_phase(answer_client(config, srm, lrm), config.answer_model);
  return std::move(run.session());
}

Session run_specreason(const std::string& question, const SessionConfig& config, Backend& srm, Backend& lrm) {
  SessionRunner run(question, config);
  while (true) {
    const int t = run.next_index();
    auto draft = run.generate(srm, Origin::kSrm, t);
    bool accept = true;
    if (config.judge_threshold > 0) {
      draft.judge = run.judge(lrm, draft);
      accept = draft.judge->score && *draft.judge->score >= config.judge_threshold;
    }
    if (accept) {
      run.append_tracked(std::move(draft));
    } else {
      auto step = run.generate(lrm, Origin::kLrm, t);
      run.discard(std::move(draft));
      run.append_tracked(std::move(step));
    }
    if (run.finished()) break;
  }
  run.run_answer_phase(answer_client(config, srm, lrm), config.answer_model);
  return std::move(run.session());
}

Session run_single_model(const std::string& question, const SessionConfig& config, Backend& client,
                         Origin origin) {
  SessionRunner run(question, config);
  while (true) {
    run.append_tracked(run.generate(client, origin, run.next_index()));
    if (run.finished()) break;
  }
  run.run_answer_phase(client, origin);
  return std::move(run.session());
}

Session run_session(const std::string& question, const SessionConfig& config, Backend& srm, Backend& lrm) {
  switch (config.strategy) {
    case Strategy::kTrigReason: return run_trigreason(question, config, srm, lrm);
    case Strategy::kSpecReason: return run_specreason(question, config, srm, lrm);
    case Strategy::kSrmOnly: return run_single_model(question, config, srm, Origin::kSrm);
    case Strategy::kLrmOnly: return run_single_model(question, config, lrm, Origin::kLrm);
  }
  throw DomainError("unknown strategy");
}

}  // namespace stepwise
