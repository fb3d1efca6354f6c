#include "json_codec.hpp"

#include "stepwise/errors.hpp"

namespace stepwise::detail {

using nlohmann::json;

json config_to_json(const SessionConfig& c) {
  return json{
      {"n", c.n},
      {"m", c.m},
      {"k", c.k},
      {"tau", c.tau},
      {"rho", c.rho},
      {"budget", c.budget},
      {"temperature", c.temperature},
      {"top_p", c.top_p},
      {"step_delimiter", c.step_delimiter},
      {"max_step_tokens", c.max_step_tokens},
      {"lexicon", c.lexicon},
      {"strategy", to_string(c.strategy)},
      {"judge_threshold", c.judge_threshold},
      {"answer_model", to_string(c.answer_model)},
      {"finish_markers", c.finish_markers},
      {"skip_draft_during_rectify", c.skip_draft_during_rectify},
      {"judge_prompt", c.judge_prompt},
      {"judge_max_tokens", c.judge_max_tokens},
      {"answer_suffix", c.answer_suffix},
      {"answer_max_tokens", c.answer_max_tokens},
  };
}

SessionConfig config_from_json(const json& j, SessionConfig c) {
  if (!j.is_object()) throw RangeError("config", "expected an object");
  try {
    c.n = j.value("n", c.n);
    c.m = j.value("m", c.m);
    c.k = j.value("k", c.k);
    c.tau = j.value("tau", c.tau);
    c.rho = j.value("rho", c.rho);
    c.budget = j.value("budget", c.budget);
    c.temperature = j.value("temperature", c.temperature);
    c.top_p = j.value("top_p", c.top_p);
    c.step_delimiter = j.value("step_delimiter", c.step_delimiter);
    c.max_step_tokens = j.value("max_step_tokens", c.max_step_tokens);
    c.lexicon = j.value("lexicon", c.lexicon);
    if (j.contains("strategy")) {
      const auto s = parse_strategy(j.at("strategy").get<std::string>());
      if (!s) throw RangeError("strategy", "unknown strategy");
      c.strategy = *s;
    }
    c.judge_threshold = j.value("judge_threshold", c.judge_threshold);
    if (j.contains("answer_model")) {
      const auto o = parse_origin(j.at("answer_model").get<std::string>());
      if (!o) throw RangeError("answer_model", "expected SRM or LRM");
      c.answer_model = *o;
    }
    c.finish_markers = j.value("finish_markers", c.finish_markers);
    c.skip_draft_during_rectify = j.value("skip_draft_during_rectify", c.skip_draft_during_rectify);
    c.judge_prompt = j.value("judge_prompt", c.judge_prompt);
    c.judge_max_tokens = j.value("judge_max_tokens", c.judge_max_tokens);
    c.answer_suffix = j.value("answer_suffix", c.answer_suffix);
    c.answer_max_tokens = j.value("answer_max_tokens", c.answer_max_tokens);
  } catch (const json::exception& e) {
    throw RangeError("config", e.what());
  }
  return c;
}

}  // namespace stepwise::detail
