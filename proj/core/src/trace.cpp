#include "stepwise/trace.hpp"

#include <fstream>
#include <sstream>

#include "json_codec.hpp"
#include "stepwise/lexicon.hpp"
#include "stepwise/triggers.hpp"

namespace stepwise {
namespace {

using nlohmann::json;

void tokens_json(const std::vector<TokenSample>& tokens, json& record) {
  json texts = json::array();
  json logprobs = json::array();
  json special = json::array();
  bool any_special = false;
  for (const auto& t : tokens) {
    texts.push_back(t.text);
    logprobs.push_back(t.logprob ? json(*t.logprob) : json(nullptr));
    special.push_back(t.special);
    any_special |= t.special;
  }
  record["tokens"] = std::move(texts);
  record["logprobs"] = std::move(logprobs);
  if (any_special) record["special"] = std::move(special);
}

void usage_json(const CallUsage& u, json& record) {
  record["prompt_tokens"] = u.prompt_tokens;
  record["completion_tokens"] = u.completion_tokens;
  record["wall_time"] = u.wall_time;
}

json judge_json(const JudgeVerdict& v) {
  json j{{"score", v.score ? json(*v.score) : json(nullptr)}, {"reply", v.reply}};
  usage_json(v.usage, j);
  return j;
}

json step_json(const ReasoningStep& s) {
  json j;
  j["idx"] = s.index;
  j["origin"] = to_string(s.origin);
  tokens_json(s.tokens, j);
  j["finish"] = to_string(s.finish);
  if (s.matched_stop) j["stop"] = *s.matched_stop;
  usage_json(s.usage, j);
  j["ratio"] = s.low_ppl_ratio ? json(*s.low_ppl_ratio) : json(nullptr);
  j["hesitation"] = s.hesitation;
  if (s.judge) j["judge"] = judge_json(*s.judge);
  return j;
}

json event_json(const TriggerEvent& e) {
  json j{{"kind", to_string(e.kind)}};
  if (e.ratio) j["ratio"] = *e.ratio;
  if (!e.hesitant_steps.empty()) j["window"] = e.hesitant_steps;
  return j;
}

// -- parsing ----------------------------------------------------------------

struct Line {
  std::size_t number;
  json value;
};

template <typename T>
T field(const Line& line, const json& obj, const char* key) {
  if (!obj.contains(key)) throw SchemaError(line.number, std::string("missing field \"") + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(line.number, std::string("field \"") + key + "\" has the wrong type");
  }
}

std::vector<TokenSample> parse_tokens(const Line& line, const json& obj) {
  const auto texts = field<std::vector<std::string>>(line, obj, "tokens");
  const json logprobs = obj.contains("logprobs") ? obj.at("logprobs") : json::array();
  const json special = obj.contains("special") ? obj.at("special") : json::array();
  if (!logprobs.is_array() || (!logprobs.empty() && logprobs.size() != texts.size())) {
    throw SchemaError(line.number, "\"logprobs\" must be an array as long as \"tokens\"");
  }
  std::vector<TokenSample> out;
  out.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    TokenSample t{texts[i], std::nullopt, false};
    if (i < logprobs.size() && !logprobs[i].is_null()) {
      if (!logprobs[i].is_number()) throw SchemaError(line.number, "logprob is not a number");
      t.logprob = logprobs[i].get<double>();
    }
    if (i < special.size()) t.special = special[i].get<bool>();
    out.push_back(std::move(t));
  }
  return out;
}

CallUsage parse_usage(const json& obj, int default_completion) {
  CallUsage u;
  u.prompt_tokens = obj.value("prompt_tokens", 0);
  u.completion_tokens = obj.value("completion_tokens", default_completion);
  u.wall_time = obj.value("wall_time", 0.0);
  return u;
}

ReasoningStep parse_step(const Line& line, const json& obj, int index, const SessionConfig& config,
                         const HesitationLexicon& lexicon) {
  ReasoningStep s;
  s.index = index;
  const auto origin = parse_origin(field<std::string>(line, obj, "origin"));
  if (!origin) throw SchemaError(line.number, "\"origin\" must be SRM or LRM");
  s.origin = *origin;
  s.tokens = parse_tokens(line, obj);
  s.text = join_tokens(s.tokens);
  const auto finish = parse_finish_reason(obj.value("finish", std::string("stop")));
  if (!finish) throw SchemaError(line.number, "unknown \"finish\" value");
  s.finish = *finish;
  if (obj.contains("stop") && obj.at("stop").is_string()) s.matched_stop = obj.at("stop").get<std::string>();
  s.usage = parse_usage(obj, static_cast<int>(s.tokens.size()));

  if (obj.contains("ratio") && obj.at("ratio").is_number()) {
    s.low_ppl_ratio = obj.at("ratio").get<double>();
  } else if (s.origin == Origin::kSrm) {
    const auto content = content_tokens(s.tokens);
    try {
      s.low_ppl_ratio = content.empty() ? 0.0 : low_ppl_ratio(content, config.tau);
    } catch (const Error& e) {
      throw SchemaError(line.number, std::string("cannot compute low-perplexity ratio: ") + e.what());
    }
  }
  if (s.origin == Origin::kLrm) s.low_ppl_ratio.reset();
  s.hesitation = obj.contains("hesitation") ? obj.at("hesitation").get<bool>() : detect_hesitation(s.text, lexicon);

  if (obj.contains("judge")) {
    const auto& jj = obj.at("judge");
    JudgeVerdict v;
    if (jj.contains("score") && jj.at("score").is_number_integer()) v.score = jj.at("score").get<int>();
    v.reply = jj.value("reply", std::string());
    v.usage = parse_usage(jj, 0);
    s.judge = std::move(v);
  }
  return s;
}

TriggerEvent parse_event(const Line& line, const json& obj, int index) {
  TriggerEvent e;
  e.step_index = index;
  const auto kind = parse_trigger_kind(field<std::string>(line, obj, "kind"));
  if (!kind) throw SchemaError(line.number, "unknown event kind");
  e.kind = *kind;
  if (obj.contains("ratio")) e.ratio = field<double>(line, obj, "ratio");
  if (obj.contains("window")) e.hesitant_steps = field<std::vector<int>>(line, obj, "window");
  return e;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError(0, "cannot open trace " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

StepResponse response_of(const ReasoningStep& s) {
  StepResponse r;
  r.tokens = s.tokens;
  r.finish_reason = s.finish;
  r.matched_stop = s.matched_stop;
  r.wall_time = s.usage.wall_time;
  r.prompt_tokens = s.usage.prompt_tokens;
  r.completion_tokens = s.usage.completion_tokens;
  return r;
}

StepResponse response_of(const JudgeVerdict& v) {
  StepResponse r;
  r.tokens.push_back(TokenSample{v.reply, std::nullopt, false});
  r.wall_time = v.usage.wall_time;
  r.prompt_tokens = v.usage.prompt_tokens;
  r.completion_tokens = v.usage.completion_tokens;
  return r;
}

}  // namespace

std::string write_trace(const Session& session, const TraceOptions& options) {
  std::string out;
  std::size_t draft_pos = 0;
  std::size_t event_pos = 0;
  for (const auto& step : session.steps) {
    auto record = step_json(step);
    json events = json::array();
    while (event_pos < session.events.size() && session.events[event_pos].step_index == step.index) {
      events.push_back(event_json(session.events[event_pos++]));
    }
    record["events"] = std::move(events);
    while (draft_pos < session.drafts.size() && session.drafts[draft_pos].index == step.index) {
      auto draft = step_json(session.drafts[draft_pos++]);
      draft.erase("idx");
      draft.erase("origin");
      record["draft"] = std::move(draft);
    }
    out += record.dump();
    out += '\n';
  }

  json summary;
  summary["question"] = session.question;
  summary["termination"] = to_string(session.termination);
  summary["thinking_tokens"] = session.thinking_tokens_used;
  summary["rectify_remaining"] = session.intervention.rectify_steps_remaining;
  summary["recent_hesitation"] = std::vector<bool>(session.intervention.recent_h.begin(),
                                                   session.intervention.recent_h.end());
  if (session.answer_phase) {
    json a;
    a["origin"] = to_string(session.answer_phase->origin);
    tokens_json(session.answer_phase->tokens, a);
    a["finish"] = to_string(session.answer_phase->finish);
    usage_json(session.answer_phase->usage, a);
    summary["answer"] = std::move(a);
  } else {
    summary["answer"] = nullptr;
  }
  summary["answer_text"] = session.answer_text ? json(*session.answer_text) : json(nullptr);
  if (options.include_config) summary["config"] = detail::config_to_json(session.config);
  out += json{{"summary", std::move(summary)}}.dump();
  out += '\n';
  return out;
}

Session parse_trace(std::string_view jsonl) {
  std::vector<Line> lines;
  std::size_t number = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    const auto end = jsonl.find('\n', start);
    const auto text = jsonl.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++number;
    if (text.find_first_not_of(" \t\r") != std::string_view::npos) {
      try {
        lines.push_back({number, json::parse(text)});
      } catch (const json::parse_error&) {
        throw SchemaError(number, "not valid JSON");
      }
      if (!lines.back().value.is_object()) throw SchemaError(number, "record is not a JSON object");
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }

  Session session;
  const Line* summary = nullptr;
  if (!lines.empty() && lines.back().value.contains("summary")) summary = &lines.back();
  if (summary != nullptr) {
    const auto& s = summary->value.at("summary");
    if (!s.is_object()) throw SchemaError(summary->number, "\"summary\" must be an object");
    if (s.contains("config")) {
      try {
        session.config = detail::config_from_json(s.at("config"));
      } catch (const Error& e) {
        throw SchemaError(summary->number, e.what());
      }
    }
  }
  const HesitationLexicon lexicon(session.config.lexicon);

  const std::size_t step_lines = lines.size() - (summary != nullptr ? 1 : 0);
  for (std::size_t i = 0; i < step_lines; ++i) {
    const auto& line = lines[i];
    const auto& obj = line.value;
    if (obj.contains("summary")) throw SchemaError(line.number, "summary record must be the last record");
    const int idx = field<int>(line, obj, "idx");
    const int expected = static_cast<int>(session.steps.size()) + 1;
    if (idx != expected) {
      throw SchemaError(line.number, "expected idx " + std::to_string(expected) + ", found " + std::to_string(idx));
    }
    auto step = parse_step(line, obj, idx, session.config, lexicon);
    if (obj.contains("draft")) {
      auto draft_obj = obj.at("draft");
      draft_obj["origin"] = "SRM";
      auto draft = parse_step(line, draft_obj, idx, session.config, lexicon);
      draft.discarded_draft = true;
      session.drafts.push_back(std::move(draft));
    }
    if (obj.contains("events")) {
      if (!obj.at("events").is_array()) throw SchemaError(line.number, "\"events\" must be an array");
      for (const auto& e : obj.at("events")) session.events.push_back(parse_event(line, e, idx));
    }
    session.thinking_tokens_used += step.usage.completion_tokens;
    session.steps.push_back(std::move(step));
  }

  if (summary != nullptr) {
    const auto& line = *summary;
    const auto& s = line.value.at("summary");
    session.question = s.value("question", std::string());
    const auto term = parse_finish_check(s.value("termination", std::string("continue")));
    if (!term) throw SchemaError(line.number, "unknown termination");
    session.termination = *term;
    session.finished = session.termination != FinishCheck::kContinue;
    session.intervention.rectify_steps_remaining = s.value("rectify_remaining", 0);
    for (bool h : s.value("recent_hesitation", std::vector<bool>{})) session.intervention.recent_h.push_back(h);
    if (s.contains("answer") && s.at("answer").is_object()) {
      const auto& a = s.at("answer");
      AnswerPhase answer;
      const auto origin = parse_origin(field<std::string>(line, a, "origin"));
      if (!origin) throw SchemaError(line.number, "answer origin must be SRM or LRM");
      answer.origin = *origin;
      answer.tokens = parse_tokens(line, a);
      const auto finish = parse_finish_reason(a.value("finish", std::string("stop")));
      if (!finish) throw SchemaError(line.number, "unknown answer finish value");
      answer.finish = *finish;
      answer.usage = parse_usage(a, static_cast<int>(answer.tokens.size()));
      session.answer_phase = std::move(answer);
    }
    if (s.contains("answer_text") && s.at("answer_text").is_string()) {
      session.answer_text = s.at("answer_text").get<std::string>();
    }
  } else if (!session.steps.empty()) {
    const auto status = check_finished(session.steps.back(), session.thinking_tokens_used, session.config);
    session.termination = status;
    session.finished = status != FinishCheck::kContinue;
  }
  return session;
}

Session load_trace(const std::string& path) {
  return parse_trace(read_file(path));
}

void save_trace(const std::string& path, const Session& session, const TraceOptions& options) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write trace " + path);
  out << write_trace(session, options);
}

ReplayBackends make_replay_backends(const Session& recorded) {
  std::map<ReplayBackend::Key, StepResponse> srm;
  std::map<ReplayBackend::Key, StepResponse> lrm;
  const auto add_step = [&](const ReasoningStep& s) {
    (s.origin == Origin::kSrm ? srm : lrm)[{Purpose::kReasoning, s.index}] = response_of(s);
    if (s.judge) lrm[{Purpose::kJudge, s.index}] = response_of(*s.judge);
  };
  for (const auto& s : recorded.steps) add_step(s);
  for (const auto& d : recorded.drafts) add_step(d);
  if (recorded.answer_phase) {
    StepResponse r;
    r.tokens = recorded.answer_phase->tokens;
    r.finish_reason = recorded.answer_phase->finish;
    r.wall_time = recorded.answer_phase->usage.wall_time;
    r.prompt_tokens = recorded.answer_phase->usage.prompt_tokens;
    r.completion_tokens = recorded.answer_phase->usage.completion_tokens;
    (recorded.answer_phase->origin == Origin::kSrm ? srm : lrm)[{Purpose::kAnswer, 0}] = std::move(r);
  }
  return {std::make_unique<ReplayBackend>(std::move(srm)), std::make_unique<ReplayBackend>(std::move(lrm))};
}

}  // namespace stepwise
