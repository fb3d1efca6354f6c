#include "stepwise/backend.hpp"

#include <cctype>

#include "json.hpp"
#include "stepwise/config.hpp"
#include "stepwise/errors.hpp"

namespace stepwise {

using nlohmann::json;

StepResponse generate_step(Backend& client, const StepRequest& request) {
  if (request.context.empty()) throw DomainError("step request context is empty");
  if (request.max_tokens < 1) throw DomainError("step request max_tokens must be >= 1");
  auto response = client.generate(request);
  if (static_cast<int>(response.tokens.size()) > request.max_tokens &&
      response.completion_tokens > request.max_tokens) {
    throw ProtocolError("backend returned " + std::to_string(response.tokens.size()) +
                        " tokens for max_tokens=" + std::to_string(request.max_tokens));
  }
  if (request.want_logprobs) {
    for (const auto& t : response.tokens) {
      if (!t.logprob) throw LogprobsUnavailable("endpoint returned tokens without logprobs");
    }
  }
  return response;
}

// ---------------------------------------------------------------------------

namespace {

ScriptedReply reply_from_json(const json& j) {
  ScriptedReply reply;
  if (j.contains("reply")) return text_reply(j.at("reply").get<std::string>());
  if (j.contains("text") && !j.contains("tokens")) return text_reply(j.at("text").get<std::string>());
  const auto& tokens = j.at("tokens");
  const json logprobs = j.value("logprobs", json::array());
  const json special = j.value("special", json::array());
  if (!logprobs.empty() && logprobs.size() != tokens.size()) {
    throw ProtocolError("script entry has " + std::to_string(tokens.size()) + " tokens but " +
                        std::to_string(logprobs.size()) + " logprobs");
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    TokenSample t;
    t.text = tokens[i].get<std::string>();
    if (i < logprobs.size() && !logprobs[i].is_null()) t.logprob = logprobs[i].get<double>();
    if (i < special.size()) t.special = special[i].get<bool>();
    reply.tokens.push_back(std::move(t));
  }
  if (j.contains("finish")) {
    const auto f = parse_finish_reason(j.at("finish").get<std::string>());
    if (!f) throw ProtocolError("unknown finish reason in script");
    reply.finish = *f;
  }
  if (j.contains("stop") && j.at("stop").is_string()) reply.matched_stop = j.at("stop").get<std::string>();
  reply.wall_time = j.value("wall_time", 0.0);
  if (j.contains("prompt_tokens")) reply.prompt_tokens = j.at("prompt_tokens").get<int>();
  return reply;
}

}  // namespace

ScriptedReply text_reply(std::string text) {
  ScriptedReply r;
  r.tokens.push_back(TokenSample{std::move(text), std::nullopt, false});
  return r;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedReply> sequence) : sequence_(std::move(sequence)) {}

std::unique_ptr<ScriptedBackend> ScriptedBackend::from_json(std::string_view json_text) {
  auto backend = std::make_unique<ScriptedBackend>();
  json doc;
  try {
    doc = json::parse(json_text);
    const auto keyed = [&](const char* field, Purpose purpose) {
      if (!doc.contains(field)) return;
      int pos = 0;
      for (const auto& entry : doc.at(field)) {
        ++pos;
        backend->set_reply(purpose, entry.value("idx", pos), reply_from_json(entry));
      }
    };
    keyed("steps", Purpose::kReasoning);
    keyed("judge", Purpose::kJudge);
    if (doc.contains("answer")) backend->set_reply(Purpose::kAnswer, 0, reply_from_json(doc.at("answer")));
    if (doc.contains("sequence")) {
      for (const auto& entry : doc.at("sequence")) backend->push_reply(reply_from_json(entry));
    }
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed script: ") + e.what());
  }
  return backend;
}

void ScriptedBackend::set_reply(Purpose purpose, int step_index, ScriptedReply reply) {
  std::lock_guard lock(mu_);
  keyed_[{purpose, step_index}] = std::move(reply);
}

void ScriptedBackend::push_reply(ScriptedReply reply) {
  std::lock_guard lock(mu_);
  sequence_.push_back(std::move(reply));
}

StepResponse ScriptedBackend::generate(const StepRequest& request) {
  std::lock_guard lock(mu_);
  log_.push_back(request);
  const ScriptedReply* reply = nullptr;
  if (auto it = keyed_.find({request.purpose, request.step_index}); it != keyed_.end()) {
    reply = &it->second;
  } else if (next_ < sequence_.size()) {
    reply = &sequence_[next_++];
  } else {
    throw ProtocolError("script has no reply for " + std::string(to_string(request.purpose)) + " step " +
                        std::to_string(request.step_index));
  }

  StepResponse response;
  response.tokens = reply->tokens;
  response.finish_reason = reply->finish;
  response.matched_stop = reply->matched_stop;
  if (static_cast<int>(response.tokens.size()) > request.max_tokens) {
    response.tokens.resize(static_cast<std::size_t>(request.max_tokens));
    response.finish_reason = FinishReason::kLength;
    response.matched_stop.reset();
  }
  response.wall_time = reply->wall_time;
  response.prompt_tokens = reply->prompt_tokens.value_or(request.prefix_tokens);
  response.completion_tokens = static_cast<int>(response.tokens.size());
  return response;
}

std::vector<StepRequest> ScriptedBackend::requests() const {
  std::lock_guard lock(mu_);
  return log_;
}

// ---------------------------------------------------------------------------

StepResponse ReplayBackend::generate(const StepRequest& request) {
  const auto it = records_.find({request.purpose, request.step_index});
  if (it == records_.end()) {
    throw ProtocolError("trace holds no " + std::string(to_string(request.purpose)) + " record for step " +
                        std::to_string(request.step_index));
  }
  return it->second;
}

// ---------------------------------------------------------------------------

std::optional<int> parse_judge_score(std::string_view reply) {
  std::size_t i = 0;
  while (i < reply.size()) {
    if (std::isdigit(static_cast<unsigned char>(reply[i])) == 0) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < reply.size() && std::isdigit(static_cast<unsigned char>(reply[j])) != 0) ++j;
    auto run = reply.substr(i, j - i);
    while (run.size() > 1 && run.front() == '0') run.remove_prefix(1);
    if (run.size() == 1) return run[0] - '0';
    i = j;
  }
  return std::nullopt;
}

std::string render_judge_prompt(std::string_view prompt_template, std::string_view context,
                                std::string_view candidate_step) {
  std::string out(prompt_template.empty() ? kDefaultJudgePrompt : prompt_template);
  const auto replace = [&out](std::string_view key, std::string_view value) {
    std::size_t pos = 0;
    while ((pos = out.find(key, pos)) != std::string::npos) {
      out.replace(pos, key.size(), value);
      pos += value.size();
    }
  };
  // Substitute the step first: the context may itself contain "{step}".
  replace("{step}", candidate_step);
  replace("{context}", context);
  return out;
}

JudgeVerdict request_judgement(Backend& client, std::string_view context, std::string_view candidate_step,
                               const JudgeOptions& options) {
  if (candidate_step.empty()) throw DomainError("judge candidate step is empty");
  StepRequest req;
  req.purpose = Purpose::kJudge;
  req.step_index = options.step_index;
  req.context = render_judge_prompt(options.prompt_template, context, candidate_step);
  req.max_tokens = options.max_tokens;
  req.temperature = 0.0;
  req.top_p = 1.0;
  req.want_logprobs = false;
  req.prefix_tokens = options.prefix_tokens > 0 ? options.prefix_tokens : approx_token_count(req.context);
  const auto response = generate_step(client, req);

  JudgeVerdict verdict;
  verdict.reply = join_tokens(response.tokens);
  verdict.score = parse_judge_score(verdict.reply);
  verdict.usage = CallUsage{response.prompt_tokens, response.completion_tokens, response.wall_time};
  return verdict;
}

int judge_step(Backend& client, std::string_view context, std::string_view candidate_step,
               const JudgeOptions& options) {
  const auto verdict = request_judgement(client, context, candidate_step, options);
  if (!verdict.score) throw UnparseableScore(verdict.reply);
  return *verdict.score;
}

}  // namespace stepwise
