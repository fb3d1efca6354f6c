#include <chrono>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "stepwise/backend.hpp"
#include "stepwise/errors.hpp"

namespace stepwise {
namespace {

using nlohmann::json;

json parse_body(std::string_view body) {
  try {
    return json::parse(body);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
}

const json& first_choice(const json& doc) {
  if (!doc.is_object() || !doc.contains("choices") || !doc.at("choices").is_array() ||
      doc.at("choices").empty()) {
    throw ProtocolError("response has no choices");
  }
  return doc.at("choices").front();
}

void apply_finish(const json& choice, StepResponse& out) {
  const auto& fr = choice.contains("finish_reason") ? choice.at("finish_reason") : json();
  const std::string reason = fr.is_string() ? fr.get<std::string>() : "stop";
  if (reason == "length") {
    out.finish_reason = FinishReason::kLength;
    return;
  }
  if (reason == "eos" || reason == "end_of_sequence") {
    out.finish_reason = FinishReason::kEndOfSequence;
    return;
  }
  if (reason != "stop") throw ProtocolError("unsupported finish_reason \"" + reason + "\"");

  out.finish_reason = FinishReason::kStopSequence;
  // vLLM reports the matched stop as "stop_reason", SGLang as "matched_stop".
  // A string names the stop sequence; a token id or null means end-of-sequence.
  for (const char* key : {"stop_reason", "matched_stop"}) {
    if (!choice.contains(key)) continue;
    const auto& v = choice.at(key);
    if (v.is_string()) {
      out.matched_stop = v.get<std::string>();
    } else {
      out.finish_reason = FinishReason::kEndOfSequence;
    }
    return;
  }
}

void apply_usage(const json& doc, StepResponse& out) {
  out.completion_tokens = static_cast<int>(out.tokens.size());
  if (!doc.contains("usage") || !doc.at("usage").is_object()) return;
  const auto& usage = doc.at("usage");
  out.prompt_tokens = usage.value("prompt_tokens", 0);
  out.completion_tokens = usage.value("completion_tokens", out.completion_tokens);
}

}  // namespace

StepResponse parse_completion_response(std::string_view body) {
  const auto doc = parse_body(body);
  const auto& choice = first_choice(doc);
  StepResponse out;
  try {
    const auto& lp = choice.contains("logprobs") ? choice.at("logprobs") : json();
    if (lp.is_object() && lp.contains("tokens")) {
      const auto& tokens = lp.at("tokens");
      const auto& logprobs = lp.at("token_logprobs");
      if (tokens.size() != logprobs.size()) {
        throw ProtocolError("logprobs.tokens has " + std::to_string(tokens.size()) +
                            " entries but token_logprobs has " + std::to_string(logprobs.size()));
      }
      for (std::size_t i = 0; i < tokens.size(); ++i) {
        TokenSample t;
        t.text = tokens[i].get<std::string>();
        if (!logprobs[i].is_null()) t.logprob = logprobs[i].get<double>();
        out.tokens.push_back(std::move(t));
      }
    } else {
      const std::string text = choice.value("text", "");
      if (!text.empty()) out.tokens.push_back(TokenSample{text, std::nullopt, false});
    }
    apply_finish(choice, out);
    apply_usage(doc, out);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed completion response: ") + e.what());
  }
  return out;
}

StepResponse parse_chat_completion_response(std::string_view body) {
  const auto doc = parse_body(body);
  const auto& choice = first_choice(doc);
  StepResponse out;
  try {
    const auto& lp = choice.contains("logprobs") ? choice.at("logprobs") : json();
    if (lp.is_object() && lp.contains("content") && lp.at("content").is_array()) {
      for (const auto& entry : lp.at("content")) {
        TokenSample t;
        t.text = entry.at("token").get<std::string>();
        if (entry.contains("logprob") && !entry.at("logprob").is_null()) t.logprob = entry.at("logprob").get<double>();
        out.tokens.push_back(std::move(t));
      }
    } else {
      const auto& msg = choice.at("message");
      const std::string text = msg.contains("content") && msg.at("content").is_string()
                                   ? msg.at("content").get<std::string>()
                                   : std::string();
      if (!text.empty()) out.tokens.push_back(TokenSample{text, std::nullopt, false});
    }
    apply_finish(choice, out);
    apply_usage(doc, out);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("malformed chat completion response: ") + e.what());
  }
  return out;
}

std::string build_completion_request_body(const StepRequest& request, const std::string& model,
                                          ApiFlavor flavor) {
  json body = {
      {"model", model},
      {"max_tokens", request.max_tokens},
      {"temperature", request.temperature},
      {"top_p", request.top_p},
      {"stream", false},
  };
  if (!request.stop.empty()) body["stop"] = request.stop;
  if (flavor == ApiFlavor::kCompletions) {
    body["prompt"] = request.context;
    if (request.want_logprobs) body["logprobs"] = 1;
  } else {
    body["messages"] = json::array({{{"role", "user"}, {"content", request.context}}});
    if (request.want_logprobs) body["logprobs"] = true;
  }
  return body.dump();
}

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
  const auto& url = options_.base_url;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("base url lacks a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  if (path_start != std::string::npos) path_prefix_ = url.substr(path_start);
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

StepResponse HttpBackend::generate(const StepRequest& request) {
  const bool chat = options_.flavor == ApiFlavor::kChat;
  const std::string path = path_prefix_ + (chat ? "/v1/chat/completions" : "/v1/completions");
  const std::string body = build_completion_request_body(request, options_.model, options_.flavor);

  auto backoff = options_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    try {
      httplib::Client client(scheme_host_port_);
      if (!client.is_valid()) throw TransportError("cannot create a client for " + scheme_host_port_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
      client.set_connection_timeout(secs.count(), usecs.count());
      client.set_read_timeout(secs.count(), usecs.count());
      client.set_write_timeout(secs.count(), usecs.count());
      httplib::Headers headers;
      if (!options_.api_key.empty()) headers.emplace("Authorization", "Bearer " + options_.api_key);

      const auto start = std::chrono::steady_clock::now();
      auto res = client.Post(path, headers, body, "application/json");
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      if (!res) {
        throw TransportError(scheme_host_port_ + path + ": " + httplib::to_string(res.error()));
      }
      if (res->status == 429 || res->status >= 500) {
        throw TransportError(scheme_host_port_ + path + ": HTTP " + std::to_string(res->status));
      }
      if (res->status != 200) {
        throw ProtocolError(scheme_host_port_ + path + ": HTTP " + std::to_string(res->status) + ": " +
                            res->body.substr(0, 512));
      }
      auto out = chat ? parse_chat_completion_response(res->body) : parse_completion_response(res->body);
      out.wall_time = elapsed.count();
      if (out.prompt_tokens == 0) out.prompt_tokens = request.prefix_tokens;
      return out;
    } catch (const TransportError&) {
      if (attempt >= options_.max_retries) throw;
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
}

}  // namespace stepwise
