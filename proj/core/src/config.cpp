#include "stepwise/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "stepwise/errors.hpp"
#include "toml.hpp"

namespace stepwise {
namespace {

void require(bool ok, const char* field, const std::string& detail) {
  if (!ok) throw RangeError(field, detail);
}

std::string read_file(const std::string& path, const char* field) {
  std::ifstream in(path);
  if (!in) throw RangeError(field, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

toml::table parse_toml(std::string_view text) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "TOML parse error at line " << e.source().begin.line << ": " << e.description();
    throw RangeError("config", msg.str());
  }
}

int get_int(const toml::node& node, const std::string& key) {
  if (auto v = node.value_exact<int64_t>()) return static_cast<int>(*v);
  throw RangeError(key, "expected an integer");
}

double get_real(const toml::node& node, const std::string& key) {
  if (auto v = node.value<double>()) return *v;
  throw RangeError(key, "expected a number");
}

bool get_bool(const toml::node& node, const std::string& key) {
  if (auto v = node.value_exact<bool>()) return *v;
  throw RangeError(key, "expected a boolean");
}

std::string get_string(const toml::node& node, const std::string& key) {
  if (auto v = node.value_exact<std::string>()) return *v;
  throw RangeError(key, "expected a string");
}

std::vector<std::string> get_strings(const toml::node& node, const std::string& key) {
  const auto* arr = node.as_array();
  if (arr == nullptr) throw RangeError(key, "expected an array of strings");
  std::vector<std::string> out;
  for (const auto& el : *arr) out.push_back(get_string(el, key));
  return out;
}

toml::array to_array(const std::vector<std::string>& values) {
  toml::array arr;
  for (const auto& v : values) arr.push_back(v);
  return arr;
}

std::string dump(const toml::table& t) {
  // Multi-line strings would lose a leading newline on re-parse (TOML trims
  // the newline right after the opening delimiter), so escape instead.
  constexpr auto flags = toml::toml_formatter::default_flags & ~toml::format_flags::allow_multi_line_strings;
  std::ostringstream ss;
  ss << toml::toml_formatter(t, flags) << "\n";
  return ss.str();
}

using ConfigSetter = std::function<void(SessionConfig&, const toml::node&, const std::string&)>;

const std::map<std::string, ConfigSetter>& config_setters() {
  static const std::map<std::string, ConfigSetter> setters = {
      {"n", [](auto& c, const auto& v, const auto& k) { c.n = get_int(v, k); }},
      {"m", [](auto& c, const auto& v, const auto& k) { c.m = get_int(v, k); }},
      {"k", [](auto& c, const auto& v, const auto& k) { c.k = get_int(v, k); }},
      {"tau", [](auto& c, const auto& v, const auto& k) { c.tau = get_real(v, k); }},
      {"rho", [](auto& c, const auto& v, const auto& k) { c.rho = get_real(v, k); }},
      {"budget", [](auto& c, const auto& v, const auto& k) { c.budget = get_int(v, k); }},
      {"temperature", [](auto& c, const auto& v, const auto& k) { c.temperature = get_real(v, k); }},
      {"top_p", [](auto& c, const auto& v, const auto& k) { c.top_p = get_real(v, k); }},
      {"step_delimiter", [](auto& c, const auto& v, const auto& k) { c.step_delimiter = get_string(v, k); }},
      {"max_step_tokens", [](auto& c, const auto& v, const auto& k) { c.max_step_tokens = get_int(v, k); }},
      {"lexicon", [](auto& c, const auto& v, const auto& k) { c.lexicon = get_strings(v, k); }},
      {"strategy",
       [](auto& c, const auto& v, const auto& k) {
         const auto s = parse_strategy(get_string(v, k));
         if (!s) throw RangeError(k, "unknown strategy");
         c.strategy = *s;
       }},
      {"judge_threshold", [](auto& c, const auto& v, const auto& k) { c.judge_threshold = get_int(v, k); }},
      {"answer_model",
       [](auto& c, const auto& v, const auto& k) {
         const auto o = parse_origin(get_string(v, k));
         if (!o) throw RangeError(k, "expected SRM or LRM");
         c.answer_model = *o;
       }},
      {"finish_markers", [](auto& c, const auto& v, const auto& k) { c.finish_markers = get_strings(v, k); }},
      {"skip_draft_during_rectify",
       [](auto& c, const auto& v, const auto& k) { c.skip_draft_during_rectify = get_bool(v, k); }},
      {"judge_prompt", [](auto& c, const auto& v, const auto& k) { c.judge_prompt = get_string(v, k); }},
      {"judge_max_tokens", [](auto& c, const auto& v, const auto& k) { c.judge_max_tokens = get_int(v, k); }},
      {"answer_suffix", [](auto& c, const auto& v, const auto& k) { c.answer_suffix = get_string(v, k); }},
      {"answer_max_tokens", [](auto& c, const auto& v, const auto& k) { c.answer_max_tokens = get_int(v, k); }},
  };
  return setters;
}

}  // namespace

SessionConfig validate_config(const SessionConfig& c) {
  require(c.n >= 0, "n", "must be >= 0");
  require(c.m >= 0, "m", "must be >= 0");
  require(c.k >= 1, "k", "must be >= 1");
  require(std::isfinite(c.tau) && c.tau > 0.0, "tau", "must be a finite number > 0");
  require(std::isfinite(c.rho) && c.rho > 0.0 && c.rho <= 1.0, "rho", "must lie in (0, 1]");
  require(c.budget >= 1, "budget", "must be >= 1");
  require(std::isfinite(c.temperature) && c.temperature >= 0.0, "temperature", "must be >= 0");
  require(std::isfinite(c.top_p) && c.top_p > 0.0 && c.top_p <= 1.0, "top_p", "must lie in (0, 1]");
  require(!c.step_delimiter.empty(), "step_delimiter", "must not be empty");
  require(c.max_step_tokens >= 1, "max_step_tokens", "must be >= 1");
  require(c.judge_threshold >= 0 && c.judge_threshold <= 9, "judge_threshold", "must lie in [0, 9]");
  require(c.judge_max_tokens >= 1, "judge_max_tokens", "must be >= 1");
  require(c.answer_max_tokens >= 1, "answer_max_tokens", "must be >= 1");
  for (const auto& p : c.lexicon) require(!p.empty(), "lexicon", "phrases must not be empty");
  for (const auto& f : c.finish_markers) require(!f.empty(), "finish_markers", "markers must not be empty");
  if (c.strategy == Strategy::kTrigReason && c.lexicon.empty()) throw EmptyLexicon();
  return c;
}

void validate_cost_model(const CostModel& m) {
  const auto nonneg = [](double v, const char* field) {
    require(std::isfinite(v) && v >= 0.0, field, "must be a finite number >= 0");
  };
  nonneg(m.srm_input_price, "srm_input_price");
  nonneg(m.srm_output_price, "srm_output_price");
  nonneg(m.lrm_input_price, "lrm_input_price");
  nonneg(m.lrm_output_price, "lrm_output_price");
  nonneg(m.rtt_latency, "rtt_latency");
  nonneg(m.srm_token_latency, "srm_token_latency");
  nonneg(m.lrm_token_latency, "lrm_token_latency");
}

SessionConfig config_from_toml(std::string_view toml_text, SessionConfig base) {
  const auto table = parse_toml(toml_text);
  const auto& setters = config_setters();
  for (const auto& [key, node] : table) {
    const std::string name(key.str());
    const auto it = setters.find(name);
    if (it == setters.end()) throw RangeError(name, "unknown config field");
    it->second(base, node, name);
  }
  return base;
}

SessionConfig load_config_file(const std::string& path, SessionConfig base) {
  return config_from_toml(read_file(path, "config"), std::move(base));
}

std::string config_to_toml(const SessionConfig& c) {
  toml::table t;
  t.insert("n", c.n);
  t.insert("m", c.m);
  t.insert("k", c.k);
  t.insert("tau", c.tau);
  t.insert("rho", c.rho);
  t.insert("budget", c.budget);
  t.insert("temperature", c.temperature);
  t.insert("top_p", c.top_p);
  t.insert("step_delimiter", c.step_delimiter);
  t.insert("max_step_tokens", c.max_step_tokens);
  t.insert("lexicon", to_array(c.lexicon));
  t.insert("strategy", std::string(to_string(c.strategy)));
  t.insert("judge_threshold", c.judge_threshold);
  t.insert("answer_model", std::string(to_string(c.answer_model)));
  t.insert("finish_markers", to_array(c.finish_markers));
  t.insert("skip_draft_during_rectify", c.skip_draft_during_rectify);
  t.insert("judge_prompt", c.judge_prompt);
  t.insert("judge_max_tokens", c.judge_max_tokens);
  t.insert("answer_suffix", c.answer_suffix);
  t.insert("answer_max_tokens", c.answer_max_tokens);
  return dump(t);
}

CostModel cost_model_from_toml(std::string_view toml_text, CostModel base) {
  const auto table = parse_toml(toml_text);
  for (const auto& [key, node] : table) {
    const std::string name(key.str());
    if (name == "srm_input_price") base.srm_input_price = get_real(node, name);
    else if (name == "srm_output_price") base.srm_output_price = get_real(node, name);
    else if (name == "lrm_input_price") base.lrm_input_price = get_real(node, name);
    else if (name == "lrm_output_price") base.lrm_output_price = get_real(node, name);
    else if (name == "rtt_latency") base.rtt_latency = get_real(node, name);
    else if (name == "srm_token_latency") base.srm_token_latency = get_real(node, name);
    else if (name == "lrm_token_latency") base.lrm_token_latency = get_real(node, name);
    else if (name == "count_judge_calls") base.count_judge_calls = get_bool(node, name);
    else throw RangeError(name, "unknown cost model field");
  }
  validate_cost_model(base);
  return base;
}

CostModel load_cost_model_file(const std::string& path) {
  return cost_model_from_toml(read_file(path, "cost_model"));
}

std::string cost_model_to_toml(const CostModel& m) {
  toml::table t;
  t.insert("srm_input_price", m.srm_input_price);
  t.insert("srm_output_price", m.srm_output_price);
  t.insert("lrm_input_price", m.lrm_input_price);
  t.insert("lrm_output_price", m.lrm_output_price);
  t.insert("rtt_latency", m.rtt_latency);
  t.insert("srm_token_latency", m.srm_token_latency);
  t.insert("lrm_token_latency", m.lrm_token_latency);
  t.insert("count_judge_calls", m.count_judge_calls);
  return dump(t);
}

}  // namespace stepwise
