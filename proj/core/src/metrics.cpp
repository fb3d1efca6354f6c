#include "stepwise/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace stepwise {
namespace {

using nlohmann::json;

template <typename Fn>
void for_each_call(const Session& session, const CostModel& model, Fn&& fn) {
  for (const auto& s : session.steps) {
    fn(s.origin, s.usage);
    if (s.judge && model.count_judge_calls) fn(Origin::kLrm, s.judge->usage);
  }
  for (const auto& d : session.drafts) {
    fn(Origin::kSrm, d.usage);
    if (d.judge && model.count_judge_calls) fn(Origin::kLrm, d.judge->usage);
  }
  if (session.answer_phase) fn(session.answer_phase->origin, session.answer_phase->usage);
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b])) != 0) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])) != 0) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<std::string> canonical_integer(std::string_view raw) {
  auto s = trim(raw);
  if (s.empty() || s.size() > 12) return std::nullopt;
  for (char c : s) {
    if (std::isdigit(static_cast<unsigned char>(c)) == 0) return std::nullopt;
  }
  const long value = std::stol(s);
  if (value < 0 || value > 999) return std::nullopt;
  return std::to_string(value);
}

double percent(std::int64_t count, std::int64_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

ActivationRow make_row(std::string label, std::int64_t steps, const std::map<TriggerKind, std::int64_t>& fired) {
  const auto count = [&](TriggerKind k) {
    const auto it = fired.find(k);
    return it == fired.end() ? std::int64_t{0} : it->second;
  };
  ActivationRow row;
  row.label = std::move(label);
  row.total_steps = steps;
  row.cognitive_offload_pct = percent(count(TriggerKind::kCognitiveOffload), steps);
  row.strategic_priming_pct = percent(count(TriggerKind::kStrategicPriming), steps);
  row.intervention_request_pct = percent(count(TriggerKind::kInterventionRequest), steps);
  row.total_pct = row.cognitive_offload_pct + row.strategic_priming_pct + row.intervention_request_pct;
  return row;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

TokenTotals token_totals(const Session& session) {
  TokenTotals t;
  for (const auto& s : session.steps) (s.origin == Origin::kSrm ? t.srm : t.lrm) += s.usage.completion_tokens;
  for (const auto& d : session.drafts) t.wasted += d.usage.completion_tokens;
  return t;
}

double smt_percentage(const Session& session) {
  const auto t = token_totals(session);
  if (session.steps.empty() || t.srm + t.lrm == 0) throw EmptySession();
  return static_cast<double>(t.srm) / static_cast<double>(t.srm + t.lrm);
}

CallCounts call_counts(const Session& session, const CostModel& model) {
  CallCounts c;
  for_each_call(session, model, [&](Origin o, const CallUsage& u) {
    if (o == Origin::kSrm) {
      ++c.srm_calls;
      c.srm_tokens += u.completion_tokens;
    } else {
      ++c.lrm_calls;
      c.lrm_tokens += u.completion_tokens;
    }
  });
  return c;
}

double estimate_cost(const Session& session, const CostModel& model) {
  double cost = 0.0;
  for_each_call(session, model, [&](Origin o, const CallUsage& u) {
    if (o == Origin::kSrm) {
      cost += u.prompt_tokens * model.srm_input_price + u.completion_tokens * model.srm_output_price;
    } else {
      cost += u.prompt_tokens * model.lrm_input_price + u.completion_tokens * model.lrm_output_price;
    }
  });
  return cost;
}

double estimate_latency(const Session& session, const CostModel& model) {
  double latency = 0.0;
  for_each_call(session, model, [&](Origin o, const CallUsage& u) {
    if (o == Origin::kSrm) {
      latency += u.completion_tokens * model.srm_token_latency;
    } else {
      latency += model.rtt_latency + u.completion_tokens * model.lrm_token_latency;
    }
  });
  return latency;
}

std::string_view to_string(AnswerKind k) {
  return k == AnswerKind::kIntegerBoxed ? "IntegerBoxed" : "MultipleChoice";
}

std::optional<AnswerKind> parse_answer_kind(std::string_view s) {
  if (s == "IntegerBoxed") return AnswerKind::kIntegerBoxed;
  if (s == "MultipleChoice") return AnswerKind::kMultipleChoice;
  return std::nullopt;
}

std::optional<std::string> extract_answer(std::string_view text, AnswerKind kind) {
  if (kind == AnswerKind::kIntegerBoxed) {
    static constexpr std::string_view kOpen = "\\boxed{";
    auto pos = text.rfind(kOpen);
    while (pos != std::string_view::npos) {
      const auto body = pos + kOpen.size();
      int depth = 1;
      std::size_t i = body;
      for (; i < text.size() && depth > 0; ++i) {
        if (text[i] == '{') ++depth;
        if (text[i] == '}') --depth;
      }
      if (depth == 0) return canonical_integer(text.substr(body, i - 1 - body));
      if (pos == 0) break;
      pos = text.rfind(kOpen, pos - 1);
    }
    return std::nullopt;
  }

  const auto is_word = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_'; };
  for (std::size_t i = text.size(); i-- > 0;) {
    const char c = text[i];
    if (c < 'A' || c > 'D') continue;
    const bool left = i == 0 || !is_word(text[i - 1]);
    const bool right = i + 1 == text.size() || !is_word(text[i + 1]);
    if (left && right) return std::string(1, c);
  }
  return std::nullopt;
}

bool grade_answer(const std::optional<std::string>& answer_text, std::string_view expected, AnswerKind kind) {
  if (!answer_text) return false;
  const auto got = extract_answer(*answer_text, kind);
  if (!got) return false;
  if (kind == AnswerKind::kIntegerBoxed) {
    const auto want = canonical_integer(expected);
    return want && *want == *got;
  }
  auto want = trim(expected);
  for (auto& c : want) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return want == *got;
}

double pass_at_1(const std::map<std::string, std::vector<bool>>& per_question_runs) {
  if (per_question_runs.empty()) throw EmptyInput("pass@1 needs at least one question");
  double sum = 0.0;
  for (const auto& [id, runs] : per_question_runs) {
    if (runs.empty()) throw EmptyInput("question " + id + " has no runs");
    std::size_t correct = 0;
    for (bool r : runs) correct += r ? 1 : 0;
    sum += static_cast<double>(correct) / static_cast<double>(runs.size());
  }
  return sum / static_cast<double>(per_question_runs.size());
}

SessionReport make_session_report(const Session& session, const CostModel& model,
                                  const std::optional<GradingKey>& key) {
  SessionReport r;
  const auto totals = token_totals(session);
  r.srm_tokens = totals.srm;
  r.lrm_tokens = totals.lrm;
  r.wasted_draft_tokens = totals.wasted;
  r.smt_percentage = totals.srm + totals.lrm > 0
                         ? static_cast<double>(totals.srm) / static_cast<double>(totals.srm + totals.lrm)
                         : 0.0;
  for (auto k : {TriggerKind::kStrategicPriming, TriggerKind::kCognitiveOffload, TriggerKind::kInterventionRequest}) {
    r.trigger_counts[k] = 0;
  }
  for (const auto& e : session.events) ++r.trigger_counts[e.kind];
  r.step_counts[Origin::kSrm] = 0;
  r.step_counts[Origin::kLrm] = 0;
  for (const auto& s : session.steps) ++r.step_counts[s.origin];
  r.lrm_calls = call_counts(session, model).lrm_calls;
  r.est_latency = estimate_latency(session, model);
  r.est_cost = estimate_cost(session, model);
  if (key) {
    r.answer = session.answer_text ? extract_answer(*session.answer_text, key->kind) : std::nullopt;
    r.correct = grade_answer(session.answer_text, key->expected, key->kind);
  } else if (session.answer_text) {
    // Without a key, report whichever answer format the text carries.
    r.answer = extract_answer(*session.answer_text, AnswerKind::kIntegerBoxed);
    if (!r.answer) r.answer = extract_answer(*session.answer_text, AnswerKind::kMultipleChoice);
  }
  return r;
}

std::vector<BenchmarkItem> parse_benchmark(std::string_view jsonl) {
  std::vector<BenchmarkItem> items;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= jsonl.size()) {
    const auto end = std::min(jsonl.find('\n', start), jsonl.size());
    const auto line = trim(jsonl.substr(start, end - start));
    ++line_no;
    start = end + 1;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw SchemaError(line_no, std::string("not JSON: ") + e.what());
    }
    if (!j.is_object()) throw SchemaError(line_no, "record is not an object");
    BenchmarkItem item;
    for (const char* key : {"id", "question", "answer"}) {
      if (!j.contains(key) || !j[key].is_string()) {
        throw SchemaError(line_no, std::string("missing string field \"") + key + "\"");
      }
    }
    item.id = j["id"].get<std::string>();
    item.question = j["question"].get<std::string>();
    item.answer = j["answer"].get<std::string>();
    if (j.contains("kind")) {
      const auto kind = j["kind"].is_string() ? parse_answer_kind(j["kind"].get<std::string>()) : std::nullopt;
      if (!kind) throw SchemaError(line_no, "kind must be IntegerBoxed or MultipleChoice");
      item.kind = *kind;
    }
    if (!seen.insert(item.id).second) throw SchemaError(line_no, "duplicate id \"" + item.id + "\"");
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<BenchmarkItem> load_benchmark(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open benchmark file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_benchmark(ss.str());
}

std::string session_report_json(const SessionReport& r) {
  json j;
  j["answer"] = r.answer ? json(*r.answer) : json(nullptr);
  j["correct"] = r.correct ? json(*r.correct) : json(nullptr);
  j["srm_tokens"] = r.srm_tokens;
  j["lrm_tokens"] = r.lrm_tokens;
  j["wasted_draft_tokens"] = r.wasted_draft_tokens;
  j["smt_percentage"] = r.smt_percentage;
  json triggers = json::object();
  for (const auto& [k, n] : r.trigger_counts) triggers[std::string(to_string(k))] = n;
  j["trigger_counts"] = std::move(triggers);
  json steps = json::object();
  for (const auto& [o, n] : r.step_counts) steps[std::string(to_string(o))] = n;
  j["step_counts"] = std::move(steps);
  j["lrm_calls"] = r.lrm_calls;
  j["est_latency"] = r.est_latency;
  j["est_cost"] = r.est_cost;
  return j.dump();
}

std::string format_session_report(const SessionReport& r) {
  std::ostringstream out;
  out << "answer:          " << (r.answer ? *r.answer : "<none>") << "\n";
  if (r.correct) out << "correct:         " << (*r.correct ? "yes" : "no") << "\n";
  out << "SMT%:            " << fixed(100.0 * r.smt_percentage, 2) << "\n";
  out << "tokens:          SRM " << r.srm_tokens << ", LRM " << r.lrm_tokens << ", wasted drafts "
      << r.wasted_draft_tokens << "\n";
  out << "steps:           SRM " << r.step_counts.at(Origin::kSrm) << ", LRM " << r.step_counts.at(Origin::kLrm)
      << "\n";
  out << "triggers:        priming " << r.trigger_counts.at(TriggerKind::kStrategicPriming) << ", cognitive "
      << r.trigger_counts.at(TriggerKind::kCognitiveOffload) << ", intervention "
      << r.trigger_counts.at(TriggerKind::kInterventionRequest) << "\n";
  out << "LRM calls:       " << r.lrm_calls << "\n";
  out << "est. latency:    " << fixed(r.est_latency, 3) << " s\n";
  out << "est. cost:       " << fixed(r.est_cost, 6) << "\n";
  return out.str();
}

std::string config_label(const SessionConfig& config) {
  std::ostringstream out;
  out << fixed(config.rho, 2) << "-" << config.n << "-" << config.m;
  return out.str();
}

ActivationRow trigger_activation_report(std::span<const Session> sessions, std::string label) {
  if (sessions.empty()) throw EmptyInput("activation report needs at least one session");
  std::int64_t steps = 0;
  std::map<TriggerKind, std::int64_t> fired;
  for (const auto& s : sessions) {
    steps += static_cast<std::int64_t>(s.steps.size());
    for (const auto& e : s.events) ++fired[e.kind];
  }
  if (label.empty()) label = config_label(sessions.front().config);
  return make_row(std::move(label), steps, fired);
}

std::string format_activation_table(std::span<const ActivationRow> rows) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof(line), "%-18s %22s %22s %25s %18s %8s\n", "Config (rho-n-m)", "Cognitive Offload (%)",
                "Strategic Priming (%)", "Intervention Request (%)", "Total Trigger (%)", "ACC");
  out << line;
  for (const auto& r : rows) {
    const std::string acc = r.accuracy ? fixed(*r.accuracy, 2) : "-";
    std::snprintf(line, sizeof(line), "%-18s %22.2f %22.2f %25.2f %18.2f %8s\n", r.label.c_str(),
                  r.cognitive_offload_pct, r.strategic_priming_pct, r.intervention_request_pct, r.total_pct,
                  acc.c_str());
    out << line;
  }
  return out.str();
}

std::string activation_row_json(const ActivationRow& row) {
  json j;
  j["label"] = row.label;
  j["steps"] = row.total_steps;
  j["cognitive_offload_pct"] = row.cognitive_offload_pct;
  j["strategic_priming_pct"] = row.strategic_priming_pct;
  j["intervention_request_pct"] = row.intervention_request_pct;
  j["total_pct"] = row.total_pct;
  j["accuracy"] = row.accuracy ? json(*row.accuracy) : json(nullptr);
  return j.dump();
}

double overconfident_step_fraction(std::span<const Session> sessions, double rho) {
  std::int64_t scored = 0;
  std::int64_t over = 0;
  const auto visit = [&](const ReasoningStep& s) {
    if (!s.low_ppl_ratio) return;
    ++scored;
    if (*s.low_ppl_ratio > rho) ++over;
  };
  for (const auto& session : sessions) {
    for (const auto& s : session.steps) visit(s);
    for (const auto& d : session.drafts) visit(d);
  }
  if (scored == 0) throw EmptyInput("no SRM-scored steps");
  return static_cast<double>(over) / static_cast<double>(scored);
}

void ReportAccumulator::add(const std::string& question_id, const Session& session, std::optional<bool> correct) {
  std::lock_guard lock(mu_);
  ++sessions_;
  steps_ += static_cast<std::int64_t>(session.steps.size());
  for (const auto& e : session.events) ++fired_[e.kind];
  if (correct) runs_[question_id].push_back(*correct);
}

void ReportAccumulator::add_failed_run(const std::string& question_id) {
  std::lock_guard lock(mu_);
  ++failed_;
  runs_[question_id].push_back(false);
}

ActivationRow ReportAccumulator::activation(std::string label) const {
  std::lock_guard lock(mu_);
  auto row = make_row(std::move(label), steps_, fired_);
  if (!runs_.empty()) row.accuracy = 100.0 * ::stepwise::pass_at_1(runs_);
  return row;
}

double ReportAccumulator::pass_at_1() const {
  std::lock_guard lock(mu_);
  return ::stepwise::pass_at_1(runs_);
}

std::size_t ReportAccumulator::sessions() const {
  std::lock_guard lock(mu_);
  return sessions_;
}

std::size_t ReportAccumulator::failed_runs() const {
  std::lock_guard lock(mu_);
  return failed_;
}

}  // namespace stepwise
