#include "stepwise_cli/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "stepwise/backend.hpp"
#include "stepwise/config.hpp"
#include "stepwise/errors.hpp"
#include "stepwise/lexicon.hpp"
#include "stepwise/metrics.hpp"
#include "stepwise/orchestrator.hpp"
#include "stepwise/trace.hpp"

namespace stepwise::cli {
namespace {

using nlohmann::json;

// Input problems (flags, files, datasets, traces) map to exit 3.
class InputError : public Error {
 public:
  using Error::Error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

// ---------------------------------------------------------------------------
// Flags

struct SessionFlags {
  std::optional<std::string> config;
  std::optional<double> rho;
  std::optional<double> tau;
  std::optional<int> n;
  std::optional<int> m;
  std::optional<int> k;
  std::optional<int> budget;
  std::optional<std::string> strategy;
  std::optional<int> judge_threshold;
  std::optional<std::string> answer_model;
  std::optional<std::string> lexicon;
  std::optional<std::string> cost_model;
  std::optional<double> temperature;
  std::optional<double> top_p;
};

struct BackendFlags {
  std::optional<std::string> srm_url;
  std::optional<std::string> lrm_url;
  std::optional<std::string> srm_model;
  std::optional<std::string> lrm_model;
  std::optional<std::string> srm_script;
  std::optional<std::string> lrm_script;
  std::string api = "completions";
};

void add_session_flags(CLI::App* app, SessionFlags& f) {
  app->add_option("--config", f.config, "TOML session config; flags override its values");
  app->add_option("--rho", f.rho, "Low-perplexity coverage threshold in (0,1]");
  app->add_option("--tau", f.tau, "Per-token perplexity threshold (>= 1)");
  app->add_option("--n", f.n, "Priming steps produced by the LRM");
  app->add_option("--m", f.m, "Rectification steps after an intervention request");
  app->add_option("--k", f.k, "Consecutive hesitant steps that request intervention");
  app->add_option("--budget", f.budget, "Thinking-token budget")->check(CLI::Range(2048, 32768));
  app->add_option("--strategy", f.strategy, "trigreason | specreason | srm-only | lrm-only");
  app->add_option("--judge-threshold", f.judge_threshold, "Polling baseline acceptance score (0-9)");
  app->add_option("--answer-model", f.answer_model, "Model writing the final answer: srm | lrm");
  app->add_option("--lexicon", f.lexicon, "Hesitation phrase file, one phrase per line");
  app->add_option("--cost-model", f.cost_model, "TOML edge-cloud cost model");
  app->add_option("--temperature", f.temperature, "Sampling temperature");
  app->add_option("--top-p", f.top_p, "Nucleus sampling mass");
}

void add_backend_flags(CLI::App* app, BackendFlags& f) {
  app->add_option("--srm-url", f.srm_url, "SRM endpoint base URL (default: $TRIG_SRM_URL)");
  app->add_option("--lrm-url", f.lrm_url, "LRM endpoint base URL (default: $TRIG_LRM_URL)");
  app->add_option("--srm-model", f.srm_model, "Model name sent to the SRM endpoint");
  app->add_option("--lrm-model", f.lrm_model, "Model name sent to the LRM endpoint");
  app->add_option("--srm-script", f.srm_script, "Scripted SRM replies (JSON) instead of an endpoint");
  app->add_option("--lrm-script", f.lrm_script, "Scripted LRM replies (JSON) instead of an endpoint");
  app->add_option("--api", f.api, "Endpoint flavour: completions | chat")
      ->check(CLI::IsMember({"completions", "chat"}));
}

SessionConfig resolve_config(const SessionFlags& f) {
  SessionConfig c;
  if (f.config) c = load_config_file(*f.config);
  if (f.rho) c.rho = *f.rho;
  if (f.tau) c.tau = *f.tau;
  if (f.n) c.n = *f.n;
  if (f.m) c.m = *f.m;
  if (f.k) c.k = *f.k;
  if (f.budget) c.budget = *f.budget;
  if (f.judge_threshold) c.judge_threshold = *f.judge_threshold;
  if (f.temperature) c.temperature = *f.temperature;
  if (f.top_p) c.top_p = *f.top_p;
  if (f.strategy) {
    const auto s = parse_strategy(*f.strategy);
    if (!s) throw RangeError("strategy", "unknown strategy \"" + *f.strategy + "\"");
    c.strategy = *s;
  }
  if (f.answer_model) {
    const auto o = parse_origin(*f.answer_model);
    if (!o) throw RangeError("answer-model", "must be srm or lrm, got \"" + *f.answer_model + "\"");
    c.answer_model = *o;
  }
  if (f.lexicon) c.lexicon = HesitationLexicon::load(*f.lexicon).phrases();
  return validate_config(c);
}

CostModel resolve_cost_model(const SessionFlags& f) {
  if (!f.cost_model) return CostModel{};
  auto model = load_cost_model_file(*f.cost_model);
  validate_cost_model(model);
  return model;
}

// ---------------------------------------------------------------------------
// Backends

// Stands in for an endpoint the strategy never calls; any call is a failure.
class MissingBackend : public Backend {
 public:
  explicit MissingBackend(std::string role) : role_(std::move(role)) {}
  StepResponse generate(const StepRequest&) override {
    throw TransportError("no " + role_ + " endpoint configured");
  }

 private:
  std::string role_;
};

bool needs_srm(const SessionConfig& c) {
  return c.strategy != Strategy::kLrmOnly;
}

// Single-model strategies write their answer with the model they reason with.
bool needs_lrm(const SessionConfig& c) {
  return c.strategy != Strategy::kSrmOnly;
}

// Either one script for every question or {"questions": {id: script}}.
class ScriptSource {
 public:
  explicit ScriptSource(const std::string& path) {
    const auto text = read_file(path);
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw InputError(path + ": not JSON: " + e.what());
    }
    if (doc.is_object() && doc.contains("questions")) {
      if (!doc["questions"].is_object()) throw InputError(path + ": \"questions\" must be an object");
      for (const auto& [id, script] : doc["questions"].items()) per_question_[id] = script.dump();
    } else {
      shared_ = text;
    }
    // Validate eagerly so malformed scripts are reported as input errors.
    try {
      if (shared_) ScriptedBackend::from_json(*shared_);
      for (const auto& [id, s] : per_question_) ScriptedBackend::from_json(s);
    } catch (const ProtocolError& e) {
      throw InputError(path + ": " + e.what());
    }
  }

  /// Fresh backend for one session; null when the question has no script.
  std::unique_ptr<Backend> make(const std::string& question_id) const {
    if (shared_) return ScriptedBackend::from_json(*shared_);
    const auto it = per_question_.find(question_id);
    if (it == per_question_.end()) return nullptr;
    return ScriptedBackend::from_json(it->second);
  }

 private:
  std::optional<std::string> shared_;
  std::map<std::string, std::string> per_question_;
};

struct EndpointSpec {
  std::optional<ScriptSource> script;
  std::shared_ptr<Backend> http;  // HttpBackend is safe to share across sessions
  std::string role;
};

EndpointSpec resolve_endpoint(const std::string& role, const std::optional<std::string>& script,
                              const std::optional<std::string>& url_flag, const char* url_env,
                              const std::optional<std::string>& model, const std::optional<std::string>& key,
                              const std::string& api, bool required) {
  EndpointSpec spec;
  spec.role = role;
  if (script) {
    spec.script.emplace(*script);
    return spec;
  }
  const auto url = url_flag ? url_flag : env(url_env);
  if (!url) {
    if (required) {
      throw RangeError(role + "-url", "no " + role + " endpoint: pass --" + role + "-url, set " + url_env +
                                          ", or use --" + role + "-script");
    }
    return spec;
  }
  HttpBackendOptions opts;
  opts.base_url = *url;
  opts.model = model.value_or("");
  opts.api_key = key.value_or("");
  opts.flavor = api == "chat" ? ApiFlavor::kChat : ApiFlavor::kCompletions;
  try {
    spec.http = std::make_shared<HttpBackend>(opts);
  } catch (const TransportError& e) {
    throw RangeError(role + "-url", e.what());
  }
  return spec;
}

struct SessionBackends {
  std::unique_ptr<Backend> owned_srm;
  std::unique_ptr<Backend> owned_lrm;
  Backend* srm = nullptr;
  Backend* lrm = nullptr;
};

std::unique_ptr<Backend> instantiate(const EndpointSpec& spec, const std::string& question_id, Backend*& out) {
  std::unique_ptr<Backend> owned;
  if (spec.script) {
    owned = spec.script->make(question_id);
    if (!owned) owned = std::make_unique<MissingBackend>(spec.role + " script entry for question " + question_id);
    out = owned.get();
  } else if (spec.http) {
    out = spec.http.get();
  } else {
    owned = std::make_unique<MissingBackend>(spec.role);
    out = owned.get();
  }
  return owned;
}

struct Endpoints {
  EndpointSpec srm;
  EndpointSpec lrm;

  SessionBackends for_question(const std::string& question_id) const {
    SessionBackends b;
    b.owned_srm = instantiate(srm, question_id, b.srm);
    b.owned_lrm = instantiate(lrm, question_id, b.lrm);
    return b;
  }
};

Endpoints resolve_endpoints(const BackendFlags& f, const SessionConfig& c) {
  Endpoints e;
  e.srm = resolve_endpoint("srm", f.srm_script, f.srm_url, "TRIG_SRM_URL", f.srm_model, std::nullopt, f.api,
                           needs_srm(c));
  e.lrm = resolve_endpoint("lrm", f.lrm_script, f.lrm_url, "TRIG_LRM_URL", f.lrm_model, env("TRIG_LRM_API_KEY"),
                           f.api, needs_lrm(c));
  return e;
}

// ---------------------------------------------------------------------------
// Output helpers

std::optional<GradingKey> grading_key(const std::optional<std::string>& expected, const std::string& kind) {
  if (!expected) return std::nullopt;
  const auto k = parse_answer_kind(kind);
  if (!k) throw RangeError("kind", "must be IntegerBoxed or MultipleChoice");
  return GradingKey{*expected, *k};
}

json report_object(const Session& s, const SessionReport& r) {
  auto j = json::parse(session_report_json(r));
  j["strategy"] = std::string(to_string(s.config.strategy));
  j["config"] = config_label(s.config);
  j["steps"] = s.steps.size();
  j["termination"] = std::string(to_string(s.termination));
  j["answer_text"] = s.answer_text ? json(*s.answer_text) : json(nullptr);
  return j;
}

void print_report(std::ostream& out, const Session& s, const SessionReport& r) {
  out << "strategy:        " << to_string(s.config.strategy) << " (" << config_label(s.config) << ")\n";
  out << "termination:     " << to_string(s.termination) << " after " << s.steps.size() << " steps, "
      << s.thinking_tokens_used << " thinking tokens\n";
  out << format_session_report(r);
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  SessionFlags session;
  BackendFlags backends;
  std::string question;
  std::optional<std::string> trace_out;
  std::optional<std::string> expected;
  std::string kind = "IntegerBoxed";
  bool json = false;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  SessionConfig config;
  CostModel model;
  Endpoints endpoints;
  std::optional<GradingKey> key;
  try {
    config = resolve_config(a.session);
    model = resolve_cost_model(a.session);
    endpoints = resolve_endpoints(a.backends, config);
    key = grading_key(a.expected, a.kind);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  auto backends = endpoints.for_question("");
  Session session;
  try {
    session = run_session(a.question, config, *backends.srm, *backends.lrm);
  } catch (const SessionAborted& e) {
    err << "backend failure: " << e.what() << "\n";
    if (a.trace_out) {
      try {
        save_trace(*a.trace_out, e.partial());
        err << "partial trace written to " << *a.trace_out << "\n";
      } catch (const Error& io) {
        err << "error: " << io.what() << "\n";
      }
    }
    return kExitBackendFailure;
  }

  if (a.trace_out) {
    try {
      save_trace(*a.trace_out, session);
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kExitConfigError;
    }
  }
  const auto report = make_session_report(session, model, key);
  if (a.json) {
    out << report_object(session, report).dump() << "\n";
  } else {
    print_report(out, session, report);
    if (budget_exhausted_without_answer(session)) out << "note:            budget exhausted without an answer\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
  SessionFlags session;
  BackendFlags backends;
  std::string dataset;
  int runs = 16;
  int parallel = 4;
  std::optional<std::string> out;
  std::optional<std::string> trace_dir;
  bool json = false;
};

struct RunResult {
  bool ok = false;
  std::string error;
  SessionReport report;
  std::size_t steps = 0;
  std::string termination;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  SessionConfig config;
  CostModel model;
  Endpoints endpoints;
  std::vector<BenchmarkItem> items;
  try {
    config = resolve_config(a.session);
    model = resolve_cost_model(a.session);
    if (!std::filesystem::exists(a.dataset)) throw InputError("dataset file not found: " + a.dataset);
    items = load_benchmark(a.dataset);
    if (items.empty()) throw InputError("dataset " + a.dataset + " holds no questions");
    endpoints = resolve_endpoints(a.backends, config);
    if (a.trace_dir) std::filesystem::create_directories(*a.trace_dir);
  } catch (const SchemaError& e) {
    err << "error: " << a.dataset << ": " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return x.id < y.id; });
  const std::size_t runs = static_cast<std::size_t>(a.runs);
  std::vector<RunResult> results(items.size() * runs);
  ReportAccumulator acc;
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;

  const auto worker = [&] {
    while (true) {
      const std::size_t job = next.fetch_add(1);
      if (job >= results.size()) return;
      const auto& item = items[job / runs];
      const std::size_t run = job % runs;
      RunResult& r = results[job];
      try {
        auto backends = endpoints.for_question(item.id);
        const auto session = run_session(item.question, config, *backends.srm, *backends.lrm);
        r.report = make_session_report(session, model, GradingKey{item.answer, item.kind});
        r.steps = session.steps.size();
        r.termination = std::string(to_string(session.termination));
        r.ok = true;
        acc.add(item.id, session, r.report.correct.value_or(false));
        if (a.trace_dir) {
          save_trace((std::filesystem::path(*a.trace_dir) / (item.id + "-" + std::to_string(run) + ".jsonl")).string(),
                     session);
        }
      } catch (const std::exception& e) {
        r.ok = false;
        r.error = e.what();
        acc.add_failed_run(item.id);
        std::lock_guard lock(err_mu);
        err << "warning: " << item.id << " run " << run << ": " << e.what() << "\n";
      }
    }
  };
  std::vector<std::thread> pool;
  const int threads = std::max(1, std::min<int>(a.parallel, static_cast<int>(results.size())));
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (a.out) {
    std::ofstream f(*a.out, std::ios::binary | std::ios::trunc);
    if (!f) {
      err << "error: cannot write " << *a.out << "\n";
      return kExitConfigError;
    }
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      json j;
      j["id"] = items[i / runs].id;
      j["run"] = i % runs;
      if (r.ok) {
        auto rep = json::parse(session_report_json(r.report));
        j["answer"] = rep["answer"];
        j["correct"] = rep["correct"];
        j["smt_percentage"] = rep["smt_percentage"];
        j["steps"] = r.steps;
        j["termination"] = r.termination;
        j["trigger_counts"] = rep["trigger_counts"];
        j["lrm_calls"] = rep["lrm_calls"];
        j["est_latency"] = rep["est_latency"];
        j["est_cost"] = rep["est_cost"];
      } else {
        j["correct"] = false;
        j["error"] = r.error;
      }
      f << j.dump() << "\n";
    }
  }

  std::size_t questions_failed = 0;
  for (std::size_t q = 0; q < items.size(); ++q) {
    bool any = false;
    for (std::size_t r = 0; r < runs; ++r) any = any || results[q * runs + r].ok;
    if (!any) ++questions_failed;
  }

  const double p1 = acc.pass_at_1();
  const bool have_sessions = acc.sessions() > 0;
  ActivationRow row;
  if (have_sessions) row = acc.activation(config_label(config));
  if (a.json) {
    json j;
    j["questions"] = items.size();
    j["runs"] = a.runs;
    j["sessions"] = acc.sessions();
    j["failed_runs"] = acc.failed_runs();
    j["pass_at_1"] = p1;
    j["activation"] = have_sessions ? json::parse(activation_row_json(row)) : json(nullptr);
    out << j.dump() << "\n";
  } else {
    out << "questions:       " << items.size() << " x " << a.runs << " runs (" << acc.sessions() << " completed, "
        << acc.failed_runs() << " failed)\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", p1);
    out << "pass@1:          " << buf << "\n";
    if (have_sessions) {
      const std::vector<ActivationRow> rows{row};
      out << format_activation_table(rows);
    }
  }
  return questions_failed == items.size() ? kExitBackendFailure : kExitOk;
}

// ---------------------------------------------------------------------------
// replay / report

struct TraceArgs {
  std::vector<std::string> traces;
  std::optional<std::string> cost_model;
  std::optional<std::string> expected;
  std::string kind = "IntegerBoxed";
  bool json = false;
};

std::vector<Session> load_traces(const std::vector<std::string>& paths) {
  std::vector<Session> sessions;
  for (const auto& p : paths) {
    try {
      sessions.push_back(load_trace(p));
    } catch (const SchemaError& e) {
      throw InputError(p + ": " + e.what());
    }
  }
  return sessions;
}

// Reruns the recorded strategy against the recorded responses.
bool reproduces(const Session& recorded) {
  try {
    auto backends = make_replay_backends(recorded);
    return run_session(recorded.question, recorded.config, *backends.srm, *backends.lrm) == recorded;
  } catch (const Error&) {
    return false;
  }
}

int cmd_replay(const TraceArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<Session> sessions;
  CostModel model;
  std::optional<GradingKey> key;
  try {
    if (a.cost_model) {
      model = load_cost_model_file(*a.cost_model);
      validate_cost_model(model);
    }
    key = grading_key(a.expected, a.kind);
    sessions = load_traces(a.traces);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  std::int64_t srm = 0;
  std::int64_t lrm = 0;
  for (std::size_t i = 0; i < sessions.size(); ++i) {
    const auto& s = sessions[i];
    const auto report = make_session_report(s, model, key);
    const bool same = reproduces(s);
    srm += report.srm_tokens;
    lrm += report.lrm_tokens;
    if (a.json) {
      json j;
      j["trace"] = a.traces[i];
      j["report"] = report_object(s, report);
      j["reproduced"] = same;
      out << j.dump() << "\n";
    } else {
      out << "== " << a.traces[i] << "\n";
      print_report(out, s, report);
      out << "reproduced:      " << (same ? "yes" : "no") << "\n";
    }
  }
  if (sessions.size() > 1) {
    const auto row = trigger_activation_report(sessions, "all");
    const double smt = srm + lrm > 0 ? static_cast<double>(srm) / static_cast<double>(srm + lrm) : 0.0;
    if (a.json) {
      json j;
      j["aggregate"] = {{"sessions", sessions.size()},
                        {"srm_tokens", srm},
                        {"lrm_tokens", lrm},
                        {"smt_percentage", smt},
                        {"activation", json::parse(activation_row_json(row))}};
      out << j.dump() << "\n";
    } else {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * smt);
      out << "== aggregate over " << sessions.size() << " traces\n";
      out << "SMT%:            " << buf << "\n";
      const std::vector<ActivationRow> rows{row};
      out << format_activation_table(rows);
    }
  }
  return kExitOk;
}

int cmd_report(const TraceArgs& a, std::ostream& out, std::ostream& err) {
  std::vector<Session> sessions;
  try {
    sessions = load_traces(a.traces);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  std::map<std::string, std::vector<Session>> groups;
  for (auto& s : sessions) {
    const auto label = config_label(s.config);
    groups[label].push_back(std::move(s));
  }
  std::vector<ActivationRow> rows;
  for (const auto& [label, group] : groups) {
    ReportAccumulator acc;
    for (const auto& s : group) {
      std::optional<bool> correct;
      if (a.expected && s.answer_text) {
        correct = grade_answer(s.answer_text, *a.expected, parse_answer_kind(a.kind).value_or(AnswerKind::kIntegerBoxed));
      } else if (a.expected) {
        correct = false;
      }
      acc.add(s.question, s, correct);
    }
    rows.push_back(acc.activation(label));
  }
  if (a.json) {
    for (const auto& r : rows) out << activation_row_json(r) << "\n";
  } else {
    out << format_activation_table(rows);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Step-level collaborative reasoning between a small and a large reasoning model", "stepwise"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stepwise 0.1.0");

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Reason about one question and print the session summary");
  run_cmd->add_option("question", run.question, "Question text")->required();
  add_session_flags(run_cmd, run.session);
  add_backend_flags(run_cmd, run.backends);
  run_cmd->add_option("--trace-out", run.trace_out, "Write the session trace (JSON Lines)");
  run_cmd->add_option("--expected", run.expected, "Reference answer for grading");
  run_cmd->add_option("--kind", run.kind, "IntegerBoxed | MultipleChoice");
  run_cmd->add_flag("--json", run.json, "Print a JSON summary");

  BenchArgs bench;
  auto* bench_cmd = app.add_subcommand("bench", "Run a JSON Lines benchmark k times per question and grade it");
  bench_cmd->add_option("dataset", bench.dataset, "Benchmark file")->required();
  add_session_flags(bench_cmd, bench.session);
  add_backend_flags(bench_cmd, bench.backends);
  bench_cmd->add_option("--runs", bench.runs, "Sessions per question")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--parallel", bench.parallel, "Concurrent sessions")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", bench.out, "Per-run results (JSON Lines), ordered by question id");
  bench_cmd->add_option("--trace-dir", bench.trace_dir, "Directory receiving one trace per run");
  bench_cmd->add_flag("--json", bench.json, "Print the aggregate as JSON");

  TraceArgs replay;
  auto* replay_cmd = app.add_subcommand("replay", "Recompute metrics from recorded traces");
  replay_cmd->add_option("traces", replay.traces, "Trace files")->required();
  replay_cmd->add_option("--cost-model", replay.cost_model, "TOML edge-cloud cost model");
  replay_cmd->add_option("--expected", replay.expected, "Reference answer for grading");
  replay_cmd->add_option("--kind", replay.kind, "IntegerBoxed | MultipleChoice");
  replay_cmd->add_flag("--json", replay.json, "One JSON object per trace");

  TraceArgs report;
  auto* report_cmd = app.add_subcommand("report", "Trigger activation table over traces, grouped by config");
  report_cmd->add_option("traces", report.traces, "Trace files")->required();
  report_cmd->add_option("--expected", report.expected, "Reference answer for the accuracy column");
  report_cmd->add_option("--kind", report.kind, "IntegerBoxed | MultipleChoice");
  report_cmd->add_flag("--json", report.json, "One JSON object per row");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);  // --help, --version
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfigError;
  }

  try {
    if (*run_cmd) return cmd_run(run, out, err);
    if (*bench_cmd) return cmd_bench(bench, out, err);
    if (*replay_cmd) return cmd_replay(replay, out, err);
    if (*report_cmd) return cmd_report(report, out, err);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace stepwise::cli
