#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "corpus.hpp"
#include "httplib.h"
#include "json.hpp"
#include "oracle.hpp"
#include "scenario.hpp"
#include "stepwise/trace.hpp"
#include "stepwise_cli/cli.hpp"

namespace stepwise {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const fs::path kData = STEPWISE_TEST_DATA_DIR;

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  Result r;
  r.code = cli::run_cli(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

std::vector<json> json_lines(const std::string& text) {
  std::vector<json> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(json::parse(line));
  }
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ::unsetenv("TRIG_SRM_URL");
    ::unsetenv("TRIG_LRM_URL");
    ::unsetenv("TRIG_LRM_API_KEY");
    dir_ = fs::temp_directory_path() /
           ("stepwise_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::vector<std::string> golden_run(std::vector<std::string> extra = {}) const {
    std::vector<std::string> args = {"run",
                                     "Compute the remainder when 2^10 is divided by 7.",
                                     "--srm-script",
                                     (kData / "golden_srm.json").string(),
                                     "--lrm-script",
                                     (kData / "golden_lrm.json").string()};
    args.insert(args.end(), extra.begin(), extra.end());
    return args;
  }

  fs::path dir_;
};

// The golden script as a scenario, for the independent oracle.
testing::Scenario golden_scenario() {
  testing::Scenario sc;
  sc.steps.assign(20, testing::StepSpec{});
  for (auto [low, hes] : std::vector<std::pair<int, bool>>{
           {5, false}, {9, false}, {4, false}, {2, true}, {2, true}, {2, true}, {3, false}, {10, false}, {1, false}}) {
    sc.steps.push_back(testing::step_with_ratio(low, 10, hes));
  }
  return sc;
}

TEST_F(CliTest, RunMatchesGoldenSummary) {
  const auto r = cli(golden_run({"--strategy", "trigreason", "--rho", "0.85", "--n", "20", "--m", "1", "--json"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, slurp(kData / "golden_run.json"));

  // The golden file agrees with the reference execution of the trigger loop.
  SessionConfig cfg;
  const auto ref = testing::reference_trigreason(golden_scenario(), cfg);
  const auto j = json::parse(r.out);
  const auto srm_steps = std::count(ref.origins.begin(), ref.origins.end(), Origin::kSrm);
  EXPECT_EQ(j["step_counts"]["SRM"], srm_steps);
  EXPECT_EQ(j["srm_tokens"], srm_steps * 10);
  EXPECT_EQ(j["lrm_tokens"], (static_cast<long>(ref.origins.size()) - srm_steps) * 10);
  int priming = 0, cognitive = 0, intervention = 0;
  for (const auto& e : ref.events) {
    priming += e.kind == TriggerKind::kStrategicPriming;
    cognitive += e.kind == TriggerKind::kCognitiveOffload;
    intervention += e.kind == TriggerKind::kInterventionRequest;
  }
  EXPECT_EQ(j["trigger_counts"]["StrategicPriming"], priming);
  EXPECT_EQ(j["trigger_counts"]["CognitiveOffload"], cognitive);
  EXPECT_EQ(j["trigger_counts"]["InterventionRequest"], intervention);
  EXPECT_EQ(j["answer"], "2");
}

TEST_F(CliTest, HumanReadableSummary) {
  const auto r = cli(golden_run({"--expected", "2"}));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("answer:          2"), std::string::npos);
  EXPECT_NE(r.out.find("correct:         yes"), std::string::npos);
  EXPECT_NE(r.out.find("SMT%:            20.69"), std::string::npos);
  EXPECT_NE(r.out.find("TrigReason (0.85-20-1)"), std::string::npos);
}

TEST_F(CliTest, OutOfRangeRhoIsConfigError) {
  const auto r = cli(golden_run({"--rho", "1.5"}));
  EXPECT_EQ(r.code, cli::kExitConfigError);
  EXPECT_NE(r.err.find("rho"), std::string::npos);
}

TEST_F(CliTest, BudgetFlagRange) {
  EXPECT_EQ(cli(golden_run({"--budget", "1000"})).code, cli::kExitConfigError);
  const auto r = cli(golden_run({"--budget", "40000"}));
  EXPECT_EQ(r.code, cli::kExitConfigError);
  EXPECT_NE(r.err.find("--budget"), std::string::npos);
  EXPECT_EQ(cli(golden_run({"--budget", "2048"})).code, 0);
  EXPECT_EQ(cli(golden_run({"--budget", "32768"})).code, 0);
}

TEST_F(CliTest, UnknownStrategyAndFlags) {
  auto r = cli(golden_run({"--strategy", "oracle"}));
  EXPECT_EQ(r.code, cli::kExitConfigError);
  EXPECT_NE(r.err.find("strategy"), std::string::npos);
  EXPECT_EQ(cli(golden_run({"--no-such-flag"})).code, cli::kExitConfigError);
  EXPECT_EQ(cli({}).code, cli::kExitConfigError);
  r = cli({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("bench"), std::string::npos);
  r = cli({"run", "--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--judge-threshold"), std::string::npos);
}

TEST_F(CliTest, SrmOnlyIsAllSrm) {
  const auto r = cli({"run", "q", "--strategy", "srm-only", "--srm-script", (kData / "golden_srm.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("SMT%:            100.00"), std::string::npos);
}

TEST_F(CliTest, MissingEndpointNamesTheFlag) {
  const auto r = cli({"run", "q", "--lrm-script", (kData / "golden_lrm.json").string()});
  EXPECT_EQ(r.code, cli::kExitConfigError);
  EXPECT_NE(r.err.find("srm-url"), std::string::npos);
  EXPECT_NE(r.err.find("TRIG_SRM_URL"), std::string::npos);
}

TEST_F(CliTest, BackendFailureExitsTwoAndKeepsPartialTrace) {
  // The LRM script runs out after the first priming step.
  spit(path("empty_lrm.json"), R"({"steps": [{"idx": 1, "tokens": [" a"], "logprobs": [-0.1]}]})");
  const auto r = cli({"run", "q", "--srm-script", (kData / "golden_srm.json").string(), "--lrm-script",
                      path("empty_lrm.json"), "--trace-out", path("partial.jsonl")});
  EXPECT_EQ(r.code, cli::kExitBackendFailure);
  EXPECT_NE(r.err.find("backend failure"), std::string::npos);
  EXPECT_TRUE(fs::exists(path("partial.jsonl")));
}

TEST_F(CliTest, MalformedScriptIsConfigError) {
  spit(path("bad.json"), "{ not json");
  EXPECT_EQ(cli({"run", "q", "--strategy", "srm-only", "--srm-script", path("bad.json")}).code,
            cli::kExitConfigError);
  EXPECT_EQ(cli({"run", "q", "--strategy", "srm-only", "--srm-script", path("absent.json")}).code,
            cli::kExitConfigError);
}

// Flag > config file > default, checked field by field through the trace.
TEST_F(CliTest, FlagPrecedence) {
  struct Case {
    std::string flag;
    std::string file_line;
    std::string flag_value;
    std::function<std::string(const SessionConfig&)> read;
    std::string default_value;
    std::string file_value;
  };
  const auto num = [](double v) {
    std::ostringstream s;
    s << v;
    return s.str();
  };
  const std::vector<Case> cases = {
      {"--rho", "rho = 0.75", "0.95", [&](const auto& c) { return num(c.rho); }, "0.85", "0.75"},
      {"--tau", "tau = 1.2", "1.5", [&](const auto& c) { return num(c.tau); }, "1.05", "1.2"},
      {"--n", "n = 4", "7", [&](const auto& c) { return num(c.n); }, "20", "4"},
      {"--m", "m = 2", "3", [&](const auto& c) { return num(c.m); }, "1", "2"},
      {"--k", "k = 2", "4", [&](const auto& c) { return num(c.k); }, "3", "2"},
      {"--budget", "budget = 4096", "16384", [&](const auto& c) { return num(c.budget); }, "8192", "4096"},
      {"--judge-threshold", "judge_threshold = 5", "8", [&](const auto& c) { return num(c.judge_threshold); }, "7",
       "5"},
      {"--temperature", "temperature = 0.3", "0.9", [&](const auto& c) { return num(c.temperature); }, "0.6",
       "0.3"},
      {"--top-p", "top_p = 0.8", "0.5", [&](const auto& c) { return num(c.top_p); }, "0.95", "0.8"},
      {"--answer-model", "answer_model = \"LRM\"", "srm",
       [](const auto& c) { return std::string(to_string(c.answer_model)); }, "SRM", "LRM"},
      {"--strategy", "strategy = \"SpecReason\"", "srm-only",
       [](const auto& c) { return std::string(to_string(c.strategy)); }, "TrigReason", "SpecReason"},
  };
  for (const auto& c : cases) {
    spit(path("cfg.toml"), c.file_line + "\n");
    const auto config_of = [&](std::vector<std::string> extra) {
      auto args = golden_run({"--trace-out", path("t.jsonl")});
      args.insert(args.end(), extra.begin(), extra.end());
      const auto r = cli(args);
      EXPECT_EQ(r.code, 0) << c.flag << ": " << r.err;
      return load_trace(path("t.jsonl")).config;
    };
    const auto flag_value = c.flag == "--strategy" ? std::string("SrmOnly")
                            : c.flag == "--answer-model" ? std::string("SRM")
                                                         : c.flag_value;
    EXPECT_EQ(c.read(config_of({})), c.default_value) << c.flag;
    EXPECT_EQ(c.read(config_of({"--config", path("cfg.toml")})), c.file_value) << c.flag;
    EXPECT_EQ(c.read(config_of({"--config", path("cfg.toml"), c.flag, c.flag_value})), flag_value) << c.flag;
  }
}

TEST_F(CliTest, LexiconAndCostModelFiles) {
  spit(path("lexicon.txt"), "# custom\nhold on\n");
  spit(path("cost.toml"), "lrm_input_price = 1e-6\nlrm_output_price = 3e-6\nrtt_latency = 0.5\n");
  const auto r = cli(golden_run({"--lexicon", path("lexicon.txt"), "--cost-model", path("cost.toml"), "--json"}));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  // " Wait," is not in the custom lexicon: no intervention.
  EXPECT_EQ(j["trigger_counts"]["InterventionRequest"], 0);
  EXPECT_GT(j["est_cost"].get<double>(), 0.0);
  EXPECT_GT(j["est_latency"].get<double>(), 0.0);

  spit(path("cost_bad.toml"), "rtt_latency = -1\n");
  EXPECT_EQ(cli(golden_run({"--cost-model", path("cost_bad.toml")})).code, cli::kExitConfigError);
  spit(path("empty_lexicon.txt"), "# nothing\n");
  const auto e = cli(golden_run({"--lexicon", path("empty_lexicon.txt")}));
  EXPECT_EQ(e.code, cli::kExitConfigError);
  EXPECT_NE(e.err.find("lexicon"), std::string::npos);
}

TEST_F(CliTest, RunTraceReplayReproducesMetrics) {
  const auto run = cli(golden_run({"--json", "--trace-out", path("run.jsonl")}));
  ASSERT_EQ(run.code, 0) << run.err;
  const auto run_json = json::parse(run.out);

  std::string first;
  for (int rep = 0; rep < 3; ++rep) {
    const auto r = cli({"replay", path("run.jsonl"), "--json"});
    ASSERT_EQ(r.code, 0) << r.err;
    if (rep == 0) first = r.out;
    EXPECT_EQ(r.out, first);
    const auto lines = json_lines(r.out);
    ASSERT_EQ(lines.size(), 1u);
    EXPECT_EQ(lines[0]["report"], run_json);
    EXPECT_TRUE(lines[0]["reproduced"].get<bool>());
  }
}

TEST_F(CliTest, ReplayRejectsIndexGap) {
  spit(path("gap.jsonl"),
       R"({"idx": 1, "origin": "SRM", "tokens": ["a"], "logprobs": [-0.1], "finish": "stop"})"
       "\n"
       R"({"idx": 3, "origin": "SRM", "tokens": ["b"], "logprobs": [-0.1], "finish": "stop"})"
       "\n");
  const auto r = cli({"replay", path("gap.jsonl")});
  EXPECT_EQ(r.code, cli::kExitConfigError);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
  EXPECT_NE(r.err.find("gap.jsonl"), std::string::npos);
}

TEST_F(CliTest, ReplayTwoTracesAddsAggregate) {
  ASSERT_EQ(cli(golden_run({"--trace-out", path("a.jsonl")})).code, 0);
  ASSERT_EQ(cli(golden_run({"--strategy", "specreason", "--trace-out", path("b.jsonl")})).code, 0);
  const auto r = cli({"replay", path("a.jsonl"), path("b.jsonl"), "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto lines = json_lines(r.out);
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_TRUE(lines[2].contains("aggregate"));
  EXPECT_EQ(lines[2]["aggregate"]["sessions"], 2);
  const auto human = cli({"replay", path("a.jsonl"), path("b.jsonl")});
  EXPECT_NE(human.out.find("aggregate over 2 traces"), std::string::npos);
}

TEST_F(CliTest, ReportGroupsByConfig) {
  ASSERT_EQ(cli(golden_run({"--trace-out", path("a.jsonl")})).code, 0);
  ASSERT_EQ(cli(golden_run({"--rho", "0.95", "--trace-out", path("b.jsonl")})).code, 0);
  const auto r = cli({"report", path("a.jsonl"), path("b.jsonl"), "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = json_lines(r.out);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0]["label"], "0.85-20-1");
  EXPECT_EQ(rows[1]["label"], "0.95-20-1");
  EXPECT_NEAR(rows[1]["cognitive_offload_pct"].get<double>(), 100.0 / 29, 1e-12);  // only the 1.0-ratio step
  EXPECT_NE(cli({"report", path("a.jsonl")}).out.find("Cognitive Offload (%)"), std::string::npos);
}

// -- bench --------------------------------------------------------------------

json scenario_script(const testing::Scenario& sc, bool srm) {
  return json::parse(srm ? testing::srm_script_json(sc) : testing::lrm_script_json(sc));
}

TEST_F(CliTest, BenchAllCorrect) {
  testing::Scenario mod7;
  mod7.steps.resize(3);
  mod7.srm_answer = "so \\boxed{2}";
  testing::Scenario choice;
  choice.steps.resize(2);
  choice.srm_answer = "The answer is (C).";
  json srm, lrm;
  srm["questions"]["mod-7"] = scenario_script(mod7, true);
  srm["questions"]["choice-1"] = scenario_script(choice, true);
  lrm["questions"]["mod-7"] = scenario_script(mod7, false);
  lrm["questions"]["choice-1"] = scenario_script(choice, false);
  spit(path("srm.json"), srm.dump());
  spit(path("lrm.json"), lrm.dump());

  const auto r = cli({"bench", (kData / "bench.jsonl").string(), "--runs", "2", "--n", "1", "--srm-script",
                      path("srm.json"), "--lrm-script", path("lrm.json"), "--out", path("results.jsonl"), "--json",
                      "--trace-dir", path("traces")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto agg = json::parse(r.out);
  EXPECT_EQ(agg["pass_at_1"], 1.0);
  EXPECT_EQ(agg["sessions"], 4);
  const auto results = json_lines(slurp(path("results.jsonl")));
  ASSERT_EQ(results.size(), 4u);
  EXPECT_EQ(results[0]["id"], "choice-1");
  EXPECT_EQ(results[1]["id"], "choice-1");
  EXPECT_EQ(results[2]["id"], "mod-7");
  EXPECT_EQ(results[3]["run"], 1);
  for (const auto& line : results) EXPECT_TRUE(line["correct"].get<bool>());
  EXPECT_TRUE(fs::exists(path("traces") + "/mod-7-1.jsonl"));
}

TEST_F(CliTest, BenchFailuresAreRecorded) {
  testing::Scenario mod7;
  mod7.steps.resize(3);
  json srm, lrm;
  srm["questions"]["mod-7"] = scenario_script(mod7, true);  // no script for choice-1
  lrm["questions"]["mod-7"] = scenario_script(mod7, false);
  spit(path("srm.json"), srm.dump());
  spit(path("lrm.json"), lrm.dump());
  auto r = cli({"bench", (kData / "bench.jsonl").string(), "--runs", "2", "--srm-script", path("srm.json"),
                "--lrm-script", path("lrm.json"), "--out", path("results.jsonl"), "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["failed_runs"], 2);
  EXPECT_DOUBLE_EQ(json::parse(r.out)["pass_at_1"].get<double>(), 0.5);
  const auto results = json_lines(slurp(path("results.jsonl")));
  EXPECT_TRUE(results[0].contains("error"));

  // Every question failing is a nonzero exit.
  spit(path("none.json"), R"({"questions": {}})");
  r = cli({"bench", (kData / "bench.jsonl").string(), "--runs", "1", "--srm-script", path("none.json"),
           "--lrm-script", path("none.json")});
  EXPECT_EQ(r.code, cli::kExitBackendFailure);
}

TEST_F(CliTest, BenchInputErrors) {
  EXPECT_EQ(cli({"bench", path("missing.jsonl"), "--srm-script", (kData / "golden_srm.json").string(), "--lrm-script",
                 (kData / "golden_lrm.json").string()})
                .code,
            cli::kExitConfigError);
  spit(path("broken.jsonl"), "{\"id\": \"a\", \"question\": \"q\", \"answer\": \"1\"}\n{\"id\": 5}\n");
  const auto r = cli({"bench", path("broken.jsonl"), "--srm-script", (kData / "golden_srm.json").string(),
                      "--lrm-script", (kData / "golden_lrm.json").string()});
  EXPECT_EQ(r.code, cli::kExitConfigError);
  EXPECT_NE(r.err.find("line 2"), std::string::npos);
  EXPECT_EQ(cli({"bench", (kData / "bench.jsonl").string(), "--runs", "0"}).code, cli::kExitConfigError);
}

TEST_F(CliTest, BenchReproducesActivationRow) {
  const auto target = testing::activation_table_targets()[1];  // 0.85-20-1
  const auto corpus = testing::activation_corpus(target);
  json srm, lrm;
  std::ostringstream dataset;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    char id[16];
    std::snprintf(id, sizeof(id), "s%03zu", i);
    srm["questions"][id] = scenario_script(corpus[i], true);
    lrm["questions"][id] = scenario_script(corpus[i], false);
    dataset << json{{"id", id}, {"question", corpus[i].question}, {"answer", "2"}}.dump() << "\n";
  }
  spit(path("srm.json"), srm.dump());
  spit(path("lrm.json"), lrm.dump());
  spit(path("corpus.jsonl"), dataset.str());
  const auto r = cli({"bench", path("corpus.jsonl"), "--runs", "1", "--parallel", "4", "--rho", "0.85", "--n", "20",
                      "--m", "1", "--srm-script", path("srm.json"), "--lrm-script", path("lrm.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("0.85-20-1"), std::string::npos) << r.out;
  for (const char* cell : {"25.95", "8.31", "4.73", "38.99"}) EXPECT_NE(r.out.find(cell), std::string::npos) << cell;
}

// -- endpoints from the environment -------------------------------------------------

TEST_F(CliTest, EndpointsFromEnvironment) {
  httplib::Server server;
  std::string auth;
  std::string model;
  server.Post("/v1/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const auto body = json::parse(req.body);
    model = body.value("model", "");
    if (req.has_header("Authorization")) auth = req.get_header_value("Authorization");
    const bool answer = body["max_tokens"] == 1024;
    json reply = {{"choices",
                   {{{"text", answer ? "\\boxed{2}" : " done"},
                     {"finish_reason", "stop"},
                     {"stop_reason", answer ? json(nullptr) : json("</think>")},
                     {"logprobs", {{"tokens", {answer ? "\\boxed{2}" : " done"}}, {"token_logprobs", {-0.05}}}}}}},
                  {"usage", {{"prompt_tokens", 12}, {"completion_tokens", 1}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();
  const std::string url = "http://127.0.0.1:" + std::to_string(port);

  ::setenv("TRIG_LRM_URL", url.c_str(), 1);
  ::setenv("TRIG_LRM_API_KEY", "sk-env", 1);
  auto r = cli({"run", "q", "--strategy", "lrm-only", "--lrm-model", "big", "--json"});
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(r.out)["answer"], "2");
  EXPECT_EQ(auth, "Bearer sk-env");
  EXPECT_EQ(model, "big");

  ::setenv("TRIG_SRM_URL", "http://127.0.0.1:1", 1);
  r = cli({"run", "q", "--strategy", "srm-only", "--srm-url", url, "--json"});
  EXPECT_EQ(r.code, 0) << r.err;  // the flag wins over the environment

  server.stop();
  t.join();
}

}  // namespace
}  // namespace stepwise
