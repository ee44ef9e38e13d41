#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "corpus.hpp"
#include "visa/json_io.hpp"

namespace fs = std::filesystem;
using visa::json;

namespace {

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(VISA_CLI_PATH) + " " + args + " 2>/dev/null";
  RunResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("visa_cli_" + std::string(info->name()) + "_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string q(const fs::path& p) const { return "'" + p.string() + "'"; }
  fs::path path(const std::string& name) const { return dir_ / name; }

  fs::path dir_;
};

const std::string kCase = std::string(VISA_FIXTURE_DIR) + "/case.json";

}  // namespace

TEST_F(CliTest, HelpExitsZero) { EXPECT_EQ(run("--help").code, 0); }

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run("").code, 64);
  EXPECT_EQ(run("frobnicate").code, 64);
  EXPECT_EQ(run("steer --group-size zero").code, 64);
}

TEST_F(CliTest, MissingInputIsIoError) { EXPECT_EQ(run("score --in " + q(path("absent.jsonl"))).code, 74); }

TEST_F(CliTest, MissingConfigIsConfigError) { EXPECT_EQ(run("--config " + q(path("absent.toml")) + " avs").code, 78); }

TEST_F(CliTest, BadDeltaIsConfigError) {
  EXPECT_EQ(run("steer --in '" + kCase + "' --delta '{not json'").code, 78);
}

TEST_F(CliTest, InvalidRecordIsValidationError) {
  std::ofstream(path("bad.jsonl")) << "{\"id\":\"x\"}\n";
  EXPECT_EQ(run("score --in " + q(path("bad.jsonl"))).code, 65);
}

TEST_F(CliTest, HttpBackendWithoutModelIsConfigError) {
  EXPECT_EQ(run("--backend http steer --in '" + kCase + "' --delta '{\"Security\":0.5}'").code, 78);
}

TEST_F(CliTest, SteerOutputsAreByteIdenticalAcrossRuns) {
  const std::string args = "steer --in '" + kCase + "' --delta '{\"Security\":0.5}' --noise 0.3 --seed 11";
  ASSERT_EQ(run(args + " --out " + q(path("a"))).code, 0);
  ASSERT_EQ(run(args + " --out " + q(path("b"))).code, 0);
  EXPECT_EQ(slurp(path("a/steer.json")), slurp(path("b/steer.json")));
  const json m = json::parse(slurp(path("a/manifest.json")));
  EXPECT_EQ(m["command"], "steer");
  EXPECT_EQ(m["seeds"]["seed"], 11);
  EXPECT_TRUE(m["backends"].contains("generator"));
}

TEST_F(CliTest, SteerNoiseFree) {
  const auto r = run("steer --in '" + kCase + "' --delta '{\"Security\":0.5}'");
  ASSERT_EQ(r.code, 0);
  const json j = json::parse(r.out);
  EXPECT_EQ(j["v_target"]["Security"], 1.0);
  const auto& best = j["candidates"][j["best_index"].get<std::size_t>()];
  EXPECT_GE(best["r_val"].get<double>(), 1.99);
  EXPECT_EQ(best["r_cons"], 1.0);
  EXPECT_EQ(best["consistency_fwd"], 1.0);
  EXPECT_EQ(best["consistency_bwd"], 1.0);
}

TEST_F(CliTest, RolloutsThenScore) {
  std::ofstream in(path("batch.jsonl"));
  const json c = json::parse(slurp(kCase));
  for (int i = 0; i < 3; ++i) {
    json r = c;
    r["id"] = "case-" + std::to_string(i);
    r["instruction"] = i % 2 ? "more benevolent" : "less power";
    in << r.dump() << "\n";
  }
  in.close();
  ASSERT_EQ(run("rollouts --in " + q(path("batch.jsonl")) + " --noise 0.5 --group-size 4 --out " + q(path("r"))).code, 0);
  const auto lines = visa::read_jsonl(path("r/rollouts.jsonl"));
  ASSERT_EQ(lines.size(), 3u);
  double sum = 0;
  for (const auto& cand : lines[0]["candidates"]) sum += cand["advantage"].get<double>();
  EXPECT_NEAR(sum, 0.0, 1e-9);

  // rewritten records for score
  std::ofstream s(path("score.jsonl"));
  for (const auto& l : lines)
    s << json{{"id", l["input_id"]}, {"prompt", l["prompt"]}, {"original_response", l["original_response"]},
              {"rewritten_response", l["candidates"][0]["text"]}, {"v_target", l["v_target"]}}
             .dump()
      << "\n";
  s.close();
  ASSERT_EQ(run("score --in " + q(path("score.jsonl")) + " --out " + q(path("s"))).code, 0);
  const std::string csv = slurp(path("s/metrics.csv"));
  EXPECT_TRUE(csv.starts_with("consistency_mean,consistency_std,"));
  const json m = json::parse(slurp(path("s/metrics.json")));
  EXPECT_EQ(m["n_valid"], 3);
}

TEST_F(CliTest, AvsQuadraticConverges) {
  ASSERT_EQ(run("avs --landscape quadratic --seed 7 --out " + q(path("avs"))).code, 0);
  const json r = json::parse(slurp(path("avs/result.json")));
  EXPECT_LT(r["mu_distance_to_optimum"].get<double>(), 0.15);
  EXPECT_EQ(visa::read_jsonl(path("avs/trace.jsonl")).size(), 50u);
}

TEST_F(CliTest, AvsExternalEvaluator) {
  // reward = -(sum of coefficients - 1)^2, read from the JSON on stdin
  std::ofstream(path("eval.py")) << "import json,sys\nv=json.load(sys.stdin)\nprint(-(sum(v.values())-1)**2)\n";
  const auto r = run("avs --evaluator 'python3 " + path("eval.py").string() + "' --iters 5 --k 4 --out " + q(path("x")));
  if (r.code == 0) {
    EXPECT_EQ(visa::read_jsonl(path("x/trace.jsonl")).size(), 5u);
  } else {
    GTEST_SKIP() << "python3 unavailable";
  }
}

TEST_F(CliTest, DatasetFilterDiscardsFifteenAnchors) {
  const auto pairs = corpus::random_annotated(100, 91);
  std::ofstream in(path("pairs.jsonl"));
  for (const auto& p : pairs) in << visa::to_json(p).dump() << "\n";
  in.close();
  ASSERT_EQ(run("dataset filter --in " + q(path("pairs.jsonl")) + " --out " + q(path("d"))).code, 0);
  const json m = json::parse(slurp(path("d/manifest.json")));
  EXPECT_EQ(m["counts"]["anchors"], 100);
  EXPECT_EQ(m["counts"]["anchors_discarded"], 15);
  const auto triples = visa::read_jsonl(path("d/triples.jsonl"));
  EXPECT_EQ(triples.size(), 2 * m["counts"]["pairs_kept"].get<std::size_t>());
  EXPECT_TRUE(fs::exists(path("d/delta_histogram.csv")));
  EXPECT_EQ(run("dataset filter --in " + q(path("pairs.jsonl"))).code, 78);  // needs --out
}

TEST_F(CliTest, EvalRunDriftAndReport) {
  std::ofstream in(path("qs.jsonl"));
  const char* dims[] = {"traditional_vs_secular", "survival_vs_self_expression", "individualism_vs_collectivism",
                        "gender_roles"};
  for (int i = 0; i < 8; ++i)
    in << json{{"question_id", "q" + std::to_string(i)},
               {"question", "question"},
               {"reference_answer", "FACTS:[] TEXT:reference"},
               {"dimension", dims[i % 4]}}
              .dump()
       << "\n";
  in.close();
  ASSERT_EQ(run("eval run --in " + q(path("qs.jsonl")) + " --n-samples 4 --out " + q(path("base"))).code, 0);
  ASSERT_EQ(run("eval run --in " + q(path("qs.jsonl")) + " --n-samples 4 --mock-profile '{\"Universalism\":0.5}' "
                "--mock-noise 0.4 --seed 2 --out " + q(path("tuned")))
                .code,
            0);
  ASSERT_EQ(run("eval drift --tested " + q(path("base/report.json")) + " --base " + q(path("base/report.json")) +
                " --out " + q(path("d0")))
                .code,
            0);
  EXPECT_EQ(json::parse(slurp(path("d0/drift.json")))["value_drift"], 0.0);
  ASSERT_EQ(run("eval drift --tested " + q(path("tuned/report.json")) + " --base " + q(path("base/report.json")) +
                " --out " + q(path("d1")))
                .code,
            0);
  EXPECT_GT(json::parse(slurp(path("d1/drift.json")))["value_drift"].get<double>(), 0.0);
  ASSERT_EQ(run("report --eval " + q(path("tuned/report.json")) + " --out " + q(path("rep"))).code, 0);
  bool any_svg = false;
  for (const auto& e : fs::directory_iterator(path("rep"))) any_svg |= e.path().extension() == ".svg";
  EXPECT_TRUE(any_svg);
}

TEST_F(CliTest, ManifestConfigReloads) {
  ASSERT_EQ(run("avs --iters 7 --k 6 --seed 4 --out " + q(path("a"))).code, 0);
  const json m = json::parse(slurp(path("a/manifest.json")));
  std::ofstream(path("cfg.toml")) << m["config"].get<std::string>();
  ASSERT_EQ(run("--config " + q(path("cfg.toml")) + " avs --out " + q(path("b"))).code, 0);
  EXPECT_EQ(slurp(path("a/trace.jsonl")), slurp(path("b/trace.jsonl")));
  EXPECT_EQ(visa::read_jsonl(path("b/trace.jsonl")).size(), 7u);
}
