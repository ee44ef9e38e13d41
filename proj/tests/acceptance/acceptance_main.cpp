// Acceptance suite: one PASS/FAIL line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "../corpus.hpp"
#include "../golden_cases.hpp"
#include "../oracles.hpp"
#include "../test_util.hpp"
#include "visa/avs.hpp"
#include "visa/dataset.hpp"
#include "visa/eval.hpp"
#include "visa/mock_backend.hpp"
#include "visa/pipeline.hpp"
#include "visa/scoring.hpp"

using namespace visa;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) {
      ok = false;
      detail = what;
    }
  }
};

using Coeffs = ValueCoeffs<double>;

Check ac1_reward_range() {
  Check c;
  std::mt19937_64 rng(101);
  for (int i = 0; i < 100; ++i) {
    ValueVector v = testutil::random_vector(rng);
    while (v.coeffs().isZero(0.0)) v = testutil::random_vector(rng);
    const double r = value_reward(v, v);
    c.require(std::abs(r - 2.0) <= 1e-9, "value_reward(v, v) = " + std::to_string(r));
  }
  for (int i = 0; i < 10000; ++i) {
    const double r = value_reward(testutil::random_vector(rng), testutil::random_vector(rng));
    c.require(r >= 0.0 && r <= 2.0, "value_reward outside [0, 2]: " + std::to_string(r));
  }
  return c;
}

Check ac2_advantages() {
  Check c;
  std::mt19937_64 rng(102);
  std::uniform_int_distribution<int> gsize(2, 16);
  std::uniform_real_distribution<double> rew(0.0, 3.0);
  for (int n = 0; n < 1000; ++n) {
    std::vector<double> r(static_cast<std::size_t>(gsize(rng)));
    for (auto& x : r) x = rew(rng);
    const auto a = group_advantages(r, 1e-8);
    c.require(std::abs(a.advantages.sum()) <= 1e-9, "advantage sum " + std::to_string(a.advantages.sum()));
  }
  const std::vector<double> r{1.0, 2.0, 3.0};
  const auto a = group_advantages(r, 1e-8);
  const double expect[] = {-1.2247, 0.0, 1.2247};
  for (int i = 0; i < 3; ++i)
    c.require(std::abs(a.advantages(i) - expect[i]) <= 1e-3, "[1,2,3] advantage " + std::to_string(a.advantages(i)));
  return c;
}

Check ac3_surrogate() {
  Check c;
  std::mt19937_64 rng(103);
  std::normal_distribution<double> g(0.0, 0.5);
  std::uniform_real_distribution<double> lp(-5.0, -0.1);
  const GrpoConfig cfg;
  for (int n = 0; n < 100; ++n) {
    const double lold = lp(rng), lref = lp(rng), A = g(rng) * 2;
    // equal policies: A - beta * KL exactly
    const std::vector<double> same{lold}, ref{lref}, oldv{lold};
    const double s = grpo_surrogate(same, oldv, ref, A, cfg);
    c.require(s == A - cfg.kl_beta * kl_estimate(lold, lref), "equal-policy objective mismatch");

    // finite-difference monotonicity at r = 1 with the KL term switched off (ref = new)
    const double h = 1e-4;
    const std::vector<double> p0{lold}, p1{lold + h};
    const double noref0 = grpo_surrogate(p0, oldv, p0, A, cfg);
    const double noref1 = grpo_surrogate(p1, oldv, p1, A, cfg);
    const double slope = (noref1 - noref0) / h;
    c.require(A == 0 || (slope > 0) == (A > 0), "surrogate slope has the wrong sign");

    // saturated beyond the band on the side the clip binds
    const double far = A >= 0 ? std::log(1.0 + 3 * cfg.clip_eps) : std::log(1.0 - 3 * cfg.clip_eps);
    const std::vector<double> q0{lold + far}, q1{lold + far + (A >= 0 ? h : -h)};
    const double v0 = grpo_surrogate(q0, oldv, q0, A, cfg), v1 = grpo_surrogate(q1, oldv, q1, A, cfg);
    c.require(std::abs(v0 - v1) <= 1e-15, "surrogate not saturated beyond the clip band");
    c.require(std::abs(v0 - A * (A >= 0 ? 1 + cfg.clip_eps : 1 - cfg.clip_eps)) <= 1e-12, "clip value mismatch");

    // matches the textbook form
    const std::vector<double> lnew{lold + g(rng)};
    const double lib = grpo_surrogate(lnew, oldv, ref, A, cfg);
    const double ora = oracle::surrogate(lnew, {lold}, {lref}, A, cfg.clip_eps, cfg.kl_beta);
    c.require(std::abs(lib - ora) <= 1e-12, "surrogate differs from the reference form");
  }
  return c;
}

Check ac4_avs() {
  Check c;
  SearchConfig cfg;
  cfg.seed = 7;
  cfg.K = 16;
  cfg.alpha = 0.5;
  cfg.update_mode = UpdateMode::MeanShift;
  const Landscape land{LandscapeKind::Quadratic, default_landscape_optimum(), 0.0};
  const auto res = run_search<double>(cfg, land);
  const double dist = (res.final_dist.mu - land.optimum).norm();
  c.require(res.trace.size() == 50, "expected 50 iterations");
  c.require(dist < 0.15, "|mu_50 - v*| = " + std::to_string(dist));
  const auto grid = oracle::separable_grid_argmax(kNumDimensions, [&](std::size_t d, double x) {
    const double z = x - land.optimum(static_cast<Eigen::Index>(d));
    return -z * z;
  });
  double grid_dist = 0;
  for (int d = 0; d < kNumDimensions; ++d) {
    const double z = res.final_dist.mu(d) - grid[static_cast<std::size_t>(d)];
    grid_dist += z * z;
  }
  c.require(std::sqrt(grid_dist) < 0.15, "mu_50 disagrees with the grid oracle");
  for (const auto& rec : res.trace) {
    c.require(rec.asymmetry == 0.0, "Sigma not symmetric at iteration " + std::to_string(rec.iteration));
    c.require(rec.min_eigenvalue > 0.0, "Sigma not PSD at iteration " + std::to_string(rec.iteration));
  }

  SearchConfig cc = cfg;
  cc.init_mu = Coeffs::Constant(0.2);
  const auto flat = run_search<double>(cc, [](const Coeffs&) { return 0.5; });
  c.require(flat.trace.size() == 50, "constant run length");
  for (const auto& rec : flat.trace) c.require(rec.mu == cc.init_mu, "mu moved under a constant evaluator");
  return c;
}

Check ac5_composite() {
  Check c;
  c.require(std::abs(composite_reward(0.3855, 0.0775) - 1.3080) <= 1e-4, "row (0.3855, 0.0775)");
  c.require(std::abs(composite_reward(0.5769, 0.0769) - 1.5000) <= 1e-4, "row (0.5769, 0.0769)");
  return c;
}

Check ac6_jsr() {
  Check c;
  std::mt19937_64 rng(106);
  std::uniform_real_distribution<double> ul(0.0, 2.0), uc(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, 9);
  std::vector<JsrPoint> pts;
  std::vector<oracle::Point> ops;
  for (int i = 0; i < 1000; ++i) {
    double l2 = ul(rng), cons = uc(rng);
    const int b = pick(rng);
    if (b == 0) l2 = 0.8;
    if (b == 1) cons = 0.3;
    pts.push_back({l2, cons});
    ops.push_back({l2, cons});
  }
  c.require(joint_success_rate(pts) == oracle::jsr(ops, 0.8, 0.3), "JSR differs from the filter-count oracle");
  c.require(joint_success_rate({{0.8, 1.0}}) == 0.0, "l2 = 0.8 must fail");
  c.require(joint_success_rate({{0.0, 0.3}}) == 0.0, "consistency = 0.3 must fail");
  c.require(joint_success_rate({{std::nextafter(0.8, 0.0), std::nextafter(0.3, 1.0)}}) == 1.0,
            "just inside both thresholds must pass");
  return c;
}

Check ac7_dataset() {
  Check c;
  const auto ps = corpus::random_annotated(100, 107);
  const auto res = filter_ambiguous(ps, FilterConfig{});
  c.require(res.n_anchors == 100, "fixture should have 100 anchors");
  c.require(res.discarded_anchors.size() == 15, "discarded " + std::to_string(res.discarded_anchors.size()));
  std::map<std::string, std::vector<oracle::Vec>> rows;
  for (const auto& p : ps) rows[p.pair().anchor_id].push_back(testutil::to_vec(p.v_chosen()));
  std::map<std::string, double> amb;
  for (const auto& [id, r] : rows) amb[id] = oracle::mean_variance(r);
  c.require(std::set<std::string>(res.discarded_anchors.begin(), res.discarded_anchors.end()) ==
                oracle::discard_set(amb, 15),
            "discarded anchors differ from the oracle");

  for (double eps : {0.25, 0.5, 1.0, 1.5}) {
    const auto kept = filter_negligible_delta(ps, eps);
    std::size_t expect = 0;
    for (const auto& p : ps)
      expect += !(oracle::l2(testutil::to_vec(p.v_chosen()), testutil::to_vec(p.v_rejected())) < eps);
    c.require(kept.size() == expect, "negligible-delta count mismatch at eps " + std::to_string(eps));
  }
  c.require(emit_triples(res.kept).size() == 2 * res.kept.size(), "triples != 2 x pairs");
  return c;
}

class CountingGenerator final : public Generator {
 public:
  std::string identity() const override { return "acceptance/gen@1"; }
  std::vector<std::string> rewrite(std::string_view, std::string_view, const ValueVector&, int n, double,
                                   std::uint64_t) override {
    return std::vector<std::string>(static_cast<std::size_t>(n), "x");
  }
  std::vector<std::string> generate(std::string_view, int n, double, std::uint64_t) override {
    return std::vector<std::string>(static_cast<std::size_t>(n), "answer");
  }
};

Check ac8_win_rate() {
  Check c;
  CountingGenerator gen;
  ScriptedJudge judge({"Final verdict: 1", "1", "...so 2.", "unsure"});
  EvalConfig cfg;
  cfg.n_samples = 4;
  const auto r = run_question(gen, judge, EvalQuestion{"q", "Q", "ref", EvalDimension::GenderRoles}, cfg, 0);
  c.require(r.n_valid == 3 && r.wins == 2, "expected 2 wins of 3 valid");
  c.require(r.win_rate && std::abs(*r.win_rate - 2.0 / 3.0) <= 1e-15, "win rate != 2/3");

  ScriptedJudge all_one({"1"});
  const auto one = run_question(gen, all_one, EvalQuestion{"q", "Q", "ref", EvalDimension::GenderRoles}, cfg, 0);
  c.require(one.win_rate && *one.win_rate == 1.0, "always-1 judge must give 1.0");

  const std::vector<DimensionReport> base{{EvalDimension::TraditionalVsSecular, 1, 1, 0, 0.42},
                                          {EvalDimension::SurvivalVsSelfExpression, 1, 1, 0, 0.61},
                                          {EvalDimension::IndividualismVsCollectivism, 1, 1, 0, 0.37},
                                          {EvalDimension::GenderRoles, 1, 1, 0, 0.55}};
  c.require(value_drift(base, base) == 0.0, "value_drift(base, base) != 0");
  return c;
}

Check ac9_steer() {
  Check c;
  auto m = std::make_shared<MockBackend>();
  const BackendSet set{m, m, m, m, m};
  const json cj = json::parse(
      R"({"id":"case-1","prompt":"How should I invest my savings?","original_response":"FACTS:[index funds;emergency fund;diversify] VALUES:[SelfDirection=0.5,Stimulation=0.0,Hedonism=0.0,Achievement=0.5,Power=0.0,Security=0.5,Conformity=0.0,Tradition=0.0,Benevolence=0.0,Universalism=0.0] TEXT:Start with an emergency fund, then diversify with index funds.","delta":{"Security":0.5}})");
  const auto req = steer_request_from_json(cj, 5);
  const auto res = steer(req, set);
  const auto& best = res.candidates[res.best_index];
  c.require(best.reward.r_val >= 1.99, "best r_val " + std::to_string(best.reward.r_val));
  c.require(best.fact.mean == 1.0, "best fact score " + std::to_string(best.fact.mean));

  json zj = cj;
  zj["delta"] = json::object();
  const auto zres = steer(steer_request_from_json(zj, 5), set);
  c.require(zres.v_target == zres.v_orig, "zero delta changed v_target");

  PipelineConfig noisy;
  noisy.noise = 0.3;
  const std::string a = to_json(steer(req, set, noisy)).dump();
  const std::string b = to_json(steer(req, set, noisy)).dump();
  c.require(a == b, "two seeded runs differ");
  return c;
}

Check ac10_golden() {
  Check c;
  for (const auto& [name, req] : golden::cases()) {
    const std::string stored = golden::read_file(golden::path(VISA_GOLDEN_DIR, name));
    c.require(!stored.empty(), "missing fixture " + name);
    c.require(serialize_request(req) == stored, "request body differs from fixture " + name);
  }
  c.require(prompt_text(PromptId::RewriteSystem).find("Fact-Preserving Value Stylist") != std::string_view::npos,
            "rewrite system prompt lacks its title");
  for (auto d : {EvalDimension::TraditionalVsSecular, EvalDimension::SurvivalVsSelfExpression,
                 EvalDimension::IndividualismVsCollectivism, EvalDimension::GenderRoles})
    c.require(prompt_text(judge_prompt_for(d)).find("end your answer with 1") != std::string_view::npos,
              "judge prompt lacks its answer instruction");
  return c;
}

struct Criterion {
  const char* id;
  const char* name;
  double budget_seconds;  // 0 = no runtime bound
  std::function<Check()> run;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"AC1", "reward range and exactness", 1.0, ac1_reward_range},
      {"AC2", "advantage normalization", 1.0, ac2_advantages},
      {"AC3", "clipped surrogate", 1.0, ac3_surrogate},
      {"AC4", "value search convergence", 5.0, ac4_avs},
      {"AC5", "composite reward arithmetic", 0.0, ac5_composite},
      {"AC6", "joint success rate", 0.0, ac6_jsr},
      {"AC7", "dataset filtering", 1.0, ac7_dataset},
      {"AC8", "win rate and drift", 0.0, ac8_win_rate},
      {"AC9", "end-to-end mock steer", 1.0, ac9_steer},
      {"AC10", "prompt golden files", 0.0, ac10_golden},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = cr.run();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.ok && cr.budget_seconds > 0 && secs >= cr.budget_seconds) {
      c.ok = false;
      c.detail = "runtime over budget";
    }
    std::printf("[%s] %-5s %-30s %8.3f s%s%s\n", c.ok ? "PASS" : "FAIL", cr.id, cr.name, secs,
                c.detail.empty() ? "" : "  ", c.detail.c_str());
    failed += !c.ok;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
