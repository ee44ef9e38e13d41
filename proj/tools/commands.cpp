#include "commands.hpp"

#include <CLI11.hpp>

#include <array>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <unistd.h>

#include "manifest.hpp"
#include "visa/avs.hpp"
#include "visa/dataset.hpp"
#include "visa/eval.hpp"
#include "visa/http_backend.hpp"
#include "visa/mock_backend.hpp"
#include "visa/pipeline.hpp"
#include "visa/report.hpp"

namespace fs = std::filesystem;

namespace visa::cli {

namespace {

constexpr int kUsageExit = 64;  // EX_USAGE
constexpr int kInternalExit = 70;

struct Globals {
  std::string backend = "mock";
  std::uint64_t seed = 0;
  std::string out;
  int parallelism = 1;

  // http
  std::string base_url = "http://localhost:8000/v1";
  std::string model;
  std::string judge_model;
  std::string fact_model;
  double temperature = 0.2;
  int max_tokens = 1024;
  std::string api_key_env = "OPENAI_API_KEY";
  int timeout_ms = 60000;
  int max_retries = 3;
  std::string rewrite_style = "complex";
};

struct Context {
  CLI::App* app = nullptr;
  Globals g;
  /// Resolved options in config-file form; unset optional values are left
  /// out so the text loads back through --config.
  std::string config_snapshot() const {
    std::istringstream in(app->config_to_str(true, false));
    std::string line, out;
    while (std::getline(in, line))
      if (line.size() < 3 || line.compare(line.size() - 3, 3, "=\"\"") != 0) out += line + "\n";
    return out;
  }
};

HttpBackendConfig http_config(const Globals& g, const std::string& model_override = {}) {
  HttpBackendConfig c;
  c.base_url = g.base_url;
  c.model_name = model_override.empty() ? g.model : model_override;
  c.temperature = g.temperature;
  c.max_tokens = g.max_tokens;
  c.api_key_env_var = g.api_key_env;
  c.timeout = std::chrono::milliseconds(g.timeout_ms);
  c.max_retries = g.max_retries;
  c.parallelism = g.parallelism;
  c.rewrite_style = parse_rewrite_style(g.rewrite_style);
  return c;
}

BackendSet make_backends(const Globals& g, MockConfig mock = {}) {
  BackendSet set;
  if (g.backend == "mock") {
    mock.parallelism = g.parallelism;
    auto m = std::make_shared<MockBackend>(mock);
    set = {m, m, m, m, m};
  } else if (g.backend == "http") {
    auto main = std::make_shared<HttpBackend>(http_config(g));
    set = {main, main, main, main, main};
    if (!g.fact_model.empty()) set.fact_analyzer = std::make_shared<HttpBackend>(http_config(g, g.fact_model));
    if (!g.judge_model.empty()) set.judge = std::make_shared<HttpBackend>(http_config(g, g.judge_model));
  } else {
    throw ConfigError("unknown backend '" + g.backend + "' (mock|http)");
  }
  return set;
}

void record_backends(RunManifest& m, const BackendSet& b) {
  if (b.detector) m.backend("detector", b.detector->identity());
  if (b.translator) m.backend("translator", b.translator->identity());
  if (b.generator) m.backend("generator", b.generator->identity());
  if (b.fact_analyzer) m.backend("fact_analyzer", b.fact_analyzer->identity());
  if (b.judge) m.backend("judge", b.judge->identity());
}

json parse_json_arg(const std::string& text, const char* flag) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string(flag) + " is not valid JSON: " + e.what());
  }
}

fs::path require_out(const Globals& g, const char* command) {
  if (g.out.empty()) throw ConfigError(std::string(command) + " needs --out DIR");
  fs::create_directories(g.out);
  return g.out;
}

class Outputs {
 public:
  Outputs(const Globals& g, RunManifest& m) : dir_(g.out), m_(m) {}
  bool enabled() const { return !dir_.empty(); }
  void write(const std::string& name, const std::string& contents) {
    if (!enabled()) return;
    const fs::path p = fs::path(dir_) / name;
    write_text_file(p, contents);
    m_.output(p);
  }
  void finish() const {
    if (enabled()) m_.write(dir_);
  }

 private:
  std::string dir_;
  RunManifest& m_;
};

// ---------------------------------------------------------------------------
// steer

struct SteerOpts {
  std::string in;
  std::string id;
  std::string prompt;
  std::string original;
  std::string instruction;
  std::string delta;
  int group_size = 8;
  double noise = 0.0;
};

int cmd_steer(const Context& ctx, const SteerOpts& o) {
  RunManifest man("steer", ctx.config_snapshot());
  json req = json::object();
  if (!o.in.empty()) {
    req = read_json_file(o.in);
    man.input(o.in);
  }
  if (!o.id.empty()) req["id"] = o.id;
  if (!o.prompt.empty()) req["prompt"] = o.prompt;
  if (!o.original.empty()) req["original_response"] = o.original;
  if (!o.instruction.empty()) {
    req["instruction"] = o.instruction;
    req.erase("delta");
  }
  if (!o.delta.empty()) {
    req["delta"] = parse_json_arg(o.delta, "--delta");
    req.erase("instruction");
  }
  if (!req.contains("group_size")) req["group_size"] = o.group_size;
  const SteerRequest sr = steer_request_from_json(req, ctx.g.seed, o.group_size);

  PipelineConfig pc;
  pc.noise = o.noise;
  pc.parallelism = ctx.g.parallelism;
  const BackendSet b = make_backends(ctx.g);
  const SteerResult res = steer(sr, b, pc);

  man.seed("seed", sr.seed);
  record_backends(man, b);
  man.count("candidates", res.candidates.size());
  man.extra()["noise"] = o.noise;

  const std::string text = to_json(res).dump(2) + "\n";
  Outputs out(ctx.g, man);
  out.write("steer.json", text);
  out.finish();
  std::cout << text;
  return 0;
}

// ---------------------------------------------------------------------------
// rollouts

struct RolloutOpts {
  std::string in;
  int group_size = 8;
  double noise = 0.0;
  double adv_eps = 1e-8;
};

int cmd_rollouts(const Context& ctx, const RolloutOpts& o) {
  RunManifest man("rollouts", ctx.config_snapshot());
  const auto lines = read_jsonl(o.in);
  man.input(o.in);
  std::vector<SteerRequest> batch;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json j = lines[i];
    if (!j.contains("id")) j["id"] = "record-" + std::to_string(i);
    batch.push_back(steer_request_from_json(j, ctx.g.seed + i, o.group_size));
  }
  PipelineConfig pc;
  pc.noise = o.noise;
  pc.adv_eps = o.adv_eps;
  pc.parallelism = ctx.g.parallelism;
  const BackendSet b = make_backends(ctx.g);
  const RolloutBatch rb = produce_rollouts(batch, b, pc);

  man.seed("base_seed", ctx.g.seed);
  record_backends(man, b);
  man.count("records", batch.size());
  man.count("rollouts", rb.rollouts.size());
  man.count("failed", rb.failures.size());
  man.extra()["noise"] = o.noise;
  man.extra()["adv_eps"] = o.adv_eps;
  man.extra()["std_convention"] = "population";

  const std::string jsonl = rollouts_to_jsonl(rb);
  Outputs out(ctx.g, man);
  if (out.enabled()) {
    out.write("rollouts.jsonl", jsonl);
    std::vector<json> fails;
    for (const auto& f : rb.failures) fails.push_back(json{{"id", f.id}, {"error", f.message}});
    out.write("failures.jsonl", to_jsonl(fails));
    out.finish();
  } else {
    std::cout << jsonl;
  }
  for (const auto& f : rb.failures) std::cerr << "visa: record '" << f.id << "' skipped: " << f.message << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct ScoreOpts {
  std::string in;
};

int cmd_score(const Context& ctx, const ScoreOpts& o) {
  RunManifest man("score", ctx.config_snapshot());
  const auto lines = read_jsonl(o.in);
  man.input(o.in);
  std::vector<EvalRecord> records;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json j = lines[i];
    if (!j.contains("id")) j["id"] = "record-" + std::to_string(i);
    records.push_back(eval_record_from_json(j));
  }
  PipelineConfig pc;
  pc.parallelism = ctx.g.parallelism;
  const BackendSet b = make_backends(ctx.g);
  const MetricsReport rep = evaluate_batch(records, b, pc);

  record_backends(man, b);
  man.count("records", rep.n_records);
  man.count("valid", rep.n_valid);
  man.count("failed", rep.failures.size());

  const std::string csv = metrics_csv_header() + "\n" + metrics_csv_row(rep) + "\n";
  Outputs out(ctx.g, man);
  out.write("metrics.json", to_json(rep).dump(2) + "\n");
  out.write("metrics.csv", csv);
  out.finish();
  std::cout << csv;
  for (const auto& f : rep.failures) std::cerr << "visa: record '" << f.id << "' excluded: " << f.message << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// dataset

struct DatasetOpts {
  std::string in;
  double fraction = 0.15;
  double delta_eps = 0.25;
  std::optional<double> tau;
  bool no_quantize = false;
  bool annotate = false;
};

std::vector<AnnotatedPair> load_pairs(const Context& ctx, const DatasetOpts& o, RunManifest& man) {
  const auto lines = read_jsonl(o.in);
  man.input(o.in);
  std::vector<AnnotatedPair> pairs;
  if (o.annotate) {
    std::vector<PreferencePair> raw;
    for (const auto& j : lines) raw.push_back(preference_pair_from_json(j));
    const BackendSet b = make_backends(ctx.g);
    man.backend("detector", b.detector->identity());
    return annotate_pairs(raw, *b.detector, ctx.g.parallelism);
  }
  for (const auto& j : lines) pairs.push_back(annotated_pair_from_json(j, !o.no_quantize));
  return pairs;
}

void write_stats(Outputs& out, const DatasetStats& s) {
  out.write("stats.json", to_json(s).dump(2) + "\n");
  out.write("delta_histogram.csv", delta_histogram_csv(s));
  out.write("score_distribution.csv", score_distribution_csv(s));
}

int cmd_dataset_filter(const Context& ctx, const DatasetOpts& o) {
  require_out(ctx.g, "dataset filter");
  RunManifest man("dataset filter", ctx.config_snapshot());
  FilterConfig fc{o.fraction, o.delta_eps, o.tau};
  fc.validate();
  const auto pairs = load_pairs(ctx, o, man);
  const auto amb = filter_ambiguous(pairs, fc);
  const auto kept = filter_negligible_delta(amb.kept, fc.delta_eps);
  const auto triples = emit_triples(kept);
  const DatasetStats stats = dataset_stats(kept);

  man.extra()["filter"] = to_json(fc);
  man.extra()["quantized_on_ingest"] = !o.no_quantize;
  man.extra()["discarded_anchors"] = amb.discarded_anchors;
  man.count("pairs_in", pairs.size());
  man.count("anchors", amb.n_anchors);
  man.count("anchors_discarded", amb.discarded_anchors.size());
  man.count("pairs_discarded_ambiguous", amb.discarded.size());
  man.count("pairs_discarded_negligible_delta", amb.kept.size() - kept.size());
  man.count("pairs_kept", kept.size());
  man.count("triples", triples.size());

  Outputs out(ctx.g, man);
  std::vector<json> lines;
  for (const auto& t : triples) lines.push_back(to_json(t));
  out.write("triples.jsonl", to_jsonl(lines));
  lines.clear();
  for (const auto& p : kept) lines.push_back(to_json(p));
  out.write("kept.jsonl", to_jsonl(lines));
  write_stats(out, stats);
  out.finish();
  std::cout << "anchors " << amb.n_anchors << ", discarded " << amb.discarded_anchors.size() << " anchors ("
            << amb.discarded.size() << " pairs), dropped " << amb.kept.size() - kept.size()
            << " negligible-delta pairs, kept " << kept.size() << " pairs, " << triples.size() << " triples\n";
  return 0;
}

int cmd_dataset_stats(const Context& ctx, const DatasetOpts& o) {
  RunManifest man("dataset stats", ctx.config_snapshot());
  const auto pairs = load_pairs(ctx, o, man);
  const DatasetStats stats = dataset_stats(pairs);
  man.count("pairs", pairs.size());
  man.count("samples", stats.n_samples);
  man.count("unique_vectors", stats.n_unique_vectors);
  Outputs out(ctx.g, man);
  write_stats(out, stats);
  out.finish();
  std::cout << to_json(stats).dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// avs

struct AvsOpts {
  std::string landscape = "quadratic";
  std::string optimum;
  double constant = 0.0;
  std::string evaluator;
  bool composite = false;
  int k = 16;
  int iters = 50;
  double alpha = 0.5;
  double eps_i = 1e-3;
  std::string mode = "mean_shift";
  bool no_clip = false;
  double init_sigma = 0.25;
  std::string init_mu;
  double tol = 0.0;
};

json coeffs_json(const ValueCoeffs<double>& c) {
  json j = json::object();
  for (ValueDimension d : kAllDimensions) j[std::string(dimension_name(d))] = c(index_of(d));
  return j;
}

/// Runs `cmd` with the candidate's JSON on stdin and reads its reward (or
/// "acc drift" in composite mode) from stdout.
double run_external_evaluator(const std::string& cmd, const ValueCoeffs<double>& v, bool composite) {
  static std::atomic<unsigned> counter{0};
  const fs::path tmp = fs::temp_directory_path() /
                       ("visa-eval-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".json");
  write_text_file(tmp, coeffs_json(v).dump() + "\n");
  const std::string full = cmd + " < '" + tmp.string() + "'";
  std::string output;
  FILE* pipe = ::popen(full.c_str(), "r");
  if (!pipe) {
    fs::remove(tmp);
    throw IoError("cannot start evaluator: " + cmd);
  }
  std::array<char, 4096> buf{};
  std::size_t n;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) output.append(buf.data(), n);
  const int status = ::pclose(pipe);
  fs::remove(tmp);
  if (status != 0) throw BackendError("evaluator exited with status " + std::to_string(status), output);
  std::istringstream in(output);
  double a = 0.0, b = 0.0;
  if (!(in >> a)) throw BackendError("evaluator printed no number", output);
  if (!composite) return a;
  if (!(in >> b)) throw BackendError("composite evaluator must print 'acc drift'", output);
  return composite_reward(a, b);
}

int cmd_avs(const Context& ctx, const AvsOpts& o) {
  RunManifest man("avs", ctx.config_snapshot());
  SearchConfig sc;
  sc.K = o.k;
  sc.T = o.iters;
  sc.alpha = o.alpha;
  sc.eps_I = o.eps_i;
  sc.update_mode = parse_update_mode(o.mode);
  sc.clip_samples = !o.no_clip;
  sc.seed = ctx.g.seed;
  sc.convergence_tol = o.tol;
  sc.init_sigma = o.init_sigma;
  sc.parallelism = ctx.g.parallelism;
  if (!o.init_mu.empty()) sc.init_mu = coeffs_from_json(parse_json_arg(o.init_mu, "--init-mu"));
  sc.validate();

  std::optional<Landscape> land;
  SearchResult res;
  if (!o.evaluator.empty()) {
    man.backend("evaluator", o.evaluator);
    res = run_search<double>(sc, [&](const ValueCoeffs<double>& v) {
      return run_external_evaluator(o.evaluator, v, o.composite);
    });
  } else {
    land = Landscape{parse_landscape(o.landscape), default_landscape_optimum(), o.constant};
    if (!o.optimum.empty()) land->optimum = ValueVector::from(coeffs_from_json(parse_json_arg(o.optimum, "--optimum"))).coeffs();
    man.backend("evaluator", "landscape/" + std::string(landscape_name(land->kind)));
    res = run_search<double>(sc, *land);
  }

  json result{{"best_v", coeffs_json(res.best_v)},
              {"best_reward", res.best_reward},
              {"final_mu", coeffs_json(res.final_dist.mu)},
              {"final_trace_sigma", res.final_dist.trace()},
              {"iterations", res.trace.size()},
              {"converged", res.converged},
              {"config", to_json(sc)}};
  if (land && land->kind != LandscapeKind::Constant) {
    result["optimum"] = coeffs_json(land->optimum);
    result["mu_distance_to_optimum"] = (res.final_dist.mu - land->optimum).norm();
  }
  man.seed("seed", sc.seed);
  man.count("iterations", res.trace.size());
  man.count("evaluations", res.trace.size() * static_cast<std::size_t>(sc.K));

  Outputs out(ctx.g, man);
  out.write("trace.jsonl", trace_to_jsonl(res.trace));
  out.write("trace.csv", trace_csv(res.trace));
  out.write("result.json", result.dump(2) + "\n");
  out.finish();
  std::cout << result.dump(2) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOpts {
  std::string in;
  int n_samples = 20;
  double gen_temp = 0.2;
  double judge_temp = 0.1;
  bool swap = false;
  bool pooled = false;
  std::string mock_profile;
  double mock_noise = 0.0;
  std::string tested;
  std::string base;
};

int cmd_eval_run(const Context& ctx, const EvalOpts& o) {
  RunManifest man("eval run", ctx.config_snapshot());
  const auto lines = read_jsonl(o.in);
  man.input(o.in);
  std::vector<EvalQuestion> questions;
  for (const auto& j : lines) questions.push_back(eval_question_from_json(j));
  if (questions.empty()) throw ValidationError("testbed " + o.in + " has no questions");

  EvalConfig ec;
  ec.n_samples = o.n_samples;
  ec.gen_temperature = o.gen_temp;
  ec.judge_temperature = o.judge_temp;
  ec.swap_positions = o.swap;
  ec.seed = ctx.g.seed;
  ec.parallelism = ctx.g.parallelism;
  ec.validate();

  std::shared_ptr<Generator> model;
  std::shared_ptr<Judge> judge;
  if (ctx.g.backend == "http") {
    model = std::make_shared<HttpBackend>(http_config(ctx.g));
    HttpBackendConfig jc = http_config(ctx.g, ctx.g.judge_model);
    jc.judge_temperature = o.judge_temp;
    judge = std::make_shared<HttpBackend>(jc);
  } else {
    MockConfig mc;
    if (!o.mock_profile.empty()) mc.profile = value_vector_from_json(parse_json_arg(o.mock_profile, "--mock-profile"));
    mc.generation_noise = o.mock_noise;
    const BackendSet b = make_backends(ctx.g, mc);
    model = b.generator;
    judge = b.judge;
  }
  const auto results = run_questions(*model, *judge, questions, ec);
  const Aggregate agg = aggregate(results, o.pooled ? AggregationMode::Pooled : AggregationMode::QuestionMean);
  for (const auto& w : agg.warnings) std::cerr << "visa: warning: " << w << "\n";

  json dims = json::array();
  for (const auto& d : agg.dimensions) dims.push_back(to_json(d));
  json qs = json::array();
  std::size_t flagged = 0;
  for (const auto& r : results) {
    qs.push_back(to_json(r));
    if (!r.win_rate) ++flagged;
  }
  const json provenance{{"model", model->identity()},
                        {"judge", judge->identity()},
                        {"n_samples", o.n_samples},
                        {"generation_temperature", o.gen_temp},
                        {"judge_temperature", o.judge_temp},
                        {"swap_positions", o.swap},
                        {"aggregation", o.pooled ? "pooled" : "question_mean"},
                        {"seed", ctx.g.seed}};
  const json report{{"dimensions", dims}, {"questions", qs}, {"warnings", agg.warnings}, {"provenance", provenance}};

  man.seed("seed", ctx.g.seed);
  man.backend("model", model->identity());
  man.backend("judge", judge->identity());
  man.count("questions", questions.size());
  man.count("questions_flagged", flagged);
  Outputs out(ctx.g, man);
  out.write("report.json", report.dump(2) + "\n");
  out.write("dimensions.csv", dimension_reports_csv(agg.dimensions));
  out.finish();
  std::cout << dimension_reports_csv(agg.dimensions);
  return 0;
}

int cmd_eval_drift(const Context& ctx, const EvalOpts& o) {
  RunManifest man("eval drift", ctx.config_snapshot());
  const auto tested = dimension_reports_from_report(read_json_file(o.tested));
  const auto base = dimension_reports_from_report(read_json_file(o.base));
  man.input(o.tested);
  man.input(o.base);
  const double drift = value_drift(tested, base);
  const json res{{"value_drift", drift}, {"formula", kDriftFormula}, {"tested", o.tested}, {"base", o.base}};
  Outputs out(ctx.g, man);
  out.write("drift.json", res.dump(2) + "\n");
  out.finish();
  std::cout << format_real(drift) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

struct ReportOpts {
  std::string metrics;
  std::string trace;
  std::string eval;
};

int cmd_report(const Context& ctx, const ReportOpts& o) {
  require_out(ctx.g, "report");
  if (o.metrics.empty() && o.trace.empty() && o.eval.empty())
    throw ConfigError("report needs at least one of --metrics, --trace, --eval");
  RunManifest man("report", ctx.config_snapshot());
  Outputs out(ctx.g, man);

  if (!o.metrics.empty()) {
    const json m = read_json_file(o.metrics);
    man.input(o.metrics);
    std::string row;
    for (const char* key : {"consistency", "consistency_fwd", "consistency_bwd", "value_l2", "value_cos"}) {
      if (!row.empty()) row += ',';
      row += format_real(m.at(key).at("mean").get<double>()) + "," + format_real(m.at(key).at("std").get<double>());
    }
    out.write("metrics.csv", metrics_csv_header() + "\n" + row + "\n");
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& [k, v] : m.at("per_dimension_deviation").items()) {
      labels.push_back(k);
      values.push_back(v.get<double>());
    }
    out.write("per_dimension.svg", svg_bar_chart("Per-dimension mean absolute deviation", labels, values));
  }
  if (!o.trace.empty()) {
    const auto lines = read_jsonl(o.trace);
    man.input(o.trace);
    Series tr{"trace(Sigma)", {}}, best{"best so far", {}}, it{"iteration best", {}};
    std::vector<TraceRecord> recs;
    for (const auto& j : lines) {
      TraceRecord r;
      r.iteration = j.at("iteration").get<int>();
      r.trace_sigma = j.at("trace_sigma").get<double>();
      r.min_eigenvalue = j.at("min_eigenvalue").get<double>();
      r.iteration_best = j.at("iteration_best").get<double>();
      r.mean_reward = j.at("mean_reward").get<double>();
      r.best_so_far = j.at("best_so_far").get<double>();
      r.n_positive = j.at("n_positive").get<std::size_t>();
      r.clamp_active = j.at("clamp_active").get<bool>();
      r.mu = coeffs_from_json(j.at("mu"));
      tr.y.push_back(r.trace_sigma);
      best.y.push_back(r.best_so_far);
      it.y.push_back(r.iteration_best);
      recs.push_back(r);
    }
    out.write("trace.csv", trace_csv(recs));
    out.write("trace_sigma.svg", svg_line_chart("Search covariance trace", "iteration", {tr}));
    out.write("best_reward.svg", svg_line_chart("Search reward", "iteration", {best, it}));
  }
  if (!o.eval.empty()) {
    const auto dims = dimension_reports_from_report(read_json_file(o.eval));
    man.input(o.eval);
    std::vector<std::string> labels;
    std::vector<double> values;
    for (const auto& d : dims) {
      labels.emplace_back(eval_dimension_name(d.dimension));
      values.push_back(d.win_rate);
    }
    out.write("dimensions.csv", dimension_reports_csv(dims));
    out.write("win_rates.svg", svg_bar_chart("Win rate by dimension", labels, values, 0.0, 1.0));
  }
  out.finish();
  return 0;
}

const char* kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Config: return "configuration error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::Backend: return "backend error";
    case ErrorKind::Validation: return "validation error";
  }
  return "error";
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Value-steering toolkit: rewrite scoring, rollouts, value search, dataset filtering and drift evaluation.",
               "visa"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML config; keys mirror long flag names, [subcommand] sections for subcommand flags");
  app.set_version_flag("--version", "visa 0.1.0");

  Context ctx;
  ctx.app = &app;
  Globals& g = ctx.g;
  app.option_defaults()->always_capture_default();
  app.add_option("--backend", g.backend, "Model backend")->check(CLI::IsMember({"mock", "http"}));
  app.add_option("--seed", g.seed, "Base RNG seed");
  app.add_option("--out", g.out, "Output directory (receives manifest.json)");
  app.add_option("--parallelism", g.parallelism, "Maximum concurrent backend calls")->check(CLI::PositiveNumber);
  auto* http = "HTTP backend";
  app.add_option("--base-url", g.base_url, "Chat-completions base URL")->group(http);
  app.add_option("--model", g.model, "Model name")->group(http);
  app.add_option("--judge-model", g.judge_model, "Judge model name (default: --model)")->group(http);
  app.add_option("--fact-model", g.fact_model, "Entailment model name (default: --model)")->group(http);
  app.add_option("--temperature", g.temperature, "Sampling temperature for rewrite/detect/translate")
      ->group(http)
      ->check(CLI::NonNegativeNumber);
  app.add_option("--max-tokens", g.max_tokens, "max_tokens per request")->group(http)->check(CLI::PositiveNumber);
  app.add_option("--api-key-env", g.api_key_env, "Environment variable holding the bearer token")->group(http);
  app.add_option("--timeout-ms", g.timeout_ms, "Per-request timeout")->group(http)->check(CLI::PositiveNumber);
  app.add_option("--max-retries", g.max_retries, "Retries after a failed request")->group(http)->check(CLI::NonNegativeNumber);
  app.add_option("--rewrite-style", g.rewrite_style, "Rewrite system prompt")
      ->group(http)
      ->check(CLI::IsMember({"simple", "complex", "think"}));

  SteerOpts steer_o;
  auto* steer_c = app.add_subcommand("steer", "Steer one response: translate, detect, compose, rewrite, score");
  steer_c->add_option("--in", steer_o.in, "JSON case {id?, prompt, original_response, instruction? | delta?}")
      ->check(CLI::ExistingFile);
  steer_c->add_option("--id", steer_o.id, "Record identifier");
  steer_c->add_option("--prompt", steer_o.prompt, "User prompt");
  steer_c->add_option("--original", steer_o.original, "Original response");
  steer_c->add_option("--instruction", steer_o.instruction, "Natural-language steering instruction");
  steer_c->add_option("--delta", steer_o.delta, "Explicit value delta as JSON");
  steer_c->add_option("--group-size", steer_o.group_size, "Candidates G")->check(CLI::PositiveNumber);
  steer_c->add_option("--noise", steer_o.noise, "Generator value noise (mock)")->check(CLI::NonNegativeNumber);

  RolloutOpts roll_o;
  auto* roll_c = app.add_subcommand("rollouts", "Produce scored group rollouts (JSONL) for an external trainer");
  roll_c->add_option("--in", roll_o.in, "JSONL of steer requests")->required()->check(CLI::ExistingFile);
  roll_c->add_option("--group-size", roll_o.group_size, "Candidates per group (>= 2)")->check(CLI::Range(2, 1 << 20));
  roll_c->add_option("--noise", roll_o.noise, "Generator value noise (mock)")->check(CLI::NonNegativeNumber);
  roll_c->add_option("--adv-eps", roll_o.adv_eps, "Advantage denominator guard")->check(CLI::PositiveNumber);

  ScoreOpts score_o;
  auto* score_c = app.add_subcommand("score", "Consistency, L2, cosine, JSR and MAD over rewritten records");
  score_c->add_option("--in", score_o.in, "JSONL {id, prompt, original_response, rewritten_response, v_target}")
      ->required()
      ->check(CLI::ExistingFile);

  DatasetOpts ds_o;
  auto* ds_c = app.add_subcommand("dataset", "Preference-pair corpus tools");
  ds_c->require_subcommand(1);
  auto add_ds_common = [&](CLI::App* c) {
    c->add_option("--in", ds_o.in, "JSONL of preference pairs")->required()->check(CLI::ExistingFile);
    c->add_flag("--no-quantize", ds_o.no_quantize, "Reject off-grid vectors instead of snapping them");
    c->add_flag("--annotate", ds_o.annotate, "Annotate pairs with the detector backend");
  };
  auto* dsf_c = ds_c->add_subcommand("filter", "Ambiguity and negligible-delta filtering, triple emission");
  add_ds_common(dsf_c);
  dsf_c->add_option("--fraction", ds_o.fraction, "Fraction of anchors discarded by ambiguity")
      ->check(CLI::Range(0.0, 1.0));
  dsf_c->add_option("--delta-eps", ds_o.delta_eps, "Minimum L2 shift between chosen and rejected")
      ->check(CLI::PositiveNumber);
  dsf_c->add_option("--tau", ds_o.tau, "Explicit ambiguity threshold (overrides --fraction)");
  auto* dss_c = ds_c->add_subcommand("stats", "Distribution statistics of an annotated corpus");
  add_ds_common(dss_c);

  AvsOpts avs_o;
  auto* avs_c = app.add_subcommand("avs", "Adaptive value search over a landscape or external evaluator");
  avs_c->add_option("--landscape", avs_o.landscape, "Synthetic landscape")
      ->check(CLI::IsMember({"quadratic", "rastrigin", "constant"}));
  avs_c->add_option("--optimum", avs_o.optimum, "Landscape optimum as JSON (default Security=Conformity=0.5)");
  avs_c->add_option("--constant", avs_o.constant, "Reward of the constant landscape");
  avs_c->add_option("--evaluator", avs_o.evaluator, "Shell command: candidate JSON on stdin, reward on stdout");
  avs_c->add_flag("--composite", avs_o.composite, "Evaluator prints 'acc drift'; reward = acc + 1 - drift");
  avs_c->add_option("--k", avs_o.k, "Candidates per iteration")->check(CLI::Range(2, 1 << 20));
  avs_c->add_option("--iters", avs_o.iters, "Maximum iterations")->check(CLI::PositiveNumber);
  avs_c->add_option("--alpha", avs_o.alpha, "Step size")->check(CLI::PositiveNumber);
  avs_c->add_option("--eps-i", avs_o.eps_i, "Covariance floor and per-step inflation")->check(CLI::PositiveNumber);
  avs_c->add_option("--mode", avs_o.mode, "Update rule")->check(CLI::IsMember({"mean_shift", "literal"}));
  avs_c->add_flag("--no-clip", avs_o.no_clip, "Do not clamp samples to [-1, 1]");
  avs_c->add_option("--init-sigma", avs_o.init_sigma, "Initial covariance scale")->check(CLI::PositiveNumber);
  avs_c->add_option("--init-mu", avs_o.init_mu, "Initial mean as JSON (default zero)");
  avs_c->add_option("--tol", avs_o.tol, "Stop when trace(Sigma) < tol; 0 disables")->check(CLI::NonNegativeNumber);

  EvalOpts ev_o;
  auto* ev_c = app.add_subcommand("eval", "Pairwise value-drift evaluation");
  ev_c->require_subcommand(1);
  auto* evr_c = ev_c->add_subcommand("run", "Generate, judge and aggregate win rates");
  evr_c->add_option("--in", ev_o.in, "JSONL testbed {question_id, question, reference_answer, dimension}")
      ->required()
      ->check(CLI::ExistingFile);
  evr_c->add_option("--n-samples", ev_o.n_samples, "Answers per question")->check(CLI::PositiveNumber);
  evr_c->add_option("--gen-temp", ev_o.gen_temp, "Generation temperature")->check(CLI::NonNegativeNumber);
  evr_c->add_option("--judge-temp", ev_o.judge_temp, "Judge temperature")->check(CLI::NonNegativeNumber);
  evr_c->add_flag("--swap", ev_o.swap, "Present the reference as Response 1 and invert verdicts");
  evr_c->add_flag("--pooled", ev_o.pooled, "Pool judgments per dimension instead of averaging questions");
  evr_c->add_option("--mock-profile", ev_o.mock_profile, "Value vector the mock tested model answers with (JSON)");
  evr_c->add_option("--mock-noise", ev_o.mock_noise, "Per-coordinate noise of mock answers")
      ->check(CLI::NonNegativeNumber);
  auto* evd_c = ev_c->add_subcommand("drift", "Mean absolute win-rate difference against a base report");
  evd_c->add_option("--tested", ev_o.tested, "Report of the tested model")->required()->check(CLI::ExistingFile);
  evd_c->add_option("--base", ev_o.base, "Report of the base model")->required()->check(CLI::ExistingFile);

  ReportOpts rep_o;
  auto* rep_c = app.add_subcommand("report", "Render metrics, search traces and win rates to CSV and SVG");
  rep_c->add_option("--metrics", rep_o.metrics, "metrics.json from score")->check(CLI::ExistingFile);
  rep_c->add_option("--trace", rep_o.trace, "trace.jsonl from avs")->check(CLI::ExistingFile);
  rep_c->add_option("--eval", rep_o.eval, "report.json from eval run")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    if (rc == 0) return 0;
    if (std::string(e.what()).find("was not readable") != std::string::npos) return exit_code_for(ErrorKind::Config);
    // a missing input file is an I/O failure rather than a usage error
    if (std::string(e.what()).find("File does not exist") != std::string::npos) return exit_code_for(ErrorKind::Io);
    if (dynamic_cast<const CLI::FileError*>(&e)) return exit_code_for(ErrorKind::Io);
    if (dynamic_cast<const CLI::ConfigError*>(&e)) return exit_code_for(ErrorKind::Config);
    return kUsageExit;
  }

  try {
    if (*steer_c) return cmd_steer(ctx, steer_o);
    if (*roll_c) return cmd_rollouts(ctx, roll_o);
    if (*score_c) return cmd_score(ctx, score_o);
    if (*dsf_c) return cmd_dataset_filter(ctx, ds_o);
    if (*dss_c) return cmd_dataset_stats(ctx, ds_o);
    if (*avs_c) return cmd_avs(ctx, avs_o);
    if (*evr_c) return cmd_eval_run(ctx, ev_o);
    if (*evd_c) return cmd_eval_drift(ctx, ev_o);
    if (*rep_c) return cmd_report(ctx, rep_o);
  } catch (const Error& e) {
    std::cerr << "visa: " << kind_name(e.kind()) << ": " << e.what() << "\n";
    if (const auto* be = dynamic_cast<const BackendError*>(&e); be && !be->raw_output().empty())
      std::cerr << "visa: last backend output: " << be->raw_output().substr(0, 2000) << "\n";
    return exit_code_for(e.kind());
  } catch (const json::exception& e) {
    std::cerr << "visa: validation error: " << e.what() << "\n";
    return exit_code_for(ErrorKind::Validation);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "visa: I/O error: " << e.what() << "\n";
    return exit_code_for(ErrorKind::Io);
  } catch (const std::exception& e) {
    std::cerr << "visa: internal error: " << e.what() << "\n";
    return kInternalExit;
  }
  return kUsageExit;
}

}  // namespace visa::cli
