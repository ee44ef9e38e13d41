#include "visa/pipeline.hpp"

#include <algorithm>
#include <numeric>
#include <optional>

#include "visa/mock_backend.hpp"
#include "visa/parallel.hpp"

namespace visa {

void SteerRequest::validate() const {
  if (instruction.has_value() == explicit_delta.has_value())
    throw ValidationError("steer request '" + id + "' needs exactly one of instruction or delta");
  if (group_size < 1) throw ValidationError("steer request '" + id + "': group_size must be >= 1");
  if (original_response.empty()) throw ValidationError("steer request '" + id + "': empty original_response");
}

SteerRequest steer_request_from_json(const json& j, std::uint64_t default_seed, int default_group_size) {
  if (!j.is_object()) throw ValidationError("steer request must be a JSON object");
  SteerRequest r;
  r.id = optional_string(j, "id");
  r.prompt = optional_string(j, "prompt");
  r.original_response = require_string(j, "original_response");
  if (j.contains("instruction") && !j["instruction"].is_null()) r.instruction = require_string(j, "instruction");
  if (j.contains("delta") && !j["delta"].is_null()) r.explicit_delta = value_delta_from_json(j["delta"]);
  r.group_size = default_group_size;
  if (j.contains("group_size")) {
    if (!j["group_size"].is_number_integer()) throw ValidationError("group_size must be an integer");
    r.group_size = j["group_size"].get<int>();
  }
  r.seed = default_seed;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ValidationError("seed must be a non-negative integer");
    r.seed = j["seed"].get<std::uint64_t>();
  }
  r.validate();
  return r;
}

void PipelineConfig::validate() const {
  if (!(noise >= 0.0)) throw ConfigError("noise must be >= 0");
  if (!(cosine_eps > 0.0)) throw ConfigError("cosine_eps must be > 0");
  if (!(adv_eps > 0.0)) throw ConfigError("adv_eps must be > 0");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

ScoredCandidate score_candidate(std::string_view prompt, std::string_view original, std::string candidate,
                                const ValueVector& v_target, Detector& detector, FactAnalyzer& fact_analyzer,
                                double cosine_eps) {
  ScoredCandidate c;
  c.v_pred = detector.detect(prompt, candidate);
  c.fact = fact_analyzer.fact_score(original, candidate);
  const double r_val = value_reward(c.v_pred, v_target, cosine_eps);
  const double r_cons = consistency_reward(c.fact.mean, fact_analyzer.identity());
  c.reward = RewardBreakdown::make(r_val, r_cons);
  c.text = std::move(candidate);
  return c;
}

std::size_t best_candidate_index(const std::vector<ScoredCandidate>& candidates) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].reward.r_total > candidates[best].reward.r_total) best = i;
  return best;
}

namespace {

template <typename T>
T& require_role(const std::shared_ptr<T>& p, BackendRole role) {
  if (!p) throw ConfigError("no backend configured for role " + std::string(role_name(role)));
  return *p;
}

}  // namespace

SteerResult steer(const SteerRequest& req, const BackendSet& backends, const PipelineConfig& cfg) {
  req.validate();
  cfg.validate();
  Detector& detector = require_role(backends.detector, BackendRole::Detector);
  Generator& generator = require_role(backends.generator, BackendRole::Generator);
  FactAnalyzer& analyzer = require_role(backends.fact_analyzer, BackendRole::FactAnalyzer);

  SteerResult out;
  out.id = req.id;
  if (req.explicit_delta) {
    out.delta = *req.explicit_delta;
  } else {
    Translator& translator = require_role(backends.translator, BackendRole::Translator);
    try {
      out.delta = translator.translate(req.prompt, req.original_response, *req.instruction);
    } catch (const Error&) {
      rethrow_with_context("translate");
    }
  }
  try {
    out.v_orig = detector.detect(req.prompt, req.original_response);
  } catch (const Error&) {
    rethrow_with_context("detect original");
  }
  out.v_target = clip_compose(out.v_orig, out.delta);

  std::vector<std::string> texts;
  try {
    texts = generator.rewrite(req.prompt, req.original_response, out.v_target, req.group_size, cfg.noise, req.seed);
  } catch (const Error&) {
    rethrow_with_context("rewrite");
  }
  if (texts.size() != static_cast<std::size_t>(req.group_size))
    throw BackendError("rewrite returned " + std::to_string(texts.size()) + " candidates, expected " +
                       std::to_string(req.group_size));

  out.candidates.reserve(texts.size());
  for (std::size_t j = 0; j < texts.size(); ++j) {
    try {
      out.candidates.push_back(score_candidate(req.prompt, req.original_response, std::move(texts[j]), out.v_target,
                                               detector, analyzer, cfg.cosine_eps));
    } catch (const Error&) {
      rethrow_with_context("score candidate " + std::to_string(j));
    }
  }
  out.best_index = best_candidate_index(out.candidates);
  return out;
}

namespace {

json candidate_json(const ScoredCandidate& c) {
  return json{{"text", c.text},
              {"v_pred", to_json(c.v_pred)},
              {"r_val", c.reward.r_val},
              {"r_cons", c.reward.r_cons},
              {"r_total", c.reward.r_total}};
}

}  // namespace

json to_json(const SteerResult& r) {
  json cands = json::array();
  for (const auto& c : r.candidates) {
    json j = candidate_json(c);
    j["consistency_fwd"] = c.fact.forward;
    j["consistency_bwd"] = c.fact.backward;
    cands.push_back(std::move(j));
  }
  return json{{"id", r.id},
              {"v_orig", to_json(r.v_orig)},
              {"delta", to_json(r.delta)},
              {"v_target", to_json(r.v_target)},
              {"best_index", r.best_index},
              {"best_text", r.candidates.empty() ? std::string() : r.candidates[r.best_index].text},
              {"candidates", std::move(cands)}};
}

GroupRollout make_rollout(const SteerRequest& req, SteerResult result, double adv_eps) {
  std::vector<double> rewards;
  rewards.reserve(result.candidates.size());
  for (const auto& c : result.candidates) rewards.push_back(c.reward.r_total);
  GroupRollout r;
  r.advantages = group_advantages(rewards, adv_eps);
  r.input_id = req.id;
  r.prompt = req.prompt;
  r.original_response = req.original_response;
  r.v_target = result.v_target;
  r.candidates = std::move(result.candidates);
  return r;
}

json to_json(const GroupRollout& r) {
  json cands = json::array();
  for (std::size_t j = 0; j < r.candidates.size(); ++j) {
    json c = candidate_json(r.candidates[j]);
    c["advantage"] = r.advantages.advantages(static_cast<Eigen::Index>(j));
    cands.push_back(std::move(c));
  }
  return json{{"input_id", r.input_id},
              {"prompt", r.prompt},
              {"original_response", r.original_response},
              {"v_target", to_json(r.v_target)},
              {"candidates", std::move(cands)}};
}

RolloutBatch produce_rollouts(const std::vector<SteerRequest>& batch, const BackendSet& backends,
                              const PipelineConfig& cfg) {
  cfg.validate();
  if (batch.empty()) throw ValidationError("produce_rollouts: empty batch");
  for (const auto& req : batch)
    if (req.group_size < 2) throw ValidationError("rollout '" + req.id + "' needs group_size >= 2");

  std::vector<std::optional<GroupRollout>> slots(batch.size());
  std::vector<std::optional<std::string>> errors(batch.size());
  parallel_for(batch.size(), std::min(cfg.parallelism, backends.parallelism()), [&](std::size_t i) {
    try {
      slots[i] = make_rollout(batch[i], steer(batch[i], backends, cfg), cfg.adv_eps);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  RolloutBatch out;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (slots[i])
      out.rollouts.push_back(std::move(*slots[i]));
    else
      out.failures.push_back({batch[i].id, *errors[i]});
  }
  if (out.rollouts.empty())
    throw BackendError("all " + std::to_string(batch.size()) + " records failed; first: " + out.failures.front().message);
  return out;
}

std::string rollouts_to_jsonl(const RolloutBatch& batch) {
  std::vector<json> lines;
  lines.reserve(batch.rollouts.size());
  for (const auto& r : batch.rollouts) lines.push_back(to_json(r));
  return to_jsonl(lines);
}

// ---------------------------------------------------------------------------

EvalRecord eval_record_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("score record must be a JSON object");
  EvalRecord r;
  r.id = optional_string(j, "id");
  r.prompt = optional_string(j, "prompt");
  r.original = require_string(j, "original_response");
  r.rewritten = require_string(j, "rewritten_response");
  if (!j.contains("v_target")) throw ValidationError("score record '" + r.id + "' is missing v_target");
  r.v_target = value_vector_from_json(j["v_target"]);
  return r;
}

MeanStd mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / n)};
}

DimensionStats dimension_stats(const std::vector<ValueVector>& vectors) {
  if (vectors.empty()) throw ValidationError("dimension_stats: empty input");
  const double n = static_cast<double>(vectors.size());
  ValueCoeffs<double> mean = ValueCoeffs<double>::Zero();
  for (const auto& v : vectors) mean += v.coeffs();
  mean /= n;
  DimensionStats s;
  for (const auto& v : vectors) s.per_dimension += (v.coeffs() - mean).cwiseAbs();
  s.per_dimension /= n;
  s.mad = s.per_dimension.mean();
  return s;
}

double joint_success_rate(const std::vector<JsrPoint>& points, double l2_threshold, double cons_threshold) {
  if (!(l2_threshold > 0.0) || !(cons_threshold > 0.0)) throw ValidationError("JSR thresholds must be positive");
  if (points.empty()) return 0.0;
  const auto hits = std::count_if(points.begin(), points.end(), [&](const JsrPoint& p) {
    return p.l2 < l2_threshold && p.consistency > cons_threshold;
  });
  return static_cast<double>(hits) / static_cast<double>(points.size());
}

MetricsReport aggregate_metrics(std::vector<RecordMetrics> records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const RecordMetrics& a, const RecordMetrics& b) { return a.id < b.id; });
  MetricsReport r;
  std::vector<double> cons, fwd, bwd, l2, cos;
  std::vector<JsrPoint> points;
  std::vector<ValueVector> preds;
  for (const auto& m : records) {
    cons.push_back(m.fact.mean);
    fwd.push_back(m.fact.forward);
    bwd.push_back(m.fact.backward);
    l2.push_back(m.l2);
    cos.push_back(m.cos);
    points.push_back({m.l2, m.fact.mean});
    preds.push_back(m.v_pred);
  }
  r.consistency = mean_std(cons);
  r.consistency_fwd = mean_std(fwd);
  r.consistency_bwd = mean_std(bwd);
  r.value_l2 = mean_std(l2);
  r.value_cos = mean_std(cos);
  r.jsr = joint_success_rate(points);
  if (!preds.empty()) r.dimensions = dimension_stats(preds);
  r.n_records = r.n_valid = records.size();
  r.records = std::move(records);
  return r;
}

MetricsReport evaluate_batch(const std::vector<EvalRecord>& records, const BackendSet& backends,
                             const PipelineConfig& cfg) {
  cfg.validate();
  if (records.empty()) throw ValidationError("evaluate_batch: empty batch");
  Detector& detector = require_role(backends.detector, BackendRole::Detector);
  FactAnalyzer& analyzer = require_role(backends.fact_analyzer, BackendRole::FactAnalyzer);

  std::vector<std::optional<RecordMetrics>> slots(records.size());
  std::vector<std::string> errors(records.size());
  parallel_for(records.size(), std::min(cfg.parallelism, backends.parallelism()), [&](std::size_t i) {
    const EvalRecord& rec = records[i];
    try {
      RecordMetrics m;
      m.id = rec.id;
      m.fact = analyzer.fact_score(rec.original, rec.rewritten);
      consistency_reward(m.fact.mean, analyzer.identity());
      m.v_pred = detector.detect(rec.prompt, rec.rewritten);
      m.l2 = l2_distance(m.v_pred, rec.v_target);
      m.cos = cosine_similarity(m.v_pred, rec.v_target, cfg.cosine_eps);
      slots[i] = std::move(m);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });

  std::vector<RecordMetrics> ok;
  std::vector<RecordFailure> failures;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (slots[i])
      ok.push_back(std::move(*slots[i]));
    else
      failures.push_back({records[i].id, errors[i]});
  }
  if (ok.empty()) throw BackendError("evaluate_batch: every record failed; first: " + failures.front().message);
  MetricsReport r = aggregate_metrics(std::move(ok));
  r.n_records = records.size();
  r.failures = std::move(failures);
  return r;
}

namespace {

json mean_std_json(const MeanStd& m) { return json{{"mean", m.mean}, {"std", m.std}}; }

}  // namespace

json to_json(const MetricsReport& r) {
  json per_dim = json::object();
  for (ValueDimension d : kAllDimensions)
    per_dim[std::string(dimension_name(d))] = r.dimensions.per_dimension(index_of(d));
  json records = json::array();
  for (const auto& m : r.records)
    records.push_back(json{{"id", m.id},
                           {"consistency", m.fact.mean},
                           {"consistency_fwd", m.fact.forward},
                           {"consistency_bwd", m.fact.backward},
                           {"value_l2", m.l2},
                           {"value_cos", m.cos},
                           {"v_pred", to_json(m.v_pred)}});
  json failures = json::array();
  for (const auto& f : r.failures) failures.push_back(json{{"id", f.id}, {"error", f.message}});
  return json{{"consistency", mean_std_json(r.consistency)},
              {"consistency_fwd", mean_std_json(r.consistency_fwd)},
              {"consistency_bwd", mean_std_json(r.consistency_bwd)},
              {"value_l2", mean_std_json(r.value_l2)},
              {"value_cos", mean_std_json(r.value_cos)},
              {"jsr", r.jsr},
              {"jsr_thresholds", json{{"l2", kJsrL2Threshold}, {"consistency", kJsrConsistencyThreshold}}},
              {"per_dimension_deviation", std::move(per_dim)},
              {"mad", r.dimensions.mad},
              {"std_convention", "population"},
              {"n_records", r.n_records},
              {"n_valid", r.n_valid},
              {"n_failed", r.failures.size()},
              {"records", std::move(records)},
              {"failures", std::move(failures)}};
}

std::string metrics_csv_header() {
  return "consistency_mean,consistency_std,consistency_fwd_mean,consistency_fwd_std,consistency_bwd_mean,"
         "consistency_bwd_std,value_l2_mean,value_l2_std,value_cos_mean,value_cos_std";
}

std::string metrics_csv_row(const MetricsReport& r) {
  std::string row;
  for (const MeanStd* m : {&r.consistency, &r.consistency_fwd, &r.consistency_bwd, &r.value_l2, &r.value_cos}) {
    if (!row.empty()) row += ',';
    row += format_real(m->mean) + "," + format_real(m->std);
  }
  return row;
}

}  // namespace visa
