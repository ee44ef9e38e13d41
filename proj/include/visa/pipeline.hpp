#pragma once

// Steering workflow (translate -> detect -> compose -> rewrite -> score),
// group rollout production for an external trainer, and the rewrite metric
// suite.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "visa/backends.hpp"
#include "visa/json_io.hpp"
#include "visa/scoring.hpp"

namespace visa {

struct SteerRequest {
  std::string id;
  std::string prompt;
  std::string original_response;
  std::optional<std::string> instruction;
  std::optional<ValueDelta> explicit_delta;
  int group_size = 8;
  std::uint64_t seed = 0;

  /// Exactly one of instruction / explicit_delta; group_size >= 1.
  void validate() const;
};

/// {id, prompt, original_response, instruction?, delta?, group_size?, seed?}.
/// A missing seed defaults to `default_seed`, a missing group size to
/// `default_group_size`.
SteerRequest steer_request_from_json(const json& j, std::uint64_t default_seed, int default_group_size = 8);

struct PipelineConfig {
  /// Per-coordinate std of the generator's value noise.
  double noise = 0.0;
  double cosine_eps = kCosineEps;
  double adv_eps = 1e-8;
  /// Upper bound on concurrent records; the backends' own limit also applies.
  int parallelism = 1;

  void validate() const;
};

struct ScoredCandidate {
  std::string text;
  ValueVector v_pred;
  FactScore fact;
  RewardBreakdown reward;
};

/// Detects v_pred on the candidate and combines the value and consistency
/// rewards.
ScoredCandidate score_candidate(std::string_view prompt, std::string_view original, std::string candidate,
                                const ValueVector& v_target, Detector& detector, FactAnalyzer& fact_analyzer,
                                double cosine_eps = kCosineEps);

struct SteerResult {
  std::string id;
  ValueVector v_orig;
  ValueDelta delta;
  ValueVector v_target;
  std::vector<ScoredCandidate> candidates;
  std::size_t best_index = 0;
};

/// Index of the maximal r_total; the lowest index wins ties.
std::size_t best_candidate_index(const std::vector<ScoredCandidate>& candidates);

SteerResult steer(const SteerRequest& req, const BackendSet& backends, const PipelineConfig& cfg = {});
json to_json(const SteerResult& r);

struct GroupRollout {
  std::string input_id;
  std::string prompt;
  std::string original_response;
  ValueVector v_target;
  std::vector<ScoredCandidate> candidates;
  AdvantageSet advantages;
};

/// Attaches group advantages to a scored group (G >= 2).
GroupRollout make_rollout(const SteerRequest& req, SteerResult result, double adv_eps);

/// {input_id, prompt, original_response, v_target, candidates:[{text, v_pred,
/// r_val, r_cons, r_total, advantage}]}
json to_json(const GroupRollout& r);

struct RecordFailure {
  std::string id;
  std::string message;
};

struct RolloutBatch {
  std::vector<GroupRollout> rollouts;  // input order, failures removed
  std::vector<RecordFailure> failures;
};

/// Records are processed concurrently; a failing record is reported and
/// skipped. Throws only when every record fails.
RolloutBatch produce_rollouts(const std::vector<SteerRequest>& batch, const BackendSet& backends,
                              const PipelineConfig& cfg = {});
std::string rollouts_to_jsonl(const RolloutBatch& batch);

// ---------------------------------------------------------------------------
// Metrics

struct EvalRecord {
  std::string id;
  std::string prompt;
  std::string original;
  std::string rewritten;
  ValueVector v_target;
};

/// {id, prompt?, original_response, rewritten_response, v_target}
EvalRecord eval_record_from_json(const json& j);

struct RecordMetrics {
  std::string id;
  FactScore fact;
  ValueVector v_pred;
  double l2 = 0.0;
  double cos = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

MeanStd mean_std(const std::vector<double>& xs);

struct DimensionStats {
  ValueCoeffs<double> per_dimension = ValueCoeffs<double>::Zero();
  double mad = 0.0;
};

/// Per dimension, the mean absolute deviation from that dimension's mean;
/// mad is their average.
DimensionStats dimension_stats(const std::vector<ValueVector>& vectors);

inline constexpr double kJsrL2Threshold = 0.8;
inline constexpr double kJsrConsistencyThreshold = 0.3;

struct JsrPoint {
  double l2 = 0.0;
  double consistency = 0.0;
};

/// Fraction with l2 < l2_threshold and consistency > cons_threshold.
double joint_success_rate(const std::vector<JsrPoint>& points, double l2_threshold = kJsrL2Threshold,
                          double cons_threshold = kJsrConsistencyThreshold);

struct MetricsReport {
  MeanStd consistency;
  MeanStd consistency_fwd;
  MeanStd consistency_bwd;
  MeanStd value_l2;
  MeanStd value_cos;
  double jsr = 0.0;
  DimensionStats dimensions;
  std::size_t n_records = 0;
  std::size_t n_valid = 0;
  std::vector<RecordMetrics> records;  // sorted by id
  std::vector<RecordFailure> failures;
};

MetricsReport evaluate_batch(const std::vector<EvalRecord>& records, const BackendSet& backends,
                             const PipelineConfig& cfg = {});

/// Aggregates already-computed per-record metrics (sorted by id first).
MetricsReport aggregate_metrics(std::vector<RecordMetrics> records);

json to_json(const MetricsReport& r);
/// Mean and std of consistency, forward, backward, value L2 and cosine.
std::string metrics_csv_header();
std::string metrics_csv_row(const MetricsReport& r);

}  // namespace visa
