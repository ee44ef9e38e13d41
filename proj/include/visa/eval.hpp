#pragma once

// Value-drift evaluation: sample answers from the tested model, judge each
// against the reference answer on the question's cultural axis, and reduce
// to per-dimension win rates.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "visa/backends.hpp"
#include "visa/json_io.hpp"

namespace visa {

struct EvalQuestion {
  std::string question_id;
  std::string question;
  std::string reference_answer;
  EvalDimension dimension = EvalDimension::TraditionalVsSecular;

  void validate() const;
};

/// {question_id, question, reference_answer, dimension}
EvalQuestion eval_question_from_json(const json& j);

struct EvalConfig {
  int n_samples = 20;
  double gen_temperature = 0.2;
  /// Recorded in reports; the judge backend applies it.
  double judge_temperature = 0.1;
  /// Put the reference first and invert the verdict (position-bias probe).
  bool swap_positions = false;
  std::uint64_t seed = 0;
  int parallelism = 1;

  void validate() const;
};

struct Judgment {
  std::size_t sample_index = 0;
  std::string response;
  std::optional<Verdict> verdict;  // empty when the judgment was invalid
  std::string error;
};

struct QuestionResult {
  EvalQuestion question;
  std::vector<Judgment> judgments;
  std::size_t wins = 0;
  std::size_t n_valid = 0;
  /// wins / n_valid; empty when no judgment was valid.
  std::optional<double> win_rate;
  std::string error;  // set when the question could not be run at all
};

/// Generates cfg.n_samples answers and judges each against the reference.
/// Invalid judgments are kept in the result but excluded from the rate.
QuestionResult run_question(Generator& model, Judge& judge, const EvalQuestion& q, const EvalConfig& cfg,
                            std::uint64_t seed);

/// Runs every question (concurrently up to cfg.parallelism); per-question
/// seeds derive from cfg.seed and the question's position. A question whose
/// generation fails is returned with `error` set.
std::vector<QuestionResult> run_questions(Generator& model, Judge& judge, const std::vector<EvalQuestion>& questions,
                                          const EvalConfig& cfg);

struct DimensionReport {
  EvalDimension dimension = EvalDimension::TraditionalVsSecular;
  std::size_t n_questions = 0;
  std::size_t n_valid_judgments = 0;
  std::size_t wins = 0;
  double win_rate = 0.0;
};

enum class AggregationMode {
  /// Unweighted mean of per-question win rates.
  QuestionMean,
  /// Wins over all valid judgments of the dimension.
  Pooled,
};

struct Aggregate {
  std::vector<DimensionReport> dimensions;  // canonical axis order
  std::vector<std::string> warnings;
};

Aggregate aggregate(const std::vector<QuestionResult>& results, AggregationMode mode = AggregationMode::QuestionMean);

/// Mean over dimensions of |win_rate_tested - win_rate_base|. Both sides
/// must report the same dimensions.
double value_drift(const std::vector<DimensionReport>& tested, const std::vector<DimensionReport>& base);

inline constexpr std::string_view kDriftFormula =
    "mean absolute per-dimension win-rate difference against the base model";

json to_json(const DimensionReport& r);
DimensionReport dimension_report_from_json(const json& j);
json to_json(const QuestionResult& r);
/// Reads the "dimensions" array of an eval report.
std::vector<DimensionReport> dimension_reports_from_report(const json& report);
std::string dimension_reports_csv(const std::vector<DimensionReport>& reports);

}  // namespace visa
