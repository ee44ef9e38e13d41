#include "visa/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "visa/mock_backend.hpp"
#include "visa/parallel.hpp"

namespace visa {

void EvalQuestion::validate() const {
  if (question.empty()) throw ValidationError("question '" + question_id + "' has empty text");
  if (reference_answer.empty()) throw ValidationError("question '" + question_id + "' has an empty reference answer");
}

EvalQuestion eval_question_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("eval question must be a JSON object");
  EvalQuestion q;
  q.question_id = require_string(j, "question_id");
  q.question = require_string(j, "question");
  q.reference_answer = require_string(j, "reference_answer");
  const std::string dim = require_string(j, "dimension");
  const auto d = parse_eval_dimension(dim);
  if (!d) throw ValidationError("question '" + q.question_id + "': unknown dimension '" + dim + "'");
  q.dimension = *d;
  q.validate();
  return q;
}

void EvalConfig::validate() const {
  if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
  if (!(gen_temperature >= 0.0) || !(judge_temperature >= 0.0)) throw ConfigError("temperatures must be >= 0");
  if (parallelism < 1) throw ConfigError("parallelism must be >= 1");
}

QuestionResult run_question(Generator& model, Judge& judge, const EvalQuestion& q, const EvalConfig& cfg,
                            std::uint64_t seed) {
  cfg.validate();
  q.validate();
  QuestionResult res;
  res.question = q;
  std::vector<std::string> answers;
  try {
    answers = model.generate(q.question, cfg.n_samples, cfg.gen_temperature, seed);
  } catch (const Error&) {
    rethrow_with_context("question '" + q.question_id + "' generation");
  }
  if (answers.size() != static_cast<std::size_t>(cfg.n_samples))
    throw BackendError("question '" + q.question_id + "': generator returned " + std::to_string(answers.size()) +
                       " answers, expected " + std::to_string(cfg.n_samples));

  for (std::size_t i = 0; i < answers.size(); ++i) {
    Judgment j;
    j.sample_index = i;
    j.response = std::move(answers[i]);
    try {
      if (cfg.swap_positions) {
        const Verdict v = judge.judge_pair(q.question, q.reference_answer, j.response, q.dimension);
        j.verdict = v == Verdict::TestedPreferred ? Verdict::ReferencePreferred : Verdict::TestedPreferred;
      } else {
        j.verdict = judge.judge_pair(q.question, j.response, q.reference_answer, q.dimension);
      }
    } catch (const BackendError& e) {
      j.error = e.what();
    }
    if (j.verdict) {
      ++res.n_valid;
      if (*j.verdict == Verdict::TestedPreferred) ++res.wins;
    }
    res.judgments.push_back(std::move(j));
  }
  if (res.n_valid > 0) res.win_rate = static_cast<double>(res.wins) / static_cast<double>(res.n_valid);
  return res;
}

std::vector<QuestionResult> run_questions(Generator& model, Judge& judge, const std::vector<EvalQuestion>& questions,
                                          const EvalConfig& cfg) {
  cfg.validate();
  std::vector<QuestionResult> out(questions.size());
  const int par = std::min({cfg.parallelism, model.parallelism(), judge.parallelism()});
  parallel_for(questions.size(), par, [&](std::size_t i) {
    const std::uint64_t seed = cfg.seed + 0x9E3779B97F4A7C15ULL * (i + 1);
    try {
      out[i] = run_question(model, judge, questions[i], cfg, seed);
    } catch (const Error& e) {
      out[i].question = questions[i];
      out[i].error = e.what();
    }
  });
  return out;
}

Aggregate aggregate(const std::vector<QuestionResult>& results, AggregationMode mode) {
  struct Acc {
    std::size_t n_questions = 0, n_valid = 0, wins = 0;
    double rate_sum = 0.0;
  };
  std::map<EvalDimension, Acc> acc;
  std::map<EvalDimension, bool> seen;
  for (const auto& r : results) {
    seen[r.question.dimension] = true;
    if (!r.win_rate) continue;
    Acc& a = acc[r.question.dimension];
    ++a.n_questions;
    a.n_valid += r.n_valid;
    a.wins += r.wins;
    a.rate_sum += *r.win_rate;
  }
  Aggregate out;
  for (EvalDimension d : kAllEvalDimensions) {
    auto it = acc.find(d);
    if (it == acc.end()) {
      if (seen.count(d))
        out.warnings.push_back("dimension " + std::string(eval_dimension_name(d)) +
                               " has no question with a valid judgment; omitted");
      continue;
    }
    const Acc& a = it->second;
    DimensionReport rep{d, a.n_questions, a.n_valid, a.wins, 0.0};
    rep.win_rate = mode == AggregationMode::Pooled ? static_cast<double>(a.wins) / static_cast<double>(a.n_valid)
                                                   : a.rate_sum / static_cast<double>(a.n_questions);
    out.dimensions.push_back(rep);
  }
  return out;
}

double value_drift(const std::vector<DimensionReport>& tested, const std::vector<DimensionReport>& base) {
  std::map<EvalDimension, double> t, b;
  for (const auto& r : tested) t[r.dimension] = r.win_rate;
  for (const auto& r : base) b[r.dimension] = r.win_rate;
  if (t.size() != tested.size() || b.size() != base.size())
    throw ValidationError("value_drift: duplicated dimension in a report set");
  if (t.empty()) throw ValidationError("value_drift: empty report set");
  double sum = 0.0;
  for (const auto& [d, rate] : t) {
    auto it = b.find(d);
    if (it == b.end())
      throw ValidationError("value_drift: base reports lack dimension " + std::string(eval_dimension_name(d)));
    sum += std::abs(rate - it->second);
  }
  if (b.size() != t.size()) throw ValidationError("value_drift: tested and base cover different dimensions");
  return sum / static_cast<double>(t.size());
}

json to_json(const DimensionReport& r) {
  return json{{"dimension", eval_dimension_name(r.dimension)},
              {"n_questions", r.n_questions},
              {"n_valid_judgments", r.n_valid_judgments},
              {"wins", r.wins},
              {"win_rate", r.win_rate}};
}

DimensionReport dimension_report_from_json(const json& j) {
  DimensionReport r;
  const std::string name = require_string(j, "dimension");
  const auto d = parse_eval_dimension(name);
  if (!d) throw ValidationError("unknown dimension '" + name + "'");
  r.dimension = *d;
  r.win_rate = require_number(j, "win_rate");
  if (!(r.win_rate >= 0.0 && r.win_rate <= 1.0)) throw ValidationError("win_rate outside [0, 1] for " + name);
  if (j.contains("n_questions")) r.n_questions = j["n_questions"].get<std::size_t>();
  if (j.contains("n_valid_judgments")) r.n_valid_judgments = j["n_valid_judgments"].get<std::size_t>();
  if (j.contains("wins")) r.wins = j["wins"].get<std::size_t>();
  return r;
}

json to_json(const QuestionResult& r) {
  json judgments = json::array();
  for (const auto& j : r.judgments) {
    json e{{"sample_index", j.sample_index}, {"response", j.response}};
    if (j.verdict)
      e["judge_score"] = *j.verdict == Verdict::TestedPreferred ? 1 : 2;
    else
      e["judge_score"] = nullptr;
    if (!j.error.empty()) e["error"] = j.error;
    judgments.push_back(std::move(e));
  }
  json out{{"question_id", r.question.question_id},
           {"dimension", eval_dimension_name(r.question.dimension)},
           {"wins", r.wins},
           {"n_valid_judgments", r.n_valid},
           {"win_rate", r.win_rate ? json(*r.win_rate) : json(nullptr)},
           {"judgments", std::move(judgments)}};
  if (!r.error.empty()) out["error"] = r.error;
  return out;
}

std::vector<DimensionReport> dimension_reports_from_report(const json& report) {
  const json& dims = report.is_array() ? report : report.value("dimensions", json());
  if (!dims.is_array()) throw ValidationError("eval report has no 'dimensions' array");
  std::vector<DimensionReport> out;
  for (const auto& d : dims) out.push_back(dimension_report_from_json(d));
  return out;
}

std::string dimension_reports_csv(const std::vector<DimensionReport>& reports) {
  std::string out = "dimension,n_questions,n_valid_judgments,wins,win_rate\n";
  for (const auto& r : reports)
    out += std::string(eval_dimension_name(r.dimension)) + ',' + std::to_string(r.n_questions) + ',' +
           std::to_string(r.n_valid_judgments) + ',' + std::to_string(r.wins) + ',' + format_real(r.win_rate) + '\n';
  return out;
}

}  // namespace visa
