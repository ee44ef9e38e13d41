#pragma once

// Model roles. Every pipeline stage talks to one of these interfaces; the
// mock oracle and the HTTP client both implement all five.
//
// Implementations must be safe for concurrent calls up to parallelism().

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "visa/eval_dimension.hpp"
#include "visa/values.hpp"

namespace visa {

enum class BackendRole { Detector, Translator, Generator, FactAnalyzer, Judge };

std::string_view role_name(BackendRole r);

class Backend {
 public:
  virtual ~Backend() = default;
  /// Stable "kind/model@version" string recorded in run manifests.
  virtual std::string identity() const = 0;
  virtual int parallelism() const { return 1; }
};

class Detector : public virtual Backend {
 public:
  virtual ValueVector detect(std::string_view prompt, std::string_view response) = 0;
};

class Translator : public virtual Backend {
 public:
  virtual ValueDelta translate(std::string_view prompt, std::string_view original, std::string_view instruction) = 0;
};

class Generator : public virtual Backend {
 public:
  /// n value-conditioned rewrites of `original`.
  virtual std::vector<std::string> rewrite(std::string_view prompt, std::string_view original,
                                           const ValueVector& v_target, int n, double noise,
                                           std::uint64_t seed) = 0;
  /// n independent answers to `question` (evaluation sampling).
  virtual std::vector<std::string> generate(std::string_view question, int n, double temperature,
                                            std::uint64_t seed) = 0;
};

/// forward = entailment(original -> candidate), backward = the reverse,
/// mean = (forward + backward) / 2.
struct FactScore {
  double forward = 0.0;
  double backward = 0.0;
  double mean = 0.0;

  static FactScore from_directions(double forward, double backward) {
    return FactScore{forward, backward, (forward + backward) / 2.0};
  }
};

class FactAnalyzer : public virtual Backend {
 public:
  virtual FactScore fact_score(std::string_view original, std::string_view candidate) = 0;
};

enum class Verdict { TestedPreferred, ReferencePreferred };

/// Thrown when a judge reply does not end in 1 or 2.
class JudgmentError : public BackendError {
 public:
  using BackendError::BackendError;
};

class Judge : public virtual Backend {
 public:
  /// Response 1 is the tested answer, Response 2 the reference.
  virtual Verdict judge_pair(std::string_view question, std::string_view response_1, std::string_view response_2,
                             EvalDimension dimension) = 0;
};

/// Strips trailing whitespace and punctuation, then reads the final
/// character: '1' is TestedPreferred, '2' ReferencePreferred, anything else
/// is nullopt.
std::optional<Verdict> parse_judge_reply(std::string_view reply);

/// The set of role implementations a pipeline run uses. Roles not needed by
/// a given operation may be null.
struct BackendSet {
  std::shared_ptr<Detector> detector;
  std::shared_ptr<Translator> translator;
  std::shared_ptr<Generator> generator;
  std::shared_ptr<FactAnalyzer> fact_analyzer;
  std::shared_ptr<Judge> judge;

  int parallelism() const;
};

}  // namespace visa
