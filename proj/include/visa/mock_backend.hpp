#pragma once

// Deterministic oracle backend over a structured text grammar:
//
//   FACTS:[a;b;c] VALUES:[SelfDirection=0.5,Stimulation=0.0,...] TEXT:free text
//
// The detector reads VALUES back exactly, the fact analyzer does set
// arithmetic on FACTS, and the generator copies facts while writing the
// target vector (plus optional seeded Gaussian noise) into VALUES.

#include <atomic>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "visa/backends.hpp"

namespace visa {

struct MockText {
  std::vector<std::string> facts;  // ordered, no duplicates
  ValueVector values;
  std::optional<std::string> free_text;

  friend bool operator==(const MockText&, const MockText&) = default;
};

/// Renders all ten dimensions with shortest round-trip number formatting.
/// Throws ValidationError for facts containing ';', ']' or surrounding
/// whitespace, or duplicated facts.
std::string render_mock_text(const MockText& m);

/// Lenient: missing FACTS or VALUES blocks read as empty / zero, text that
/// does not start with a block keyword is all free text. Values outside
/// [-1, 1] are clamped.
MockText parse_mock_text(std::string_view text);

/// Shortest decimal that round-trips, always with a fractional part ("0.0").
std::string format_real(double x);

/// The keyword table behind the mock translator. Exposed for tests and docs.
ValueDelta mock_translate(std::string_view instruction);

/// Scalar projection of a value vector onto one evaluation axis; higher means
/// more secular / self-expressive / individualist / progressive.
double mock_axis_score(const ValueVector& v, EvalDimension d);

struct MockConfig {
  /// Value profile the mock "tested model" answers with in generate().
  ValueVector profile;
  /// Per-coordinate std of the Gaussian perturbation in generate().
  double generation_noise = 0.0;
  int parallelism = 1;
};

class MockBackend final : public Detector,
                          public Translator,
                          public Generator,
                          public FactAnalyzer,
                          public Judge {
 public:
  explicit MockBackend(MockConfig cfg = {}) : cfg_(std::move(cfg)) {}

  std::string identity() const override { return "mock/oracle@1"; }
  int parallelism() const override { return cfg_.parallelism; }

  ValueVector detect(std::string_view prompt, std::string_view response) override;
  ValueDelta translate(std::string_view prompt, std::string_view original, std::string_view instruction) override;
  std::vector<std::string> rewrite(std::string_view prompt, std::string_view original, const ValueVector& v_target,
                                   int n, double noise, std::uint64_t seed) override;
  std::vector<std::string> generate(std::string_view question, int n, double temperature, std::uint64_t seed) override;
  FactScore fact_score(std::string_view original, std::string_view candidate) override;
  Verdict judge_pair(std::string_view question, std::string_view response_1, std::string_view response_2,
                     EvalDimension dimension) override;

  /// The raw reply the mock judge would send; ends in "1" when response_1
  /// scores strictly higher on the axis, otherwise "2".
  static std::string judge_reply(std::string_view response_1, std::string_view response_2, EvalDimension dimension);

 private:
  MockConfig cfg_;
};

/// Replays a fixed list of raw judge replies in order, cycling when
/// exhausted. Useful for exercising the reply parser and win-rate counting.
class ScriptedJudge final : public Judge {
 public:
  explicit ScriptedJudge(std::vector<std::string> replies) : replies_(std::move(replies)) {}

  std::string identity() const override { return "mock/scripted@1"; }

  Verdict judge_pair(std::string_view question, std::string_view response_1, std::string_view response_2,
                     EvalDimension dimension) override;

 private:
  std::vector<std::string> replies_;
  std::atomic<std::size_t> next_{0};
};

}  // namespace visa
