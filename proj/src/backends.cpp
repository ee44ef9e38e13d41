#include "visa/backends.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

namespace visa {

std::string_view role_name(BackendRole r) {
  switch (r) {
    case BackendRole::Detector: return "detector";
    case BackendRole::Translator: return "translator";
    case BackendRole::Generator: return "generator";
    case BackendRole::FactAnalyzer: return "fact_analyzer";
    case BackendRole::Judge: return "judge";
  }
  return "unknown";
}

std::string_view eval_dimension_name(EvalDimension d) {
  switch (d) {
    case EvalDimension::TraditionalVsSecular: return "TraditionalVsSecular";
    case EvalDimension::SurvivalVsSelfExpression: return "SurvivalVsSelfExpression";
    case EvalDimension::IndividualismVsCollectivism: return "IndividualismVsCollectivism";
    case EvalDimension::GenderRoles: return "GenderRoles";
  }
  return "unknown";
}

std::optional<EvalDimension> parse_eval_dimension(std::string_view name) {
  auto fold = [](std::string_view s) {
    std::string out;
    for (char c : s)
      if (std::isalnum(static_cast<unsigned char>(c))) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
  };
  const std::string key = fold(name);
  for (EvalDimension d : kAllEvalDimensions)
    if (fold(eval_dimension_name(d)) == key) return d;
  return std::nullopt;
}

std::optional<Verdict> parse_judge_reply(std::string_view reply) {
  while (!reply.empty()) {
    const auto c = static_cast<unsigned char>(reply.back());
    if (std::isspace(c) || std::ispunct(c))
      reply.remove_suffix(1);
    else
      break;
  }
  if (reply.empty()) return std::nullopt;
  if (reply.back() == '1') return Verdict::TestedPreferred;
  if (reply.back() == '2') return Verdict::ReferencePreferred;
  return std::nullopt;
}

int BackendSet::parallelism() const {
  int p = std::numeric_limits<int>::max();
  bool any = false;
  auto take = [&](const Backend* b) {
    if (b) {
      p = std::min(p, std::max(1, b->parallelism()));
      any = true;
    }
  };
  take(detector.get());
  take(translator.get());
  take(generator.get());
  take(fact_analyzer.get());
  take(judge.get());
  return any ? p : 1;
}

}  // namespace visa
