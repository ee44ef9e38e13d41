#include "visa/prompts.hpp"

#include <cstring>

#include "visa/errors.hpp"

namespace visa {

std::string_view prompt_asset_name(PromptId id) {
  switch (id) {
    case PromptId::RewriteSystem: return "rewrite_system";
    case PromptId::RewriteInput: return "rewrite_input";
    case PromptId::SimpleSystem: return "simple_system";
    case PromptId::ThinkSystem: return "think_system";
    case PromptId::Consistency: return "consistency";
    case PromptId::JudgeSystem: return "judge_system";
    case PromptId::JudgeTraditionalSecular: return "judge_traditional_secular";
    case PromptId::JudgeSurvivalSelfExpression: return "judge_survival_self_expression";
    case PromptId::JudgeIndividualismCollectivism: return "judge_individualism_collectivism";
    case PromptId::JudgeGenderRoles: return "judge_gender_roles";
    case PromptId::DetectorSystem: return "detector_system";
    case PromptId::DetectorInput: return "detector_input";
    case PromptId::TranslatorSystem: return "translator_system";
    case PromptId::TranslatorInput: return "translator_input";
  }
  return {};
}

std::string_view prompt_text(PromptId id) {
  const std::string_view name = prompt_asset_name(id);
  for (std::size_t i = 0; i < detail::kPromptAssetCount; ++i)
    if (name == detail::kPromptAssets[i].name) return detail::kPromptAssets[i].text;
  throw ConfigError("prompt asset '" + std::string(name) + "' was not compiled in");
}

PromptId judge_prompt_for(EvalDimension d) {
  switch (d) {
    case EvalDimension::TraditionalVsSecular: return PromptId::JudgeTraditionalSecular;
    case EvalDimension::SurvivalVsSelfExpression: return PromptId::JudgeSurvivalSelfExpression;
    case EvalDimension::IndividualismVsCollectivism: return PromptId::JudgeIndividualismCollectivism;
    case EvalDimension::GenderRoles: return PromptId::JudgeGenderRoles;
  }
  return PromptId::JudgeTraditionalSecular;
}

PromptId rewrite_system_prompt_for(RewriteStyle style) {
  switch (style) {
    case RewriteStyle::Simple: return PromptId::SimpleSystem;
    case RewriteStyle::Complex: return PromptId::RewriteSystem;
    case RewriteStyle::Think: return PromptId::ThinkSystem;
  }
  return PromptId::RewriteSystem;
}

std::string_view rewrite_style_name(RewriteStyle s) {
  switch (s) {
    case RewriteStyle::Simple: return "simple";
    case RewriteStyle::Complex: return "complex";
    case RewriteStyle::Think: return "think";
  }
  return "complex";
}

RewriteStyle parse_rewrite_style(std::string_view s) {
  if (s == "simple") return RewriteStyle::Simple;
  if (s == "complex") return RewriteStyle::Complex;
  if (s == "think") return RewriteStyle::Think;
  throw ConfigError("unknown rewrite style '" + std::string(s) + "' (simple|complex|think)");
}

std::string render_template(std::string_view tmpl, PromptBindings bindings) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      const std::size_t close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        const std::string_view name = tmpl.substr(i + 1, close - i - 1);
        bool bound = false;
        for (const auto& [key, value] : bindings) {
          if (key == name) {
            out += value;
            bound = true;
            break;
          }
        }
        if (bound) {
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace visa
