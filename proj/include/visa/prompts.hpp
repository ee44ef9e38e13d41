#pragma once

// Versioned prompt templates. The texts live under assets/prompts/<version>/
// and are compiled into the library; placeholders are written {name}.

#include <cstddef>
#include <initializer_list>
#include <string>
#include <string_view>
#include <utility>

#include "visa/eval_dimension.hpp"

namespace visa {

inline constexpr std::string_view kPromptSetVersion = "v1";

enum class PromptId {
  RewriteSystem,
  RewriteInput,     // {user_prompt} {origin_response} {target_value_vector}
  SimpleSystem,
  ThinkSystem,
  Consistency,      // {text1} {text2}
  JudgeSystem,
  JudgeTraditionalSecular,      // {prompt} {response_1} {response_2}
  JudgeSurvivalSelfExpression,
  JudgeIndividualismCollectivism,
  JudgeGenderRoles,
  DetectorSystem,
  DetectorInput,    // {user_prompt} {response}
  TranslatorSystem,
  TranslatorInput,  // {user_prompt} {origin_response} {instruction}
};

/// Which system prompt a rewrite request carries.
enum class RewriteStyle { Simple, Complex, Think };

std::string_view prompt_text(PromptId id);
std::string_view prompt_asset_name(PromptId id);
PromptId judge_prompt_for(EvalDimension d);
PromptId rewrite_system_prompt_for(RewriteStyle style);

std::string_view rewrite_style_name(RewriteStyle s);
RewriteStyle parse_rewrite_style(std::string_view s);

using PromptBindings = std::initializer_list<std::pair<std::string_view, std::string_view>>;

/// Single pass: each {name} with a binding is replaced by its value; any
/// other brace sequence is copied verbatim. Substituted text is never
/// rescanned.
std::string render_template(std::string_view tmpl, PromptBindings bindings);

namespace detail {
struct PromptAsset {
  const char* name;
  const char* text;
};
extern const PromptAsset kPromptAssets[];
extern const std::size_t kPromptAssetCount;
}  // namespace detail

}  // namespace visa
