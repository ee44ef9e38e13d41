#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace visa {

/// The four cultural axes used for pairwise value-drift judging.
enum class EvalDimension { TraditionalVsSecular, SurvivalVsSelfExpression, IndividualismVsCollectivism, GenderRoles };

inline constexpr std::array<EvalDimension, 4> kAllEvalDimensions = {
    EvalDimension::TraditionalVsSecular, EvalDimension::SurvivalVsSelfExpression,
    EvalDimension::IndividualismVsCollectivism, EvalDimension::GenderRoles};

std::string_view eval_dimension_name(EvalDimension d);
std::optional<EvalDimension> parse_eval_dimension(std::string_view name);

}  // namespace visa
