#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "golden_cases.hpp"
#include "visa/prompts.hpp"

using namespace visa;

namespace {

constexpr PromptId kAll[] = {
    PromptId::RewriteSystem, PromptId::RewriteInput, PromptId::SimpleSystem, PromptId::ThinkSystem,
    PromptId::Consistency, PromptId::JudgeSystem, PromptId::JudgeTraditionalSecular,
    PromptId::JudgeSurvivalSelfExpression, PromptId::JudgeIndividualismCollectivism, PromptId::JudgeGenderRoles,
    PromptId::DetectorSystem, PromptId::DetectorInput, PromptId::TranslatorSystem, PromptId::TranslatorInput,
};

std::vector<std::string> placeholders(std::string_view t) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != '{') continue;
    std::size_t j = i + 1;
    while (j < t.size() && (std::isalnum(static_cast<unsigned char>(t[j])) || t[j] == '_')) ++j;
    if (j < t.size() && t[j] == '}' && j > i + 1) out.emplace_back(t.substr(i + 1, j - i - 1));
  }
  return out;
}

}  // namespace

TEST(Prompts, EveryAssetPresentAndNonEmpty) {
  std::set<std::string_view> names;
  for (PromptId id : kAll) {
    EXPECT_FALSE(prompt_text(id).empty()) << prompt_asset_name(id);
    EXPECT_NE(prompt_text(id).back(), '\n') << prompt_asset_name(id);
    names.insert(prompt_asset_name(id));
  }
  EXPECT_EQ(names.size(), std::size(kAll));
}

TEST(Prompts, PlaceholdersPerTemplate) {
  using S = std::set<std::string>;
  auto ph = [](PromptId id) {
    const auto v = placeholders(prompt_text(id));
    return S(v.begin(), v.end());
  };
  EXPECT_EQ(ph(PromptId::RewriteInput), (S{"user_prompt", "origin_response", "target_value_vector"}));
  EXPECT_EQ(ph(PromptId::Consistency), (S{"text1", "text2"}));
  for (auto d : {EvalDimension::TraditionalVsSecular, EvalDimension::SurvivalVsSelfExpression,
                 EvalDimension::IndividualismVsCollectivism, EvalDimension::GenderRoles}) {
    EXPECT_EQ(ph(judge_prompt_for(d)), (S{"prompt", "response_1", "response_2"}));
  }
  EXPECT_EQ(ph(PromptId::DetectorInput), (S{"user_prompt", "response"}));
  EXPECT_EQ(ph(PromptId::TranslatorInput), (S{"user_prompt", "origin_response", "instruction"}));
}

TEST(Prompts, KeyPhrases) {
  EXPECT_NE(prompt_text(PromptId::RewriteSystem).find("Fact-Preserving Value Stylist"), std::string_view::npos);
  for (auto d : {EvalDimension::TraditionalVsSecular, EvalDimension::SurvivalVsSelfExpression,
                 EvalDimension::IndividualismVsCollectivism, EvalDimension::GenderRoles}) {
    const auto t = prompt_text(judge_prompt_for(d));
    EXPECT_NE(t.find("end your answer with 1"), std::string_view::npos) << eval_dimension_name(d);
  }
}

TEST(RenderTemplate, SinglePass) {
  EXPECT_EQ(render_template("a {x} b {y}", {{"x", "1"}, {"y", "{x}"}}), "a 1 b {x}");
  EXPECT_EQ(render_template("{unknown} {x}", {{"x", "v"}}), "{unknown} v");
  EXPECT_EQ(render_template("{x}{x}", {{"x", "ab"}}), "abab");
  EXPECT_EQ(render_template("{ {", {{"x", "1"}}), "{ {");
  EXPECT_EQ(render_template("json {\"a\": 1}", {}), "json {\"a\": 1}");
}

TEST(RewriteStyle, RoundTrip) {
  for (auto s : {RewriteStyle::Simple, RewriteStyle::Complex, RewriteStyle::Think})
    EXPECT_EQ(parse_rewrite_style(rewrite_style_name(s)), s);
  EXPECT_THROW(parse_rewrite_style("fancy"), ConfigError);
  EXPECT_EQ(rewrite_system_prompt_for(RewriteStyle::Complex), PromptId::RewriteSystem);
}

TEST(GoldenRequests, MatchStoredFixtures) {
  const std::string dir = VISA_GOLDEN_DIR;
  for (const auto& [name, req] : golden::cases()) {
    const std::string body = serialize_request(req);
    if (golden::update_requested()) {
      std::ofstream(golden::path(dir, name), std::ios::binary) << body;
      continue;
    }
    const std::string stored = golden::read_file(golden::path(dir, name));
    ASSERT_FALSE(stored.empty()) << "missing fixture " << name;
    EXPECT_EQ(body, stored) << name;
  }
}

TEST(GoldenRequests, BodiesAreWellFormed) {
  for (const auto& [name, req] : golden::cases()) {
    const json j = json::parse(serialize_request(req));
    EXPECT_EQ(j.at("model"), "test-model");
    const auto& msgs = j.at("messages");
    ASSERT_FALSE(msgs.empty());
    EXPECT_EQ(msgs.back().at("role"), "user");
    const std::string user = msgs.back().at("content");
    EXPECT_EQ(user.find("{prompt}"), std::string::npos) << name;
    EXPECT_EQ(user.find("{text1}"), std::string::npos) << name;
    EXPECT_EQ(user.find("{target_value_vector}"), std::string::npos) << name;
    if (name.starts_with("judge")) EXPECT_EQ(j.at("temperature"), 0.1);
  }
}
