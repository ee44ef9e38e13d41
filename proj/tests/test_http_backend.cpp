#include <gtest/gtest.h>

#include <cstdlib>
#include <deque>
#include <mutex>

#include "visa/http_backend.hpp"

using namespace visa;

namespace {

std::string completion(std::string_view content) {
  return json{{"choices", json::array({json{{"message", json{{"role", "assistant"}, {"content", content}}}}})}}.dump();
}

struct FakeLog {
  std::mutex m;
  std::vector<std::string> bodies;
  std::vector<std::string> tokens;
};

class FakeTransport : public ChatTransport {
 public:
  FakeTransport(std::deque<HttpReply> replies, std::shared_ptr<FakeLog> log)
      : replies_(std::move(replies)), log_(std::move(log)) {}

  HttpReply post_chat(const std::string& body, const std::string& bearer) override {
    std::lock_guard lock(log_->m);
    log_->bodies.push_back(body);
    log_->tokens.push_back(bearer);
    if (replies_.empty()) return {500, "exhausted"};
    HttpReply r = replies_.front();
    if (replies_.size() > 1) replies_.pop_front();
    return r;
  }

 private:
  std::deque<HttpReply> replies_;
  std::shared_ptr<FakeLog> log_;
};

HttpBackendConfig fast_config() {
  HttpBackendConfig cfg;
  cfg.model_name = "m";
  cfg.backoff_base = std::chrono::milliseconds(0);
  cfg.max_retries = 2;
  cfg.api_key_env_var = "VISA_TEST_API_KEY";
  return cfg;
}

HttpBackend make(std::deque<HttpReply> replies, std::shared_ptr<FakeLog> log, HttpBackendConfig cfg = fast_config()) {
  return HttpBackend(cfg, std::make_unique<FakeTransport>(std::move(replies), std::move(log)));
}

}  // namespace

TEST(HttpConfig, Validate) {
  auto cfg = fast_config();
  EXPECT_NO_THROW(cfg.validate());
  cfg.model_name.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = fast_config();
  cfg.max_tokens = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(HttpRequest, KeyOrderAndShape) {
  const auto req = consistency_request(fast_config(), "premise text", "hypothesis text");
  const std::string body = serialize_request(req);
  EXPECT_TRUE(body.starts_with("{\"model\":\"m\",\"messages\":["));
  EXPECT_LT(body.find("\"temperature\""), body.find("\"max_tokens\""));
  const json j = json::parse(body);
  ASSERT_EQ(j["messages"].size(), 1u);
  const std::string content = j["messages"][0]["content"];
  EXPECT_LT(content.find("premise text"), content.find("hypothesis text"));
}

TEST(HttpRequest, ValueVectorRendering) {
  const std::string s = render_value_vector(ValueVector::unit(ValueDimension::Power, -0.5));
  EXPECT_TRUE(s.starts_with("{\"SelfDirection\":0.0,"));
  EXPECT_NE(s.find("\"Power\":-0.5"), std::string::npos);
  EXPECT_EQ(s.find(' '), std::string::npos);
}

TEST(HttpParse, MessageContent) {
  EXPECT_EQ(extract_message_content(completion("hello")), "hello");
  EXPECT_THROW(extract_message_content("{}"), BackendError);
  EXPECT_THROW(extract_message_content("not json"), BackendError);
}

TEST(HttpParse, DetectorClipsOutOfRange) {
  std::string reply = "Here you go: {";
  bool first = true;
  for (auto d : kAllDimensions) {
    reply += std::string(first ? "" : ",") + "\"" + std::string(dimension_name(d)) + "\":" +
             (d == ValueDimension::Security ? "1.5" : "0.0");
    first = false;
  }
  reply += "} done";
  const auto v = parse_detector_reply(reply);
  EXPECT_EQ(v[ValueDimension::Security], 1.0);
  EXPECT_EQ(v.coeffs().cwiseAbs().sum(), 1.0);
  EXPECT_EQ(parse_translator_reply(reply)[ValueDimension::Security], 1.5);
}

TEST(HttpParse, DetectorRejectsMissingKeys) {
  EXPECT_THROW(parse_detector_reply("{\"Security\": 0.5}"), BackendError);
  EXPECT_THROW(parse_detector_reply("no json here"), BackendError);
}

TEST(HttpParse, Entailment) {
  EXPECT_EQ(parse_entailment_reply("0.75"), 0.75);
  EXPECT_EQ(parse_entailment_reply(" 1 \n"), 1.0);
  EXPECT_EQ(parse_entailment_reply("entailment"), 1.0);
  EXPECT_EQ(parse_entailment_reply("Neutral."), 0.5);
  EXPECT_EQ(parse_entailment_reply("contradiction"), 0.0);
  EXPECT_EQ(parse_entailment_reply("yes"), 1.0);
  EXPECT_EQ(parse_entailment_reply("False"), 0.0);
  EXPECT_THROW(parse_entailment_reply("1.5"), BackendError);
  EXPECT_THROW(parse_entailment_reply("maybe"), BackendError);
  EXPECT_THROW(parse_entailment_reply(""), BackendError);
}

TEST(HttpParse, RewriteExtraction) {
  EXPECT_EQ(extract_rewrite("<think>plan</think>\n<rewritten_response>final text</rewritten_response>"), "final text");
  EXPECT_EQ(extract_rewrite("<think>plan</think>\nplain answer"), "plain answer");
  EXPECT_EQ(extract_rewrite("just text"), "just text");
}

TEST(HttpBackend, RetriesThenSucceeds) {
  auto log = std::make_shared<FakeLog>();
  auto b = make({{0, "refused"}, {503, "busy"}, {200, completion("0.25")}}, log);
  const auto fs = b.fact_score("a", "b");
  EXPECT_EQ(fs.forward, 0.25);
  EXPECT_EQ(fs.backward, 0.25);
  EXPECT_EQ(log->bodies.size(), 4u);  // 3 for the first direction, 1 for the second
}

TEST(HttpBackend, ExhaustedRetriesRaiseWithRawOutput) {
  auto log = std::make_shared<FakeLog>();
  auto b = make({{200, completion("I cannot say")}}, log);
  try {
    b.detect("q", "r");
    FAIL() << "expected BackendError";
  } catch (const BackendError& e) {
    EXPECT_EQ(e.raw_output(), "I cannot say");
  }
  EXPECT_EQ(log->bodies.size(), 3u);
}

TEST(HttpBackend, FactScoreSendsBothDirections) {
  auto log = std::make_shared<FakeLog>();
  auto b = make({{200, completion("1")}}, log);
  b.fact_score("ORIGINAL", "CANDIDATE");
  ASSERT_EQ(log->bodies.size(), 2u);
  const std::string fwd = json::parse(log->bodies[0])["messages"][0]["content"];
  const std::string bwd = json::parse(log->bodies[1])["messages"][0]["content"];
  EXPECT_LT(fwd.find("ORIGINAL"), fwd.find("CANDIDATE"));
  EXPECT_LT(bwd.find("CANDIDATE"), bwd.find("ORIGINAL"));
}

TEST(HttpBackend, JudgeVerdictsAndInvalid) {
  auto log = std::make_shared<FakeLog>();
  auto b = make({{200, completion("Response 1 leans progressive. 1")}}, log);
  EXPECT_EQ(b.judge_pair("q", "a", "b", EvalDimension::GenderRoles), Verdict::TestedPreferred);
  auto bad = make({{200, completion("cannot decide")}}, log);
  EXPECT_THROW(bad.judge_pair("q", "a", "b", EvalDimension::GenderRoles), JudgmentError);
}

TEST(HttpBackend, RewriteIssuesOneRequestPerCandidate) {
  auto log = std::make_shared<FakeLog>();
  auto b = make({{200, completion("<rewritten_response>x</rewritten_response>")}}, log);
  const auto out = b.rewrite("q", "o", ValueVector{}, 3, 0.0, 1);
  EXPECT_EQ(out, (std::vector<std::string>{"x", "x", "x"}));
  EXPECT_EQ(log->bodies.size(), 3u);
}

TEST(HttpBackend, TokenOnlyInTransportNeverInBodiesOrErrors) {
  ::setenv("VISA_TEST_API_KEY", "sk-secret-123", 1);
  auto log = std::make_shared<FakeLog>();
  auto b = make({{401, "unauthorized"}}, log);
  try {
    b.detect("q", "r");
  } catch (const BackendError& e) {
    EXPECT_EQ(std::string(e.what()).find("sk-secret"), std::string::npos);
    EXPECT_EQ(e.raw_output().find("sk-secret"), std::string::npos);
  }
  for (const auto& body : log->bodies) EXPECT_EQ(body.find("sk-secret"), std::string::npos);
  ASSERT_FALSE(log->tokens.empty());
  EXPECT_EQ(log->tokens.front(), "sk-secret-123");
  EXPECT_EQ(b.identity().find("sk-secret"), std::string::npos);
  ::unsetenv("VISA_TEST_API_KEY");
}

TEST(HttpBackend, Identity) {
  auto log = std::make_shared<FakeLog>();
  EXPECT_EQ(make({}, log).identity(), "http/m@v1");
}
