#pragma once

// OpenAI-compatible chat-completions client implementing every model role.
//
// Request bodies are built by free functions so they can be compared against
// stored fixtures byte-for-byte. Network I/O goes through ChatTransport,
// which tests replace with an in-memory fake.

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "visa/backends.hpp"
#include "visa/json_io.hpp"
#include "visa/prompts.hpp"

namespace visa {

struct HttpBackendConfig {
  std::string base_url = "http://localhost:8000/v1";
  std::string model_name;
  double temperature = 0.2;
  double judge_temperature = 0.1;
  int max_tokens = 1024;
  std::string api_key_env_var = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{60000};
  int max_retries = 3;
  int parallelism = 4;
  std::chrono::milliseconds backoff_base{500};
  RewriteStyle rewrite_style = RewriteStyle::Complex;

  void validate() const;
};

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 0;
};

/// {"model", "messages":[{"role","content"}...], "temperature", "max_tokens"}
json to_json(const ChatRequest& req);
/// Compact dump of to_json(req); this is the exact POST body.
std::string serialize_request(const ChatRequest& req);

/// Compact named-object JSON in canonical order, as sent in {target_value_vector}.
std::string render_value_vector(const ValueVector& v);

ChatRequest rewrite_request(const HttpBackendConfig& cfg, std::string_view prompt, std::string_view original,
                            const ValueVector& v_target);
/// Premise is text1, hypothesis text2.
ChatRequest consistency_request(const HttpBackendConfig& cfg, std::string_view premise, std::string_view hypothesis);
ChatRequest judge_request(const HttpBackendConfig& cfg, std::string_view question, std::string_view response_1,
                          std::string_view response_2, EvalDimension dimension);
ChatRequest detector_request(const HttpBackendConfig& cfg, std::string_view prompt, std::string_view response);
ChatRequest translator_request(const HttpBackendConfig& cfg, std::string_view prompt, std::string_view original,
                               std::string_view instruction);
ChatRequest generation_request(const HttpBackendConfig& cfg, std::string_view question, double temperature);

// Reply parsers. Each throws BackendError (carrying the reply) on failure.

/// choices[0].message.content of a chat-completions response body.
std::string extract_message_content(std::string_view response_body);
/// First '{' through last '}' parsed as a dimension object, clipped to [-1, 1].
ValueVector parse_detector_reply(std::string_view reply);
/// As above, clipped to [-2, 2].
ValueDelta parse_translator_reply(std::string_view reply);
/// A probability in [0, 1], or a label: entailment = 1, neutral = 0.5,
/// contradiction = 0 (also "yes"/"true", "no"/"false").
double parse_entailment_reply(std::string_view reply);
/// Text inside <rewritten_response>...</rewritten_response> when present,
/// otherwise the whole reply with any <think> block removed.
std::string extract_rewrite(std::string_view reply);

struct HttpReply {
  int status = 0;
  std::string body;
};

class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// POSTs `body` to {base_url}/chat/completions. A status of 0 means the
  /// request never completed (connection failure, timeout).
  virtual HttpReply post_chat(const std::string& body, const std::string& bearer_token) = 0;
};

std::unique_ptr<ChatTransport> make_httplib_transport(const HttpBackendConfig& cfg);

class HttpBackend final : public Detector,
                          public Translator,
                          public Generator,
                          public FactAnalyzer,
                          public Judge {
 public:
  /// Reads the API key from the configured environment variable (an unset
  /// variable means no Authorization header).
  explicit HttpBackend(HttpBackendConfig cfg, std::unique_ptr<ChatTransport> transport = nullptr);

  std::string identity() const override;
  int parallelism() const override { return cfg_.parallelism; }
  const HttpBackendConfig& config() const { return cfg_; }

  ValueVector detect(std::string_view prompt, std::string_view response) override;
  ValueDelta translate(std::string_view prompt, std::string_view original, std::string_view instruction) override;
  /// One request per candidate; `noise` and `seed` do not apply to remote
  /// sampling and are ignored.
  std::vector<std::string> rewrite(std::string_view prompt, std::string_view original, const ValueVector& v_target,
                                   int n, double noise, std::uint64_t seed) override;
  std::vector<std::string> generate(std::string_view question, int n, double temperature, std::uint64_t seed) override;
  FactScore fact_score(std::string_view original, std::string_view candidate) override;
  Verdict judge_pair(std::string_view question, std::string_view response_1, std::string_view response_2,
                     EvalDimension dimension) override;

 private:
  /// Sends the request, retrying transport failures, non-2xx statuses and
  /// parse failures with exponential backoff.
  template <typename Parse>
  auto call(const ChatRequest& req, Parse&& parse) -> decltype(parse(std::string_view{}));

  HttpBackendConfig cfg_;
  std::unique_ptr<ChatTransport> transport_;
  std::string token_;
};

}  // namespace visa
