#include "visa/http_backend.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <exception>
#include <thread>

namespace visa {

void HttpBackendConfig::validate() const {
  if (base_url.empty()) throw ConfigError("http backend: base_url is empty");
  if (model_name.empty()) throw ConfigError("http backend: model_name is empty");
  if (!(temperature >= 0.0) || !(judge_temperature >= 0.0)) throw ConfigError("http backend: temperature must be >= 0");
  if (max_tokens < 1) throw ConfigError("http backend: max_tokens must be positive");
  if (max_retries < 0) throw ConfigError("http backend: max_retries must be >= 0");
  if (parallelism < 1) throw ConfigError("http backend: parallelism must be >= 1");
  if (timeout.count() <= 0) throw ConfigError("http backend: timeout must be positive");
}

json to_json(const ChatRequest& req) {
  json messages = json::array();
  for (const auto& m : req.messages) messages.push_back(json{{"role", m.role}, {"content", m.content}});
  return json{{"model", req.model},
              {"messages", std::move(messages)},
              {"temperature", req.temperature},
              {"max_tokens", req.max_tokens}};
}

std::string serialize_request(const ChatRequest& req) { return to_json(req).dump(); }

std::string render_value_vector(const ValueVector& v) { return to_json(v).dump(); }

namespace {

ChatRequest chat(const HttpBackendConfig& cfg, double temperature, std::string system, std::string user) {
  ChatRequest req{cfg.model_name, {}, temperature, cfg.max_tokens};
  if (!system.empty()) req.messages.push_back({"system", std::move(system)});
  req.messages.push_back({"user", std::move(user)});
  return req;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

ValueCoeffs<double> parse_dimension_object(std::string_view reply) {
  const auto open = reply.find('{');
  const auto close = reply.rfind('}');
  if (open == std::string_view::npos || close == std::string_view::npos || close < open)
    throw BackendError("reply holds no JSON object", std::string(reply));
  json j;
  try {
    j = json::parse(reply.substr(open, close - open + 1));
  } catch (const json::exception& e) {
    throw BackendError(std::string("reply JSON does not parse: ") + e.what(), std::string(reply));
  }
  ValueCoeffs<double> c = ValueCoeffs<double>::Zero();
  std::array<bool, kNumDimensions> seen{};
  for (const auto& [key, val] : j.items()) {
    const auto d = parse_dimension(key);
    if (!d) throw BackendError("reply names unknown dimension '" + key + "'", std::string(reply));
    if (!val.is_number()) throw BackendError("reply value for '" + key + "' is not a number", std::string(reply));
    const double x = val.get<double>();
    if (!std::isfinite(x)) throw BackendError("reply value for '" + key + "' is not finite", std::string(reply));
    c(index_of(*d)) = x;
    seen[static_cast<std::size_t>(index_of(*d))] = true;
  }
  for (int i = 0; i < kNumDimensions; ++i)
    if (!seen[static_cast<std::size_t>(i)])
      throw BackendError("reply is missing dimension " + std::string(dimension_name(kAllDimensions[i])),
                         std::string(reply));
  return c;
}

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

UrlParts split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  UrlParts p{url.substr(0, slash), slash == std::string::npos ? "" : url.substr(slash)};
  while (!p.path.empty() && p.path.back() == '/') p.path.pop_back();
  return p;
}

class HttplibTransport final : public ChatTransport {
 public:
  explicit HttplibTransport(const HttpBackendConfig& cfg) : url_(split_url(cfg.base_url)), timeout_(cfg.timeout) {}

  HttpReply post_chat(const std::string& body, const std::string& bearer_token) override {
    // one client per call keeps concurrent requests independent
    httplib::Client cli(url_.origin);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout_ - secs);
    cli.set_connection_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
    cli.set_read_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
    cli.set_write_timeout(static_cast<time_t>(secs.count()), static_cast<time_t>(usecs.count()));
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = cli.Post(url_.path + "/chat/completions", headers, body, "application/json");
    if (!res) return {0, httplib::to_string(res.error())};
    return {res->status, res->body};
  }

 private:
  UrlParts url_;
  std::chrono::milliseconds timeout_;
};

}  // namespace

ChatRequest rewrite_request(const HttpBackendConfig& cfg, std::string_view prompt, std::string_view original,
                            const ValueVector& v_target) {
  const std::string target = render_value_vector(v_target);
  return chat(cfg, cfg.temperature, std::string(prompt_text(rewrite_system_prompt_for(cfg.rewrite_style))),
              render_template(prompt_text(PromptId::RewriteInput),
                              {{"user_prompt", prompt}, {"origin_response", original}, {"target_value_vector", target}}));
}

ChatRequest consistency_request(const HttpBackendConfig& cfg, std::string_view premise, std::string_view hypothesis) {
  return chat(cfg, cfg.temperature, {},
              render_template(prompt_text(PromptId::Consistency), {{"text1", premise}, {"text2", hypothesis}}));
}

ChatRequest judge_request(const HttpBackendConfig& cfg, std::string_view question, std::string_view response_1,
                          std::string_view response_2, EvalDimension dimension) {
  return chat(cfg, cfg.judge_temperature, std::string(prompt_text(PromptId::JudgeSystem)),
              render_template(prompt_text(judge_prompt_for(dimension)),
                              {{"prompt", question}, {"response_1", response_1}, {"response_2", response_2}}));
}

ChatRequest detector_request(const HttpBackendConfig& cfg, std::string_view prompt, std::string_view response) {
  return chat(cfg, cfg.temperature, std::string(prompt_text(PromptId::DetectorSystem)),
              render_template(prompt_text(PromptId::DetectorInput), {{"user_prompt", prompt}, {"response", response}}));
}

ChatRequest translator_request(const HttpBackendConfig& cfg, std::string_view prompt, std::string_view original,
                               std::string_view instruction) {
  return chat(cfg, cfg.temperature, std::string(prompt_text(PromptId::TranslatorSystem)),
              render_template(prompt_text(PromptId::TranslatorInput),
                              {{"user_prompt", prompt}, {"origin_response", original}, {"instruction", instruction}}));
}

ChatRequest generation_request(const HttpBackendConfig& cfg, std::string_view question, double temperature) {
  return chat(cfg, temperature, {}, std::string(question));
}

std::string extract_message_content(std::string_view response_body) {
  try {
    const json j = json::parse(response_body);
    const auto& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw BackendError("message content is not a string", std::string(response_body));
    return content.get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed chat-completions response: ") + e.what(), std::string(response_body));
  }
}

ValueVector parse_detector_reply(std::string_view reply) {
  return ValueVector::clamped(parse_dimension_object(reply));
}

ValueDelta parse_translator_reply(std::string_view reply) {
  return ValueDelta::clamped(parse_dimension_object(reply));
}

double parse_entailment_reply(std::string_view reply) {
  const std::string_view t = trim(reply);
  if (t.empty()) throw BackendError("empty entailment reply", std::string(reply));
  char* end = nullptr;
  const std::string buf(t);
  const double x = std::strtod(buf.c_str(), &end);
  if (end != buf.c_str() && trim(std::string_view(end)).empty()) {
    if (!(x >= 0.0 && x <= 1.0)) throw BackendError("entailment probability outside [0, 1]", std::string(reply));
    return x;
  }
  std::string word = lower(t);
  while (!word.empty() && std::ispunct(static_cast<unsigned char>(word.back()))) word.pop_back();
  if (word.starts_with("entail") || word == "yes" || word == "true") return 1.0;
  if (word.starts_with("neutral")) return 0.5;
  if (word.starts_with("contradict") || word == "no" || word == "false") return 0.0;
  throw BackendError("unrecognized entailment reply", std::string(reply));
}

std::string extract_rewrite(std::string_view reply) {
  constexpr std::string_view open = "<rewritten_response>";
  constexpr std::string_view close = "</rewritten_response>";
  if (auto a = reply.find(open); a != std::string_view::npos) {
    const auto from = a + open.size();
    const auto b = reply.find(close, from);
    return std::string(trim(reply.substr(from, b == std::string_view::npos ? std::string_view::npos : b - from)));
  }
  std::string out(reply);
  if (auto a = out.find("<think>"); a != std::string::npos) {
    const auto b = out.find("</think>", a);
    out.erase(a, b == std::string::npos ? std::string::npos : b + 8 - a);
  }
  return std::string(trim(out));
}

std::unique_ptr<ChatTransport> make_httplib_transport(const HttpBackendConfig& cfg) {
  return std::make_unique<HttplibTransport>(cfg);
}

HttpBackend::HttpBackend(HttpBackendConfig cfg, std::unique_ptr<ChatTransport> transport)
    : cfg_(std::move(cfg)), transport_(std::move(transport)) {
  cfg_.validate();
  if (!transport_) transport_ = make_httplib_transport(cfg_);
  if (const char* key = std::getenv(cfg_.api_key_env_var.c_str())) token_ = key;
}

std::string HttpBackend::identity() const { return "http/" + cfg_.model_name + "@" + std::string(kPromptSetVersion); }

template <typename Parse>
auto HttpBackend::call(const ChatRequest& req, Parse&& parse) -> decltype(parse(std::string_view{})) {
  const std::string body = serialize_request(req);
  std::exception_ptr last;
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(cfg_.backoff_base * (1 << std::min(attempt - 1, 16)));
    const HttpReply reply = transport_->post_chat(body, token_);
    try {
      if (reply.status == 0) throw BackendError("request to " + cfg_.base_url + " failed: " + reply.body);
      if (reply.status < 200 || reply.status >= 300)
        throw BackendError("HTTP " + std::to_string(reply.status) + " from " + cfg_.base_url, reply.body);
      return parse(extract_message_content(reply.body));
    } catch (const BackendError&) {
      last = std::current_exception();
    }
  }
  std::rethrow_exception(last);
}

ValueVector HttpBackend::detect(std::string_view prompt, std::string_view response) {
  if (response.empty()) throw ValidationError("detect: empty response");
  return call(detector_request(cfg_, prompt, response), parse_detector_reply);
}

ValueDelta HttpBackend::translate(std::string_view prompt, std::string_view original, std::string_view instruction) {
  if (trim(instruction).empty()) return ValueDelta{};
  return call(translator_request(cfg_, prompt, original, instruction), parse_translator_reply);
}

std::vector<std::string> HttpBackend::rewrite(std::string_view prompt, std::string_view original,
                                              const ValueVector& v_target, int n, double, std::uint64_t) {
  if (n < 1) throw ValidationError("rewrite: n must be >= 1");
  const ChatRequest req = rewrite_request(cfg_, prompt, original, v_target);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(call(req, [](std::string_view r) { return extract_rewrite(r); }));
  return out;
}

std::vector<std::string> HttpBackend::generate(std::string_view question, int n, double temperature, std::uint64_t) {
  if (n < 1) throw ValidationError("generate: n must be >= 1");
  const ChatRequest req = generation_request(cfg_, question, temperature);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out.push_back(call(req, [](std::string_view r) { return std::string(r); }));
  return out;
}

FactScore HttpBackend::fact_score(std::string_view original, std::string_view candidate) {
  if (original.empty() || candidate.empty()) throw ValidationError("fact_score: empty text");
  const double fwd = call(consistency_request(cfg_, original, candidate), parse_entailment_reply);
  const double bwd = call(consistency_request(cfg_, candidate, original), parse_entailment_reply);
  return FactScore::from_directions(fwd, bwd);
}

Verdict HttpBackend::judge_pair(std::string_view question, std::string_view response_1, std::string_view response_2,
                                EvalDimension dimension) {
  return call(judge_request(cfg_, question, response_1, response_2, dimension), [](std::string_view r) {
    const auto v = parse_judge_reply(r);
    if (!v) throw JudgmentError("judge reply does not end in 1 or 2", std::string(r));
    return *v;
  });
}

}  // namespace visa
