#include "factdelta/llm_client.hpp"

#include <thread>

#include "httplib.h"
#include "factdelta/json_codec.hpp"

namespace factdelta {

ChatCompletionsClient::ChatCompletionsClient(std::string endpoint, std::string model, std::string api_key,
                                             int attempts, std::chrono::milliseconds backoff)
    : model_(std::move(model)), api_key_(std::move(api_key)), attempts_(attempts), backoff_(backoff) {
  auto scheme = endpoint.find("://");
  if (scheme == std::string::npos) throw std::invalid_argument("endpoint needs a scheme: " + endpoint);
  auto slash = endpoint.find('/', scheme + 3);
  origin_ = endpoint.substr(0, slash);
  path_ = slash == std::string::npos ? "/v1/chat/completions" : endpoint.substr(slash);
}

std::string ChatCompletionsClient::request_body(const std::string& model, const std::string& system,
                                                const std::string& user, const ChatParams& params) {
  json body = {{"model", model},
               {"messages", json::array({json{{"role", "system"}, {"content", system}},
                                         json{{"role", "user"}, {"content", user}}})},
               {"temperature", params.temperature},
               {"max_tokens", params.max_tokens}};
  return body.dump();
}

std::string ChatCompletionsClient::parse_response(const std::string& body) {
  try {
    json j = json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    throw EndpointError(std::string("malformed completion response: ") + e.what());
  }
}

std::string ChatCompletionsClient::complete(const std::string& system, const std::string& user,
                                            const ChatParams& params) {
  httplib::Client cli(origin_);
  cli.set_connection_timeout(10);
  cli.set_read_timeout(120);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  const std::string body = request_body(model_, system, user, params);

  std::string last_error = "no attempt made";
  auto delay = backoff_;
  for (int attempt = 0; attempt < attempts_; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    auto res = cli.Post(path_, headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) return parse_response(res->body);
    last_error = "HTTP " + std::to_string(res->status);
    if (res->status != 429 && res->status < 500) break;
  }
  throw EndpointError(origin_ + path_ + ": " + last_error);
}

}  // namespace factdelta
