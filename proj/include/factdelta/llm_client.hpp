#pragma once

#include <chrono>
#include <string>

#include "factdelta/verbalize.hpp"

namespace factdelta {

// OpenAI-style chat completions over HTTP. Retries transport failures and
// 5xx/429 responses with exponential backoff.
class ChatCompletionsClient : public LlmClient {
 public:
  // endpoint: "http(s)://host[:port]/v1/chat/completions"; the path
  // defaults to /v1/chat/completions.
  ChatCompletionsClient(std::string endpoint, std::string model, std::string api_key = {},
                        int attempts = 3, std::chrono::milliseconds backoff = std::chrono::milliseconds(500));

  std::string complete(const std::string& system, const std::string& user, const ChatParams& params) override;

  // Exposed for tests.
  static std::string request_body(const std::string& model, const std::string& system, const std::string& user,
                                  const ChatParams& params);
  static std::string parse_response(const std::string& body);

 private:
  std::string origin_;
  std::string path_;
  std::string model_;
  std::string api_key_;
  int attempts_;
  std::chrono::milliseconds backoff_;
};

}  // namespace factdelta
