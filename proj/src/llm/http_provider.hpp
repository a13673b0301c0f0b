#pragma once

#include <string>

#include "common/http_client.hpp"
#include "llm/gateway.hpp"

namespace consearch {

// OpenAI-compatible chat-completions client. Sends the request messages with
// temperature 0 and returns choices[0].message.content.
class HttpLlmProvider : public LlmProvider {
 public:
  HttpLlmProvider(std::string url, std::string model, std::string api_key,
                  HttpPostOptions options = {});

  std::string id() const override { return "http:" + model_; }
  std::string complete(const LlmRequest& request) override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  HttpPostOptions options_;
};

}  // namespace consearch
