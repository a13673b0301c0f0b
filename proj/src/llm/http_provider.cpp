#include "llm/http_provider.hpp"

#include <nlohmann/json.hpp>

#include "common/errors.hpp"

namespace consearch {

using nlohmann::json;

HttpLlmProvider::HttpLlmProvider(std::string url, std::string model, std::string api_key,
                                 HttpPostOptions options)
    : endpoint_(parse_endpoint(url)), model_(std::move(model)), options_(std::move(options)) {
  if (!api_key.empty()) options_.headers.emplace_back("Authorization", "Bearer " + api_key);
}

std::string HttpLlmProvider::complete(const LlmRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  const json body = {{"model", model_}, {"messages", messages}, {"temperature", request.temperature}};
  const std::string raw = post_json(endpoint_, body.dump(), options_);
  const json reply = json::parse(raw, nullptr, false);
  if (reply.is_discarded()) throw ProviderError("LLM endpoint returned non-JSON body");
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ProviderError("LLM endpoint reply lacks choices[0].message.content");
  }
}

}  // namespace consearch
