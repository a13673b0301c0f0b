#pragma once

#include <condition_variable>
#include <cstddef>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "llm/templates.hpp"

namespace consearch {

struct LlmMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct LlmRequest {
  std::string template_id;
  std::string digest;
  nlohmann::json bindings;
  std::vector<LlmMessage> messages;
  double temperature = 0.0;
  int attempt = 0;  // 0 for the first prompt, >0 for repair prompts
};

class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string id() const = 0;
  // Raw model text. Throws ProviderError on transport failure.
  virtual std::string complete(const LlmRequest& request) = 0;
};

struct LlmCall {
  std::string template_id;
  std::string digest;
  nlohmann::json bindings;
  std::string rendered_prompt;
  std::string raw_response;
  nlohmann::json parsed;  // null on failure
  std::string error;      // empty on success
  std::string provider_id;
  double latency_ms = 0.0;
  int attempt = 0;

  bool ok() const { return error.empty(); }
  nlohmann::json to_json() const;
  static LlmCall from_json(const nlohmann::json& j);
};

// Append-only, thread-safe record of every provider round-trip. An optional
// sink sees each call as it is appended (used for on-disk persistence).
class CallLog {
 public:
  using Sink = std::function<void(const LlmCall&)>;

  void append(LlmCall call);
  std::vector<LlmCall> snapshot() const;
  std::size_t size() const;
  void set_sink(Sink sink);
  nlohmann::json to_json() const;

 private:
  mutable std::mutex mu_;
  std::vector<LlmCall> calls_;
  Sink sink_;
};

// Caps provider calls in flight across every gateway sharing it.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t max_in_flight);
  void acquire();
  void release();

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::size_t available_;
};

struct GatewayOptions {
  int max_repair_attempts = 2;
  int transport_retries = 2;
};

// Returns an error message when a parsed value is structurally valid but
// semantically unusable (e.g. an index out of range). Triggers a repair.
using SemanticCheck = std::function<std::optional<std::string>(const nlohmann::json&)>;

struct StructuredRequest {
  std::string template_id;
  nlohmann::json bindings;
  SemanticCheck check;
};

class LlmGateway {
 public:
  LlmGateway(std::shared_ptr<LlmProvider> provider, std::shared_ptr<CallLog> log,
             std::shared_ptr<InFlightLimiter> limiter, GatewayOptions options = {});

  // Renders, calls, parses and validates. Malformed output is re-prompted
  // with the validation error up to max_repair_attempts times; after that a
  // PipelineError naming the template is thrown. Transport failures are
  // retried and then surface as ProviderError.
  nlohmann::json complete_structured(std::string_view template_id,
                                     const nlohmann::json& bindings,
                                     const SemanticCheck& check = {});

  // Issues the requests concurrently (bounded by the limiter) and returns
  // results in input order. The first failure is rethrown after all finish.
  std::vector<nlohmann::json> complete_many(const std::vector<StructuredRequest>& requests);

  const std::shared_ptr<CallLog>& log() const { return log_; }
  const std::string& provider_id() const { return provider_id_; }

 private:
  std::string call_provider(LlmRequest& request);

  std::shared_ptr<LlmProvider> provider_;
  std::shared_ptr<CallLog> log_;
  std::shared_ptr<InFlightLimiter> limiter_;
  GatewayOptions options_;
  std::string provider_id_;
};

// Extracts the JSON value from a model reply, tolerating code fences and
// leading prose. Returns nullopt when nothing parses.
std::optional<nlohmann::json> parse_model_json(std::string_view raw);

std::string system_prompt_for(const PromptTemplate& tmpl);

}  // namespace consearch
