#include "llm/gateway.hpp"

#include <chrono>
#include <future>

#include "common/errors.hpp"
#include "llm/schema.hpp"

namespace consearch {

using nlohmann::json;

json LlmCall::to_json() const {
  return json{{"template_id", template_id}, {"digest", digest},
              {"bindings", bindings},       {"rendered_prompt", rendered_prompt},
              {"raw_response", raw_response}, {"parsed", parsed},
              {"error", error},             {"provider_id", provider_id},
              {"latency_ms", latency_ms},   {"attempt", attempt}};
}

LlmCall LlmCall::from_json(const json& j) {
  LlmCall c;
  c.template_id = j.at("template_id");
  c.digest = j.at("digest");
  c.bindings = j.at("bindings");
  c.rendered_prompt = j.at("rendered_prompt");
  c.raw_response = j.at("raw_response");
  c.parsed = j.at("parsed");
  c.error = j.at("error");
  c.provider_id = j.at("provider_id");
  c.latency_ms = j.at("latency_ms");
  c.attempt = j.at("attempt");
  return c;
}

void CallLog::append(LlmCall call) {
  std::lock_guard lock(mu_);
  if (sink_) sink_(call);
  calls_.push_back(std::move(call));
}

std::vector<LlmCall> CallLog::snapshot() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t CallLog::size() const {
  std::lock_guard lock(mu_);
  return calls_.size();
}

void CallLog::set_sink(Sink sink) {
  std::lock_guard lock(mu_);
  sink_ = std::move(sink);
}

json CallLog::to_json() const {
  json out = json::array();
  for (const auto& c : snapshot()) out.push_back(c.to_json());
  return out;
}

InFlightLimiter::InFlightLimiter(std::size_t max_in_flight)
    : available_(max_in_flight == 0 ? 1 : max_in_flight) {}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return available_ > 0; });
  --available_;
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mu_);
    ++available_;
  }
  cv_.notify_one();
}

std::optional<json> parse_model_json(std::string_view raw) {
  auto try_parse = [](std::string_view s) -> std::optional<json> {
    json j = json::parse(s, nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return j;
  };
  if (auto j = try_parse(raw)) return j;
  // ```json ... ``` fences
  if (auto fence = raw.find("```"); fence != std::string_view::npos) {
    auto start = raw.find('\n', fence);
    auto end = raw.find("```", fence + 3);
    if (start != std::string_view::npos && end != std::string_view::npos && end > start) {
      if (auto j = try_parse(raw.substr(start + 1, end - start - 1))) return j;
    }
  }
  const auto first = raw.find_first_of("{[");
  const auto last = raw.find_last_of("}]");
  if (first != std::string_view::npos && last != std::string_view::npos && last > first) {
    return try_parse(raw.substr(first, last - first + 1));
  }
  return std::nullopt;
}

std::string system_prompt_for(const PromptTemplate& tmpl) {
  return "You are one step of a conversational search system over an online community. "
         "Reply with a single JSON value and nothing else. It must conform to this JSON "
         "schema; fields not listed in the schema are not allowed:\n" +
         tmpl.output_schema.dump();
}

LlmGateway::LlmGateway(std::shared_ptr<LlmProvider> provider, std::shared_ptr<CallLog> log,
                       std::shared_ptr<InFlightLimiter> limiter, GatewayOptions options)
    : provider_(std::move(provider)),
      log_(log ? std::move(log) : std::make_shared<CallLog>()),
      limiter_(limiter ? std::move(limiter) : std::make_shared<InFlightLimiter>(4)),
      options_(options),
      provider_id_(provider_->id()) {}

std::string LlmGateway::call_provider(LlmRequest& request) {
  std::string last;
  for (int t = 0; t <= options_.transport_retries; ++t) {
    limiter_->acquire();
    try {
      std::string out = provider_->complete(request);
      limiter_->release();
      return out;
    } catch (const ProviderError& e) {
      limiter_->release();
      last = e.what();
    } catch (...) {
      limiter_->release();
      throw;
    }
  }
  throw ProviderError(request.template_id + ": " + last);
}

json LlmGateway::complete_structured(std::string_view template_id, const json& bindings,
                                     const SemanticCheck& check) {
  const PromptTemplate& tmpl = find_template(template_id);
  const std::string prompt = render(tmpl, bindings);

  LlmRequest request;
  request.template_id = tmpl.id;
  request.digest = binding_digest(tmpl, bindings);
  request.bindings = bindings;
  request.messages = {{"system", system_prompt_for(tmpl)}, {"user", prompt}};
  request.temperature = 0.0;

  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_repair_attempts; ++attempt) {
    request.attempt = attempt;
    LlmCall call;
    call.template_id = tmpl.id;
    call.digest = request.digest;
    call.bindings = bindings;
    call.rendered_prompt = prompt;
    call.provider_id = provider_id_;
    call.attempt = attempt;

    const auto start = std::chrono::steady_clock::now();
    try {
      call.raw_response = call_provider(request);
    } catch (const ProviderError& e) {
      call.error = std::string("transport: ") + e.what();
      call.latency_ms = std::chrono::duration<double, std::milli>(
                            std::chrono::steady_clock::now() - start)
                            .count();
      log_->append(std::move(call));
      throw;
    }
    call.latency_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();

    std::optional<std::string> error;
    auto parsed = parse_model_json(call.raw_response);
    if (!parsed) {
      error = "response is not valid JSON";
    } else {
      if (tmpl.max_output_items && parsed->is_object() && parsed->contains(tmpl.list_field) &&
          (*parsed)[tmpl.list_field].is_array()) {
        auto& list = (*parsed)[tmpl.list_field];
        if (list.size() > *tmpl.max_output_items) {
          list.erase(list.begin() + static_cast<std::ptrdiff_t>(*tmpl.max_output_items),
                     list.end());
        }
      }
      error = validate_schema(tmpl.output_schema, *parsed);
      if (!error && check) error = check(*parsed);
    }

    if (!error) {
      call.parsed = *parsed;
      json result = *parsed;
      log_->append(std::move(call));
      return result;
    }
    call.error = *error;
    last_error = *error;
    request.messages.push_back({"assistant", call.raw_response});
    request.messages.push_back(
        {"user", "Your previous reply was rejected: " + *error +
                     ". Reply again with only the corrected JSON value."});
    log_->append(std::move(call));
  }
  throw PipelineError(tmpl.id, tmpl.id + ": no valid output after " +
                                   std::to_string(options_.max_repair_attempts) +
                                   " repair attempts (" + last_error + ")");
}

std::vector<json> LlmGateway::complete_many(const std::vector<StructuredRequest>& requests) {
  std::vector<std::future<json>> futures;
  futures.reserve(requests.size());
  for (const auto& r : requests) {
    futures.push_back(std::async(std::launch::async, [this, &r] {
      return complete_structured(r.template_id, r.bindings, r.check);
    }));
  }
  std::vector<json> out;
  out.reserve(requests.size());
  std::exception_ptr first;
  for (auto& f : futures) {
    try {
      out.push_back(f.get());
    } catch (...) {
      if (!first) first = std::current_exception();
      out.emplace_back(nullptr);
    }
  }
  if (first) std::rethrow_exception(first);
  return out;
}

}  // namespace consearch
