#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "corpus/corpus.hpp"
#include "index/vector_index.hpp"
#include "llm/gateway.hpp"
#include "service/config.hpp"
#include "service/session.hpp"
#include "service/store.hpp"

namespace consearch {

struct ApiRequest {
  std::string method;  // GET | POST | PATCH | ...
  std::string path;    // may carry a ?query string
  std::string body;
  std::string authorization;  // Authorization header, if any
};

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

// The running artifact: corpus, index, model providers and sessions behind
// a transport-independent JSON router.
class Engine {
 public:
  using Clock = std::function<std::int64_t()>;  // ms since the Unix epoch

  // Loads or ingests the corpus, loads or builds the index, connects the
  // providers and restores persisted sessions.
  static std::unique_ptr<Engine> open(const ServiceConfig& config);

  Engine(ServiceConfig config, CommunityCorpus corpus, std::unique_ptr<EmbeddingProvider> embedder,
         std::optional<VectorIndex> index, std::shared_ptr<LlmProvider> llm);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  // Never throws; failures become {code, message, detail} envelopes.
  ApiResponse handle(const ApiRequest& request);

  void set_clock(Clock clock);
  const ServiceConfig& config() const { return config_; }
  const CommunityCorpus& corpus() const { return corpus_; }
  const VectorIndex& index() const { return index_; }
  const std::shared_ptr<CallLog>& call_log() const { return log_; }
  std::shared_ptr<const Session> session(const std::string& id) const;
  // Pipeline inputs bound to this engine's corpus, index and providers.
  PipelineContext context();

  // Typed operations behind the routes. They throw the domain errors that
  // handle() maps to status codes.
  nlohmann::json create_session(const nlohmann::json& body);
  nlohmann::json focus_factor(const std::string& sid, const std::string& fid,
                              const nlohmann::json& body);
  nlohmann::json edit_seeker(const std::string& sid, const std::string& pid,
                             const nlohmann::json& body);
  nlohmann::json seeker_queries(const std::string& sid, const std::string& pid);
  nlohmann::json generate_providers(const std::string& sid);
  nlohmann::json chat(const std::string& sid, const std::string& chat, const nlohmann::json& body);
  nlohmann::json get_session(const std::string& sid) const;
  nlohmann::json session_posts(const std::string& sid, const std::string& factor_id) const;
  nlohmann::json summarize(const std::string& sid, const nlohmann::json& body);
  nlohmann::json get_segment(const std::string& segment_id) const;
  nlohmann::json get_post(const std::string& post_id) const;

 private:
  struct Slot;

  std::shared_ptr<Slot> slot(const std::string& sid) const;
  std::shared_ptr<const Session> current(Slot& s) const;
  // Caller holds the slot's writer lock.
  std::shared_ptr<const Session> commit(Slot& s, const std::string& type, nlohmann::json payload);
  std::string new_session_id();
  std::int64_t now() const;

  ServiceConfig config_;
  CommunityCorpus corpus_;
  std::unique_ptr<EmbeddingProvider> embedder_;
  VectorIndex index_;
  std::shared_ptr<LlmProvider> llm_;
  std::shared_ptr<CallLog> log_;
  std::unique_ptr<LlmGateway> gateway_;
  SessionStore store_;
  Clock clock_;

  mutable std::mutex sessions_mu_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::mutex id_mu_;
  std::uint64_t id_state_;
};

}  // namespace consearch
