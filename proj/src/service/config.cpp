#include "service/config.hpp"

#include <cstdlib>
#include <set>
#include <stdexcept>

#include "common/file_util.hpp"

namespace consearch {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
  for (const auto& [k, v] : j.items()) {
    if (!known.count(k)) throw std::invalid_argument("unknown config key '" + where + k + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw std::invalid_argument("config key '" + where + key + "' has the wrong type");
  }
}

std::string resolve(const std::string& p, const fs::path& base) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (base / p).lexically_normal().string();
}

}  // namespace

ServiceConfig parse_config(const json& j, const fs::path& base_dir) {
  ServiceConfig c;
  reject_unknown(j,
                 {"mock", "dump", "corpus", "index", "session_store", "ui_dir", "host", "port",
                  "api_token", "debug", "rng_seed", "llm", "embedding", "retrieval", "persona",
                  "dialogue"},
                 "");
  read(j, "mock", c.mock, "");
  read(j, "dump", c.dump, "");
  read(j, "corpus", c.corpus, "");
  read(j, "index", c.index, "");
  read(j, "session_store", c.session_store, "");
  read(j, "ui_dir", c.ui_dir, "");
  read(j, "host", c.host, "");
  read(j, "port", c.port, "");
  read(j, "api_token", c.api_token, "");
  read(j, "debug", c.debug, "");
  read(j, "rng_seed", c.rng_seed, "");

  if (j.contains("llm")) {
    const auto& l = j["llm"];
    reject_unknown(l,
                   {"url", "model", "api_key", "fixtures", "record_misses", "max_in_flight",
                    "max_repair_attempts", "timeout_ms", "retries"},
                   "llm.");
    read(l, "url", c.llm.url, "llm.");
    read(l, "model", c.llm.model, "llm.");
    read(l, "api_key", c.llm.api_key, "llm.");
    read(l, "fixtures", c.llm.fixtures, "llm.");
    read(l, "record_misses", c.llm.record_misses, "llm.");
    read(l, "max_in_flight", c.llm.max_in_flight, "llm.");
    read(l, "max_repair_attempts", c.llm.max_repair_attempts, "llm.");
    read(l, "timeout_ms", c.llm.timeout_ms, "llm.");
    read(l, "retries", c.llm.retries, "llm.");
  }
  if (j.contains("embedding")) {
    const auto& e = j["embedding"];
    reject_unknown(e, {"url", "model", "api_key", "dim", "mock_seed", "batch_size", "timeout_ms",
                     "retries"}, "embedding.");
    read(e, "url", c.embedding.url, "embedding.");
    read(e, "model", c.embedding.model, "embedding.");
    read(e, "api_key", c.embedding.api_key, "embedding.");
    read(e, "dim", c.embedding.dim, "embedding.");
    read(e, "mock_seed", c.embedding.mock_seed, "embedding.");
    read(e, "batch_size", c.embedding.batch_size, "embedding.");
    read(e, "timeout_ms", c.embedding.timeout_ms, "embedding.");
    read(e, "retries", c.embedding.retries, "embedding.");
  }
  if (j.contains("retrieval")) {
    const auto& r = j["retrieval"];
    reject_unknown(r,
                   {"k_response", "k_provider_comments", "provider_sim_floor",
                    "central_comments_per_group"},
                   "retrieval.");
    read(r, "k_response", c.retrieval.k_response, "retrieval.");
    read(r, "k_provider_comments", c.retrieval.k_provider_comments, "retrieval.");
    read(r, "provider_sim_floor", c.retrieval.provider_sim_floor, "retrieval.");
    read(r, "central_comments_per_group", c.retrieval.central_comments_per_group, "retrieval.");
  }
  if (j.contains("persona")) {
    const auto& p = j["persona"];
    reject_unknown(p,
                   {"posts_per_factor", "central_posts", "seeker_count", "min_factors",
                    "max_factors", "min_providers", "max_providers", "seeker_min_cluster_size",
                    "seeker_min_samples", "provider_min_cluster_size", "provider_min_samples"},
                   "persona.");
    read(p, "posts_per_factor", c.persona.posts_per_factor, "persona.");
    read(p, "central_posts", c.persona.central_posts, "persona.");
    read(p, "seeker_count", c.persona.seeker_count, "persona.");
    read(p, "min_factors", c.persona.min_factors, "persona.");
    read(p, "max_factors", c.persona.max_factors, "persona.");
    read(p, "min_providers", c.persona.min_providers, "persona.");
    read(p, "max_providers", c.persona.max_providers, "persona.");
    read(p, "seeker_min_cluster_size", c.persona.seeker_clusters.min_cluster_size, "persona.");
    read(p, "seeker_min_samples", c.persona.seeker_clusters.min_samples, "persona.");
    read(p, "provider_min_cluster_size", c.persona.provider_clusters.min_cluster_size, "persona.");
    read(p, "provider_min_samples", c.persona.provider_clusters.min_samples, "persona.");
  }
  if (j.contains("dialogue")) {
    const auto& d = j["dialogue"];
    reject_unknown(d, {"history_window", "max_selection_chars"}, "dialogue.");
    read(d, "history_window", c.dialogue.history_window, "dialogue.");
    read(d, "max_selection_chars", c.dialogue.max_selection_chars, "dialogue.");
  }

  for (std::string* p : {&c.dump, &c.corpus, &c.index, &c.session_store, &c.ui_dir,
                         &c.llm.fixtures, &c.llm.record_misses}) {
    *p = resolve(*p, base_dir);
  }
  return c;
}

void apply_env_overrides(ServiceConfig& c) {
  auto env = [](const char* name, std::string& out) {
    if (const char* v = std::getenv(name); v && *v) out = v;
  };
  env("CONSEARCH_LLM_API_KEY", c.llm.api_key);
  env("CONSEARCH_LLM_URL", c.llm.url);
  env("CONSEARCH_LLM_MODEL", c.llm.model);
  env("CONSEARCH_EMBEDDING_API_KEY", c.embedding.api_key);
  env("CONSEARCH_EMBEDDING_URL", c.embedding.url);
  env("CONSEARCH_API_TOKEN", c.api_token);
  env("CONSEARCH_HOST", c.host);
  env("CONSEARCH_SESSION_STORE", c.session_store);
  std::string port;
  env("CONSEARCH_PORT", port);
  if (!port.empty()) {
    try {
      c.port = std::stoi(port);
    } catch (const std::exception&) {
      throw std::invalid_argument("CONSEARCH_PORT is not a number: " + port);
    }
  }
}

void ServiceConfig::validate() const {
  if (dump.empty() == corpus.empty()) {
    throw std::invalid_argument("config needs exactly one of 'dump' or 'corpus'");
  }
  if (port < 0 || port > 65535) throw std::invalid_argument("port out of range");
  if (llm.max_in_flight == 0) throw std::invalid_argument("llm.max_in_flight must be positive");
  if (llm.max_repair_attempts < 0) throw std::invalid_argument("llm.max_repair_attempts < 0");
  if (embedding.dim == 0) throw std::invalid_argument("embedding.dim must be positive");
  if (llm.timeout_ms <= 0 || embedding.timeout_ms <= 0) {
    throw std::invalid_argument("timeout_ms must be positive");
  }
  if (llm.retries < 0 || embedding.retries < 0) throw std::invalid_argument("retries < 0");
  retrieval.validate();
  if (persona.seeker_count == 0) throw std::invalid_argument("persona.seeker_count must be positive");
  if (persona.min_factors == 0 || persona.min_factors > persona.max_factors) {
    throw std::invalid_argument("persona.min_factors/max_factors are inconsistent");
  }
  if (persona.max_providers == 0 || persona.min_providers > persona.max_providers) {
    throw std::invalid_argument("persona.min_providers/max_providers are inconsistent");
  }
  if (persona.seeker_query_count != 5) {
    throw std::invalid_argument("seeker query count is fixed at 5");
  }
  if (!mock) {
    if (llm.url.empty() || llm.model.empty() || llm.api_key.empty()) {
      throw std::invalid_argument(
          "llm.url, llm.model and llm.api_key (or CONSEARCH_LLM_API_KEY) are required unless "
          "mock is true");
    }
    if (embedding.url.empty() || embedding.model.empty() || embedding.api_key.empty()) {
      throw std::invalid_argument(
          "embedding.url, embedding.model and embedding.api_key (or "
          "CONSEARCH_EMBEDDING_API_KEY) are required unless mock is true");
    }
  }
}

ServiceConfig load_config(const fs::path& path) {
  const json j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("config is not valid JSON: " + path.string());
  ServiceConfig c = parse_config(j, path.parent_path());
  apply_env_overrides(c);
  c.validate();
  return c;
}

}  // namespace consearch
