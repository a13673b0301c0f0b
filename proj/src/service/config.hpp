#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dialogue/dialogue.hpp"
#include "index/vector_index.hpp"
#include "persona/pipeline.hpp"

namespace consearch {

struct LlmSettings {
  std::string url;  // chat-completions endpoint
  std::string model;
  std::string api_key;
  std::string fixtures;       // mock: fixture directory
  std::string record_misses;  // mock: write filler replies here as fixtures
  std::size_t max_in_flight = 4;
  int max_repair_attempts = 2;
  int timeout_ms = 60000;
  int retries = 2;  // extra attempts on transport errors, 429 and 5xx
};

struct EmbeddingSettings {
  std::string url;
  std::string model;
  std::string api_key;
  std::size_t dim = 256;
  std::uint64_t mock_seed = 0;
  std::size_t batch_size = 64;
  int timeout_ms = 30000;
  int retries = 2;
};

struct ServiceConfig {
  bool mock = false;
  std::string dump;    // raw community dump, ingested at startup
  std::string corpus;  // canonical corpus file (alternative to dump)
  std::string index;   // optional prebuilt index; built in memory when empty
  std::string session_store;  // directory; sessions stay in memory when empty
  std::string ui_dir;         // static files served under /
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string api_token;  // when set, /api requires "Authorization: Bearer <token>"
  bool debug = false;     // exposes the call log endpoint
  std::uint64_t rng_seed = 0;
  LlmSettings llm;
  EmbeddingSettings embedding;
  RetrievalConfig retrieval;
  PersonaConfig persona;
  DialogueConfig dialogue;

  // Throws std::invalid_argument describing the first problem.
  void validate() const;
};

// Parses a JSON config document. Relative paths resolve against `base_dir`.
// Unknown keys are rejected.
ServiceConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

// Reads `path`, then applies environment overrides, then validates.
ServiceConfig load_config(const std::filesystem::path& path);

// CONSEARCH_LLM_API_KEY, CONSEARCH_LLM_URL, CONSEARCH_LLM_MODEL,
// CONSEARCH_EMBEDDING_API_KEY, CONSEARCH_EMBEDDING_URL, CONSEARCH_API_TOKEN,
// CONSEARCH_HOST, CONSEARCH_PORT, CONSEARCH_SESSION_STORE.
void apply_env_overrides(ServiceConfig& cfg);

}  // namespace consearch
