#include "consearch/consearch.h"

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "cluster/hdbscan.hpp"
#include "common/errors.hpp"
#include "corpus/corpus.hpp"
#include "index/http_embedder.hpp"
#include "index/vector_index.hpp"
#include "persona/pipeline.hpp"
#include "service/config.hpp"
#include "service/engine.hpp"
#include "service/server.hpp"

struct cs_corpus {
  consearch::CommunityCorpus corpus;
};

struct cs_index {
  consearch::VectorIndex index;
};

struct cs_engine {
  std::unique_ptr<consearch::Engine> engine;
  std::unique_ptr<consearch::Server> server;
};

namespace {

using nlohmann::json;
using namespace consearch;

thread_local std::string last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

cs_status fail(cs_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
cs_status guarded(F&& body) {
  try {
    last_error.clear();
    body();
    return CS_OK;
  } catch (const std::invalid_argument& e) {
    return fail(CS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const ValidationError& e) {
    return fail(CS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const json::exception& e) {
    return fail(CS_ERR_INVALID_ARGUMENT, e.what());
  } catch (const IngestError& e) {
    return fail(CS_ERR_IO, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(CS_ERR_IO, e.what());
  } catch (const NotFoundError& e) {
    return fail(CS_ERR_NOT_FOUND, e.what());
  } catch (const ConflictError& e) {
    return fail(CS_ERR_CONFLICT, e.what());
  } catch (const ProviderError& e) {
    return fail(CS_ERR_PROVIDER, e.what());
  } catch (const EmbeddingError& e) {
    return fail(CS_ERR_PROVIDER, e.what());
  } catch (const PipelineError& e) {
    return fail(CS_ERR_PIPELINE, e.template_id() + ": " + e.what());
  } catch (const std::exception& e) {
    return fail(CS_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(CS_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw std::invalid_argument(std::string(what) + " must not be NULL");
}

json report_json(const IngestReport& r) {
  return json{{"total_records", r.total_records},
              {"retained_posts", r.retained_posts},
              {"retained_comments", r.retained_comments},
              {"retained", r.retained()},
              {"dropped", r.dropped},
              {"dropped_total", r.dropped_total()}};
}

std::unique_ptr<EmbeddingProvider> embedder_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("embedding settings must be a JSON object");
  const std::size_t dim = j.value("dim", std::size_t{256});
  if (j.value("mock", false)) {
    return std::make_unique<MockEmbedder>(dim, j.value("seed", std::uint64_t{0}));
  }
  const std::string url = j.value("url", "");
  const std::string model = j.value("model", "");
  if (url.empty() || model.empty()) {
    throw std::invalid_argument("remote embedding needs 'url' and 'model'");
  }
  HttpPostOptions opts;
  opts.timeout = std::chrono::milliseconds(j.value("timeout_ms", 30000));
  opts.retries = j.value("retries", 2);
  const std::string key = j.value("api_key", "");
  if (!key.empty()) opts.headers.emplace_back("Authorization", "Bearer " + key);
  return std::make_unique<HttpEmbedder>(url, model, dim, opts);
}

json cluster_inspect(const json& req) {
  const auto& items_json = req.at("items");
  if (!items_json.is_array()) throw std::invalid_argument("'items' must be an array");
  std::vector<std::string> ids;
  std::vector<EmbeddingVector> vectors;
  for (const auto& item : items_json) {
    ids.push_back(item.at("id").get<std::string>());
    vectors.emplace_back(item.at("vector").get<std::vector<float>>());
  }
  HdbscanParams params;
  params.min_cluster_size = req.value("min_cluster_size", params.min_cluster_size);
  params.min_samples = req.value("min_samples", params.min_samples);
  const std::size_t central = req.value("central", std::size_t{10});

  const auto assignment = hdbscan(vectors, params);
  std::vector<ClusterItem> items;
  for (std::size_t i = 0; i < ids.size(); ++i) items.push_back({ids[i], vectors[i].values()});

  json labels = json::object();
  for (std::size_t i = 0; i < ids.size(); ++i) labels[ids[i]] = assignment.labels[i];
  json clusters = json::array();
  const auto members = assignment.members();
  for (std::size_t c = 0; c < members.size(); ++c) {
    std::vector<std::string> member_ids;
    for (auto i : members[c]) member_ids.push_back(ids[i]);
    clusters.push_back({{"label", c},
                        {"members", member_ids},
                        {"central", central_members(items, member_ids, central)}});
  }
  json noise = json::array();
  for (auto i : assignment.noise()) noise.push_back(ids[i]);
  return json{{"params",
               {{"min_cluster_size", params.min_cluster_size}, {"min_samples", params.min_samples}}},
              {"labels", labels},
              {"clusters", clusters},
              {"noise", noise}};
}

json pipeline_run(Engine& engine, const std::string& query) {
  auto ctx = engine.context();
  json out;
  out["query"] = query;
  auto factors = decompose_factors(query, ctx);
  out["factors"] = factors;

  SeekerTrace seeker_trace;
  auto seekers = generate_seekers(query, factors, ctx, &seeker_trace);
  out["seekers"] = seekers;
  out["seeker_trace"] = {{"pool_post_ids", seeker_trace.pool_post_ids},
                         {"central_post_ids", seeker_trace.central_post_ids},
                         {"degenerate", seeker_trace.degenerate}};
  if (seekers.empty()) return out;

  SeekerPersona seeker = seekers.front();
  if (seeker.situated_factors.empty()) {
    seeker.attach(generate_situation(seeker, factors.front(), query, ctx));
  }
  auto queries = suggest_seeker_queries(seeker, query, ctx);
  out["selected_seeker"] = seeker;
  out["seeker_queries"] = queries;

  ProviderTrace provider_trace;
  auto providers = generate_providers(seeker, queries, ctx, &provider_trace);
  json provider_views = json::array();
  for (const auto& p : providers) provider_views.push_back(public_view(p));
  out["providers"] = provider_views;
  out["provider_trace"] = {{"pool_segment_ids", provider_trace.pool_segment_ids},
                           {"central_segment_ids", provider_trace.central_segment_ids},
                           {"surviving_groups", provider_trace.surviving_groups}};
  out["llm_calls"] = engine.call_log()->size();
  return out;
}

ServiceConfig config_from_json(const char* config_json, const char* base_dir) {
  require(config_json, "config_json");
  ServiceConfig cfg = parse_config(json::parse(config_json), base_dir ? base_dir : "");
  apply_env_overrides(cfg);
  cfg.validate();
  return cfg;
}

}  // namespace

extern "C" {

const char* cs_version(void) { return "0.1.0"; }

const char* cs_status_name(cs_status status) {
  switch (status) {
    case CS_OK: return "ok";
    case CS_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case CS_ERR_IO: return "io";
    case CS_ERR_NOT_FOUND: return "not_found";
    case CS_ERR_CONFLICT: return "conflict";
    case CS_ERR_PROVIDER: return "provider";
    case CS_ERR_PIPELINE: return "pipeline";
    case CS_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* cs_last_error(void) { return last_error.c_str(); }

void cs_string_free(char* s) { std::free(s); }

cs_status cs_corpus_load_dump(const char* dump_path, const char* format, cs_corpus** out) {
  return guarded([&] {
    require(dump_path, "dump_path");
    require(out, "out");
    const auto fmt = parse_dump_format(format ? format : "ndjson");
    *out = new cs_corpus{load_dump(dump_path, fmt)};
  });
}

cs_status cs_corpus_load(const char* corpus_path, cs_corpus** out) {
  return guarded([&] {
    require(corpus_path, "corpus_path");
    require(out, "out");
    *out = new cs_corpus{load_corpus(corpus_path)};
  });
}

cs_status cs_corpus_save(const cs_corpus* corpus, const char* path, char** hash_out) {
  return guarded([&] {
    require(corpus, "corpus");
    require(path, "path");
    save_corpus(corpus->corpus, path);
    if (hash_out) *hash_out = dup(corpus->corpus.content_hash());
  });
}

cs_status cs_corpus_report_json(const cs_corpus* corpus, char** json_out) {
  return guarded([&] {
    require(corpus, "corpus");
    require(json_out, "json_out");
    json j = report_json(corpus->corpus.ingest_report());
    j["community"] = corpus->corpus.community_name();
    j["content_hash"] = corpus->corpus.content_hash();
    *json_out = dup(j.dump());
  });
}

void cs_corpus_free(cs_corpus* corpus) { delete corpus; }

cs_status cs_index_build(const cs_corpus* corpus, const char* embedding_json, cs_index** out) {
  return guarded([&] {
    require(corpus, "corpus");
    require(out, "out");
    const json settings = embedding_json ? json::parse(embedding_json) : json{{"mock", true}};
    auto embedder = embedder_from_json(settings);
    const std::size_t batch = settings.value("batch_size", std::size_t{64});
    *out = new cs_index{build_index(corpus->corpus, *embedder, {}, batch)};
  });
}

cs_status cs_index_load(const char* path, cs_index** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new cs_index{load_index(path)};
  });
}

cs_status cs_index_save(const cs_index* index, const char* path) {
  return guarded([&] {
    require(index, "index");
    require(path, "path");
    save_index(index->index, path);
  });
}

cs_status cs_index_info_json(const cs_index* index, char** json_out) {
  return guarded([&] {
    require(index, "index");
    require(json_out, "json_out");
    const auto& i = index->index;
    *json_out = dup(json{{"embedder_id", i.embedder_id()},
                         {"dim", i.dim()},
                         {"corpus_hash", i.corpus_hash()},
                         {"segments", i.size()}}
                        .dump());
  });
}

void cs_index_free(cs_index* index) { delete index; }

cs_status cs_cluster_inspect(const char* request_json, char** json_out) {
  return guarded([&] {
    require(request_json, "request_json");
    require(json_out, "json_out");
    *json_out = dup(cluster_inspect(json::parse(request_json)).dump());
  });
}

cs_status cs_pipeline_run(const char* config_json, const char* base_dir, const char* query,
                          char** json_out) {
  return guarded([&] {
    require(query, "query");
    require(json_out, "json_out");
    auto engine = Engine::open(config_from_json(config_json, base_dir));
    *json_out = dup(pipeline_run(*engine, query).dump());
  });
}

cs_status cs_engine_open(const char* config_path, cs_engine** out) {
  return guarded([&] {
    require(config_path, "config_path");
    require(out, "out");
    *out = new cs_engine{Engine::open(load_config(config_path)), nullptr};
  });
}

cs_status cs_engine_open_json(const char* config_json, const char* base_dir, cs_engine** out) {
  return guarded([&] {
    require(out, "out");
    *out = new cs_engine{Engine::open(config_from_json(config_json, base_dir)), nullptr};
  });
}

cs_status cs_engine_request(cs_engine* engine, const char* method, const char* path,
                            const char* body, const char* authorization, int* status_out,
                            char** body_out) {
  return guarded([&] {
    require(engine, "engine");
    require(method, "method");
    require(path, "path");
    require(status_out, "status_out");
    require(body_out, "body_out");
    const ApiResponse r = engine->engine->handle(
        {method, path, body ? body : "", authorization ? authorization : ""});
    *status_out = r.status;
    *body_out = dup(r.body.dump());
  });
}

cs_status cs_engine_bind(cs_engine* engine, const char* host, int port, int* bound_port) {
  return guarded([&] {
    require(engine, "engine");
    if (engine->server) throw std::invalid_argument("engine is already bound");
    auto server = std::make_unique<Server>(*engine->engine);
    const auto& cfg = engine->engine->config();
    const int bound = server->bind(host ? host : cfg.host, port < 0 ? cfg.port : port);
    engine->server = std::move(server);
    if (bound_port) *bound_port = bound;
  });
}

cs_status cs_engine_serve(cs_engine* engine) {
  return guarded([&] {
    require(engine, "engine");
    if (!engine->server) throw std::invalid_argument("call cs_engine_bind first");
    engine->server->listen();
  });
}

cs_status cs_engine_stop(cs_engine* engine) {
  return guarded([&] {
    require(engine, "engine");
    if (engine->server) engine->server->stop();
  });
}

cs_status cs_engine_call_log_json(const cs_engine* engine, size_t since, char** json_out) {
  return guarded([&] {
    require(engine, "engine");
    require(json_out, "json_out");
    const auto calls = engine->engine->call_log()->snapshot();
    json out = json::array();
    for (std::size_t i = since; i < calls.size(); ++i) out.push_back(calls[i].to_json());
    *json_out = dup(out.dump());
  });
}

void cs_engine_free(cs_engine* engine) {
  if (!engine) return;
  if (engine->server) engine->server->stop();
  delete engine;
}

}  // extern "C"
