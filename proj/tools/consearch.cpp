#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "consearch/consearch.h"

using nlohmann::json;

namespace {

class CsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(cs_status status) {
  if (status != CS_OK) {
    throw CsError(std::string(cs_status_name(status)) + ": " + cs_last_error());
  }
}

std::string take(char* s) {
  std::string out = s ? s : "";
  cs_string_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string default_path(const std::string& rel) {
  return std::string(CONSEARCH_DATA_DIR) + "/" + rel;
}

// Owns an engine handle and exposes the JSON API.
class Api {
 public:
  explicit Api(cs_engine* engine) : engine_(engine) {}
  ~Api() { cs_engine_free(engine_); }
  Api(const Api&) = delete;
  Api& operator=(const Api&) = delete;

  json request(const std::string& method, const std::string& path, const json& body = nullptr) {
    int status = 0;
    char* out = nullptr;
    const std::string text = body.is_null() ? "" : body.dump();
    check(cs_engine_request(engine_, method.c_str(), path.c_str(), text.c_str(), nullptr, &status,
                            &out));
    json j = json::parse(take(out));
    if (status >= 400) {
      throw std::runtime_error(method + " " + path + " -> " + std::to_string(status) + " " +
                               j.dump());
    }
    return j;
  }

 private:
  cs_engine* engine_;
};

json mock_config(const std::string& dump, const std::string& fixtures, const std::string& store) {
  json cfg = {{"mock", true}, {"dump", dump}, {"llm", {{"fixtures", fixtures}}}};
  if (!store.empty()) cfg["session_store"] = store;
  return cfg;
}

cs_engine* open_engine(const std::string& config_path, const json& inline_config) {
  cs_engine* engine = nullptr;
  if (!config_path.empty()) {
    check(cs_engine_open(config_path.c_str(), &engine));
  } else {
    check(cs_engine_open_json(inline_config.dump().c_str(), nullptr, &engine));
  }
  return engine;
}

std::string find_by(const json& list, const char* key, const std::string& value) {
  for (const auto& item : list) {
    if (item.at(key) == value) return item.at("id");
  }
  if (list.empty()) throw std::runtime_error("nothing to choose from");
  std::cerr << "note: no entry with " << key << " '" << value << "', using the first\n";
  return list.front().at("id");
}

std::string question_with(const json& response, const std::string& strategy) {
  for (const auto& q : response.at("recommended_questions")) {
    if (q.at("strategy") == strategy) return q.at("text");
  }
  return response.at("recommended_questions").at(0).at("text");
}

// create -> focus -> edit -> queries -> providers -> three chat turns.
json run_demo(Api& api, const std::string& query) {
  const json created = api.request("POST", "/api/sessions", {{"query", query}, {"mode", "full"}});
  const std::string sid = created.at("session_id");
  const std::string base = "/api/sessions/" + sid;
  std::cerr << "session " << sid << ": " << created.at("factors").size() << " factors, "
            << created.at("seekers").size() << " seekers\n";

  const std::string seeker = find_by(created.at("seekers"), "name", "Akira");
  const std::string factor = find_by(created.at("factors"), "title", "Hotel Accommodation");
  api.request("PATCH", base + "/factors/" + factor, {{"focused", true}, {"seeker_id", seeker}});

  const json state = api.request("GET", base);
  json persona;
  for (const auto& p : state.at("seekers")) {
    if (p.at("id") == seeker) persona = p;
  }
  json situations = json::array();
  for (const auto& sf : persona.at("situated_factors")) {
    json edited = {{"factor_id", sf.at("factor_id")}, {"situation", sf.at("situation")}};
    if (sf.at("factor_id") == factor) {
      edited["situation"] =
          "I would rather stay in a downtown hotel close to the anime districts so I can walk "
          "back late after events.";
    }
    situations.push_back(edited);
  }
  api.request("PATCH", base + "/seekers/" + seeker, {{"situated_factors", situations}});

  const json queries = api.request("POST", base + "/seekers/" + seeker + "/queries");
  std::cerr << "seeker queries: " << queries.at("queries").size() << "\n";
  const json providers = api.request("POST", base + "/providers");
  std::cerr << "provider personas: " << providers.at("providers").size() << "\n";
  const std::string provider = find_by(providers.at("providers"), "name", "Yuki");

  const std::string chat = base + "/chats/" + provider + "/messages";
  json turn = api.request("POST", chat, {{"text", queries.at("queries").at(0)}, {"origin", "typed"}});
  turn = api.request("POST", chat, {{"text", question_with(turn, "history")}, {"origin", "suggested"}});
  turn = api.request("POST", chat,
                     {{"text", question_with(turn, "underexplored_factor")}, {"origin", "suggested"}});
  return api.request("GET", base);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Persona-driven conversational search over a community corpus"};
  app.require_subcommand(1);

  std::string dump, out, format = "ndjson";
  auto* ingest = app.add_subcommand("ingest", "Parse a community dump into a canonical corpus");
  ingest->add_option("--dump", dump, "NDJSON dump")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", out, "Corpus file to write")->required();
  ingest->add_option("--format", format, "Dump format")->check(CLI::IsMember({"ndjson"}));

  std::string corpus_path, emb_url, emb_model;
  bool mock_embedder = false;
  std::size_t dim = 256;
  std::uint64_t seed = 0;
  auto* index = app.add_subcommand("index", "Embed a corpus and write the vector index");
  index->add_option("--corpus", corpus_path, "Corpus file")->required()->check(CLI::ExistingFile);
  index->add_option("--out", out, "Index file to write")->required();
  index->add_flag("--mock-embedder", mock_embedder, "Use the deterministic trigram embedder");
  index->add_option("--dim", dim, "Embedding dimension");
  index->add_option("--seed", seed, "Mock embedder seed");
  index->add_option("--embedding-url", emb_url, "Remote embedding endpoint");
  index->add_option("--embedding-model", emb_model, "Remote embedding model");

  std::string config;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
  int port = -1;
  std::string host;
  serve->add_option("--port", port, "Override the configured port");
  serve->add_option("--host", host, "Override the configured host");

  std::string query, fixtures, store;
  bool mock = false;
  auto* demo = app.add_subcommand("demo", "Scripted full-pipeline session; prints the session JSON");
  demo->add_option("--query", query, "Initial query")->required();
  demo->add_flag("--mock", mock, "Mock LLM and embedder (no network)");
  demo->add_option("--config", config, "JSON config file (instead of --mock)");
  demo->add_option("--dump", dump, "Dump to ingest in mock mode");
  demo->add_option("--fixtures", fixtures, "LLM fixture directory in mock mode");
  demo->add_option("--session-store", store, "Persist the session here");
  demo->add_option("--out", out, "Also write the session JSON here");

  std::string points;
  std::size_t min_cluster_size = 5, min_samples = 3, central = 10;
  auto* inspect = app.add_subcommand("cluster-inspect", "Cluster points and dump the assignment");
  inspect->add_option("--points", points, "JSON file {items: [{id, vector}]}")
      ->required()
      ->check(CLI::ExistingFile);
  inspect->add_option("--min-cluster-size", min_cluster_size);
  inspect->add_option("--min-samples", min_samples);
  inspect->add_option("--central", central, "Central members listed per cluster");

  auto* pipeline = app.add_subcommand("pipeline-run", "Run the persona pipeline and dump every artifact");
  pipeline->add_option("--query", query, "Initial query")->required();
  pipeline->add_option("--corpus", corpus_path, "Corpus file");
  pipeline->add_option("--dump", dump, "Dump file");
  pipeline->add_flag("--mock", mock, "Mock LLM and embedder (no network)");
  pipeline->add_option("--fixtures", fixtures, "LLM fixture directory in mock mode");
  pipeline->add_option("--config", config, "JSON config file (instead of --mock)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      cs_corpus* c = nullptr;
      check(cs_corpus_load_dump(dump.c_str(), format.c_str(), &c));
      char* hash = nullptr;
      char* report = nullptr;
      const cs_status s1 = cs_corpus_save(c, out.c_str(), &hash);
      const cs_status s2 = s1 == CS_OK ? cs_corpus_report_json(c, &report) : s1;
      cs_corpus_free(c);
      check(s2);
      take(hash);
      std::cout << json::parse(take(report)).dump(2) << "\n";
    } else if (*index) {
      json settings;
      if (mock_embedder) {
        settings = {{"mock", true}, {"dim", dim}, {"seed", seed}};
      } else {
        const char* key = std::getenv("CONSEARCH_EMBEDDING_API_KEY");
        if (emb_url.empty() || emb_model.empty()) {
          throw std::runtime_error("--embedding-url and --embedding-model are required without --mock-embedder");
        }
        settings = {{"url", emb_url}, {"model", emb_model}, {"dim", dim}, {"api_key", key ? key : ""}};
      }
      cs_corpus* c = nullptr;
      check(cs_corpus_load(corpus_path.c_str(), &c));
      cs_index* idx = nullptr;
      const cs_status built = cs_index_build(c, settings.dump().c_str(), &idx);
      cs_corpus_free(c);
      check(built);
      const cs_status saved = cs_index_save(idx, out.c_str());
      char* info = nullptr;
      const cs_status described = saved == CS_OK ? cs_index_info_json(idx, &info) : saved;
      cs_index_free(idx);
      check(described);
      std::cout << json::parse(take(info)).dump(2) << "\n";
    } else if (*serve) {
      sigset_t signals;
      sigemptyset(&signals);
      sigaddset(&signals, SIGINT);
      sigaddset(&signals, SIGTERM);
      pthread_sigmask(SIG_BLOCK, &signals, nullptr);

      cs_engine* engine = nullptr;
      check(cs_engine_open(config.c_str(), &engine));
      int bound = 0;
      const cs_status b = cs_engine_bind(engine, host.empty() ? nullptr : host.c_str(),
                                         port >= 0 ? port : -1, &bound);
      if (b != CS_OK) {
        cs_engine_free(engine);
        check(b);
      }
      std::cout << "listening on port " << bound << std::endl;
      cs_status served = CS_OK;
      std::thread worker([&] { served = cs_engine_serve(engine); });
      int sig = 0;
      sigwait(&signals, &sig);
      cs_engine_stop(engine);
      worker.join();
      cs_engine_free(engine);
      check(served);
    } else if (*demo) {
      if (!mock && config.empty()) throw std::runtime_error("demo needs --mock or --config");
      const json inline_cfg =
          mock_config(dump.empty() ? default_path("japantravel_mini.jsonl") : dump,
                      fixtures.empty() ? default_path("llm") : fixtures, store);
      Api api(open_engine(mock ? "" : config, inline_cfg));
      const json session = run_demo(api, query);
      if (!out.empty()) std::ofstream(out) << session.dump(2) << "\n";
      std::cout << session.dump(2) << "\n";
    } else if (*inspect) {
      json req = json::parse(slurp(points));
      req["min_cluster_size"] = min_cluster_size;
      req["min_samples"] = min_samples;
      req["central"] = central;
      char* result = nullptr;
      check(cs_cluster_inspect(req.dump().c_str(), &result));
      std::cout << json::parse(take(result)).dump(2) << "\n";
    } else if (*pipeline) {
      std::string cfg_text;
      std::string base_dir;
      if (!config.empty()) {
        cfg_text = slurp(config);
        base_dir = std::filesystem::absolute(config).parent_path().string();
      } else {
        if (!mock) throw std::runtime_error("pipeline-run needs --mock or --config");
        if (corpus_path.empty() == dump.empty()) {
          throw std::runtime_error("pass exactly one of --corpus or --dump");
        }
        json cfg = {{"mock", true}, {"llm", {{"fixtures", fixtures.empty() ? default_path("llm") : fixtures}}}};
        cfg[dump.empty() ? "corpus" : "dump"] = dump.empty() ? corpus_path : dump;
        cfg_text = cfg.dump();
      }
      char* result = nullptr;
      check(cs_pipeline_run(cfg_text.c_str(), base_dir.empty() ? nullptr : base_dir.c_str(),
                            query.c_str(), &result));
      std::cout << json::parse(take(result)).dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
