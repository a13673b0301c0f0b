#ifndef CONSEARCH_CONSEARCH_H
#define CONSEARCH_CONSEARCH_H

/* C interface to the conversational search core. Every function returns a
 * cs_status; on failure cs_last_error() describes the problem for the calling
 * thread. Strings returned through char** are owned by the caller and must be
 * released with cs_string_free(). */

#include <stddef.h>

#if defined(_WIN32)
#define CS_API __declspec(dllexport)
#else
#define CS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cs_status {
  CS_OK = 0,
  CS_ERR_INVALID_ARGUMENT = 1,
  CS_ERR_IO = 2,
  CS_ERR_NOT_FOUND = 3,
  CS_ERR_CONFLICT = 4,
  CS_ERR_PROVIDER = 5,
  CS_ERR_PIPELINE = 6,
  CS_ERR_INTERNAL = 7
} cs_status;

typedef struct cs_corpus cs_corpus;
typedef struct cs_index cs_index;
typedef struct cs_engine cs_engine;

CS_API const char* cs_version(void);
CS_API const char* cs_status_name(cs_status status);
/* Message of the last failed call on this thread; empty after a success. */
CS_API const char* cs_last_error(void);
CS_API void cs_string_free(char* s);

/* Corpus */
CS_API cs_status cs_corpus_load_dump(const char* dump_path, const char* format, cs_corpus** out);
CS_API cs_status cs_corpus_load(const char* corpus_path, cs_corpus** out);
/* Writes the canonical corpus file; *hash_out receives its content hash. */
CS_API cs_status cs_corpus_save(const cs_corpus* corpus, const char* path, char** hash_out);
CS_API cs_status cs_corpus_report_json(const cs_corpus* corpus, char** json_out);
CS_API void cs_corpus_free(cs_corpus* corpus);

/* Index. embedding_json is {"mock": true, "dim": 256, "seed": 0} or
 * {"url", "model", "api_key", "dim", "batch_size", "timeout_ms", "retries"}. */
CS_API cs_status cs_index_build(const cs_corpus* corpus, const char* embedding_json, cs_index** out);
CS_API cs_status cs_index_load(const char* path, cs_index** out);
CS_API cs_status cs_index_save(const cs_index* index, const char* path);
/* {"embedder_id", "dim", "corpus_hash", "segments"} */
CS_API cs_status cs_index_info_json(const cs_index* index, char** json_out);
CS_API void cs_index_free(cs_index* index);

/* Density clustering of explicit points.
 * request_json: {"items": [{"id": "a", "vector": [..]}, ...],
 *                "min_cluster_size": 5, "min_samples": 3, "central": 10}
 * result: {"params", "labels": {id: label}, "clusters": [{"label", "members",
 *          "central"}], "noise": [ids]} with label -1 for noise. */
CS_API cs_status cs_cluster_inspect(const char* request_json, char** json_out);

/* Runs the persona pipeline for one query outside any session and returns
 * every intermediate artifact. config_json uses the service config format. */
CS_API cs_status cs_pipeline_run(const char* config_json, const char* base_dir, const char* query,
                                 char** json_out);

/* Engine: the HTTP API without a socket, or served over one. */
CS_API cs_status cs_engine_open(const char* config_path, cs_engine** out);
CS_API cs_status cs_engine_open_json(const char* config_json, const char* base_dir, cs_engine** out);
/* Dispatches one API request. body and authorization may be NULL. */
CS_API cs_status cs_engine_request(cs_engine* engine, const char* method, const char* path,
                                   const char* body, const char* authorization, int* status_out,
                                   char** body_out);
/* Binds host:port; a NULL host or negative port falls back to the config,
 * port 0 picks a free port. *bound_port receives the port. */
CS_API cs_status cs_engine_bind(cs_engine* engine, const char* host, int port, int* bound_port);
/* Serves on the bound socket until cs_engine_stop() is called. */
CS_API cs_status cs_engine_serve(cs_engine* engine);
CS_API cs_status cs_engine_stop(cs_engine* engine);
/* Gateway calls from index `since` on, including rendered prompts. */
CS_API cs_status cs_engine_call_log_json(const cs_engine* engine, size_t since, char** json_out);
CS_API void cs_engine_free(cs_engine* engine);

#ifdef __cplusplus
}
#endif

#endif
