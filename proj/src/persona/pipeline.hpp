#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "cluster/hdbscan.hpp"
#include "corpus/corpus.hpp"
#include "index/vector_index.hpp"
#include "llm/gateway.hpp"
#include "persona/types.hpp"

namespace consearch {

struct PersonaConfig {
  std::size_t posts_per_factor = 5;
  std::size_t central_posts = 5;
  std::size_t seeker_count = 3;
  std::size_t seeker_query_count = 5;
  std::size_t min_factors = 4;
  std::size_t max_factors = 8;
  std::size_t min_providers = 2;
  std::size_t max_providers = 6;
  HdbscanParams seeker_clusters{3, 2};
  HdbscanParams provider_clusters{5, 3};
};

// Everything a pipeline step reads. The referenced objects must outlive it.
struct PipelineContext {
  const CommunityCorpus& corpus;
  const VectorIndex& index;
  EmbeddingProvider& embedder;
  LlmGateway& gateway;
  RetrievalConfig retrieval{};
  PersonaConfig persona{};
};

// Factors f1..fn for `query`, each enriched with its top post segments and
// suggested queries. Throws std::invalid_argument on an empty query.
std::vector<Factor> decompose_factors(const std::string& query, const PipelineContext& ctx);

struct SeekerTrace {
  std::vector<std::string> pool_post_ids;  // sorted
  std::vector<std::vector<std::string>> central_post_ids;  // per post group
  bool degenerate = false;
};

// Seeker personas seeker-1..seeker-N (N = persona.seeker_count) from clusters
// of the factors' retrieved posts.
std::vector<SeekerPersona> generate_seekers(const std::string& query,
                                            const std::vector<Factor>& factors,
                                            const PipelineContext& ctx,
                                            SeekerTrace* trace = nullptr);

// A fresh situation for `factor` written from the persona's perspective. The
// persona itself is not modified.
SituatedFactor generate_situation(const SeekerPersona& persona, const Factor& factor,
                                  const std::string& query, const PipelineContext& ctx);

// Exactly persona.seeker_query_count distinct queries the persona would ask.
// Throws std::invalid_argument when the persona has no situations.
std::vector<std::string> suggest_seeker_queries(const SeekerPersona& persona,
                                                const std::string& original_query,
                                                const PipelineContext& ctx);

struct ProviderTrace {
  std::vector<std::string> pool_segment_ids;  // score order, at most k_provider_comments
  std::vector<std::vector<std::string>> central_segment_ids;  // per comment group
  std::size_t surviving_groups = 0;
};

// Provider personas provider-1..provider-N from clusters of the comments
// retrieved for the seeker's queries. Empty when no comment group survives.
std::vector<ProviderPersona> generate_providers(const SeekerPersona& seeker,
                                                const std::vector<std::string>& seeker_queries,
                                                const PipelineContext& ctx,
                                                ProviderTrace* trace = nullptr);

// Unit-length mean of a post's segment vectors; empty when the post has none.
EmbeddingVector post_vector(const VectorIndex& index, const std::string& post_id);

}  // namespace consearch
