#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "corpus/corpus.hpp"
#include "index/embedding.hpp"
#include "index/segmenter.hpp"

namespace consearch {

struct RetrievalConfig {
  std::size_t k_response = 5;
  std::size_t k_provider_comments = 200;
  double provider_sim_floor = 0.2;
  std::size_t central_comments_per_group = 10;

  void validate() const;
};

struct ScoredSegment {
  const Segment* segment = nullptr;
  std::size_t index = 0;  // position in the owning VectorIndex
  double score = 0.0;
};

// Exhaustive-scan cosine index over corpus segments. Immutable after build.
class VectorIndex {
 public:
  VectorIndex() = default;
  VectorIndex(std::string embedder_id, std::size_t dim, std::string corpus_hash,
              std::vector<Segment> segments, std::vector<EmbeddingVector> vectors);

  const std::string& embedder_id() const { return embedder_id_; }
  std::size_t dim() const { return dim_; }
  const std::string& corpus_hash() const { return corpus_hash_; }
  std::size_t size() const { return segments_.size(); }
  bool empty() const { return segments_.empty(); }

  const std::vector<Segment>& segments() const { return segments_; }
  const Segment& segment(std::size_t i) const { return segments_[i]; }
  std::span<const float> vector(std::size_t i) const;
  std::optional<std::size_t> find(std::string_view segment_id) const;
  // Indices of every segment derived from one post or comment, in order.
  std::vector<std::size_t> segments_of(const SourceRef& source) const;

  // Top-k by cosine, score descending, ties by segment id ascending.
  std::vector<ScoredSegment> search(std::span<const float> query_vector, std::size_t k,
                                    std::optional<SourceKind> kind_filter = std::nullopt) const;

  std::string serialize() const;
  static VectorIndex deserialize(std::string_view bytes);

 private:
  std::string embedder_id_;
  std::size_t dim_ = 0;
  std::string corpus_hash_;
  std::vector<Segment> segments_;
  std::vector<float> data_;  // size() * dim_, row-major
  std::unordered_map<std::string, std::size_t> by_id_;
};

VectorIndex build_index(const CommunityCorpus& corpus, EmbeddingProvider& provider,
                        const SegmentationPolicy& policy = {}, std::size_t batch_size = 64);

// Embeds `query` with `provider` and searches. The provider must be the one
// the index was built with.
std::vector<ScoredSegment> retrieve(const VectorIndex& index, const std::string& query,
                                    std::size_t k, std::optional<SourceKind> kind_filter,
                                    EmbeddingProvider& provider);

VectorIndex load_index(const std::filesystem::path& path);
void save_index(const VectorIndex& index, const std::filesystem::path& path);

}  // namespace consearch
