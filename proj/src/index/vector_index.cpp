#include "index/vector_index.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>
#include <stdexcept>

#include "common/errors.hpp"
#include "common/file_util.hpp"

namespace consearch {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'I', 'X'};
constexpr std::uint32_t kIndexVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void f32(float f) { u32(std::bit_cast<std::uint32_t>(f)); }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}

  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw IngestError("truncated index file");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{static_cast<std::uint8_t>(in_[pos_++])} << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<std::uint8_t>(in_[pos_++])} << (8 * i);
    return v;
  }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(in_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  std::string_view raw(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  bool done() const { return pos_ == in_.size(); }

 private:
  std::string_view in_;
  std::size_t pos_ = 0;
};

}  // namespace

void RetrievalConfig::validate() const {
  if (k_response == 0 || k_provider_comments == 0 || central_comments_per_group == 0) {
    throw std::invalid_argument("retrieval counts must be positive");
  }
  if (!(provider_sim_floor >= 0.0 && provider_sim_floor <= 1.0)) {
    throw std::invalid_argument("provider_sim_floor must lie in [0, 1]");
  }
}

VectorIndex::VectorIndex(std::string embedder_id, std::size_t dim, std::string corpus_hash,
                         std::vector<Segment> segments, std::vector<EmbeddingVector> vectors)
    : embedder_id_(std::move(embedder_id)),
      dim_(dim),
      corpus_hash_(std::move(corpus_hash)),
      segments_(std::move(segments)) {
  if (segments_.size() != vectors.size()) {
    throw std::invalid_argument("segment and vector counts differ");
  }
  data_.reserve(segments_.size() * dim_);
  for (const auto& v : vectors) {
    if (v.dim() != dim_) throw std::invalid_argument("vector dim differs from index dim");
    data_.insert(data_.end(), v.raw().begin(), v.raw().end());
  }
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (!by_id_.emplace(segments_[i].id, i).second) {
      throw std::invalid_argument("duplicate segment id " + segments_[i].id);
    }
  }
}

std::span<const float> VectorIndex::vector(std::size_t i) const {
  return std::span<const float>(data_).subspan(i * dim_, dim_);
}

std::optional<std::size_t> VectorIndex::find(std::string_view segment_id) const {
  auto it = by_id_.find(std::string(segment_id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::size_t> VectorIndex::segments_of(const SourceRef& source) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (segments_[i].source == source) out.push_back(i);
  }
  return out;
}

std::vector<ScoredSegment> VectorIndex::search(std::span<const float> query_vector,
                                               std::size_t k,
                                               std::optional<SourceKind> kind_filter) const {
  if (k == 0) throw std::invalid_argument("k must be at least 1");
  if (query_vector.size() != dim_) throw std::invalid_argument("query dim differs from index");
  std::vector<ScoredSegment> scored;
  scored.reserve(segments_.size());
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    if (kind_filter && segments_[i].source.kind != *kind_filter) continue;
    scored.push_back({&segments_[i], i, cosine(query_vector, vector(i))});
  }
  const auto better = [](const ScoredSegment& a, const ScoredSegment& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.segment->id < b.segment->id;
  };
  const std::size_t n = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(n), scored.end(),
                    better);
  scored.resize(n);
  return scored;
}

std::string VectorIndex::serialize() const {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.u32(kIndexVersion);
  w.str(embedder_id_);
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u64(segments_.size());
  w.str(corpus_hash_);
  for (const auto& s : segments_) {
    w.str(s.id);
    w.u8(static_cast<std::uint8_t>(s.source.kind));
    w.str(s.source.id);
    w.u64(s.span.begin);
    w.u64(s.span.end);
    w.str(s.text);
  }
  for (float f : data_) w.f32(f);
  return w.take();
}

VectorIndex VectorIndex::deserialize(std::string_view bytes) {
  Reader r(bytes);
  if (r.raw(4) != std::string_view(kMagic, 4)) throw IngestError("not an index file (bad magic)");
  if (const auto v = r.u32(); v != kIndexVersion) {
    throw IngestError("unsupported index version " + std::to_string(v));
  }
  std::string embedder_id = r.str();
  const std::size_t dim = r.u32();
  const std::uint64_t count = r.u64();
  std::string corpus_hash = r.str();
  std::vector<Segment> segments;
  segments.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Segment s;
    s.id = r.str();
    const auto kind = r.u8();
    if (kind > 1) throw IngestError("bad segment kind in index");
    s.source.kind = static_cast<SourceKind>(kind);
    s.source.id = r.str();
    s.span.begin = r.u64();
    s.span.end = r.u64();
    s.text = r.str();
    segments.push_back(std::move(s));
  }
  std::vector<EmbeddingVector> vectors;
  vectors.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    std::vector<float> v(dim);
    for (auto& f : v) f = r.f32();
    vectors.emplace_back(std::move(v));
  }
  if (!r.done()) throw IngestError("trailing bytes in index file");
  return VectorIndex(std::move(embedder_id), dim, std::move(corpus_hash), std::move(segments),
                     std::move(vectors));
}

VectorIndex build_index(const CommunityCorpus& corpus, EmbeddingProvider& provider,
                        const SegmentationPolicy& policy, std::size_t batch_size) {
  auto segments = segment_corpus(corpus, policy);
  std::vector<std::string> texts;
  texts.reserve(segments.size());
  for (const auto& s : segments) texts.push_back(s.text);
  auto vectors = embed(texts, provider, batch_size);
  return VectorIndex(provider.id(), provider.dim(), corpus.content_hash(), std::move(segments),
                     std::move(vectors));
}

std::vector<ScoredSegment> retrieve(const VectorIndex& index, const std::string& query,
                                    std::size_t k, std::optional<SourceKind> kind_filter,
                                    EmbeddingProvider& provider) {
  if (query.empty()) throw std::invalid_argument("retrieve: empty query");
  if (provider.id() != index.embedder_id()) {
    throw std::invalid_argument("retrieve: provider " + provider.id() +
                                " does not match index embedder " + index.embedder_id());
  }
  const auto qv = embed_one(query, provider);
  return index.search(qv.values(), k, kind_filter);
}

VectorIndex load_index(const std::filesystem::path& path) {
  return VectorIndex::deserialize(read_file(path));
}

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
  write_file_atomic(path, index.serialize());
}

}  // namespace consearch
