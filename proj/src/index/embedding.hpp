#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace consearch {

class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {}

  std::size_t dim() const { return values_.size(); }
  std::span<const float> values() const { return values_; }
  const std::vector<float>& raw() const { return values_; }
  double norm() const;
  EmbeddingVector normalized() const;

  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

 private:
  std::vector<float> values_;
};

// Cosine similarity clamped to [-1, 1]; zero vectors score 0. Throws
// std::invalid_argument on a dimension mismatch.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  // Stable identifier recorded in every index built with this provider.
  virtual std::string id() const = 0;
  virtual std::size_t dim() const = 0;
  // One raw (not necessarily normalized) vector per input, in input order.
  virtual std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) = 0;
};

// Hashes character trigrams into a fixed number of signed buckets.
//
// Text is lowercased (ASCII), every ASCII byte that is not a letter or digit
// becomes a space, whitespace runs collapse to one space, and the result is
// padded with one space on each side. For every 3-byte window w,
// h = fnv1a64(w, seed); bucket h % dim receives +1, or -1 when the top bit of
// h is set. A text whose buckets cancel to zero gets a single +1 at
// fnv1a64(normalized text, seed) % dim.
class MockEmbedder final : public EmbeddingProvider {
 public:
  explicit MockEmbedder(std::size_t dim = 256, std::uint64_t seed = 0);

  std::string id() const override;
  std::size_t dim() const override { return dim_; }
  std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override;

  std::vector<float> embed_one(const std::string& text) const;
  static std::string normalize_text(const std::string& text);

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Embeds `texts` in batches and L2-normalizes the results. Provider failures
// surface as EmbeddingError carrying the offset of the failed batch.
std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                   EmbeddingProvider& provider, std::size_t batch_size = 64);
EmbeddingVector embed_one(const std::string& text, EmbeddingProvider& provider);

}  // namespace consearch
