#include "index/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "common/errors.hpp"
#include "common/hash.hpp"

namespace consearch {

double EmbeddingVector::norm() const {
  double sum = 0.0;
  for (float v : values_) sum += static_cast<double>(v) * v;
  return std::sqrt(sum);
}

EmbeddingVector EmbeddingVector::normalized() const {
  const double n = norm();
  if (n == 0.0) return *this;
  std::vector<float> out(values_.size());
  for (std::size_t i = 0; i < values_.size(); ++i) {
    out[i] = static_cast<float>(values_[i] / n);
  }
  return EmbeddingVector(std::move(out));
}

double cosine(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine: dimension mismatch (" + std::to_string(a.size()) +
                                " vs " + std::to_string(b.size()) + ")");
  }
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += static_cast<double>(a[i]) * b[i];
    na += static_cast<double>(a[i]) * a[i];
    nb += static_cast<double>(b[i]) * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  return cosine(a.values(), b.values());
}

MockEmbedder::MockEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim_ == 0) throw std::invalid_argument("embedding dim must be positive");
}

std::string MockEmbedder::id() const {
  return "mock-ngram3-d" + std::to_string(dim_) + "-s" + std::to_string(seed_);
}

std::string MockEmbedder::normalize_text(const std::string& text) {
  std::string out = " ";
  for (unsigned char c : text) {
    char mapped;
    if (c >= 0x80) {
      mapped = static_cast<char>(c);
    } else if (std::isalnum(c)) {
      mapped = static_cast<char>(std::tolower(c));
    } else {
      mapped = ' ';
    }
    if (mapped == ' ' && out.back() == ' ') continue;
    out.push_back(mapped);
  }
  if (out.back() != ' ') out.push_back(' ');
  return out;
}

std::vector<float> MockEmbedder::embed_one(const std::string& text) const {
  const std::string s = normalize_text(text);
  std::vector<float> v(dim_, 0.0f);
  bool any = false;
  for (std::size_t i = 0; i + 3 <= s.size(); ++i) {
    const std::uint64_t h = fnv1a64(std::string_view(s).substr(i, 3), seed_);
    v[h % dim_] += (h >> 63) != 0 ? -1.0f : 1.0f;
  }
  for (float x : v) any = any || x != 0.0f;
  if (!any) v[fnv1a64(s, seed_) % dim_] = 1.0f;
  return v;
}

std::vector<std::vector<float>> MockEmbedder::embed_batch(std::span<const std::string> texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed_one(t));
  return out;
}

std::vector<EmbeddingVector> embed(std::span<const std::string> texts,
                                   EmbeddingProvider& provider, std::size_t batch_size) {
  if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t offset = 0; offset < texts.size(); offset += batch_size) {
    const auto batch = texts.subspan(offset, std::min(batch_size, texts.size() - offset));
    std::vector<std::vector<float>> raw;
    try {
      raw = provider.embed_batch(batch);
    } catch (const EmbeddingError&) {
      throw;
    } catch (const std::exception& e) {
      throw EmbeddingError(std::string("embedding provider failed: ") + e.what(), offset);
    }
    if (raw.size() != batch.size()) {
      throw EmbeddingError("embedding provider returned " + std::to_string(raw.size()) +
                               " vectors for " + std::to_string(batch.size()) + " texts",
                           offset);
    }
    for (auto& r : raw) {
      if (r.size() != provider.dim()) {
        throw EmbeddingError("embedding provider returned dim " + std::to_string(r.size()) +
                                 ", expected " + std::to_string(provider.dim()),
                             offset);
      }
      out.push_back(EmbeddingVector(std::move(r)).normalized());
    }
  }
  return out;
}

EmbeddingVector embed_one(const std::string& text, EmbeddingProvider& provider) {
  std::vector<std::string> one{text};
  return std::move(embed(one, provider).front());
}

}  // namespace consearch
