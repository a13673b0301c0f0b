#pragma once

#include <string>

#include "common/http_client.hpp"
#include "index/embedding.hpp"

namespace consearch {

// Remote embedding service: POST ["text", ...] -> [[float, ...], ...].
class HttpEmbedder final : public EmbeddingProvider {
 public:
  HttpEmbedder(std::string endpoint, std::string model, std::size_t dim,
               HttpPostOptions options);

  std::string id() const override { return "http:" + model_; }
  std::size_t dim() const override { return dim_; }
  std::vector<std::vector<float>> embed_batch(std::span<const std::string> texts) override;

 private:
  HttpEndpoint endpoint_;
  std::string model_;
  std::size_t dim_;
  HttpPostOptions options_;
};

}  // namespace consearch
