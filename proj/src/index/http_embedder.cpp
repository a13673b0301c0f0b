#include "index/http_embedder.hpp"

#include <nlohmann/json.hpp>

#include "common/errors.hpp"

namespace consearch {

HttpEmbedder::HttpEmbedder(std::string endpoint, std::string model, std::size_t dim,
                           HttpPostOptions options)
    : endpoint_(parse_endpoint(endpoint)),
      model_(std::move(model)),
      dim_(dim),
      options_(std::move(options)) {
  if (dim_ == 0) throw std::invalid_argument("embedding dim must be positive");
}

std::vector<std::vector<float>> HttpEmbedder::embed_batch(std::span<const std::string> texts) {
  const nlohmann::json request(std::vector<std::string>(texts.begin(), texts.end()));
  const std::string body = post_json(endpoint_, request.dump(), options_);
  auto parsed = nlohmann::json::parse(body, nullptr, false);
  if (!parsed.is_array()) throw ProviderError("embedding response is not a JSON list");
  std::vector<std::vector<float>> out;
  out.reserve(parsed.size());
  for (const auto& row : parsed) {
    if (!row.is_array()) throw ProviderError("embedding response row is not a list");
    std::vector<float> v;
    v.reserve(row.size());
    for (const auto& x : row) {
      if (!x.is_number()) throw ProviderError("embedding response holds a non-number");
      v.push_back(x.get<float>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace consearch
