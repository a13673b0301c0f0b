#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

namespace consearch {

struct HttpEndpoint {
  std::string base;  // scheme://host[:port]
  std::string path;  // begins with '/'
};

HttpEndpoint parse_endpoint(const std::string& url);

struct HttpPostOptions {
  std::chrono::milliseconds timeout{30000};
  int retries = 2;  // extra attempts after the first
  std::chrono::milliseconds backoff{250};
  std::vector<std::pair<std::string, std::string>> headers;
};

// POSTs a JSON body and returns the response body of the first 2xx reply.
// Transport failures, 429 and 5xx are retried; everything else throws
// ProviderError immediately.
std::string post_json(const HttpEndpoint& endpoint, const std::string& body,
                      const HttpPostOptions& options);

}  // namespace consearch
