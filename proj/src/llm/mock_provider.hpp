#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "llm/gateway.hpp"

namespace consearch {

// One canned reply. A fixture answers a request when its template matches and
// either its digest equals the request digest or its `match` object is a
// recursive subset of the request bindings.
struct LlmFixture {
  std::string template_id;
  std::optional<std::string> digest;
  nlohmann::json match;  // null when unused
  nlohmann::json response;
  std::string source;  // file the fixture came from
};

// Offline provider. Lookup order: digest fixtures, then match fixtures in
// file order, then a deterministic per-template filler computed from the
// digest and bindings. Identical requests always produce identical bytes.
class MockLlmProvider : public LlmProvider {
 public:
  MockLlmProvider() = default;
  explicit MockLlmProvider(std::vector<LlmFixture> fixtures);

  // Loads every *.json below `dir` in sorted path order. Missing directory is
  // not an error.
  static std::vector<LlmFixture> load_fixtures(const std::filesystem::path& dir);

  // Writes a fixture file for each request that fell through to the filler.
  void record_misses_to(std::filesystem::path dir);

  std::string id() const override { return "mock"; }
  std::string complete(const LlmRequest& request) override;

  std::size_t fixture_hits() const;
  std::size_t filler_hits() const;

 private:
  const LlmFixture* lookup(const LlmRequest& request) const;

  std::vector<LlmFixture> fixtures_;
  std::optional<std::filesystem::path> record_dir_;
  mutable std::mutex mu_;
  std::size_t fixture_hits_ = 0;
  std::size_t filler_hits_ = 0;
};

// True when every key/value of `pattern` appears in `value` (recursively for
// objects; arrays and scalars compare equal).
bool json_subset(const nlohmann::json& pattern, const nlohmann::json& value);

// The filler reply for a request with no fixture.
nlohmann::json mock_fill(const std::string& template_id, const std::string& digest,
                         const nlohmann::json& bindings);

}  // namespace consearch
