#pragma once

#include <memory>
#include <string>

#include "corpus/corpus.hpp"
#include "index/vector_index.hpp"
#include "llm/gateway.hpp"
#include "llm/mock_provider.hpp"
#include "persona/pipeline.hpp"

namespace consearch::testing {

inline const std::string kJapanQuery = "5-day Japan travel plan for anime culture";

inline std::string fixture_path(const std::string& rel) {
  return std::string(CONSEARCH_FIXTURE_DIR) + "/" + rel;
}

// Fixture corpus + mock embedder index + mock LLM with the authored fixtures.
struct MockEnv {
  CommunityCorpus corpus;
  MockEmbedder embedder;
  VectorIndex index;
  std::shared_ptr<MockLlmProvider> llm;
  LlmGateway gateway;

  explicit MockEnv(CommunityCorpus c, bool with_fixtures = true)
      : corpus(std::move(c)),
        index(build_index(corpus, embedder)),
        llm(std::make_shared<MockLlmProvider>(
            with_fixtures ? MockLlmProvider::load_fixtures(fixture_path("llm"))
                          : std::vector<LlmFixture>{})),
        gateway(llm, std::make_shared<CallLog>(), std::make_shared<InFlightLimiter>(4)) {}

  static MockEnv japan(bool with_fixtures = true) {
    return MockEnv(load_dump(fixture_path("japantravel_mini.jsonl"), DumpFormat::kNdjson),
                   with_fixtures);
  }

  PipelineContext ctx() { return PipelineContext{corpus, index, embedder, gateway}; }
};

}  // namespace consearch::testing
