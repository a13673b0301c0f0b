#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "common/errors.hpp"
#include "index/vector_index.hpp"
#include "retrieval_oracle.hpp"

using namespace consearch;
using consearch::testing::brute_force;

namespace {

std::string random_sentence(std::mt19937& rng) {
  static const char* vocab[] = {"tokyo",  "anime", "hotel", "ramen", "train",  "kyoto",
                                "pass",   "shrine", "budget", "day", "museum", "sushi",
                                "ghibli", "suica", "ryokan", "osaka", "night", "cafe"};
  std::string s;
  const int n = 3 + static_cast<int>(rng() % 10);
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += vocab[rng() % 18];
  }
  return s;
}

VectorIndex random_index(std::mt19937& rng, std::size_t n, EmbeddingProvider& provider) {
  std::vector<Segment> segs;
  std::vector<std::string> texts;
  for (std::size_t i = 0; i < n; ++i) {
    Segment s;
    s.id = "s" + std::to_string(rng() % 100000) + "_" + std::to_string(i);
    s.source = {i % 3 == 0 ? SourceKind::kComment : SourceKind::kPost, "src" + std::to_string(i)};
    s.text = random_sentence(rng);
    s.span = {0, s.text.size()};
    texts.push_back(s.text);
    segs.push_back(std::move(s));
  }
  auto vectors = embed(texts, provider);
  return VectorIndex(provider.id(), provider.dim(), "hash", std::move(segs), std::move(vectors));
}

// Exhaustive scan with an independent scalar cosine and a full stable sort.
std::vector<std::pair<std::string, double>> flatten(const std::vector<ScoredSegment>& r) {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& s : r) out.emplace_back(s.segment->id, s.score);
  return out;
}

}  // namespace

TEST_CASE("self-similarity ranks a verbatim segment first") {
  std::mt19937 rng(5);
  MockEmbedder mock;
  const auto index = random_index(rng, 200, mock);
  const auto& target = index.segment(37);
  const auto hits = retrieve(index, target.text, 5, std::nullopt, mock);
  REQUIRE_FALSE(hits.empty());
  CHECK(hits[0].score == doctest::Approx(1.0).epsilon(1e-6));
  // Duplicated sentences can tie at 1.0; the target must be among the ties.
  bool found = false;
  for (const auto& h : hits) found = found || (h.segment->id == target.id && h.score > 1 - 1e-6);
  CHECK(found);
}

TEST_CASE("k larger than the index returns everything sorted") {
  std::mt19937 rng(6);
  MockEmbedder mock;
  const auto index = random_index(rng, 12, mock);
  const auto hits = retrieve(index, "anime hotel", 50, std::nullopt, mock);
  CHECK(hits.size() == 12);
  for (std::size_t i = 1; i < hits.size(); ++i) CHECK(hits[i - 1].score >= hits[i].score);
}

TEST_CASE("retrieve equals brute force, prefix property, kind filter") {
  std::mt19937 rng(8);
  MockEmbedder mock;
  const auto index = random_index(rng, 1000, mock);
  for (int q = 0; q < 100; ++q) {
    const std::string query = random_sentence(rng);
    const auto qv = embed_one(query, mock);
    const std::vector<float> qraw(qv.values().begin(), qv.values().end());
    const auto got = flatten(retrieve(index, query, 5, std::nullopt, mock));
    CHECK(got == brute_force(index, qraw, 5, std::nullopt));

    const auto k6 = flatten(retrieve(index, query, 6, std::nullopt, mock));
    CHECK(std::equal(got.begin(), got.end(), k6.begin()));

    for (const auto& [id, score] : got) {
      const auto pos = index.find(id);
      REQUIRE(pos.has_value());
      CHECK(std::abs(score - cosine(qv.values(), index.vector(*pos))) <= 1e-6);
    }

    const auto comments = retrieve(index, query, 40, SourceKind::kComment, mock);
    CHECK(flatten(comments) == brute_force(index, qraw, 40, SourceKind::kComment));
    for (const auto& h : comments) CHECK(h.segment->source.kind == SourceKind::kComment);
  }
}

TEST_CASE("retrieve rejects bad input") {
  std::mt19937 rng(9);
  MockEmbedder mock;
  const auto index = random_index(rng, 10, mock);
  CHECK_THROWS_AS(retrieve(index, "", 5, std::nullopt, mock), std::invalid_argument);
  CHECK_THROWS_AS(retrieve(index, "x", 0, std::nullopt, mock), std::invalid_argument);
  MockEmbedder other(128, 1);
  CHECK_THROWS_AS(retrieve(index, "x", 3, std::nullopt, other), std::invalid_argument);
}

TEST_CASE("index build is deterministic and the file round-trips") {
  const auto corpus =
      load_dump(std::string(CONSEARCH_FIXTURE_DIR) + "/japantravel_mini.jsonl", DumpFormat::kNdjson);
  MockEmbedder mock;
  const auto a = build_index(corpus, mock);
  const auto b = build_index(corpus, mock);
  const auto bytes = a.serialize();
  CHECK(bytes == b.serialize());
  CHECK(bytes.substr(0, 4) == "CSIX");
  const auto c = VectorIndex::deserialize(bytes);
  CHECK(c.serialize() == bytes);
  CHECK(c.embedder_id() == mock.id());
  CHECK(c.corpus_hash() == corpus.content_hash());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.vector(i).size() == 256);
    double n = 0;
    for (float f : a.vector(i)) n += double(f) * f;
    CHECK(std::sqrt(n) == doctest::Approx(1.0).epsilon(1e-6));
  }

  std::string bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS_AS(VectorIndex::deserialize(bad), IngestError);
  CHECK_THROWS_AS(VectorIndex::deserialize(bytes.substr(0, bytes.size() - 3)), IngestError);
}
