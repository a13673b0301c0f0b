#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"

#include "common/errors.hpp"
#include "corpus/corpus.hpp"

using namespace consearch;

namespace {

std::string post_line(const std::string& id, const std::string& title, const std::string& body,
                      long created = 1700000000) {
  std::ostringstream ss;
  ss << R"({"kind":"post","id":")" << id << R"(","title":")" << title << R"(","selftext":")"
     << body << R"(","author":"u1","created_utc":)" << created << R"(,"score":1})";
  return ss.str();
}

std::string comment_line(const std::string& id, const std::string& post, const std::string& parent,
                         const std::string& body) {
  std::ostringstream ss;
  ss << R"({"kind":"comment","id":")" << id << R"(","link_id":"t3_)" << post
     << R"(","parent_id":")" << parent << R"(","body":")" << body
     << R"(","author":"u2","created_utc":1700000100,"score":2})";
  return ss.str();
}

std::uint64_t dropped(const CommunityCorpus& c, std::string_view reason) {
  auto it = c.ingest_report().dropped.find(reason);
  return it == c.ingest_report().dropped.end() ? 0 : it->second;
}

bool contains_sentinel(const CommunityCorpus& c) {
  for (const auto& p : c.posts()) {
    if (is_deletion_sentinel(p.id) || is_deletion_sentinel(p.title) ||
        is_deletion_sentinel(p.body) || is_deletion_sentinel(p.author_ref)) {
      return true;
    }
  }
  for (const auto& cm : c.comments()) {
    if (is_deletion_sentinel(cm.id) || is_deletion_sentinel(cm.body) ||
        is_deletion_sentinel(cm.author_ref)) {
      return true;
    }
  }
  return false;
}

}  // namespace

TEST_CASE("sentinel posts are dropped and tallied") {
  std::string dump;
  for (int i = 0; i < 10; ++i) {
    dump += post_line("p" + std::to_string(i), "title " + std::to_string(i),
                      i < 2 ? "[removed]" : "body text") +
            "\n";
  }
  const auto corpus = parse_dump(dump, DumpFormat::kNdjson);
  CHECK(corpus.posts().size() == 8);
  CHECK(dropped(corpus, kDroppedSentinel) == 2);
  CHECK(corpus.ingest_report().total_records == 10);
}

TEST_CASE("comment on a missing post is an orphan") {
  const std::string dump = post_line("p1", "t", "b") + "\n" +
                           comment_line("c1", "p1", "t3_p1", "fine") + "\n" +
                           comment_line("c2", "nope", "t3_nope", "lost") + "\n";
  const auto corpus = parse_dump(dump, DumpFormat::kNdjson);
  REQUIRE(corpus.comments().size() == 1);
  CHECK(corpus.comments()[0].id == "c1");
  CHECK(dropped(corpus, kDroppedOrphan) == 1);
}

TEST_CASE("orphans propagate down reply chains, cycles and cross-post parents") {
  const std::string dump =
      post_line("p1", "t", "b") + "\n" + post_line("p2", "t", "b") + "\n" +
      comment_line("c1", "p1", "t3_p1", "[deleted]") + "\n" +
      comment_line("c2", "p1", "t1_c1", "reply to deleted") + "\n" +
      comment_line("c3", "p1", "t1_c2", "reply to reply") + "\n" +
      comment_line("c4", "p1", "t1_c5", "cycle a") + "\n" +
      comment_line("c5", "p1", "t1_c4", "cycle b") + "\n" +
      comment_line("c6", "p2", "t1_c7", "parent on other post") + "\n" +
      comment_line("c7", "p1", "t3_p1", "top level") + "\n" +
      comment_line("c8", "p1", "t1_c7", "good reply") + "\n";
  const auto corpus = parse_dump(dump, DumpFormat::kNdjson);
  std::vector<std::string> ids;
  for (const auto& c : corpus.comments()) ids.push_back(c.id);
  CHECK(ids == std::vector<std::string>{"c7", "c8"});
  CHECK(dropped(corpus, kDroppedSentinel) == 1);
  CHECK(dropped(corpus, kDroppedOrphan) == 5);
  REQUIRE(corpus.find_comment("c8") != nullptr);
  CHECK(corpus.find_comment("c8")->parent_id == std::optional<std::string>("c7"));
  CHECK_FALSE(corpus.find_comment("c7")->parent_id.has_value());
}

TEST_CASE("malformed records are skipped, never fatal") {
  const std::string dump = "not json\n" + post_line("p1", "t", "b") + "\n" +
                           R"({"kind":"post","title":"no id"})" + "\n" +
                           R"({"kind":"bogus","id":"x"})" + "\n" +
                           R"({"kind":"post","id":"p2","title":7})" + "\n" + "\n" +
                           R"({"kind":"post","id":"p3","title":"t","created_utc":"1700000000.0"})" +
                           "\n";
  const auto corpus = parse_dump(dump, DumpFormat::kNdjson);
  CHECK(corpus.posts().size() == 2);
  CHECK(dropped(corpus, kDroppedMalformed) == 4);
  CHECK(corpus.ingest_report().total_records == 6);
  CHECK(corpus.find_post("p3")->created_at == 1700000000);
}

TEST_CASE("duplicates and empty records") {
  const std::string dump = post_line("p1", "first", "b") + "\n" + post_line("p1", "second", "b") +
                           "\n" + post_line("p2", "  ", " ") + "\n" +
                           post_line("p3", "title only", "") + "\n";
  const auto corpus = parse_dump(dump, DumpFormat::kNdjson);
  CHECK(corpus.posts().size() == 2);
  CHECK(corpus.find_post("p1")->title == "first");
  CHECK(corpus.find_post("p3")->full_text() == "title only");
  CHECK(dropped(corpus, kDroppedDuplicate) == 1);
  CHECK(dropped(corpus, kDroppedEmpty) == 1);
}

TEST_CASE("sentinel in author or id counts too, case-sensitively") {
  const std::string dump =
      R"({"kind":"post","id":"p1","title":"t","author":"[deleted]"})" "\n"
      R"({"kind":"post","id":"[removed]","title":"t"})" "\n"
      R"({"kind":"post","id":"p3","title":"[Deleted]"})" "\n";
  const auto corpus = parse_dump(dump, DumpFormat::kNdjson);
  CHECK(corpus.posts().size() == 1);
  CHECK(corpus.posts()[0].id == "p3");
}

TEST_CASE("fixture dump matches the independent line-scan counts") {
  // Frozen from tests/oracles/count_fixture.py over the same file.
  const auto corpus =
      load_dump(std::string(CONSEARCH_FIXTURE_DIR) + "/japantravel_mini.jsonl", DumpFormat::kNdjson);
  const auto& r = corpus.ingest_report();
  CHECK(r.total_records == 250);
  CHECK(corpus.posts().size() == 47);
  CHECK(corpus.comments().size() == 195);
  CHECK(dropped(corpus, kDroppedSentinel) == 5);
  CHECK(dropped(corpus, kDroppedOrphan) == 3);
  CHECK(r.retained() + r.dropped_total() == r.total_records);
  CHECK_FALSE(contains_sentinel(corpus));
  CHECK(corpus.community_name() == "JapanTravel");
}

TEST_CASE("re-ingest is byte-identical and the serialized form round-trips") {
  const auto path = std::string(CONSEARCH_FIXTURE_DIR) + "/japantravel_mini.jsonl";
  const auto a = load_dump(path, DumpFormat::kNdjson);
  const auto b = load_dump(path, DumpFormat::kNdjson);
  CHECK(a.serialize() == b.serialize());
  CHECK(a.content_hash() == b.content_hash());
  const auto c = CommunityCorpus::deserialize(a.serialize());
  CHECK(c.serialize() == a.serialize());
}

TEST_CASE("accounting holds on randomly generated dumps") {
  std::mt19937 rng(7);
  for (int round = 0; round < 50; ++round) {
    std::string dump;
    const int n_posts = 1 + static_cast<int>(rng() % 8);
    const int n_comments = static_cast<int>(rng() % 20);
    for (int i = 0; i < n_posts; ++i) {
      const char* body = (rng() % 5 == 0) ? "[deleted]" : "words";
      dump += post_line("p" + std::to_string(rng() % 10), "t", body) + "\n";
    }
    for (int i = 0; i < n_comments; ++i) {
      const std::string post = "p" + std::to_string(rng() % 10);
      const std::string parent = rng() % 2 ? "t3_" + post : "t1_c" + std::to_string(rng() % 20);
      const char* body = (rng() % 6 == 0) ? "[removed]" : "reply";
      dump += comment_line("c" + std::to_string(i), post, parent, body) + "\n";
      if (rng() % 9 == 0) dump += "{broken\n";
    }
    const auto corpus = parse_dump(dump, DumpFormat::kNdjson);
    const auto& r = corpus.ingest_report();
    CHECK(r.retained() + r.dropped_total() == r.total_records);
    CHECK_FALSE(contains_sentinel(corpus));
    for (const auto& c : corpus.comments()) {
      REQUIRE(corpus.find_post(c.post_id) != nullptr);
      if (c.parent_id) {
        const Comment* parent = corpus.find_comment(*c.parent_id);
        REQUIRE(parent != nullptr);
        CHECK(parent->post_id == c.post_id);
      }
    }
  }
}

TEST_CASE("unreadable dump throws IngestError") {
  CHECK_THROWS_AS(load_dump("/nonexistent/dump.jsonl", DumpFormat::kNdjson), IngestError);
  CHECK_THROWS_AS(parse_dump_format("csv"), std::invalid_argument);
}

TEST_CASE("filter_posts_by_factor") {
  std::string dump;
  std::vector<long> times{1700000500, 1700000100, 1700000900, 1700000300, 1700000700, 1700000300};
  for (std::size_t i = 0; i < times.size(); ++i) {
    dump += post_line("p" + std::to_string(i), "t", "b", times[i]) + "\n";
  }
  const auto corpus = parse_dump(dump, DumpFormat::kNdjson);

  CHECK(filter_posts_by_factor(corpus, {}).empty());

  auto one = filter_posts_by_factor(corpus, {"p1", "p_unknown"});
  REQUIRE(one.size() == 1);
  CHECK(one[0].id == "p1");

  const std::set<std::string> ids{"p0", "p1", "p3", "p4", "p5"};
  auto got = filter_posts_by_factor(corpus, ids);
  // Naive oracle: selection by repeated max scan.
  std::vector<std::pair<long, std::string>> pool;
  for (const auto& id : ids) pool.emplace_back(corpus.find_post(id)->created_at, id);
  std::vector<std::string> expected;
  while (!pool.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < pool.size(); ++i) {
      if (pool[i].first > pool[best].first ||
          (pool[i].first == pool[best].first && pool[i].second < pool[best].second)) {
        best = i;
      }
    }
    expected.push_back(pool[best].second);
    pool.erase(pool.begin() + static_cast<long>(best));
  }
  std::vector<std::string> got_ids;
  for (const auto& p : got) got_ids.push_back(p.id);
  CHECK(got_ids == expected);
}
