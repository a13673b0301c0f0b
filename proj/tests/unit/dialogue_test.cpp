#include <algorithm>
#include <set>

#include "doctest.h"

#include "common/errors.hpp"
#include "dialogue/dialogue.hpp"
#include "test_env.hpp"

using namespace consearch;
using namespace consearch::testing;
using nlohmann::json;

namespace {

std::vector<LlmCall> calls_of(const LlmGateway& gw, std::string_view template_id) {
  std::vector<LlmCall> out;
  for (auto& c : gw.log()->snapshot()) {
    if (c.template_id == template_id && c.ok()) out.push_back(std::move(c));
  }
  return out;
}

std::string title_post(const std::string& id, const std::string& title) {
  return json{{"kind", "post"}, {"id", id}, {"title", title}, {"selftext", ""},
              {"author", "u"},  {"created_utc", 1}, {"score", 0}}
             .dump() +
         "\n";
}

// Constructed case, cosines precomputed by tests/oracles/floor_case.py:
//   segment  query     background
//   p:b1:0   0.871033  0.076472
//   p:a1:0   0.801309  0.217752
//   p:b2:0   0.723747  0.100125
//   p:a2:0   0.559065  0.291053
//   p:a3:0   0.400047  0.468293
//   (three distractors score below 0.13 against the query)
const std::string kFloorQuery = "ramen near shinjuku station hotel";
const std::string kFloorBackground = "ramen noodle broth lover who eats ramen every day";

CommunityCorpus floor_corpus() {
  std::string dump;
  dump += title_post("a1", "ramen shops near shinjuku station");
  dump += title_post("a2", "best ramen broth near the station");
  dump += title_post("a3", "ramen noodle lover guide to shinjuku");
  dump += title_post("b1", "hotel near shinjuku station");
  dump += title_post("b2", "shinjuku station hotel rooms");
  dump += title_post("d1", "kyoto temple gardens in autumn");
  dump += title_post("d2", "osaka castle park picnic");
  dump += title_post("d3", "hiking mount takao trails");
  return parse_dump(dump, DumpFormat::kNdjson);
}

SeekerPersona test_seeker() {
  SeekerPersona s;
  s.id = "seeker-1";
  s.name = "Quill";
  s.age = 30;
  s.gender = "female";
  s.identity = "noodle hunter";
  s.background = "Quill plans trips around food.";
  s.situated_factors = {{"f1", "Quill wants ramen every night.", false}};
  return s;
}

ProviderPersona test_provider(EmbeddingProvider& embedder) {
  ProviderPersona p;
  p.id = "provider-1";
  p.name = "Brill";
  p.age = 40;
  p.gender = "male";
  p.identity = "ramen critic";
  p.background = kFloorBackground;
  p.source_comment_ids = {};
  p.background_vector = embed_one(p.background, embedder);
  return p;
}

std::vector<Factor> test_factors() {
  std::vector<Factor> fs(3);
  fs[0] = {"f1", "Ramen Hunting", "Where to eat noodles.", {"q"}, {}, false, true};
  fs[1] = {"f2", "Hotel Location", "Where to stay.", {"q"}, {}, false, true};
  fs[2] = {"f3", "Day Trips", "Trips out of the city.", {"q"}, {}, false, true};
  return fs;
}

bool mentions(const LlmCall& c, const std::string& needle) {
  return c.rendered_prompt.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("full mode drops grounding segments below the background floor") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  const auto seeker = test_seeker();
  const auto provider = test_provider(env.embedder);

  TurnInput turn;
  turn.query = kFloorQuery;
  turn.mode = Mode::kFull;
  turn.seeker = &seeker;
  turn.provider = &provider;
  turn.factors = test_factors();
  const auto r = answer(turn, ctx);

  REQUIRE(r.references.size() == 3);
  CHECK(r.references[0].segment_id == "p:a1:0");
  CHECK(r.references[1].segment_id == "p:a2:0");
  CHECK(r.references[2].segment_id == "p:a3:0");
  CHECK(r.references[0].score == doctest::Approx(0.801309).epsilon(1e-5));
  CHECK(r.references[1].score == doctest::Approx(0.559065).epsilon(1e-5));
  CHECK(r.references[2].score == doctest::Approx(0.400047).epsilon(1e-5));
  for (const auto& ref : r.references) {
    CHECK(ref.source_kind == "post");
    const auto pos = env.index.find(ref.segment_id);
    REQUIRE(pos.has_value());
    CHECK(cosine(provider.background_vector.values(), env.index.vector(*pos)) >= 0.2);
  }
  CHECK(r.persona_answer.has_value());
  CHECK_FALSE(r.no_community_grounding);
  REQUIRE(r.recommended_questions.size() == 3);

  const auto grounded = calls_of(env.gateway, "grounded_answer");
  REQUIRE(grounded.size() == 1);
  CHECK(grounded[0].bindings["texts"].size() == 3);
  CHECK(grounded[0].bindings["seeker"]["name"] == "Quill");
  CHECK(grounded[0].bindings["provider"]["name"] == "Brill");
  const auto genai = calls_of(env.gateway, "genai_answer");
  REQUIRE(genai.size() == 1);
  CHECK(genai[0].bindings["provider"]["name"] == "Brill");
  CHECK_FALSE(mentions(genai[0], "Quill"));
  CHECK_FALSE(mentions(genai[0], "ramen shops near shinjuku"));
}

TEST_CASE("baseline mode: single grounded answer, no persona text") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  TurnInput turn;
  turn.query = "osaka castle park picnic";
  turn.mode = Mode::kBaseline;
  turn.factors = test_factors();
  const auto r = answer(turn, ctx);
  REQUIRE(r.references.size() == 5);
  CHECK(r.references[0].segment_id == "p:d2:0");
  CHECK(r.references[0].score == doctest::Approx(1.0));
  CHECK_FALSE(r.persona_answer.has_value());
  CHECK_FALSE(r.genai_answer.empty());
  CHECK(calls_of(env.gateway, "genai_answer").empty());
  const auto grounded = calls_of(env.gateway, "grounded_answer");
  REQUIRE(grounded.size() == 1);
  CHECK(grounded[0].parsed["answer"] == r.genai_answer);
  for (const auto& c : env.gateway.log()->snapshot()) {
    if (c.bindings.contains("seeker")) CHECK(c.bindings["seeker"].is_null());
    if (c.bindings.contains("provider")) CHECK(c.bindings["provider"].is_null());
  }
}

TEST_CASE("seeker_only mode: seeker in the grounded prompt, no provider anywhere") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  const auto seeker = test_seeker();
  TurnInput turn;
  turn.query = kFloorQuery;
  turn.mode = Mode::kSeekerOnly;
  turn.seeker = &seeker;
  turn.factors = test_factors();
  const auto r = answer(turn, ctx);
  CHECK(r.references.size() == 5);  // no background filter without a provider
  CHECK(r.persona_answer.has_value());
  const auto grounded = calls_of(env.gateway, "grounded_answer");
  REQUIRE(grounded.size() == 1);
  CHECK(mentions(grounded[0], "Quill plans trips around food."));
  const auto genai = calls_of(env.gateway, "genai_answer");
  REQUIRE(genai.size() == 1);
  CHECK(genai[0].bindings["provider"].is_null());
  for (const auto& c : env.gateway.log()->snapshot()) CHECK_FALSE(mentions(c, kFloorBackground));
}

TEST_CASE("answer preconditions") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  const auto seeker = test_seeker();
  const auto provider = test_provider(env.embedder);
  TurnInput t;
  t.query = "x";
  t.mode = Mode::kFull;
  t.seeker = &seeker;
  CHECK_THROWS_AS(answer(t, ctx), std::invalid_argument);
  t.mode = Mode::kSeekerOnly;
  t.seeker = nullptr;
  CHECK_THROWS_AS(answer(t, ctx), std::invalid_argument);
  t.seeker = &seeker;
  t.provider = &provider;
  CHECK_THROWS_AS(answer(t, ctx), std::invalid_argument);
  t.mode = Mode::kBaseline;
  t.provider = nullptr;
  CHECK_THROWS_AS(answer(t, ctx), std::invalid_argument);
  t.seeker = nullptr;
  t.query = "  ";
  CHECK_THROWS_AS(answer(t, ctx), std::invalid_argument);
  CHECK(env.gateway.log()->size() == 0);
}

TEST_CASE("empty grounding set is marked, never fabricated") {
  MockEnv env(parse_dump("", DumpFormat::kNdjson), false);
  auto ctx = env.ctx();
  TurnInput turn;
  turn.query = "anything at all";
  turn.mode = Mode::kBaseline;
  turn.factors = test_factors();
  const auto r = answer(turn, ctx);
  CHECK(r.no_community_grounding);
  CHECK(r.references.empty());
  CHECK(r.recommended_questions.size() == 3);
  for (const auto& [fid, n] : r.factor_counts) CHECK(n == 0);
  CHECK(calls_of(env.gateway, "factor_attribution").empty());
}

TEST_CASE("history beyond the window is summarized") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  TurnInput turn;
  turn.query = kFloorQuery;
  turn.mode = Mode::kBaseline;
  turn.factors = test_factors();
  for (int i = 0; i < 8; ++i) {
    turn.history.push_back({i % 2 ? "agent" : "user", "message " + std::to_string(i), i, "typed", {}});
  }
  answer(turn, ctx);
  const auto grounded = calls_of(env.gateway, "grounded_answer");
  REQUIRE(grounded.size() == 1);
  const auto& h = grounded[0].bindings["history"];
  REQUIRE(h.size() == 6);
  CHECK(h[0]["text"] == "message 2");
  CHECK(h[5]["text"] == "message 7");
  CHECK(grounded[0].bindings["history_summary"].is_string());
  const auto sums = calls_of(env.gateway, "selection_summarize");
  REQUIRE(sums.size() == 1);
  CHECK(sums[0].bindings["text"] == "user: message 0\nagent: message 1\n");
}

TEST_CASE("Yuki answers the anime hotspot question with locations and reasons") {
  auto env = MockEnv::japan();
  auto ctx = env.ctx();
  const auto factors = decompose_factors(kJapanQuery, ctx);
  const auto seekers = generate_seekers(kJapanQuery, factors, ctx);
  const auto& akira = seekers[0];
  REQUIRE(akira.name == "Akira");
  const auto queries = suggest_seeker_queries(akira, kJapanQuery, ctx);
  const auto providers = generate_providers(akira, queries, ctx);
  const auto yuki = std::find_if(providers.begin(), providers.end(),
                                 [](const auto& p) { return p.name == "Yuki"; });
  REQUIRE(yuki != providers.end());

  TurnInput turn;
  turn.query = queries[0];
  turn.mode = Mode::kFull;
  turn.seeker = &akira;
  turn.provider = &*yuki;
  turn.factors = factors;
  const auto r = answer(turn, ctx);
  REQUIRE(r.persona_answer.has_value());
  for (const char* place : {"Akihabara", "Nakano Broadway", "Studio Ghibli Museum", "Ikebukuro"}) {
    CHECK(r.persona_answer->find(place) != std::string::npos);
  }
  CHECK(r.persona_answer->find("because") != std::string::npos);
  for (const auto& ref : r.references) {
    const auto pos = env.index.find(ref.segment_id);
    REQUIRE(pos.has_value());
    CHECK(cosine(yuki->background_vector.values(), env.index.vector(*pos)) >= 0.2);
    CHECK((env.corpus.find_post(ref.source_id) || env.corpus.find_comment(ref.source_id)));
  }
}

TEST_CASE("recommend_questions strategies") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  const auto factors = test_factors();

  SUBCASE("a single situated factor feeds both factor strategies with distinct texts") {
    const auto seeker = test_seeker();
    const auto qs = recommend_questions(&seeker, {}, "q", {}, factors, 1, ctx);
    REQUIRE(qs.size() == 3);
    CHECK(qs[0].strategy == "history");
    CHECK(qs[1].strategy == "random_factor");
    CHECK(qs[2].strategy == "underexplored_factor");
    CHECK(qs[1].text != qs[2].text);
    const auto call = calls_of(env.gateway, "recommended_questions").at(0);
    CHECK(call.bindings["strategies"][1]["factor"]["id"] == "f1");
    CHECK(call.bindings["strategies"][2]["factor"]["id"] == "f1");
  }

  SUBCASE("the least attributed factor is underexplored") {
    const std::map<std::string, std::uint64_t> counts = {{"f1", 3}, {"f2", 0}, {"f3", 2}};
    recommend_questions(nullptr, {}, "q", counts, factors, 7, ctx);
    const auto call = calls_of(env.gateway, "recommended_questions").at(0);
    CHECK(call.bindings["strategies"][2]["factor"]["id"] == "f2");
    CHECK(call.bindings["seeker"].is_null());
  }

  SUBCASE("ties break by factor id") {
    recommend_questions(nullptr, {}, "q", {{"f1", 1}, {"f2", 1}, {"f3", 1}}, factors, 7, ctx);
    CHECK(calls_of(env.gateway, "recommended_questions").at(0).bindings["strategies"][2]["factor"]["id"] == "f1");
  }

  SUBCASE("the random factor is a pure function of the seed") {
    std::set<std::string> chosen;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      recommend_questions(nullptr, {}, "q", {}, factors, seed, ctx);
      recommend_questions(nullptr, {}, "q", {}, factors, seed, ctx);
    }
    const auto calls = calls_of(env.gateway, "recommended_questions");
    REQUIRE(calls.size() == 80);
    for (std::size_t i = 0; i < calls.size(); i += 2) {
      const auto a = calls[i].bindings["strategies"][1]["factor"]["id"].get<std::string>();
      CHECK(a == calls[i + 1].bindings["strategies"][1]["factor"]["id"]);
      chosen.insert(a);
    }
    CHECK(chosen.size() == 3);
  }
}

TEST_CASE("attribute_factors") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  const auto factors = test_factors();
  const auto zero = attribute_factors({}, factors, ctx);
  CHECK(zero == std::map<std::string, std::uint64_t>{{"f1", 0}, {"f2", 0}, {"f3", 0}});
  CHECK(env.gateway.log()->size() == 0);

  // Two hotel segments, three ramen segments ("Ramen" and "Hotel" are title keywords).
  std::vector<const Segment*> segs;
  for (const char* id : {"p:a1:0", "p:a2:0", "p:a3:0", "p:b1:0", "p:b2:0"}) {
    segs.push_back(&env.index.segment(*env.index.find(id)));
  }
  const auto counts = attribute_factors(segs, factors, ctx);
  CHECK(counts == std::map<std::string, std::uint64_t>{{"f1", 3}, {"f2", 2}, {"f3", 0}});

  CHECK_THROWS_AS(attribute_factors(segs, {}, ctx), std::invalid_argument);
}

TEST_CASE("attribute_factors freezes on model failure") {
  class Garbage final : public LlmProvider {
   public:
    std::string id() const override { return "garbage"; }
    std::string complete(const LlmRequest&) override { return "not json"; }
  };
  MockEnv env(floor_corpus(), false);
  LlmGateway gw(std::make_shared<Garbage>(), nullptr, nullptr);
  PipelineContext ctx{env.corpus, env.index, env.embedder, gw};
  std::vector<const Segment*> segs = {&env.index.segment(0)};
  const auto counts = attribute_factors(segs, test_factors(), ctx);
  for (const auto& [fid, n] : counts) CHECK(n == 0);
  CHECK(counts.size() == 3);
}

TEST_CASE("factor map counts accumulate turn by turn") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  const auto factors = test_factors();
  FactorMapState state;
  std::map<std::string, std::uint64_t> hand_sum;
  const char* queries[] = {"ramen near shinjuku", "hotel rooms", "kyoto temple", "station hotel ramen"};
  for (const char* q : queries) {
    TurnInput t;
    t.query = q;
    t.mode = Mode::kBaseline;
    t.factors = factors;
    const auto before = state.counts;
    const auto r = answer(t, ctx);
    state.fold(r.factor_counts);
    for (const auto& [fid, n] : r.factor_counts) hand_sum[fid] += n;
    for (const auto& [fid, n] : before) CHECK(state.counts[fid] >= n);
  }
  CHECK(state.counts == hand_sum);
  CHECK(state.counts.at("f1") > 0);

  CHECK(FactorMapState::node_size(0) == 10.0);
  CHECK(FactorMapState::node_size(1) < FactorMapState::node_size(4));
  CHECK(FactorMapState::node_size(4) < FactorMapState::node_size(9));
}

TEST_CASE("summarize_selection truncates long selections by character count") {
  MockEnv env(floor_corpus(), false);
  auto ctx = env.ctx();
  CHECK_THROWS_AS(summarize_selection("", ctx), std::invalid_argument);
  CHECK_THROWS_AS(summarize_selection(" \n ", ctx), std::invalid_argument);

  const auto short_one = summarize_selection("A short paragraph about ramen.", ctx);
  CHECK_FALSE(short_one.truncated);
  CHECK_FALSE(short_one.summary.empty());

  std::string big;
  for (int i = 0; i < 5000; ++i) big += "a\xC3\xA9";  // 10,000 characters, 15,000 bytes
  const auto r = summarize_selection(big, ctx);
  CHECK(r.truncated);
  CHECK(r.input_chars == 10000);
  const auto call = calls_of(env.gateway, "selection_summarize").back();
  const std::string sent = call.bindings["text"];
  CHECK(count_chars(sent) == 4000);
  CHECK(sent.size() == 6000);
  CHECK(sent == big.substr(0, 6000));

  std::string exact(4000, 'x');
  CHECK_FALSE(summarize_selection(exact, ctx).truncated);
  CHECK(summarize_selection(exact + "y", ctx).truncated);
}

TEST_CASE("agent response JSON round-trips") {
  AgentResponse r;
  r.persona_answer = "p";
  r.genai_answer = "g";
  r.references = {{"p:a:0", "post", "a", 0.5}};
  r.recommended_questions = {{"t", "history"}};
  r.factor_counts = {{"f1", 2}};
  ChatMessage m{"agent", "p", 12, "", r};
  const json j = m;
  CHECK(j.get<ChatMessage>().response->references[0].segment_id == "p:a:0");
  CHECK(json(j.get<ChatMessage>()) == j);
  CHECK(mode_from_string("seeker_only") == Mode::kSeekerOnly);
  CHECK_THROWS_AS(mode_from_string("other"), std::invalid_argument);
}
