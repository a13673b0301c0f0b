#include <atomic>
#include <chrono>
#include <filesystem>
#include <thread>

#include "doctest.h"
#include "httplib.h"

#include "common/errors.hpp"
#include "common/file_util.hpp"
#include "llm/gateway.hpp"
#include "llm/http_provider.hpp"
#include "llm/mock_provider.hpp"
#include "llm/schema.hpp"
#include "llm/templates.hpp"

using namespace consearch;
using nlohmann::json;

namespace {

// Replays a fixed list of replies, one per call, and remembers the requests.
class ScriptedProvider final : public LlmProvider {
 public:
  explicit ScriptedProvider(std::vector<std::string> replies) : replies_(std::move(replies)) {}
  std::string id() const override { return "scripted"; }
  std::string complete(const LlmRequest& r) override {
    requests.push_back(r);
    if (next_ >= replies_.size()) throw ProviderError("script exhausted");
    return replies_[next_++];
  }
  std::vector<LlmRequest> requests;

 private:
  std::vector<std::string> replies_;
  std::size_t next_ = 0;
};

class SlowProvider final : public LlmProvider {
 public:
  std::string id() const override { return "slow"; }
  std::string complete(const LlmRequest& r) override {
    const int now = ++in_flight;
    int prev = peak.load();
    while (now > prev && !peak.compare_exchange_weak(prev, now)) {
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
    --in_flight;
    return json{{"summary", r.bindings.at("text")}}.dump();
  }
  std::atomic<int> in_flight{0};
  std::atomic<int> peak{0};
};

LlmGateway make_gateway(std::shared_ptr<LlmProvider> p, std::size_t limit = 4) {
  return LlmGateway(std::move(p), std::make_shared<CallLog>(),
                    std::make_shared<InFlightLimiter>(limit));
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("consearch_llm_" + name);
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

}  // namespace

TEST_CASE("binding digest matches an independent sha256 of the canonical key") {
  // Expected values computed with Python hashlib over
  // json.dumps(key, sort_keys=True, separators=(',', ':')).
  const auto& t = find_template(templates::kFactorDecompose);
  CHECK(binding_digest(t, json{{"query", "abc"}}) ==
        "827c2f57492189b06651c0e1c84a946af004ad33238e09ec1bcefbf243533054");
  CHECK(binding_digest(t, json{{"query", "Plan a 5-day trip"}, {"x", {1, 2}}}) ==
        "3763248a696f9ced25196b8f0d12bb2872d1f162342632b199472de018b9093d");
}

TEST_CASE("template catalog") {
  CHECK(template_catalog().size() == 13);
  CHECK_THROWS_AS(find_template("no_such_template"), std::invalid_argument);
  for (const auto& t : template_catalog()) {
    CHECK(!placeholders(t.body).empty());
    CHECK(t.output_schema.at("type") == "object");
  }
}

TEST_CASE("render substitutes and rejects unbound or unused bindings") {
  PromptTemplate t{"t", 1, "Q: {{q}} / {{obj}} / {{n}} / {{q}}", json::object(), {}, ""};
  CHECK(render(t, json{{"q", "hi"}, {"obj", {{"a", 1}}}, {"n", nullptr}}) ==
        "Q: hi / {\n  \"a\": 1\n} / (none) / hi");
  CHECK_THROWS_AS(render(t, json{{"q", "hi"}, {"obj", 1}}), std::invalid_argument);
  CHECK_THROWS_AS(render(t, json{{"q", "hi"}, {"obj", 1}, {"n", 1}, {"extra", 2}}),
                  std::invalid_argument);
}

TEST_CASE("schema validation") {
  const json schema = R"({"type": "object", "required": ["xs"],
    "properties": {"xs": {"type": "array", "minItems": 1, "maxItems": 2,
                          "items": {"type": "string", "minLength": 1}},
                   "e": {"type": "string", "enum": ["a", "b"]},
                   "n": {"type": "integer", "minimum": 0, "maximum": 3},
                   "o": {"type": ["object", "null"]}}})"_json;
  CHECK_FALSE(validate_schema(schema, R"({"xs": ["a"], "e": "b", "n": 3, "o": null})"_json));
  CHECK(validate_schema(schema, R"({})"_json));
  CHECK(validate_schema(schema, R"({"xs": []})"_json));
  CHECK(validate_schema(schema, R"({"xs": ["a", "b", "c"]})"_json));
  CHECK(validate_schema(schema, R"({"xs": [""]})"_json));
  CHECK(validate_schema(schema, R"({"xs": ["a"], "e": "c"})"_json));
  CHECK(validate_schema(schema, R"({"xs": ["a"], "n": 4})"_json));
  CHECK(validate_schema(schema, R"({"xs": ["a"], "n": 1.5})"_json));
  CHECK(validate_schema(schema, R"({"xs": ["a"], "zz": 1})"_json));
  CHECK(validate_schema(schema, R"({"xs": ["a"], "o": 3})"_json));
}

TEST_CASE("parse_model_json tolerates fences and prose") {
  CHECK(parse_model_json(R"({"a":1})").value() == json{{"a", 1}});
  CHECK(parse_model_json("```json\n{\"a\":1}\n```").value() == json{{"a", 1}});
  CHECK(parse_model_json("Sure! Here it is: {\"a\":1} hope that helps").value() ==
        json{{"a", 1}});
  CHECK_FALSE(parse_model_json("no json here"));
}

TEST_CASE("repair loop recovers from one malformed reply") {
  auto p = std::make_shared<ScriptedProvider>(
      std::vector<std::string>{"not json at all", R"({"summary": "ok"})"});
  auto gw = make_gateway(p);
  const json out = gw.complete_structured(templates::kSelectionSummarize, {{"text", "abc"}});
  CHECK(out == json{{"summary", "ok"}});
  REQUIRE(p->requests.size() == 2);
  CHECK(p->requests[0].attempt == 0);
  CHECK(p->requests[1].attempt == 1);
  // The repair prompt carries the rejected reply and the reason.
  const auto& msgs = p->requests[1].messages;
  REQUIRE(msgs.size() == 4);
  CHECK(msgs[2].role == "assistant");
  CHECK(msgs[2].content == "not json at all");
  CHECK(msgs[3].content.find("not valid JSON") != std::string::npos);
  CHECK(p->requests[0].temperature == 0.0);

  const auto calls = gw.log()->snapshot();
  REQUIRE(calls.size() == 2);
  CHECK_FALSE(calls[0].ok());
  CHECK(calls[1].ok());
  CHECK(calls[1].parsed == out);
  CHECK(calls[0].digest == calls[1].digest);
  CHECK(calls[0].rendered_prompt.find("abc") != std::string::npos);
}

TEST_CASE("exhausted repairs raise PipelineError naming the template") {
  auto p = std::make_shared<ScriptedProvider>(
      std::vector<std::string>{R"({"summary": ""})", R"({"wrong": 1})", "[]"});
  auto gw = make_gateway(p);
  try {
    gw.complete_structured(templates::kSelectionSummarize, {{"text", "abc"}});
    FAIL("expected PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.template_id() == "selection_summarize");
  }
  CHECK(p->requests.size() == 3);
  CHECK(gw.log()->size() == 3);
}

TEST_CASE("semantic check failures trigger repair") {
  auto p = std::make_shared<ScriptedProvider>(
      std::vector<std::string>{R"({"summary": "bad"})", R"({"summary": "good"})"});
  auto gw = make_gateway(p);
  const json out = gw.complete_structured(
      templates::kSelectionSummarize, {{"text", "abc"}},
      [](const json& j) -> std::optional<std::string> {
        if (j["summary"] == "bad") return "summary must not be 'bad'";
        return std::nullopt;
      });
  CHECK(out["summary"] == "good");
}

TEST_CASE("over-long lists are truncated before validation") {
  json eleven = json::array();
  for (int i = 0; i < 11; ++i) {
    eleven.push_back({{"title", "t" + std::to_string(i)}, {"explanation", "e"}});
  }
  auto p = std::make_shared<ScriptedProvider>(
      std::vector<std::string>{json{{"factors", eleven}}.dump()});
  auto gw = make_gateway(p);
  const json out = gw.complete_structured(templates::kFactorDecompose, {{"query", "q"}});
  CHECK(out["factors"].size() == 8);
  CHECK(out["factors"][7]["title"] == "t7");
}

TEST_CASE("transport errors are retried then surface as ProviderError") {
  auto p = std::make_shared<ScriptedProvider>(std::vector<std::string>{});
  auto gw = make_gateway(p);
  CHECK_THROWS_AS(gw.complete_structured(templates::kSelectionSummarize, {{"text", "x"}}),
                  ProviderError);
  CHECK(p->requests.size() == 3);
}

TEST_CASE("unknown template id is rejected before any call") {
  auto p = std::make_shared<ScriptedProvider>(std::vector<std::string>{});
  auto gw = make_gateway(p);
  CHECK_THROWS_AS(gw.complete_structured("nope", json::object()), std::invalid_argument);
  CHECK(p->requests.empty());
}

TEST_CASE("complete_many preserves order and honours the in-flight cap") {
  auto p = std::make_shared<SlowProvider>();
  auto gw = make_gateway(p, 2);
  std::vector<StructuredRequest> reqs;
  for (int i = 0; i < 8; ++i) {
    reqs.push_back({std::string(templates::kSelectionSummarize),
                    json{{"text", "t" + std::to_string(i)}}, {}});
  }
  const auto out = gw.complete_many(reqs);
  REQUIRE(out.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(out[i]["summary"] == "t" + std::to_string(i));
  CHECK(p->peak.load() <= 2);
  CHECK(p->peak.load() >= 1);
}

TEST_CASE("mock provider is deterministic and valid for every template") {
  auto mock = std::make_shared<MockLlmProvider>();
  auto gw = make_gateway(mock);
  const json factor = {{"id", "f1"}, {"title", "Budget Constraints"}, {"explanation", "money"}};
  const json seeker = {{"name", "Akira"}, {"age", 28}, {"gender", "male"},
                       {"identity", "anime fan"}, {"background", "likes anime"},
                       {"situations", {{{"factor_id", "f1"}, {"situation", "tight budget"}}}}};
  const json provider = {{"name", "Yuki"}, {"age", 30}, {"gender", "female"},
                         {"identity", "filmmaker"}, {"background", "works in animation"}};
  const std::vector<std::pair<std::string, json>> cases = {
      {"factor_decompose", {{"query", "Plan a trip"}}},
      {"factor_queries", {{"query", "q"}, {"factor", factor}, {"posts", json::array()},
                          {"grounded", false}}},
      {"seeker_personas", {{"query", "q"}, {"factors", {factor}}, {"posts", {"a post"}},
                           {"count", 3}}},
      {"persona_merge_refine", {{"kind", "seeker"}, {"query", "q"}, {"min_count", 3},
                                {"max_count", 3}, {"candidates", {seeker, seeker}},
                                {"factors", {factor}}}},
      {"situation_generate", {{"persona", seeker}, {"factor", factor}, {"query", "q"}}},
      {"seeker_queries", {{"query", "q"}, {"persona", seeker}, {"posts", {"p"}}, {"count", 5}}},
      {"comment_group_adjust", {{"queries", {"q"}}, {"seeker", seeker},
                                {"groups", {{{"group", 0},
                                             {"comments", {{{"ref", 0}, {"text", "hotel tips"}}}}}}}}},
      {"provider_personas", {{"seeker_queries", {"q"}}, {"comments", {"I stayed in Shinjuku"}},
                             {"count", 1}}},
      {"grounded_answer", {{"query", "q"}, {"history_summary", nullptr}, {"history", json::array()},
                           {"texts", {{{"ref", 0}, {"text", "try Akihabara"}}}},
                           {"seeker", seeker}, {"provider", provider}}},
      {"genai_answer", {{"query", "q"}, {"history", json::array()}, {"provider", provider}}},
      {"recommended_questions", {{"query", "q"}, {"history", json::array()}, {"seeker", nullptr},
                                 {"strategies", {{{"strategy", "history"}},
                                                 {{"strategy", "random_factor"}, {"factor", factor}},
                                                 {{"strategy", "underexplored_factor"},
                                                  {"factor", factor}}}}}},
      {"selection_summarize", {{"text", "some text"}}},
      {"factor_attribution", {{"factors", {factor}},
                              {"segments", {{{"ref", 0}, {"text", "my budget was small"}},
                                            {{"ref", 1}, {"text", "nothing"}}}}}},
  };
  for (const auto& [tid, b] : cases) {
    CAPTURE(tid);
    const json a = gw.complete_structured(tid, b);
    const json again = gw.complete_structured(tid, b);
    CHECK(a.dump() == again.dump());
  }
  CHECK(gw.log()->size() == cases.size() * 2);
  for (const auto& c : gw.log()->snapshot()) CHECK(c.attempt == 0);
}

TEST_CASE("mock filler content follows the bindings") {
  auto gw = make_gateway(std::make_shared<MockLlmProvider>());
  const json factor = {{"id", "f2"}, {"title", "Budget Constraints"}, {"explanation", "money"}};
  const json seeker = {{"name", "Akira"}, {"age", 28}, {"gender", "male"},
                       {"identity", "anime fan"}, {"background", "likes anime"},
                       {"situations", {{{"factor_id", "f1"}, {"situation", "x"}}}}};
  const json b = {{"persona", seeker}, {"factor", factor}, {"query", "q"}};
  const json s = gw.complete_structured(templates::kSituationGenerate, b);
  const std::string digest =
      binding_digest(find_template(templates::kSituationGenerate), b).substr(0, 8);
  const std::string text = s["situation"];
  CHECK(text.find("Akira") == 0);
  CHECK(text.find("budget constraints") != std::string::npos);
  CHECK(text.find(digest) != std::string::npos);

  const json attr = gw.complete_structured(
      templates::kFactorAttribution,
      {{"factors", {factor}},
       {"segments", {{{"ref", 0}, {"text", "My BUDGET was small"}}, {{"ref", 1}, {"text", "no"}}}}});
  CHECK(attr["attributions"][0]["factor_ids"] == json{"f2"});
  CHECK(attr["attributions"][1]["factor_ids"].empty());

  const json q = gw.complete_structured(
      templates::kSeekerQueries,
      {{"query", "q"}, {"persona", seeker}, {"posts", json::array()}, {"count", 5}});
  std::set<std::string> distinct(q["queries"].begin(), q["queries"].end());
  CHECK(distinct.size() == 5);

  const json merged = gw.complete_structured(
      templates::kPersonaMergeRefine,
      {{"kind", "provider"}, {"query", "q"}, {"min_count", 1}, {"max_count", 2},
       {"candidates", {seeker, seeker, seeker, seeker, seeker}}, {"factors", nullptr}});
  REQUIRE(merged["personas"].size() == 2);
  std::set<int> covered;
  for (const auto& p : merged["personas"]) {
    for (const auto& i : p["merged_from"]) covered.insert(i.get<int>());
  }
  CHECK(covered == std::set<int>{0, 1, 2, 3, 4});
}

TEST_CASE("fixtures take precedence: digest first, then match in file order") {
  const auto dir = temp_dir("fixtures");
  const json b = {{"text", "hello world"}};
  const std::string digest = binding_digest(find_template(templates::kSelectionSummarize), b);
  write_file_atomic(dir / "a_match.json",
                    json{{"template_id", "selection_summarize"},
                         {"match", {{"text", "hello world"}}},
                         {"response", {{"summary", "from match"}}}}
                        .dump());
  write_file_atomic(dir / "b_match.json",
                    json{{"template_id", "selection_summarize"},
                         {"match", json::object()},
                         {"response", {{"summary", "catch all"}}}}
                        .dump());
  std::filesystem::create_directories(dir / "sub");
  write_file_atomic(dir / "sub" / "z_digest.json",
                    json{{"template_id", "selection_summarize"},
                         {"digest", digest},
                         {"response", {{"summary", "from digest"}}}}
                        .dump());
  auto fixtures = MockLlmProvider::load_fixtures(dir);
  REQUIRE(fixtures.size() == 3);
  auto mock = std::make_shared<MockLlmProvider>(fixtures);
  auto gw = make_gateway(mock);
  CHECK(gw.complete_structured(templates::kSelectionSummarize, b)["summary"] == "from digest");
  CHECK(gw.complete_structured(templates::kSelectionSummarize, {{"text", "other"}})["summary"] ==
        "catch all");
  CHECK(mock->filler_hits() == 0);

  CHECK(json_subset(json{{"a", {{"b", 1}}}}, json{{"a", {{"b", 1}, {"c", 2}}}, {"d", 3}}));
  CHECK_FALSE(json_subset(json{{"a", {{"b", 2}}}}, json{{"a", {{"b", 1}}}}));
}

TEST_CASE("misses are recorded as replayable fixtures") {
  const auto dir = temp_dir("record");
  auto mock = std::make_shared<MockLlmProvider>();
  mock->record_misses_to(dir);
  auto gw = make_gateway(mock);
  const json first = gw.complete_structured(templates::kSelectionSummarize, {{"text", "abc def"}});
  auto fixtures = MockLlmProvider::load_fixtures(dir);
  REQUIRE(fixtures.size() == 1);
  CHECK(fixtures[0].digest.has_value());
  auto replay = std::make_shared<MockLlmProvider>(fixtures);
  auto gw2 = make_gateway(replay);
  CHECK(gw2.complete_structured(templates::kSelectionSummarize, {{"text", "abc def"}}) == first);
  CHECK(replay->fixture_hits() == 1);
}

TEST_CASE("malformed fixture files are rejected") {
  const auto dir = temp_dir("bad_fixture");
  write_file_atomic(dir / "x.json", R"({"template_id": "selection_summarize"})");
  CHECK_THROWS_AS(MockLlmProvider::load_fixtures(dir), std::invalid_argument);
}

TEST_CASE("HTTP provider speaks chat-completions") {
  httplib::Server server;
  json seen;
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    res.set_content(
        json{{"choices", {{{"message", {{"role", "assistant"},
                                        {"content", "```json\n{\"summary\": \"remote\"}\n```"}}}}}}}
            .dump(),
        "application/json");
  });
  server.Post("/broken", [](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("nope", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  auto provider = std::make_shared<HttpLlmProvider>(base + "/v1/chat/completions", "m1", "key");
  CHECK(provider->id() == "http:m1");
  auto gw = make_gateway(provider);
  CHECK(gw.complete_structured(templates::kSelectionSummarize, {{"text", "x"}})["summary"] ==
        "remote");
  CHECK(seen["model"] == "m1");
  CHECK(seen["temperature"] == 0.0);
  CHECK(seen["messages"].size() == 2);
  CHECK(seen["messages"][0]["role"] == "system");
  CHECK(auth == "Bearer key");

  HttpPostOptions fast;
  fast.retries = 0;
  HttpLlmProvider broken(base + "/broken", "m1", "", fast);
  LlmRequest r;
  CHECK_THROWS_AS(broken.complete(r), ProviderError);

  server.stop();
  t.join();
}
