#include "llm/mock_provider.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <stdexcept>

#include "common/errors.hpp"
#include "common/file_util.hpp"

namespace consearch {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kFacetPalette = {
    "Budget Constraints",   "Accommodation Choice", "Food Interests",
    "Itinerary Pacing",     "Transportation Options", "Cultural Attractions",
    "Seasonal Timing",      "Travel Companions"};

const std::vector<std::string> kSeekerNames = {"Akira", "Mei",   "Daniel", "Sofia",
                                               "Ravi",  "Hana",  "Lucas",  "Nora"};
const std::vector<std::string> kProviderNames = {"Yuki",  "Kenji", "Emma",  "Marco",
                                                 "Aiko",  "Sam",   "Priya", "Theo"};
const std::vector<std::string> kGenders = {"female", "male", "non-binary"};

std::uint64_t digest_bits(const std::string& digest, std::size_t offset = 0) {
  std::uint64_t v = 0;
  for (std::size_t i = offset; i < digest.size() && i < offset + 16; ++i) {
    const char c = digest[i];
    const int d = (c >= '0' && c <= '9') ? c - '0' : (c >= 'a' && c <= 'f') ? c - 'a' + 10 : 0;
    v = (v << 4) | static_cast<std::uint64_t>(d);
  }
  return v;
}

std::string str_or(const json& j, const char* key, std::string fallback = "") {
  if (j.is_object() && j.contains(key) && j[key].is_string()) return j[key].get<std::string>();
  return fallback;
}

std::string shorten(const std::string& s, std::size_t max_chars) {
  if (s.size() <= max_chars) return s;
  std::size_t cut = max_chars;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  const auto space = s.rfind(' ', cut);
  if (space != std::string::npos && space > max_chars / 2) cut = space;
  return s.substr(0, cut) + "...";
}

std::string lower(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::vector<std::string> keywords(const std::string& text, std::size_t min_len = 4) {
  static const std::set<std::string> kStop = {"about", "that", "this", "with", "from", "have",
                                              "what", "your", "will", "when", "where", "which",
                                              "there", "their", "they", "into", "like", "can"};
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (cur.size() >= min_len && !kStop.count(cur) &&
        std::find(out.begin(), out.end(), cur) == out.end()) {
      out.push_back(cur);
    }
    cur.clear();
  };
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

std::string text_of(const json& item) {
  if (item.is_string()) return item.get<std::string>();
  if (item.is_object()) {
    for (const char* k : {"text", "situation", "title", "background"}) {
      if (item.contains(k) && item[k].is_string()) return item[k].get<std::string>();
    }
  }
  return item.dump();
}

int count_or(const json& b, const char* key, int fallback) {
  if (b.contains(key) && b[key].is_number_integer()) return b[key].get<int>();
  return fallback;
}

json fill_factor_decompose(const std::string& digest, const json& b) {
  const std::string query = str_or(b, "query");
  const std::size_t start = digest_bits(digest) % kFacetPalette.size();
  json factors = json::array();
  for (std::size_t i = 0; i < 5; ++i) {
    const auto& title = kFacetPalette[(start + i) % kFacetPalette.size()];
    factors.push_back({{"title", title},
                       {"explanation", "How " + lower(title) + " shapes a good answer to \"" +
                                           shorten(query, 120) + "\"."}});
  }
  return {{"factors", factors}};
}

json fill_factor_queries(const json& b) {
  const std::string title = str_or(b.value("factor", json::object()), "title", "this factor");
  const std::string query = str_or(b, "query");
  return {{"queries",
           {"What do people recommend regarding " + lower(title) + "?",
            title + " tips for: " + shorten(query, 120)}}};
}

json make_seeker(const std::string& digest, std::size_t i, const json& factors,
                 const json& posts, const std::string& query) {
  const std::uint64_t bits = digest_bits(digest, (i * 5) % 48);
  json p;
  p["name"] = kSeekerNames[(bits + i) % kSeekerNames.size()];
  p["age"] = 20 + static_cast<int>(bits % 41);
  p["gender"] = kGenders[(bits >> 8) % kGenders.size()];
  std::string focus = "general planning";
  json situations = json::array();
  if (factors.is_array() && !factors.empty()) {
    const auto& f0 = factors[i % factors.size()];
    focus = lower(str_or(f0, "title", focus));
    const std::size_t nsit = std::min<std::size_t>(2, factors.size());
    for (std::size_t k = 0; k < nsit; ++k) {
      const auto& f = factors[(i + k) % factors.size()];
      situations.push_back(
          {{"factor_id", str_or(f, "id", "f" + std::to_string(k + 1))},
           {"situation", p["name"].get<std::string>() + " is weighing " +
                             lower(str_or(f, "title", "this")) + " while planning: " +
                             shorten(query, 100)}});
    }
  } else {
    situations.push_back({{"factor_id", "f1"}, {"situation", "Planning: " + shorten(query, 100)}});
  }
  p["identity"] = "community member focused on " + focus;
  std::string evidence;
  if (posts.is_array() && !posts.empty()) {
    evidence = " Has read posts such as: \"" + shorten(text_of(posts[i % posts.size()]), 160) + "\"";
  }
  p["background"] = "Asked about \"" + shorten(query, 100) + "\" with an eye on " + focus + "." +
                    evidence;
  p["situations"] = situations;
  return p;
}

json fill_seeker_personas(const std::string& digest, const json& b) {
  const int count = std::max(1, count_or(b, "count", 3));
  json personas = json::array();
  for (int i = 0; i < count; ++i) {
    personas.push_back(make_seeker(digest, static_cast<std::size_t>(i),
                                   b.value("factors", json::array()),
                                   b.value("posts", json::array()), str_or(b, "query")));
  }
  return {{"personas", personas}};
}

json fill_merge_refine(const json& b) {
  const json candidates = b.value("candidates", json::array());
  const int min_count = count_or(b, "min_count", 1);
  const int max_count = count_or(b, "max_count", 6);
  const bool seeker = str_or(b, "kind") == "seeker";
  const int n = static_cast<int>(candidates.size());
  if (n == 0) return {{"personas", json::array()}};
  const int k = std::clamp(n, std::max(1, min_count), std::max(1, max_count));
  json out = json::array();
  for (int i = 0; i < k; ++i) {
    json merged = json::array();
    for (int c = i % n; c < n; c += k) merged.push_back(c);
    if (merged.empty()) merged.push_back(i % n);
    const json& base = candidates[merged[0].get<int>()];
    json p;
    for (const char* key : {"name", "age", "gender", "identity", "background"}) {
      p[key] = base.at(key);
    }
    p["merged_from"] = merged;
    if (seeker) {
      json sits = json::array();
      for (const auto& idx : merged) {
        for (const auto& s : candidates[idx.get<int>()].value("situations", json::array())) {
          sits.push_back(s);
        }
      }
      if (!sits.empty()) p["situations"] = sits;
    }
    out.push_back(p);
  }
  return {{"personas", out}};
}

json fill_situation(const std::string& digest, const json& b) {
  const json persona = b.value("persona", json::object());
  const json factor = b.value("factor", json::object());
  return {{"situation", str_or(persona, "name", "The seeker") + " is thinking about " +
                            lower(str_or(factor, "title", "this factor")) + ": " +
                            str_or(factor, "explanation") + " [" + digest.substr(0, 8) + "]"}};
}

json fill_seeker_queries(const json& b) {
  const json persona = b.value("persona", json::object());
  const std::string name = str_or(persona, "name", "a seeker");
  const std::string identity = str_or(persona, "identity", "a community member");
  const std::string query = shorten(str_or(b, "query"), 100);
  std::vector<std::string> sits;
  for (const auto& s : persona.value("situations", json::array())) sits.push_back(text_of(s));
  const std::string s0 = sits.empty() ? query : shorten(sits[0], 100);
  const std::string s1 = sits.size() > 1 ? shorten(sits[1], 100) : s0;
  return {{"queries",
           {"As " + identity + ", what should I prioritize for: " + query + "?",
            "How have others handled this situation: " + s0 + "?",
            "What would you avoid given this situation: " + s1 + "?",
            "Which places or options do locals recommend to " + name + "?",
            "What surprised you most when dealing with: " + query + "?"}}};
}

json fill_comment_group_adjust(const json& b) {
  json out = json::array();
  for (const auto& g : b.value("groups", json::array())) {
    json refs = json::array();
    std::string first;
    for (const auto& c : g.value("comments", json::array())) {
      refs.push_back(c.at("ref"));
      if (first.empty()) first = text_of(c);
    }
    if (refs.empty()) continue;
    const auto words = keywords(first);
    std::string theme = "shared experience";
    if (!words.empty()) {
      theme = words[0];
      if (words.size() > 1) theme += " and " + words[1];
    }
    out.push_back({{"refs", refs}, {"theme", theme}});
  }
  return {{"groups", out}};
}

json fill_provider_personas(const std::string& digest, const json& b) {
  const int count = std::max(1, count_or(b, "count", 1));
  const json comments = b.value("comments", json::array());
  json out = json::array();
  for (int i = 0; i < count; ++i) {
    const std::uint64_t bits = digest_bits(digest, (static_cast<std::size_t>(i) * 7) % 48);
    json p;
    p["name"] = kProviderNames[bits % kProviderNames.size()];
    p["age"] = 22 + static_cast<int>((bits >> 4) % 45);
    p["gender"] = kGenders[(bits >> 12) % kGenders.size()];
    std::string experience;
    for (std::size_t c = 0; c < comments.size() && c < 3; ++c) {
      if (!experience.empty()) experience += " ";
      experience += shorten(text_of(comments[c]), 200);
    }
    const auto words = keywords(experience);
    p["identity"] = "experienced community member" +
                    (words.empty() ? std::string() : " who knows about " + words[0]);
    p["background"] = experience.empty() ? "Shares practical experience with other members."
                                         : experience;
    out.push_back(p);
  }
  return {{"personas", out}};
}

json fill_grounded_answer(const json& b) {
  std::string answer;
  const json provider = b.value("provider", json());
  if (provider.is_object()) answer += "Speaking as " + str_or(provider, "name") + ": ";
  const json texts = b.value("texts", json::array());
  if (texts.empty()) {
    answer += "I could not find community discussion that speaks to \"" +
              shorten(str_or(b, "query"), 120) + "\". In general, check official sources first.";
  } else {
    answer += "Community members mention ";
    for (std::size_t i = 0; i < texts.size() && i < 3; ++i) {
      if (i) answer += "; ";
      answer += "\"" + shorten(text_of(texts[i]), 140) + "\"";
    }
    answer += ".";
  }
  return {{"answer", answer}};
}

json fill_genai_answer(const json& b) {
  std::string answer;
  const json provider = b.value("provider", json());
  if (provider.is_object()) answer += "From the perspective of " + str_or(provider, "name") + ": ";
  answer += "A general answer to \"" + shorten(str_or(b, "query"), 120) +
            "\" is to compare options against your priorities and plan ahead.";
  return {{"answer", answer}};
}

json fill_recommended_questions(const json& b) {
  json out = json::array();
  const std::string query = shorten(str_or(b, "query"), 80);
  for (const auto& s : b.value("strategies", json::array())) {
    const std::string strategy = str_or(s, "strategy", "history");
    const std::string title = str_or(s.value("factor", json::object()), "title");
    std::string text;
    if (strategy == "history") {
      text = "Could you go deeper on \"" + query + "\"?";
    } else if (strategy == "random_factor") {
      text = "How does " + lower(title) + " change your advice?";
    } else {
      text = "What should I know about " + lower(title) + "?";
    }
    out.push_back({{"strategy", strategy}, {"text", text}});
  }
  return {{"questions", out}};
}

json fill_selection_summarize(const json& b) {
  const std::string text = str_or(b, "text");
  return {{"summary", text.empty() ? std::string("(empty selection)") : shorten(text, 160)}};
}

json fill_factor_attribution(const json& b) {
  const json factors = b.value("factors", json::array());
  json out = json::array();
  for (const auto& seg : b.value("segments", json::array())) {
    const std::string text = lower(text_of(seg));
    json ids = json::array();
    for (const auto& f : factors) {
      for (const auto& w : keywords(str_or(f, "title"))) {
        if (text.find(w) != std::string::npos) {
          ids.push_back(str_or(f, "id"));
          break;
        }
      }
    }
    out.push_back({{"ref", seg.at("ref")}, {"factor_ids", ids}});
  }
  return {{"attributions", out}};
}

}  // namespace

bool json_subset(const json& pattern, const json& value) {
  if (pattern.is_object()) {
    if (!value.is_object()) return false;
    for (const auto& [k, v] : pattern.items()) {
      if (!value.contains(k) || !json_subset(v, value[k])) return false;
    }
    return true;
  }
  return pattern == value;
}

json mock_fill(const std::string& t, const std::string& digest, const json& b) {
  namespace tp = templates;
  if (t == tp::kFactorDecompose) return fill_factor_decompose(digest, b);
  if (t == tp::kFactorQueries) return fill_factor_queries(b);
  if (t == tp::kSeekerPersonas) return fill_seeker_personas(digest, b);
  if (t == tp::kPersonaMergeRefine) return fill_merge_refine(b);
  if (t == tp::kSituationGenerate) return fill_situation(digest, b);
  if (t == tp::kSeekerQueries) return fill_seeker_queries(b);
  if (t == tp::kCommentGroupAdjust) return fill_comment_group_adjust(b);
  if (t == tp::kProviderPersonas) return fill_provider_personas(digest, b);
  if (t == tp::kGroundedAnswer) return fill_grounded_answer(b);
  if (t == tp::kGenaiAnswer) return fill_genai_answer(b);
  if (t == tp::kRecommendedQuestions) return fill_recommended_questions(b);
  if (t == tp::kSelectionSummarize) return fill_selection_summarize(b);
  if (t == tp::kFactorAttribution) return fill_factor_attribution(b);
  throw std::invalid_argument("mock provider: unknown template " + t);
}

MockLlmProvider::MockLlmProvider(std::vector<LlmFixture> fixtures)
    : fixtures_(std::move(fixtures)) {}

std::vector<LlmFixture> MockLlmProvider::load_fixtures(const fs::path& dir) {
  std::vector<LlmFixture> out;
  if (!fs::exists(dir)) return out;
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    json j = json::parse(read_file(f), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("template_id") ||
        !j.contains("response")) {
      throw std::invalid_argument("malformed LLM fixture: " + f.string());
    }
    LlmFixture fx;
    fx.template_id = j["template_id"];
    if (j.contains("digest")) fx.digest = j["digest"].get<std::string>();
    fx.match = j.value("match", json());
    fx.response = j["response"];
    fx.source = f.string();
    if (!fx.digest && fx.match.is_null()) {
      throw std::invalid_argument("LLM fixture needs digest or match: " + f.string());
    }
    out.push_back(std::move(fx));
  }
  return out;
}

void MockLlmProvider::record_misses_to(fs::path dir) { record_dir_ = std::move(dir); }

const LlmFixture* MockLlmProvider::lookup(const LlmRequest& r) const {
  for (const auto& f : fixtures_) {
    if (f.template_id == r.template_id && f.digest && *f.digest == r.digest) return &f;
  }
  for (const auto& f : fixtures_) {
    if (f.template_id == r.template_id && !f.digest && json_subset(f.match, r.bindings)) {
      return &f;
    }
  }
  return nullptr;
}

std::string MockLlmProvider::complete(const LlmRequest& r) {
  if (const LlmFixture* f = lookup(r)) {
    std::lock_guard lock(mu_);
    ++fixture_hits_;
    return f->response.is_string() ? f->response.get<std::string>() : f->response.dump();
  }
  json reply = mock_fill(r.template_id, r.digest, r.bindings);
  {
    std::lock_guard lock(mu_);
    ++filler_hits_;
  }
  if (record_dir_) {
    fs::create_directories(*record_dir_);
    const json fixture = {{"template_id", r.template_id},
                          {"digest", r.digest},
                          {"bindings", r.bindings},
                          {"response", reply}};
    write_file_atomic(*record_dir_ / (r.template_id + "-" + r.digest.substr(0, 16) + ".json"),
                      fixture.dump(2) + "\n");
  }
  return reply.dump();
}

std::size_t MockLlmProvider::fixture_hits() const {
  std::lock_guard lock(mu_);
  return fixture_hits_;
}

std::size_t MockLlmProvider::filler_hits() const {
  std::lock_guard lock(mu_);
  return filler_hits_;
}

}  // namespace consearch
