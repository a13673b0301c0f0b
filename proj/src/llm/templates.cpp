#include "llm/templates.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

#include "common/hash.hpp"

namespace consearch {

using nlohmann::json;

namespace {

const json kPersonaCore = R"({
  "name": {"type": "string", "minLength": 1},
  "age": {"type": "integer", "minimum": 0, "maximum": 120},
  "gender": {"type": "string", "minLength": 1},
  "identity": {"type": "string", "minLength": 1},
  "background": {"type": "string", "minLength": 1}
})"_json;

const json kSituationList = R"({
  "type": "array", "minItems": 1,
  "items": {"type": "object",
            "properties": {"factor_id": {"type": "string", "minLength": 1},
                           "situation": {"type": "string", "minLength": 1}},
            "required": ["factor_id", "situation"]}
})"_json;

json persona_schema(bool with_situations, bool with_merge) {
  json props = kPersonaCore;
  json required = {"name", "age", "gender", "identity", "background"};
  if (with_situations) {
    props["situations"] = kSituationList;
  }
  if (with_merge) {
    props["merged_from"] = R"({"type": "array", "minItems": 1,
                                "items": {"type": "integer", "minimum": 0}})"_json;
    required.push_back("merged_from");
  }
  if (with_situations && !with_merge) required.push_back("situations");
  return json{{"type", "object"}, {"properties", props}, {"required", required}};
}

json object_with(const std::string& field, json schema) {
  return json{{"type", "object"},
              {"properties", json{{field, std::move(schema)}}},
              {"required", json::array({field})}};
}

const json kString = R"({"type": "string", "minLength": 1})"_json;

std::vector<PromptTemplate> build_catalog() {
  std::vector<PromptTemplate> c;

  c.push_back({std::string(templates::kFactorDecompose), 1,
               R"(A member of an online community typed this search query:

{{query}}

Decompose the query into the distinct factors a person would weigh when looking for an
answer. Give each factor a short title (at most five words) and a one to three sentence
explanation of how it shapes the answer. Return between 4 and 8 factors.
Output: {"factors": [{"title": ..., "explanation": ...}]})",
               object_with("factors",
                           json{{"type", "array"},
                                {"minItems", 4},
                                {"items", json{{"type", "object"},
                                               {"properties", {{"title", kString},
                                                               {"explanation", kString}}},
                                               {"required", {"title", "explanation"}}}}}),
               8, "factors"});

  c.push_back({std::string(templates::kFactorQueries), 1,
               R"(Original search query: {{query}}

Factor: {{factor}}

Community posts retrieved for this factor (may be empty):
{{posts}}

Grounded in the posts above when available ({{grounded}}), write short follow-up search
queries a community member could ask to explore this factor.
Output: {"queries": [string, ...]})",
               object_with("queries", json{{"type", "array"}, {"minItems", 1}, {"items", kString}}),
               3, "queries"});

  c.push_back({std::string(templates::kSeekerPersonas), 1,
               R"(The user searched an online community for: {{query}}

Factors of the query:
{{factors}}

Representative posts written by information seekers in the community:
{{posts}}

Write {{count}} persona(s) of information seekers who could have written posts like these.
Each persona has a name, age, gender, a short identity label, a background paragraph, and
situations: for one or more of the factors above (use the factor "id"), one to three
sentences about what the persona thinks or needs regarding that factor. Personas are
fictional; never copy user names from the posts.
Output: {"personas": [{"name", "age", "gender", "identity", "background", "situations": [{"factor_id", "situation"}]}]})",
               object_with("personas", json{{"type", "array"},
                                            {"minItems", 1},
                                            {"items", persona_schema(true, false)}}),
               std::nullopt, ""});

  c.push_back({std::string(templates::kPersonaMergeRefine), 1,
               R"(Candidate {{kind}} personas for the query "{{query}}":
{{candidates}}

Factors (seeker personas only):
{{factors}}

Merge candidates that are near-duplicates and refine the rest so every persona is clearly
distinct from the others. Return between {{min_count}} and {{max_count}} personas. For each
output persona list in "merged_from" the indices of the candidates it is based on. Keep
the "situations" of seeker personas, referring to factors by id; provider personas have no
situations.
Output: {"personas": [{"merged_from": [int], "name", "age", "gender", "identity", "background", "situations"?}]})",
               object_with("personas", json{{"type", "array"},
                                            {"minItems", 1},
                                            {"items", persona_schema(true, true)}}),
               std::nullopt, ""});

  c.push_back({std::string(templates::kSituationGenerate), 1,
               R"(Seeker persona:
{{persona}}

The persona is now focused on this factor of the query "{{query}}":
{{factor}}

Write one to three sentences describing this persona's situation regarding the factor,
consistent with the persona's background and other situations.
Output: {"situation": string})",
               object_with("situation", kString), std::nullopt, ""});

  c.push_back({std::string(templates::kSeekerQueries), 1,
               R"(Original search query: {{query}}

Seeker persona (background, focused factors and situations):
{{persona}}

Community posts retrieved for the persona's situations:
{{posts}}

Suggest exactly {{count}} distinct queries this persona would personally ask the
community, phrased in the persona's own voice and reflecting the situations.
Output: {"queries": [string x {{count}}]})",
               object_with("queries", json{{"type", "array"},
                                           {"minItems", 5},
                                           {"maxItems", 5},
                                           {"items", kString}}),
               std::nullopt, ""});

  c.push_back({std::string(templates::kCommentGroupAdjust), 1,
               R"(A seeker persona is asking these questions:
{{queries}}

Seeker persona:
{{seeker}}

Community comments, grouped by similarity (each comment has a numeric "ref"):
{{groups}}

1) Drop groups that are unrelated or unhelpful for answering the questions.
2) Split the remaining groups into subgroups so that each subgroup reflects the background
   experience of one kind of community member.
Return the subgroups as lists of comment refs with a short theme.
Output: {"groups": [{"refs": [int], "theme": string}]})",
               object_with("groups",
                           json{{"type", "array"},
                                {"items", json{{"type", "object"},
                                               {"properties",
                                                {{"refs", json{{"type", "array"},
                                                               {"minItems", 1},
                                                               {"items", {{"type", "integer"},
                                                                          {"minimum", 0}}}}},
                                                 {"theme", kString}}},
                                               {"required", {"refs", "theme"}}}}}),
               std::nullopt, ""});

  c.push_back({std::string(templates::kProviderPersonas), 1,
               R"(These community comments were written by members who answer questions about:
{{seeker_queries}}

Comments:
{{comments}}

Write {{count}} persona(s) of an information provider whose experience is reflected in
these comments: name, age, gender, a short identity label and a background paragraph.
Personas are fictional; never copy user names from the comments.
Output: {"personas": [{"name", "age", "gender", "identity", "background"}]})",
               object_with("personas", json{{"type", "array"},
                                            {"minItems", 1},
                                            {"items", persona_schema(false, false)}}),
               std::nullopt, ""});

  c.push_back({std::string(templates::kGroundedAnswer), 1,
               R"(Answer the user's query using the community texts below.

Query: {{query}}

Earlier conversation (summary, then most recent messages):
{{history_summary}}
{{history}}

Community texts (cite by "ref"):
{{texts}}

Person asking (seeker persona):
{{seeker}}

Answer as this community member (provider persona):
{{provider}}

When a provider persona is given, answer in that persona's voice with their opinions and
reasons. Tailor the answer to the seeker persona's situations when given. Use only the
community texts for factual claims; say so when they do not cover the query.
Output: {"answer": string})",
               object_with("answer", kString), std::nullopt, ""});

  c.push_back({std::string(templates::kGenaiAnswer), 1,
               R"(Query: {{query}}

Earlier conversation:
{{history}}

Answer from general knowledge (no community texts are provided), in the voice of this
persona when one is given:
{{provider}}
Output: {"answer": string})",
               object_with("answer", kString), std::nullopt, ""});

  c.push_back({std::string(templates::kRecommendedQuestions), 1,
               R"(Current query: {{query}}

Conversation so far:
{{history}}

Seeker persona:
{{seeker}}

Recommend exactly three different follow-up questions, one per strategy below, in order:
{{strategies}}
- "history": build on the conversation history and the current query.
- "random_factor": explore the given factor together with the current query.
- "underexplored_factor": explore the given factor, which the retrieved texts barely cover.
Output: {"questions": [{"strategy": ..., "text": ...} x 3]})",
               object_with(
                   "questions",
                   json{{"type", "array"},
                        {"minItems", 3},
                        {"maxItems", 3},
                        {"items",
                         json{{"type", "object"},
                              {"properties",
                               {{"strategy",
                                 json{{"type", "string"},
                                      {"enum", {"history", "random_factor", "underexplored_factor"}}}},
                                {"text", kString}}},
                              {"required", {"strategy", "text"}}}}}),
               std::nullopt, ""});

  c.push_back({std::string(templates::kSelectionSummarize), 1,
               R"(Summarize the following content from an online community in a few sentences:

{{text}}
Output: {"summary": string})",
               object_with("summary", kString), std::nullopt, ""});

  c.push_back({std::string(templates::kFactorAttribution), 1,
               R"(Factors:
{{factors}}

Retrieved community texts (each with a numeric "ref"):
{{segments}}

For every text, list the ids of the factors it discusses (possibly none).
Output: {"attributions": [{"ref": int, "factor_ids": [string]}]})",
               object_with("attributions",
                           json{{"type", "array"},
                                {"items",
                                 json{{"type", "object"},
                                      {"properties",
                                       {{"ref", {{"type", "integer"}, {"minimum", 0}}},
                                        {"factor_ids", {{"type", "array"}, {"items", kString}}}}},
                                      {"required", {"ref", "factor_ids"}}}}}),
               std::nullopt, ""});
  return c;
}

}  // namespace

const std::vector<PromptTemplate>& template_catalog() {
  static const std::vector<PromptTemplate> catalog = build_catalog();
  return catalog;
}

const PromptTemplate& find_template(std::string_view id) {
  for (const auto& t : template_catalog()) {
    if (t.id == id) return t;
  }
  throw std::invalid_argument("unknown template_id: " + std::string(id));
}

std::vector<std::string> placeholders(std::string_view body) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  while ((pos = body.find("{{", pos)) != std::string_view::npos) {
    const auto end = body.find("}}", pos + 2);
    if (end == std::string_view::npos) break;
    std::string name(body.substr(pos + 2, end - pos - 2));
    if (seen.insert(name).second) out.push_back(name);
    pos = end + 2;
  }
  return out;
}

std::string render(const PromptTemplate& tmpl, const json& bindings) {
  if (!bindings.is_object()) throw std::invalid_argument("bindings must be a JSON object");
  const auto names = placeholders(tmpl.body);
  for (const auto& n : names) {
    if (!bindings.contains(n)) {
      throw std::invalid_argument(tmpl.id + ": placeholder '" + n + "' is not bound");
    }
  }
  for (const auto& [k, v] : bindings.items()) {
    if (std::find(names.begin(), names.end(), k) == names.end()) {
      throw std::invalid_argument(tmpl.id + ": binding '" + k + "' has no placeholder");
    }
  }
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto open = tmpl.body.find("{{", pos);
    if (open == std::string::npos) break;
    const auto close = tmpl.body.find("}}", open + 2);
    out.append(tmpl.body, pos, open - pos);
    const json& v = bindings.at(tmpl.body.substr(open + 2, close - open - 2));
    if (v.is_string()) {
      out += v.get<std::string>();
    } else if (v.is_null()) {
      out += "(none)";
    } else {
      out += v.dump(2);
    }
    pos = close + 2;
  }
  out.append(tmpl.body, pos);
  return out;
}

std::string binding_digest(const PromptTemplate& tmpl, const json& bindings) {
  const json key{{"template_id", tmpl.id},
                 {"template_version", tmpl.version},
                 {"bindings", bindings}};
  return sha256_hex(key.dump());
}

}  // namespace consearch
