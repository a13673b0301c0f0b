#include "dialogue/types.hpp"

#include <cmath>
#include <stdexcept>

namespace consearch {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::kBaseline: return "baseline";
    case Mode::kSeekerOnly: return "seeker_only";
    case Mode::kFull: return "full";
  }
  return "full";
}

Mode mode_from_string(std::string_view s) {
  if (s == "baseline") return Mode::kBaseline;
  if (s == "seeker_only") return Mode::kSeekerOnly;
  if (s == "full") return Mode::kFull;
  throw std::invalid_argument("unknown mode '" + std::string(s) +
                              "' (expected baseline, seeker_only or full)");
}

void FactorMapState::fold(const std::map<std::string, std::uint64_t>& delta) {
  for (const auto& [fid, n] : delta) counts[fid] += n;
}

double FactorMapState::node_size(std::uint64_t count) {
  return 10.0 + 6.0 * std::sqrt(static_cast<double>(count));
}

void to_json(json& j, const Reference& r) {
  j = json{{"segment_id", r.segment_id},
           {"source_kind", r.source_kind},
           {"source_id", r.source_id},
           {"score", r.score}};
}

void from_json(const json& j, Reference& r) {
  j.at("segment_id").get_to(r.segment_id);
  j.at("source_kind").get_to(r.source_kind);
  j.at("source_id").get_to(r.source_id);
  j.at("score").get_to(r.score);
}

void to_json(json& j, const RecommendedQuestion& q) {
  j = json{{"text", q.text}, {"strategy", q.strategy}};
}

void from_json(const json& j, RecommendedQuestion& q) {
  j.at("text").get_to(q.text);
  j.at("strategy").get_to(q.strategy);
}

void to_json(json& j, const AgentResponse& r) {
  j = json{{"persona_answer", r.persona_answer ? json(*r.persona_answer) : json(nullptr)},
           {"genai_answer", r.genai_answer},
           {"references", r.references},
           {"recommended_questions", r.recommended_questions},
           {"metadata",
            {{"no_community_grounding", r.no_community_grounding},
             {"factor_counts", r.factor_counts}}}};
}

void from_json(const json& j, AgentResponse& r) {
  const auto& pa = j.at("persona_answer");
  r.persona_answer = pa.is_null() ? std::nullopt : std::optional<std::string>(pa.get<std::string>());
  j.at("genai_answer").get_to(r.genai_answer);
  j.at("references").get_to(r.references);
  j.at("recommended_questions").get_to(r.recommended_questions);
  const auto& meta = j.at("metadata");
  meta.at("no_community_grounding").get_to(r.no_community_grounding);
  meta.at("factor_counts").get_to(r.factor_counts);
}

void to_json(json& j, const ChatMessage& m) {
  j = json{{"role", m.role}, {"text", m.text}, {"timestamp", m.timestamp}, {"origin", m.origin}};
  if (m.response) j["response"] = *m.response;
}

void from_json(const json& j, ChatMessage& m) {
  j.at("role").get_to(m.role);
  j.at("text").get_to(m.text);
  j.at("timestamp").get_to(m.timestamp);
  m.origin = j.value("origin", "");
  m.response.reset();
  if (j.contains("response")) m.response = j["response"].get<AgentResponse>();
}

void to_json(json& j, const FactorMapState& s) {
  json sizes = json::object();
  for (const auto& [fid, n] : s.counts) sizes[fid] = FactorMapState::node_size(n);
  j = json{{"counts", s.counts}, {"node_sizes", sizes}};
}

void from_json(const json& j, FactorMapState& s) {
  j.at("counts").get_to(s.counts);
}

}  // namespace consearch
