#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace consearch {

// baseline: no personas; seeker_only: seeker persona but no provider
// personas; full: both.
enum class Mode { kBaseline, kSeekerOnly, kFull };

std::string_view to_string(Mode mode);
// Throws std::invalid_argument for an unknown name.
Mode mode_from_string(std::string_view s);

struct Reference {
  std::string segment_id;
  std::string source_kind;  // "post" | "comment"
  std::string source_id;
  double score = 0.0;  // query-to-segment cosine
};

struct RecommendedQuestion {
  std::string text;
  std::string strategy;  // history | random_factor | underexplored_factor
};

struct AgentResponse {
  std::optional<std::string> persona_answer;  // absent in baseline mode
  std::string genai_answer;
  std::vector<Reference> references;
  std::vector<RecommendedQuestion> recommended_questions;
  bool no_community_grounding = false;
  std::map<std::string, std::uint64_t> factor_counts;  // this turn's attribution
};

struct ChatMessage {
  std::string role;  // user | agent
  std::string text;
  std::int64_t timestamp = 0;  // ms since the Unix epoch
  std::string origin;          // user messages: typed | suggested | ...
  std::optional<AgentResponse> response;  // agent messages only
};

// Per-factor cumulative count of grounding segments attributed to it.
struct FactorMapState {
  std::map<std::string, std::uint64_t> counts;

  void fold(const std::map<std::string, std::uint64_t>& delta);
  static double node_size(std::uint64_t count);
};

void to_json(nlohmann::json& j, const Reference& r);
void from_json(const nlohmann::json& j, Reference& r);
void to_json(nlohmann::json& j, const RecommendedQuestion& q);
void from_json(const nlohmann::json& j, RecommendedQuestion& q);
void to_json(nlohmann::json& j, const AgentResponse& r);
void from_json(const nlohmann::json& j, AgentResponse& r);
void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);
void to_json(nlohmann::json& j, const FactorMapState& s);
void from_json(const nlohmann::json& j, FactorMapState& s);

}  // namespace consearch
