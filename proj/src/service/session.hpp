#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dialogue/types.hpp"
#include "persona/types.hpp"

namespace consearch {

inline constexpr const char* kBaseChat = "base";

struct Session {
  std::string id;
  Mode mode = Mode::kFull;
  std::string query;
  std::vector<Factor> factors;
  std::vector<SeekerPersona> seekers;
  std::optional<std::string> selected_seeker_id;
  std::map<std::string, std::vector<std::string>> seeker_queries;  // seeker id -> queries
  std::vector<ProviderPersona> providers;
  std::map<std::string, std::vector<ChatMessage>> chats;  // provider id or "base"
  FactorMapState factor_map;
  std::int64_t created_at = 0;
  std::uint64_t rng_seed = 0;
  std::uint64_t seq = 0;  // events applied so far

  Factor* find_factor(const std::string& id);
  const Factor* find_factor(const std::string& id) const;
  SeekerPersona* find_seeker(const std::string& id);
  const SeekerPersona* find_seeker(const std::string& id) const;
  const ProviderPersona* find_provider(const std::string& id) const;
  const SeekerPersona* selected_seeker() const;
};

void to_json(nlohmann::json& j, const Session& s);
void from_json(const nlohmann::json& j, Session& s);

// Session as returned by the API: provider background vectors are omitted.
nlohmann::json public_view(const Session& s);
nlohmann::json public_view(const ProviderPersona& p);

// Event log entries. Every event carries the outputs it produced so that
// replay never calls a model:
//   created         {session}
//   factor_focused  {factor_id, focused, seeker_id?, situation?}
//   seeker_edited   {seeker}
//   seeker_queries  {seeker_id, queries}
//   providers       {seeker_id, providers}
//   chat_turn       {chat, user, agent}
// plus {"type", "seq", "at"}.
nlohmann::json make_event(const std::string& type, std::uint64_t seq, std::int64_t at,
                          nlohmann::json payload);

// Applies one event. Throws std::invalid_argument when the event does not fit
// the session (wrong sequence number, unknown ids).
void apply_event(Session& s, const nlohmann::json& event);

// Seed for the recommended-question RNG of one chat turn.
std::uint64_t turn_seed(const Session& s, const std::string& chat, std::size_t turn);

}  // namespace consearch
