#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "index/embedding.hpp"

namespace consearch {

struct Factor {
  std::string id;
  std::string title;
  std::string explanation;
  std::vector<std::string> suggested_queries;
  std::vector<std::string> relevant_post_ids;  // retrieval rank order
  bool focused = false;
  bool grounded = true;  // false when no post was retrieved for the factor
};

struct SituatedFactor {
  std::string factor_id;
  std::string situation;
  bool user_edited = false;
};

struct SeekerPersona {
  std::string id;
  std::string name;
  int age = 0;
  std::string gender;
  std::string identity;
  std::string background;
  std::vector<SituatedFactor> situated_factors;
  std::vector<std::string> source_post_ids;  // sorted
  bool user_edited = false;

  // Attaches `s`, replacing an existing situation for the same factor.
  void attach(SituatedFactor s);
  const SituatedFactor* situation_for(const std::string& factor_id) const;
};

struct ProviderPersona {
  std::string id;
  std::string name;
  int age = 0;
  std::string gender;
  std::string identity;
  std::string background;
  std::vector<std::string> source_comment_ids;  // sorted
  EmbeddingVector background_vector;
};

void to_json(nlohmann::json& j, const Factor& f);
void from_json(const nlohmann::json& j, Factor& f);
void to_json(nlohmann::json& j, const SituatedFactor& s);
void from_json(const nlohmann::json& j, SituatedFactor& s);
void to_json(nlohmann::json& j, const SeekerPersona& p);
void from_json(const nlohmann::json& j, SeekerPersona& p);
void to_json(nlohmann::json& j, const ProviderPersona& p);
void from_json(const nlohmann::json& j, ProviderPersona& p);

// The persona as it is shown to the model: profile fields only, no ids or
// provenance.
nlohmann::json seeker_prompt_view(const SeekerPersona& p);
nlohmann::json provider_prompt_view(const ProviderPersona& p);
nlohmann::json factor_prompt_view(const Factor& f);

}  // namespace consearch
