#include "persona/types.hpp"

namespace consearch {

using nlohmann::json;

void SeekerPersona::attach(SituatedFactor s) {
  for (auto& existing : situated_factors) {
    if (existing.factor_id == s.factor_id) {
      existing = std::move(s);
      return;
    }
  }
  situated_factors.push_back(std::move(s));
}

const SituatedFactor* SeekerPersona::situation_for(const std::string& factor_id) const {
  for (const auto& s : situated_factors) {
    if (s.factor_id == factor_id) return &s;
  }
  return nullptr;
}

void to_json(json& j, const Factor& f) {
  j = json{{"id", f.id},
           {"title", f.title},
           {"explanation", f.explanation},
           {"suggested_queries", f.suggested_queries},
           {"relevant_post_ids", f.relevant_post_ids},
           {"focused", f.focused},
           {"grounded", f.grounded}};
}

void from_json(const json& j, Factor& f) {
  j.at("id").get_to(f.id);
  j.at("title").get_to(f.title);
  j.at("explanation").get_to(f.explanation);
  j.at("suggested_queries").get_to(f.suggested_queries);
  j.at("relevant_post_ids").get_to(f.relevant_post_ids);
  j.at("focused").get_to(f.focused);
  f.grounded = j.value("grounded", true);
}

void to_json(json& j, const SituatedFactor& s) {
  j = json{{"factor_id", s.factor_id}, {"situation", s.situation}, {"user_edited", s.user_edited}};
}

void from_json(const json& j, SituatedFactor& s) {
  j.at("factor_id").get_to(s.factor_id);
  j.at("situation").get_to(s.situation);
  s.user_edited = j.value("user_edited", false);
}

void to_json(json& j, const SeekerPersona& p) {
  j = json{{"id", p.id},
           {"name", p.name},
           {"age", p.age},
           {"gender", p.gender},
           {"identity", p.identity},
           {"background", p.background},
           {"situated_factors", p.situated_factors},
           {"source_post_ids", p.source_post_ids},
           {"user_edited", p.user_edited}};
}

void from_json(const json& j, SeekerPersona& p) {
  j.at("id").get_to(p.id);
  j.at("name").get_to(p.name);
  j.at("age").get_to(p.age);
  j.at("gender").get_to(p.gender);
  j.at("identity").get_to(p.identity);
  j.at("background").get_to(p.background);
  j.at("situated_factors").get_to(p.situated_factors);
  j.at("source_post_ids").get_to(p.source_post_ids);
  p.user_edited = j.value("user_edited", false);
}

void to_json(json& j, const ProviderPersona& p) {
  j = json{{"id", p.id},
           {"name", p.name},
           {"age", p.age},
           {"gender", p.gender},
           {"identity", p.identity},
           {"background", p.background},
           {"source_comment_ids", p.source_comment_ids},
           {"background_vector", p.background_vector.raw()}};
}

void from_json(const json& j, ProviderPersona& p) {
  j.at("id").get_to(p.id);
  j.at("name").get_to(p.name);
  j.at("age").get_to(p.age);
  j.at("gender").get_to(p.gender);
  j.at("identity").get_to(p.identity);
  j.at("background").get_to(p.background);
  j.at("source_comment_ids").get_to(p.source_comment_ids);
  p.background_vector = EmbeddingVector(j.at("background_vector").get<std::vector<float>>());
}

json seeker_prompt_view(const SeekerPersona& p) {
  json situations = json::array();
  for (const auto& s : p.situated_factors) {
    situations.push_back({{"factor_id", s.factor_id}, {"situation", s.situation}});
  }
  return json{{"name", p.name},         {"age", p.age},
              {"gender", p.gender},     {"identity", p.identity},
              {"background", p.background}, {"situations", situations}};
}

json provider_prompt_view(const ProviderPersona& p) {
  return json{{"name", p.name},
              {"age", p.age},
              {"gender", p.gender},
              {"identity", p.identity},
              {"background", p.background}};
}

json factor_prompt_view(const Factor& f) {
  return json{{"id", f.id}, {"title", f.title}, {"explanation", f.explanation}};
}

}  // namespace consearch
