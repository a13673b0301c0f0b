#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace consearch {

struct PromptTemplate {
  std::string id;
  int version = 1;  // bump when the body changes; part of the binding digest
  std::string body;  // {{name}} placeholders
  nlohmann::json output_schema;
  // When set, the top-level array `list_field` is cut to this many items
  // before validation.
  std::optional<std::size_t> max_output_items;
  std::string list_field;
};

namespace templates {
inline constexpr std::string_view kFactorDecompose = "factor_decompose";
inline constexpr std::string_view kFactorQueries = "factor_queries";
inline constexpr std::string_view kSeekerPersonas = "seeker_personas";
inline constexpr std::string_view kPersonaMergeRefine = "persona_merge_refine";
inline constexpr std::string_view kSituationGenerate = "situation_generate";
inline constexpr std::string_view kSeekerQueries = "seeker_queries";
inline constexpr std::string_view kCommentGroupAdjust = "comment_group_adjust";
inline constexpr std::string_view kProviderPersonas = "provider_personas";
inline constexpr std::string_view kGroundedAnswer = "grounded_answer";
inline constexpr std::string_view kGenaiAnswer = "genai_answer";
inline constexpr std::string_view kRecommendedQuestions = "recommended_questions";
inline constexpr std::string_view kSelectionSummarize = "selection_summarize";
inline constexpr std::string_view kFactorAttribution = "factor_attribution";
}  // namespace templates

const std::vector<PromptTemplate>& template_catalog();

// Throws std::invalid_argument for an unknown id.
const PromptTemplate& find_template(std::string_view id);

// Placeholder names in order of first appearance.
std::vector<std::string> placeholders(std::string_view body);

// Substitutes bindings into the body: strings verbatim, null as "(none)",
// anything else as indented JSON. Every placeholder must be bound and every
// binding must be used, otherwise std::invalid_argument.
std::string render(const PromptTemplate& tmpl, const nlohmann::json& bindings);

// sha256 over the canonical (sorted-key, compact) JSON of
// {"bindings": ..., "template_id": ..., "template_version": ...}.
std::string binding_digest(const PromptTemplate& tmpl, const nlohmann::json& bindings);

}  // namespace consearch
