#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dialogue/types.hpp"
#include "persona/pipeline.hpp"

namespace consearch {

struct DialogueConfig {
  std::size_t history_window = 6;  // messages passed verbatim; older ones are summarized
  std::size_t max_selection_chars = 4000;
};

struct TurnInput {
  std::string query;
  Mode mode = Mode::kFull;
  const SeekerPersona* seeker = nullptr;
  const ProviderPersona* provider = nullptr;
  std::vector<ChatMessage> history;  // earlier messages of this chat
  std::vector<Factor> factors;       // session factors
  std::uint64_t rng_seed = 0;
};

// One agent turn: retrieval, the background-similarity filter (full mode),
// persona and genAI answers, references, factor attribution and three
// recommended questions. Baseline takes no personas, seeker_only exactly a
// seeker, full both; anything else, or a blank query, throws
// std::invalid_argument.
AgentResponse answer(const TurnInput& turn, const PipelineContext& ctx,
                     const DialogueConfig& cfg = {});

// Three questions tagged history, random_factor and underexplored_factor.
// Factor strategies draw from the seeker's situated factors, or from the
// session factors when there is no seeker.
std::vector<RecommendedQuestion> recommend_questions(
    const SeekerPersona* seeker, const std::vector<ChatMessage>& history, const std::string& query,
    const std::map<std::string, std::uint64_t>& attribution, const std::vector<Factor>& factors,
    std::uint64_t rng_seed, const PipelineContext& ctx);

// Number of grounding segments the model attributes to each factor. Every
// factor id is present. Model failures yield all zeros.
std::map<std::string, std::uint64_t> attribute_factors(const std::vector<const Segment*>& grounding,
                                                       const std::vector<Factor>& factors,
                                                       const PipelineContext& ctx);

struct SelectionSummary {
  std::string summary;
  bool truncated = false;
  std::size_t input_chars = 0;  // characters (code points) received
};

// Throws std::invalid_argument on a blank selection.
SelectionSummary summarize_selection(const std::string& selected_text, const PipelineContext& ctx,
                                     const DialogueConfig& cfg = {});

// First `max_chars` UTF-8 code points of `text`.
std::string truncate_chars(const std::string& text, std::size_t max_chars);
std::size_t count_chars(const std::string& text);

}  // namespace consearch
