#include "dialogue/dialogue.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <stdexcept>

#include "common/errors.hpp"
#include "llm/templates.hpp"

namespace consearch {

using nlohmann::json;

namespace {

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

json history_view(const std::vector<ChatMessage>& messages) {
  json out = json::array();
  for (const auto& m : messages) out.push_back({{"role", m.role}, {"text", m.text}});
  return out;
}

const Factor* find_factor(const std::vector<Factor>& factors, const std::string& id) {
  for (const auto& f : factors) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

}  // namespace

std::size_t count_chars(const std::string& text) {
  std::size_t n = 0;
  for (unsigned char c : text) n += (c & 0xC0) != 0x80;
  return n;
}

std::string truncate_chars(const std::string& text, std::size_t max_chars) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) {
      if (seen == max_chars) return text.substr(0, i);
      ++seen;
    }
  }
  return text;
}

std::map<std::string, std::uint64_t> attribute_factors(const std::vector<const Segment*>& grounding,
                                                       const std::vector<Factor>& factors,
                                                       const PipelineContext& ctx) {
  if (factors.empty()) throw std::invalid_argument("attribute_factors needs factors");
  std::map<std::string, std::uint64_t> counts;
  std::set<std::string> ids;
  json views = json::array();
  for (const auto& f : factors) {
    counts[f.id] = 0;
    ids.insert(f.id);
    views.push_back(factor_prompt_view(f));
  }
  if (grounding.empty()) return counts;

  json segments = json::array();
  for (std::size_t i = 0; i < grounding.size(); ++i) {
    segments.push_back({{"ref", i}, {"text", grounding[i]->text}});
  }
  const std::size_t n = grounding.size();
  json out;
  try {
    out = ctx.gateway.complete_structured(
        templates::kFactorAttribution, {{"factors", views}, {"segments", segments}},
        [&](const json& j) -> std::optional<std::string> {
          for (const auto& a : j.at("attributions")) {
            if (a.at("ref").get<std::size_t>() >= n) return "ref " + a["ref"].dump() + " out of range";
            for (const auto& fid : a.at("factor_ids")) {
              if (!ids.count(fid.get<std::string>())) return "unknown factor id " + fid.dump();
            }
          }
          return std::nullopt;
        });
  } catch (const PipelineError&) {
    return counts;
  } catch (const ProviderError&) {
    return counts;
  }
  // A segment counts at most once per factor, however often it is listed.
  std::set<std::pair<std::size_t, std::string>> seen;
  for (const auto& a : out.at("attributions")) {
    const auto ref = a.at("ref").get<std::size_t>();
    for (const auto& fid : a.at("factor_ids")) {
      if (seen.emplace(ref, fid.get<std::string>()).second) ++counts[fid.get<std::string>()];
    }
  }
  return counts;
}

std::vector<RecommendedQuestion> recommend_questions(
    const SeekerPersona* seeker, const std::vector<ChatMessage>& history, const std::string& query,
    const std::map<std::string, std::uint64_t>& attribution, const std::vector<Factor>& factors,
    std::uint64_t rng_seed, const PipelineContext& ctx) {
  std::vector<const Factor*> pool;
  if (seeker) {
    for (const auto& sf : seeker->situated_factors) {
      if (const Factor* f = find_factor(factors, sf.factor_id)) pool.push_back(f);
    }
  }
  if (pool.empty()) {
    for (const auto& f : factors) pool.push_back(&f);
  }

  json random_factor = nullptr;
  json underexplored = nullptr;
  if (!pool.empty()) {
    std::mt19937_64 rng(rng_seed);
    random_factor = factor_prompt_view(*pool[rng() % pool.size()]);
    const Factor* least = nullptr;
    std::uint64_t least_count = 0;
    for (const Factor* f : pool) {
      const auto it = attribution.find(f->id);
      const std::uint64_t c = it == attribution.end() ? 0 : it->second;
      if (!least || c < least_count || (c == least_count && f->id < least->id)) {
        least = f;
        least_count = c;
      }
    }
    underexplored = factor_prompt_view(*least);
  }

  const json strategies = json::array(
      {{{"strategy", "history"}},
       {{"strategy", "random_factor"}, {"factor", random_factor}},
       {{"strategy", "underexplored_factor"}, {"factor", underexplored}}});
  const json out = ctx.gateway.complete_structured(
      templates::kRecommendedQuestions,
      {{"query", query},
       {"history", history_view(history)},
       {"seeker", seeker ? seeker_prompt_view(*seeker) : json(nullptr)},
       {"strategies", strategies}},
      [](const json& j) -> std::optional<std::string> {
        std::set<std::string> strategies;
        std::set<std::string> texts;
        for (const auto& q : j.at("questions")) {
          strategies.insert(q.at("strategy").get<std::string>());
          if (!texts.insert(q.at("text").get<std::string>()).second) {
            return "recommended questions must be distinct";
          }
        }
        if (strategies.size() != 3) return "each strategy must be used exactly once";
        return std::nullopt;
      });

  std::vector<RecommendedQuestion> questions;
  for (const char* s : {"history", "random_factor", "underexplored_factor"}) {
    for (const auto& q : out.at("questions")) {
      if (q.at("strategy") == s) questions.push_back({q.at("text").get<std::string>(), s});
    }
  }
  return questions;
}

AgentResponse answer(const TurnInput& turn, const PipelineContext& ctx, const DialogueConfig& cfg) {
  if (blank(turn.query)) throw std::invalid_argument("query must not be empty");
  switch (turn.mode) {
    case Mode::kBaseline:
      if (turn.seeker || turn.provider) {
        throw std::invalid_argument("baseline mode takes no personas");
      }
      break;
    case Mode::kSeekerOnly:
      if (!turn.seeker || turn.provider) {
        throw std::invalid_argument("seeker_only mode takes a seeker and no provider");
      }
      break;
    case Mode::kFull:
      if (!turn.seeker || !turn.provider) {
        throw std::invalid_argument("full mode needs a seeker and a provider");
      }
      break;
  }
  const SeekerPersona* seeker = turn.seeker;
  const ProviderPersona* provider = turn.provider;

  auto hits = retrieve(ctx.index, turn.query, ctx.retrieval.k_response, std::nullopt, ctx.embedder);
  if (provider) {
    std::erase_if(hits, [&](const ScoredSegment& h) {
      return cosine(provider->background_vector.values(), ctx.index.vector(h.index)) <
             ctx.retrieval.provider_sim_floor;
    });
  }

  AgentResponse response;
  std::vector<const Segment*> grounding;
  json texts = json::array();
  for (const auto& h : hits) {
    grounding.push_back(h.segment);
    texts.push_back({{"ref", texts.size()}, {"text", h.segment->text}});
    response.references.push_back({h.segment->id, std::string(to_string(h.segment->source.kind)),
                                   h.segment->source.id, h.score});
  }
  response.no_community_grounding = grounding.empty();

  // Verbatim window plus a summary of anything older.
  const auto& history = turn.history;
  const std::size_t window = std::min(history.size(), cfg.history_window);
  const std::vector<ChatMessage> recent(history.end() - static_cast<std::ptrdiff_t>(window),
                                        history.end());
  json history_summary = nullptr;
  if (history.size() > window) {
    std::string older;
    for (std::size_t i = 0; i + window < history.size(); ++i) {
      older += history[i].role + ": " + history[i].text + "\n";
    }
    history_summary = summarize_selection(older, ctx, cfg).summary;
  }

  const json seeker_view = seeker ? seeker_prompt_view(*seeker) : json(nullptr);
  const json provider_view = provider ? provider_prompt_view(*provider) : json(nullptr);
  const json grounded = ctx.gateway.complete_structured(
      templates::kGroundedAnswer, {{"query", turn.query},
                                   {"history_summary", history_summary},
                                   {"history", history_view(recent)},
                                   {"texts", texts},
                                   {"seeker", seeker_view},
                                   {"provider", provider_view}});
  if (turn.mode == Mode::kBaseline) {
    response.genai_answer = grounded.at("answer");
  } else {
    response.persona_answer = grounded.at("answer").get<std::string>();
    const json genai = ctx.gateway.complete_structured(
        templates::kGenaiAnswer,
        {{"query", turn.query}, {"history", history_view(recent)}, {"provider", provider_view}});
    response.genai_answer = genai.at("answer");
  }

  if (!turn.factors.empty()) {
    response.factor_counts = attribute_factors(grounding, turn.factors, ctx);
  }
  response.recommended_questions = recommend_questions(
      seeker, recent, turn.query, response.factor_counts, turn.factors, turn.rng_seed, ctx);
  return response;
}

SelectionSummary summarize_selection(const std::string& selected_text, const PipelineContext& ctx,
                                     const DialogueConfig& cfg) {
  if (blank(selected_text)) throw std::invalid_argument("selection must not be empty");
  SelectionSummary out;
  out.input_chars = count_chars(selected_text);
  std::string text = selected_text;
  if (out.input_chars > cfg.max_selection_chars) {
    text = truncate_chars(selected_text, cfg.max_selection_chars);
    out.truncated = true;
  }
  out.summary = ctx.gateway.complete_structured(templates::kSelectionSummarize, {{"text", text}})
                    .at("summary");
  return out;
}

}  // namespace consearch
