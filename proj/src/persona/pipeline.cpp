#include "persona/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

#include "common/errors.hpp"
#include "llm/templates.hpp"

namespace consearch {

using nlohmann::json;

namespace {

constexpr std::size_t kPromptPostChars = 600;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string clip(const std::string& s, std::size_t max_bytes) {
  if (s.size() <= max_bytes) return s;
  std::size_t cut = max_bytes;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  return s.substr(0, cut);
}

std::string post_prompt_text(const CommunityCorpus& corpus, const std::string& post_id) {
  const Post* p = corpus.find_post(post_id);
  return p ? clip(p->full_text(), kPromptPostChars) : std::string();
}

std::optional<std::string> check_situations(const json& situations,
                                            const std::set<std::string>& factor_ids) {
  for (const auto& s : situations) {
    const std::string fid = s.at("factor_id");
    if (!factor_ids.count(fid)) return "situation refers to unknown factor_id '" + fid + "'";
  }
  return std::nullopt;
}

std::optional<std::string> check_merged_from(const json& personas, std::size_t candidates) {
  for (const auto& p : personas) {
    for (const auto& i : p.at("merged_from")) {
      if (i.get<std::size_t>() >= candidates) {
        return "merged_from index " + i.dump() + " is out of range (" +
               std::to_string(candidates) + " candidates)";
      }
    }
  }
  return std::nullopt;
}

std::optional<std::string> check_count(const json& list, std::size_t lo, std::size_t hi,
                                       const char* what) {
  if (list.size() < lo || list.size() > hi) {
    return std::string("expected ") +
           (lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi)) +
           " " + what + ", got " + std::to_string(list.size());
  }
  return std::nullopt;
}

std::vector<SituatedFactor> situations_from(const json& list) {
  std::vector<SituatedFactor> out;
  std::set<std::string> seen;
  for (const auto& s : list) {
    std::string fid = s.at("factor_id");
    if (!seen.insert(fid).second) continue;
    out.push_back({std::move(fid), s.at("situation").get<std::string>(), false});
  }
  return out;
}

// Groups for persona prompts: every cluster, plus the noise points when they
// are numerous enough to form a group of their own.
std::vector<std::vector<std::size_t>> persona_groups(const ClusterAssignment& a) {
  auto groups = a.members();
  auto noise = a.noise();
  if (!noise.empty() && noise.size() >= a.params.min_cluster_size) {
    groups.push_back(std::move(noise));
  }
  return groups;
}

void fill_profile(const json& j, std::string& name, int& age, std::string& gender,
                  std::string& identity, std::string& background) {
  name = j.at("name");
  age = j.at("age");
  gender = j.at("gender");
  identity = j.at("identity");
  background = j.at("background");
}

}  // namespace

EmbeddingVector post_vector(const VectorIndex& index, const std::string& post_id) {
  const auto segs = index.segments_of({SourceKind::kPost, post_id});
  if (segs.empty()) return {};
  std::vector<double> acc(index.dim(), 0.0);
  for (auto i : segs) {
    const auto v = index.vector(i);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += v[d];
  }
  std::vector<float> out(acc.size());
  for (std::size_t d = 0; d < acc.size(); ++d) out[d] = static_cast<float>(acc[d] / segs.size());
  return EmbeddingVector(std::move(out)).normalized();
}

std::vector<Factor> decompose_factors(const std::string& query, const PipelineContext& ctx) {
  if (trim(query).empty()) throw std::invalid_argument("query must not be empty");
  const auto& cfg = ctx.persona;

  const json out = ctx.gateway.complete_structured(
      templates::kFactorDecompose, {{"query", query}},
      [&](const json& j) -> std::optional<std::string> {
        const auto& list = j.at("factors");
        if (auto e = check_count(list, cfg.min_factors, SIZE_MAX, "factors")) return e;
        std::set<std::string> titles;
        for (const auto& f : list) {
          std::string t = trim(f.at("title"));
          std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
            return static_cast<char>(std::tolower(c));
          });
          if (!titles.insert(t).second) return "duplicate factor title '" + t + "'";
        }
        return std::nullopt;
      });

  std::vector<Factor> factors;
  for (const auto& f : out.at("factors")) {
    if (factors.size() == cfg.max_factors) break;
    Factor factor;
    factor.id = "f" + std::to_string(factors.size() + 1);
    factor.title = trim(f.at("title"));
    factor.explanation = trim(f.at("explanation"));
    factors.push_back(std::move(factor));
  }

  std::vector<StructuredRequest> requests;
  for (auto& factor : factors) {
    const auto hits = retrieve(ctx.index, factor.title + ": " + factor.explanation,
                               cfg.posts_per_factor, SourceKind::kPost, ctx.embedder);
    json posts = json::array();
    for (const auto& h : hits) {
      const auto& pid = h.segment->source.id;
      if (std::find(factor.relevant_post_ids.begin(), factor.relevant_post_ids.end(), pid) ==
          factor.relevant_post_ids.end()) {
        factor.relevant_post_ids.push_back(pid);
      }
      posts.push_back(h.segment->text);
    }
    factor.grounded = !hits.empty();
    requests.push_back({std::string(templates::kFactorQueries),
                        {{"query", query},
                         {"factor", factor_prompt_view(factor)},
                         {"posts", posts},
                         {"grounded", factor.grounded}},
                        {}});
  }
  const auto replies = ctx.gateway.complete_many(requests);
  for (std::size_t i = 0; i < factors.size(); ++i) {
    for (const auto& q : replies[i].at("queries")) {
      std::string text = trim(q);
      if (!text.empty() && std::find(factors[i].suggested_queries.begin(),
                                     factors[i].suggested_queries.end(),
                                     text) == factors[i].suggested_queries.end()) {
        factors[i].suggested_queries.push_back(std::move(text));
      }
    }
  }
  return factors;
}

std::vector<SeekerPersona> generate_seekers(const std::string& query,
                                            const std::vector<Factor>& factors,
                                            const PipelineContext& ctx, SeekerTrace* trace) {
  if (factors.empty()) throw std::invalid_argument("generate_seekers needs at least one factor");
  const auto& cfg = ctx.persona;

  std::set<std::string> factor_ids;
  json factor_views = json::array();
  for (const auto& f : factors) {
    factor_ids.insert(f.id);
    factor_views.push_back(factor_prompt_view(f));
  }

  std::set<std::string> pool_set;
  for (const auto& f : factors) pool_set.insert(f.relevant_post_ids.begin(), f.relevant_post_ids.end());
  std::vector<std::string> pool;
  std::vector<EmbeddingVector> vectors;
  for (const auto& pid : pool_set) {
    auto v = post_vector(ctx.index, pid);
    if (v.dim() == 0) continue;
    pool.push_back(pid);
    vectors.push_back(std::move(v));
  }

  auto persona_check = [&](std::size_t count) {
    return [&factor_ids, count](const json& j) -> std::optional<std::string> {
      const auto& list = j.at("personas");
      if (auto e = check_count(list, count, count, "personas")) return e;
      for (const auto& p : list) {
        if (auto e = check_situations(p.at("situations"), factor_ids)) return e;
      }
      return std::nullopt;
    };
  };

  std::vector<std::vector<std::size_t>> groups;
  if (pool.size() >= cfg.seeker_clusters.min_cluster_size) {
    groups = persona_groups(hdbscan(vectors, cfg.seeker_clusters));
  }
  if (trace) {
    trace->pool_post_ids = pool;
    trace->degenerate = groups.empty();
  }

  auto make_seeker = [](const json& j, std::size_t n) {
    SeekerPersona p;
    p.id = "seeker-" + std::to_string(n);
    fill_profile(j, p.name, p.age, p.gender, p.identity, p.background);
    return p;
  };

  std::vector<SeekerPersona> seekers;
  if (groups.empty()) {
    json posts = json::array();
    for (const auto& pid : pool) posts.push_back(post_prompt_text(ctx.corpus, pid));
    const json out = ctx.gateway.complete_structured(
        templates::kSeekerPersonas,
        {{"query", query}, {"factors", factor_views}, {"posts", posts}, {"count", cfg.seeker_count}},
        persona_check(cfg.seeker_count));
    for (const auto& j : out.at("personas")) {
      SeekerPersona p = make_seeker(j, seekers.size() + 1);
      p.situated_factors = situations_from(j.at("situations"));
      p.source_post_ids = pool;
      seekers.push_back(std::move(p));
    }
    return seekers;
  }

  std::vector<ClusterItem> items;
  for (std::size_t i = 0; i < pool.size(); ++i) items.push_back({pool[i], vectors[i].values()});

  std::vector<std::vector<std::string>> group_sources;
  std::vector<StructuredRequest> requests;
  for (const auto& g : groups) {
    std::vector<std::string> ids;
    for (auto i : g) ids.push_back(pool[i]);
    auto central = central_members(items, ids, cfg.central_posts);
    json posts = json::array();
    for (const auto& pid : central) posts.push_back(post_prompt_text(ctx.corpus, pid));
    if (trace) trace->central_post_ids.push_back(central);
    std::sort(central.begin(), central.end());
    group_sources.push_back(std::move(central));
    requests.push_back({std::string(templates::kSeekerPersonas),
                        {{"query", query}, {"factors", factor_views}, {"posts", posts}, {"count", 1}},
                        persona_check(1)});
  }
  const auto replies = ctx.gateway.complete_many(requests);

  json candidates = json::array();
  for (const auto& r : replies) candidates.push_back(r.at("personas").at(0));

  const std::size_t n = candidates.size();
  const json merged = ctx.gateway.complete_structured(
      templates::kPersonaMergeRefine,
      {{"kind", "seeker"},
       {"query", query},
       {"min_count", cfg.seeker_count},
       {"max_count", cfg.seeker_count},
       {"candidates", candidates},
       {"factors", factor_views}},
      [&](const json& j) -> std::optional<std::string> {
        const auto& list = j.at("personas");
        if (auto e = check_count(list, cfg.seeker_count, cfg.seeker_count, "personas")) return e;
        if (auto e = check_merged_from(list, n)) return e;
        for (const auto& p : list) {
          if (p.contains("situations")) {
            if (auto e = check_situations(p["situations"], factor_ids)) return e;
          }
        }
        return std::nullopt;
      });

  for (const auto& j : merged.at("personas")) {
    SeekerPersona p = make_seeker(j, seekers.size() + 1);
    std::set<std::string> sources;
    json situations = json::array();
    for (const auto& idx : j.at("merged_from")) {
      const auto c = idx.get<std::size_t>();
      sources.insert(group_sources[c].begin(), group_sources[c].end());
      for (const auto& s : candidates[c].at("situations")) situations.push_back(s);
    }
    p.situated_factors = situations_from(j.contains("situations") ? j["situations"] : situations);
    p.source_post_ids.assign(sources.begin(), sources.end());
    seekers.push_back(std::move(p));
  }
  return seekers;
}

SituatedFactor generate_situation(const SeekerPersona& persona, const Factor& factor,
                                  const std::string& query, const PipelineContext& ctx) {
  const json out = ctx.gateway.complete_structured(
      templates::kSituationGenerate,
      {{"persona", seeker_prompt_view(persona)},
       {"factor", factor_prompt_view(factor)},
       {"query", query}});
  return {factor.id, trim(out.at("situation")), false};
}

std::vector<std::string> suggest_seeker_queries(const SeekerPersona& persona,
                                                const std::string& original_query,
                                                const PipelineContext& ctx) {
  if (persona.situated_factors.empty()) {
    throw std::invalid_argument("persona " + persona.id + " has no situations");
  }
  const auto& cfg = ctx.persona;
  std::set<std::string> seen;
  json posts = json::array();
  for (const auto& s : persona.situated_factors) {
    if (trim(s.situation).empty()) continue;
    for (const auto& h :
         retrieve(ctx.index, s.situation, cfg.posts_per_factor, SourceKind::kPost, ctx.embedder)) {
      if (seen.insert(h.segment->id).second) posts.push_back(h.segment->text);
    }
  }
  const std::size_t count = cfg.seeker_query_count;
  const json out = ctx.gateway.complete_structured(
      templates::kSeekerQueries,
      {{"query", original_query},
       {"persona", seeker_prompt_view(persona)},
       {"posts", posts},
       {"count", count}},
      [count](const json& j) -> std::optional<std::string> {
        const auto& list = j.at("queries");
        if (auto e = check_count(list, count, count, "queries")) return e;
        std::set<std::string> distinct;
        for (const auto& q : list) {
          const std::string t = trim(q);
          if (t.empty()) return "queries must not be blank";
          if (!distinct.insert(t).second) return "duplicate query '" + t + "'";
        }
        return std::nullopt;
      });
  std::vector<std::string> queries;
  for (const auto& q : out.at("queries")) queries.push_back(trim(q));
  return queries;
}

std::vector<ProviderPersona> generate_providers(const SeekerPersona& seeker,
                                                const std::vector<std::string>& seeker_queries,
                                                const PipelineContext& ctx,
                                                ProviderTrace* trace) {
  const auto& cfg = ctx.persona;
  const auto& rc = ctx.retrieval;
  if (seeker_queries.size() != cfg.seeker_query_count) {
    throw std::invalid_argument("generate_providers needs exactly " +
                                std::to_string(cfg.seeker_query_count) + " seeker queries");
  }

  // Per-query top-k, union keeping each segment's best score, then the cap.
  const std::size_t per_query =
      (rc.k_provider_comments + seeker_queries.size() - 1) / seeker_queries.size();
  std::map<std::size_t, double> best;
  for (const auto& q : seeker_queries) {
    for (const auto& h : retrieve(ctx.index, q, per_query, SourceKind::kComment, ctx.embedder)) {
      auto [it, inserted] = best.emplace(h.index, h.score);
      if (!inserted) it->second = std::max(it->second, h.score);
    }
  }
  std::vector<std::pair<std::size_t, double>> pool(best.begin(), best.end());
  std::sort(pool.begin(), pool.end(), [&](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return ctx.index.segment(a.first).id < ctx.index.segment(b.first).id;
  });
  if (pool.size() > rc.k_provider_comments) pool.resize(rc.k_provider_comments);
  if (trace) {
    trace->pool_segment_ids.clear();
    for (const auto& [i, s] : pool) trace->pool_segment_ids.push_back(ctx.index.segment(i).id);
  }
  if (pool.size() < cfg.provider_clusters.min_cluster_size) return {};

  std::vector<std::span<const float>> points;
  std::vector<ClusterItem> items;
  for (const auto& [i, s] : pool) {
    points.push_back(ctx.index.vector(i));
    items.push_back({ctx.index.segment(i).id, ctx.index.vector(i)});
  }
  const auto groups = persona_groups(hdbscan(points, cfg.provider_clusters));
  if (groups.empty()) return {};

  std::vector<std::size_t> ref_to_segment;
  json group_views = json::array();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::vector<std::string> ids;
    for (auto p : groups[g]) ids.push_back(items[p].id);
    const auto central = central_members(items, ids, rc.central_comments_per_group);
    if (trace) trace->central_segment_ids.push_back(central);
    json comments = json::array();
    for (const auto& sid : central) {
      const std::size_t seg = *ctx.index.find(sid);
      comments.push_back({{"ref", ref_to_segment.size()}, {"text", ctx.index.segment(seg).text}});
      ref_to_segment.push_back(seg);
    }
    group_views.push_back({{"group", g}, {"comments", comments}});
  }

  const std::size_t ref_count = ref_to_segment.size();
  const json adjusted = ctx.gateway.complete_structured(
      templates::kCommentGroupAdjust,
      {{"queries", seeker_queries}, {"seeker", seeker_prompt_view(seeker)}, {"groups", group_views}},
      [ref_count](const json& j) -> std::optional<std::string> {
        std::set<std::size_t> used;
        for (const auto& g : j.at("groups")) {
          for (const auto& r : g.at("refs")) {
            const auto ref = r.get<std::size_t>();
            if (ref >= ref_count) return "ref " + std::to_string(ref) + " is out of range";
            if (!used.insert(ref).second) {
              return "ref " + std::to_string(ref) + " appears in more than one group";
            }
          }
        }
        return std::nullopt;
      });

  std::vector<std::vector<std::string>> group_sources;
  std::vector<StructuredRequest> requests;
  for (const auto& g : adjusted.at("groups")) {
    std::set<std::string> sources;
    json comments = json::array();
    for (const auto& r : g.at("refs")) {
      const Segment& seg = ctx.index.segment(ref_to_segment[r.get<std::size_t>()]);
      sources.insert(seg.source.id);
      comments.push_back(seg.text);
    }
    group_sources.emplace_back(sources.begin(), sources.end());
    requests.push_back({std::string(templates::kProviderPersonas),
                        {{"seeker_queries", seeker_queries}, {"comments", comments}, {"count", 1}},
                        [](const json& j) { return check_count(j.at("personas"), 1, 1, "personas"); }});
  }
  if (trace) trace->surviving_groups = requests.size();
  if (requests.empty()) return {};
  const auto replies = ctx.gateway.complete_many(requests);

  json candidates = json::array();
  for (const auto& r : replies) candidates.push_back(r.at("personas").at(0));
  const std::size_t n = candidates.size();
  const std::size_t min_count = std::min(cfg.min_providers, n);
  const std::size_t max_count = cfg.max_providers;

  std::string joined;
  for (const auto& q : seeker_queries) joined += (joined.empty() ? "" : "\n") + q;
  const json merged = ctx.gateway.complete_structured(
      templates::kPersonaMergeRefine,
      {{"kind", "provider"},
       {"query", joined},
       {"min_count", min_count},
       {"max_count", max_count},
       {"candidates", candidates},
       {"factors", nullptr}},
      [&](const json& j) -> std::optional<std::string> {
        const auto& list = j.at("personas");
        if (auto e = check_count(list, min_count, max_count, "personas")) return e;
        return check_merged_from(list, n);
      });

  std::vector<ProviderPersona> providers;
  for (const auto& j : merged.at("personas")) {
    ProviderPersona p;
    p.id = "provider-" + std::to_string(providers.size() + 1);
    fill_profile(j, p.name, p.age, p.gender, p.identity, p.background);
    std::set<std::string> sources;
    for (const auto& idx : j.at("merged_from")) {
      const auto& s = group_sources[idx.get<std::size_t>()];
      sources.insert(s.begin(), s.end());
    }
    p.source_comment_ids.assign(sources.begin(), sources.end());
    p.background_vector = embed_one(p.background, ctx.embedder);
    providers.push_back(std::move(p));
  }
  return providers;
}

}  // namespace consearch
