#include "service/engine.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "common/errors.hpp"
#include "common/hash.hpp"
#include "index/http_embedder.hpp"
#include "llm/http_provider.hpp"
#include "llm/mock_provider.hpp"

namespace consearch {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MethodNotAllowed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Unauthorized : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json envelope(const std::string& code, const std::string& message, json detail = json::object()) {
  return json{{"code", code}, {"message", message}, {"detail", std::move(detail)}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t i = 0;
  while (i < path.size()) {
    if (path[i] == '/') {
      ++i;
      continue;
    }
    const std::size_t j = path.find('/', i);
    parts.push_back(path.substr(i, j == std::string::npos ? std::string::npos : j - i));
    if (j == std::string::npos) break;
    i = j;
  }
  return parts;
}

std::string percent_decode(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size()) {
      unsigned value = 0;
      if (std::sscanf(s.substr(i + 1, 2).c_str(), "%2x", &value) != 1) {
        throw BadRequest("malformed percent escape");
      }
      out += static_cast<char>(value);
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::map<std::string, std::string> parse_query(const std::string& q) {
  std::map<std::string, std::string> out;
  std::size_t i = 0;
  while (i <= q.size()) {
    std::size_t j = q.find('&', i);
    if (j == std::string::npos) j = q.size();
    const std::string pair = q.substr(i, j - i);
    if (!pair.empty()) {
      const std::size_t eq = pair.find('=');
      if (eq == std::string::npos) {
        out[percent_decode(pair)] = "";
      } else {
        out[percent_decode(pair.substr(0, eq))] = percent_decode(pair.substr(eq + 1));
      }
    }
    i = j + 1;
  }
  return out;
}

json parse_body(const std::string& body) {
  if (body.empty()) return json::object();
  json j;
  try {
    j = json::parse(body);
  } catch (const json::parse_error& e) {
    throw BadRequest(std::string("request body is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw BadRequest("request body must be a JSON object");
  return j;
}

template <typename T>
T field(const json& body, const char* key, T fallback) {
  if (!body.contains(key) || body.at(key).is_null()) return fallback;
  try {
    return body.at(key).get<T>();
  } catch (const json::exception&) {
    throw BadRequest(std::string("field '") + key + "' has the wrong type");
  }
}

bool blank(const std::string& s) {
  return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

std::int64_t system_clock_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

json segment_view(const Segment& s, const CommunityCorpus& corpus) {
  json j{{"id", s.id},
         {"source_kind", std::string(to_string(s.source.kind))},
         {"source_id", s.source.id},
         {"text", s.text},
         {"span", {{"begin", s.span.begin}, {"end", s.span.end}}}};
  if (s.source.kind == SourceKind::kPost) {
    j["post_id"] = s.source.id;
  } else if (const Comment* c = corpus.find_comment(s.source.id)) {
    j["post_id"] = c->post_id;
  }
  return j;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const ServiceConfig& cfg) {
  if (cfg.mock) return std::make_unique<MockEmbedder>(cfg.embedding.dim, cfg.embedding.mock_seed);
  HttpPostOptions opts;
  opts.timeout = std::chrono::milliseconds(cfg.embedding.timeout_ms);
  opts.retries = cfg.embedding.retries;
  if (!cfg.embedding.api_key.empty()) {
    opts.headers.emplace_back("Authorization", "Bearer " + cfg.embedding.api_key);
  }
  return std::make_unique<HttpEmbedder>(cfg.embedding.url, cfg.embedding.model, cfg.embedding.dim,
                                        opts);
}

std::shared_ptr<LlmProvider> make_llm(const ServiceConfig& cfg) {
  if (cfg.mock) {
    auto fixtures = cfg.llm.fixtures.empty() ? std::vector<LlmFixture>{}
                                             : MockLlmProvider::load_fixtures(cfg.llm.fixtures);
    auto mock = std::make_shared<MockLlmProvider>(std::move(fixtures));
    if (!cfg.llm.record_misses.empty()) mock->record_misses_to(cfg.llm.record_misses);
    return mock;
  }
  HttpPostOptions opts;
  opts.timeout = std::chrono::milliseconds(cfg.llm.timeout_ms);
  opts.retries = cfg.llm.retries;
  return std::make_shared<HttpLlmProvider>(cfg.llm.url, cfg.llm.model, cfg.llm.api_key, opts);
}

}  // namespace

struct Engine::Slot {
  std::mutex writer;
  std::mutex chats_mu;
  std::map<std::string, std::shared_ptr<std::mutex>> chat_locks;
  std::shared_ptr<const Session> state;  // accessed with std::atomic_load/store
  std::uint64_t providers_epoch = 0;     // guarded by writer

  std::shared_ptr<std::mutex> chat_lock(const std::string& chat) {
    std::lock_guard lock(chats_mu);
    auto& m = chat_locks[chat];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
  }
};

std::unique_ptr<Engine> Engine::open(const ServiceConfig& config) {
  config.validate();
  CommunityCorpus corpus = config.dump.empty() ? load_corpus(config.corpus)
                                               : load_dump(config.dump, DumpFormat::kNdjson);
  auto embedder = make_embedder(config);
  std::optional<VectorIndex> index;
  if (!config.index.empty() && fs::exists(config.index)) {
    index = load_index(config.index);
    if (index->embedder_id() != embedder->id() || index->dim() != embedder->dim()) {
      throw std::runtime_error("index " + config.index + " was built with " +
                               index->embedder_id() + ", not " + embedder->id());
    }
    if (index->corpus_hash() != corpus.content_hash()) {
      throw std::runtime_error("index " + config.index + " does not match the corpus");
    }
  }
  return std::make_unique<Engine>(config, std::move(corpus), std::move(embedder),
                                  std::move(index), make_llm(config));
}

Engine::Engine(ServiceConfig config, CommunityCorpus corpus,
               std::unique_ptr<EmbeddingProvider> embedder, std::optional<VectorIndex> index,
               std::shared_ptr<LlmProvider> llm)
    : config_(std::move(config)),
      corpus_(std::move(corpus)),
      embedder_(std::move(embedder)),
      llm_(std::move(llm)),
      log_(std::make_shared<CallLog>()),
      store_(config_.session_store),
      clock_(system_clock_ms),
      id_state_(std::random_device{}() ^ (static_cast<std::uint64_t>(std::random_device{}()) << 32)) {
  if (index) {
    index_ = std::move(*index);
  } else {
    index_ = build_index(corpus_, *embedder_, {}, config_.embedding.batch_size);
    if (!config_.index.empty()) save_index(index_, config_.index);
  }
  GatewayOptions opts;
  opts.max_repair_attempts = config_.llm.max_repair_attempts;
  gateway_ = std::make_unique<LlmGateway>(
      llm_, log_, std::make_shared<InFlightLimiter>(config_.llm.max_in_flight), opts);
  for (auto& s : store_.load_all()) {
    auto slot = std::make_shared<Slot>();
    const std::string id = s.id;
    std::atomic_store(&slot->state, std::shared_ptr<const Session>(
                                        std::make_shared<Session>(std::move(s))));
    sessions_[id] = std::move(slot);
  }
}

Engine::~Engine() = default;

void Engine::set_clock(Clock clock) { clock_ = std::move(clock); }

std::int64_t Engine::now() const { return clock_(); }

PipelineContext Engine::context() {
  return PipelineContext{corpus_, index_, *embedder_, *gateway_, config_.retrieval,
                         config_.persona};
}

std::string Engine::new_session_id() {
  std::lock_guard lock(id_mu_);
  while (true) {
    // splitmix64 step
    id_state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = id_state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(z));
    std::lock_guard slock(sessions_mu_);
    if (!sessions_.count(buf)) return buf;
  }
}

std::shared_ptr<Engine::Slot> Engine::slot(const std::string& sid) const {
  std::lock_guard lock(sessions_mu_);
  auto it = sessions_.find(sid);
  if (it == sessions_.end()) throw NotFoundError("unknown session '" + sid + "'");
  return it->second;
}

std::shared_ptr<const Session> Engine::current(Slot& s) const {
  return std::atomic_load(&s.state);
}

std::shared_ptr<const Session> Engine::session(const std::string& id) const {
  return current(*slot(id));
}

std::shared_ptr<const Session> Engine::commit(Slot& s, const std::string& type, json payload) {
  auto base = current(s);
  auto next = std::make_shared<Session>(*base);
  const json event = make_event(type, base->seq + 1, now(), std::move(payload));
  apply_event(*next, event);
  store_.append(*next, event);
  std::shared_ptr<const Session> published = next;
  std::atomic_store(&s.state, published);
  return published;
}

json Engine::create_session(const json& body) {
  const auto query = field<std::string>(body, "query", "");
  if (blank(query)) throw BadRequest("query must not be empty");
  Mode mode;
  try {
    mode = mode_from_string(field<std::string>(body, "mode", "full"));
  } catch (const std::invalid_argument& e) {
    throw BadRequest(e.what());
  }

  const auto ctx = context();
  Session s;
  s.id = new_session_id();
  s.mode = mode;
  s.query = query;
  s.factors = decompose_factors(query, ctx);
  if (mode != Mode::kBaseline) s.seekers = generate_seekers(query, s.factors, ctx);
  for (const auto& f : s.factors) s.factor_map.counts[f.id] = 0;
  s.created_at = now();
  s.rng_seed = fnv1a64(query, config_.rng_seed);

  auto slot_ptr = std::make_shared<Slot>();
  const json event = make_event("created", 1, s.created_at, {{"session", s}});
  Session applied;
  apply_event(applied, event);
  store_.append(applied, event);
  std::atomic_store(&slot_ptr->state,
                    std::shared_ptr<const Session>(std::make_shared<Session>(applied)));
  {
    std::lock_guard lock(sessions_mu_);
    sessions_[applied.id] = slot_ptr;
  }
  return json{{"session_id", applied.id},
              {"mode", to_string(applied.mode)},
              {"factors", applied.factors},
              {"seekers", applied.seekers}};
}

json Engine::focus_factor(const std::string& sid, const std::string& fid, const json& body) {
  auto sl = slot(sid);
  std::lock_guard lock(sl->writer);
  auto s = current(*sl);
  const Factor* factor = s->find_factor(fid);
  if (!factor) throw NotFoundError("unknown factor '" + fid + "'");
  if (!body.contains("focused") || !body.at("focused").is_boolean()) {
    throw BadRequest("field 'focused' must be a boolean");
  }
  const bool focused = body.at("focused").get<bool>();
  const bool regenerate = field<bool>(body, "regenerate", false);
  std::optional<std::string> seeker_id = s->selected_seeker_id;
  if (body.contains("seeker_id") && !body.at("seeker_id").is_null()) {
    seeker_id = field<std::string>(body, "seeker_id", "");
    if (!s->find_seeker(*seeker_id)) throw NotFoundError("unknown seeker '" + *seeker_id + "'");
  }

  json payload{{"factor_id", fid}, {"focused", focused}};
  const SeekerPersona* seeker = seeker_id ? s->find_seeker(*seeker_id) : nullptr;
  if (focused && s->mode != Mode::kBaseline && seeker &&
      (regenerate || !seeker->situation_for(fid))) {
    Factor f = *factor;
    f.focused = true;
    payload["seeker_id"] = seeker->id;
    payload["situation"] = generate_situation(*seeker, f, s->query, context());
  }
  auto next = commit(*sl, "factor_focused", std::move(payload));
  return *next->find_factor(fid);
}

json Engine::edit_seeker(const std::string& sid, const std::string& pid, const json& body) {
  auto sl = slot(sid);
  std::lock_guard lock(sl->writer);
  auto s = current(*sl);
  if (s->mode == Mode::kBaseline) throw ConflictError("seeker personas are disabled in baseline mode");
  const SeekerPersona* existing = s->find_seeker(pid);
  if (!existing) throw NotFoundError("unknown seeker '" + pid + "'");

  static const std::set<std::string> kEditable{"name",     "age",        "gender",
                                                "identity", "background", "situated_factors"};
  for (const auto& [key, value] : body.items()) {
    if (!kEditable.count(key)) throw ValidationError("field '" + key + "' cannot be edited");
  }

  SeekerPersona edited = *existing;
  bool changed = false;
  for (const char* key : {"name", "gender", "identity", "background"}) {
    if (!body.contains(key)) continue;
    const auto& v = body.at(key);
    if (!v.is_string() || blank(v.get<std::string>())) {
      throw ValidationError(std::string("field '") + key + "' must be a non-empty string");
    }
    std::string& slot_field = std::string(key) == "name"       ? edited.name
                              : std::string(key) == "gender"   ? edited.gender
                              : std::string(key) == "identity" ? edited.identity
                                                               : edited.background;
    if (slot_field != v.get<std::string>()) changed = true;
    slot_field = v.get<std::string>();
  }
  if (body.contains("age")) {
    const auto& v = body.at("age");
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0 || v.get<std::int64_t>() > 120) {
      throw ValidationError("field 'age' must be an integer between 0 and 120");
    }
    if (edited.age != v.get<int>()) changed = true;
    edited.age = v.get<int>();
  }
  if (body.contains("situated_factors")) {
    const auto& list = body.at("situated_factors");
    if (!list.is_array()) throw ValidationError("field 'situated_factors' must be an array");
    std::vector<SituatedFactor> situations;
    std::set<std::string> seen;
    for (const auto& item : list) {
      if (!item.is_object() || !item.contains("factor_id") || !item.at("factor_id").is_string() ||
          !item.contains("situation") || !item.at("situation").is_string()) {
        throw ValidationError("each situated factor needs string 'factor_id' and 'situation'");
      }
      for (const auto& [key, value] : item.items()) {
        if (key != "factor_id" && key != "situation" && key != "user_edited") {
          throw ValidationError("situated factor field '" + key + "' cannot be edited");
        }
      }
      SituatedFactor sf;
      sf.factor_id = item.at("factor_id").get<std::string>();
      sf.situation = item.at("situation").get<std::string>();
      if (!s->find_factor(sf.factor_id)) {
        throw ValidationError("situated factor refers to unknown factor '" + sf.factor_id + "'");
      }
      if (!seen.insert(sf.factor_id).second) {
        throw ValidationError("factor '" + sf.factor_id + "' appears twice");
      }
      if (blank(sf.situation)) throw ValidationError("situation text must not be empty");
      const SituatedFactor* prior = existing->situation_for(sf.factor_id);
      sf.user_edited = !prior || prior->situation != sf.situation || prior->user_edited;
      if (!prior || prior->situation != sf.situation) changed = true;
      situations.push_back(std::move(sf));
    }
    if (situations.size() != existing->situated_factors.size()) changed = true;
    edited.situated_factors = std::move(situations);
  }
  edited.user_edited = existing->user_edited || changed;

  auto next = commit(*sl, "seeker_edited", {{"seeker", edited}});
  return *next->find_seeker(pid);
}

json Engine::seeker_queries(const std::string& sid, const std::string& pid) {
  auto sl = slot(sid);
  std::lock_guard lock(sl->writer);
  auto s = current(*sl);
  if (s->mode == Mode::kBaseline) throw ConflictError("seeker personas are disabled in baseline mode");
  const SeekerPersona* seeker = s->find_seeker(pid);
  if (!seeker) throw NotFoundError("unknown seeker '" + pid + "'");
  if (seeker->situated_factors.empty()) {
    throw ConflictError("seeker '" + pid + "' has no situations; focus a factor first");
  }
  auto queries = suggest_seeker_queries(*seeker, s->query, context());
  commit(*sl, "seeker_queries", {{"seeker_id", pid}, {"queries", queries}});
  return json{{"queries", queries}};
}

json Engine::generate_providers(const std::string& sid) {
  auto sl = slot(sid);
  std::lock_guard lock(sl->writer);
  auto s = current(*sl);
  if (s->mode != Mode::kFull) {
    throw ConflictError("provider personas are disabled in " + std::string(to_string(s->mode)) +
                        " mode");
  }
  const SeekerPersona* seeker = s->selected_seeker();
  if (!seeker) throw ConflictError("no seeker selected; generate seeker queries first");
  auto it = s->seeker_queries.find(seeker->id);
  if (it == s->seeker_queries.end() || it->second.size() != config_.persona.seeker_query_count) {
    throw ConflictError("the selected seeker has no suggested queries");
  }
  auto providers = consearch::generate_providers(*seeker, it->second, context());
  auto next = commit(*sl, "providers", {{"seeker_id", seeker->id}, {"providers", providers}});
  ++sl->providers_epoch;
  json out = json::array();
  for (const auto& p : next->providers) out.push_back(public_view(p));
  return json{{"providers", out}};
}

json Engine::chat(const std::string& sid, const std::string& chat, const json& body) {
  auto sl = slot(sid);
  const auto text = field<std::string>(body, "text", "");
  if (blank(text)) throw BadRequest("text must not be empty");
  const auto origin = field<std::string>(body, "origin", "typed");

  auto chat_mu = sl->chat_lock(chat);
  std::lock_guard chat_guard(*chat_mu);

  std::shared_ptr<const Session> s;
  std::uint64_t epoch = 0;
  {
    std::lock_guard lock(sl->writer);
    s = current(*sl);
    epoch = sl->providers_epoch;
  }

  TurnInput turn;
  turn.query = text;
  turn.factors = s->factors;
  if (chat == kBaseChat) {
    turn.seeker = s->mode == Mode::kBaseline ? nullptr : s->selected_seeker();
    turn.mode = turn.seeker ? Mode::kSeekerOnly : Mode::kBaseline;
  } else {
    if (s->mode != Mode::kFull) {
      throw ConflictError("provider chats are disabled in " + std::string(to_string(s->mode)) +
                          " mode");
    }
    turn.provider = s->find_provider(chat);
    if (!turn.provider) throw NotFoundError("unknown provider '" + chat + "'");
    turn.seeker = s->selected_seeker();
    if (!turn.seeker) throw ConflictError("no seeker selected");
    turn.mode = Mode::kFull;
  }
  auto history_it = s->chats.find(chat);
  if (history_it != s->chats.end()) turn.history = history_it->second;
  turn.rng_seed = turn_seed(*s, chat, turn.history.size() / 2);

  AgentResponse response = answer(turn, context(), config_.dialogue);

  std::lock_guard lock(sl->writer);
  if (chat != kBaseChat && sl->providers_epoch != epoch) {
    throw ConflictError("providers were regenerated while the turn was running");
  }
  const std::int64_t at = now();
  ChatMessage user{"user", text, at, origin, std::nullopt};
  ChatMessage agent{"agent", response.persona_answer.value_or(response.genai_answer), at, "", response};
  commit(*sl, "chat_turn", {{"chat", chat}, {"user", user}, {"agent", agent}});
  return response;
}

json Engine::get_session(const std::string& sid) const { return public_view(*session(sid)); }

json Engine::session_posts(const std::string& sid, const std::string& factor_id) const {
  auto s = session(sid);
  std::set<std::string> ids;
  if (factor_id.empty()) {
    for (const auto& f : s->factors) ids.insert(f.relevant_post_ids.begin(), f.relevant_post_ids.end());
  } else {
    const Factor* f = s->find_factor(factor_id);
    if (!f) throw NotFoundError("unknown factor '" + factor_id + "'");
    ids.insert(f->relevant_post_ids.begin(), f->relevant_post_ids.end());
  }
  json posts = json::array();
  for (const auto& p : filter_posts_by_factor(corpus_, ids)) {
    json j = post_to_json(p);
    j["comment_count"] = corpus_.comments_of(p.id).size();
    posts.push_back(std::move(j));
  }
  return json{{"posts", posts}};
}

json Engine::summarize(const std::string& sid, const json& body) {
  session(sid);
  const auto text = field<std::string>(body, "text", "");
  if (blank(text)) throw BadRequest("text must not be empty");
  const auto result = summarize_selection(text, context(), config_.dialogue);
  return json{{"summary", result.summary},
              {"truncated", result.truncated},
              {"input_chars", result.input_chars}};
}

json Engine::get_segment(const std::string& segment_id) const {
  const auto i = index_.find(segment_id);
  if (!i) throw NotFoundError("unknown segment '" + segment_id + "'");
  return segment_view(index_.segment(*i), corpus_);
}

json Engine::get_post(const std::string& post_id) const {
  const Post* p = corpus_.find_post(post_id);
  if (!p) throw NotFoundError("unknown post '" + post_id + "'");
  json j = post_to_json(*p);
  json comments = json::array();
  for (const Comment* c : corpus_.comments_of(post_id)) comments.push_back(comment_to_json(*c));
  j["comments"] = comments;
  return j;
}

ApiResponse Engine::handle(const ApiRequest& request) {
  try {
    std::string path = request.path;
    std::map<std::string, std::string> query;
    if (const auto q = path.find('?'); q != std::string::npos) {
      query = parse_query(path.substr(q + 1));
      path.resize(q);
    }
    std::vector<std::string> parts;
    for (auto& part : split_path(path)) parts.push_back(percent_decode(part));
    if (parts.empty() || parts[0] != "api") throw NotFoundError("no such endpoint");
    parts.erase(parts.begin());
    const std::string& m = request.method;
    const std::size_t n = parts.size();

    auto route = [&](bool matched, const char* method) {
      if (!matched) return false;
      if (m != method) throw MethodNotAllowed("method " + m + " not allowed here");
      return true;
    };

    if (route(n == 1 && parts[0] == "health", "GET")) {
      std::size_t count = 0;
      {
        std::lock_guard lock(sessions_mu_);
        count = sessions_.size();
      }
      return {200, json{{"status", "ok"},
                        {"posts", corpus_.posts().size()},
                        {"comments", corpus_.comments().size()},
                        {"segments", index_.size()},
                        {"embedder", index_.embedder_id()},
                        {"llm", gateway_->provider_id()},
                        {"sessions", count}}};
    }

    if (!config_.api_token.empty() && request.authorization != "Bearer " + config_.api_token) {
      throw Unauthorized("missing or wrong API token");
    }

    if (n >= 1 && parts[0] == "sessions") {
      if (n == 1) {
        if (m == "POST") return {201, create_session(parse_body(request.body))};
        if (m == "GET") {
          json list = json::array();
          std::vector<std::shared_ptr<Slot>> slots;
          {
            std::lock_guard lock(sessions_mu_);
            for (const auto& [id, sl] : sessions_) slots.push_back(sl);
          }
          for (const auto& sl : slots) {
            auto s = current(*sl);
            list.push_back({{"id", s->id},
                            {"mode", to_string(s->mode)},
                            {"query", s->query},
                            {"created_at", s->created_at}});
          }
          return {200, json{{"sessions", list}}};
        }
        throw MethodNotAllowed("method " + m + " not allowed here");
      }
      const std::string& sid = parts[1];
      if (route(n == 2, "GET")) return {200, get_session(sid)};
      if (route(n == 4 && parts[2] == "factors", "PATCH")) {
        return {200, focus_factor(sid, parts[3], parse_body(request.body))};
      }
      if (route(n == 4 && parts[2] == "seekers", "PATCH")) {
        return {200, edit_seeker(sid, parts[3], parse_body(request.body))};
      }
      if (route(n == 5 && parts[2] == "seekers" && parts[4] == "queries", "POST")) {
        return {200, seeker_queries(sid, parts[3])};
      }
      if (route(n == 3 && parts[2] == "providers", "POST")) return {200, generate_providers(sid)};
      if (route(n == 5 && parts[2] == "chats" && parts[4] == "messages", "POST")) {
        return {200, chat(sid, parts[3], parse_body(request.body))};
      }
      if (route(n == 3 && parts[2] == "posts", "GET")) {
        auto it = query.find("factor");
        return {200, session_posts(sid, it == query.end() ? "" : it->second)};
      }
      if (route(n == 3 && parts[2] == "summarize", "POST")) {
        return {200, summarize(sid, parse_body(request.body))};
      }
    }
    if (route(n == 2 && parts[0] == "segments", "GET")) return {200, get_segment(parts[1])};
    if (route(n == 2 && parts[0] == "posts", "GET")) return {200, get_post(parts[1])};
    if (config_.debug && route(n == 2 && parts[0] == "debug" && parts[1] == "calls", "GET")) {
      std::size_t since = 0;
      if (auto it = query.find("since"); it != query.end()) {
        try {
          since = std::stoul(it->second);
        } catch (const std::exception&) {
          throw BadRequest("'since' must be a non-negative integer");
        }
      }
      const auto calls = log_->snapshot();
      json out = json::array();
      for (std::size_t i = since; i < calls.size(); ++i) out.push_back(calls[i].to_json());
      return {200, json{{"calls", out}, {"next", calls.size()}}};
    }
    throw NotFoundError("no such endpoint");
  } catch (const BadRequest& e) {
    return {400, envelope("bad_request", e.what())};
  } catch (const Unauthorized& e) {
    return {401, envelope("unauthorized", e.what())};
  } catch (const NotFoundError& e) {
    return {404, envelope("not_found", e.what())};
  } catch (const MethodNotAllowed& e) {
    return {405, envelope("method_not_allowed", e.what())};
  } catch (const ConflictError& e) {
    return {409, envelope("conflict", e.what())};
  } catch (const ValidationError& e) {
    return {422, envelope("invalid_edit", e.what())};
  } catch (const PipelineError& e) {
    return {502, envelope("pipeline_error", e.what(), {{"template_id", e.template_id()}})};
  } catch (const ProviderError& e) {
    return {502, envelope("provider_unavailable", e.what())};
  } catch (const EmbeddingError& e) {
    return {502, envelope("embedding_unavailable", e.what(),
                          {{"batch_offset", e.batch_offset()}})};
  } catch (const std::invalid_argument& e) {
    return {400, envelope("bad_request", e.what())};
  } catch (const json::exception& e) {
    return {400, envelope("bad_request", e.what())};
  } catch (const std::exception& e) {
    return {500, envelope("internal", e.what())};
  }
}

}  // namespace consearch
