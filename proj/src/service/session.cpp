#include "service/session.hpp"

#include <stdexcept>

#include "common/hash.hpp"

namespace consearch {

using nlohmann::json;

Factor* Session::find_factor(const std::string& id) {
  for (auto& f : factors) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

const Factor* Session::find_factor(const std::string& id) const {
  return const_cast<Session*>(this)->find_factor(id);
}

SeekerPersona* Session::find_seeker(const std::string& id) {
  for (auto& p : seekers) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const SeekerPersona* Session::find_seeker(const std::string& id) const {
  return const_cast<Session*>(this)->find_seeker(id);
}

const ProviderPersona* Session::find_provider(const std::string& id) const {
  for (const auto& p : providers) {
    if (p.id == id) return &p;
  }
  return nullptr;
}

const SeekerPersona* Session::selected_seeker() const {
  return selected_seeker_id ? find_seeker(*selected_seeker_id) : nullptr;
}

void to_json(json& j, const Session& s) {
  j = json{{"id", s.id},
           {"mode", to_string(s.mode)},
           {"query", s.query},
           {"factors", s.factors},
           {"seekers", s.seekers},
           {"selected_seeker_id", s.selected_seeker_id ? json(*s.selected_seeker_id) : json()},
           {"seeker_queries", s.seeker_queries},
           {"providers", s.providers},
           {"chats", s.chats},
           {"factor_map", s.factor_map},
           {"created_at", s.created_at},
           {"rng_seed", s.rng_seed},
           {"seq", s.seq}};
}

void from_json(const json& j, Session& s) {
  j.at("id").get_to(s.id);
  s.mode = mode_from_string(j.at("mode").get<std::string>());
  j.at("query").get_to(s.query);
  j.at("factors").get_to(s.factors);
  j.at("seekers").get_to(s.seekers);
  const auto& sel = j.at("selected_seeker_id");
  s.selected_seeker_id = sel.is_null() ? std::nullopt : std::optional<std::string>(sel.get<std::string>());
  j.at("seeker_queries").get_to(s.seeker_queries);
  j.at("providers").get_to(s.providers);
  j.at("chats").get_to(s.chats);
  j.at("factor_map").get_to(s.factor_map);
  j.at("created_at").get_to(s.created_at);
  j.at("rng_seed").get_to(s.rng_seed);
  j.at("seq").get_to(s.seq);
}

json public_view(const ProviderPersona& p) {
  json j = p;
  j.erase("background_vector");
  return j;
}

json public_view(const Session& s) {
  json j = s;
  json providers = json::array();
  for (const auto& p : s.providers) providers.push_back(public_view(p));
  j["providers"] = providers;
  return j;
}

json make_event(const std::string& type, std::uint64_t seq, std::int64_t at, json payload) {
  payload["type"] = type;
  payload["seq"] = seq;
  payload["at"] = at;
  return payload;
}

void apply_event(Session& s, const json& e) {
  const std::string type = e.at("type");
  const std::uint64_t seq = e.at("seq");
  if (type == "created") {
    if (seq != 1) throw std::invalid_argument("created event must be first");
    s = e.at("session").get<Session>();
    s.seq = 1;
    return;
  }
  if (seq != s.seq + 1) {
    throw std::invalid_argument("event " + std::to_string(seq) + " does not follow " +
                                std::to_string(s.seq));
  }

  if (type == "factor_focused") {
    Factor* f = s.find_factor(e.at("factor_id"));
    if (!f) throw std::invalid_argument("event refers to unknown factor");
    f->focused = e.at("focused");
    if (e.contains("situation")) {
      SeekerPersona* p = s.find_seeker(e.at("seeker_id"));
      if (!p) throw std::invalid_argument("event refers to unknown seeker");
      p->attach(e.at("situation").get<SituatedFactor>());
    }
  } else if (type == "seeker_edited") {
    auto edited = e.at("seeker").get<SeekerPersona>();
    SeekerPersona* p = s.find_seeker(edited.id);
    if (!p) throw std::invalid_argument("event refers to unknown seeker");
    *p = std::move(edited);
  } else if (type == "seeker_queries") {
    const std::string sid = e.at("seeker_id");
    if (!s.find_seeker(sid)) throw std::invalid_argument("event refers to unknown seeker");
    s.seeker_queries[sid] = e.at("queries").get<std::vector<std::string>>();
    s.selected_seeker_id = sid;
  } else if (type == "providers") {
    s.providers = e.at("providers").get<std::vector<ProviderPersona>>();
    // Provider ids are reused across regenerations, so old provider chats go.
    for (auto it = s.chats.begin(); it != s.chats.end();) {
      it = it->first == kBaseChat ? std::next(it) : s.chats.erase(it);
    }
  } else if (type == "chat_turn") {
    const std::string chat = e.at("chat");
    if (chat != kBaseChat && !s.find_provider(chat)) {
      throw std::invalid_argument("event refers to unknown chat");
    }
    auto& log = s.chats[chat];
    log.push_back(e.at("user").get<ChatMessage>());
    const auto agent = e.at("agent").get<ChatMessage>();
    if (agent.response) s.factor_map.fold(agent.response->factor_counts);
    log.push_back(agent);
  } else {
    throw std::invalid_argument("unknown event type '" + type + "'");
  }
  s.seq = seq;
}

std::uint64_t turn_seed(const Session& s, const std::string& chat, std::size_t turn) {
  return fnv1a64(chat + "#" + std::to_string(turn), s.rng_seed);
}

}  // namespace consearch
