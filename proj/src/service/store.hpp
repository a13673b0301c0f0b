#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "service/session.hpp"

namespace consearch {

// Durable session storage: <root>/<session id>/events.jsonl, one event per
// line, fsynced before append() returns, plus snapshot.json written every
// `snapshot_every` events. An empty root keeps nothing on disk.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path root, std::uint64_t snapshot_every = 16);

  bool persistent() const { return !root_.empty(); }

  // `session` is the state after applying `event`.
  void append(const Session& session, const nlohmann::json& event);

  // Rebuilds every stored session: snapshot first, then the events after it.
  // A torn final line (crash during append) is cut from the log; corruption anywhere
  // else throws std::runtime_error.
  std::vector<Session> load_all() const;
  Session load(const std::string& session_id) const;

  static Session replay(const std::vector<nlohmann::json>& events, Session start = {});

 private:
  std::filesystem::path root_;
  std::uint64_t snapshot_every_;
};

// Lines of an event log, dropping a final line that does not parse.
std::vector<nlohmann::json> read_event_log(const std::filesystem::path& path);

}  // namespace consearch
