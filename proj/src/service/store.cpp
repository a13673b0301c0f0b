#include "service/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <sstream>
#include <stdexcept>

#include "common/file_util.hpp"

namespace consearch {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

void append_line_durably(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw std::runtime_error("cannot open " + path.string() + ": " + std::strerror(errno));
  }
  std::size_t done = 0;
  while (done < line.size()) {
    const ssize_t n = ::write(fd, line.data() + done, line.size() - done);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int err = errno;
      ::close(fd);
      throw std::runtime_error("write to " + path.string() + " failed: " + std::strerror(err));
    }
    done += static_cast<std::size_t>(n);
  }
  const int rc = ::fsync(fd);
  ::close(fd);
  if (rc != 0) throw std::runtime_error("fsync of " + path.string() + " failed");
}

// Drops a partial final line left by a crash so the next append starts on a
// fresh line. A complete final event that only lacks its newline is kept.
void repair_tail(const fs::path& path) {
  if (!fs::exists(path)) return;
  const std::string text = read_file(path);
  if (text.empty() || text.back() == '\n') return;
  const std::size_t cut = text.rfind('\n');
  const std::size_t start = cut == std::string::npos ? 0 : cut + 1;
  const json last = json::parse(text.substr(start), nullptr, false);
  if (!last.is_discarded() && last.is_object()) {
    append_line_durably(path, "\n");
  } else {
    fs::resize_file(path, start);
  }
}

}  // namespace

SessionStore::SessionStore(fs::path root, std::uint64_t snapshot_every)
    : root_(std::move(root)), snapshot_every_(snapshot_every == 0 ? 1 : snapshot_every) {
  if (persistent()) fs::create_directories(root_);
}

void SessionStore::append(const Session& session, const json& event) {
  if (!persistent()) return;
  const fs::path dir = root_ / session.id;
  fs::create_directories(dir);
  append_line_durably(dir / "events.jsonl", event.dump() + "\n");
  if (session.seq % snapshot_every_ == 0) {
    write_file_atomic(dir / "snapshot.json", json(session).dump() + "\n");
  }
}

std::vector<json> read_event_log(const fs::path& path) {
  std::vector<json> events;
  if (!fs::exists(path)) return events;
  std::istringstream in(read_file(path));
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    json e = json::parse(lines[i], nullptr, false);
    if (e.is_discarded() || !e.is_object()) {
      if (i + 1 == lines.size()) break;  // torn tail
      throw std::runtime_error("corrupt event log " + path.string() + " at line " +
                               std::to_string(i + 1));
    }
    events.push_back(std::move(e));
  }
  return events;
}

Session SessionStore::replay(const std::vector<json>& events, Session start) {
  for (const auto& e : events) {
    if (e.at("seq").get<std::uint64_t>() <= start.seq) continue;
    apply_event(start, e);
  }
  return start;
}

Session SessionStore::load(const std::string& session_id) const {
  const fs::path dir = root_ / session_id;
  Session start;
  if (fs::exists(dir / "snapshot.json")) {
    const json snap = json::parse(read_file(dir / "snapshot.json"), nullptr, false);
    if (!snap.is_discarded()) start = snap.get<Session>();
  }
  repair_tail(dir / "events.jsonl");
  Session s = replay(read_event_log(dir / "events.jsonl"), std::move(start));
  if (s.id.empty()) throw std::runtime_error("no events for session " + session_id);
  return s;
}

std::vector<Session> SessionStore::load_all() const {
  std::vector<Session> out;
  if (!persistent() || !fs::exists(root_)) return out;
  std::vector<std::string> ids;
  for (const auto& e : fs::directory_iterator(root_)) {
    if (e.is_directory() && fs::exists(e.path() / "events.jsonl")) {
      ids.push_back(e.path().filename().string());
    }
  }
  std::sort(ids.begin(), ids.end());
  for (const auto& id : ids) {
    const fs::path dir = root_ / id;
    // A crash while writing the creation event leaves nothing to restore.
    if (!fs::exists(dir / "snapshot.json") && read_event_log(dir / "events.jsonl").empty()) continue;
    out.push_back(load(id));
  }
  return out;
}

}  // namespace consearch
