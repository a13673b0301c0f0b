#include "corpus/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <numeric>

#include <nlohmann/json.hpp>

#include "common/errors.hpp"
#include "common/file_util.hpp"
#include "common/hash.hpp"

namespace consearch {

using nlohmann::json;

namespace {

constexpr std::string_view kCorpusFormat = "consearch-corpus";
constexpr int kCorpusVersion = 1;

std::string trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_prefix(std::string_view s, std::string_view prefix) {
  if (s.substr(0, prefix.size()) == prefix) s.remove_prefix(prefix.size());
  return std::string(s);
}

struct MalformedRecord {};

const json* field(const json& obj, std::initializer_list<const char*> names) {
  for (const char* n : names) {
    auto it = obj.find(n);
    if (it != obj.end() && !it->is_null()) return &*it;
  }
  return nullptr;
}

std::string string_field(const json& obj, std::initializer_list<const char*> names,
                         bool required) {
  const json* v = field(obj, names);
  if (v == nullptr) {
    if (required) throw MalformedRecord{};
    return {};
  }
  if (!v->is_string()) throw MalformedRecord{};
  return v->get<std::string>();
}

std::int64_t int_field(const json& obj, std::initializer_list<const char*> names) {
  const json* v = field(obj, names);
  if (v == nullptr) return 0;
  if (v->is_number_integer()) return v->get<std::int64_t>();
  if (v->is_number_float()) return static_cast<std::int64_t>(v->get<double>());
  if (v->is_string()) {
    const auto& s = v->get_ref<const std::string&>();
    std::int64_t out = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return out;
    // Archive exports sometimes write "1700000000.0".
    try {
      std::size_t used = 0;
      double d = std::stod(s, &used);
      if (used == s.size()) return static_cast<std::int64_t>(d);
    } catch (const std::exception&) {
    }
  }
  throw MalformedRecord{};
}

enum class Kind { kPost, kComment };

struct RawRecord {
  Kind kind;
  Post post;
  Comment comment;
  std::string subreddit;
};

RawRecord parse_record(std::string_view line) {
  json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!obj.is_object()) throw MalformedRecord{};
  const std::string kind = string_field(obj, {"kind"}, true);
  RawRecord rec{};
  if (kind == "post") {
    rec.kind = Kind::kPost;
    Post& p = rec.post;
    p.id = string_field(obj, {"id"}, true);
    p.title = string_field(obj, {"title"}, false);
    p.body = string_field(obj, {"body", "selftext"}, false);
    p.author_ref = string_field(obj, {"author_ref", "author"}, false);
    p.created_at = int_field(obj, {"created_at", "created_utc"});
    p.score = int_field(obj, {"score"});
    rec.subreddit = string_field(obj, {"subreddit"}, false);
  } else if (kind == "comment") {
    rec.kind = Kind::kComment;
    Comment& c = rec.comment;
    c.id = string_field(obj, {"id"}, true);
    c.post_id = strip_prefix(string_field(obj, {"post_id", "link_id"}, true), "t3_");
    std::string parent = string_field(obj, {"parent_id"}, false);
    if (!parent.empty() && parent.rfind("t3_", 0) != 0) {
      parent = strip_prefix(parent, "t1_");
      if (parent != c.post_id) c.parent_id = std::move(parent);
    }
    c.body = string_field(obj, {"body"}, true);
    c.author_ref = string_field(obj, {"author_ref", "author"}, false);
    c.created_at = int_field(obj, {"created_at", "created_utc"});
    c.score = int_field(obj, {"score"});
  } else {
    throw MalformedRecord{};
  }
  const std::string& id = rec.kind == Kind::kPost ? rec.post.id : rec.comment.id;
  if (id.empty()) throw MalformedRecord{};
  return rec;
}

json to_json(const Post& p) {
  return json{{"id", p.id},           {"title", p.title}, {"body", p.body},
              {"author_ref", p.author_ref}, {"created_at", p.created_at},
              {"score", p.score}};
}

json to_json(const Comment& c) {
  return json{{"id", c.id},
              {"post_id", c.post_id},
              {"parent_id", c.parent_id ? json(*c.parent_id) : json(nullptr)},
              {"body", c.body},
              {"author_ref", c.author_ref},
              {"created_at", c.created_at},
              {"score", c.score}};
}

}  // namespace

std::string Post::full_text() const {
  if (title.empty()) return body;
  if (body.empty()) return title;
  return title + "\n\n" + body;
}

std::uint64_t IngestReport::dropped_total() const {
  return std::accumulate(dropped.begin(), dropped.end(), std::uint64_t{0},
                         [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

DumpFormat parse_dump_format(std::string_view tag) {
  if (tag == "ndjson") return DumpFormat::kNdjson;
  throw std::invalid_argument("unsupported dump format: " + std::string(tag));
}

bool is_deletion_sentinel(std::string_view value) {
  return value == "[deleted]" || value == "[removed]";
}

CommunityCorpus::CommunityCorpus(std::string community_name, std::vector<Post> posts,
                                 std::vector<Comment> comments, IngestReport report)
    : community_name_(std::move(community_name)),
      posts_(std::move(posts)),
      comments_(std::move(comments)),
      report_(std::move(report)) {
  std::sort(posts_.begin(), posts_.end(),
            [](const Post& a, const Post& b) { return a.id < b.id; });
  std::sort(comments_.begin(), comments_.end(),
            [](const Comment& a, const Comment& b) { return a.id < b.id; });
  build_lookup();
}

void CommunityCorpus::build_lookup() {
  post_pos_.clear();
  comment_pos_.clear();
  for (std::size_t i = 0; i < posts_.size(); ++i) post_pos_.emplace(posts_[i].id, i);
  for (std::size_t i = 0; i < comments_.size(); ++i) comment_pos_.emplace(comments_[i].id, i);
}

const Post* CommunityCorpus::find_post(std::string_view id) const {
  auto it = post_pos_.find(std::string(id));
  return it == post_pos_.end() ? nullptr : &posts_[it->second];
}

const Comment* CommunityCorpus::find_comment(std::string_view id) const {
  auto it = comment_pos_.find(std::string(id));
  return it == comment_pos_.end() ? nullptr : &comments_[it->second];
}

std::vector<const Comment*> CommunityCorpus::comments_of(std::string_view post_id) const {
  std::vector<const Comment*> out;
  for (const auto& c : comments_) {
    if (c.post_id == post_id) out.push_back(&c);
  }
  std::sort(out.begin(), out.end(), [](const Comment* a, const Comment* b) {
    return std::tie(a->created_at, a->id) < std::tie(b->created_at, b->id);
  });
  return out;
}

std::string CommunityCorpus::serialize() const {
  json doc;
  doc["format"] = kCorpusFormat;
  doc["version"] = kCorpusVersion;
  doc["community_name"] = community_name_;
  json posts = json::array();
  for (const auto& p : posts_) posts.push_back(to_json(p));
  json comments = json::array();
  for (const auto& c : comments_) comments.push_back(to_json(c));
  doc["posts"] = std::move(posts);
  doc["comments"] = std::move(comments);
  json report;
  report["total_records"] = report_.total_records;
  report["retained_posts"] = report_.retained_posts;
  report["retained_comments"] = report_.retained_comments;
  report["dropped"] = report_.dropped;
  doc["ingest_report"] = std::move(report);
  return doc.dump() + "\n";
}

CommunityCorpus CommunityCorpus::deserialize(std::string_view text) {
  json doc = json::parse(text, nullptr, false);
  if (!doc.is_object() || doc.value("format", "") != kCorpusFormat) {
    throw IngestError("not a serialized corpus");
  }
  if (doc.value("version", 0) != kCorpusVersion) {
    throw IngestError("unsupported corpus version");
  }
  try {
    std::vector<Post> posts;
    for (const auto& p : doc.at("posts")) {
      posts.push_back(Post{p.at("id"), p.at("title"), p.at("body"), p.at("author_ref"),
                           p.at("created_at"), p.at("score")});
    }
    std::vector<Comment> comments;
    for (const auto& c : doc.at("comments")) {
      Comment cm{c.at("id"), c.at("post_id"), std::nullopt, c.at("body"),
                 c.at("author_ref"), c.at("created_at"), c.at("score")};
      if (!c.at("parent_id").is_null()) cm.parent_id = c.at("parent_id").get<std::string>();
      comments.push_back(std::move(cm));
    }
    const json& r = doc.at("ingest_report");
    IngestReport report;
    report.total_records = r.at("total_records");
    report.retained_posts = r.at("retained_posts");
    report.retained_comments = r.at("retained_comments");
    for (const auto& [k, v] : r.at("dropped").items()) report.dropped[k] = v.get<std::uint64_t>();
    return CommunityCorpus(doc.at("community_name"), std::move(posts), std::move(comments),
                           std::move(report));
  } catch (const json::exception& e) {
    throw IngestError(std::string("corrupt corpus file: ") + e.what());
  }
}

std::string CommunityCorpus::content_hash() const { return sha256_hex(serialize()); }

CommunityCorpus parse_dump(std::string_view contents, DumpFormat format,
                           std::string community_name) {
  (void)format;  // ndjson is the only format so far
  IngestReport report;
  for (auto reason : {kDroppedMalformed, kDroppedSentinel, kDroppedDuplicate, kDroppedEmpty,
                      kDroppedOrphan}) {
    report.dropped[std::string(reason)] = 0;
  }
  auto drop = [&report](std::string_view reason) { ++report.dropped[std::string(reason)]; };

  std::vector<Post> posts;
  std::vector<Comment> comments;
  std::unordered_map<std::string, std::size_t> post_index;
  std::unordered_map<std::string, std::size_t> comment_index;
  std::string first_subreddit;

  std::size_t pos = 0;
  while (pos <= contents.size()) {
    auto nl = contents.find('\n', pos);
    if (nl == std::string_view::npos) nl = contents.size();
    std::string_view line = contents.substr(pos, nl - pos);
    pos = nl + 1;
    if (trim(line).empty()) {
      if (nl == contents.size()) break;
      continue;
    }
    ++report.total_records;

    RawRecord rec;
    try {
      rec = parse_record(line);
    } catch (const MalformedRecord&) {
      drop(kDroppedMalformed);
      continue;
    }

    if (rec.kind == Kind::kPost) {
      Post& p = rec.post;
      if (is_deletion_sentinel(p.id) || is_deletion_sentinel(p.author_ref) ||
          is_deletion_sentinel(p.title) || is_deletion_sentinel(p.body)) {
        drop(kDroppedSentinel);
        continue;
      }
      if (post_index.count(p.id) != 0) {
        drop(kDroppedDuplicate);
        continue;
      }
      p.title = trim(p.title);
      p.body = trim(p.body);
      if (p.title.empty() && p.body.empty()) {
        drop(kDroppedEmpty);
        continue;
      }
      if (first_subreddit.empty()) first_subreddit = rec.subreddit;
      post_index.emplace(p.id, posts.size());
      posts.push_back(std::move(p));
    } else {
      Comment& c = rec.comment;
      if (is_deletion_sentinel(c.id) || is_deletion_sentinel(c.author_ref) ||
          is_deletion_sentinel(c.body)) {
        drop(kDroppedSentinel);
        continue;
      }
      if (comment_index.count(c.id) != 0) {
        drop(kDroppedDuplicate);
        continue;
      }
      c.body = trim(c.body);
      if (c.body.empty()) {
        drop(kDroppedEmpty);
        continue;
      }
      comment_index.emplace(c.id, comments.size());
      comments.push_back(std::move(c));
    }
  }

  // Referential integrity: a comment survives only if its post survived and
  // its whole parent chain survived on that same post.
  enum class State : std::uint8_t { kUnknown, kVisiting, kKept, kDropped };
  std::vector<State> state(comments.size(), State::kUnknown);
  for (std::size_t start = 0; start < comments.size(); ++start) {
    if (state[start] != State::kUnknown) continue;
    std::vector<std::size_t> chain;
    std::size_t cur = start;
    State verdict = State::kDropped;
    while (true) {
      if (state[cur] == State::kKept || state[cur] == State::kDropped) {
        verdict = state[cur];
        break;
      }
      if (state[cur] == State::kVisiting) {  // cycle
        verdict = State::kDropped;
        break;
      }
      state[cur] = State::kVisiting;
      chain.push_back(cur);
      const Comment& c = comments[cur];
      if (post_index.count(c.post_id) == 0) {
        verdict = State::kDropped;
        break;
      }
      if (!c.parent_id) {
        verdict = State::kKept;
        break;
      }
      auto pit = comment_index.find(*c.parent_id);
      if (pit == comment_index.end() || comments[pit->second].post_id != c.post_id) {
        verdict = State::kDropped;
        break;
      }
      cur = pit->second;
    }
    for (auto i : chain) state[i] = verdict;
  }
  std::vector<Comment> kept_comments;
  for (std::size_t i = 0; i < comments.size(); ++i) {
    if (state[i] == State::kKept) {
      kept_comments.push_back(std::move(comments[i]));
    } else {
      drop(kDroppedOrphan);
    }
  }

  report.retained_posts = posts.size();
  report.retained_comments = kept_comments.size();
  if (community_name.empty()) community_name = first_subreddit;
  return CommunityCorpus(std::move(community_name), std::move(posts), std::move(kept_comments),
                         std::move(report));
}

CommunityCorpus load_dump(const std::filesystem::path& path, DumpFormat format,
                          std::string community_name) {
  return parse_dump(read_file(path), format, std::move(community_name));
}

CommunityCorpus load_corpus(const std::filesystem::path& path) {
  return CommunityCorpus::deserialize(read_file(path));
}

void save_corpus(const CommunityCorpus& corpus, const std::filesystem::path& path) {
  write_file_atomic(path, corpus.serialize());
}

std::vector<Post> filter_posts_by_factor(const CommunityCorpus& corpus,
                                         const std::set<std::string>& post_ids) {
  std::vector<Post> out;
  for (const auto& id : post_ids) {
    if (const Post* p = corpus.find_post(id)) out.push_back(*p);
  }
  std::sort(out.begin(), out.end(), [](const Post& a, const Post& b) {
    if (a.created_at != b.created_at) return a.created_at > b.created_at;
    return a.id < b.id;
  });
  return out;
}

json post_to_json(const Post& p) { return to_json(p); }

json comment_to_json(const Comment& c) { return to_json(c); }

}  // namespace consearch
