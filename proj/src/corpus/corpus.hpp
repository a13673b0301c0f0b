#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace consearch {

struct Post {
  std::string id;
  std::string title;
  std::string body;
  std::string author_ref;
  std::int64_t created_at = 0;  // seconds since the Unix epoch, UTC
  std::int64_t score = 0;

  // Title and body joined the way the segmenter sees them.
  std::string full_text() const;
};

struct Comment {
  std::string id;
  std::string post_id;
  std::optional<std::string> parent_id;  // absent for top-level comments
  std::string body;
  std::string author_ref;
  std::int64_t created_at = 0;
  std::int64_t score = 0;
};

// Drop reasons, keyed as they appear in the serialized report.
inline constexpr std::string_view kDroppedMalformed = "dropped_malformed";
inline constexpr std::string_view kDroppedSentinel = "dropped_sentinel";
inline constexpr std::string_view kDroppedDuplicate = "dropped_duplicate";
inline constexpr std::string_view kDroppedEmpty = "dropped_empty";
inline constexpr std::string_view kDroppedOrphan = "dropped_orphan";

struct IngestReport {
  std::uint64_t total_records = 0;
  std::uint64_t retained_posts = 0;
  std::uint64_t retained_comments = 0;
  std::map<std::string, std::uint64_t, std::less<>> dropped;  // reason -> count

  std::uint64_t retained() const { return retained_posts + retained_comments; }
  std::uint64_t dropped_total() const;
};

enum class DumpFormat { kNdjson };

DumpFormat parse_dump_format(std::string_view tag);

// Immutable after construction; safe for concurrent readers.
class CommunityCorpus {
 public:
  CommunityCorpus() = default;
  CommunityCorpus(std::string community_name, std::vector<Post> posts,
                  std::vector<Comment> comments, IngestReport report);

  const std::string& community_name() const { return community_name_; }
  const std::vector<Post>& posts() const { return posts_; }
  const std::vector<Comment>& comments() const { return comments_; }
  const IngestReport& ingest_report() const { return report_; }

  const Post* find_post(std::string_view id) const;
  const Comment* find_comment(std::string_view id) const;
  // Comments of one post ordered by created_at then id.
  std::vector<const Comment*> comments_of(std::string_view post_id) const;

  // Canonical JSON form: sorted records, sorted keys, trailing newline.
  std::string serialize() const;
  static CommunityCorpus deserialize(std::string_view text);
  std::string content_hash() const;

 private:
  void build_lookup();

  std::string community_name_;
  std::vector<Post> posts_;        // sorted by id
  std::vector<Comment> comments_;  // sorted by id
  IngestReport report_;
  std::unordered_map<std::string, std::size_t> post_pos_;
  std::unordered_map<std::string, std::size_t> comment_pos_;
};

bool is_deletion_sentinel(std::string_view value);

// Record views in the canonical field layout.
nlohmann::json post_to_json(const Post& p);
nlohmann::json comment_to_json(const Comment& c);

// Parses a community dump. Malformed records are counted and skipped; only an
// unreadable file throws (IngestError).
CommunityCorpus load_dump(const std::filesystem::path& path, DumpFormat format,
                          std::string community_name = {});
CommunityCorpus parse_dump(std::string_view contents, DumpFormat format,
                           std::string community_name = {});

CommunityCorpus load_corpus(const std::filesystem::path& path);
void save_corpus(const CommunityCorpus& corpus, const std::filesystem::path& path);

// Known posts among `post_ids`, newest first (ties by id).
std::vector<Post> filter_posts_by_factor(const CommunityCorpus& corpus,
                                         const std::set<std::string>& post_ids);

}  // namespace consearch
