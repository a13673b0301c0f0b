#include "index/segmenter.hpp"

#include <stdexcept>

namespace consearch {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

bool is_continuation_byte(char c) {
  return (static_cast<unsigned char>(c) & 0xC0) == 0x80;
}

// Back off from `cut` until it is not in the middle of a UTF-8 sequence.
std::size_t utf8_floor(std::string_view text, std::size_t cut, std::size_t lower) {
  while (cut > lower + 1 && cut < text.size() && is_continuation_byte(text[cut])) --cut;
  return cut;
}

// Paragraph units: [start, end) where end includes the blank-line run
// ("\n\n" or longer) that follows the paragraph.
std::vector<CharSpan> paragraph_units(std::string_view text) {
  std::vector<CharSpan> units;
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\n' && i + 1 < text.size() && text[i + 1] == '\n') {
      std::size_t j = i;
      while (j < text.size() && text[j] == '\n') ++j;
      units.push_back({start, j});
      start = j;
      i = j;
    } else {
      ++i;
    }
  }
  if (start < text.size()) units.push_back({start, text.size()});
  return units;
}

void hard_split(std::string_view text, CharSpan unit, std::size_t max_len,
                std::vector<CharSpan>& out) {
  std::size_t pos = unit.begin;
  while (unit.end - pos > max_len) {
    std::size_t limit = pos + max_len;
    std::size_t cut = 0;
    // Prefer the last whitespace in the upper half of the window.
    for (std::size_t k = limit; k > pos + max_len / 2; --k) {
      if (is_space(text[k - 1])) {
        cut = k;
        break;
      }
    }
    if (cut == 0) cut = utf8_floor(text, limit, pos);
    out.push_back({pos, cut});
    pos = cut;
  }
  if (pos < unit.end) out.push_back({pos, unit.end});
}

}  // namespace

std::string_view to_string(SourceKind kind) {
  return kind == SourceKind::kPost ? "post" : "comment";
}

SourceKind source_kind_from_string(std::string_view s) {
  if (s == "post") return SourceKind::kPost;
  if (s == "comment") return SourceKind::kComment;
  throw std::invalid_argument("unknown source kind: " + std::string(s));
}

std::vector<CharSpan> split_text(std::string_view text, const SegmentationPolicy& policy) {
  if (policy.max_segment_chars < 8) {
    throw std::invalid_argument("max_segment_chars must be at least 8");
  }
  std::vector<CharSpan> pieces;
  for (const auto& unit : paragraph_units(text)) {
    hard_split(text, unit, policy.max_segment_chars, pieces);
  }
  std::vector<CharSpan> segments;
  for (const auto& piece : pieces) {
    if (!segments.empty() &&
        segments.back().size() + piece.size() <= policy.max_segment_chars) {
      segments.back().end = piece.end;
    } else {
      segments.push_back(piece);
    }
  }
  return segments;
}

std::vector<Segment> segment_corpus(const CommunityCorpus& corpus,
                                    const SegmentationPolicy& policy) {
  std::vector<Segment> out;
  auto emit = [&](SourceKind kind, const std::string& id, const std::string& text) {
    const auto spans = split_text(text, policy);
    const char prefix = kind == SourceKind::kPost ? 'p' : 'c';
    for (std::size_t i = 0; i < spans.size(); ++i) {
      Segment seg;
      seg.id = std::string(1, prefix) + ":" + id + ":" + std::to_string(i);
      seg.source = {kind, id};
      seg.text = text.substr(spans[i].begin, spans[i].size());
      seg.span = spans[i];
      out.push_back(std::move(seg));
    }
  };
  for (const auto& p : corpus.posts()) emit(SourceKind::kPost, p.id, p.full_text());
  for (const auto& c : corpus.comments()) emit(SourceKind::kComment, c.id, c.body);
  return out;
}

}  // namespace consearch
