#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "corpus/corpus.hpp"

namespace consearch {

enum class SourceKind : std::uint8_t { kPost = 0, kComment = 1 };

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view s);

struct SourceRef {
  SourceKind kind = SourceKind::kPost;
  std::string id;

  friend bool operator==(const SourceRef&, const SourceRef&) = default;
};

// Half-open byte range into the source text.
struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct Segment {
  std::string id;
  SourceRef source;
  std::string text;
  CharSpan span;
};

// Paragraph-first packing: the text is cut into paragraph units (each unit
// carries its trailing blank-line run), oversized units are hard-split, and
// consecutive pieces are packed greedily up to max_segment_chars. Spans tile
// the source text exactly, with no overlap. Lengths are in bytes; cuts never
// land inside a UTF-8 sequence.
struct SegmentationPolicy {
  std::size_t max_segment_chars = 512;
};

std::vector<CharSpan> split_text(std::string_view text, const SegmentationPolicy& policy);

// Segment ids are "<p|c>:<source id>:<ordinal>" so that id order groups a
// source's segments together.
std::vector<Segment> segment_corpus(const CommunityCorpus& corpus,
                                    const SegmentationPolicy& policy = {});

}  // namespace consearch
