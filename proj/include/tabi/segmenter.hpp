#pragma once

#include <functional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tabi {

struct TokenChunk {
  std::string text;
  bool final = false;
};

struct SpeechSegment {
  std::string text;
  int index = 0;
  bool terminal = false;  // the end-of-stream flush of unpunctuated text

  friend bool operator==(const SpeechSegment&, const SpeechSegment&) = default;
};

using SegmentSink = std::function<void(const SpeechSegment&)>;

inline constexpr std::string_view kDefaultPunctuation = "。、！？!?.,";

class PunctuationSet {
 public:
  PunctuationSet() : PunctuationSet(kDefaultPunctuation) {}
  explicit PunctuationSet(std::string_view characters);

  bool contains(char32_t cp) const { return marks_.count(cp) != 0; }
  std::string to_string() const;
  bool empty() const { return marks_.empty(); }

 private:
  std::set<char32_t> marks_;
};

/// Cuts streamed text into speech segments. A segment is emitted the moment
/// a punctuation codepoint arrives; at most one unterminated segment is held.
class SpeechSegmenter {
 public:
  SpeechSegmenter(PunctuationSet punctuation, SegmentSink sink);

  void feed(std::string_view chunk);
  /// Flushes any held text as a terminal segment.
  void finish();

  int emitted() const { return next_index_; }

 private:
  PunctuationSet punctuation_;
  SegmentSink sink_;
  std::string pending_;
  std::size_t scanned_ = 0;
  int next_index_ = 0;
};

/// Removes the end sign from a chunked stream, holding back only as many
/// bytes as could still turn into the sign.
class SignFilter {
 public:
  std::string feed(std::string_view chunk);
  std::string finish();

 private:
  std::string held_;
};

std::vector<SpeechSegment> segment_stream(std::span<const TokenChunk> chunks,
                                          const PunctuationSet& punctuation);

}  // namespace tabi
