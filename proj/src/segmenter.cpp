#include "tabi/segmenter.hpp"

#include "tabi/error.hpp"
#include "tabi/phase.hpp"
#include "tabi/text.hpp"

namespace tabi {

PunctuationSet::PunctuationSet(std::string_view characters) {
  for (char32_t cp : text::decode(characters)) marks_.insert(cp);
  if (marks_.empty()) {
    throw Error(ErrorCode::invalid_argument, "punctuation set must not be empty");
  }
}

std::string PunctuationSet::to_string() const {
  std::string out;
  for (char32_t cp : marks_) out += text::encode(cp);
  return out;
}

SpeechSegmenter::SpeechSegmenter(PunctuationSet punctuation, SegmentSink sink)
    : punctuation_(std::move(punctuation)), sink_(std::move(sink)) {}

void SpeechSegmenter::feed(std::string_view chunk) {
  pending_.append(chunk);
  while (scanned_ < pending_.size()) {
    const auto cp = text::next_codepoint(pending_, scanned_);
    if (!cp) break;  // split multibyte character, wait for more
    scanned_ += cp->length;
    if (punctuation_.contains(cp->value)) {
      SpeechSegment segment{pending_.substr(0, scanned_), next_index_++, false};
      pending_.erase(0, scanned_);
      scanned_ = 0;
      if (sink_) sink_(segment);
    }
  }
}

void SpeechSegmenter::finish() {
  if (pending_.empty()) return;
  SpeechSegment segment{std::move(pending_), next_index_++, true};
  pending_.clear();
  scanned_ = 0;
  if (sink_) sink_(segment);
}

namespace {

bool is_proper_sign_prefix(std::string_view piece) {
  return !piece.empty() && piece.size() < kEndSign.size() && kEndSign.substr(0, piece.size()) == piece;
}

// Start of the longest tail made of back-to-back proper sign prefixes. A
// later sign can only ever consume bytes inside that tail.
std::size_t open_tail_start(std::string_view s) {
  std::size_t start = s.size();
  std::size_t end = s.size();
  while (end > 0) {
    const auto open = s.rfind('[', end - 1);
    if (open == std::string_view::npos || !is_proper_sign_prefix(s.substr(open, end - open))) break;
    start = open;
    end = open;
  }
  return start;
}

}  // namespace

std::string SignFilter::feed(std::string_view chunk) {
  for (char c : chunk) {
    held_.push_back(c);
    if (held_.size() >= kEndSign.size() &&
        std::string_view(held_).substr(held_.size() - kEndSign.size()) == kEndSign) {
      held_.resize(held_.size() - kEndSign.size());
    }
  }
  const auto keep_from = open_tail_start(held_);
  std::string out = held_.substr(0, keep_from);
  held_.erase(0, keep_from);
  return out;
}

std::string SignFilter::finish() {
  std::string out = std::move(held_);
  held_.clear();
  return out;
}

std::vector<SpeechSegment> segment_stream(std::span<const TokenChunk> chunks,
                                          const PunctuationSet& punctuation) {
  std::vector<SpeechSegment> segments;
  SpeechSegmenter segmenter(punctuation, [&](const SpeechSegment& s) { segments.push_back(s); });
  for (const auto& chunk : chunks) segmenter.feed(chunk.text);
  segmenter.finish();
  return segments;
}

}  // namespace tabi
