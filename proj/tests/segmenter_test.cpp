#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tabi/error.hpp"
#include "tabi/segmenter.hpp"

using namespace tabi;

namespace {

std::vector<SpeechSegment> run(const std::vector<std::string>& chunks, const PunctuationSet& p = {}) {
  std::vector<TokenChunk> tc;
  for (std::size_t i = 0; i < chunks.size(); ++i) tc.push_back({chunks[i], i + 1 == chunks.size()});
  return segment_stream(tc, p);
}

std::vector<std::string> texts(const std::vector<SpeechSegment>& segs) {
  std::vector<std::string> out;
  for (const auto& s : segs) out.push_back(s.text);
  return out;
}

}  // namespace

TEST(Segmenter, Examples) {
  EXPECT_EQ(texts(run({"こん", "にちは。", "元気", "ですか？"})),
            (std::vector<std::string>{"こんにちは。", "元気ですか？"}));
  const auto flush = run({"はい"});
  ASSERT_EQ(flush.size(), 1u);
  EXPECT_EQ(flush[0].text, "はい");
  EXPECT_TRUE(flush[0].terminal);
}

TEST(Segmenter, EachPunctuationCodepointCuts) {
  EXPECT_EQ(texts(run({"えっ！？本当"})), (std::vector<std::string>{"えっ！", "？", "本当"}));
  EXPECT_EQ(texts(run({"A, b. c"})), (std::vector<std::string>{"A,", " b.", " c"}));
  const auto segs = run({"一。二、"});
  ASSERT_EQ(segs.size(), 2u);
  EXPECT_FALSE(segs[1].terminal);
  EXPECT_EQ(segs[0].index, 0);
  EXPECT_EQ(segs[1].index, 1);
}

TEST(Segmenter, MultibyteCharacterSplitAcrossChunks) {
  const std::string full = "京都。";
  std::vector<std::string> bytes;
  for (char c : full) bytes.emplace_back(1, c);
  EXPECT_EQ(texts(run(bytes)), (std::vector<std::string>{"京都。"}));
}

TEST(Segmenter, CustomPunctuationSet) {
  const PunctuationSet only_period("。");
  EXPECT_EQ(texts(run({"はい、そうです。"}, only_period)), (std::vector<std::string>{"はい、そうです。"}));
  EXPECT_THROW(PunctuationSet(""), Error);
  EXPECT_TRUE(PunctuationSet().contains(U'、'));
  EXPECT_TRUE(PunctuationSet().contains(U'!'));
  EXPECT_FALSE(PunctuationSet().contains(U'ー'));
}

TEST(Segmenter, EmitsBeforeLaterChunksAreProcessed) {
  std::vector<std::string> log;
  SpeechSegmenter seg(PunctuationSet(), [&](const SpeechSegment& s) { log.push_back("seg:" + s.text); });
  for (const auto* chunk : {"こんにち", "は。元", "気", "？"}) {
    log.push_back(std::string("chunk:") + chunk);
    seg.feed(chunk);
  }
  seg.finish();
  EXPECT_EQ(log, (std::vector<std::string>{"chunk:こんにち", "chunk:は。元", "seg:こんにちは。", "chunk:気", "chunk:？",
                                           "seg:元気？"}));
}

TEST(Segmenter, RandomStreamsAgreeWithNaiveSplit) {
  std::mt19937 rng(2024);
  const std::vector<std::string> alphabet = {"あ", "い", "か", "ン", "京", "a", "Z", " ", "。", "、", "！", "？", "!", "?", ".", ","};
  const std::set<std::string> marks = {"。", "、", "！", "？", "!", "?", ".", ","};
  for (int trial = 0; trial < 1000; ++trial) {
    std::string full;
    const int len = static_cast<int>(rng() % 40);
    for (int i = 0; i < len; ++i) full += alphabet[rng() % alphabet.size()];
    std::vector<std::string> chunks;
    std::size_t pos = 0;
    while (pos < full.size()) {
      const std::size_t n = 1 + rng() % 7;  // bytes, so chunks may split characters
      chunks.push_back(full.substr(pos, n));
      pos += n;
    }
    const auto segs = run(chunks);
    const auto expected = oracle::naive_split(full, marks);
    ASSERT_EQ(segs.size(), expected.size()) << full;
    std::string joined;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      EXPECT_EQ(segs[i].text, expected[i].text);
      EXPECT_EQ(segs[i].terminal, expected[i].terminal);
      EXPECT_EQ(segs[i].index, static_cast<int>(i));
      joined += segs[i].text;
    }
    EXPECT_EQ(joined, full);
  }
}

TEST(SignFilter, RemovesSignSplitAnywhere) {
  const std::string full = "はい、わかりました。[END]";
  for (std::size_t cut = 0; cut <= full.size(); ++cut) {
    SignFilter f;
    std::string out = f.feed(full.substr(0, cut));
    out += f.feed(full.substr(cut));
    out += f.finish();
    EXPECT_EQ(out, "はい、わかりました。") << cut;
  }
}

TEST(SignFilter, HoldsOnlyWhatCouldBecomeTheSign) {
  SignFilter f;
  EXPECT_EQ(f.feed("abc[E"), "abc");
  EXPECT_EQ(f.feed("X"), "[EX");
  EXPECT_EQ(f.feed("["), "");
  EXPECT_EQ(f.finish(), "[");
}

TEST(SignFilter, NestedSignLeavesNothing) {
  const std::string full = "あ[EN[END]D]い";
  for (std::size_t a = 0; a <= full.size(); ++a) {
    for (std::size_t b = a; b <= full.size(); ++b) {
      SignFilter f;
      std::string out = f.feed(full.substr(0, a));
      out += f.feed(full.substr(a, b - a));
      out += f.feed(full.substr(b));
      out += f.finish();
      EXPECT_EQ(out, "あい");
    }
  }
}
