#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "tabi/config.hpp"
#include "tabi/display.hpp"
#include "tabi/llm.hpp"
#include "tabi/session.hpp"

namespace tabi::support {

inline std::filesystem::path data_dir() { return TABI_DATA_DIR; }

inline ServerConfig fixture_config() { return ServerConfig::defaults(data_dir()); }

inline std::shared_ptr<const Resources> fixture_resources() {
  static const auto res = load_resources(fixture_config());
  return res;
}

inline std::shared_ptr<const Resources> resources_with_caps(std::array<int, kPhaseCount> caps) {
  auto config = fixture_config();
  config.phase_caps = caps;
  return load_resources(config);
}

/// Answers by prompt kind: course ids for selection prompts, two spot names
/// for extraction prompts and a fixed line otherwise. Never emits the sign
/// unless told to.
class PromptAwareBackend : public Backend {
 public:
  PromptAwareBackend(std::string reply = "なるほど、そうなんですね。", std::string ids = "IDS: C02, C05",
                     std::string spots = "SPOTS: 清水寺、金閣寺")
      : reply_(std::move(reply)), ids_(std::move(ids)), spots_(std::move(spots)) {}

  void stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) override {
    std::string text = reply_;
    if (prompt.template_id == kCourseSelectionTemplate) text = ids_;
    else if (prompt.template_id == kSpotExtractionTemplate || prompt.template_id == kSpotExtractionStrictTemplate)
      text = spots_;
    else if (sign_every_turn_) text += "[END]";
    ++calls_;
    on_chunk({text, true});
  }

  void set_sign_every_turn(bool on) { sign_every_turn_ = on; }
  int calls() const { return calls_; }

 private:
  std::string reply_;
  std::string ids_;
  std::string spots_;
  bool sign_every_turn_ = false;
  int calls_ = 0;
};

/// Display universe with `spots` synthetic spots and `courses` course titles.
/// Symbol k < spots is spot k; symbol spots + c is course c. Names never
/// contain each other.
struct DisplayUniverse {
  DisplayIndex index;
  int spot_count = 0;
  std::vector<std::string> names;

  DisplayUniverse(int spots, int courses) : spot_count(spots) {
    std::vector<SpotInfo> s;
    std::vector<ModelCourse> c;
    const char* letters = "ABCDEFGHIJKLMNOP";
    for (int i = 0; i < spots; ++i) {
      SpotInfo info;
      info.name = std::string("名所") + letters[i] + "寺";
      info.furigana = "めいしょ";
      info.stay_minutes = 30;
      names.push_back(info.name);
      s.push_back(info);
    }
    for (int i = 0; i < courses; ++i) {
      ModelCourse m;
      m.course_id = "K" + std::to_string(i);
      m.title = std::string("周遊プラン") + letters[i];
      m.spots = {s[0].name, s[1].name};
      m.hero_images = {"a.jpg"};
      names.push_back(m.title);
      c.push_back(m);
    }
    index = DisplayIndex(std::move(s), std::move(c));
  }

  std::string utterance(const std::vector<int>& symbols) const {
    std::string out = "本日は";
    for (int k : symbols) out += names[static_cast<std::size_t>(k)] + "、";
    return out + "いかがでしょう。";
  }
};

inline std::vector<ScriptEntry> script_of(std::initializer_list<const char*> lines) {
  std::vector<ScriptEntry> script;
  for (const char* l : lines) script.push_back(parse_script_line(l));
  return script;
}

}  // namespace tabi::support
