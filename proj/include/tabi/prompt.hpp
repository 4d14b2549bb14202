#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tabi/dialogue.hpp"

namespace tabi {

inline constexpr std::string_view kSystemSpeakerName = "Shoko";
inline constexpr std::string_view kCustomerSpeakerName = "Customer";
inline constexpr std::string_view kContextDelimiter = "---";
inline constexpr std::string_view kSectionDelimiter = "===";
inline constexpr std::size_t kMaxShots = 2;

/// One prompt layout: persona, task instruction, context with `{slot}`
/// placeholders, and up to two example dialogues.
///
/// File format (plain text):
///
///     <persona paragraph>
///
///     <instruction paragraphs>
///     ---
///     <context lines with {slot_name} placeholders>
///     ===
///     <shot 1>
///
///     <shot 2>
///
/// The `===` line and the shot section are optional; shots are separated by
/// blank lines. The template id is the file stem.
struct PromptTemplate {
  std::string template_id;
  std::string persona_block;
  std::string instruction_block;
  std::string context_block;
  std::vector<std::string> shot_block;

  static PromptTemplate parse(std::string template_id, std::string_view source);

  /// Distinct slot names in order of first appearance.
  std::vector<std::string> context_slots() const;
};

/// Slot bindings. Values are plain text; providers format structured data
/// before binding.
using PromptContext = std::map<std::string, std::string, std::less<>>;

struct RenderedPrompt {
  std::string template_id;
  std::string text;
  std::string speaker_cue;
  std::size_t history_turns_kept = 0;
};

/// Escapes any line of `value` that would read as a section delimiter.
std::string escape_delimiters(std::string_view value);

/// Immutable once loaded; rendering is safe from any number of threads.
class PromptLibrary {
 public:
  PromptLibrary() = default;

  /// Loads every `*.txt` file in `dir`.
  static PromptLibrary load_directory(const std::filesystem::path& dir);

  void add(PromptTemplate tmpl);
  bool contains(std::string_view template_id) const;
  const PromptTemplate& at(std::string_view template_id) const;
  std::vector<std::string> template_ids() const;

  /// Maximum prompt length in codepoints; 0 disables truncation.
  void set_budget(std::size_t max_codepoints) { budget_ = max_codepoints; }
  std::size_t budget() const { return budget_; }

  /// Renders persona, instruction, context, shots, history, then the bare
  /// speaker cue. When over budget the oldest history turns are dropped.
  RenderedPrompt render(std::string_view template_id, const PromptContext& context,
                        std::span<const DialogueTurn> history) const;

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
  std::size_t budget_ = 0;
};

inline constexpr std::string_view kCourseSelectionTemplate = "course_selection";
inline constexpr std::string_view kSpotExtractionTemplate = "spot_extraction";
inline constexpr std::string_view kSpotExtractionStrictTemplate = "spot_extraction_strict";

/// Backend prompt asking for exactly two course ids on an `IDS:` line.
RenderedPrompt build_course_selection_prompt(const PromptLibrary& library,
                                             std::span<const DialogueTurn> history,
                                             std::span<const std::string> catalog_digest);

/// Backend prompt asking for the two finally decided spot names on a
/// `SPOTS:` line. `strict` selects the retry wording.
RenderedPrompt build_spot_extraction_prompt(const PromptLibrary& library,
                                            std::span<const DialogueTurn> history,
                                            bool strict = false);

}  // namespace tabi
