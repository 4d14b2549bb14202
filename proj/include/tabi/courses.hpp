#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tabi/dialogue.hpp"
#include "tabi/knowledge.hpp"

namespace tabi {

class LlmGateway;
class PromptLibrary;

struct ModelCourse {
  std::string course_id;
  std::string title;
  std::string summary;
  std::string persona;
  std::vector<std::string> spots;        // visiting order, at least two
  std::vector<std::string> hero_images;  // 1..4

  friend bool operator==(const ModelCourse&, const ModelCourse&) = default;
};

ModelCourse course_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ModelCourse& course);

/// Persona-paired model courses. Immutable after load.
class CourseCatalog {
 public:
  CourseCatalog() = default;
  explicit CourseCatalog(std::vector<ModelCourse> courses);
  /// One JSON record per line.
  static CourseCatalog load(const std::filesystem::path& path);

  /// Throws `unknown-spot` if a course names a spot the hub cannot resolve.
  void validate_spots(const KnowledgeHub& hub) const;

  const std::vector<ModelCourse>& courses() const { return courses_; }
  std::size_t size() const { return courses_.size(); }
  const ModelCourse* find(std::string_view course_id) const;

  /// "<id>: <title>: <summary>（<persona>）", one line per course.
  std::vector<std::string> digest() const;

 private:
  std::vector<ModelCourse> courses_;
};

/// "コースA: <title>。<summary>（spot-spot-...）" for the main prompt.
std::string course_summary_line(const ModelCourse& course, std::string_view label);

/// Script-run keywords: kanji and katakana runs of two or more codepoints
/// and lowercased ASCII words of three or more characters.
std::vector<std::string> extract_keywords(std::string_view text);
std::vector<std::string> course_keywords(const ModelCourse& course);

/// Number of distinct course keywords that occur in `customer_text`.
int fallback_score(const ModelCourse& course, std::string_view customer_text);

/// Concatenated customer turns, ASCII lowercased.
std::string customer_text(std::span<const DialogueTurn> history);

/// Indices of the two best courses by fallback score, ties by catalog order.
std::array<std::size_t, 2> rank_top2(const CourseCatalog& catalog, std::span<const DialogueTurn> history);

/// Reads two distinct known ids, from an `IDS:` line when present.
/// Throws `parse-failure`.
std::pair<std::string, std::string> parse_two_ids(std::string_view backend_output,
                                                  const CourseCatalog& catalog);

enum class SelectionSource { backend, fallback };

struct CourseSelection {
  std::array<ModelCourse, 2> courses;
  SelectionSource source = SelectionSource::backend;
};

/// Backend choice first (one retry), then the fallback scorer. `gateway` may
/// be null to score directly.
CourseSelection select_top2(std::span<const DialogueTurn> history, const CourseCatalog& catalog,
                            LlmGateway* gateway, const PromptLibrary& prompts);

/// Trims, drops list markers, quotes and bracketed readings.
std::string normalize_spot_name(std::string_view raw);

/// Splits a `SPOTS:` line (or the whole output) into normalized names.
std::vector<std::string> split_spot_names(std::string_view backend_output);

/// Exactly two distinct resolvable spots, or `parse-failure`.
std::array<SpotInfo, 2> parse_spot_decision(std::string_view backend_output, const KnowledgeHub& hub);

struct SpotDecision {
  std::array<SpotInfo, 2> spots;
  int source_turn_index = 0;
};

/// Asks the backend for the decided spots; retries once with the strict
/// prompt, then throws `extraction-failure`.
SpotDecision extract_spots(std::span<const DialogueTurn> history, LlmGateway& gateway,
                           const PromptLibrary& prompts, const KnowledgeHub& hub);

}  // namespace tabi
