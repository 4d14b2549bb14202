#include "tabi/courses.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>

#include "tabi/error.hpp"
#include "tabi/llm.hpp"
#include "tabi/prompt.hpp"
#include "tabi/text.hpp"

namespace tabi {
namespace {

enum class Script { kanji, katakana, hiragana, ascii_word, other };

Script classify(char32_t cp) {
  if ((cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0x3400 && cp <= 0x4DBF) || cp == U'々') {
    return Script::kanji;
  }
  if (cp >= 0x30A0 && cp <= 0x30FF) return Script::katakana;
  if (cp >= 0x3040 && cp <= 0x309F) return Script::hiragana;
  if ((cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || (cp >= U'0' && cp <= U'9')) {
    return Script::ascii_word;
  }
  return Script::other;
}

bool keep_run(Script script, std::size_t length) {
  switch (script) {
    case Script::kanji:
    case Script::katakana: return length >= 2;
    case Script::ascii_word: return length >= 3;
    default: return false;
  }
}

// Last line carrying `tag`, else the whole text.
std::string_view tagged_payload(std::string_view output, std::string_view tag) {
  std::string_view found;
  bool have = false;
  std::size_t pos = 0;
  while (pos <= output.size()) {
    const auto nl = output.find('\n', pos);
    const auto line = output.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const auto at = line.find(tag);
    if (at != std::string_view::npos) {
      found = line.substr(at + tag.size());
      have = true;
    }
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
  return have ? found : output;
}

bool is_id_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
         c == '-';
}

}  // namespace

ModelCourse course_from_json(const nlohmann::json& j) {
  ModelCourse c;
  c.course_id = j.at("id").get<std::string>();
  c.title = j.at("title").get<std::string>();
  c.summary = j.at("summary").get<std::string>();
  c.persona = j.at("persona").get<std::string>();
  c.spots = j.at("spots").get<std::vector<std::string>>();
  c.hero_images = j.value("images", std::vector<std::string>{});
  if (c.spots.size() < 2) throw Error(ErrorCode::config_error, c.course_id + ": needs at least two spots");
  if (c.hero_images.empty() || c.hero_images.size() > 4) {
    throw Error(ErrorCode::config_error, c.course_id + ": needs 1..4 hero images");
  }
  return c;
}

nlohmann::json to_json(const ModelCourse& c) {
  return {{"id", c.course_id}, {"title", c.title},   {"summary", c.summary},
          {"persona", c.persona}, {"spots", c.spots}, {"images", c.hero_images}};
}

CourseCatalog::CourseCatalog(std::vector<ModelCourse> courses) : courses_(std::move(courses)) {
  std::set<std::string> ids;
  for (const auto& c : courses_) {
    if (!ids.insert(c.course_id).second) {
      throw Error(ErrorCode::config_error, "duplicate course id: " + c.course_id);
    }
  }
}

CourseCatalog CourseCatalog::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot open catalog: " + path.string());
  std::vector<ModelCourse> courses;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::config_error, path.string() + ":" + std::to_string(n) + ": bad record");
    }
    try {
      courses.push_back(course_from_json(j));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::config_error, path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return CourseCatalog(std::move(courses));
}

void CourseCatalog::validate_spots(const KnowledgeHub& hub) const {
  for (const auto& c : courses_) {
    for (const auto& spot : c.spots) hub.get_spot(spot);
  }
}

const ModelCourse* CourseCatalog::find(std::string_view course_id) const {
  const auto it = std::find_if(courses_.begin(), courses_.end(),
                               [&](const ModelCourse& c) { return c.course_id == course_id; });
  return it == courses_.end() ? nullptr : &*it;
}

std::vector<std::string> CourseCatalog::digest() const {
  std::vector<std::string> lines;
  for (const auto& c : courses_) {
    lines.push_back(c.course_id + ": " + c.title + ": " + c.summary + "（" + c.persona + "）");
  }
  return lines;
}

std::string course_summary_line(const ModelCourse& course, std::string_view label) {
  return "コース" + std::string(label) + ": " + course.title + "。" + course.summary + "（" +
         text::join(course.spots, "-") + "）";
}

std::vector<std::string> extract_keywords(std::string_view input) {
  std::vector<std::string> keywords;
  const auto cps = text::decode(input);
  std::size_t i = 0;
  while (i < cps.size()) {
    const auto script = classify(cps[i]);
    std::size_t j = i + 1;
    while (j < cps.size() && classify(cps[j]) == script) ++j;
    if (keep_run(script, j - i)) {
      std::vector<char32_t> run(cps.begin() + static_cast<std::ptrdiff_t>(i),
                                cps.begin() + static_cast<std::ptrdiff_t>(j));
      auto word = text::encode(run);
      if (script == Script::ascii_word) word = text::to_lower_ascii(word);
      if (std::find(keywords.begin(), keywords.end(), word) == keywords.end()) keywords.push_back(word);
    }
    i = j;
  }
  return keywords;
}

std::vector<std::string> course_keywords(const ModelCourse& course) {
  return extract_keywords(course.title + "\n" + course.summary + "\n" + course.persona);
}

int fallback_score(const ModelCourse& course, std::string_view customer_text) {
  int score = 0;
  for (const auto& keyword : course_keywords(course)) {
    if (customer_text.find(keyword) != std::string_view::npos) ++score;
  }
  return score;
}

std::string customer_text(std::span<const DialogueTurn> history) {
  std::string out;
  for (const auto& turn : history) {
    if (turn.speaker != Speaker::customer) continue;
    out += text::to_lower_ascii(turn.text);
    out += '\n';
  }
  return out;
}

std::array<std::size_t, 2> rank_top2(const CourseCatalog& catalog, std::span<const DialogueTurn> history) {
  if (catalog.size() < 2) {
    throw Error(ErrorCode::catalog_too_small, "course selection needs at least two courses");
  }
  const auto said = customer_text(history);
  std::vector<std::pair<int, std::size_t>> scored;
  for (std::size_t i = 0; i < catalog.size(); ++i) {
    scored.emplace_back(fallback_score(catalog.courses()[i], said), i);
  }
  std::stable_sort(scored.begin(), scored.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  return {scored[0].second, scored[1].second};
}

std::pair<std::string, std::string> parse_two_ids(std::string_view backend_output,
                                                  const CourseCatalog& catalog) {
  const auto payload = tagged_payload(backend_output, "IDS:");
  std::vector<std::string> ids;
  std::size_t i = 0;
  while (i < payload.size()) {
    if (!is_id_char(payload[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < payload.size() && is_id_char(payload[j])) ++j;
    ids.emplace_back(payload.substr(i, j - i));
    i = j;
  }
  if (ids.size() != 2) {
    throw Error(ErrorCode::parse_failure,
                "expected exactly two course ids, got " + std::to_string(ids.size()));
  }
  for (const auto& id : ids) {
    if (!catalog.find(id)) throw Error(ErrorCode::parse_failure, "unknown-id: " + id);
  }
  if (ids[0] == ids[1]) throw Error(ErrorCode::parse_failure, "duplicate id: " + ids[0]);
  return {ids[0], ids[1]};
}

CourseSelection select_top2(std::span<const DialogueTurn> history, const CourseCatalog& catalog,
                            LlmGateway* gateway, const PromptLibrary& prompts) {
  if (catalog.size() < 2) {
    throw Error(ErrorCode::catalog_too_small, "course selection needs at least two courses");
  }
  if (gateway) {
    const auto digest = catalog.digest();
    const auto prompt = build_course_selection_prompt(prompts, history, digest);
    for (int attempt = 0; attempt < 2; ++attempt) {
      try {
        const auto [first, second] = parse_two_ids(gateway->complete(prompt), catalog);
        return {{*catalog.find(first), *catalog.find(second)}, SelectionSource::backend};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::parse_failure && !is_backend_error(e.code())) throw;
      }
    }
  }
  const auto [a, b] = rank_top2(catalog, history);
  return {{catalog.courses()[a], catalog.courses()[b]}, SelectionSource::fallback};
}

std::string normalize_spot_name(std::string_view raw) {
  static const std::vector<std::pair<char32_t, char32_t>> kBrackets = {
      {U'（', U'）'}, {U'(', U')'}, {U'【', U'】'}, {U'[', U']'}, {U'［', U'］'}};
  static const std::set<char32_t> kQuotes = {U'「', U'」', U'『', U'』', U'"', U'\'', U'“', U'”'};

  auto cps = text::decode(text::trim(raw));
  std::vector<char32_t> out;
  std::vector<char32_t> closers;
  for (char32_t cp : cps) {
    if (!closers.empty() && cp == closers.back()) {
      closers.pop_back();
      continue;
    }
    const auto opener = std::find_if(kBrackets.begin(), kBrackets.end(),
                                     [&](const auto& b) { return b.first == cp; });
    if (opener != kBrackets.end()) {
      closers.push_back(opener->second);
      continue;
    }
    if (!closers.empty() || kQuotes.count(cp)) continue;
    out.push_back(cp);
  }

  // Leading list markers: bullets, "1." / "1)" / "１．", circled digits.
  std::size_t start = 0;
  while (start < out.size() && text::is_space(out[start])) ++start;
  if (start < out.size() && (out[start] == U'・' || out[start] == U'-' || out[start] == U'*' ||
                             out[start] == U'•' || (out[start] >= U'①' && out[start] <= U'⑳'))) {
    ++start;
  } else {
    std::size_t d = start;
    while (d < out.size() && ((out[d] >= U'0' && out[d] <= U'9') || (out[d] >= U'０' && out[d] <= U'９'))) ++d;
    if (d > start && d < out.size() &&
        (out[d] == U'.' || out[d] == U')' || out[d] == U'．' || out[d] == U'）' || out[d] == U'、')) {
      start = d + 1;
    }
  }
  out.erase(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(start));
  return std::string(text::trim(text::encode(out)));
}

std::vector<std::string> split_spot_names(std::string_view backend_output) {
  const auto payload = std::string(tagged_payload(backend_output, "SPOTS:"));
  std::string unified = payload;
  for (std::string_view sep : {"、", "，", "／", "\n"}) unified = text::replace_all(unified, sep, ",");
  unified = text::replace_all(unified, "/", ",");
  std::vector<std::string> names;
  std::size_t pos = 0;
  while (pos <= unified.size()) {
    const auto comma = unified.find(',', pos);
    const auto piece = std::string_view(unified).substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    auto name = normalize_spot_name(piece);
    if (!name.empty()) names.push_back(std::move(name));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return names;
}

std::array<SpotInfo, 2> parse_spot_decision(std::string_view backend_output, const KnowledgeHub& hub) {
  const auto names = split_spot_names(backend_output);
  if (names.size() != 2) {
    throw Error(ErrorCode::parse_failure,
                "expected exactly two spot names, got " + std::to_string(names.size()));
  }
  std::array<SpotInfo, 2> spots;
  for (std::size_t i = 0; i < 2; ++i) {
    try {
      spots[i] = hub.get_spot(names[i]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::unknown_spot) throw;
      throw Error(ErrorCode::parse_failure, "unresolvable spot: " + names[i]);
    }
  }
  if (spots[0].name == spots[1].name) {
    throw Error(ErrorCode::parse_failure, "the two spots are the same: " + spots[0].name);
  }
  return spots;
}

SpotDecision extract_spots(std::span<const DialogueTurn> history, LlmGateway& gateway,
                           const PromptLibrary& prompts, const KnowledgeHub& hub) {
  std::string last_error;
  for (bool strict : {false, true}) {
    try {
      const auto prompt = build_spot_extraction_prompt(prompts, history, strict);
      SpotDecision decision;
      decision.spots = parse_spot_decision(gateway.complete(prompt), hub);
      decision.source_turn_index = history.empty() ? 0 : history.back().index;
      return decision;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::parse_failure && !is_backend_error(e.code())) throw;
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::extraction_failure, "spot extraction failed: " + last_error);
}

}  // namespace tabi
