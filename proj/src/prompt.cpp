#include "tabi/prompt.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tabi/error.hpp"
#include "tabi/text.hpp"

namespace tabi {
namespace {

bool is_delimiter_line(std::string_view line) {
  const auto t = text::trim(line);
  return t == kContextDelimiter || t == kSectionDelimiter;
}

bool is_blank(std::string_view line) { return text::trim(line).empty(); }

std::string join_trimmed(const std::vector<std::string>& lines, std::size_t begin, std::size_t end) {
  while (begin < end && is_blank(lines[begin])) ++begin;
  while (end > begin && is_blank(lines[end - 1])) --end;
  std::vector<std::string> kept(lines.begin() + static_cast<std::ptrdiff_t>(begin),
                                lines.begin() + static_cast<std::ptrdiff_t>(end));
  return text::join(kept, "\n");
}

bool is_slot_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

// Calls `on_slot(name)` for each `{name}` and `on_text(chunk)` for the rest.
template <typename OnText, typename OnSlot>
void scan_slots(std::string_view block, OnText on_text, OnSlot on_slot) {
  std::size_t pos = 0;
  while (pos < block.size()) {
    const auto open = block.find('{', pos);
    if (open == std::string_view::npos) break;
    const auto close = block.find('}', open + 1);
    if (close == std::string_view::npos) break;
    const auto name = block.substr(open + 1, close - open - 1);
    if (name.empty() || !std::all_of(name.begin(), name.end(), is_slot_char)) {
      on_text(block.substr(pos, open + 1 - pos));
      pos = open + 1;
      continue;
    }
    on_text(block.substr(pos, open - pos));
    on_slot(name);
    pos = close + 1;
  }
  on_text(block.substr(pos));
}

std::string fill(std::string_view block, const PromptContext& context) {
  std::string out;
  scan_slots(
      block, [&](std::string_view chunk) { out.append(chunk); },
      [&](std::string_view name) {
        const auto it = context.find(name);
        if (it == context.end()) {
          throw Error(ErrorCode::unbound_slot, "unbound slot: " + std::string(name));
        }
        out.append(escape_delimiters(it->second));
      });
  return out;
}

std::string history_line(const DialogueTurn& turn) {
  const auto label = turn.speaker == Speaker::system ? kSystemSpeakerName : kCustomerSpeakerName;
  return std::string(label) + ": " + text::flatten_newlines(turn.text);
}

}  // namespace

PromptTemplate PromptTemplate::parse(std::string template_id, std::string_view source) {
  const auto lines = text::split_lines(source);
  const auto dash = std::find_if(lines.begin(), lines.end(), [](const std::string& l) {
    return text::trim(l) == kContextDelimiter;
  });
  if (dash == lines.end()) {
    throw Error(ErrorCode::invalid_template, template_id + ": missing '---' context separator");
  }
  const auto dash_index = static_cast<std::size_t>(dash - lines.begin());

  PromptTemplate tmpl;
  tmpl.template_id = std::move(template_id);

  std::size_t head = 0;
  while (head < dash_index && is_blank(lines[head])) ++head;
  std::size_t persona_end = head;
  while (persona_end < dash_index && !is_blank(lines[persona_end])) ++persona_end;
  tmpl.persona_block = join_trimmed(lines, head, persona_end);
  tmpl.instruction_block = join_trimmed(lines, persona_end, dash_index);
  if (tmpl.persona_block.empty()) {
    throw Error(ErrorCode::invalid_template, tmpl.template_id + ": empty persona block");
  }

  std::vector<std::size_t> separators;
  for (std::size_t i = dash_index + 1; i < lines.size(); ++i) {
    const auto t = text::trim(lines[i]);
    if (t == kSectionDelimiter) separators.push_back(i);
    if (t == kContextDelimiter) {
      throw Error(ErrorCode::invalid_template, tmpl.template_id + ": repeated '---' separator");
    }
  }
  if (separators.size() > 2) {
    throw Error(ErrorCode::invalid_template, tmpl.template_id + ": too many '===' separators");
  }
  const auto context_end = separators.empty() ? lines.size() : separators[0];
  tmpl.context_block = join_trimmed(lines, dash_index + 1, context_end);

  if (!separators.empty()) {
    const auto shots_end = separators.size() == 2 ? separators[1] : lines.size();
    if (separators.size() == 2) {
      for (std::size_t i = separators[1] + 1; i < lines.size(); ++i) {
        if (!is_blank(lines[i])) {
          throw Error(ErrorCode::invalid_template,
                      tmpl.template_id + ": content after the shot section");
        }
      }
    }
    std::size_t i = separators[0] + 1;
    while (i < shots_end) {
      while (i < shots_end && is_blank(lines[i])) ++i;
      const auto start = i;
      while (i < shots_end && !is_blank(lines[i])) ++i;
      if (i > start) tmpl.shot_block.push_back(join_trimmed(lines, start, i));
    }
  }
  if (tmpl.shot_block.size() > kMaxShots) {
    throw Error(ErrorCode::invalid_template, tmpl.template_id + ": more than two shots");
  }
  return tmpl;
}

std::vector<std::string> PromptTemplate::context_slots() const {
  std::vector<std::string> names;
  for (const auto* block : {&persona_block, &instruction_block, &context_block}) {
    scan_slots(
        *block, [](std::string_view) {},
        [&](std::string_view name) {
          if (std::find(names.begin(), names.end(), name) == names.end()) names.emplace_back(name);
        });
  }
  return names;
}

std::string escape_delimiters(std::string_view value) {
  if (value.find(kContextDelimiter) == std::string_view::npos &&
      value.find(kSectionDelimiter) == std::string_view::npos) {
    return std::string(value);
  }
  auto lines = text::split_lines(value);
  for (auto& line : lines) {
    if (is_delimiter_line(line)) line.insert(0, "\\");
  }
  auto out = text::join(lines, "\n");
  if (!value.empty() && value.back() == '\n') out.push_back('\n');
  return out;
}

PromptLibrary PromptLibrary::load_directory(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::config_error, "prompt directory not found: " + dir.string());
  }
  PromptLibrary library;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".txt") continue;
    std::ifstream in(entry.path());
    std::stringstream buffer;
    buffer << in.rdbuf();
    library.add(PromptTemplate::parse(entry.path().stem().string(), buffer.str()));
  }
  return library;
}

void PromptLibrary::add(PromptTemplate tmpl) {
  auto id = tmpl.template_id;
  templates_.insert_or_assign(std::move(id), std::move(tmpl));
}

bool PromptLibrary::contains(std::string_view template_id) const {
  return templates_.find(template_id) != templates_.end();
}

const PromptTemplate& PromptLibrary::at(std::string_view template_id) const {
  const auto it = templates_.find(template_id);
  if (it == templates_.end()) {
    throw Error(ErrorCode::unknown_template, "unknown template: " + std::string(template_id));
  }
  return it->second;
}

std::vector<std::string> PromptLibrary::template_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : templates_) ids.push_back(id);
  return ids;
}

RenderedPrompt PromptLibrary::render(std::string_view template_id, const PromptContext& context,
                                     std::span<const DialogueTurn> history) const {
  const auto& tmpl = at(template_id);

  std::vector<std::string> head;
  head.push_back(fill(tmpl.persona_block, context));
  if (!tmpl.instruction_block.empty()) head.push_back(fill(tmpl.instruction_block, context));
  head.emplace_back(kContextDelimiter);
  const auto filled_context = fill(tmpl.context_block, context);
  if (!filled_context.empty()) head.push_back(filled_context);
  head.emplace_back(kSectionDelimiter);
  if (!tmpl.shot_block.empty()) head.push_back(text::join(tmpl.shot_block, "\n\n"));
  head.emplace_back(kSectionDelimiter);

  const std::string cue = std::string(kSystemSpeakerName) + ":";
  const auto fixed = text::join(head, "\n") + "\n";

  std::vector<std::string> lines;
  lines.reserve(history.size());
  for (const auto& turn : history) lines.push_back(history_line(turn));

  std::size_t first_kept = 0;
  if (budget_ > 0) {
    std::size_t used = text::codepoint_count(fixed) + text::codepoint_count(cue);
    first_kept = lines.size();
    while (first_kept > 0) {
      const auto cost = text::codepoint_count(lines[first_kept - 1]) + 1;
      if (used + cost > budget_) break;
      used += cost;
      --first_kept;
    }
  }

  RenderedPrompt prompt;
  prompt.template_id = tmpl.template_id;
  prompt.speaker_cue = cue;
  prompt.text = fixed;
  for (std::size_t i = first_kept; i < lines.size(); ++i) {
    prompt.text += lines[i];
    prompt.text += '\n';
  }
  prompt.text += cue;
  prompt.history_turns_kept = lines.size() - first_kept;
  return prompt;
}

RenderedPrompt build_course_selection_prompt(const PromptLibrary& library,
                                             std::span<const DialogueTurn> history,
                                             std::span<const std::string> catalog_digest) {
  if (catalog_digest.empty()) {
    throw Error(ErrorCode::empty_catalog, "course selection needs a non-empty catalog");
  }
  if (history.empty()) {
    throw Error(ErrorCode::empty_history, "course selection needs at least one dialogue turn");
  }
  std::vector<std::string> digest(catalog_digest.begin(), catalog_digest.end());
  PromptContext context{{"catalog", text::join(digest, "\n")}};
  return library.render(kCourseSelectionTemplate, context, history);
}

RenderedPrompt build_spot_extraction_prompt(const PromptLibrary& library,
                                            std::span<const DialogueTurn> history, bool strict) {
  return library.render(strict ? kSpotExtractionStrictTemplate : kSpotExtractionTemplate, {},
                        history);
}

}  // namespace tabi
