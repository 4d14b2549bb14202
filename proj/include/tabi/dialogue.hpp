#pragma once

#include <string>
#include <string_view>

#include "tabi/phase.hpp"

namespace tabi {

enum class Speaker { system, customer };

std::string_view to_string(Speaker speaker);
Speaker speaker_from_string(std::string_view name);

struct DialogueTurn {
  Speaker speaker = Speaker::system;
  std::string text;
  PhaseId phase = PhaseId::introduction;
  int index = 0;

  friend bool operator==(const DialogueTurn&, const DialogueTurn&) = default;
};

}  // namespace tabi
