#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "tabi/error.hpp"
#include "tabi/session.hpp"
#include "tabi/transcript.hpp"

namespace tabi {

/// A headless dialogue: `customer:` lines are utterances in order and
/// `backend:` lines are the mock completions in call order. Blank lines and
/// `#` comments are skipped.
struct SimulationScript {
  std::vector<std::string> customer;
  std::vector<ScriptEntry> backend;

  static SimulationScript parse(std::istream& in, std::string_view source_name = "script");
  static SimulationScript load(const std::filesystem::path& path);
};

struct SimulationHooks {
  /// Called for the greeting (empty customer text) and each completed turn.
  std::function<void(std::string_view customer, const TurnResult& result)> on_turn;
  /// Called when a turn fails in the backend; the turn is then retried.
  std::function<void(const Error& error)> on_backend_error;
};

struct SimulationRun {
  std::vector<TurnResult> turns;  // greeting first
  std::vector<TranscriptRecord> records;
  SessionState state;
  DisplayState display;
};

/// Runs the script against a scripted mock until the customer lines run out
/// or the session ends. Backend failures retry the same utterance.
SimulationRun run_simulation(const SimulationScript& script, std::shared_ptr<const Resources> resources,
                             BackendHandle handle = {}, const SimulationHooks& hooks = {});

}  // namespace tabi
