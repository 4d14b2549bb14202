#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tabi/session.hpp"

namespace tabi {

/// One line of a transcript. System records additionally carry the backend
/// tape for the turn and snapshots of the display and session state, which
/// is what makes a transcript replayable and self-checking.
struct TranscriptRecord {
  int index = 0;
  PhaseId phase = PhaseId::introduction;
  Speaker speaker = Speaker::system;
  std::string text;
  std::string timestamp;
  std::vector<ScriptEntry> tape;
  std::optional<nlohmann::json> display;
  std::optional<nlohmann::json> state;  // {"phase", "status", "turns_in_phase"}
};

nlohmann::json to_json(const TranscriptRecord& record);
TranscriptRecord transcript_record_from_json(const nlohmann::json& j);

/// Throws `parse-failure` on an empty input or any bad line.
std::vector<TranscriptRecord> parse_transcript(std::istream& in);
std::vector<TranscriptRecord> read_transcript(const std::filesystem::path& path);

std::string utc_timestamp();

/// Records produced by a completed turn: the system record for a greeting,
/// or the customer record plus the system record for an exchange.
std::vector<TranscriptRecord> turn_records(const Session& session, const TurnResult& result);

/// Appends records to a file, one JSON object per line, flushing each.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(const std::filesystem::path& path);
  void append(const TranscriptRecord& record);
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mutex_;
};

struct ReplayResult {
  SessionState state;
  DisplayState display;
  std::optional<nlohmann::json> logged_state;
  std::optional<nlohmann::json> logged_display;

  /// True when the replayed final phase/status and display equal the last
  /// logged snapshots (trivially true when the transcript has none).
  bool matches_log() const;
};

/// Re-executes the customer side of a transcript against a scripted mock
/// built from the logged tapes.
ReplayResult replay(const std::vector<TranscriptRecord>& records, std::shared_ptr<const Resources> resources,
                    BackendHandle handle = {});
ReplayResult replay(const std::filesystem::path& transcript, std::shared_ptr<const Resources> resources,
                    BackendHandle handle = {});

nlohmann::json state_snapshot(const SessionState& state);

}  // namespace tabi
