#include "tabi/transcript.hpp"

#include <chrono>
#include <ctime>
#include <sstream>

#include "tabi/error.hpp"
#include "tabi/text.hpp"
#include "tabi/wire.hpp"

namespace tabi {
namespace {

nlohmann::json tape_to_json(const std::vector<ScriptEntry>& tape) {
  auto out = nlohmann::json::array();
  for (const auto& entry : tape) {
    if (entry.failure) {
      nlohmann::json e{{"error", to_string(*entry.failure)}};
      if (!entry.text.empty()) e["text"] = entry.text;
      out.push_back(std::move(e));
    } else {
      out.push_back({{"text", entry.text}});
    }
  }
  return out;
}

ErrorCode backend_error_from_string(std::string_view name) {
  for (auto code : {ErrorCode::backend_timeout, ErrorCode::backend_unavailable, ErrorCode::malformed_response}) {
    if (to_string(code) == name) return code;
  }
  throw Error(ErrorCode::parse_failure, "unknown tape error: " + std::string(name));
}

}  // namespace

nlohmann::json state_snapshot(const SessionState& state) {
  return {{"phase", ordinal(state.current_phase)},
          {"status", to_string(state.status)},
          {"turns_in_phase", state.turns_in_phase}};
}

nlohmann::json to_json(const TranscriptRecord& r) {
  nlohmann::json j{{"index", r.index},
                   {"phase", ordinal(r.phase)},
                   {"speaker", to_string(r.speaker)},
                   {"text", r.text},
                   {"timestamp", r.timestamp}};
  if (!r.tape.empty()) j["tape"] = tape_to_json(r.tape);
  if (r.display) j["display"] = *r.display;
  if (r.state) j["state"] = *r.state;
  return j;
}

TranscriptRecord transcript_record_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_failure, "transcript record is not an object");
  TranscriptRecord r;
  try {
    r.index = j.at("index").get<int>();
    r.phase = phase_from_ordinal(j.at("phase").get<int>());
    r.speaker = speaker_from_string(j.at("speaker").get<std::string>());
    r.text = j.at("text").get<std::string>();
    r.timestamp = j.value("timestamp", "");
    if (j.contains("tape")) {
      for (const auto& entry : j.at("tape")) {
        if (entry.contains("error")) {
          r.tape.push_back({entry.value("text", ""), backend_error_from_string(entry.at("error").get<std::string>())});
        } else {
          r.tape.push_back({entry.at("text").get<std::string>(), std::nullopt});
        }
      }
    }
    if (j.contains("display")) r.display = j.at("display");
    if (j.contains("state")) r.state = j.at("state");
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_failure, std::string("bad transcript record: ") + e.what());
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_failure, std::string("bad transcript record: ") + e.what());
  }
  return r;
}

std::vector<TranscriptRecord> parse_transcript(std::istream& in) {
  std::vector<TranscriptRecord> records;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (text::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(ErrorCode::parse_failure, "line " + std::to_string(n) + ": invalid JSON");
    }
    records.push_back(transcript_record_from_json(j));
  }
  if (records.empty()) throw Error(ErrorCode::parse_failure, "transcript is empty");
  for (std::size_t i = 1; i < records.size(); ++i) {
    if (records[i].index <= records[i - 1].index) {
      throw Error(ErrorCode::parse_failure, "transcript indices must strictly increase");
    }
  }
  return records;
}

std::vector<TranscriptRecord> read_transcript(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::parse_failure, "cannot open transcript: " + path.string());
  return parse_transcript(in);
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[48];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

std::vector<TranscriptRecord> turn_records(const Session& session, const TurnResult& result) {
  const auto& history = session.state().history;
  std::vector<TranscriptRecord> records;
  const auto stamp = utc_timestamp();
  if (history.size() >= 2 && history[history.size() - 2].speaker == Speaker::customer) {
    const auto& c = history[history.size() - 2];
    records.push_back({c.index, c.phase, c.speaker, c.text, stamp, {}, std::nullopt, std::nullopt});
  }
  const auto& s = history.back();
  records.push_back({s.index, s.phase, s.speaker, s.text, stamp, result.tape, to_json(session.display()),
                     state_snapshot(session.state())});
  return records;
}

TranscriptWriter::TranscriptWriter(const std::filesystem::path& path) : path_(path) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  out_.open(path_, std::ios::app);
  if (!out_) throw Error(ErrorCode::config_error, "cannot write transcript: " + path_.string());
}

void TranscriptWriter::append(const TranscriptRecord& record) {
  std::lock_guard lock(mutex_);
  out_ << to_json(record).dump() << '\n';
  out_.flush();
}

bool ReplayResult::matches_log() const {
  if (logged_state) {
    if (logged_state->value("phase", 0) != ordinal(state.current_phase)) return false;
    if (logged_state->value("status", "") != to_string(state.status)) return false;
  }
  if (logged_display && *logged_display != to_json(display)) return false;
  return true;
}

ReplayResult replay(const std::vector<TranscriptRecord>& records, std::shared_ptr<const Resources> resources,
                    BackendHandle handle) {
  if (records.empty()) throw Error(ErrorCode::parse_failure, "transcript is empty");
  if (records.front().speaker != Speaker::system) {
    throw Error(ErrorCode::parse_failure, "transcript must start with the system greeting");
  }

  std::vector<ScriptEntry> script;
  ReplayResult result;
  for (const auto& r : records) {
    if (r.speaker != Speaker::system) continue;
    if (r.tape.empty()) {
      script.push_back({r.text, std::nullopt});
    } else {
      script.insert(script.end(), r.tape.begin(), r.tape.end());
    }
    if (r.state) result.logged_state = r.state;
    if (r.display) result.logged_display = r.display;
  }

  auto backend = std::make_unique<ScriptedBackend>(std::move(script));
  auto* scripted = backend.get();
  handle.kind = BackendKind::scripted_mock;
  Session session("replay", std::move(resources), std::move(backend), handle);
  session.start();

  for (const auto& r : records) {
    if (r.speaker != Speaker::customer) continue;
    if (session.state().status != SessionStatus::active) {
      throw Error(ErrorCode::parse_failure, "transcript continues after the session ended");
    }
    while (true) {
      try {
        session.advance(r.text);
        break;
      } catch (const Error& e) {
        // A logged turn that failed in the backend was retried by the customer.
        if (!is_backend_error(e.code()) || scripted->remaining() == 0) throw;
      }
    }
  }
  result.state = session.state();
  result.display = session.display();
  return result;
}

ReplayResult replay(const std::filesystem::path& transcript, std::shared_ptr<const Resources> resources,
                    BackendHandle handle) {
  return replay(read_transcript(transcript), std::move(resources), handle);
}

}  // namespace tabi
