#include "tabi/llm.hpp"

#include <fstream>
#include <thread>

#include "tabi/text.hpp"

namespace tabi {

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::scripted_mock: return "scripted-mock";
    case BackendKind::echo_mock: return "echo-mock";
    case BackendKind::remote: return "remote";
  }
  return "?";
}

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "scripted-mock" || name == "scripted") return BackendKind::scripted_mock;
  if (name == "echo-mock" || name == "echo") return BackendKind::echo_mock;
  if (name == "remote") return BackendKind::remote;
  throw Error(ErrorCode::config_error, "unknown backend kind: " + std::string(name));
}

bool is_backend_error(ErrorCode code) {
  return code == ErrorCode::backend_timeout || code == ErrorCode::backend_unavailable ||
         code == ErrorCode::malformed_response;
}

ScriptEntry parse_script_line(std::string_view line) {
  if (line == "!timeout") return {"", ErrorCode::backend_timeout};
  if (line == "!unavailable") return {"", ErrorCode::backend_unavailable};
  if (line == "!malformed") return {"", ErrorCode::malformed_response};
  return {text::unescape_line(line), std::nullopt};
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptEntry> script, std::size_t chunk_codepoints)
    : script_(std::move(script)), chunk_codepoints_(chunk_codepoints == 0 ? 1 : chunk_codepoints) {}

std::vector<ScriptEntry> ScriptedBackend::load_script(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::config_error, "cannot open script: " + path.string());
  std::vector<ScriptEntry> script;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    script.push_back(parse_script_line(line));
  }
  return script;
}

std::size_t ScriptedBackend::remaining() const {
  std::lock_guard lock(mutex_);
  return script_.size() - cursor_;
}

void ScriptedBackend::stream(const RenderedPrompt&, const ChunkSink& on_chunk) {
  ++calls_;
  ScriptEntry entry;
  {
    std::lock_guard lock(mutex_);
    if (cursor_ >= script_.size()) {
      throw Error(ErrorCode::backend_unavailable, "scripted backend exhausted");
    }
    entry = script_[cursor_++];
  }
  const auto fail = [&] {
    throw Error(*entry.failure, "scripted failure: " + std::string(to_string(*entry.failure)));
  };
  const auto cps = text::decode(entry.text);
  if (entry.failure && cps.empty()) fail();
  if (cps.empty()) {
    if (on_chunk) on_chunk({"", true});
    return;
  }
  for (std::size_t i = 0; i < cps.size(); i += chunk_codepoints_) {
    const auto end = std::min(cps.size(), i + chunk_codepoints_);
    std::vector<char32_t> piece(cps.begin() + static_cast<std::ptrdiff_t>(i),
                                cps.begin() + static_cast<std::ptrdiff_t>(end));
    if (chunk_delay_.count() > 0) std::this_thread::sleep_for(chunk_delay_);
    if (on_chunk) on_chunk({text::encode(piece), end == cps.size() && !entry.failure});
  }
  // A failure with text fails mid-stream, after the text was delivered.
  if (entry.failure) fail();
}

void EchoBackend::stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) {
  const auto lines = text::split_lines(prompt.text);
  std::string reply;
  // The last line is the bare cue; the one before it is the newest history line.
  if (lines.size() >= 2) {
    std::string_view last = lines[lines.size() - 2];
    for (auto label : {kCustomerSpeakerName, kSystemSpeakerName}) {
      const auto prefix = std::string(label) + ": ";
      if (last.substr(0, prefix.size()) == prefix) {
        reply = std::string(last.substr(prefix.size()));
        break;
      }
    }
  }
  if (on_chunk) on_chunk({reply, true});
}

void RecordingBackend::stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) {
  std::string text;
  int finals = 0;
  try {
    inner_->stream(prompt, [&](const TokenChunk& chunk) {
      text += chunk.text;
      if (chunk.final) ++finals;
      if (on_chunk) on_chunk(chunk);
    });
  } catch (const Error& e) {
    // Drop a character torn by the failure; the gateway ignores it too.
    text.resize(text::valid_prefix_length(text));
    tape_.push_back({std::move(text), e.code()});
    throw;
  }
  // The gateway rejects a stream without exactly one final chunk; record it
  // as the failure it will become so a replay takes the same path.
  if (finals != 1) tape_.push_back({std::move(text), ErrorCode::malformed_response});
  else tape_.push_back({std::move(text), std::nullopt});
}

std::vector<ScriptEntry> RecordingBackend::take_tape() {
  std::vector<ScriptEntry> out;
  out.swap(tape_);
  return out;
}

LlmGateway::LlmGateway(std::unique_ptr<Backend> backend, BackendHandle handle)
    : backend_(std::move(backend)), handle_(std::move(handle)) {
  if (!backend_) throw Error(ErrorCode::invalid_argument, "gateway needs a backend");
  if (handle_.max_retries < 0) handle_.max_retries = 0;
}

std::string LlmGateway::complete_streaming(const RenderedPrompt& prompt, const ChunkSink& on_chunk) {
  if (prompt.text.empty()) throw Error(ErrorCode::invalid_argument, "empty prompt");
  last_attempts_ = 0;
  while (true) {
    ++last_attempts_;
    std::string text;
    int finals = 0;
    try {
      backend_->stream(prompt, [&](const TokenChunk& chunk) {
        if (finals > 0) throw Error(ErrorCode::malformed_response, "chunk after final chunk");
        text += chunk.text;
        if (chunk.final) ++finals;
        if (on_chunk) on_chunk(chunk);
      });
      if (finals != 1) throw Error(ErrorCode::malformed_response, "stream ended without a final chunk");
      return text;
    } catch (const Error& e) {
      // Safe to retry while no whole character has reached the consumer.
      const bool delivered = text::valid_prefix_length(text) > 0;
      if (!is_backend_error(e.code()) || delivered || last_attempts_ > handle_.max_retries) throw;
    }
  }
}

std::string LlmGateway::stream_speech(const RenderedPrompt& prompt, const PunctuationSet& punctuation,
                                      const SegmentSink& on_segment) {
  SignFilter filter;
  SpeechSegmenter segmenter(punctuation, on_segment);
  auto raw = complete_streaming(prompt, [&](const TokenChunk& chunk) {
    segmenter.feed(filter.feed(chunk.text));
  });
  segmenter.feed(filter.finish());
  segmenter.finish();
  return raw;
}

}  // namespace tabi
