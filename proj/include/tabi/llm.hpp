#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tabi/error.hpp"
#include "tabi/prompt.hpp"
#include "tabi/segmenter.hpp"

namespace tabi {

using ChunkSink = std::function<void(const TokenChunk&)>;

enum class BackendKind { scripted_mock, echo_mock, remote };

std::string_view to_string(BackendKind kind);
BackendKind backend_kind_from_string(std::string_view name);

struct BackendHandle {
  BackendKind kind = BackendKind::scripted_mock;
  std::string model_id = "gpt-4-32k-0613";
  std::chrono::milliseconds timeout{30'000};
  int max_retries = 1;
};

/// A streaming completion source. Implementations deliver chunks in order
/// and mark exactly the last one `final`; failures are thrown as `Error`
/// with a backend error code.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual void stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) = 0;
};

/// One entry of a mock script: a completion, an injected failure, or text
/// followed by a failure (delivered as non-final chunks, then thrown).
struct ScriptEntry {
  std::string text;
  std::optional<ErrorCode> failure;

  friend bool operator==(const ScriptEntry&, const ScriptEntry&) = default;
};

/// Parses one script line: `!timeout`, `!unavailable` and `!malformed`
/// inject failures; anything else is a completion with `\n` escapes expanded.
ScriptEntry parse_script_line(std::string_view line);

/// Replays a fixed list of completions, one per call, split into chunks of
/// `chunk_codepoints`. Running off the end of the script is `backend-unavailable`.
class ScriptedBackend : public Backend {
 public:
  explicit ScriptedBackend(std::vector<ScriptEntry> script, std::size_t chunk_codepoints = 4);
  static std::vector<ScriptEntry> load_script(const std::filesystem::path& path);

  void stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) override;

  std::size_t remaining() const;
  std::size_t calls() const { return calls_; }
  /// Delay before each chunk; used to make streaming observable in tests.
  void set_chunk_delay(std::chrono::milliseconds delay) { chunk_delay_ = delay; }

 private:
  mutable std::mutex mutex_;
  std::vector<ScriptEntry> script_;
  std::size_t cursor_ = 0;
  std::size_t chunk_codepoints_;
  std::atomic<std::size_t> calls_{0};
  std::chrono::milliseconds chunk_delay_{0};
};

/// Answers with the text of the last history line (speaker label removed).
class EchoBackend : public Backend {
 public:
  void stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) override;
};

struct RemoteBackendOptions {
  std::string endpoint;  // scheme://host:port
  std::string path = "/v1/chat/completions";
  std::string api_key;
  std::string model_id = "gpt-4-32k-0613";
  std::chrono::milliseconds timeout{30'000};
};

/// Chat-completion client over HTTP with server-sent incremental chunks.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteBackendOptions options);
  void stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) override;

  /// Parses a buffer of SSE lines; complete events are consumed from
  /// `buffer`. Returns true once the `[DONE]` event is seen.
  static bool drain_events(std::string& buffer, const ChunkSink& on_chunk);

 private:
  RemoteBackendOptions options_;
};

/// Records every call made through it, in order; used to write transcripts
/// that can be replayed against a scripted mock.
class RecordingBackend : public Backend {
 public:
  explicit RecordingBackend(std::unique_ptr<Backend> inner) : inner_(std::move(inner)) {}
  void stream(const RenderedPrompt& prompt, const ChunkSink& on_chunk) override;

  std::vector<ScriptEntry> take_tape();

 private:
  std::unique_ptr<Backend> inner_;
  std::vector<ScriptEntry> tape_;
};

/// Retrying front for one backend. Failures are retried up to
/// `max_retries` times as long as nothing has been delivered yet.
class LlmGateway {
 public:
  LlmGateway(std::unique_ptr<Backend> backend, BackendHandle handle);

  /// Returns the full completion text.
  std::string complete_streaming(const RenderedPrompt& prompt, const ChunkSink& on_chunk);
  std::string complete(const RenderedPrompt& prompt) { return complete_streaming(prompt, {}); }

  /// Streams a completion straight into speech segments with the end sign
  /// removed. Returns the raw completion, sign included.
  std::string stream_speech(const RenderedPrompt& prompt, const PunctuationSet& punctuation,
                            const SegmentSink& on_segment);

  int last_attempts() const { return last_attempts_; }
  const BackendHandle& handle() const { return handle_; }
  Backend& backend() { return *backend_; }

 private:
  std::unique_ptr<Backend> backend_;
  BackendHandle handle_;
  int last_attempts_ = 0;
};

bool is_backend_error(ErrorCode code);

}  // namespace tabi
