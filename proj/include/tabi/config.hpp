#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>

#include "tabi/llm.hpp"
#include "tabi/session.hpp"

namespace tabi {

/// Server and session configuration. Loaded from a JSON file; relative
/// paths resolve against the file's directory. `TABI_*` environment
/// variables override file values.
struct ServerConfig {
  std::string listen_address = "127.0.0.1";
  int port = 8765;
  int io_threads = 2;

  BackendHandle backend;
  std::filesystem::path backend_script;
  RemoteBackendOptions remote;

  std::filesystem::path catalog_path;
  std::filesystem::path spots_path;
  std::filesystem::path routes_path;
  std::filesystem::path prompts_dir;
  std::filesystem::path route_templates_path;  // optional

  std::string route_provider = "fixture";  // or "remote"
  std::string route_endpoint;
  std::string spot_provider = "fixture";
  std::string spot_endpoint;
  std::string provider_api_key;

  std::array<int, kPhaseCount> phase_caps{3, 5, 10, 6, 2};
  std::string punctuation{kDefaultPunctuation};
  std::string day_start = "10:00";
  std::string day_cutoff = "18:00";
  std::filesystem::path log_dir = "logs";
  std::size_t max_sessions = 16;
  std::size_t max_prompt_chars = 24'000;

  /// Fixture layout under `data_dir` with the scripted mock backend.
  static ServerConfig defaults(const std::filesystem::path& data_dir);
  static ServerConfig load(const std::filesystem::path& file);

  void apply_env();
  /// Paths exist, port in range, caps positive. Throws `config-error`.
  void validate() const;
};

std::shared_ptr<const Resources> load_resources(const ServerConfig& config);

/// New backend instance for one session.
std::unique_ptr<Backend> make_backend(const ServerConfig& config);

}  // namespace tabi
