#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "tabi/config.hpp"
#include "tabi/error.hpp"
#include "tabi/hub.hpp"
#include "tabi/server.hpp"
#include "tabi/simulate.hpp"
#include "tabi/transcript.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

tabi::ServerConfig load_config(const std::string& path) {
  auto config = path.empty() ? tabi::ServerConfig::defaults(TABI_DEFAULT_DATA_DIR) : tabi::ServerConfig::load(path);
  config.apply_env();
  return config;
}

int serve(const std::string& config_path) {
  auto config = load_config(config_path);
  config.validate();
  auto resources = tabi::load_resources(config);
  tabi::HubOptions options;
  options.max_sessions = config.max_sessions;
  options.log_dir = config.log_dir;
  options.handle = config.backend;
  tabi::SessionHub hub(resources, [config] { return tabi::make_backend(config); }, options);
  tabi::Server server(hub, config.listen_address, static_cast<unsigned short>(config.port), config.io_threads);
  server.start();
  std::cout << "listening on " << config.listen_address << ":" << server.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
  server.stop();
  return 0;
}

int replay_cmd(const std::string& file, const std::string& config_path) {
  auto config = load_config(config_path);
  auto resources = tabi::load_resources(config);
  const auto result = tabi::replay(std::filesystem::path(file), resources, config.backend);
  std::cout << "phase: " << tabi::ordinal(result.state.current_phase) << " ("
            << tabi::phase_name(result.state.current_phase) << ")\n";
  std::cout << "status: " << tabi::to_string(result.state.status) << "\n";
  std::cout << "turns: " << result.state.history.size() << "\n";
  if (result.state.final_plan) std::cout << tabi::describe_plan(*result.state.final_plan) << "\n";
  const bool ok = result.matches_log();
  std::cout << (ok ? "replay matches transcript" : "replay DIVERGES from transcript") << std::endl;
  return ok ? 0 : 1;
}

int simulate(const std::string& file, const std::string& out, const std::string& config_path) {
  auto config = load_config(config_path);
  auto resources = tabi::load_resources(config);
  const auto script = tabi::SimulationScript::load(file);
  tabi::SimulationHooks hooks;
  hooks.on_turn = [](std::string_view customer, const tabi::TurnResult& r) {
    if (!customer.empty()) std::cout << "Customer: " << customer << "\n";
    std::cout << "Shoko: " << r.system_text << "\n";
    if (r.phase_change) {
      std::cout << "-- phase " << tabi::ordinal(r.phase_change->from) << " -> "
                << tabi::ordinal(r.phase_change->to) << " (" << tabi::to_string(r.decision) << ")\n";
    }
  };
  hooks.on_backend_error = [](const tabi::Error& e) {
    std::cout << "(backend error: " << e.what() << ", retrying turn)\n";
  };
  const auto run = tabi::run_simulation(script, resources, config.backend, hooks);
  if (!out.empty()) {
    std::filesystem::remove(out);
    tabi::TranscriptWriter writer(out);
    for (const auto& rec : run.records) writer.append(rec);
  }
  const auto& st = run.state;
  std::cout << "status: " << tabi::to_string(st.status) << ", phase " << tabi::ordinal(st.current_phase) << "\n";
  if (st.final_plan) std::cout << tabi::describe_plan(*st.final_plan) << "\n";
  return st.status == tabi::SessionStatus::failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Travel counter dialogue server"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "debug logging");

  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP/WebSocket service");
  auto* replay_sub = app.add_subcommand("replay", "re-run a transcript against the mock backend");
  std::string replay_file;
  replay_sub->add_option("file", replay_file)->required()->check(CLI::ExistingFile);
  auto* simulate_sub = app.add_subcommand("simulate", "run a scripted dialogue");
  std::string script_file, out_file;
  simulate_sub->add_option("script", script_file)->required()->check(CLI::ExistingFile);
  simulate_sub->add_option("-o,--out", out_file, "write the transcript here");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
  try {
    if (*serve_cmd) {
      spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
      return serve(config_path);
    }
    if (*replay_sub) return replay_cmd(replay_file, config_path);
    if (*simulate_sub) return simulate(script_file, out_file, config_path);
  } catch (const tabi::Error& e) {
    std::cerr << "error [" << tabi::to_string(e.code()) << "]: " << e.what() << std::endl;
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
  return 0;
}
