#include "tabi/config.hpp"

#include <cstdlib>
#include <fstream>
#include <nlohmann/json.hpp>

#include "tabi/error.hpp"

namespace tabi {
namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  return p.is_absolute() ? p : base / p;
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return (v && *v) ? v : nullptr;
}

}  // namespace

ServerConfig ServerConfig::defaults(const std::filesystem::path& data_dir) {
  ServerConfig c;
  c.backend_script = data_dir / "scripts" / "mock_backend.txt";
  c.catalog_path = data_dir / "catalog.jsonl";
  c.spots_path = data_dir / "spots.jsonl";
  c.routes_path = data_dir / "routes.jsonl";
  c.prompts_dir = data_dir / "prompts";
  c.route_templates_path = data_dir / "templates" / "route_narrative.txt";
  return c;
}

ServerConfig ServerConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorCode::config_error, "cannot open config: " + file.string());
  const auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(ErrorCode::config_error, "config is not a JSON object: " + file.string());
  }
  const auto base = std::filesystem::absolute(file).parent_path();
  const auto data_dir = resolve(base, j.value("data_dir", "data"));
  auto c = defaults(data_dir);
  try {
    c.listen_address = j.value("listen_address", c.listen_address);
    c.port = j.value("port", c.port);
    c.io_threads = j.value("io_threads", c.io_threads);
    if (j.contains("backend")) {
      const auto& b = j.at("backend");
      c.backend.kind = backend_kind_from_string(b.value("kind", std::string(to_string(c.backend.kind))));
      if (b.contains("script")) c.backend_script = resolve(base, b.at("script").get<std::string>());
      c.remote.endpoint = b.value("endpoint", c.remote.endpoint);
      c.remote.path = b.value("path", c.remote.path);
      c.remote.model_id = b.value("model", c.remote.model_id);
      c.backend.model_id = c.remote.model_id;
      c.backend.timeout = std::chrono::milliseconds(
          static_cast<long long>(b.value("timeout_seconds", 30.0) * 1000.0));
      c.remote.timeout = c.backend.timeout;
      c.backend.max_retries = b.value("max_retries", c.backend.max_retries);
    }
    if (j.contains("data")) {
      const auto& d = j.at("data");
      if (d.contains("catalog")) c.catalog_path = resolve(base, d.at("catalog").get<std::string>());
      if (d.contains("spots")) c.spots_path = resolve(base, d.at("spots").get<std::string>());
      if (d.contains("routes")) c.routes_path = resolve(base, d.at("routes").get<std::string>());
      if (d.contains("prompts")) c.prompts_dir = resolve(base, d.at("prompts").get<std::string>());
      if (d.contains("route_templates")) {
        c.route_templates_path = resolve(base, d.at("route_templates").get<std::string>());
      }
    }
    if (j.contains("providers")) {
      const auto& p = j.at("providers");
      c.route_provider = p.value("routes", c.route_provider);
      c.route_endpoint = p.value("route_endpoint", c.route_endpoint);
      c.spot_provider = p.value("spots", c.spot_provider);
      c.spot_endpoint = p.value("spot_endpoint", c.spot_endpoint);
    }
    if (j.contains("phase_caps")) {
      const auto caps = j.at("phase_caps").get<std::vector<int>>();
      if (caps.size() != kPhaseCount) throw Error(ErrorCode::config_error, "phase_caps needs five values");
      std::copy(caps.begin(), caps.end(), c.phase_caps.begin());
    }
    c.punctuation = j.value("punctuation", c.punctuation);
    c.day_start = j.value("day_start", c.day_start);
    c.day_cutoff = j.value("day_cutoff", c.day_cutoff);
    if (j.contains("log_dir")) c.log_dir = resolve(base, j.at("log_dir").get<std::string>());
    c.max_sessions = j.value("max_sessions", c.max_sessions);
    c.max_prompt_chars = j.value("max_prompt_chars", c.max_prompt_chars);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, std::string("config: ") + e.what());
  }
  return c;
}

void ServerConfig::apply_env() {
  if (const char* v = env("TABI_LISTEN_ADDRESS")) listen_address = v;
  if (const char* v = env("TABI_PORT")) port = std::atoi(v);
  if (const char* v = env("TABI_BACKEND")) backend.kind = backend_kind_from_string(v);
  if (const char* v = env("TABI_BACKEND_SCRIPT")) backend_script = v;
  if (const char* v = env("TABI_LLM_ENDPOINT")) remote.endpoint = v;
  if (const char* v = env("TABI_LLM_MODEL")) remote.model_id = backend.model_id = v;
  if (const char* v = env("OPENAI_API_KEY")) remote.api_key = v;
  if (const char* v = env("TABI_LLM_API_KEY")) remote.api_key = v;
  if (const char* v = env("TABI_PROVIDER_API_KEY")) provider_api_key = v;
  if (const char* v = env("TABI_LOG_DIR")) log_dir = v;
}

void ServerConfig::validate() const {
  if (port < 0 || port > 65535) throw Error(ErrorCode::config_error, "port out of range");
  for (int cap : phase_caps) {
    if (cap < 1) throw Error(ErrorCode::config_error, "phase caps must be >= 1");
  }
  auto require = [](const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) {
      throw Error(ErrorCode::config_error, std::string(what) + " not found: " + p.string());
    }
  };
  require(catalog_path, "catalog");
  require(spots_path, "spot fixture");
  require(routes_path, "route fixture");
  require(prompts_dir, "prompt directory");
  if (backend.kind == BackendKind::scripted_mock) require(backend_script, "backend script");
  if (backend.kind == BackendKind::remote && remote.endpoint.empty()) {
    throw Error(ErrorCode::config_error, "remote backend needs an endpoint (TABI_LLM_ENDPOINT)");
  }
  if (max_sessions == 0) throw Error(ErrorCode::config_error, "max_sessions must be positive");
}

std::shared_ptr<const Resources> load_resources(const ServerConfig& config) {
  auto res = std::make_shared<Resources>();
  for (int i = 0; i < kPhaseCount; ++i) res->phases.set_max_turns(phase_from_ordinal(i + 1), config.phase_caps[i]);
  res->prompts = PromptLibrary::load_directory(config.prompts_dir);
  res->prompts.set_budget(config.max_prompt_chars);
  res->catalog = CourseCatalog::load(config.catalog_path);

  std::shared_ptr<const SpotProvider> spots =
      std::make_shared<FixtureSpotProvider>(FixtureSpotProvider::load(config.spots_path));
  if (config.spot_provider == "remote") {
    spots = std::make_shared<RemoteSpotProvider>(config.spot_endpoint, config.provider_api_key, spots);
  }
  std::shared_ptr<const RouteProvider> routes;
  if (config.route_provider == "remote") {
    routes = std::make_shared<RemoteRouteProvider>(config.route_endpoint, config.provider_api_key);
  } else {
    routes = std::make_shared<FixtureRouteProvider>(FixtureRouteProvider::load(config.routes_path));
  }
  auto templates = std::filesystem::exists(config.route_templates_path)
                       ? RouteTemplates::load(config.route_templates_path)
                       : RouteTemplates::defaults();
  res->knowledge = std::make_shared<KnowledgeHub>(spots, routes, std::move(templates));
  res->display_index = DisplayIndex(res->knowledge->all_spots(), res->catalog.courses());
  res->punctuation = PunctuationSet(config.punctuation);
  res->day_start = ClockTime::parse(config.day_start);
  res->day_cutoff = ClockTime::parse(config.day_cutoff);
  res->validate();
  return res;
}

std::unique_ptr<Backend> make_backend(const ServerConfig& config) {
  switch (config.backend.kind) {
    case BackendKind::scripted_mock:
      return std::make_unique<ScriptedBackend>(ScriptedBackend::load_script(config.backend_script));
    case BackendKind::echo_mock:
      return std::make_unique<EchoBackend>();
    case BackendKind::remote:
      return std::make_unique<RemoteBackend>(config.remote);
  }
  throw Error(ErrorCode::config_error, "unknown backend kind");
}

}  // namespace tabi
