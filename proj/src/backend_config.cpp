#include "combinterp/backend_config.hpp"

#include <fstream>
#include <set>

#include "combinterp/error.hpp"
#include "combinterp/fixture_backend.hpp"
#include "combinterp/http_backend.hpp"
#include "combinterp/text.hpp"

namespace combinterp {

using nlohmann::json;
namespace fs = std::filesystem;

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::http: return "http";
    case BackendKind::fixture: return "fixture";
    case BackendKind::replay: return "replay";
  }
  return "";
}

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "kind",         "endpoint",    "auth_env",      "timeout_ms",  "retries",
      "backoff_ms",   "cache_dir",   "fixture_path",  "archive_path", "record_path",
      "single_flight", "embedding_dim", "routes"};
  return keys;
}

bool looks_secret(const std::string& key) {
  const std::string k = text::to_lower(key);
  for (const char* word : {"key", "token", "secret", "password", "authorization", "bearer"}) {
    if (k.find(word) != std::string::npos) return true;
  }
  return false;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

}  // namespace

BackendConfig backend_config_from_json(const json& j, const fs::path& base_dir) {
  if (!j.is_object()) throw ConfigError("backend config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (known_keys().count(key) == 0) {
      if (looks_secret(key))
        throw ConfigError("backend config key '" + key +
                          "' looks like a secret; name an environment variable in auth_env instead");
      throw ConfigError("unknown backend config key '" + key + "'");
    }
  }

  BackendConfig c;
  try {
    const std::string kind = j.value("kind", std::string("fixture"));
    if (kind == "http") {
      c.kind = BackendKind::http;
    } else if (kind == "fixture") {
      c.kind = BackendKind::fixture;
    } else if (kind == "replay") {
      c.kind = BackendKind::replay;
    } else {
      throw ConfigError("unknown backend kind '" + kind + "'");
    }
    if (j.contains("endpoint")) c.endpoint = j.at("endpoint").get<std::string>();
    if (j.contains("auth_env")) c.auth_env = j.at("auth_env").get<std::string>();
    c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
    c.retries = j.value("retries", c.retries);
    c.backoff_ms = j.value("backoff_ms", c.backoff_ms);
    if (j.contains("cache_dir")) c.cache_dir = resolve(base_dir, j.at("cache_dir").get<std::string>());
    if (j.contains("fixture_path"))
      c.fixture_path = resolve(base_dir, j.at("fixture_path").get<std::string>());
    if (j.contains("archive_path"))
      c.archive_path = resolve(base_dir, j.at("archive_path").get<std::string>());
    if (j.contains("record_path"))
      c.record_path = resolve(base_dir, j.at("record_path").get<std::string>());
    c.single_flight = j.value("single_flight", false);
    if (j.contains("embedding_dim")) c.embedding_dim = j.at("embedding_dim").get<std::size_t>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("backend config: ") + e.what());
  }

  if (c.timeout_ms <= 0) throw ConfigError("backend config: timeout_ms must be positive");
  if (c.retries < 0) throw ConfigError("backend config: retries must be non-negative");
  if (c.kind == BackendKind::http && (!c.endpoint || c.endpoint->empty()))
    throw ConfigError("backend config: kind 'http' requires an endpoint");
  if (c.kind == BackendKind::fixture && !c.fixture_path)
    throw ConfigError("backend config: kind 'fixture' requires fixture_path");
  if (c.kind == BackendKind::replay && !c.archive_path)
    throw ConfigError("backend config: kind 'replay' requires archive_path");
  if (c.embedding_dim && *c.embedding_dim == 0)
    throw ConfigError("backend config: embedding_dim must be positive");
  return c;
}

BackendFileConfig backend_file_config_from_json(const json& j, const fs::path& base_dir) {
  BackendFileConfig file;
  file.defaults = backend_config_from_json(j, base_dir);
  if (j.contains("routes")) {
    const json& routes = j.at("routes");
    if (!routes.is_object()) throw ConfigError("backend config: 'routes' must be an object");
    for (const auto& [op, sub] : routes.items()) {
      if (!is_known_operation(op)) throw ConfigError("backend config: unknown operation '" + op + "'");
      if (sub.contains("routes")) throw ConfigError("backend config: routes cannot nest");
      file.routes.emplace_back(op, backend_config_from_json(sub, base_dir));
    }
  }
  return file;
}

BackendFileConfig load_backend_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open backend config '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("invalid backend config '" + path.string() + "': " + e.what());
  }
  return backend_file_config_from_json(j, path.parent_path());
}

std::shared_ptr<Backend> make_provider(const BackendConfig& c) {
  std::shared_ptr<Backend> provider;
  switch (c.kind) {
    case BackendKind::fixture:
      provider = std::make_shared<FixtureBackend>(FixtureBackend::from_file(*c.fixture_path));
      break;
    case BackendKind::replay:
      provider = std::make_shared<ReplayBackend>(*c.archive_path);
      break;
    case BackendKind::http:
      provider = std::make_shared<HttpBackend>(
          HttpOptions{*c.endpoint, c.auth_env, c.timeout_ms, c.retries, c.backoff_ms});
      break;
  }
  if (c.single_flight || provider->single_flight())
    provider = std::make_shared<SerializedBackend>(std::move(provider));
  return provider;
}

BackendSetup build_backends(const BackendFileConfig& config) {
  BackendSetup setup;
  setup.embedding_dim = config.defaults.embedding_dim;

  std::shared_ptr<Backend> stack = make_provider(config.defaults);
  if (!config.routes.empty()) {
    auto router = std::make_shared<RoutingBackend>(stack);
    for (const auto& [op, sub] : config.routes) router->route(op, make_provider(sub));
    stack = router;
  }
  if (config.defaults.cache_dir) {
    setup.cache = std::make_shared<CachingBackend>(stack, *config.defaults.cache_dir);
    stack = setup.cache;
  }
  if (config.defaults.record_path) {
    setup.recorder = std::make_shared<RecordingBackend>(stack, *config.defaults.record_path);
    stack = setup.recorder;
  }
  setup.backend = stack;
  return setup;
}

}  // namespace combinterp
