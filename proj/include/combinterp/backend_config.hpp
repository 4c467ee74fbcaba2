#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "combinterp/archive.hpp"
#include "combinterp/backend.hpp"
#include "combinterp/response_cache.hpp"

namespace combinterp {

enum class BackendKind { http, fixture, replay };

std::string_view to_string(BackendKind kind);

struct BackendConfig {
  BackendKind kind = BackendKind::fixture;
  std::optional<std::string> endpoint;  // http
  std::optional<std::string> auth_env;  // http; name of the variable, never its value
  int timeout_ms = 30000;
  int retries = 2;
  int backoff_ms = 250;
  std::optional<std::filesystem::path> cache_dir;
  std::optional<std::filesystem::path> fixture_path;  // fixture
  std::optional<std::filesystem::path> archive_path;  // replay
  std::optional<std::filesystem::path> record_path;   // record every call to this archive
  bool single_flight = false;
  std::optional<std::size_t> embedding_dim;
};

/// Backend config file: one BackendConfig object, optionally with a "routes"
/// object mapping operation names to their own BackendConfig. cache_dir,
/// record_path and embedding_dim are honored at the top level only.
/// Relative paths resolve against the config file's directory.
struct BackendFileConfig {
  BackendConfig defaults;
  std::vector<std::pair<std::string, BackendConfig>> routes;
};

/// Throws ConfigError on unknown keys, secret-looking keys, a missing
/// endpoint for http, or a missing fixture/archive path.
BackendConfig backend_config_from_json(const nlohmann::json& j,
                                       const std::filesystem::path& base_dir = {});
BackendFileConfig backend_file_config_from_json(const nlohmann::json& j,
                                                const std::filesystem::path& base_dir = {});
BackendFileConfig load_backend_config(const std::filesystem::path& path);

/// A ready-to-use backend stack plus handles on the optional layers.
struct BackendSetup {
  std::shared_ptr<Backend> backend;
  std::optional<std::size_t> embedding_dim;
  std::shared_ptr<CachingBackend> cache;
  std::shared_ptr<RecordingBackend> recorder;

  ModelClient client() const { return ModelClient(backend, embedding_dim); }
};

/// Layering, innermost first: provider (fixture | replay | http), serialization
/// for single-flight providers, routing, cache, recorder.
BackendSetup build_backends(const BackendFileConfig& config);

/// Provider for one config, without cache or recorder.
std::shared_ptr<Backend> make_provider(const BackendConfig& config);

}  // namespace combinterp
