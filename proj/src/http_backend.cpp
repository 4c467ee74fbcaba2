#include "combinterp/http_backend.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <thread>

#include "combinterp/digest.hpp"
#include "combinterp/error.hpp"
#include "combinterp/log.hpp"
#include "httplib.h"

namespace combinterp {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("image '" + path.string() + "' is not readable");
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

HttpBackend::HttpBackend(HttpOptions options) : options_(std::move(options)) {
  const std::string& url = options_.endpoint;
  const auto scheme_end = url.find("://");
  if (url.empty() || scheme_end == std::string::npos)
    throw ConfigError("http backend: endpoint must be an absolute URL, got '" + url + "'");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("http backend: unsupported scheme '" + scheme + "'");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw ConfigError("http backend: built without TLS support");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  scheme_host_port_ = url.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();

  if (options_.timeout_ms <= 0) throw ConfigError("http backend: timeout_ms must be positive");
  if (options_.retries < 0) throw ConfigError("http backend: retries must be non-negative");
  if (options_.auth_env) {
    const char* value = std::getenv(options_.auth_env->c_str());
    if (value == nullptr || *value == '\0')
      throw ConfigError("http backend: environment variable '" + *options_.auth_env +
                        "' is not set");
    token_ = value;
  }
}

json HttpBackend::call(std::string_view op, const json& inputs, const CallContext& context) {
  json body = inputs;
  if (context.image_file) body["image_base64"] = base64_encode(read_file(*context.image_file));
  const std::string payload = canonical_dump(body);
  const std::string path = base_path_ + "/" + std::string(op);

  httplib::Headers headers;
  if (token_) headers.emplace("Authorization", "Bearer " + *token_);

  std::string last_error;
  int delay_ms = options_.backoff_ms;
  for (int attempt = 0; attempt <= options_.retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      delay_ms = std::min(delay_ms * 2, options_.max_backoff_ms);
    }
    // One client per call: httplib clients are not meant to be shared across threads.
    httplib::Client client(scheme_host_port_);
    const auto timeout = std::chrono::milliseconds(options_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      log::debug("http " + path + " attempt " + std::to_string(attempt + 1) + ": " + last_error);
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      if (retryable(res->status)) continue;
      break;
    }
    try {
      json reply = json::parse(res->body);
      if (!reply.is_object() || !reply.contains("output"))
        throw BackendError("response has no 'output' member");
      return reply.at("output");
    } catch (const json::exception& e) {
      throw BackendError(std::string(op) + ": unparseable response from " + scheme_host_port_ +
                         path + ": " + e.what());
    } catch (const BackendError& e) {
      throw BackendError(std::string(op) + ": " + e.what());
    }
  }
  throw BackendError(std::string(op) + ": request to " + scheme_host_port_ + path + " failed: " +
                     last_error);
}

}  // namespace combinterp
