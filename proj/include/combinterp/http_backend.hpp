#pragma once

#include <chrono>
#include <optional>
#include <string>

#include "combinterp/backend.hpp"

namespace combinterp {

struct HttpOptions {
  std::string endpoint;  // e.g. http://localhost:8080/v1
  std::optional<std::string> auth_env;
  int timeout_ms = 30000;
  int retries = 2;
  int backoff_ms = 250;
  int max_backoff_ms = 8000;
};

/// Generic HTTP adapter: POST <endpoint>/<operation> with the call inputs as a
/// JSON object body. Local image files are attached as `image_base64`. The
/// response must be a JSON object with an `output` member in the operation's
/// wire shape. Transport failures, 429 and 5xx are retried with exponential
/// backoff; other statuses fail immediately.
class HttpBackend : public Backend {
 public:
  /// Throws ConfigError for a malformed endpoint or an unset auth variable.
  explicit HttpBackend(HttpOptions options);

  nlohmann::json call(std::string_view op, const nlohmann::json& inputs,
                      const CallContext& context) override;

 private:
  HttpOptions options_;
  std::string scheme_host_port_;
  std::string base_path_;
  std::optional<std::string> token_;
};

}  // namespace combinterp
