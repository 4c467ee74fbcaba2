#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "combinterp/backend.hpp"

namespace combinterp {

/// Deterministic scripted backend.
///
/// Responses are looked up by exact canonical inputs (or by their call
/// digest). A per-operation default answers anything unscripted; without one,
/// the call throws FixtureMiss. Per-operation conveniences:
///   - classify_image entries may omit `k`; the client truncates to k.
///   - similarity is symmetric and returns 1.0 for identical strings.
///
/// File format (JSON object keyed by operation name):
///   { "similarity": { "default": 0.0,
///                     "entries": [ {"inputs": {"a": "bulb", "b": "lamp"}, "output": 0.781},
///                                  {"digest": "<sha256>", "output": 0.5} ] } }
class FixtureBackend : public Backend {
 public:
  FixtureBackend() = default;

  static FixtureBackend from_json(const nlohmann::json& spec);
  static FixtureBackend from_file(const std::filesystem::path& path);

  void script(std::string_view op, const nlohmann::json& inputs, nlohmann::json output);
  void script_digest(std::string_view op, std::string digest, nlohmann::json output);
  void set_default(std::string_view op, nlohmann::json output);

  /// Adds everything scripted in `other`; entries in `other` win on conflict.
  void merge(const FixtureBackend& other);

  nlohmann::json to_json() const;

  nlohmann::json call(std::string_view op, const nlohmann::json& inputs,
                      const CallContext& context) override;

 private:
  struct OpTable {
    std::map<std::string, nlohmann::json> by_digest;
    std::map<std::string, nlohmann::json> inputs_of;  // digest -> inputs, for to_json
    std::optional<nlohmann::json> fallback;
  };

  const nlohmann::json* find(const OpTable& table, std::string_view op,
                             const nlohmann::json& inputs) const;

  std::map<std::string, OpTable, std::less<>> tables_;
};

}  // namespace combinterp
