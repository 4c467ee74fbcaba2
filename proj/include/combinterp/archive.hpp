#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>

#include "combinterp/backend.hpp"

namespace combinterp {

// Recorded-response archive: one JSON record per line,
//   {"op": ..., "digest": ..., "inputs": {...}, "output": ...}
// where digest = call_digest(op, inputs).

struct ArchiveRecord {
  std::string op;
  std::string digest;
  nlohmann::json inputs;
  nlohmann::json output;
};

std::vector<ArchiveRecord> read_archive(const std::filesystem::path& path);

/// Pass-through backend that writes every distinct call to an archive. The
/// archive is truncated when the recorder is created.
class RecordingBackend : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, const std::filesystem::path& archive);

  nlohmann::json call(std::string_view op, const nlohmann::json& inputs,
                      const CallContext& context) override;

  std::size_t recorded() const;

 private:
  std::shared_ptr<Backend> inner_;
  mutable std::mutex mutex_;
  std::ofstream out_;
  std::set<std::string> written_;
};

/// Answers calls from an archive. Unrecorded calls throw FixtureMiss.
class ReplayBackend : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& archive);

  nlohmann::json call(std::string_view op, const nlohmann::json& inputs,
                      const CallContext& context) override;

  std::size_t size() const { return by_digest_.size(); }

 private:
  std::map<std::string, nlohmann::json> by_digest_;
};

}  // namespace combinterp
