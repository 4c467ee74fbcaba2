#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "combinterp/backend.hpp"

namespace combinterp {

struct CacheCounters {
  std::size_t calls = 0;
  std::size_t hits = 0;
  std::size_t misses = 0;
  std::size_t invalidated = 0;
};

/// Persistent response cache in front of another backend.
///
/// One file per key, `<dir>/<digest>.json`, holding op, inputs and output.
/// Writes go through a temporary file and a rename, so concurrent writers of
/// the same key leave one complete entry. A corrupt entry is deleted, the call
/// is delegated, and a warning is logged. On destruction the run's counters
/// are appended to `<dir>/stats.json`.
class CachingBackend : public Backend {
 public:
  CachingBackend(std::shared_ptr<Backend> inner, std::filesystem::path dir);
  ~CachingBackend() override;

  CachingBackend(const CachingBackend&) = delete;
  CachingBackend& operator=(const CachingBackend&) = delete;

  nlohmann::json call(std::string_view op, const nlohmann::json& inputs,
                      const CallContext& context) override;

  CacheCounters counters() const;
  const std::filesystem::path& dir() const { return dir_; }

  /// Appends this run's counters to stats.json once; the destructor calls it
  /// if nobody did.
  void flush_stats();

 private:
  std::shared_ptr<Backend> inner_;
  std::filesystem::path dir_;
  std::atomic<std::size_t> calls_{0};
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> misses_{0};
  std::atomic<std::size_t> invalidated_{0};
  std::atomic<bool> flushed_{false};
};

struct CacheEntryInfo {
  std::string digest;
  std::string op;
  std::uintmax_t bytes = 0;
};

std::vector<CacheEntryInfo> cache_list(const std::filesystem::path& dir);

/// Removes every entry and the stats file. Returns the number of entries removed.
std::size_t cache_clear(const std::filesystem::path& dir);

/// {"entries": n, "runs": [...], "last_run": {...}, "totals": {...}}
nlohmann::json cache_stats(const std::filesystem::path& dir);

}  // namespace combinterp
