#include "combinterp/response_cache.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>
#include <thread>

#include "combinterp/digest.hpp"
#include "combinterp/error.hpp"
#include "combinterp/log.hpp"

namespace combinterp {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kStatsFile = "stats.json";

bool is_entry(const fs::path& p) {
  return p.extension() == ".json" && p.filename() != kStatsFile;
}

std::string temp_suffix() {
  static std::atomic<unsigned long> counter{0};
  std::ostringstream s;
  s << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id()) << '.'
    << counter.fetch_add(1);
  return s.str();
}

void write_atomically(const fs::path& target, const std::string& content) {
  const fs::path tmp = target.string() + temp_suffix();
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw BackendError("cache: cannot write '" + tmp.string() + "'");
    out << content;
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw BackendError("cache: cannot move entry into place: " + target.string());
  }
}

json read_stats(const fs::path& dir) {
  std::ifstream in(dir / kStatsFile);
  if (!in) return json{{"runs", json::array()}};
  try {
    json j = json::parse(in);
    if (j.is_object() && j.contains("runs") && j["runs"].is_array()) return j;
  } catch (const json::exception&) {
  }
  log::warning("cache: stats file in '" + dir.string() + "' is unreadable; starting over");
  return json{{"runs", json::array()}};
}

}  // namespace

CachingBackend::CachingBackend(std::shared_ptr<Backend> inner, fs::path dir)
    : inner_(std::move(inner)), dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec || !fs::is_directory(dir_))
    throw ConfigError("cache directory '" + dir_.string() + "' cannot be created");
}

CachingBackend::~CachingBackend() {
  try {
    flush_stats();
  } catch (const std::exception& e) {
    log::warning(std::string("cache: could not write stats: ") + e.what());
  }
}

json CachingBackend::call(std::string_view op, const json& inputs, const CallContext& context) {
  calls_.fetch_add(1);
  const std::string digest = call_digest(op, inputs);
  const fs::path entry = dir_ / (digest + ".json");

  if (std::ifstream in{entry}) {
    try {
      json stored = json::parse(in);
      if (stored.at("op") == op && stored.at("inputs") == inputs && stored.contains("output")) {
        hits_.fetch_add(1);
        return stored.at("output");
      }
      throw std::runtime_error("entry does not belong to this call");
    } catch (const std::exception& e) {
      in.close();
      invalidated_.fetch_add(1);
      log::warning("cache: invalidating corrupt entry " + entry.string() + " (" + e.what() + ")");
      std::error_code ec;
      fs::remove(entry, ec);
    }
  }

  misses_.fetch_add(1);
  json output = inner_->call(op, inputs, context);
  json stored = {{"op", op}, {"inputs", inputs}, {"output", output}};
  write_atomically(entry, canonical_dump(stored));
  return output;
}

CacheCounters CachingBackend::counters() const {
  return {calls_.load(), hits_.load(), misses_.load(), invalidated_.load()};
}

void CachingBackend::flush_stats() {
  if (flushed_.exchange(true)) return;
  const CacheCounters c = counters();
  json stats = read_stats(dir_);
  stats["runs"].push_back(
      {{"calls", c.calls}, {"hits", c.hits}, {"misses", c.misses}, {"invalidated", c.invalidated}});
  write_atomically(dir_ / kStatsFile, stats.dump(2));
}

std::vector<CacheEntryInfo> cache_list(const fs::path& dir) {
  std::vector<CacheEntryInfo> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (!item.is_regular_file() || !is_entry(item.path())) continue;
    CacheEntryInfo info{item.path().stem().string(), "?", item.file_size()};
    try {
      std::ifstream in(item.path());
      info.op = json::parse(in).at("op").get<std::string>();
    } catch (const std::exception&) {
      info.op = "<corrupt>";
    }
    out.push_back(std::move(info));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.op != b.op ? a.op < b.op : a.digest < b.digest;
  });
  return out;
}

std::size_t cache_clear(const fs::path& dir) {
  std::size_t removed = 0;
  if (!fs::is_directory(dir)) return 0;
  std::vector<fs::path> doomed;
  for (const auto& item : fs::directory_iterator(dir)) {
    if (item.is_regular_file()) doomed.push_back(item.path());
  }
  for (const auto& p : doomed) {
    if (is_entry(p)) ++removed;
    std::error_code ec;
    fs::remove(p, ec);
  }
  return removed;
}

json cache_stats(const fs::path& dir) {
  json stats = read_stats(dir);
  json totals = {{"calls", 0}, {"hits", 0}, {"misses", 0}, {"invalidated", 0}};
  for (const auto& run : stats["runs"]) {
    for (const char* key : {"calls", "hits", "misses", "invalidated"})
      totals[key] = totals[key].get<std::size_t>() + run.value(key, std::size_t{0});
  }
  json out;
  out["entries"] = cache_list(dir).size();
  out["runs"] = stats["runs"];
  out["last_run"] = stats["runs"].empty() ? json(nullptr) : stats["runs"].back();
  out["totals"] = totals;
  return out;
}

}  // namespace combinterp
