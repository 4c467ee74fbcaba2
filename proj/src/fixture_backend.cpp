#include "combinterp/fixture_backend.hpp"

#include <fstream>

#include "combinterp/digest.hpp"
#include "combinterp/error.hpp"

namespace combinterp {

using nlohmann::json;

namespace {

void require_known(std::string_view op) {
  if (!is_known_operation(op)) throw ConfigError("fixture: unknown operation '" + std::string(op) + "'");
}

}  // namespace

FixtureBackend FixtureBackend::from_json(const json& spec) {
  if (!spec.is_object()) throw ConfigError("fixture: top level must be an object keyed by operation");
  FixtureBackend fixture;
  for (const auto& [op, table] : spec.items()) {
    require_known(op);
    if (!table.is_object()) throw ConfigError("fixture: '" + op + "' must be an object");
    if (table.contains("default")) fixture.set_default(op, table.at("default"));
    for (const auto& entry : table.value("entries", json::array())) {
      if (!entry.contains("output"))
        throw ConfigError("fixture: entry for '" + op + "' has no output: " + entry.dump());
      if (entry.contains("inputs")) {
        fixture.script(op, entry.at("inputs"), entry.at("output"));
      } else if (entry.contains("digest")) {
        fixture.script_digest(op, entry.at("digest").get<std::string>(), entry.at("output"));
      } else {
        throw ConfigError("fixture: entry for '" + op + "' needs 'inputs' or 'digest'");
      }
    }
  }
  return fixture;
}

FixtureBackend FixtureBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open fixture file '" + path.string() + "'");
  try {
    return from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw LoadError("invalid fixture file '" + path.string() + "': " + e.what());
  }
}

void FixtureBackend::script(std::string_view op, const json& inputs, json output) {
  require_known(op);
  auto& table = tables_[std::string(op)];
  const std::string digest = call_digest(op, inputs);
  table.by_digest[digest] = std::move(output);
  table.inputs_of[digest] = inputs;
}

void FixtureBackend::script_digest(std::string_view op, std::string digest, json output) {
  require_known(op);
  tables_[std::string(op)].by_digest[std::move(digest)] = std::move(output);
}

void FixtureBackend::set_default(std::string_view op, json output) {
  require_known(op);
  tables_[std::string(op)].fallback = std::move(output);
}

void FixtureBackend::merge(const FixtureBackend& other) {
  for (const auto& [op, table] : other.tables_) {
    auto& mine = tables_[op];
    for (const auto& [digest, output] : table.by_digest) mine.by_digest[digest] = output;
    for (const auto& [digest, inputs] : table.inputs_of) mine.inputs_of[digest] = inputs;
    if (table.fallback) mine.fallback = table.fallback;
  }
}

json FixtureBackend::to_json() const {
  json out = json::object();
  for (const auto& [op, table] : tables_) {
    json t = json::object();
    if (table.fallback) t["default"] = *table.fallback;
    json entries = json::array();
    for (const auto& [digest, output] : table.by_digest) {
      auto it = table.inputs_of.find(digest);
      if (it != table.inputs_of.end()) {
        entries.push_back({{"inputs", it->second}, {"output", output}});
      } else {
        entries.push_back({{"digest", digest}, {"output", output}});
      }
    }
    t["entries"] = std::move(entries);
    out[op] = std::move(t);
  }
  return out;
}

const json* FixtureBackend::find(const OpTable& table, std::string_view op,
                                 const json& inputs) const {
  auto lookup = [&](const json& key) -> const json* {
    auto it = table.by_digest.find(call_digest(op, key));
    return it == table.by_digest.end() ? nullptr : &it->second;
  };
  if (const json* hit = lookup(inputs)) return hit;

  if (op == ops::classify_image && inputs.contains("k")) {
    json relaxed = inputs;
    relaxed.erase("k");
    if (const json* hit = lookup(relaxed)) return hit;
  }
  if (op == ops::similarity) {
    json swapped = inputs;
    swapped["a"] = inputs.at("b");
    swapped["b"] = inputs.at("a");
    if (const json* hit = lookup(swapped)) return hit;
  }
  return nullptr;
}

json FixtureBackend::call(std::string_view op, const json& inputs, const CallContext&) {
  if (op == ops::similarity && inputs.at("a") == inputs.at("b")) return 1.0;

  auto it = tables_.find(op);
  if (it != tables_.end()) {
    if (const json* hit = find(it->second, op, inputs)) return *hit;
    if (it->second.fallback) return *it->second.fallback;
  }
  throw FixtureMiss("fixture miss: " + std::string(op) + " " + canonical_dump(inputs) +
                    " (digest " + call_digest(op, inputs) + ")");
}

}  // namespace combinterp
