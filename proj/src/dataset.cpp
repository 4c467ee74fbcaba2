#include "combinterp/dataset.hpp"

#include <cctype>
#include <fstream>
#include <set>

#include "combinterp/error.hpp"
#include "combinterp/text.hpp"

namespace combinterp {

using nlohmann::json;

bool is_remote_locator(std::string_view locator) {
  return text::starts_with_ci(locator, "http://") || text::starts_with_ci(locator, "https://");
}

std::optional<std::filesystem::path> resolve_primary_image(const DesignSample& sample) {
  if (sample.image_refs.empty() || sample.source_dir.empty()) return std::nullopt;
  const std::string& ref = sample.image_refs.front();
  if (is_remote_locator(ref)) return std::nullopt;
  std::filesystem::path path(ref);
  if (path.is_relative()) path = sample.source_dir / path;
  return path;
}

std::size_t count_sentences(std::string_view text) {
  std::size_t count = 0;
  bool has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool terminator = c == '.' || c == '!' || c == '?';
    if (!std::isspace(static_cast<unsigned char>(c))) has_content = true;
    if (!terminator) continue;
    const bool at_end = i + 1 == text.size();
    if (at_end || std::isspace(static_cast<unsigned char>(text[i + 1]))) {
      ++count;
      has_content = false;
    }
  }
  if (has_content) ++count;
  return count;
}

std::string combined_text(const DesignSample& sample) {
  return sample.name + ". " + sample.description;
}

Validation validate_sample(const DesignSample& sample) {
  Validation v;
  auto add = [&v](std::string field, std::string message) {
    v.violations.push_back({std::move(field), std::move(message)});
  };
  if (text::trim(sample.id).empty()) add("id", "id must be non-empty");
  if (text::trim(sample.name).empty()) add("name", "name must be non-empty");
  if (count_sentences(sample.description) > kMaxDescriptionSentences) {
    add("description", "description has " + std::to_string(count_sentences(sample.description)) +
                           " sentences; at most 5 are allowed");
  }
  if (sample.image_refs.empty()) {
    add("image", "at least one image ref is required");
  } else if (text::trim(sample.image_refs.front()).empty()) {
    add("image", "image ref must be non-empty");
  } else if (auto path = resolve_primary_image(sample)) {
    std::ifstream probe(*path, std::ios::binary);
    if (!probe || !std::filesystem::is_regular_file(*path)) {
      add("image", "image '" + path->string() + "' is not a readable file");
    }
  }
  if (sample.gold_base.has_value() != sample.gold_additive.has_value()) {
    add(sample.gold_base ? "additive" : "base",
        "gold base and gold additive must be given together");
  }
  if (sample.gold_base && text::trim(*sample.gold_base).empty()) add("base", "gold base is empty");
  if (sample.gold_additive && text::trim(*sample.gold_additive).empty())
    add("additive", "gold additive is empty");
  return v;
}

namespace {

std::string record_id_of(const json& record) {
  auto it = record.find("id");
  if (it != record.end() && it->is_string()) return it->get<std::string>();
  if (it != record.end() && it->is_number_integer()) return std::to_string(it->get<long long>());
  return "<missing id>";
}

std::string required_string(const json& record, const char* field, const std::string& id) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null())
    throw ValidationError(id, field, "required field is missing");
  if (!it->is_string()) throw ValidationError(id, field, "must be a string");
  return it->get<std::string>();
}

std::optional<std::string> optional_string(const json& record, const char* field,
                                           const std::string& id) {
  auto it = record.find(field);
  if (it == record.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(id, field, "must be a string or null");
  return it->get<std::string>();
}

}  // namespace

DesignSample sample_from_record(const json& record, const std::filesystem::path& source_dir) {
  const std::string id = record_id_of(record);
  if (!record.is_object()) throw ValidationError(id, "<record>", "record must be a JSON object");

  DesignSample s;
  auto id_it = record.find("id");
  if (id_it == record.end()) throw ValidationError(id, "id", "required field is missing");
  if (id_it->is_number_integer()) {
    s.id = std::to_string(id_it->get<long long>());
  } else if (id_it->is_string()) {
    s.id = id_it->get<std::string>();
  } else {
    throw ValidationError(id, "id", "must be a string or integer");
  }
  s.name = required_string(record, "name", id);
  s.description = required_string(record, "description", id);

  auto image = record.find("image");
  if (image == record.end() || image->is_null()) {
    throw ValidationError(id, "image", "required field is missing");
  } else if (image->is_string()) {
    s.image_refs.push_back(image->get<std::string>());
  } else if (image->is_array()) {
    for (const auto& ref : *image) {
      if (!ref.is_string()) throw ValidationError(id, "image", "image list must hold strings");
      s.image_refs.push_back(ref.get<std::string>());
    }
  } else {
    throw ValidationError(id, "image", "must be a string or a list of strings");
  }
  s.gold_base = optional_string(record, "base", id);
  s.gold_additive = optional_string(record, "additive", id);
  s.source_dir = source_dir;
  return s;
}

json sample_to_record(const DesignSample& s) {
  json r;
  r["id"] = s.id;
  r["name"] = s.name;
  if (s.image_refs.size() == 1) {
    r["image"] = s.image_refs.front();
  } else {
    r["image"] = s.image_refs;
  }
  r["description"] = s.description;
  if (s.gold_base) r["base"] = *s.gold_base;
  if (s.gold_additive) r["additive"] = *s.gold_additive;
  return r;
}

std::vector<DesignSample> load_dataset(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw LoadError("cannot open manifest '" + manifest.string() + "'");
  const std::filesystem::path dir = manifest.parent_path().empty()
                                        ? std::filesystem::current_path()
                                        : manifest.parent_path();

  std::vector<DesignSample> samples;
  std::set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw LoadError(manifest.string() + ":" + std::to_string(line_no) +
                      ": invalid JSON: " + e.what());
    }
    DesignSample s = sample_from_record(record, dir);
    Validation v = validate_sample(s);
    if (!v.ok()) throw ValidationError(s.id, v.violations.front().field, v.violations.front().message);
    if (!seen.insert(s.id).second) throw ValidationError(s.id, "id", "duplicate id");
    samples.push_back(std::move(s));
  }
  return samples;
}

void write_dataset(const std::filesystem::path& manifest, const std::vector<DesignSample>& samples) {
  std::ofstream out(manifest);
  if (!out) throw LoadError("cannot write manifest '" + manifest.string() + "'");
  for (const auto& s : samples) out << sample_to_record(s).dump() << '\n';
}

DatasetStats dataset_stats(const std::vector<DesignSample>& samples) {
  DatasetStats st;
  st.samples = samples.size();
  for (const auto& s : samples) {
    if (s.image_refs.size() > 1) ++st.multi_image;
    if (!s.has_gold()) continue;
    ++st.with_gold;
    const std::string haystack = text::to_lower(combined_text(s));
    if (haystack.find(text::to_lower(*s.gold_base)) != std::string::npos) ++st.gold_base_in_text;
    if (haystack.find(text::to_lower(*s.gold_additive)) != std::string::npos)
      ++st.gold_additive_in_text;
  }
  return st;
}

json to_json(const DatasetStats& st) {
  return json{{"samples", st.samples},
              {"with_gold", st.with_gold},
              {"gold_base_in_text", st.gold_base_in_text},
              {"gold_additive_in_text", st.gold_additive_in_text},
              {"multi_image", st.multi_image}};
}

}  // namespace combinterp
