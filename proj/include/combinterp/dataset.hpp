#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace combinterp {

inline constexpr std::size_t kMaxDescriptionSentences = 5;

/// One combinational design product: name, image(s), short description and
/// optional expert-annotated base/additive pair.
struct DesignSample {
  std::string id;
  std::string name;
  std::vector<std::string> image_refs;  // first entry is canonical
  std::string description;
  std::optional<std::string> gold_base;
  std::optional<std::string> gold_additive;

  // Directory that relative image refs resolve against. Empty for samples
  // built in memory; not serialized.
  std::filesystem::path source_dir;

  bool has_gold() const { return gold_base.has_value() && gold_additive.has_value(); }

  friend bool operator==(const DesignSample& a, const DesignSample& b) {
    return a.id == b.id && a.name == b.name && a.image_refs == b.image_refs &&
           a.description == b.description && a.gold_base == b.gold_base &&
           a.gold_additive == b.gold_additive;
  }
};

struct Violation {
  std::string field;
  std::string message;
};

/// Verdict of validate_sample. Empty violation list means ok.
struct Validation {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

bool is_remote_locator(std::string_view locator);

/// Resolves the canonical (first) image ref. Remote locators and samples without
/// a source directory return nullopt.
std::optional<std::filesystem::path> resolve_primary_image(const DesignSample& sample);

/// Checks every DesignSample invariant. The readable-image check only applies
/// when the sample has a source directory and a local first image ref.
Validation validate_sample(const DesignSample& sample);

/// Sentence count: '.', '!' or '?' followed by whitespace or end-of-text ends a
/// sentence; segments holding only whitespace are not counted.
std::size_t count_sentences(std::string_view text);

/// Name, ". ", then the description.
std::string combined_text(const DesignSample& sample);

/// Reads a line-delimited JSON manifest. Throws LoadError when the file cannot
/// be read or a line is not a JSON object, ValidationError on the first invalid
/// record.
std::vector<DesignSample> load_dataset(const std::filesystem::path& manifest);

/// Parses one manifest record. Throws ValidationError on schema violations.
DesignSample sample_from_record(const nlohmann::json& record,
                                const std::filesystem::path& source_dir = {});
nlohmann::json sample_to_record(const DesignSample& sample);

void write_dataset(const std::filesystem::path& manifest, const std::vector<DesignSample>& samples);

struct DatasetStats {
  std::size_t samples = 0;
  std::size_t with_gold = 0;
  std::size_t gold_base_in_text = 0;      // case-insensitive substring of combined_text
  std::size_t gold_additive_in_text = 0;
  std::size_t multi_image = 0;
};

DatasetStats dataset_stats(const std::vector<DesignSample>& samples);
nlohmann::json to_json(const DatasetStats& stats);

}  // namespace combinterp
