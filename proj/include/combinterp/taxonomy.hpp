#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace combinterp {

enum class Approach { problem_driven, similarity_driven, inspiration_driven };

std::string_view to_string(Approach approach);
Approach approach_from_string(std::string_view name);  // throws ConfigError

/// A predefined base/additive relation. `description` glosses the relation
/// from the additive's side ("the additive ... the base").
struct RelationEntry {
  Approach approach;
  std::string term;
  std::string description;

  friend bool operator==(const RelationEntry&, const RelationEntry&) = default;
};

struct RelationMatch {
  RelationEntry entry;
  double score = 0.0;  // similarity in [-1, 1]
  bool matched = false;
};

using Taxonomy = std::vector<RelationEntry>;

/// Similarity between two short strings, in [-1, 1].
using SimilarityFn = std::function<double(std::string_view, std::string_view)>;

inline constexpr double kDefaultRelationThreshold = 0.5;

/// The six relations: solution/integration (problem-driven),
/// complementarity/harmonization (similarity-driven),
/// innovation/transformation (inspiration-driven).
const Taxonomy& builtin_taxonomy();

/// Throws ConfigError on empty or duplicate terms or an unknown approach.
void check_taxonomy(const Taxonomy& taxonomy);

/// Accepts either a JSON array of records or one record per line; records use
/// the fields approach, term, description.
Taxonomy load_taxonomy(const std::filesystem::path& path);
Taxonomy taxonomy_from_json(const nlohmann::json& records);
nlohmann::json taxonomy_to_json(const Taxonomy& taxonomy);

/// True for labels a relation extractor uses to say "no relation".
bool is_null_relation(std::string_view label);

/// Best taxonomy entry for a free-form relation label. Ties go to the earlier
/// entry. Null labels ("none", empty) never match and are not scored.
/// Scorer failures are rethrown as BackendError naming the label.
RelationMatch match_relation(std::string_view label, const Taxonomy& taxonomy,
                             const SimilarityFn& scorer,
                             double threshold = kDefaultRelationThreshold);

/// One line per approach listing its relations with their glosses.
std::string describe_taxonomy(const Taxonomy& taxonomy);

}  // namespace combinterp
