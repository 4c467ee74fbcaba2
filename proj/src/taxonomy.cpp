#include "combinterp/taxonomy.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "combinterp/error.hpp"
#include "combinterp/text.hpp"

namespace combinterp {

using nlohmann::json;

std::string_view to_string(Approach approach) {
  switch (approach) {
    case Approach::problem_driven: return "problem_driven";
    case Approach::similarity_driven: return "similarity_driven";
    case Approach::inspiration_driven: return "inspiration_driven";
  }
  return "";
}

Approach approach_from_string(std::string_view name) {
  std::string n = text::normalize(name);
  for (char& c : n) {
    if (c == '-' || c == ' ') c = '_';
  }
  if (n == "problem_driven") return Approach::problem_driven;
  if (n == "similarity_driven") return Approach::similarity_driven;
  if (n == "inspiration_driven") return Approach::inspiration_driven;
  throw ConfigError("unknown combination approach '" + std::string(name) + "'");
}

const Taxonomy& builtin_taxonomy() {
  static const Taxonomy taxonomy = {
      {Approach::problem_driven, "solution", "provides a specific solution to the base"},
      {Approach::problem_driven, "integration",
       "combines with the base to solve a more complex problem"},
      {Approach::similarity_driven, "complementarity",
       "complements the base, enhancing its original characteristics or functionalities"},
      {Approach::similarity_driven, "harmonization",
       "and base harmoniously combine in function or design, improving overall "
       "consistency and effectiveness"},
      {Approach::inspiration_driven, "innovation",
       "brings novel and unique features or functionalities to the base"},
      {Approach::inspiration_driven, "transformation",
       "completely changes the traditional use or appearance"},
  };
  return taxonomy;
}

void check_taxonomy(const Taxonomy& taxonomy) {
  if (taxonomy.empty()) throw ConfigError("taxonomy is empty");
  std::set<std::string> terms;
  for (const auto& e : taxonomy) {
    if (text::trim(e.term).empty()) throw ConfigError("taxonomy term must be non-empty");
    if (!terms.insert(text::normalize(e.term)).second)
      throw ConfigError("duplicate taxonomy term '" + e.term + "'");
  }
}

Taxonomy taxonomy_from_json(const json& records) {
  if (!records.is_array()) throw ConfigError("taxonomy must be a list of records");
  Taxonomy out;
  for (const auto& r : records) {
    if (!r.is_object() || !r.contains("approach") || !r.contains("term"))
      throw ConfigError("taxonomy record needs 'approach' and 'term': " + r.dump());
    out.push_back({approach_from_string(r.at("approach").get<std::string>()),
                   r.at("term").get<std::string>(), r.value("description", std::string{})});
  }
  check_taxonomy(out);
  return out;
}

json taxonomy_to_json(const Taxonomy& taxonomy) {
  json out = json::array();
  for (const auto& e : taxonomy) {
    out.push_back({{"approach", to_string(e.approach)}, {"term", e.term},
                   {"description", e.description}});
  }
  return out;
}

Taxonomy load_taxonomy(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError("cannot open taxonomy file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string content = buffer.str();
  try {
    const std::string head = text::trim(content);
    if (!head.empty() && head.front() == '[') return taxonomy_from_json(json::parse(head));
    json records = json::array();
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
      if (!text::trim(line).empty()) records.push_back(json::parse(line));
    }
    return taxonomy_from_json(records);
  } catch (const json::exception& e) {
    throw LoadError("invalid taxonomy file '" + path.string() + "': " + e.what());
  }
}

bool is_null_relation(std::string_view label) {
  const std::string n = text::normalize(label);
  return n.empty() || n == "none" || n == "no_relation" || n == "no relation" || n == "na" ||
         n == "n/a";
}

RelationMatch match_relation(std::string_view label, const Taxonomy& taxonomy,
                             const SimilarityFn& scorer, double threshold) {
  if (taxonomy.empty()) throw InputError("match_relation: taxonomy is empty");
  if (is_null_relation(label)) return {taxonomy.front(), -1.0, false};

  std::size_t best = 0;
  double best_score = 0.0;
  for (std::size_t i = 0; i < taxonomy.size(); ++i) {
    double score = 0.0;
    try {
      score = scorer(label, taxonomy[i].term);
    } catch (const Error& e) {
      throw BackendError("similarity failed for relation label '" + std::string(label) +
                         "': " + e.what());
    }
    if (i == 0 || score > best_score) {
      best = i;
      best_score = score;
    }
  }
  return {taxonomy[best], best_score, best_score >= threshold};
}

std::string describe_taxonomy(const Taxonomy& taxonomy) {
  std::ostringstream out;
  const Approach order[] = {Approach::problem_driven, Approach::similarity_driven,
                            Approach::inspiration_driven};
  for (Approach a : order) {
    bool first = true;
    for (const auto& e : taxonomy) {
      if (e.approach != a) continue;
      if (first) {
        std::string name(to_string(a));
        for (char& c : name) {
          if (c == '_') c = '-';
        }
        out << "- " << name << ": ";
      } else {
        out << "; ";
      }
      out << e.term << " (the additive " << e.description << ")";
      first = false;
    }
    if (!first) out << '\n';
  }
  return out.str();
}

}  // namespace combinterp
