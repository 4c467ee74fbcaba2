#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "combinterp/dataset.hpp"
#include "combinterp/taxonomy.hpp"

namespace combinterp {

/// Prompt wording for the LLM modes. Placeholders: {name}, {description},
/// {base}, {candidates}, {category_hint}.
struct PromptTemplates {
  std::string vanilla;              // single prompt with two in-context examples
  std::string generative_base;      // step 1: base keyword (image + description)
  std::string generative_nouns;     // step 2: noun listing
  std::string generative_additive;  // step 3: additive by relation analysis
  std::string no_image_nouns;       // no-image step 1: noun listing
  std::string no_image_pair;        // no-image step 2: joint base/additive choice
};

/// Templates compiled in from assets/prompts.
const PromptTemplates& default_templates();

/// Starts from the defaults and replaces every template whose `<field>.txt`
/// exists in `dir`.
PromptTemplates load_templates(const std::filesystem::path& dir);

std::string render_vanilla_prompt(const PromptTemplates& t, const DesignSample& sample);
std::string render_generative_base(const PromptTemplates& t, const DesignSample& sample);
std::string render_generative_nouns(const PromptTemplates& t, const DesignSample& sample);
std::string render_generative_additive(const PromptTemplates& t, const DesignSample& sample,
                                       std::string_view base,
                                       const std::vector<std::string>& candidates,
                                       const Taxonomy& taxonomy);
std::string render_no_image_nouns(const PromptTemplates& t, const DesignSample& sample);
std::string render_no_image_pair(const PromptTemplates& t, const DesignSample& sample,
                                 const std::vector<std::string>& candidates,
                                 const Taxonomy& taxonomy);

// ---------------------------------------------------------------------------
// Reply parsing. Every parser throws ParseError carrying the raw reply.
// ---------------------------------------------------------------------------

struct BaseAdditive {
  std::string base;
  std::string additive;
};

/// "[Output] [Base: X; Additive: Y]", case-insensitive, brackets and the word
/// "Output" optional.
BaseAdditive parse_llm_answer(std::string_view reply);

/// "Base: X", or a bare reply of at most four words.
std::string parse_base_keyword(std::string_view reply);

/// "Additive: X", or a bare reply of at most four words.
std::string parse_additive_keyword(std::string_view reply);

/// "Nouns: a; b; c" (also comma, newline or bullet separated).
std::vector<std::string> parse_noun_list(std::string_view reply);

}  // namespace combinterp
