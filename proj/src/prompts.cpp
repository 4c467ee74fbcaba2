#include "combinterp/prompts.hpp"

#include <fstream>
#include <regex>
#include <sstream>

#include "combinterp/error.hpp"
#include "combinterp/text.hpp"

namespace combinterp {

namespace assets {
const std::vector<std::pair<std::string_view, std::string_view>>& prompt_files();
}

namespace {

std::string asset(std::string_view stem) {
  for (const auto& [name, content] : assets::prompt_files()) {
    if (name == stem) return std::string(content);
  }
  throw ConfigError("missing built-in prompt asset '" + std::string(stem) + "'");
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

// Strips whitespace, quotes, emphasis markers and trailing punctuation.
std::string clean_label(std::string_view raw) {
  std::string s = text::trim(raw);
  auto strip = [](char c) {
    return c == '"' || c == '\'' || c == '*' || c == '`' || c == '[' || c == ']' || c == '<' ||
           c == '>' || c == '.' || c == ',' || c == ';' || c == ':';
  };
  while (!s.empty() && strip(s.front())) s.erase(s.begin());
  while (!s.empty() && strip(s.back())) s.pop_back();
  return text::trim(s);
}

std::string labelled_value(std::string_view reply, const char* label) {
  const std::string r(reply);
  const std::regex pattern(std::string(label) + R"(\s*:\s*([^;\]\n]*))", std::regex::icase);
  std::smatch m;
  if (std::regex_search(r, m, pattern)) return clean_label(m[1].str());
  return {};
}

std::string keyword_reply(std::string_view reply, const char* label, const char* what) {
  std::string value = labelled_value(reply, label);
  if (value.empty()) {
    // Accept a bare keyword; anything sentence-like is rejected.
    const std::string bare = clean_label(reply);
    const auto words = text::split_whitespace(bare);
    if (!words.empty() && words.size() <= 4 && bare.find('\n') == std::string::npos) value = bare;
  }
  if (value.empty()) throw ParseError(std::string("no ") + what + " keyword in reply", std::string(reply));
  return value;
}

}  // namespace

const PromptTemplates& default_templates() {
  static const PromptTemplates t{asset("vanilla"),          asset("generative_base"),
                                 asset("generative_nouns"), asset("generative_additive"),
                                 asset("no_image_nouns"),   asset("no_image_pair")};
  return t;
}

PromptTemplates load_templates(const std::filesystem::path& dir) {
  PromptTemplates t = default_templates();
  const std::pair<const char*, std::string*> fields[] = {
      {"vanilla", &t.vanilla},
      {"generative_base", &t.generative_base},
      {"generative_nouns", &t.generative_nouns},
      {"generative_additive", &t.generative_additive},
      {"no_image_nouns", &t.no_image_nouns},
      {"no_image_pair", &t.no_image_pair},
  };
  if (!std::filesystem::is_directory(dir))
    throw ConfigError("prompt directory '" + dir.string() + "' does not exist");
  for (const auto& [stem, target] : fields) {
    std::ifstream in(dir / (std::string(stem) + ".txt"));
    if (!in) continue;
    std::stringstream buffer;
    buffer << in.rdbuf();
    *target = buffer.str();
  }
  return t;
}

std::string render_vanilla_prompt(const PromptTemplates& t, const DesignSample& s) {
  return text::substitute(t.vanilla, {{"name", s.name}, {"description", s.description}});
}

std::string render_generative_base(const PromptTemplates& t, const DesignSample& s) {
  return text::substitute(t.generative_base, {{"name", s.name}, {"description", s.description}});
}

std::string render_generative_nouns(const PromptTemplates& t, const DesignSample& s) {
  return text::substitute(t.generative_nouns, {{"name", s.name}, {"description", s.description}});
}

std::string render_generative_additive(const PromptTemplates& t, const DesignSample& s,
                                       std::string_view base,
                                       const std::vector<std::string>& candidates,
                                       const Taxonomy& taxonomy) {
  return text::substitute(t.generative_additive, {{"name", s.name},
                                                  {"description", s.description},
                                                  {"base", std::string(base)},
                                                  {"candidates", join(candidates, "; ")},
                                                  {"category_hint", describe_taxonomy(taxonomy)}});
}

std::string render_no_image_nouns(const PromptTemplates& t, const DesignSample& s) {
  return text::substitute(t.no_image_nouns, {{"name", s.name}, {"description", s.description}});
}

std::string render_no_image_pair(const PromptTemplates& t, const DesignSample& s,
                                 const std::vector<std::string>& candidates,
                                 const Taxonomy& taxonomy) {
  return text::substitute(t.no_image_pair, {{"name", s.name},
                                            {"description", s.description},
                                            {"candidates", join(candidates, "; ")},
                                            {"category_hint", describe_taxonomy(taxonomy)}});
}

BaseAdditive parse_llm_answer(std::string_view reply) {
  static const std::regex pattern(
      R"(base\s*\**\s*:\s*([^;\]\n]*?)\s*[;,\n]\s*\**\s*additive\s*\**\s*:\s*([^\]\n]*))",
      std::regex::icase);
  const std::string r(reply);
  std::smatch m;
  if (!std::regex_search(r, m, pattern))
    throw ParseError("reply has no 'Base: ...; Additive: ...' answer", r);
  BaseAdditive out{clean_label(m[1].str()), clean_label(m[2].str())};
  if (out.base.empty()) throw ParseError("empty base label", r);
  if (out.additive.empty()) throw ParseError("empty additive label", r);
  return out;
}

std::string parse_base_keyword(std::string_view reply) { return keyword_reply(reply, "base", "base"); }

std::string parse_additive_keyword(std::string_view reply) {
  return keyword_reply(reply, "additive", "additive");
}

std::vector<std::string> parse_noun_list(std::string_view reply) {
  const std::string r(reply);
  std::string body = r;
  static const std::regex label(R"(nouns?\s*:)", std::regex::icase);
  std::smatch m;
  if (std::regex_search(r, m, label)) body = m.suffix().str();

  std::vector<std::string> nouns;
  std::string current;
  auto flush = [&] {
    std::string item = text::trim(current);
    current.clear();
    // Drop list bullets and numbering.
    while (!item.empty() && (item.front() == '-' || item.front() == '*' || item.front() == '+'))
      item = text::trim(item.substr(1));
    std::size_t digits = 0;
    while (digits < item.size() && std::isdigit(static_cast<unsigned char>(item[digits]))) ++digits;
    if (digits > 0 && digits < item.size() && (item[digits] == '.' || item[digits] == ')'))
      item = text::trim(item.substr(digits + 1));
    item = clean_label(item);
    if (!item.empty() && text::split_whitespace(item).size() <= 6) nouns.push_back(item);
  };
  for (char c : body) {
    if (c == ';' || c == ',' || c == '\n') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  if (nouns.empty()) throw ParseError("reply lists no nouns", r);
  return nouns;
}

}  // namespace combinterp
