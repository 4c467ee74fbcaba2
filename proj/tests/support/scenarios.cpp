#include "scenarios.hpp"

#include <stdexcept>

#include "combinterp/prompts.hpp"
#include "combinterp/taxonomy.hpp"

using namespace combinterp;
using nlohmann::json;

namespace scenarios {

std::filesystem::path data_dir() { return COMBINTERP_TEST_DATA; }
std::filesystem::path manifest_path() { return data_dir() / "samples.jsonl"; }

const std::vector<DesignSample>& bundled() {
  static const std::vector<DesignSample> samples = load_dataset(manifest_path());
  return samples;
}

const DesignSample& sample(const std::string& id) {
  for (const auto& s : bundled()) {
    if (s.id == id) return s;
  }
  throw std::runtime_error("no test sample " + id);
}

std::vector<CandidateEntity> spans(const std::string& text, const std::vector<std::string>& words) {
  std::vector<CandidateEntity> out;
  std::size_t from = 0;
  for (const auto& w : words) {
    const std::size_t at = text.find(w, from);
    if (at == std::string::npos) throw std::runtime_error("'" + w + "' not in text");
    out.push_back({w, at, at + w.size()});
    from = at + w.size();
  }
  return out;
}

FixtureBackend base_fixture() {
  FixtureBackend f;
  f.set_default(ops::similarity, 0.0);
  f.set_default(ops::extract_relation, {{"label", "none"}, {"confidence", 0.9}});
  return f;
}

void script_relation(FixtureBackend& f, const std::string& text, const std::string& head,
                     const std::string& tail, const std::string& label, double confidence,
                     const std::string* image) {
  json in = {{"text", text}, {"head", head}, {"tail", tail}};
  if (image) in["image"] = *image;
  f.script(ops::extract_relation, in, {{"label", label}, {"confidence", confidence}});
}

void script_conversation(FixtureBackend& f, const std::vector<std::pair<std::string, std::string>>& turns,
                         const std::string* image) {
  std::vector<ChatMessage> messages;
  for (const auto& [prompt, reply] : turns) {
    messages.push_back({"user", prompt});
    json in = {{"messages", messages}};
    if (image) in["image"] = *image;
    f.script(ops::chat, in, reply);
    messages.push_back({"assistant", reply});
  }
}

namespace {

void script_sim(FixtureBackend& f, const std::string& a, const std::string& b, double v) {
  f.script(ops::similarity, {{"a", a}, {"b", b}}, v);
}

void script_entities(FixtureBackend& f, const std::string& text, const std::vector<std::string>& words) {
  f.script(ops::extract_entities, {{"text", text}}, spans(text, words));
}

}  // namespace

std::vector<std::string> bionic_entities() {
  return {"design idea", "vase series", "tree trunks", "branches", "awareness", "importance", "environment"};
}

FixtureBackend bionic_unimodal() {
  const DesignSample& s = sample("bionic");
  const std::string text = combined_text(s);
  FixtureBackend f = base_fixture();
  f.script(ops::classify_image, {{"image", s.image_refs.front()}},
           json::array({{{"label", "vase"}, {"confidence", 0.95}},
                        {{"label", "decoration"}, {"confidence", 0.9}},
                        {{"label", "wood"}, {"confidence", 0.86}},
                        {{"label", "no person"}, {"confidence", 0.8}},
                        {{"label", "still life"}, {"confidence", 0.74}}}));
  script_entities(f, text, bionic_entities());
  script_sim(f, "vase series", "vase", 0.8);
  script_sim(f, "vase series", "decoration", 0.41);
  script_sim(f, "tree trunks", "wood", 0.55);
  script_relation(f, text, "vase series", "tree trunks", "inspired by", 0.74);
  script_relation(f, text, "tree trunks", "design idea", "inspired by", 0.6);
  script_sim(f, "inspired by", "innovation", 0.64);
  script_sim(f, "inspired by", "transformation", 0.31);
  return f;
}

FixtureBackend sharp1_unimodal() {
  const DesignSample& s = sample("2");
  const std::string text = combined_text(s);
  FixtureBackend f = base_fixture();
  f.script(ops::classify_image, {{"image", s.image_refs.front()}},
           json::array({{{"label", "knife"}, {"confidence", 0.93}},
                        {{"label", "kitchen"}, {"confidence", 0.8}},
                        {{"label", "steel"}, {"confidence", 0.6}}}));
  script_entities(f, text, {"knife block", "knife sharpener", "combination", "functions", "users", "knife sharpener"});
  script_sim(f, "knife block", "knife", 0.82);
  script_sim(f, "knife sharpener", "knife", 0.79);
  script_sim(f, "knife block", "kitchen", 0.5);
  script_relation(f, text, "knife block", "knife sharpener", "part of", 0.7);
  script_sim(f, "part of", "integration", 0.71);
  return f;
}

std::vector<double> eggboard_image_vector() { return {1.0, 0.2, 0.0, 0.1}; }

FixtureBackend eggboard_multimodal() {
  const DesignSample& s = sample("eggboard");
  const std::string text = combined_text(s);
  const std::string image = s.image_refs.front();
  FixtureBackend f = base_fixture();
  script_entities(f, text, {"design", "pendant luminaire", "principle", "lighting option", "egg cartons",
                            "sound absorption qualities", "surface structure"});
  f.set_default(ops::embed_text, json::array({0.0, 0.0, 1.0, 0.0}));
  f.script(ops::embed_image, {{"image", image}}, eggboard_image_vector());
  f.script(ops::embed_text, {{"text", "pendant luminaire"}}, json::array({0.9, 0.25, 0.05, 0.1}));
  f.script(ops::embed_text, {{"text", "lighting option"}}, json::array({0.5, 0.1, 0.5, 0.0}));
  f.script(ops::embed_text, {{"text", "egg cartons"}}, json::array({0.3, 0.0, 0.8, 0.2}));
  script_relation(f, text, "pendant luminaire", "egg cartons", "inspired by", 0.8, &image);
  script_relation(f, text, "pendant luminaire", "lighting option", "same as", 0.85, &image);
  script_sim(f, "inspired by", "innovation", 0.64);
  script_sim(f, "same as", "complementarity", 0.2);
  return f;
}

FixtureBackend yedoo_vanilla() {
  const DesignSample& s = sample("yedoo");
  const std::string image = s.image_refs.front();
  FixtureBackend f;
  script_conversation(f, {{render_vanilla_prompt(default_templates(), s), kYedooReply}}, &image);
  return f;
}

namespace {

const char* kRackNouns = "Nouns: Baby Bottle Drying Rack; form; tree shape; water pooling; minerals; bacteria";

}  // namespace

FixtureBackend drying_rack_generative() {
  const DesignSample& s = sample("1");
  const std::string image = s.image_refs.front();
  const auto& t = default_templates();
  const std::vector<std::string> nouns = {"Baby Bottle Drying Rack", "form", "tree shape", "water pooling",
                                          "minerals", "bacteria"};
  FixtureBackend f;
  script_conversation(f,
                      {{render_generative_base(t, s), "Base: Drying Rack"},
                       {render_generative_nouns(t, s), kRackNouns},
                       {render_generative_additive(t, s, "Drying Rack", nouns, builtin_taxonomy()),
                        "The tree shape inspires the form of the rack.\nAdditive: Tree"}},
                      &image);
  return f;
}

FixtureBackend drying_rack_no_image() {
  const DesignSample& s = sample("1");
  const auto& t = default_templates();
  const std::vector<std::string> nouns = {"Baby Bottle Drying Rack", "form", "tree shape", "water pooling",
                                          "minerals", "bacteria"};
  FixtureBackend f;
  script_conversation(f,
                      {{render_no_image_nouns(t, s), kRackNouns},
                       {render_no_image_pair(t, s, nouns, builtin_taxonomy()),
                        "Output [Base: Drying Rack; Additive: Tree]"}},
                      nullptr);
  return f;
}

FixtureBackend all_scenarios() {
  FixtureBackend f = bionic_unimodal();
  f.merge(sharp1_unimodal());
  f.merge(eggboard_multimodal());
  f.merge(yedoo_vanilla());
  f.merge(drying_rack_generative());
  f.merge(drying_rack_no_image());
  return f;
}

std::shared_ptr<FixtureBackend> shared(FixtureBackend f) { return std::make_shared<FixtureBackend>(std::move(f)); }

}  // namespace scenarios
