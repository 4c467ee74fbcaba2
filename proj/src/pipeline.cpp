#include "combinterp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "combinterp/error.hpp"
#include "combinterp/kernels.hpp"
#include "combinterp/log.hpp"
#include "combinterp/text.hpp"

namespace combinterp {

using nlohmann::json;

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::unimodal: return "unimodal";
    case Mode::multimodal: return "multimodal";
    case Mode::generative: return "generative";
    case Mode::vanilla: return "vanilla";
    case Mode::relation_pairs: return "relation_pairs";
  }
  return "";
}

Mode mode_from_string(std::string_view name) {
  std::string n = text::normalize(name);
  std::replace(n.begin(), n.end(), '-', '_');
  for (Mode m : {Mode::unimodal, Mode::multimodal, Mode::generative, Mode::vanilla,
                 Mode::relation_pairs}) {
    if (n == to_string(m)) return m;
  }
  throw ConfigError("unknown mode '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

namespace {

json match_to_json(const RelationMatch& m) {
  return {{"term", m.entry.term},
          {"approach", to_string(m.entry.approach)},
          {"description", m.entry.description},
          {"score", m.score},
          {"matched", m.matched}};
}

RelationMatch match_from_json(const json& j) {
  RelationMatch m;
  m.entry.term = j.at("term").get<std::string>();
  m.entry.approach = approach_from_string(j.at("approach").get<std::string>());
  m.entry.description = j.value("description", std::string{});
  m.score = j.at("score").get<double>();
  m.matched = j.at("matched").get<bool>();
  return m;
}

}  // namespace

json to_json(const Trace& t) {
  json j;
  j["image_labels"] = t.image_labels;
  j["candidates"] = t.candidates;
  json scores = json::array();
  for (const auto& s : t.base_scores) {
    json e = {{"candidate", s.candidate}, {"score", s.score}};
    if (s.best_label) {
      e["best_label"] = *s.best_label;
      e["label_confidence"] = s.label_confidence;
    }
    scores.push_back(std::move(e));
  }
  j["base_scores"] = std::move(scores);
  json rels = json::array();
  for (const auto& r : t.relations) {
    rels.push_back({{"candidate", r.candidate},
                    {"prediction", r.prediction},
                    {"match", match_to_json(r.match)}});
  }
  j["relations"] = std::move(rels);
  json pairs = json::array();
  for (const auto& p : t.pair_relations) {
    pairs.push_back({{"head", p.head},
                     {"tail", p.tail},
                     {"prediction", p.prediction},
                     {"match", match_to_json(p.match)}});
  }
  j["pair_relations"] = std::move(pairs);
  j["generated_nouns"] = t.generated_nouns;
  json exchanges = json::array();
  for (const auto& e : t.prompts_and_replies)
    exchanges.push_back({{"step", e.step}, {"prompt", e.prompt}, {"reply", e.reply}});
  j["prompts_and_replies"] = std::move(exchanges);
  j["fallback_used"] = t.fallback_used;
  return j;
}

Trace trace_from_json(const json& j) {
  Trace t;
  t.image_labels = j.value("image_labels", std::vector<LabelPrediction>{});
  t.candidates = j.value("candidates", std::vector<CandidateEntity>{});
  for (const auto& e : j.value("base_scores", json::array())) {
    BaseScore s{e.at("candidate").get<CandidateEntity>(), e.at("score").get<double>(), std::nullopt,
                0.0};
    if (e.contains("best_label")) {
      s.best_label = e.at("best_label").get<std::string>();
      s.label_confidence = e.value("label_confidence", 0.0);
    }
    t.base_scores.push_back(std::move(s));
  }
  for (const auto& e : j.value("relations", json::array())) {
    t.relations.push_back({e.at("candidate").get<CandidateEntity>(),
                           e.at("prediction").get<RelationPrediction>(),
                           match_from_json(e.at("match"))});
  }
  for (const auto& e : j.value("pair_relations", json::array())) {
    t.pair_relations.push_back({e.at("head").get<CandidateEntity>(),
                                e.at("tail").get<CandidateEntity>(),
                                e.at("prediction").get<RelationPrediction>(),
                                match_from_json(e.at("match"))});
  }
  t.generated_nouns = j.value("generated_nouns", std::vector<std::string>{});
  for (const auto& e : j.value("prompts_and_replies", json::array())) {
    t.prompts_and_replies.push_back({e.at("step").get<std::string>(),
                                     e.at("prompt").get<std::string>(),
                                     e.at("reply").get<std::string>()});
  }
  t.fallback_used = j.value("fallback_used", false);
  return t;
}

json to_json(const InterpretationResult& r, bool include_trace) {
  json j = {{"sample_id", r.sample_id},
            {"mode", to_string(r.mode)},
            {"base", r.base},
            {"additive", r.additive},
            {"used_image", r.used_image}};
  if (include_trace && r.has_trace) j["trace"] = to_json(r.trace);
  return j;
}

InterpretationResult result_from_json(const json& j) {
  try {
    InterpretationResult r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.mode = mode_from_string(j.at("mode").get<std::string>());
    r.base = j.at("base").get<std::string>();
    r.additive = j.at("additive").get<std::string>();
    r.used_image = j.value("used_image", true);
    r.has_trace = j.contains("trace");
    if (r.has_trace) r.trace = trace_from_json(j.at("trace"));
    return r;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed result record: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

namespace {

template <typename F>
auto at_step(std::string_view step, F&& f) {
  try {
    return f();
  } catch (const FixtureMiss& e) {
    throw FixtureMiss(std::string(step) + ": " + e.what());
  } catch (const BackendError& e) {
    throw BackendError(std::string(step) + ": " + e.what());
  }
}

bool same_text(std::string_view a, std::string_view b) { return text::normalize(a) == text::normalize(b); }

bool earlier(const CandidateEntity& a, const CandidateEntity& b) {
  return a.start != b.start ? a.start < b.start : a.end < b.end;
}

// First occurrence of each distinct (normalized) text, in span order.
std::vector<CandidateEntity> distinct_candidates(std::vector<CandidateEntity> candidates) {
  std::stable_sort(candidates.begin(), candidates.end(), earlier);
  std::vector<CandidateEntity> out;
  for (auto& c : candidates) {
    const bool seen = std::any_of(out.begin(), out.end(),
                                  [&](const CandidateEntity& o) { return same_text(o.text, c.text); });
    if (!seen) out.push_back(std::move(c));
  }
  return out;
}

struct ScoredRelation {
  RelationPrediction prediction;
  RelationMatch match;
};

// True when `a` ranks strictly above `b` (match flag, match score, confidence).
bool better_relation(const ScoredRelation& a, const ScoredRelation& b) {
  if (a.match.matched != b.match.matched) return a.match.matched;
  if (a.match.score != b.match.score) return a.match.score > b.match.score;
  return a.prediction.confidence > b.prediction.confidence;
}

// Scores head -> tail; undirected predictions are also scored tail -> head and
// the better orientation kept.
ScoredRelation relate(std::string_view text, std::string_view head, std::string_view tail,
                      ModelClient& client, const PipelineConfig& cfg, const ImageInput* image) {
  const SimilarityFn scorer = client.similarity_fn();
  ScoredRelation forward;
  forward.prediction = at_step("extract_relation",
                               [&] { return client.extract_relation(text, head, tail, image); });
  forward.match = at_step("relation_match", [&] {
    return match_relation(forward.prediction.label, cfg.taxonomy, scorer, cfg.relation_threshold);
  });
  if (forward.prediction.directed) return forward;

  ScoredRelation backward;
  backward.prediction = at_step("extract_relation",
                                [&] { return client.extract_relation(text, tail, head, image); });
  backward.match = at_step("relation_match", [&] {
    return match_relation(backward.prediction.label, cfg.taxonomy, scorer, cfg.relation_threshold);
  });
  return better_relation(backward, forward) ? backward : forward;
}

void require_distinct(const InterpretationResult& r) {
  if (same_text(r.base, r.additive))
    throw InterpretationError("sample '" + r.sample_id + "': base and additive are both '" +
                              r.base + "'");
}

void note_extra_images(const DesignSample& s) {
  if (s.image_refs.size() > 1) {
    log::info("sample '" + s.id + "': " + std::to_string(s.image_refs.size() - 1) +
              " extra image(s) ignored; only the first is used");
  }
}

std::vector<CandidateEntity> extract_candidates(const DesignSample& sample, const std::string& text,
                                                ModelClient& client) {
  auto candidates = at_step("extract_entities", [&] { return client.extract_entities(text); });
  if (candidates.empty())
    throw InterpretationError("sample '" + sample.id + "': no noun entities");
  return candidates;
}

}  // namespace

// ---------------------------------------------------------------------------
// Additive selection and pair scoring
// ---------------------------------------------------------------------------

AdditiveSelection select_additive(std::string_view base, const std::vector<CandidateEntity>& candidates,
                                  std::string_view text, ModelClient& client,
                                  const PipelineConfig& cfg, const ImageInput* image) {
  if (candidates.empty()) throw InputError("select_additive: no candidates");

  std::vector<CandidateEntity> pool;
  for (auto& c : distinct_candidates(candidates)) {
    if (!same_text(c.text, base)) pool.push_back(std::move(c));
  }
  if (pool.empty())
    throw InterpretationError("no additive candidate distinct from base '" + std::string(base) + "'");

  AdditiveSelection out;
  std::vector<ScoredRelation> scored;
  for (const auto& c : pool) {
    ScoredRelation r = relate(text, base, c.text, client, cfg, image);
    out.relations.push_back({c, r.prediction, r.match});
    scored.push_back(std::move(r));
  }

  // pool is in span order, so strict comparisons keep the earliest on ties.
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!scored[i].match.matched) continue;
    if (!best || better_relation(scored[i], scored[*best])) best = i;
  }
  if (best) {
    out.additive = pool[*best];
    return out;
  }

  out.fallback_used = true;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (is_null_relation(scored[i].prediction.label)) continue;
    if (!best || scored[i].prediction.confidence > scored[*best].prediction.confidence) best = i;
  }
  if (best) {
    out.additive = pool[*best];
    return out;
  }

  double lowest = 0.0;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const double s = at_step("similarity", [&] { return client.similarity(base, pool[i].text); });
    if (!best || s < lowest) {
      best = i;
      lowest = s;
    }
  }
  out.additive = pool[*best];
  return out;
}

std::vector<std::pair<CandidateEntity, CandidateEntity>> enumerate_candidate_pairs(
    std::vector<CandidateEntity> candidates) {
  if (candidates.size() < 2)
    throw InputError("enumerate_candidate_pairs: need at least 2 candidates, got " +
                     std::to_string(candidates.size()));
  std::stable_sort(candidates.begin(), candidates.end(), earlier);
  std::vector<std::pair<CandidateEntity, CandidateEntity>> pairs;
  pairs.reserve(candidates.size() * (candidates.size() - 1) / 2);
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    for (std::size_t j = i + 1; j < candidates.size(); ++j) pairs.emplace_back(candidates[i], candidates[j]);
  }
  return pairs;
}

std::vector<PairRelation> score_candidate_pairs(const std::vector<CandidateEntity>& candidates,
                                                std::string_view text, ModelClient& client,
                                                const PipelineConfig& cfg, const ImageInput* image) {
  auto pool = distinct_candidates(candidates);
  if (pool.size() < 2) return {};
  auto pairs = enumerate_candidate_pairs(pool);

  if (cfg.max_pairs > 0 && pairs.size() > cfg.max_pairs) {
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(cfg.seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(cfg.max_pairs);
    std::sort(order.begin(), order.end());
    std::vector<std::pair<CandidateEntity, CandidateEntity>> sampled;
    for (std::size_t i : order) sampled.push_back(pairs[i]);
    pairs = std::move(sampled);
  }

  std::vector<PairRelation> out;
  out.reserve(pairs.size());
  for (const auto& [a, b] : pairs) {
    ScoredRelation r = relate(text, a.text, b.text, client, cfg, image);
    // Orientation follows the relation: head is the base, tail the additive.
    const bool flipped = r.prediction.head != a.text;
    out.push_back({flipped ? b : a, flipped ? a : b, r.prediction, r.match});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Modes
// ---------------------------------------------------------------------------

InterpretationResult interpret_unimodal(const DesignSample& sample, ModelClient& client,
                                        const PipelineConfig& cfg) {
  note_extra_images(sample);
  InterpretationResult r;
  r.sample_id = sample.id;
  r.mode = Mode::unimodal;
  r.used_image = true;

  const ImageInput image = primary_image(sample);
  r.trace.image_labels =
      at_step("classify_image", [&] { return client.classify_image(image, cfg.k_labels); });
  if (r.trace.image_labels.empty())
    throw InterpretationError("sample '" + sample.id + "': image classifier returned no labels");

  const std::string text = combined_text(sample);
  r.trace.candidates = extract_candidates(sample, text, client);

  // Base: candidate most similar to any image label.
  std::map<std::string, BaseScore> memo;
  std::optional<std::size_t> best;
  for (const auto& c : r.trace.candidates) {
    auto it = memo.find(c.text);
    if (it == memo.end()) {
      BaseScore s{c, -2.0, std::nullopt, 0.0};
      for (const auto& label : r.trace.image_labels) {
        const double v = at_step("similarity", [&] { return client.similarity(c.text, label.label); });
        if (v > s.score || (v == s.score && label.confidence > s.label_confidence)) {
          s.score = v;
          s.best_label = label.label;
          s.label_confidence = label.confidence;
        }
      }
      it = memo.emplace(c.text, s).first;
    }
    BaseScore s = it->second;
    s.candidate = c;
    r.trace.base_scores.push_back(s);
    const std::size_t i = r.trace.base_scores.size() - 1;
    if (!best) {
      best = i;
      continue;
    }
    const BaseScore& cur = r.trace.base_scores[*best];
    if (s.score > cur.score || (s.score == cur.score && s.label_confidence > cur.label_confidence))
      best = i;
  }
  const CandidateEntity base = r.trace.base_scores[*best].candidate;
  r.base = base.text;

  AdditiveSelection sel = select_additive(r.base, r.trace.candidates, text, client, cfg);
  r.additive = sel.additive.text;
  r.trace.relations = std::move(sel.relations);
  r.trace.fallback_used = sel.fallback_used;
  if (cfg.pair_diagnostics)
    r.trace.pair_relations = score_candidate_pairs(r.trace.candidates, text, client, cfg);
  require_distinct(r);
  return r;
}

InterpretationResult interpret_multimodal(const DesignSample& sample, ModelClient& client,
                                          const PipelineConfig& cfg) {
  note_extra_images(sample);
  InterpretationResult r;
  r.sample_id = sample.id;
  r.mode = Mode::multimodal;
  r.used_image = true;

  const ImageInput image = primary_image(sample);
  const std::string text = combined_text(sample);
  r.trace.candidates = extract_candidates(sample, text, client);

  const EmbeddingVector image_vec = at_step("embed_image", [&] { return client.embed_image(image); });
  if (std::all_of(image_vec.values.begin(), image_vec.values.end(), [](double v) { return v == 0.0; }))
    throw InputError("sample '" + sample.id + "': image embedding is the zero vector");

  std::map<std::string, double> memo;
  std::optional<std::size_t> best;
  for (const auto& c : r.trace.candidates) {
    auto it = memo.find(c.text);
    if (it == memo.end()) {
      const EmbeddingVector v = at_step("embed_text", [&] { return client.embed_text(c.text); });
      if (v.dim() != image_vec.dim()) {
        throw ConfigError("text embedding dimension " + std::to_string(v.dim()) +
                          " differs from image embedding dimension " +
                          std::to_string(image_vec.dim()));
      }
      if (std::all_of(v.values.begin(), v.values.end(), [](double x) { return x == 0.0; }))
        throw InputError("candidate '" + c.text + "' has a zero text embedding");
      it = memo.emplace(c.text, kernels::compatibility_score(v.values, image_vec.values)).first;
    }
    r.trace.base_scores.push_back({c, it->second, std::nullopt, 0.0});
    const std::size_t i = r.trace.base_scores.size() - 1;
    if (!best || it->second > r.trace.base_scores[*best].score) best = i;
  }
  r.base = r.trace.base_scores[*best].candidate.text;

  AdditiveSelection sel = select_additive(r.base, r.trace.candidates, text, client, cfg, &image);
  r.additive = sel.additive.text;
  r.trace.relations = std::move(sel.relations);
  r.trace.fallback_used = sel.fallback_used;
  if (cfg.pair_diagnostics)
    r.trace.pair_relations = score_candidate_pairs(r.trace.candidates, text, client, cfg, &image);
  require_distinct(r);
  return r;
}

namespace {

// Multi-turn chat that records each exchange in the trace.
class Conversation {
 public:
  Conversation(ModelClient& client, Trace& trace, const ImageInput* image)
      : client_(client), trace_(trace), image_(image) {}

  std::string ask(std::string step, std::string prompt) {
    messages_.push_back({"user", prompt});
    std::string reply = at_step("chat/" + step, [&] { return client_.chat(messages_, image_); });
    messages_.push_back({"assistant", reply});
    trace_.prompts_and_replies.push_back({std::move(step), std::move(prompt), reply});
    return reply;
  }

 private:
  ModelClient& client_;
  Trace& trace_;
  const ImageInput* image_;
  std::vector<ChatMessage> messages_;
};

InterpretationResult generative_impl(const DesignSample& sample, ModelClient& client,
                                     const PipelineConfig& cfg, bool use_image) {
  InterpretationResult r;
  r.sample_id = sample.id;
  r.mode = Mode::generative;
  r.used_image = use_image;

  std::optional<ImageInput> image;
  if (use_image) {
    note_extra_images(sample);
    image = primary_image(sample);
  }
  Conversation chat(client, r.trace, image ? &*image : nullptr);

  if (use_image) {
    r.base = parse_base_keyword(chat.ask("base", render_generative_base(cfg.templates, sample)));
    r.trace.generated_nouns =
        parse_noun_list(chat.ask("nouns", render_generative_nouns(cfg.templates, sample)));
    r.additive = parse_additive_keyword(
        chat.ask("additive", render_generative_additive(cfg.templates, sample, r.base,
                                                        r.trace.generated_nouns, cfg.taxonomy)));
  } else {
    r.trace.generated_nouns =
        parse_noun_list(chat.ask("nouns", render_no_image_nouns(cfg.templates, sample)));
    const BaseAdditive pair = parse_llm_answer(chat.ask(
        "pair", render_no_image_pair(cfg.templates, sample, r.trace.generated_nouns, cfg.taxonomy)));
    r.base = pair.base;
    r.additive = pair.additive;
  }
  require_distinct(r);
  return r;
}

InterpretationResult vanilla_impl(const DesignSample& sample, ModelClient& client,
                                  const PipelineConfig& cfg, bool use_image) {
  InterpretationResult r;
  r.sample_id = sample.id;
  r.mode = Mode::vanilla;
  r.used_image = use_image;
  std::optional<ImageInput> image;
  if (use_image) {
    note_extra_images(sample);
    image = primary_image(sample);
  }
  Conversation chat(client, r.trace, image ? &*image : nullptr);
  const BaseAdditive pair = parse_llm_answer(chat.ask("answer", render_vanilla_prompt(cfg.templates, sample)));
  r.base = pair.base;
  r.additive = pair.additive;
  require_distinct(r);
  return r;
}

InterpretationResult relation_pairs_impl(const DesignSample& sample, ModelClient& client,
                                         const PipelineConfig& cfg) {
  InterpretationResult r;
  r.sample_id = sample.id;
  r.mode = Mode::relation_pairs;
  r.used_image = false;

  const std::string text = combined_text(sample);
  r.trace.candidates = extract_candidates(sample, text, client);
  r.trace.pair_relations = score_candidate_pairs(r.trace.candidates, text, client, cfg);
  if (r.trace.pair_relations.empty())
    throw InterpretationError("sample '" + sample.id + "': fewer than two distinct candidates");

  const auto& pairs = r.trace.pair_relations;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!pairs[i].match.matched) continue;
    if (!best || better_relation({pairs[i].prediction, pairs[i].match},
                                 {pairs[*best].prediction, pairs[*best].match}))
      best = i;
  }
  if (!best) {
    r.trace.fallback_used = true;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (is_null_relation(pairs[i].prediction.label)) continue;
      if (!best || pairs[i].prediction.confidence > pairs[*best].prediction.confidence) best = i;
    }
    if (!best) best = 0;
  }
  r.base = pairs[*best].head.text;
  r.additive = pairs[*best].tail.text;
  require_distinct(r);
  return r;
}

}  // namespace

InterpretationResult interpret_generative(const DesignSample& sample, ModelClient& client,
                                          const PipelineConfig& cfg) {
  return generative_impl(sample, client, cfg, true);
}

InterpretationResult interpret_vanilla(const DesignSample& sample, ModelClient& client,
                                       const PipelineConfig& cfg) {
  return vanilla_impl(sample, client, cfg, true);
}

InterpretationResult interpret_no_image(const DesignSample& sample, ModelClient& client,
                                        const PipelineConfig& cfg, Mode mode) {
  switch (mode) {
    case Mode::generative: return generative_impl(sample, client, cfg, false);
    case Mode::vanilla: return vanilla_impl(sample, client, cfg, false);
    case Mode::relation_pairs: return relation_pairs_impl(sample, client, cfg);
    default: break;
  }
  throw ConfigError("mode '" + std::string(to_string(mode)) + "' has no image-free variant");
}

InterpretationResult interpret(const DesignSample& sample, ModelClient& client,
                               const PipelineConfig& cfg, Mode mode, bool use_image) {
  if (!use_image || mode == Mode::relation_pairs) return interpret_no_image(sample, client, cfg, mode);
  switch (mode) {
    case Mode::unimodal: return interpret_unimodal(sample, client, cfg);
    case Mode::multimodal: return interpret_multimodal(sample, client, cfg);
    case Mode::generative: return interpret_generative(sample, client, cfg);
    case Mode::vanilla: return interpret_vanilla(sample, client, cfg);
    case Mode::relation_pairs: break;
  }
  throw ConfigError("unhandled mode");
}

}  // namespace combinterp
