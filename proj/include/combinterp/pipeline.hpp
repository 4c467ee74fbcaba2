#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "combinterp/backend.hpp"
#include "combinterp/dataset.hpp"
#include "combinterp/prompts.hpp"
#include "combinterp/taxonomy.hpp"
#include "json.hpp"

namespace combinterp {

enum class Mode { unimodal, multimodal, generative, vanilla, relation_pairs };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view name);  // throws ConfigError

struct PipelineConfig {
  std::size_t k_labels = 10;
  double relation_threshold = kDefaultRelationThreshold;
  Taxonomy taxonomy = builtin_taxonomy();
  PromptTemplates templates = default_templates();
  // Relation-pair enumeration: 0 scores every pair; otherwise at most this
  // many pairs, drawn with `seed`.
  std::size_t max_pairs = 0;
  std::uint64_t seed = 0;
  // Unimodal/multimodal runs also score every candidate pair and keep the
  // result in the trace (needed by the relation row of the modular report).
  bool pair_diagnostics = false;
};

// ---------------------------------------------------------------------------
// Trace and result
// ---------------------------------------------------------------------------

struct BaseScore {
  CandidateEntity candidate;
  double score = 0.0;
  std::optional<std::string> best_label;  // unimodal: label giving the score
  double label_confidence = 0.0;
};

struct RelationRecord {
  CandidateEntity candidate;
  RelationPrediction prediction;
  RelationMatch match;
};

struct PairRelation {
  CandidateEntity head;
  CandidateEntity tail;
  RelationPrediction prediction;
  RelationMatch match;
};

struct PromptExchange {
  std::string step;
  std::string prompt;
  std::string reply;
};

struct Trace {
  std::vector<LabelPrediction> image_labels;
  std::vector<CandidateEntity> candidates;
  std::vector<BaseScore> base_scores;
  std::vector<RelationRecord> relations;
  std::vector<PairRelation> pair_relations;
  std::vector<std::string> generated_nouns;  // nouns listed by a language model
  std::vector<PromptExchange> prompts_and_replies;
  bool fallback_used = false;
};

struct InterpretationResult {
  std::string sample_id;
  Mode mode = Mode::unimodal;
  std::string base;
  std::string additive;
  Trace trace;
  bool used_image = true;
  bool has_trace = true;  // false when read back from an elided record
};

nlohmann::json to_json(const Trace& trace);
Trace trace_from_json(const nlohmann::json& j);
nlohmann::json to_json(const InterpretationResult& result, bool include_trace = true);
InterpretationResult result_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

struct AdditiveSelection {
  CandidateEntity additive;
  std::vector<RelationRecord> relations;
  bool fallback_used = false;
};

/// Scores the relation between `base` and every other candidate and picks the
/// additive: best taxonomy match (ties: relation confidence, then span);
/// without any match, the highest-confidence non-null relation; without any
/// relation, the candidate least similar to the base.
AdditiveSelection select_additive(std::string_view base, const std::vector<CandidateEntity>& candidates,
                                  std::string_view text, ModelClient& client,
                                  const PipelineConfig& cfg, const ImageInput* image = nullptr);

/// All n(n-1)/2 unordered pairs, candidates ordered by (start, end).
std::vector<std::pair<CandidateEntity, CandidateEntity>> enumerate_candidate_pairs(
    std::vector<CandidateEntity> candidates);

/// Scores pairs (sampled per cfg.max_pairs/seed) against the taxonomy.
std::vector<PairRelation> score_candidate_pairs(const std::vector<CandidateEntity>& candidates,
                                                std::string_view text, ModelClient& client,
                                                const PipelineConfig& cfg,
                                                const ImageInput* image = nullptr);

InterpretationResult interpret_unimodal(const DesignSample& sample, ModelClient& client,
                                        const PipelineConfig& cfg);
InterpretationResult interpret_multimodal(const DesignSample& sample, ModelClient& client,
                                          const PipelineConfig& cfg);
InterpretationResult interpret_generative(const DesignSample& sample, ModelClient& client,
                                          const PipelineConfig& cfg);
InterpretationResult interpret_vanilla(const DesignSample& sample, ModelClient& client,
                                       const PipelineConfig& cfg = {});

/// Image-free variants: generative, vanilla, or relation_pairs.
InterpretationResult interpret_no_image(const DesignSample& sample, ModelClient& client,
                                        const PipelineConfig& cfg, Mode mode);

/// Dispatches on mode. relation_pairs never uses the image; with
/// use_image = false the other LLM modes run image-free.
InterpretationResult interpret(const DesignSample& sample, ModelClient& client,
                               const PipelineConfig& cfg, Mode mode, bool use_image = true);

}  // namespace combinterp
