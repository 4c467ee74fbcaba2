#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "combinterp/dataset.hpp"
#include "combinterp/taxonomy.hpp"
#include "json.hpp"

namespace combinterp {

// ---------------------------------------------------------------------------
// Model I/O types
// ---------------------------------------------------------------------------

struct LabelPrediction {
  std::string label;
  double confidence = 0.0;  // [0, 1]

  friend bool operator==(const LabelPrediction&, const LabelPrediction&) = default;
};

/// A noun or noun phrase; [start, end) are byte offsets into the source text.
struct CandidateEntity {
  std::string text;
  std::size_t start = 0;
  std::size_t end = 0;

  friend bool operator==(const CandidateEntity&, const CandidateEntity&) = default;
};

struct RelationPrediction {
  std::string head;
  std::string tail;
  std::string label;  // "none" when the extractor sees no relation
  double confidence = 0.0;
  // Set when the extractor asserts head -> tail direction. Undirected
  // predictions are scored in both orientations by the pipeline.
  bool directed = false;

  friend bool operator==(const RelationPrediction&, const RelationPrediction&) = default;
};

struct EmbeddingVector {
  std::vector<double> values;
  std::size_t dim() const { return values.size(); }
};

struct ChatMessage {
  std::string role;  // "system", "user", "assistant"
  std::string content;

  friend bool operator==(const ChatMessage&, const ChatMessage&) = default;
};

/// An image as seen by a backend: the locator as written in the manifest plus
/// the resolved local file, when there is one.
struct ImageInput {
  std::string locator;
  std::optional<std::filesystem::path> file;
};

ImageInput primary_image(const DesignSample& sample);

void to_json(nlohmann::json& j, const LabelPrediction& v);
void from_json(const nlohmann::json& j, LabelPrediction& v);
void to_json(nlohmann::json& j, const CandidateEntity& v);
void from_json(const nlohmann::json& j, CandidateEntity& v);
void to_json(nlohmann::json& j, const RelationPrediction& v);
void from_json(const nlohmann::json& j, RelationPrediction& v);
void to_json(nlohmann::json& j, const ChatMessage& v);
void from_json(const nlohmann::json& j, ChatMessage& v);

// ---------------------------------------------------------------------------
// Backend interface
// ---------------------------------------------------------------------------

namespace ops {
inline constexpr std::string_view classify_image = "classify_image";
inline constexpr std::string_view extract_entities = "extract_entities";
inline constexpr std::string_view similarity = "similarity";
inline constexpr std::string_view embed_text = "embed_text";
inline constexpr std::string_view embed_image = "embed_image";
inline constexpr std::string_view extract_relation = "extract_relation";
inline constexpr std::string_view chat = "chat";
}  // namespace ops

/// Every operation name, in a fixed order.
const std::vector<std::string_view>& all_operations();
bool is_known_operation(std::string_view op);

/// Side information that never takes part in cache or fixture keys.
struct CallContext {
  std::optional<std::filesystem::path> image_file;
};

/// A model provider. Inputs and outputs use the wire shapes documented in the
/// README; every layer (fixture, replay, cache, HTTP) speaks the same shapes.
class Backend {
 public:
  virtual ~Backend() = default;

  virtual nlohmann::json call(std::string_view op, const nlohmann::json& inputs,
                              const CallContext& context) = 0;

  /// Backends that cannot take concurrent calls return true; the factory then
  /// wraps them in a SerializedBackend.
  virtual bool single_flight() const { return false; }
};

/// Typed front end over a Backend. Builds canonical inputs, checks
/// preconditions and validates what comes back.
class ModelClient {
 public:
  explicit ModelClient(std::shared_ptr<Backend> backend,
                       std::optional<std::size_t> embedding_dim = std::nullopt);

  /// Top-k labels, confidence-descending (stable), at most k entries.
  std::vector<LabelPrediction> classify_image(const ImageInput& image, std::size_t k);

  /// Entities ordered by span start; spans are checked against `text`.
  std::vector<CandidateEntity> extract_entities(std::string_view text);

  double similarity(std::string_view a, std::string_view b);

  EmbeddingVector embed_text(std::string_view text);
  EmbeddingVector embed_image(const ImageInput& image);

  /// head and tail must occur in text. `image` is forwarded for multimodal
  /// relation extractors and becomes part of the call key.
  RelationPrediction extract_relation(std::string_view text, std::string_view head,
                                      std::string_view tail, const ImageInput* image = nullptr);

  std::string chat(const std::vector<ChatMessage>& messages, const ImageInput* image = nullptr);

  SimilarityFn similarity_fn();

  const std::shared_ptr<Backend>& backend() const { return backend_; }

 private:
  nlohmann::json invoke(std::string_view op, const nlohmann::json& inputs,
                        const CallContext& context);
  EmbeddingVector check_embedding(const nlohmann::json& out, std::string_view what);

  std::shared_ptr<Backend> backend_;
  std::optional<std::size_t> embedding_dim_;
};

/// Serializes all calls into an inner backend.
class SerializedBackend : public Backend {
 public:
  explicit SerializedBackend(std::shared_ptr<Backend> inner);
  nlohmann::json call(std::string_view op, const nlohmann::json& inputs,
                      const CallContext& context) override;

 private:
  std::shared_ptr<Backend> inner_;
  std::mutex mutex_;
};

/// Dispatches each operation to its own backend, falling back to a default.
class RoutingBackend : public Backend {
 public:
  explicit RoutingBackend(std::shared_ptr<Backend> fallback);
  void route(std::string_view op, std::shared_ptr<Backend> backend);
  nlohmann::json call(std::string_view op, const nlohmann::json& inputs,
                      const CallContext& context) override;

 private:
  std::shared_ptr<Backend> fallback_;
  std::vector<std::pair<std::string, std::shared_ptr<Backend>>> routes_;
};

}  // namespace combinterp
