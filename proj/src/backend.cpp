#include "combinterp/backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "combinterp/error.hpp"

namespace combinterp {

using nlohmann::json;

ImageInput primary_image(const DesignSample& sample) {
  if (sample.image_refs.empty()) throw InputError("sample '" + sample.id + "' has no image");
  return {sample.image_refs.front(), resolve_primary_image(sample)};
}

void to_json(json& j, const LabelPrediction& v) {
  j = json{{"label", v.label}, {"confidence", v.confidence}};
}
void from_json(const json& j, LabelPrediction& v) {
  j.at("label").get_to(v.label);
  j.at("confidence").get_to(v.confidence);
}
void to_json(json& j, const CandidateEntity& v) {
  j = json{{"text", v.text}, {"start", v.start}, {"end", v.end}};
}
void from_json(const json& j, CandidateEntity& v) {
  j.at("text").get_to(v.text);
  j.at("start").get_to(v.start);
  j.at("end").get_to(v.end);
}
void to_json(json& j, const RelationPrediction& v) {
  j = json{{"head", v.head},
           {"tail", v.tail},
           {"label", v.label},
           {"confidence", v.confidence},
           {"directed", v.directed}};
}
void from_json(const json& j, RelationPrediction& v) {
  v.head = j.value("head", std::string{});
  v.tail = j.value("tail", std::string{});
  j.at("label").get_to(v.label);
  v.confidence = j.value("confidence", 0.0);
  v.directed = j.value("directed", false);
}
void to_json(json& j, const ChatMessage& v) {
  j = json{{"role", v.role}, {"content", v.content}};
}
void from_json(const json& j, ChatMessage& v) {
  j.at("role").get_to(v.role);
  j.at("content").get_to(v.content);
}

const std::vector<std::string_view>& all_operations() {
  static const std::vector<std::string_view> names = {
      ops::classify_image, ops::extract_entities, ops::similarity, ops::embed_text,
      ops::embed_image,    ops::extract_relation, ops::chat};
  return names;
}

bool is_known_operation(std::string_view op) {
  const auto& names = all_operations();
  return std::find(names.begin(), names.end(), op) != names.end();
}

// ---------------------------------------------------------------------------

namespace {

void check_image_readable(const ImageInput& image) {
  if (image.locator.empty()) throw InputError("image locator is empty");
  if (!image.file) return;
  std::ifstream probe(*image.file, std::ios::binary);
  if (!probe || !std::filesystem::is_regular_file(*image.file))
    throw InputError("image '" + image.file->string() + "' is not readable");
}

bool in_unit_range(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

template <typename T>
T decode(const json& out, std::string_view op) {
  try {
    return out.get<T>();
  } catch (const json::exception& e) {
    throw BackendError(std::string(op) + ": malformed backend output: " + e.what());
  }
}

}  // namespace

ModelClient::ModelClient(std::shared_ptr<Backend> backend, std::optional<std::size_t> embedding_dim)
    : backend_(std::move(backend)), embedding_dim_(embedding_dim) {
  if (!backend_) throw ConfigError("ModelClient needs a backend");
  if (embedding_dim_ && *embedding_dim_ == 0) throw ConfigError("embedding_dim must be positive");
}

json ModelClient::invoke(std::string_view op, const json& inputs, const CallContext& context) {
  return backend_->call(op, inputs, context);
}

std::vector<LabelPrediction> ModelClient::classify_image(const ImageInput& image, std::size_t k) {
  if (k == 0) throw InputError("classify_image: k must be at least 1");
  check_image_readable(image);
  const json out = invoke(ops::classify_image, {{"image", image.locator}, {"k", k}},
                          CallContext{image.file});
  auto labels = decode<std::vector<LabelPrediction>>(out, ops::classify_image);
  for (const auto& l : labels) {
    if (!in_unit_range(l.confidence))
      throw BackendError("classify_image: confidence out of [0, 1] for label '" + l.label + "'");
  }
  std::stable_sort(labels.begin(), labels.end(),
                   [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
  if (labels.size() > k) labels.resize(k);
  return labels;
}

std::vector<CandidateEntity> ModelClient::extract_entities(std::string_view text) {
  if (text.empty()) return {};
  const json out = invoke(ops::extract_entities, {{"text", text}}, {});
  auto entities = decode<std::vector<CandidateEntity>>(out, ops::extract_entities);
  for (const auto& e : entities) {
    if (e.start >= e.end || e.end > text.size() || text.substr(e.start, e.end - e.start) != e.text)
      throw BackendError("extract_entities: entity '" + e.text + "' has span [" +
                         std::to_string(e.start) + ", " + std::to_string(e.end) +
                         ") that does not match the source text");
  }
  std::stable_sort(entities.begin(), entities.end(),
                   [](const auto& a, const auto& b) { return a.start < b.start; });
  return entities;
}

double ModelClient::similarity(std::string_view a, std::string_view b) {
  if (a.empty() || b.empty()) throw InputError("similarity: inputs must be non-empty");
  const json out = invoke(ops::similarity, {{"a", a}, {"b", b}}, {});
  const double v = decode<double>(out, ops::similarity);
  if (!std::isfinite(v) || v < -1.0 - 1e-9 || v > 1.0 + 1e-9)
    throw BackendError("similarity: value " + std::to_string(v) + " outside [-1, 1]");
  return std::clamp(v, -1.0, 1.0);
}

EmbeddingVector ModelClient::check_embedding(const json& out, std::string_view what) {
  EmbeddingVector v{decode<std::vector<double>>(out, what)};
  if (v.values.empty()) throw BackendError(std::string(what) + ": empty embedding");
  for (double x : v.values) {
    if (!std::isfinite(x)) throw BackendError(std::string(what) + ": non-finite component");
  }
  if (embedding_dim_ && v.dim() != *embedding_dim_) {
    throw ConfigError(std::string(what) + ": embedding has dimension " + std::to_string(v.dim()) +
                      ", configured dimension is " + std::to_string(*embedding_dim_));
  }
  return v;
}

EmbeddingVector ModelClient::embed_text(std::string_view text) {
  if (text.empty()) throw InputError("embed_text: text must be non-empty");
  return check_embedding(invoke(ops::embed_text, {{"text", text}}, {}), ops::embed_text);
}

EmbeddingVector ModelClient::embed_image(const ImageInput& image) {
  check_image_readable(image);
  return check_embedding(invoke(ops::embed_image, {{"image", image.locator}}, {image.file}),
                         ops::embed_image);
}

RelationPrediction ModelClient::extract_relation(std::string_view text, std::string_view head,
                                                 std::string_view tail, const ImageInput* image) {
  if (head.empty() || text.find(head) == std::string_view::npos)
    throw InputError("extract_relation: head '" + std::string(head) + "' not found in text");
  if (tail.empty() || text.find(tail) == std::string_view::npos)
    throw InputError("extract_relation: tail '" + std::string(tail) + "' not found in text");

  json inputs = {{"text", text}, {"head", head}, {"tail", tail}};
  CallContext context;
  if (image) {
    check_image_readable(*image);
    inputs["image"] = image->locator;
    context.image_file = image->file;
  }
  auto rel = decode<RelationPrediction>(invoke(ops::extract_relation, inputs, context),
                                        ops::extract_relation);
  rel.head = std::string(head);
  rel.tail = std::string(tail);
  if (!in_unit_range(rel.confidence))
    throw BackendError("extract_relation: confidence out of [0, 1]");
  return rel;
}

std::string ModelClient::chat(const std::vector<ChatMessage>& messages, const ImageInput* image) {
  if (messages.empty()) throw InputError("chat: messages must be non-empty");
  json inputs = {{"messages", messages}};
  CallContext context;
  if (image) {
    check_image_readable(*image);
    inputs["image"] = image->locator;
    context.image_file = image->file;
  }
  const json out = invoke(ops::chat, inputs, context);
  return decode<std::string>(out, ops::chat);
}

SimilarityFn ModelClient::similarity_fn() {
  return [this](std::string_view a, std::string_view b) { return similarity(a, b); };
}

// ---------------------------------------------------------------------------

SerializedBackend::SerializedBackend(std::shared_ptr<Backend> inner) : inner_(std::move(inner)) {}

json SerializedBackend::call(std::string_view op, const json& inputs, const CallContext& context) {
  std::lock_guard lock(mutex_);
  return inner_->call(op, inputs, context);
}

RoutingBackend::RoutingBackend(std::shared_ptr<Backend> fallback) : fallback_(std::move(fallback)) {}

void RoutingBackend::route(std::string_view op, std::shared_ptr<Backend> backend) {
  if (!is_known_operation(op)) throw ConfigError("unknown operation '" + std::string(op) + "'");
  routes_.emplace_back(std::string(op), std::move(backend));
}

json RoutingBackend::call(std::string_view op, const json& inputs, const CallContext& context) {
  for (const auto& [name, backend] : routes_) {
    if (name == op) return backend->call(op, inputs, context);
  }
  if (!fallback_) throw ConfigError("no backend configured for operation '" + std::string(op) + "'");
  return fallback_->call(op, inputs, context);
}

}  // namespace combinterp
