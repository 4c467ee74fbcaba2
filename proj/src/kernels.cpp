#include "combinterp/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "combinterp/error.hpp"

namespace combinterp::kernels {

namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  values_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer");
    values_.insert(values_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw DimensionError("Matrix: ragged rows");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Vector bilinear_scores(const ContextAttentionInputs& in) {
  const std::size_t n = in.target_rep.size();
  if (in.contextual_reps.rows() == 0) throw InputError("bilinear_scores: no contextual relations");
  if (in.contextual_reps.cols() != n || in.bilinear.rows() != n || in.bilinear.cols() != n) {
    throw DimensionError("bilinear_scores: contextual " + shape(in.contextual_reps) + ", bilinear " +
                         shape(in.bilinear) + ", target length " + std::to_string(n));
  }
  // A o_t once, then one dot product per contextual row.
  Vector a_target(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) a_target[r] = dot(in.bilinear.row(r), in.target_rep);

  Vector scores(in.contextual_reps.rows());
  for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = dot(in.contextual_reps.row(i), a_target);
  return scores;
}

Vector attention_weights(std::span<const double> scores) {
  if (scores.empty()) throw InputError("attention_weights: empty score vector");
  double peak = -std::numeric_limits<double>::infinity();
  for (double s : scores) {
    if (!std::isfinite(s)) throw InputError("attention_weights: non-finite score");
    peak = std::max(peak, s);
  }
  Vector out(scores.size());
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::exp(scores[i] - peak);
    total += out[i];
  }
  for (double& w : out) w /= total;
  return out;
}

Vector context_representation(std::span<const double> weights, const Matrix& reps) {
  if (weights.size() != reps.rows()) {
    throw DimensionError("context_representation: " + std::to_string(weights.size()) +
                         " weights for " + std::to_string(reps.rows()) + " rows");
  }
  Vector out(reps.cols(), 0.0);
  for (std::size_t i = 0; i < reps.rows(); ++i) {
    const auto row = reps.row(i);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += weights[i] * row[c];
  }
  return out;
}

Vector concat(std::span<const double> a, std::span<const double> b) {
  Vector out(a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

double compatibility_score(std::span<const double> text_vec, std::span<const double> image_vec) {
  if (text_vec.size() != image_vec.size()) {
    throw DimensionError("compatibility_score: lengths " + std::to_string(text_vec.size()) +
                         " and " + std::to_string(image_vec.size()));
  }
  const double text_norm = std::sqrt(dot(text_vec, text_vec));
  const double image_norm = std::sqrt(dot(image_vec, image_vec));
  if (text_vec.empty() || text_norm == 0.0) throw InputError("compatibility_score: zero text vector");
  if (image_norm == 0.0) throw InputError("compatibility_score: zero image vector");
  return std::clamp(dot(text_vec, image_vec) / (text_norm * image_norm), -1.0, 1.0);
}

Matrix affine_rows(const Matrix& rows, const Affine& map) {
  if (map.weight.cols() != rows.cols() || map.bias.size() != map.weight.rows()) {
    throw DimensionError("affine_rows: input " + shape(rows) + ", weight " + shape(map.weight) +
                         ", bias length " + std::to_string(map.bias.size()));
  }
  Matrix out(rows.rows(), map.weight.rows());
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t o = 0; o < map.weight.rows(); ++o)
      out(r, o) = dot(map.weight.row(o), rows.row(r)) + map.bias[o];
  }
  return out;
}

Projections qkv_project(const AlignmentInputs& in) {
  Projections p{affine_rows(in.text, in.key), affine_rows(in.objects, in.query),
                affine_rows(in.text, in.value)};
  if (p.keys.cols() != p.queries.cols()) {
    throw DimensionError("qkv_project: key width " + std::to_string(p.keys.cols()) +
                         " differs from query width " + std::to_string(p.queries.cols()));
  }
  return p;
}

Matrix alignment_weights(const Matrix& queries, const Matrix& keys, double scale_dim,
                         std::span<const int> key_mask) {
  if (queries.cols() != keys.cols())
    throw DimensionError("alignment_weights: Q " + shape(queries) + " vs K " + shape(keys));
  if (key_mask.size() != keys.rows()) {
    throw DimensionError("alignment_weights: mask length " + std::to_string(key_mask.size()) +
                         " for " + std::to_string(keys.rows()) + " keys");
  }
  if (!(scale_dim > 0.0) || !std::isfinite(scale_dim))
    throw InputError("alignment_weights: scale dimension must be positive");
  if (std::none_of(key_mask.begin(), key_mask.end(), [](int m) { return m != 0; }))
    throw InputError("alignment_weights: every key is masked");

  const double scale = 1.0 / std::sqrt(scale_dim);
  Matrix beta(queries.rows(), keys.rows(), 0.0);
  for (std::size_t q = 0; q < queries.rows(); ++q) {
    auto row = beta.row(q);
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < keys.rows(); ++k) {
      if (key_mask[k] == 0) continue;
      row[k] = dot(queries.row(q), keys.row(k)) * scale;
      if (!std::isfinite(row[k])) throw InputError("alignment_weights: non-finite score");
      peak = std::max(peak, row[k]);
    }
    double total = 0.0;
    for (std::size_t k = 0; k < keys.rows(); ++k) {
      if (key_mask[k] == 0) continue;
      row[k] = std::exp(row[k] - peak);
      total += row[k];
    }
    for (std::size_t k = 0; k < keys.rows(); ++k) row[k] = key_mask[k] == 0 ? 0.0 : row[k] / total;
  }
  return beta;
}

Vector visual_summary(const Matrix& beta, const Matrix& values) {
  if (beta.cols() != values.rows())
    throw DimensionError("visual_summary: beta " + shape(beta) + " vs V " + shape(values));
  // 1^T (beta V) = (1^T beta) V: collapse the object axis first.
  Vector column_mass(beta.cols(), 0.0);
  for (std::size_t q = 0; q < beta.rows(); ++q) {
    for (std::size_t k = 0; k < beta.cols(); ++k) column_mass[k] += beta(q, k);
  }
  Vector out(values.cols(), 0.0);
  for (std::size_t k = 0; k < values.rows(); ++k) {
    const auto row = values.row(k);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += column_mass[k] * row[c];
  }
  return out;
}

Matrix pad_objects(const Matrix& objects, std::size_t m) {
  if (objects.rows() > m) {
    throw InputError("pad_objects: " + std::to_string(objects.rows()) + " objects exceed m = " +
                     std::to_string(m));
  }
  Matrix out(m, objects.cols(), 0.0);
  for (std::size_t r = 0; r < objects.rows(); ++r)
    std::copy(objects.row(r).begin(), objects.row(r).end(), out.row(r).begin());
  return out;
}

bool is_control_token(std::string_view token) {
  return token == tokens::cls || token == tokens::sep || token == tokens::start ||
         token == tokens::end || token == tokens::pad;
}

namespace {

struct Token {
  std::size_t begin;
  std::size_t end;
};

std::vector<Token> whitespace_tokens(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t begin = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > begin) out.push_back({begin, i});
  }
  return out;
}

// Maps a byte span onto the [first, last] token indices it covers exactly.
std::pair<std::size_t, std::size_t> token_range(const std::vector<Token>& toks, CharSpan span,
                                                const char* role) {
  if (span.begin >= span.end) throw InputError(std::string("mark_entities: empty ") + role + " span");
  std::size_t first = toks.size();
  std::size_t last = toks.size();
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (toks[i].begin == span.begin) first = i;
    if (toks[i].end == span.end) last = i;
  }
  if (first == toks.size() || last == toks.size() || last < first) {
    throw InputError(std::string("mark_entities: ") + role + " span [" + std::to_string(span.begin) +
                     ", " + std::to_string(span.end) + ") does not align with whole tokens");
  }
  return {first, last};
}

}  // namespace

MarkedSequence mark_entities(std::string_view text, CharSpan head, CharSpan tail,
                             std::size_t max_len) {
  if (head.end > text.size() || tail.end > text.size())
    throw InputError("mark_entities: span past end of text");
  if (head.begin < tail.end && tail.begin < head.end)
    throw InputError("mark_entities: head and tail spans overlap");

  const auto toks = whitespace_tokens(text);
  const auto [head_first, head_last] = token_range(toks, head, "head");
  const auto [tail_first, tail_last] = token_range(toks, tail, "tail");

  const std::size_t required = toks.size() + 6;  // [cls] [sep] and two [start]/[end] pairs
  if (required > max_len) {
    throw InputError("mark_entities: marked sequence needs " + std::to_string(required) +
                     " positions but max_len is " + std::to_string(max_len));
  }

  MarkedSequence seq;
  seq.tokens.reserve(max_len);
  seq.tokens.emplace_back(tokens::cls);
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i == head_first || i == tail_first) {
      (i == head_first ? seq.head_start : seq.tail_start) = seq.tokens.size();
      seq.tokens.emplace_back(tokens::start);
    }
    seq.tokens.emplace_back(text.substr(toks[i].begin, toks[i].end - toks[i].begin));
    if (i == head_last || i == tail_last) seq.tokens.emplace_back(tokens::end);
  }
  seq.tokens.emplace_back(tokens::sep);
  seq.mask.assign(seq.tokens.size(), 1);
  seq.tokens.resize(max_len, std::string(tokens::pad));
  seq.mask.resize(max_len, 0);
  return seq;
}

Vector assemble_classifier_input(const Matrix& values, const MarkedSequence& sequence,
                                 std::span<const double> summary) {
  if (values.rows() != sequence.tokens.size()) {
    throw DimensionError("assemble_classifier_input: V has " + std::to_string(values.rows()) +
                         " rows for a sequence of " + std::to_string(sequence.tokens.size()));
  }
  Vector out = concat(values.row(sequence.head_start), values.row(sequence.tail_start));
  out.insert(out.end(), summary.begin(), summary.end());
  return out;
}

}  // namespace combinterp::kernels
