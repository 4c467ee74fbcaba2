#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace combinterp::kernels {

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix from_rows(const std::vector<std::vector<double>>& rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

using Vector = std::vector<double>;

// ---------------------------------------------------------------------------
// Context-aware relation attention
// ---------------------------------------------------------------------------

struct ContextAttentionInputs {
  Matrix contextual_reps;  // m x n, one contextual relation per row
  Vector target_rep;       // n
  Matrix bilinear;         // n x n
};

/// g_i = o_i^T A o_t for every contextual row o_i.
Vector bilinear_scores(const ContextAttentionInputs& in);

/// Softmax with max subtraction. Throws InputError on empty or non-finite input.
Vector attention_weights(std::span<const double> scores);

/// o_c = sum_i a_i o_i.
Vector context_representation(std::span<const double> weights, const Matrix& contextual_reps);

/// [a, b]
Vector concat(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Text-image compatibility
// ---------------------------------------------------------------------------

/// Cosine similarity. Throws InputError for a zero vector, DimensionError for
/// a length mismatch.
double compatibility_score(std::span<const double> text_vec, std::span<const double> image_vec);

// ---------------------------------------------------------------------------
// Cross-modal alignment
// ---------------------------------------------------------------------------

struct Affine {
  Matrix weight;  // out x in
  Vector bias;    // out
};

struct AlignmentInputs {
  Matrix text;     // l x d_x, one token per row
  Matrix objects;  // m x d_y, one detected object per row
  Affine key;      // d x d_x
  Affine query;    // d x d_y
  Affine value;    // d_v x d_x
  double scale_dim = 1.0;
  std::vector<int> token_mask;  // l entries, 1 = real token
};

struct Projections {
  Matrix keys;     // l x d
  Matrix queries;  // m x d
  Matrix values;   // l x d_v
};

/// Applies `W x + b` to every row of `rows`.
Matrix affine_rows(const Matrix& rows, const Affine& map);

/// Keys and values from the text rows, queries from the object rows.
Projections qkv_project(const AlignmentInputs& in);

/// beta = softmax(Q K^T / sqrt(d)) per query row. Keys with mask 0 get weight
/// exactly 0. Throws InputError when every key is masked.
Matrix alignment_weights(const Matrix& queries, const Matrix& keys, double scale_dim,
                         std::span<const int> key_mask);

/// Sum over the object axis of beta V: one vector of length cols(V).
Vector visual_summary(const Matrix& beta, const Matrix& values);

/// Appends zero rows so the result has exactly `m` rows.
Matrix pad_objects(const Matrix& objects, std::size_t m);

// ---------------------------------------------------------------------------
// Entity-marked token sequences
// ---------------------------------------------------------------------------

namespace tokens {
inline constexpr std::string_view cls = "[cls]";
inline constexpr std::string_view sep = "[sep]";
inline constexpr std::string_view start = "[start]";
inline constexpr std::string_view end = "[end]";
inline constexpr std::string_view pad = "[pad]";
}  // namespace tokens

struct CharSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

struct MarkedSequence {
  std::vector<std::string> tokens;
  std::vector<int> mask;        // 1 = real token (control markers included), 0 = [pad]
  std::size_t head_start = 0;   // index of the head entity's [start] marker
  std::size_t tail_start = 0;   // index of the tail entity's [start] marker
};

bool is_control_token(std::string_view token);

/// Whitespace-tokenizes `text` and lays out
///   [cls] ... [start] head tokens [end] ... [start] tail tokens [end] ... [sep] [pad]*
/// Spans are byte ranges into `text` that must cover whole tokens. Throws
/// InputError for empty, misaligned or overlapping spans, and when the marked
/// sequence needs more than max_len positions (the message gives the length).
MarkedSequence mark_entities(std::string_view text, CharSpan head, CharSpan tail,
                             std::size_t max_len);

/// Input to the relation classifier: [v at head [start], v at tail [start], y_hat].
Vector assemble_classifier_input(const Matrix& values, const MarkedSequence& sequence,
                                 std::span<const double> visual_summary);

}  // namespace combinterp::kernels
