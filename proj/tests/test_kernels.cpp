#include "doctest.h"

#include <cmath>
#include <numeric>
#include <random>

#include "combinterp/error.hpp"
#include "combinterp/kernels.hpp"
#include "support/oracles.hpp"

using namespace combinterp;
using namespace combinterp::kernels;

namespace {

Matrix to_matrix(const oracle::Mat& m) { return Matrix::from_rows(m); }

oracle::Mat to_rows(const Matrix& m) {
  oracle::Mat out(m.rows(), oracle::Vec(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m(r, c);
  return out;
}

bool all_close(const Vector& got, const oracle::Vec& want, double tol) {
  if (got.size() != want.size()) return false;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (std::abs(got[i] - want[i]) > tol) return false;
  }
  return true;
}

bool all_close(const Matrix& got, const oracle::Mat& want, double tol) {
  if (got.rows() != want.size()) return false;
  for (std::size_t r = 0; r < want.size(); ++r) {
    if (got.cols() != want[r].size()) return false;
    for (std::size_t c = 0; c < want[r].size(); ++c) {
      if (std::abs(got(r, c) - want[r][c]) > tol) return false;
    }
  }
  return true;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("bilinear scores: identity and zero maps") {
  ContextAttentionInputs in{Matrix{{1, 0, 0}, {1, 0, 0}}, {1, 0, 0}, Matrix::identity(3)};
  CHECK(bilinear_scores(in) == Vector{1.0, 1.0});
  in.bilinear = Matrix(3, 3, 0.0);
  CHECK(bilinear_scores(in) == Vector{0.0, 0.0});
}

TEST_CASE("bilinear scores match the triple loop") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto o = oracle::random_mat(rng, 4, 3);
    const auto a = oracle::random_mat(rng, 3, 3);
    const auto t = oracle::random_vec(rng, 3);
    const Vector got = bilinear_scores({to_matrix(o), t, to_matrix(a)});
    CHECK(all_close(got, oracle::bilinear(o, a, t), 1e-12));
  }
}

TEST_CASE("bilinear scores reject shape mismatch") {
  CHECK_THROWS_AS(bilinear_scores({Matrix{{1, 2}}, {1, 2, 3}, Matrix::identity(3)}), DimensionError);
  CHECK_THROWS_AS(bilinear_scores({Matrix{{1, 2, 3}}, {1, 2, 3}, Matrix::identity(2)}), DimensionError);
}

TEST_CASE("softmax worked values") {
  CHECK(attention_weights(Vector{3.7}) == Vector{1.0});
  const Vector eq = attention_weights(Vector{2.0, 2.0});
  CHECK(eq[0] == doctest::Approx(0.5));
  CHECK(eq[1] == doctest::Approx(0.5));
  // exp(0) = 1, exp(ln 3) = 3, sum 4
  const Vector w = attention_weights(Vector{0.0, std::log(3.0)});
  CHECK(std::abs(w[0] - 0.25) < 1e-12);
  CHECK(std::abs(w[1] - 0.75) < 1e-12);
}

TEST_CASE("softmax survives large scores and rejects bad input") {
  const Vector w = attention_weights(Vector{1000.0, 1000.0, -1000.0});
  CHECK(std::abs(w[0] - 0.5) < 1e-12);
  CHECK(w[2] == doctest::Approx(0.0));
  CHECK_THROWS_AS(attention_weights(Vector{}), InputError);
  CHECK_THROWS_AS(attention_weights(Vector{1.0, std::nan("")}), InputError);
  CHECK_THROWS_AS(attention_weights(Vector{1.0, INFINITY}), InputError);
}

TEST_CASE("softmax is shift invariant") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> shift(-50.0, 50.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto g = oracle::random_vec(rng, 6, -5.0, 5.0);
    Vector moved = g;
    const double c = shift(rng);
    for (double& x : moved) x += c;
    CHECK(all_close(attention_weights(moved), attention_weights(g), 1e-9));
  }
}

TEST_CASE("context representation") {
  CHECK(context_representation(Vector{1.0}, Matrix{{2, -1, 4}}) == Vector{2, -1, 4});
  const Vector mid = context_representation(Vector{0.5, 0.5}, Matrix{{2, 0}, {0, 4}});
  CHECK(mid == Vector{1.0, 2.0});
  CHECK_THROWS_AS(context_representation(Vector{0.5, 0.5}, Matrix{{1, 2}}), DimensionError);

  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const auto o = oracle::random_mat(rng, 5, 4);
    const Vector a = attention_weights(oracle::random_vec(rng, 5));
    const Vector got = context_representation(a, to_matrix(o));
    CHECK(all_close(got, oracle::weighted_rows(a, o), 1e-12));
    // convex combination stays inside the per-column range
    for (std::size_t c = 0; c < 4; ++c) {
      double lo = o[0][c], hi = o[0][c];
      for (const auto& row : o) {
        lo = std::min(lo, row[c]);
        hi = std::max(hi, row[c]);
      }
      CHECK(got[c] >= lo - 1e-12);
      CHECK(got[c] <= hi + 1e-12);
    }
  }
}

TEST_CASE("concat keeps target first") {
  CHECK(concat(Vector{1, 2}, Vector{3}) == Vector{1, 2, 3});
}

TEST_CASE("compatibility score") {
  const Vector v{0.3, -2.0, 1.5};
  CHECK(compatibility_score(v, v) == doctest::Approx(1.0));
  CHECK(compatibility_score(Vector{1, 0}, Vector{0, 1}) == doctest::Approx(0.0));
  CHECK(std::abs(compatibility_score(Vector{1, 0}, Vector{1, 1}) - 0.70710678) < 1e-8);
  CHECK_THROWS_AS(compatibility_score(Vector{0, 0}, Vector{1, 1}), InputError);
  CHECK_THROWS_AS(compatibility_score(Vector{1, 0}, Vector{1, 1, 0}), DimensionError);
}

TEST_CASE("compatibility score is scale invariant") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto u = oracle::random_vec(rng, 8);
    const auto v = oracle::random_vec(rng, 8);
    Vector su = u;
    const double s = scale(rng);
    for (double& x : su) x *= s;
    CHECK(std::abs(compatibility_score(su, v) - compatibility_score(u, v)) < 1e-9);
    CHECK(std::abs(compatibility_score(u, v) - oracle::cosine(u, v)) < 1e-12);
  }
}

TEST_CASE("qkv projection") {
  AlignmentInputs in;
  in.text = Matrix{{1, 2, 3}, {4, 5, 6}};
  in.objects = Matrix{{7, 8}};
  in.key = {Matrix(2, 3, 0.0), {0.5, -1.0}};
  in.query = {Matrix(2, 2, 0.0), {2.0, 3.0}};
  in.value = {Matrix::identity(3), {0, 0, 0}};
  in.token_mask = {1, 1};
  const Projections p = qkv_project(in);
  CHECK(to_rows(p.keys) == oracle::Mat{{0.5, -1.0}, {0.5, -1.0}});
  CHECK(to_rows(p.queries) == oracle::Mat{{2.0, 3.0}});
  CHECK(p.values == in.text);

  in.key.weight = Matrix(2, 2, 0.0);
  CHECK_THROWS_AS(qkv_project(in), DimensionError);
}

TEST_CASE("qkv projection matches naive matmul") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = oracle::random_mat(rng, 4, 3);
    const auto y = oracle::random_mat(rng, 2, 5);
    const auto wk = oracle::random_mat(rng, 6, 3);
    const auto wq = oracle::random_mat(rng, 6, 5);
    const auto wv = oracle::random_mat(rng, 4, 3);
    const auto bk = oracle::random_vec(rng, 6), bq = oracle::random_vec(rng, 6), bv = oracle::random_vec(rng, 4);
    AlignmentInputs in{to_matrix(x), to_matrix(y), {to_matrix(wk), bk}, {to_matrix(wq), bq},
                       {to_matrix(wv), bv}, 6.0, {1, 1, 1, 1}};
    const Projections p = qkv_project(in);
    CHECK(all_close(p.keys, oracle::affine(x, wk, bk), 1e-12));
    CHECK(all_close(p.queries, oracle::affine(y, wq, bq), 1e-12));
    CHECK(all_close(p.values, oracle::affine(x, wv, bv), 1e-12));
  }
}

TEST_CASE("alignment weights") {
  const Matrix k{{1, 0}, {0, 1}, {1, 1}, {2, 2}};
  SUBCASE("zero queries are uniform over unmasked keys") {
    const Matrix beta = alignment_weights(Matrix(2, 2, 0.0), k, 2.0, std::vector<int>{1, 1, 0, 1});
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK(beta(r, 0) == doctest::Approx(1.0 / 3));
      CHECK(beta(r, 2) == 0.0);
    }
  }
  SUBCASE("single unmasked key") {
    const Matrix beta = alignment_weights(Matrix{{3, -1}, {0.2, 9}}, k, 2.0, std::vector<int>{0, 0, 1, 0});
    for (std::size_t r = 0; r < 2; ++r) {
      CHECK(beta(r, 2) == 1.0);
      CHECK(beta(r, 0) == 0.0);
    }
  }
  SUBCASE("all masked") {
    CHECK_THROWS_AS(alignment_weights(Matrix{{1, 1}}, k, 2.0, std::vector<int>{0, 0, 0, 0}), InputError);
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(alignment_weights(Matrix{{1, 1, 1}}, k, 2.0, std::vector<int>{1, 1, 1, 1}), DimensionError);
    CHECK_THROWS_AS(alignment_weights(Matrix{{1, 1}}, k, 2.0, std::vector<int>{1, 1}), DimensionError);
  }
}

TEST_CASE("alignment weights match the exp/sum oracle") {
  std::mt19937_64 rng(31);
  std::bernoulli_distribution keep(0.7);
  for (int trial = 0; trial < 50; ++trial) {
    const auto q = oracle::random_mat(rng, 3, 4);
    const auto kk = oracle::random_mat(rng, 5, 4);
    std::vector<int> mask(5);
    for (auto& m : mask) m = keep(rng) ? 1 : 0;
    mask[trial % 5] = 1;
    const Matrix beta = alignment_weights(to_matrix(q), to_matrix(kk), 4.0, mask);
    CHECK(all_close(beta, oracle::alignment(q, kk, 4.0, mask), 1e-9));
    for (std::size_t r = 0; r < 3; ++r) {
      double sum = 0.0;
      for (std::size_t c = 0; c < 5; ++c) {
        sum += beta(r, c);
        if (!mask[c]) CHECK(beta(r, c) == 0.0);
      }
      CHECK(std::abs(sum - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("visual summary") {
  const Matrix v{{1, 2}, {3, 4}, {5, 6}};
  SUBCASE("one object") {
    const Matrix beta{{0.2, 0.3, 0.5}};
    const Vector y = visual_summary(beta, v);
    CHECK(y[0] == doctest::Approx(0.2 + 0.9 + 2.5));
    CHECK(y[1] == doctest::Approx(0.4 + 1.2 + 3.0));
  }
  SUBCASE("identical rows scale by m") {
    const Matrix one{{0.2, 0.3, 0.5}};
    const Matrix three{{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}};
    const Vector a = visual_summary(one, v), b = visual_summary(three, v);
    CHECK(b[0] == doctest::Approx(3 * a[0]));
    CHECK(b[1] == doctest::Approx(3 * a[1]));
  }
  SUBCASE("shape mismatch") { CHECK_THROWS_AS(visual_summary(Matrix{{0.5, 0.5}}, v), DimensionError); }
}

TEST_CASE("visual summary matches the loop oracle and is linear in V") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 50; ++trial) {
    const auto beta = oracle::random_mat(rng, 3, 5, 0.0, 1.0);
    const auto v1 = oracle::random_mat(rng, 5, 4);
    const auto v2 = oracle::random_mat(rng, 5, 4);
    oracle::Mat sum = v1;
    for (std::size_t r = 0; r < 5; ++r)
      for (std::size_t c = 0; c < 4; ++c) sum[r][c] += v2[r][c];
    const Vector y1 = visual_summary(to_matrix(beta), to_matrix(v1));
    const Vector y2 = visual_summary(to_matrix(beta), to_matrix(v2));
    const Vector ys = visual_summary(to_matrix(beta), to_matrix(sum));
    CHECK(all_close(y1, oracle::summary(beta, v1), 1e-12));
    for (std::size_t c = 0; c < 4; ++c) CHECK(std::abs(ys[c] - (y1[c] + y2[c])) < 1e-9);
  }
}

TEST_CASE("pad objects") {
  const Matrix y{{1, 2}, {3, 4}};
  CHECK(pad_objects(y, 2) == y);
  const Matrix p = pad_objects(y, 5);
  CHECK(p.rows() == 5);
  CHECK(p(1, 1) == 4);
  for (std::size_t r = 2; r < 5; ++r) CHECK((p(r, 0) == 0.0 && p(r, 1) == 0.0));
  const Matrix z = pad_objects(Matrix(0, 2), 3);
  CHECK(z == Matrix(3, 2, 0.0));
  CHECK_THROWS_AS(pad_objects(y, 1), InputError);
}

TEST_CASE("mark entities: worked layout") {
  const MarkedSequence s = mark_entities("a b", {0, 1}, {2, 3}, 12);
  const std::vector<std::string> want = {"[cls]", "[start]", "a", "[end]", "[start]", "b", "[end]",
                                         "[sep]", "[pad]", "[pad]", "[pad]", "[pad]"};
  CHECK(s.tokens == want);
  CHECK(std::accumulate(s.mask.begin(), s.mask.end(), 0) == 8);
  CHECK(s.head_start == 1);
  CHECK(s.tail_start == 4);
  for (std::size_t i = 0; i < s.tokens.size(); ++i) CHECK((s.mask[i] == 0) == (s.tokens[i] == "[pad]"));
}

TEST_CASE("mark entities: exact fit, overflow, bad spans") {
  const std::string text = "the vase series was inspired by tree trunks";
  const CharSpan head{4, 15}, tail{32, 43};
  const std::size_t required = 8 + 6;
  const MarkedSequence exact = mark_entities(text, head, tail, required);
  CHECK(exact.tokens.size() == required);
  CHECK(std::accumulate(exact.mask.begin(), exact.mask.end(), 0) == static_cast<int>(required));
  try {
    mark_entities(text, head, tail, required - 1);
    FAIL("expected overflow");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find(std::to_string(required)) != std::string::npos);
  }
  CHECK_THROWS_AS(mark_entities(text, {4, 15}, {10, 20}, 40), InputError);  // overlap
  CHECK_THROWS_AS(mark_entities(text, {5, 15}, tail, 40), InputError);      // mid-token
  CHECK_THROWS_AS(mark_entities(text, {4, 4}, tail, 40), InputError);       // empty
}

TEST_CASE("mark entities: tail before head, content recoverable") {
  const std::string text = "tree trunks inspire this vase series design";
  const MarkedSequence s = mark_entities(text, {25, 36}, {0, 11}, 20);
  CHECK(s.tokens[s.head_start] == "[start]");
  CHECK(s.tokens[s.head_start + 1] == "vase");
  CHECK(s.tokens[s.tail_start + 1] == "tree");
  std::vector<std::string> content;
  for (const auto& t : s.tokens) {
    if (!is_control_token(t)) content.push_back(t);
  }
  CHECK(content == std::vector<std::string>{"tree", "trunks", "inspire", "this", "vase", "series", "design"});
  int cls = 0, sep = 0, start = 0, end = 0;
  for (const auto& t : s.tokens) {
    cls += t == "[cls]";
    sep += t == "[sep]";
    start += t == "[start]";
    end += t == "[end]";
  }
  CHECK(cls == 1);
  CHECK(sep == 1);
  CHECK(start == 2);
  CHECK(end == 2);
}

TEST_CASE("classifier input assembly") {
  const MarkedSequence s = mark_entities("a b", {0, 1}, {2, 3}, 10);
  Matrix values(10, 2);
  for (std::size_t r = 0; r < 10; ++r) {
    values(r, 0) = static_cast<double>(r);
    values(r, 1) = -static_cast<double>(r);
  }
  const Vector in = assemble_classifier_input(values, s, Vector{7, 8, 9});
  CHECK(in == Vector{1, -1, 4, -4, 7, 8, 9});
  CHECK_THROWS_AS(assemble_classifier_input(Matrix(3, 2), s, Vector{1}), DimensionError);
}

}  // TEST_SUITE
