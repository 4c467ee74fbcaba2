#pragma once

// Brute-force reference computations, written independently of the library
// (plain nested vectors, no shared helpers).

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<std::vector<double>>;

inline Vec bilinear(const Mat& o, const Mat& a, const Vec& t) {
  Vec g(o.size(), 0.0);
  for (std::size_t i = 0; i < o.size(); ++i)
    for (std::size_t r = 0; r < a.size(); ++r)
      for (std::size_t c = 0; c < a[r].size(); ++c) g[i] += o[i][r] * a[r][c] * t[c];
  return g;
}

// Naive exp/sum; fine for the moderate score ranges the generators produce.
inline Vec softmax(const Vec& g) {
  double sum = 0.0;
  for (double x : g) sum += std::exp(x);
  Vec a;
  for (double x : g) a.push_back(std::exp(x) / sum);
  return a;
}

inline Vec weighted_rows(const Vec& a, const Mat& o) {
  Vec out(o.empty() ? 0 : o[0].size(), 0.0);
  for (std::size_t i = 0; i < o.size(); ++i)
    for (std::size_t c = 0; c < o[i].size(); ++c) out[c] += a[i] * o[i][c];
  return out;
}

inline double cosine(const Vec& u, const Vec& v) {
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  return dot / (std::sqrt(nu) * std::sqrt(nv));
}

// rows(X) x out: each row x -> W x + b
inline Mat affine(const Mat& x, const Mat& w, const Vec& b) {
  Mat out(x.size(), Vec(w.size(), 0.0));
  for (std::size_t r = 0; r < x.size(); ++r)
    for (std::size_t o = 0; o < w.size(); ++o) {
      double s = b[o];
      for (std::size_t i = 0; i < x[r].size(); ++i) s += w[o][i] * x[r][i];
      out[r][o] = s;
    }
  return out;
}

// softmax(Q K^T / sqrt(d)) per row; mask 0 columns excluded.
inline Mat alignment(const Mat& q, const Mat& k, double d, const std::vector<int>& mask) {
  Mat beta(q.size(), Vec(k.size(), 0.0));
  for (std::size_t i = 0; i < q.size(); ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < k.size(); ++j) {
      if (!mask[j]) continue;
      double s = 0.0;
      for (std::size_t c = 0; c < q[i].size(); ++c) s += q[i][c] * k[j][c];
      beta[i][j] = std::exp(s / std::sqrt(d));
      sum += beta[i][j];
    }
    for (std::size_t j = 0; j < k.size(); ++j) beta[i][j] /= sum;
  }
  return beta;
}

// 1^T (beta V)
inline Vec summary(const Mat& beta, const Mat& v) {
  Vec out(v.empty() ? 0 : v[0].size(), 0.0);
  for (std::size_t i = 0; i < beta.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      for (std::size_t c = 0; c < v[j].size(); ++c) out[c] += beta[i][j] * v[j][c];
  return out;
}

inline Mat random_mat(std::mt19937_64& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Mat m(r, Vec(c));
  for (auto& row : m)
    for (auto& x : row) x = d(rng);
  return m;
}

inline Vec random_vec(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

}  // namespace oracle
