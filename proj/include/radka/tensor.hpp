// Copyright 2026 The Radka Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense float32 vectors/matrices and the deterministic reduction kernels every
// other module is built on. Storage is binary32; every reduction (dot
// products, means, matrix products) accumulates in binary64 in a fixed
// left-to-right order, so identical inputs always give bit-identical outputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "radka/errors.hpp"

namespace radka {

namespace kernel {

inline void ensure_finite(std::span<const float> xs, const char* what) {
  for (float x : xs) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite value in ") + what);
  }
}

inline double dot(std::span<const float> a, std::span<const float> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  return acc;
}

inline double sq_norm(std::span<const float> a) { return dot(a, a); }

/// out[r] = sum_c m[r*cols + c] * x[c]  (m row-major, rows = out.size()).
inline void matvec_into(std::span<float> out, std::span<const float> m, std::size_t cols,
                        std::span<const float> x) {
  for (std::size_t r = 0; r < out.size(); ++r) out[r] = static_cast<float>(dot(m.subspan(r * cols, cols), x));
}

/// Same as matvec_into but keeps the binary64 results (used where several
/// matrix-vector products are summed before rounding, e.g. recurrent gates).
inline void matvec_acc(std::span<double> acc, std::span<const float> m, std::size_t cols,
                       std::span<const float> x) {
  for (std::size_t r = 0; r < acc.size(); ++r) acc[r] += dot(m.subspan(r * cols, cols), x);
}

}  // namespace kernel

/// Dense float32 vector. Non-empty and finite by construction.
class Vec32 {
 public:
  explicit Vec32(std::vector<float> values) : v_(std::move(values)) {
    if (v_.empty()) throw DimError("Vec32 must have dim > 0");
    kernel::ensure_finite(v_, "Vec32");
  }
  Vec32(std::initializer_list<float> values) : Vec32(std::vector<float>(values)) {}

  static Vec32 zeros(std::size_t dim) { return Vec32(std::vector<float>(dim, 0.0f)); }

  std::size_t dim() const noexcept { return v_.size(); }
  float operator[](std::size_t i) const { return v_[i]; }
  std::span<const float> values() const noexcept { return v_; }
  const std::vector<float>& vector() const noexcept { return v_; }

  friend bool operator==(const Vec32&, const Vec32&) = default;

 private:
  std::vector<float> v_;
};

/// Row-major float32 matrix. cols > 0; rows may be 0 to represent an empty
/// sequence (e.g. a dialogue with no audio turns yet).
class Mat32 {
 public:
  Mat32(std::size_t rows, std::size_t cols, std::vector<float> values)
      : rows_(rows), cols_(cols), v_(std::move(values)) {
    if (cols_ == 0) throw DimError("Mat32 must have cols > 0");
    if (v_.size() != rows_ * cols_) {
      throw DimError("Mat32 payload has " + std::to_string(v_.size()) + " values, expected " +
                     std::to_string(rows_ * cols_));
    }
    kernel::ensure_finite(v_, "Mat32");
  }

  static Mat32 zeros(std::size_t rows, std::size_t cols) {
    return Mat32(rows, cols, std::vector<float>(rows * cols, 0.0f));
  }
  static Mat32 identity(std::size_t n) {
    std::vector<float> v(n * n, 0.0f);
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0f;
    return Mat32(n, n, std::move(v));
  }
  static Mat32 from_rows(std::span<const Vec32> rows) {
    if (rows.empty()) throw DimError("from_rows needs at least one row");
    const std::size_t cols = rows.front().dim();
    std::vector<float> v;
    v.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.dim() != cols) throw DimError("from_rows: ragged rows");
      v.insert(v.end(), r.values().begin(), r.values().end());
    }
    return Mat32(rows.size(), cols, std::move(v));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  float at(std::size_t r, std::size_t c) const { return v_[r * cols_ + c]; }
  std::span<const float> row(std::size_t r) const { return std::span<const float>(v_).subspan(r * cols_, cols_); }
  Vec32 row_vec(std::size_t r) const { return Vec32(std::vector<float>(row(r).begin(), row(r).end())); }
  std::span<const float> values() const noexcept { return v_; }

  /// Rows [first, first + count) as a new matrix.
  Mat32 slice_rows(std::size_t first, std::size_t count) const {
    if (first + count > rows_) throw DimError("slice_rows out of range");
    auto s = std::span<const float>(v_).subspan(first * cols_, count * cols_);
    return Mat32(count, cols_, std::vector<float>(s.begin(), s.end()));
  }

  friend bool operator==(const Mat32&, const Mat32&) = default;

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<float> v_;
};

inline void require_same_dim(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimError(std::string(what) + ": dimension mismatch " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

inline double dot(const Vec32& a, const Vec32& b) {
  require_same_dim(a.dim(), b.dim(), "dot");
  return kernel::dot(a.values(), b.values());
}

inline double norm(const Vec32& a) { return std::sqrt(kernel::sq_norm(a.values())); }

/// Cosine of the angle between a and b. Degenerate inputs (either norm below
/// 1e-12) score 0 so silent or empty utterances rank neutrally.
inline double cosine(std::span<const float> a, std::span<const float> b) {
  require_same_dim(a.size(), b.size(), "cosine");
  const double na = std::sqrt(kernel::sq_norm(a));
  const double nb = std::sqrt(kernel::sq_norm(b));
  if (na < 1e-12 || nb < 1e-12) return 0.0;
  const double c = kernel::dot(a, b) / (na * nb);
  return c > 1.0 ? 1.0 : (c < -1.0 ? -1.0 : c);
}

inline double cosine(const Vec32& a, const Vec32& b) { return cosine(a.values(), b.values()); }

inline Vec32 softmax(std::span<const float> logits) {
  if (logits.empty()) throw DimError("softmax of empty input");
  double mx = logits[0];
  for (float x : logits) mx = std::max(mx, static_cast<double>(x));
  std::vector<double> e(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    e[i] = std::exp(static_cast<double>(logits[i]) - mx);
    sum += e[i];
  }
  std::vector<float> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = static_cast<float>(e[i] / sum);
  return Vec32(std::move(out));
}

inline Vec32 softmax(const Vec32& logits) { return softmax(logits.values()); }

inline Vec32 matvec(const Mat32& m, std::span<const float> v) {
  require_same_dim(m.cols(), v.size(), "matvec");
  std::vector<float> out(m.rows());
  if (out.empty()) throw DimError("matvec of a 0-row matrix");
  kernel::matvec_into(out, m.values(), m.cols(), v);
  return Vec32(std::move(out));
}

inline Vec32 matvec(const Mat32& m, const Vec32& v) { return matvec(m, v.values()); }

inline Mat32 matmul(const Mat32& a, const Mat32& b) {
  require_same_dim(a.cols(), b.rows(), "matmul");
  std::vector<float> out(a.rows() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) acc += static_cast<double>(a.at(i, k)) * b.at(k, j);
      out[i * b.cols() + j] = static_cast<float>(acc);
    }
  }
  return Mat32(a.rows(), b.cols(), std::move(out));
}

inline Vec32 mean_rows(const Mat32& m) {
  if (m.rows() == 0) throw DimError("mean_rows of an empty matrix");
  std::vector<double> acc(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < m.cols(); ++c) acc[c] += row[c];
  }
  std::vector<float> out(m.cols());
  for (std::size_t c = 0; c < m.cols(); ++c) out[c] = static_cast<float>(acc[c] / static_cast<double>(m.rows()));
  return Vec32(std::move(out));
}

inline Vec32 add(const Vec32& a, const Vec32& b) {
  require_same_dim(a.dim(), b.dim(), "add");
  std::vector<float> out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] + b[i];
  return Vec32(std::move(out));
}

inline Vec32 scale(const Vec32& a, float s) {
  std::vector<float> out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = a[i] * s;
  return Vec32(std::move(out));
}

/// a / |a|; zero vectors are returned unchanged.
inline Vec32 l2_normalized(const Vec32& a) {
  const double n = norm(a);
  if (n < 1e-12) return a;
  std::vector<float> out(a.dim());
  for (std::size_t i = 0; i < a.dim(); ++i) out[i] = static_cast<float>(a[i] / n);
  return Vec32(std::move(out));
}

inline Vec32 concat(std::initializer_list<const Vec32*> parts) {
  std::vector<float> out;
  for (const Vec32* p : parts) out.insert(out.end(), p->values().begin(), p->values().end());
  return Vec32(std::move(out));
}

}  // namespace radka
