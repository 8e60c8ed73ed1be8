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

#include <gtest/gtest.h>

#include <cmath>

#include "test_util.hpp"

using namespace radka;
using namespace radka::testing;

TEST(Vec32, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(Vec32(std::vector<float>{}), DimError);
  EXPECT_THROW(Vec32({1.0f, NAN}), NumericError);
  EXPECT_THROW(Vec32({INFINITY}), NumericError);
  EXPECT_EQ(Vec32::zeros(3).dim(), 3u);
}

TEST(Mat32, ShapeChecks) {
  EXPECT_THROW(Mat32(2, 0, {}), DimError);
  EXPECT_THROW(Mat32(2, 2, {1, 2, 3}), DimError);
  EXPECT_THROW(Mat32(1, 2, {1, NAN}), NumericError);
  const Mat32 empty(0, 4, {});
  EXPECT_EQ(empty.rows(), 0u);
  const Mat32 m(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(m.at(1, 2), 6.0f);
  EXPECT_EQ(m.slice_rows(1, 1), Mat32(1, 3, {4, 5, 6}));
  EXPECT_THROW(m.slice_rows(1, 2), DimError);
  const std::vector<Vec32> ragged{Vec32({1, 2}), Vec32({1})};
  EXPECT_THROW(Mat32::from_rows(ragged), DimError);
}

TEST(Cosine, Examples) {
  EXPECT_DOUBLE_EQ(cosine(Vec32({1, 0}), Vec32({0, 1})), 0.0);
  EXPECT_DOUBLE_EQ(cosine(Vec32({1, 0}), Vec32({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(cosine(Vec32({1, 0}), Vec32({-2, 0})), -1.0);
  EXPECT_NEAR(cosine(Vec32({1, 1}), Vec32({1, 0})), std::sqrt(0.5), 1e-12);
  EXPECT_EQ(cosine(Vec32::zeros(3), Vec32({1, 2, 3})), 0.0);
  EXPECT_THROW(cosine(Vec32({1, 2}), Vec32({1, 2, 3})), DimError);
}

TEST(Cosine, SymmetricAndScaleInvariant) {
  Rng g(11);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng::below(g, 64);
    const Vec32 a = rand_vec(g, n), b = rand_vec(g, n);
    EXPECT_EQ(cosine(a, b), cosine(b, a));
    const float s = static_cast<float>(rng::uniform(g, 0.01, 100.0));
    EXPECT_NEAR(cosine(scale(a, s), b), cosine(a, b), 1e-6);
  }
}

TEST(Softmax, ExamplesAndShift) {
  const Vec32 u = softmax(Vec32({0, 0, 0, 0}));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_FLOAT_EQ(u[i], 0.25f);
  const Vec32 w = softmax(Vec32({1000, 0}));
  EXPECT_FLOAT_EQ(w[0], 1.0f);
  EXPECT_THROW(softmax(std::span<const float>{}), DimError);

  Rng g(12);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng::below(g, 32);
    auto v = rand_floats(g, n, 5.0);
    const float c = static_cast<float>(rng::uniform(g, -10, 10));
    std::vector<float> shifted(v);
    for (auto& x : shifted) x += c;
    const Vec32 a = softmax(v), b = softmax(shifted);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(a[i], b[i], 1e-6);
      sum += a[i];
    }
    EXPECT_NEAR(sum, 1.0, 1e-6);
  }
}

TEST(Kernels, MatvecMatmulMean) {
  const Mat32 m(2, 3, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(matvec(m, Vec32({1, 0, -1})), Vec32({-2, -2}));
  const Mat32 id = Mat32::identity(3);
  EXPECT_EQ(matmul(m, id), m);
  EXPECT_EQ(matmul(Mat32(1, 2, {1, 1}), Mat32(2, 1, {2, 3})), Mat32(1, 1, {5}));
  EXPECT_EQ(mean_rows(m), Vec32({2.5f, 3.5f, 4.5f}));
  EXPECT_THROW(mean_rows(Mat32(0, 2, {})), DimError);
  EXPECT_THROW(matvec(m, Vec32({1, 2})), DimError);
  const Vec32 x({1, 2}), y({3});
  EXPECT_EQ(concat({&x, &y}), Vec32({1, 2, 3}));
  EXPECT_EQ(add(x, Vec32({1, 1})), Vec32({2, 3}));
}

TEST(Kernels, Pure) {
  Rng g(13);
  for (int t = 0; t < 200; ++t) {
    const Mat32 a = rand_mat(g, 5, 7), b = rand_mat(g, 7, 3);
    const Vec32 v = rand_vec(g, 7);
    EXPECT_EQ(matmul(a, b), matmul(a, b));
    EXPECT_EQ(matvec(a, v), matvec(a, v));
    EXPECT_EQ(mean_rows(a), mean_rows(a));
    EXPECT_EQ(softmax(v), softmax(v));
    EXPECT_EQ(l2_normalized(v), l2_normalized(v));
  }
}

TEST(Kernels, Normalize) {
  EXPECT_EQ(l2_normalized(Vec32::zeros(2)), Vec32::zeros(2));
  Rng g(14);
  for (int t = 0; t < 100; ++t) EXPECT_NEAR(norm(l2_normalized(rand_vec(g, 17))), 1.0, 1e-6);
}

TEST(Rng, FixedSequence) {
  rng::Engine a(5), b(5);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(rng::uniform01(a), rng::uniform01(b));
    EXPECT_EQ(rng::below(a, 7), rng::below(b, 7));
  }
  rng::Engine g(0);
  for (int i = 0; i < 1000; ++i) {
    const double u = rng::uniform01(g);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(rng::below(g, 3), 3u);
  }
}
