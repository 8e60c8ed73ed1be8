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

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "radka/errors.hpp"
#include "radka/tensor.hpp"

namespace radka {

/// Speaker vectors plus the linear map that lifts them into the style space.
/// Speaker information is added to a sentence style row as row + P * spk.
class SpeakerTable {
 public:
  /// With no projection, P is identity with zero padding (style_dim x speaker_dim).
  SpeakerTable(std::size_t style_dim, std::size_t speaker_dim, std::map<std::string, Vec32> speakers,
               std::optional<Mat32> projection = std::nullopt, std::optional<std::uint64_t> projection_seed = std::nullopt)
      : style_dim_(style_dim),
        speaker_dim_(speaker_dim),
        speakers_(std::move(speakers)),
        projection_(projection ? std::move(*projection) : identity_padded(style_dim, speaker_dim)),
        projection_seed_(projection_seed) {
    if (style_dim_ == 0 || speaker_dim_ == 0) throw DimError("speaker table dims must be positive");
    if (projection_.rows() != style_dim_ || projection_.cols() != speaker_dim_) {
      throw DimError("speaker projection must be style_dim x speaker_dim");
    }
    for (const auto& [id, v] : speakers_) {
      if (v.dim() != speaker_dim_) throw DimError("speaker '" + id + "' has the wrong dim");
    }
  }

  /// Projection drawn uniformly from +-1/sqrt(speaker_dim) with a recorded seed.
  static SpeakerTable with_seeded_projection(std::size_t style_dim, std::size_t speaker_dim,
                                             std::map<std::string, Vec32> speakers, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(speaker_dim));
    std::vector<float> v(style_dim * speaker_dim);
    for (auto& x : v) x = static_cast<float>((static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0) * bound);
    return SpeakerTable(style_dim, speaker_dim, std::move(speakers), Mat32(style_dim, speaker_dim, std::move(v)), seed);
  }

  static Mat32 identity_padded(std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw DimError("speaker table dims must be positive");
    std::vector<float> v(rows * cols, 0.0f);
    for (std::size_t i = 0; i < std::min(rows, cols); ++i) v[i * cols + i] = 1.0f;
    return Mat32(rows, cols, std::move(v));
  }

  std::size_t style_dim() const { return style_dim_; }
  std::size_t speaker_dim() const { return speaker_dim_; }
  const Mat32& projection() const { return projection_; }
  std::optional<std::uint64_t> projection_seed() const { return projection_seed_; }
  const std::map<std::string, Vec32>& speakers() const { return speakers_; }

  const Vec32& speaker(const std::string& id) const {
    auto it = speakers_.find(id);
    if (it == speakers_.end()) throw SpeakerError("unknown speaker id '" + id + "'");
    return it->second;
  }

  Vec32 projected(const std::string& id) const { return matvec(projection_, speaker(id)); }

  friend bool operator==(const SpeakerTable&, const SpeakerTable&) = default;

 private:
  std::size_t style_dim_;
  std::size_t speaker_dim_;
  std::map<std::string, Vec32> speakers_;
  Mat32 projection_;
  std::optional<std::uint64_t> projection_seed_;
};

/// Dialogue-level style vector: mean over sentences of (style row + P * speaker).
/// Also used for the dialogue-level audio node.
inline Vec32 dialogue_style_vec(const Mat32& sentence_styles, std::span<const std::string> speakers,
                                const SpeakerTable& table) {
  if (sentence_styles.rows() == 0) throw DimError("dialogue_style_vec needs at least one sentence");
  if (sentence_styles.rows() != speakers.size()) throw DimError("one speaker id is required per sentence row");
  require_same_dim(sentence_styles.cols(), table.style_dim(), "dialogue_style_vec");
  const std::size_t d = sentence_styles.cols();
  std::vector<double> acc(d, 0.0);
  for (std::size_t r = 0; r < sentence_styles.rows(); ++r) {
    const Vec32 spk = table.projected(speakers[r]);
    auto row = sentence_styles.row(r);
    for (std::size_t c = 0; c < d; ++c) acc[c] += static_cast<double>(row[c] + spk[c]);
  }
  std::vector<float> out(d);
  for (std::size_t c = 0; c < d; ++c) out[c] = static_cast<float>(acc[c] / static_cast<double>(sentence_styles.rows()));
  return Vec32(std::move(out));
}

}  // namespace radka
