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

// Style-knowledge aggregation over retrieved dialogues and the contrastive
// objective used to pull retrieved encodings toward the current dialogue.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/retrieval.hpp"
#include "radka/sdssd.hpp"
#include "radka/tensor.hpp"
#include "radka/weights.hpp"

namespace radka {

struct AggregationInput {
  Mat32 h_pt;  // k x D, retrieved text encodings
  Mat32 h_pa;  // k x D, retrieved audio encodings (row i matches h_pt row i)
  Vec32 h_t_cur;
  Vec32 h_a_cur;
  Vec32 v_an_projected;  // D-wide
};

struct AggregationOptions {
  /// L2-normalize h_t_cur before the attention logits.
  bool normalize_query = false;
};

struct Aggregation {
  Vec32 weights;  // k
  Vec32 rs_emb;   // D
  Vec32 fs_emb;   // 4D: [rs_emb, h_t_cur, h_a_cur, v_an_projected]
};

/// Projects the predicted turn-N style to the encoder width; the zero vector
/// when no prediction is available.
inline Vec32 project_an_style(const std::optional<Vec32>& v_an, const Affine& proj) {
  if (!v_an) return Vec32::zeros(proj.out_dim());
  return proj.apply(*v_an);
}

inline Aggregation aggregate(const AggregationInput& in, const AggregationOptions& opts = {}) {
  const std::size_t k = in.h_pt.rows();
  const std::size_t d = in.h_pa.cols();
  if (k == 0) throw AlignError("aggregation needs at least one retrieved dialogue");
  if (in.h_pa.rows() != k) {
    throw AlignError("text and audio encodings disagree on the retrieved count (" + std::to_string(k) + " vs " +
                     std::to_string(in.h_pa.rows()) + ")");
  }
  require_same_dim(in.h_pt.cols(), in.h_t_cur.dim(), "aggregation text width");
  require_same_dim(d, in.h_a_cur.dim(), "aggregation audio width");
  require_same_dim(d, in.v_an_projected.dim(), "aggregation style width");

  const Vec32 query = opts.normalize_query ? l2_normalized(in.h_t_cur) : in.h_t_cur;
  std::vector<float> logits(k);
  for (std::size_t i = 0; i < k; ++i) logits[i] = static_cast<float>(kernel::dot(in.h_pt.row(i), query.values()));
  Vec32 w = softmax(logits);

  std::vector<double> acc(d, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    auto row = in.h_pa.row(i);
    for (std::size_t c = 0; c < d; ++c) acc[c] += static_cast<double>(w[i]) * row[c];
  }
  std::vector<float> rs(d);
  for (std::size_t c = 0; c < d; ++c) rs[c] = static_cast<float>(acc[c]);
  Vec32 rs_emb(std::move(rs));
  Vec32 fs = concat({&rs_emb, &in.h_t_cur, &in.h_a_cur, &in.v_an_projected});
  return Aggregation{std::move(w), std::move(rs_emb), std::move(fs)};
}

struct ContrastiveConfig {
  double tau = 0.07;
  Mat32 positives;
  Mat32 negatives;
  bool exclude_self = true;
};

/// -log(positive mass / total mass) over exp(cos(anchor, x) / tau). The anchor
/// is positives row `anchor_row`; with exclude_self that row is left out of
/// both sums. Empty negatives are allowed (the loss is then 0).
inline double contrastive_loss(std::size_t anchor_row, const ContrastiveConfig& cfg) {
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) throw LossError("tau must be positive");
  if (anchor_row >= cfg.positives.rows()) throw LossError("anchor row out of range");
  if (cfg.negatives.rows() > 0) require_same_dim(cfg.positives.cols(), cfg.negatives.cols(), "contrastive sets");
  const auto anchor = cfg.positives.row(anchor_row);

  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < cfg.positives.rows(); ++i) {
    if (cfg.exclude_self && i == anchor_row) continue;
    pos.push_back(cosine(anchor, cfg.positives.row(i)) / cfg.tau);
  }
  if (pos.empty()) throw LossError("no positives remain after excluding the anchor");
  for (std::size_t i = 0; i < cfg.negatives.rows(); ++i) neg.push_back(cosine(anchor, cfg.negatives.row(i)) / cfg.tau);

  double top = *std::max_element(pos.begin(), pos.end());
  for (double x : neg) top = std::max(top, x);
  double num = 0.0, den = 0.0;
  for (double x : pos) num += std::exp(x - top);
  den = num;
  for (double x : neg) den += std::exp(x - top);
  return std::max(0.0, std::log(den) - std::log(num));
}

/// Anchor given by value: it must equal some positives row bit-for-bit when
/// exclude_self is set (the first such row is the anchor). Otherwise it is
/// scored against every row.
inline double contrastive_loss(const Vec32& anchor, const ContrastiveConfig& cfg) {
  require_same_dim(anchor.dim(), cfg.positives.cols(), "contrastive anchor");
  for (std::size_t i = 0; i < cfg.positives.rows(); ++i) {
    auto row = cfg.positives.row(i);
    if (std::equal(row.begin(), row.end(), anchor.values().begin(), [](float a, float b) {
          return std::bit_cast<std::uint32_t>(a) == std::bit_cast<std::uint32_t>(b);
        })) {
      return contrastive_loss(i, cfg);
    }
  }
  if (cfg.exclude_self) throw LossError("anchor is not one of the positives");
  std::vector<float> v(anchor.values().begin(), anchor.values().end());
  v.insert(v.end(), cfg.positives.values().begin(), cfg.positives.values().end());
  ContrastiveConfig with_anchor{cfg.tau, Mat32(cfg.positives.rows() + 1, anchor.dim(), std::move(v)), cfg.negatives,
                                true};
  return contrastive_loss(0, with_anchor);
}

/// Mean of the per-anchor loss with each positive row as anchor.
inline double batch_contrastive(const Mat32& positives, const Mat32& negatives, double tau = 0.07,
                                bool exclude_self = true) {
  if (positives.rows() == 0) throw LossError("batch needs at least one positive");
  ContrastiveConfig cfg{tau, positives, negatives, exclude_self};
  double sum = 0.0;
  for (std::size_t i = 0; i < positives.rows(); ++i) sum += contrastive_loss(i, cfg);
  return sum / static_cast<double>(positives.rows());
}

struct ContrastiveSets {
  std::vector<std::string> positives;
  std::vector<std::string> negatives;
};

/// Default sampler: the Top-k entries by sem + sty are positives, the
/// last k of that ranking (lowest sum first) are negatives.
inline ContrastiveSets sample_contrastive_sets(const SdssdStore& store, const Vec32& query_sem, const Vec32& query_sty,
                                               std::size_t k, const std::set<std::string>& exclude = {}) {
  RetrievalConfig cfg;
  cfg.scheme = Scheme::Rs1;
  cfg.exclude_ids = exclude;
  const auto cands = candidates(store, scan(store, query_sem, query_sty));
  std::size_t avail = 0;
  for (const auto& c : cands) avail += exclude.count(c.id) ? 0 : 1;
  if (2 * k > avail) throw ConfigError("store too small for " + std::to_string(k) + " positives and negatives");
  cfg.k = avail;
  const auto ranked = rank_candidates(cands, cfg);
  ContrastiveSets out;
  for (std::size_t i = 0; i < k; ++i) out.positives.push_back(ranked[i].entry_id);
  // the last k of the same total order, lowest first, so the sets never overlap
  std::vector<RetrievalHit> tail(ranked.rbegin(), ranked.rbegin() + static_cast<std::ptrdiff_t>(k));
  for (const auto& h : tail) out.negatives.push_back(h.entry_id);
  return out;
}

inline void export_fs_emb(const Vec32& fs_emb, const std::filesystem::path& path) { write_vector_file(path, fs_emb); }

struct ZPoint {
  std::size_t z = 0;
  double similarity = 0.0;
};

inline std::string z_sweep_csv(std::vector<ZPoint> rows) {
  std::sort(rows.begin(), rows.end(), [](const ZPoint& a, const ZPoint& b) { return a.z < b.z; });
  std::string out = "z,similarity\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f\n", r.z, r.similarity);
    out += buf;
  }
  return out;
}

}  // namespace radka
