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

// End-to-end composition: query vectors, retrieval, graph encoding of the
// retrieved entries and the current dialogue, aggregation.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/mghg.hpp"
#include "radka/predictor.hpp"
#include "radka/retrieval.hpp"
#include "radka/sdssd.hpp"
#include "radka/styleagg.hpp"
#include "radka/weights.hpp"

namespace radka {

struct ModelWeights {
  MghgEncoderWeights text;
  MghgEncoderWeights audio;
  std::optional<AnPredictorWeights> predictor;
  Affine van_proj;  // predicted style -> encoder width

  std::size_t model_dim() const { return audio.model_dim(); }

  /// Loads "text_mghg", "audio_mghg", "van_proj" and, when present, "an".
  static ModelWeights load(const WeightSet& ws) {
    ModelWeights m{MghgEncoderWeights::load(ws, "text_mghg"), MghgEncoderWeights::load(ws, "audio_mghg"),
                   std::nullopt, Affine::load(ws, "van_proj")};
    if (ws.has_prefix("an.")) m.predictor = AnPredictorWeights::load(ws, "an");
    if (m.text.model_dim() != m.audio.model_dim()) throw WeightsError("text and audio encoders differ in width");
    m.van_proj.expect(m.model_dim(), m.van_proj.in_dim(), "van_proj");
    if (m.predictor && m.predictor->style_dim() != m.van_proj.in_dim()) {
      throw WeightsError("van_proj input must match the predictor's style dim");
    }
    return m;
  }

  void store(WeightSet& ws) const {
    text.store(ws, "text_mghg");
    audio.store(ws, "audio_mghg");
    if (predictor) predictor->store(ws, "an");
    van_proj.store(ws, "van_proj");
  }

  /// Rejects weights that cannot consume bundles with `dims`.
  void expect_dims(const BundleDims& dims) const {
    text.expect_shape({dims.d_text, dims.s_text, dims.w_text, text.model_dim(), text.layers.size()}, "text_mghg");
    audio.expect_shape({dims.d_audio, dims.s_audio, dims.w_audio, audio.model_dim(), audio.layers.size()},
                       "audio_mghg");
    if (van_proj.in_dim() != dims.s_audio) throw WeightsError("van_proj input must match the sentence style dim");
    if (predictor && (predictor->text_dim() != dims.s_text || predictor->style_dim() != dims.s_audio)) {
      throw WeightsError("predictor dims disagree with the bundle dims");
    }
  }
};

struct EntryEncoding {
  Vec32 text;
  Vec32 audio;
};

/// Encodes stored entries on demand and keeps the results.
class EntryEncoder {
 public:
  EntryEncoder(const BundleFile& bundles, const ModelWeights& model, EncoderOptions opts = {})
      : model_(model), opts_(opts) {
    model.expect_dims(bundles.dims);
    for (const auto& b : bundles.bundles) bundles_.emplace(b.entry_id, &b);
  }

  const EntryEncoding& get(const std::string& id) {
    if (auto it = cache_.find(id); it != cache_.end()) return it->second;
    auto b = bundles_.find(id);
    if (b == bundles_.end()) throw BundleError("no bundle for entry '" + id + "'");
    const EmbeddingBundle& e = *b->second;
    if (!e.text || !e.audio_complete()) throw BundleError("entry '" + id + "' needs complete text and audio tracks");
    EntryEncoding enc{encode_track(*e.text, e.word_counts, model_.text, opts_),
                      encode_track(*e.audio, e.word_counts, model_.audio, opts_)};
    return cache_.emplace(id, std::move(enc)).first->second;
  }

  /// Stacks text and audio encodings of `ids` in order.
  std::pair<Mat32, Mat32> stack(std::span<const std::string> ids) {
    std::vector<Vec32> t, a;
    for (const auto& id : ids) {
      const auto& e = get(id);
      t.push_back(e.text);
      a.push_back(e.audio);
    }
    return {Mat32::from_rows(t), Mat32::from_rows(a)};
  }

 private:
  const ModelWeights& model_;
  EncoderOptions opts_;
  std::map<std::string, const EmbeddingBundle*> bundles_;
  std::map<std::string, EntryEncoding> cache_;
};

struct CurrentContext {
  CdQuery query;
  CurrentEncoding encoding;
  Vec32 van_projected;
};

inline CurrentContext prepare_current(const EmbeddingBundle& cd, std::span<const std::string> speakers,
                                      const SpeakerTable& table, const ModelWeights& model,
                                      const QueryOptions& qopts = {}, const EncoderOptions& eopts = {}) {
  CdQuery q = query_cd_vectors(cd, speakers, table, model.predictor ? &*model.predictor : nullptr, qopts);
  CurrentEncoding enc = encode_current_dialogue(cd, model.text, model.audio, eopts);
  Vec32 van = project_an_style(q.v_an, model.van_proj);
  return CurrentContext{std::move(q), std::move(enc), std::move(van)};
}

inline Aggregation aggregate_retrieved(EntryEncoder& encoder, const CurrentContext& ctx,
                                       const std::vector<RetrievalHit>& hits, const AggregationOptions& opts = {}) {
  std::vector<std::string> ids;
  for (const auto& h : hits) ids.push_back(h.entry_id);
  auto [h_pt, h_pa] = encoder.stack(ids);
  return aggregate(AggregationInput{std::move(h_pt), std::move(h_pa), ctx.encoding.text, ctx.encoding.audio,
                                    ctx.van_projected},
                   opts);
}

struct ZSweepOptions {
  /// Compare the whole final embedding instead of the retrieved component.
  bool full_fs = false;
  std::set<std::string> exclude_ids;
  AggregationOptions aggregation;
};

/// For each z: Rs1 top-z, aggregate, cosine against `gt_style`.
inline std::vector<ZPoint> z_sweep(const SdssdStore& store, EntryEncoder& encoder, const CurrentContext& ctx,
                                   std::span<const std::size_t> z_values, const Vec32& gt_style,
                                   const ZSweepOptions& opts = {}) {
  if (z_values.empty()) throw ConfigError("z-sweep needs at least one z");
  const std::size_t want = opts.full_fs ? 4 * ctx.encoding.text.dim() : ctx.encoding.audio.dim();
  if (gt_style.dim() != want) {
    throw DimError("ground-truth style has dim " + std::to_string(gt_style.dim()) + ", expected " +
                   std::to_string(want));
  }
  const std::size_t z_max = *std::max_element(z_values.begin(), z_values.end());
  RetrievalConfig cfg;
  cfg.scheme = Scheme::Rs1;
  cfg.k = z_max;
  cfg.z = z_max;
  cfg.exclude_ids = opts.exclude_ids;
  const auto cands = candidates(store, scan(store, ctx.query.sem, ctx.query.sty));
  const auto ranked = rank_candidates(cands, cfg);  // ConfigError when z_max is too large

  std::vector<ZPoint> out;
  for (std::size_t z : z_values) {
    if (z == 0) throw ConfigError("z must be positive");
    const std::vector<RetrievalHit> top(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(z));
    const Aggregation agg = aggregate_retrieved(encoder, ctx, top, opts.aggregation);
    out.push_back({z, cosine(opts.full_fs ? agg.fs_emb : agg.rs_emb, gt_style)});
  }
  std::sort(out.begin(), out.end(), [](const ZPoint& a, const ZPoint& b) { return a.z < b.z; });
  return out;
}

}  // namespace radka
