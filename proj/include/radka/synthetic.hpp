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

// Seeded clustered corpora for tests and experiments. Every entry belongs to a
// cluster; each cluster has one centroid per feature kind and rows are
// centroid + noise * N(0, 1). Sentence audio noise is made mean-free across
// the turns of a dialogue, so dialogue-level style vectors sit on the
// centroid plus the speaker term.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/meta.hpp"
#include "radka/pipeline.hpp"
#include "radka/rng.hpp"
#include "radka/sdssd.hpp"
#include "radka/speakers.hpp"
#include "radka/tensor.hpp"
#include "radka/weights.hpp"

namespace radka::synthetic {

struct Dims {
  std::uint32_t d_text = 32, s_text = 24, w_text = 16;
  std::uint32_t s_audio = 20, w_audio = 12;
  std::uint32_t speaker = 8;

  BundleDims bundle_dims() const { return {d_text, s_audio, d_text, s_text, w_text, s_audio, s_audio, w_audio}; }
};

struct Spec {
  std::size_t entries = 50;
  std::size_t turns_min = 2, turns_max = 6;
  std::size_t words_min = 1, words_max = 8;
  Dims dims;
  std::uint64_t seed = 0;
  std::size_t clusters = 8;
  /// When set, exactly this many stored entries join the first query's
  /// cluster; the others are spread over the remaining clusters.
  std::optional<std::size_t> cd_cluster_size;
  double noise = 0.3;                // node-level audio features
  std::optional<double> text_noise;  // node-level text features (default: noise)
  double vector_noise = 0.05;  // dialogue-level text vector
  double speaker_scale = 0.1;
  std::size_t queries = 1;
  std::size_t gt_size = 10;
  /// Every cluster uses the first cluster's text centroids, so clusters
  /// differ only in style.
  bool shared_text = false;

  void validate() const {
    if (turns_min == 0 || turns_min > turns_max) throw ConfigError("turns range must satisfy 1 <= A <= B");
    if (words_min == 0 || words_min > words_max) throw ConfigError("words range must satisfy 1 <= A <= B");
    if (clusters == 0) throw ConfigError("at least one cluster is required");
    if (cd_cluster_size && *cd_cluster_size > entries) throw ConfigError("cd cluster larger than the corpus");
    if (cd_cluster_size && clusters < 2 && *cd_cluster_size < entries) {
      throw ConfigError("a planted cd cluster needs at least two clusters");
    }
    if (!(noise >= 0.0) || !(vector_noise >= 0.0) || !(speaker_scale >= 0.0) || !(text_noise.value_or(0.0) >= 0.0)) {
      throw ConfigError("noise levels must be non-negative");
    }
    const Dims& d = dims;
    if (!d.d_text || !d.s_text || !d.w_text || !d.s_audio || !d.w_audio || !d.speaker) {
      throw ConfigError("all dims must be positive");
    }
  }
};

struct Corpus {
  BundleFile bundles;  // stored dialogues, complete tracks
  meta::MetaFile meta;
  BundleFile queries;       // current dialogues with the last audio turn absent
  BundleFile queries_full;  // the same with every audio turn
  std::vector<DialogueRecord> query_records;
  std::vector<GroundTruth> ground_truth;
  std::vector<std::size_t> entry_cluster;
  std::vector<std::size_t> query_cluster;
};

namespace detail {

struct Centroids {
  std::vector<float> d_text, s_text, w_text, s_audio, w_audio;
};

inline std::vector<float> normal_vec(rng::Engine& g, std::size_t n, double scale) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(scale * rng::normal(g));
  return v;
}

/// Always the first draws of a corpus engine.
inline std::vector<Centroids> make_centroids(const Spec& s, rng::Engine& g) {
  const Dims& d = s.dims;
  std::vector<Centroids> cents;
  for (std::size_t k = 0; k < s.clusters; ++k) {
    cents.push_back({normal_vec(g, d.d_text, 1.0), normal_vec(g, d.s_text, 1.0), normal_vec(g, d.w_text, 1.0),
                     normal_vec(g, d.s_audio, 1.0), normal_vec(g, d.w_audio, 1.0)});
  }
  if (s.shared_text) {
    for (auto& c : cents) {
      c.d_text = cents.front().d_text;
      c.s_text = cents.front().s_text;
      c.w_text = cents.front().w_text;
    }
  }
  return cents;
}

inline std::vector<float> noisy_rows(rng::Engine& g, const std::vector<float>& centroid, std::size_t rows,
                                     double noise) {
  std::vector<float> out;
  out.reserve(rows * centroid.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (float c : centroid) out.push_back(static_cast<float>(c + noise * rng::normal(g)));
  }
  return out;
}

/// Rows centroid + noise with the noise re-centred so the column means equal
/// the centroid (up to float rounding).
inline std::vector<float> mean_free_rows(rng::Engine& g, const std::vector<float>& centroid, std::size_t rows,
                                         double noise) {
  const std::size_t d = centroid.size();
  std::vector<double> eps(rows * d);
  for (auto& e : eps) e = noise * rng::normal(g);
  std::vector<float> out(rows * d);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < rows; ++r) mean += eps[r * d + c];
    mean /= static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) out[r * d + c] = static_cast<float>(centroid[c] + eps[r * d + c] - mean);
  }
  return out;
}

inline std::string pad_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%05zu", prefix, i);
  return buf;
}

struct Dialogue {
  DialogueRecord record;
  EmbeddingBundle bundle;
};

inline Dialogue make_dialogue(rng::Engine& g, const Spec& s, const Centroids& c, const std::string& id) {
  const std::size_t n = s.turns_min + rng::below(g, s.turns_max - s.turns_min + 1);
  Dialogue out;
  out.record.id = id;
  out.bundle.entry_id = id;
  for (std::size_t i = 0; i < n; ++i) {
    const auto q = static_cast<std::uint32_t>(s.words_min + rng::below(g, s.words_max - s.words_min + 1));
    std::string text;
    for (std::uint32_t j = 0; j < q; ++j) {
      if (j) text += ' ';
      text += "w" + std::to_string(rng::below(g, 1000));
    }
    out.record.utterances.push_back(
        Utterance::make(static_cast<std::uint32_t>(i), i % 2 == 0 ? "spk_a" : "spk_b", std::move(text)));
    out.bundle.word_counts.push_back(q);
  }
  const std::size_t words = out.bundle.words_in_first(n);
  const Dims& d = s.dims;

  std::vector<float> dt = c.d_text;
  for (auto& x : dt) x = static_cast<float>(x + s.vector_noise * rng::normal(g));
  const double tn = s.text_noise.value_or(s.noise);
  TrackEmbeddings text{Vec32(std::move(dt)), Mat32(n, d.s_text, noisy_rows(g, c.s_text, n, tn)),
                       Mat32(words, d.w_text, noisy_rows(g, c.w_text, words, tn))};
  Mat32 s_audio(n, d.s_audio, mean_free_rows(g, c.s_audio, n, s.noise));
  Vec32 d_audio = mean_rows(s_audio);
  TrackEmbeddings audio{std::move(d_audio), std::move(s_audio),
                        Mat32(words, d.w_audio, noisy_rows(g, c.w_audio, words, s.noise))};
  out.bundle.text = std::move(text);
  out.bundle.audio = std::move(audio);
  return out;
}

inline EmbeddingBundle drop_last_audio_turn(EmbeddingBundle b) {
  const std::size_t n = b.n_sentences();
  if (!b.audio) throw BundleError("bundle '" + b.entry_id + "' has no audio track");
  TrackEmbeddings& a = b.audio.value();
  Mat32 sentences = a.sentences.slice_rows(0, n - 1);
  Mat32 words = a.words.slice_rows(0, b.words_in_first(n - 1));
  a.sentences = std::move(sentences);
  a.words = std::move(words);
  return b;
}

}  // namespace detail

inline SpeakerTable make_speaker_table(const Spec& s, rng::Engine& g) {
  std::map<std::string, Vec32> spk;
  for (const char* id : {"spk_a", "spk_b"}) spk.emplace(id, Vec32(detail::normal_vec(g, s.dims.speaker, s.speaker_scale)));
  return SpeakerTable(s.dims.s_audio, s.dims.speaker, std::move(spk));
}

/// Generates the corpus. One engine drives every draw in a fixed order, so a
/// given Spec always produces the same bytes.
inline Corpus generate(const Spec& s) {
  s.validate();
  rng::Engine g(s.seed);
  const Dims& d = s.dims;
  const auto cents = detail::make_centroids(s, g);
  const SpeakerTable table = make_speaker_table(s, g);

  Corpus out;
  out.bundles.dims = d.bundle_dims();
  out.queries.dims = out.queries_full.dims = out.bundles.dims;
  out.meta.speaker_table = table;

  for (std::size_t i = 0; i < s.entries; ++i) {
    std::size_t cluster;
    if (s.cd_cluster_size) {
      cluster = i < *s.cd_cluster_size ? 0 : 1 + (i - *s.cd_cluster_size) % std::max<std::size_t>(1, s.clusters - 1);
    } else {
      cluster = rng::below(g, s.clusters);
    }
    auto dlg = detail::make_dialogue(g, s, cents[cluster], detail::pad_id("sd_", i));
    out.entry_cluster.push_back(cluster);
    out.meta.records.push_back(std::move(dlg.record));
    out.bundles.bundles.push_back(std::move(dlg.bundle));
  }

  for (std::size_t qi = 0; qi < s.queries; ++qi) {
    const std::size_t cluster = (qi == 0 && s.cd_cluster_size) ? 0 : rng::below(g, s.clusters);
    auto dlg = detail::make_dialogue(g, s, cents[cluster], detail::pad_id("cd_", qi));
    out.query_cluster.push_back(cluster);

    // ground truth: same-cluster entries ranked by the full current dialogue
    const auto speakers = speakers_of(dlg.record.utterances, dlg.bundle.n_sentences());
    const Vec32 q_sty = dialogue_style_vec(dlg.bundle.audio->sentences, speakers, table);
    struct Scored {
      double score;
      std::string id;
    };
    std::vector<Scored> members;
    for (std::size_t i = 0; i < s.entries; ++i) {
      if (out.entry_cluster[i] != cluster) continue;
      const auto& b = out.bundles.bundles[i];
      const auto spk = speakers_of(out.meta.records[i].utterances, b.n_sentences());
      const double score = cosine(dlg.bundle.text->dialogue, b.text->dialogue) +
                           cosine(q_sty, dialogue_style_vec(b.audio->sentences, spk, table));
      members.push_back({score, b.entry_id});
    }
    std::sort(members.begin(), members.end(), [](const Scored& a, const Scored& b) {
      if (a.score != b.score) return a.score > b.score;
      return a.id < b.id;
    });
    GroundTruth gt{dlg.record.id, {}};
    for (std::size_t i = 0; i < std::min(s.gt_size, members.size()); ++i) gt.gt.push_back(members[i].id);
    out.ground_truth.push_back(std::move(gt));

    out.queries_full.bundles.push_back(dlg.bundle);
    out.queries.bundles.push_back(detail::drop_last_audio_turn(std::move(dlg.bundle)));
    out.query_records.push_back(std::move(dlg.record));
  }
  return out;
}

/// Mean audio encoding of the stored entries in `cluster`: the style shared
/// by that cluster, used as the reference for z-sweeps.
inline Vec32 cluster_style_target(const Corpus& c, const ModelWeights& model, std::size_t cluster) {
  std::vector<Vec32> rows;
  for (std::size_t i = 0; i < c.bundles.bundles.size(); ++i) {
    if (c.entry_cluster[i] != cluster) continue;
    const auto& b = c.bundles.bundles[i];
    rows.push_back(encode_track(*b.audio, b.word_counts, model.audio));
  }
  if (rows.empty()) throw ConfigError("cluster " + std::to_string(cluster) + " has no stored entries");
  return mean_rows(Mat32::from_rows(rows));
}

struct WeightSpec {
  std::size_t model_dim = 256;
  std::size_t layers = 1;
  std::size_t predictor_hidden = 64;
  std::size_t predictor_mid = 128;
  std::size_t predictor_out = 128;
  double scale = 0.1;  // uniform(-scale, scale); 0 gives all-zero weights
  std::uint64_t seed = 0;
};

/// Reference weights for every model component, filled tensor by tensor in
/// name order.
inline WeightSet reference_weights(const Dims& d, const WeightSpec& ws) {
  if (ws.model_dim == 0 || ws.model_dim % 2 != 0) throw ConfigError("model dim must be even and positive");
  ModelWeights m{MghgEncoderWeights::zeros({d.d_text, d.s_text, d.w_text, ws.model_dim, ws.layers}),
                 MghgEncoderWeights::zeros({d.s_audio, d.s_audio, d.w_audio, ws.model_dim, ws.layers}),
                 AnPredictorWeights::zeros(d.s_text, d.s_audio, ws.predictor_hidden, ws.predictor_mid,
                                           ws.predictor_out),
                 Affine::zeros(ws.model_dim, d.s_audio)};
  WeightSet zeros;
  m.store(zeros);
  if (ws.scale == 0.0) return zeros;
  rng::Engine g(ws.seed);
  WeightSet out;
  for (const auto& [name, t] : zeros.tensors()) {
    Tensor filled = t;
    for (auto& x : filled.data) x = static_cast<float>(rng::uniform(g, -ws.scale, ws.scale));
    out.put(name, std::move(filled));
  }
  return out;
}

}  // namespace radka::synthetic
