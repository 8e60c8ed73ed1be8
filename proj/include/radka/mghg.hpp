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

// Multi-granularity heterogeneous dialogue graph and its encoder.
//
// Nodes: one dialogue node, N sentence nodes (turn order), sum(q_i) word nodes
// (reading order). Edge types: WordInSent (word -> its sentence), SentInDial
// (sentence -> dialogue), WordAdj (word j, word j+1 of the same sentence),
// SentAdj (sentence i, sentence i+1). Every edge type carries messages in
// both directions, giving eight directed relations.
//
// Encoder: project each granularity to the model width, one (or more)
// message-passing layers
//   h'_v = sum_{r incident to v} W_self^r h_v + W_neigh^r mean_{u in N_r(v)} h_u + b^r
// then bidirectional LSTM fusers over sentences and words, temporal pooling,
// and a fusion head over concat(dialogue, sentence summary, word summary).

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "radka/binio.hpp"
#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/log.hpp"
#include "radka/recurrent.hpp"
#include "radka/tensor.hpp"
#include "radka/weights.hpp"

namespace radka {

enum class EdgeType : std::size_t { WordInSent = 0, SentInDial, WordAdj, SentAdj };
inline constexpr std::size_t kEdgeTypes = 4;

/// Local node indices within each granularity. WordInSent: (word, sentence);
/// SentInDial: (sentence, 0); WordAdj: (word j, word j+1); SentAdj: (i, i+1).
struct Edge {
  std::uint32_t src = 0;
  std::uint32_t dst = 0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Mghg {
  std::vector<std::uint32_t> word_counts;
  Mat32 dialogue;   // 1 x D_d
  Mat32 sentences;  // N x D_s
  Mat32 words;      // sum(q) x D_w
  std::array<std::vector<Edge>, kEdgeTypes> edges;

  std::size_t n_sent() const { return word_counts.size(); }
  std::size_t n_words() const { return words.rows(); }
  const std::vector<Edge>& edges_of(EdgeType t) const { return edges[static_cast<std::size_t>(t)]; }
};

/// Builds the graph over the sentences present in `track` (the first
/// track.sentences.rows() turns of `word_counts`).
inline Mghg build_mghg(const TrackEmbeddings& track, std::span<const std::uint32_t> word_counts) {
  const std::size_t n = track.sentences.rows();
  if (n == 0) throw GraphError("cannot build a graph for an empty dialogue");
  if (word_counts.size() < n) throw GraphError("fewer word counts than sentences");
  Mghg g{std::vector<std::uint32_t>(word_counts.begin(), word_counts.begin() + static_cast<std::ptrdiff_t>(n)),
         Mat32(1, track.dialogue.dim(), track.dialogue.vector()), track.sentences, track.words, {}};
  std::size_t total = 0;
  for (auto q : g.word_counts) {
    if (q == 0) throw GraphError("sentence with zero words");
    total += q;
  }
  if (total != track.words.rows()) throw GraphError("word rows != sum of word counts");

  auto& in_sent = g.edges[static_cast<std::size_t>(EdgeType::WordInSent)];
  auto& in_dial = g.edges[static_cast<std::size_t>(EdgeType::SentInDial)];
  auto& word_adj = g.edges[static_cast<std::size_t>(EdgeType::WordAdj)];
  auto& sent_adj = g.edges[static_cast<std::size_t>(EdgeType::SentAdj)];
  std::uint32_t w = 0;
  for (std::uint32_t s = 0; s < n; ++s) {
    in_dial.push_back({s, 0});
    if (s + 1 < n) sent_adj.push_back({s, s + 1});
    for (std::uint32_t j = 0; j < g.word_counts[s]; ++j, ++w) {
      in_sent.push_back({w, s});
      if (j + 1 < g.word_counts[s]) word_adj.push_back({w, w + 1});
    }
  }
  return g;
}

/// Debug dump: node counts, edge lists and FNV-1a checksums of the features.
inline nlohmann::json mghg_to_json(const Mghg& g) {
  auto checksum = [](const Mat32& m) {
    binio::ByteWriter w;
    w.f32s(m.values());
    return binio::hex64(binio::fnv1a64(w.bytes()));
  };
  nlohmann::json j;
  j["nodes"] = {{"dialogue", 1}, {"sentence", g.n_sent()}, {"word", g.n_words()}};
  j["word_counts"] = g.word_counts;
  static constexpr const char* names[] = {"word_in_sent", "sent_in_dial", "word_adj", "sent_adj"};
  for (std::size_t t = 0; t < kEdgeTypes; ++t) {
    auto& arr = j["edges"][names[t]] = nlohmann::json::array();
    for (const auto& e : g.edges[t]) arr.push_back({e.src, e.dst});
  }
  j["feature_checksums"] = {
      {"dialogue", checksum(g.dialogue)}, {"sentence", checksum(g.sentences)}, {"word", checksum(g.words)}};
  return j;
}

enum class Level : std::size_t { Dialogue = 0, Sentence, Word };

enum class Relation : std::size_t {
  WordToSent = 0,
  SentToWord,
  SentToDial,
  DialToSent,
  WordNext,  // word j -> word j+1
  WordPrev,  // word j+1 -> word j
  SentNext,
  SentPrev,
};
inline constexpr std::size_t kRelations = 8;

struct RelationInfo {
  const char* name;
  EdgeType edge;
  bool reversed;  // message flows dst -> src of the stored edge
  Level source;
  Level target;
};

inline constexpr std::array<RelationInfo, kRelations> kRelationInfo{{
    {"word_to_sent", EdgeType::WordInSent, false, Level::Word, Level::Sentence},
    {"sent_to_word", EdgeType::WordInSent, true, Level::Sentence, Level::Word},
    {"sent_to_dial", EdgeType::SentInDial, false, Level::Sentence, Level::Dialogue},
    {"dial_to_sent", EdgeType::SentInDial, true, Level::Dialogue, Level::Sentence},
    {"word_next", EdgeType::WordAdj, false, Level::Word, Level::Word},
    {"word_prev", EdgeType::WordAdj, true, Level::Word, Level::Word},
    {"sent_next", EdgeType::SentAdj, false, Level::Sentence, Level::Sentence},
    {"sent_prev", EdgeType::SentAdj, true, Level::Sentence, Level::Sentence},
}};

struct RelationWeights {
  Mat32 w_self;
  Mat32 w_neigh;
  Vec32 bias;
};

/// One RelationWeights per Relation, in enum order.
using MessagePassingLayer = std::vector<RelationWeights>;

enum class Activation { None, Relu, Tanh };

struct EncoderOptions {
  Activation post_mp_activation = Activation::None;
  SequencePooling pooling = SequencePooling::Mean;
};

/// Input widths and model width of one graph encoder.
struct EncoderShape {
  std::size_t dialogue_in = 0;
  std::size_t sentence_in = 0;
  std::size_t word_in = 0;
  std::size_t model = 256;
  std::size_t layers = 1;
};

struct MghgEncoderWeights {
  Affine proj_dialogue;
  Affine proj_sentence;
  Affine proj_word;
  std::vector<MessagePassingLayer> layers;
  BiLstm sentence_fuser;
  BiLstm word_fuser;
  Affine fusion;

  std::size_t model_dim() const { return fusion.out_dim(); }

  EncoderShape shape() const {
    return {proj_dialogue.in_dim(), proj_sentence.in_dim(), proj_word.in_dim(), model_dim(), layers.size()};
  }

  void check(const std::string& name) const {
    const std::size_t m = model_dim();
    if (m == 0 || m % 2 != 0) throw WeightsError(name + ": model width must be even and positive");
    if (layers.empty()) throw WeightsError(name + ": at least one message-passing layer is required");
    proj_dialogue.expect(m, proj_dialogue.in_dim(), name + ".proj.dialogue");
    proj_sentence.expect(m, proj_sentence.in_dim(), name + ".proj.sentence");
    proj_word.expect(m, proj_word.in_dim(), name + ".proj.word");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      if (layers[l].size() != kRelations) throw WeightsError(name + ": each layer needs one entry per relation");
      for (std::size_t r = 0; r < kRelations; ++r) {
        const auto& rw = layers[l][r];
        if (rw.w_self.rows() != m || rw.w_self.cols() != m || rw.w_neigh.rows() != m || rw.w_neigh.cols() != m ||
            rw.bias.dim() != m) {
          throw WeightsError(name + ": relation " + kRelationInfo[r].name + " must be " + std::to_string(m) + "x" +
                             std::to_string(m));
        }
      }
    }
    for (const auto* f : {&sentence_fuser, &word_fuser}) {
      if (f->input_dim() != m || f->output_dim() != m) {
        throw WeightsError(name + ": fusers must map " + std::to_string(m) + " -> " + std::to_string(m / 2) +
                           " per direction");
      }
    }
    fusion.expect(m, 3 * m, name + ".fusion");
  }

  /// Rejects weights whose shape differs from `expected`.
  void expect_shape(const EncoderShape& expected, const std::string& name) const {
    const EncoderShape s = shape();
    if (s.dialogue_in != expected.dialogue_in || s.sentence_in != expected.sentence_in ||
        s.word_in != expected.word_in || s.model != expected.model || s.layers != expected.layers) {
      throw WeightsError(name + ": encoder shape disagrees with the expected dims");
    }
  }

  static std::string layer_prefix(const std::string& prefix, std::size_t l, std::size_t r) {
    return prefix + ".mp" + std::to_string(l) + "." + kRelationInfo[r].name;
  }

  static MghgEncoderWeights load(const WeightSet& ws, const std::string& prefix) {
    MghgEncoderWeights w{Affine::load(ws, prefix + ".proj.dialogue"),
                         Affine::load(ws, prefix + ".proj.sentence"),
                         Affine::load(ws, prefix + ".proj.word"),
                         {},
                         BiLstm::load(ws, prefix + ".sent_fuser"),
                         BiLstm::load(ws, prefix + ".word_fuser"),
                         Affine::load(ws, prefix + ".fusion")};
    for (std::size_t l = 0; ws.has_prefix(prefix + ".mp" + std::to_string(l) + "."); ++l) {
      MessagePassingLayer layer;
      for (std::size_t r = 0; r < kRelations; ++r) {
        const std::string p = layer_prefix(prefix, l, r);
        layer.push_back({ws.matrix(p + ".w_self"), ws.matrix(p + ".w_neigh"), ws.vector(p + ".bias")});
      }
      w.layers.push_back(std::move(layer));
    }
    w.check(prefix);
    return w;
  }

  void store(WeightSet& ws, const std::string& prefix) const {
    proj_dialogue.store(ws, prefix + ".proj.dialogue");
    proj_sentence.store(ws, prefix + ".proj.sentence");
    proj_word.store(ws, prefix + ".proj.word");
    for (std::size_t l = 0; l < layers.size(); ++l) {
      for (std::size_t r = 0; r < kRelations; ++r) {
        const std::string p = layer_prefix(prefix, l, r);
        ws.put(p + ".w_self", layers[l][r].w_self);
        ws.put(p + ".w_neigh", layers[l][r].w_neigh);
        ws.put(p + ".bias", layers[l][r].bias);
      }
    }
    sentence_fuser.store(ws, prefix + ".sent_fuser");
    word_fuser.store(ws, prefix + ".word_fuser");
    fusion.store(ws, prefix + ".fusion");
  }

  static MghgEncoderWeights zeros(const EncoderShape& s) {
    const std::size_t m = s.model;
    MghgEncoderWeights w{Affine::zeros(m, s.dialogue_in),
                         Affine::zeros(m, s.sentence_in),
                         Affine::zeros(m, s.word_in),
                         {},
                         BiLstm::zeros(m, m / 2),
                         BiLstm::zeros(m, m / 2),
                         Affine::zeros(m, 3 * m)};
    for (std::size_t l = 0; l < s.layers; ++l) {
      MessagePassingLayer layer;
      for (std::size_t r = 0; r < kRelations; ++r) layer.push_back({Mat32::zeros(m, m), Mat32::zeros(m, m), Vec32::zeros(m)});
      w.layers.push_back(std::move(layer));
    }
    return w;
  }
};

/// Node states at the model width after message passing.
struct NodeStates {
  Mat32 dialogue;
  Mat32 sentences;
  Mat32 words;

  const Mat32& at(Level l) const {
    switch (l) {
      case Level::Dialogue: return dialogue;
      case Level::Sentence: return sentences;
      default: return words;
    }
  }
};

namespace detail {

/// CSR neighbor lists for one directed relation, sorted by (target, source)
/// so the result never depends on edge storage order.
struct Adjacency {
  std::vector<std::size_t> offsets;  // n_targets + 1
  std::vector<std::uint32_t> sources;
};

inline Adjacency adjacency(const Mghg& g, Relation r, std::size_t n_targets) {
  const RelationInfo& info = kRelationInfo[static_cast<std::size_t>(r)];
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;  // (target, source)
  for (const Edge& e : g.edges_of(info.edge)) pairs.emplace_back(info.reversed ? e.src : e.dst, info.reversed ? e.dst : e.src);
  std::sort(pairs.begin(), pairs.end());
  Adjacency a{std::vector<std::size_t>(n_targets + 1, 0), {}};
  for (const auto& [t, s] : pairs) {
    if (t >= n_targets) throw GraphError("edge target out of range");
    ++a.offsets[t + 1];
    a.sources.push_back(s);
  }
  for (std::size_t i = 0; i < n_targets; ++i) a.offsets[i + 1] += a.offsets[i];
  return a;
}

inline Mat32 project_rows(const Affine& proj, const Mat32& x) {
  require_same_dim(x.cols(), proj.in_dim(), "graph input projection");
  std::vector<float> out;
  out.reserve(x.rows() * proj.out_dim());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Vec32 y = proj.apply(x.row(r));
    out.insert(out.end(), y.values().begin(), y.values().end());
  }
  return Mat32(x.rows(), proj.out_dim(), std::move(out));
}

inline float activate(double x, Activation a) {
  switch (a) {
    case Activation::Relu: return static_cast<float>(x > 0.0 ? x : 0.0);
    case Activation::Tanh: return static_cast<float>(std::tanh(x));
    default: return static_cast<float>(x);
  }
}

}  // namespace detail

/// Input projections followed by every message-passing layer in `w`.
inline NodeStates hetero_message_pass(const Mghg& g, const MghgEncoderWeights& w, const EncoderOptions& opts = {}) {
  if (g.n_sent() == 0) throw GraphError("empty graph");
  NodeStates h{detail::project_rows(w.proj_dialogue, g.dialogue), detail::project_rows(w.proj_sentence, g.sentences),
               detail::project_rows(w.proj_word, g.words)};
  const std::array<std::size_t, 3> counts{1, g.n_sent(), g.n_words()};
  std::array<detail::Adjacency, kRelations> adj;
  for (std::size_t r = 0; r < kRelations; ++r) {
    adj[r] = detail::adjacency(g, static_cast<Relation>(r), counts[static_cast<std::size_t>(kRelationInfo[r].target)]);
  }
  const std::size_t m = w.model_dim();

  for (const auto& layer : w.layers) {
    std::array<std::vector<double>, 3> acc;
    for (std::size_t l = 0; l < 3; ++l) acc[l].assign(counts[l] * m, 0.0);
    std::vector<float> mean(m);
    std::vector<double> mean_acc(m);
    for (std::size_t r = 0; r < kRelations; ++r) {
      const RelationInfo& info = kRelationInfo[r];
      const Mat32& src = h.at(info.source);
      const Mat32& tgt = h.at(info.target);
      auto& out = acc[static_cast<std::size_t>(info.target)];
      const RelationWeights& rw = layer[r];
      for (std::size_t v = 0; v < tgt.rows(); ++v) {
        const std::size_t lo = adj[r].offsets[v], hi = adj[r].offsets[v + 1];
        if (lo == hi) continue;
        std::fill(mean_acc.begin(), mean_acc.end(), 0.0);
        for (std::size_t e = lo; e < hi; ++e) {
          auto row = src.row(adj[r].sources[e]);
          for (std::size_t c = 0; c < m; ++c) mean_acc[c] += row[c];
        }
        for (std::size_t c = 0; c < m; ++c) mean[c] = static_cast<float>(mean_acc[c] / static_cast<double>(hi - lo));
        std::span<double> o(out.data() + v * m, m);
        for (std::size_t c = 0; c < m; ++c) o[c] += rw.bias[c];
        kernel::matvec_acc(o, rw.w_self.values(), m, tgt.row(v));
        kernel::matvec_acc(o, rw.w_neigh.values(), m, mean);
      }
    }
    auto finish = [&](std::size_t l) {
      std::vector<float> v(acc[l].size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = detail::activate(acc[l][i], opts.post_mp_activation);
      return Mat32(counts[l], m, std::move(v));
    };
    h = NodeStates{finish(0), finish(1), finish(2)};
  }
  return h;
}

/// Encodes one dialogue graph to a single model-width vector.
inline Vec32 encode_dialogue(const Mghg& g, const MghgEncoderWeights& w, const EncoderOptions& opts = {}) {
  const NodeStates h = hetero_message_pass(g, w, opts);
  const Vec32 sent_summary = w.sentence_fuser.pool(w.sentence_fuser.run(h.sentences), opts.pooling);
  const Vec32 word_summary = w.word_fuser.pool(w.word_fuser.run(h.words), opts.pooling);
  const Vec32 dial = h.dialogue.row_vec(0);
  return w.fusion.apply(concat({&dial, &sent_summary, &word_summary}));
}

inline Vec32 encode_track(const TrackEmbeddings& track, std::span<const std::uint32_t> word_counts,
                          const MghgEncoderWeights& w, const EncoderOptions& opts = {}) {
  return encode_dialogue(build_mghg(track, word_counts), w, opts);
}

struct CurrentEncoding {
  Vec32 text;   // encoded text track, turns 1..N
  Vec32 audio;  // encoded audio track over the available turns
};

/// Encodes the current dialogue with the same weights used for stored
/// entries. With no audio turns available (N = 1 at inference) the audio
/// encoding is the zero vector.
inline CurrentEncoding encode_current_dialogue(const EmbeddingBundle& cd, const MghgEncoderWeights& w_text,
                                               const MghgEncoderWeights& w_audio, const EncoderOptions& opts = {}) {
  if (!cd.text) throw BundleError("current dialogue '" + cd.entry_id + "' has no text track");
  if (!cd.audio) throw BundleError("current dialogue '" + cd.entry_id + "' has no audio track");
  Vec32 text = encode_track(*cd.text, cd.word_counts, w_text, opts);
  if (cd.audio->sentences.rows() == 0) {
    log::warn("current dialogue '" + cd.entry_id + "' has no audio turns; audio encoding is the zero vector");
    return {std::move(text), Vec32::zeros(w_audio.model_dim())};
  }
  return {std::move(text), encode_track(*cd.audio, cd.word_counts, w_audio, opts)};
}

}  // namespace radka
