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

// Random inputs shared by the unit tests and the acceptance runner.

#include <cmath>
#include <map>

#include "test_util.hpp"

namespace radka::testing {

/// Random pre-scored candidates; coarse quantization forces many ties.
inline std::vector<Candidate> rand_candidates(Rng& g, std::size_t n, bool ties) {
  std::vector<Candidate> c;
  for (std::size_t i = 0; i < n; ++i) {
    double a = rng::uniform(g, -1, 1), b = rng::uniform(g, -1, 1);
    if (ties) {
      a = std::round(a * 4) / 4;
      b = std::round(b * 4) / 4;
    }
    c.push_back({"e" + std::to_string(rng::below(g, 1u << 30)) + "_" + std::to_string(i), {a, b}});
  }
  return c;
}

inline AnPredictorWeights rand_predictor(Rng& g, std::size_t td, std::size_t sd, std::size_t h, std::size_t mid,
                                  std::size_t out, double scale = 0.5) {
  WeightSet z;
  AnPredictorWeights::zeros(td, sd, h, mid, out).store(z);
  WeightSet f;
  for (const auto& [name, t] : z.tensors()) {
    Tensor x = t;
    for (auto& v : x.data) v = static_cast<float>(rng::uniform(g, -scale, scale));
    f.put(name, std::move(x));
  }
  return AnPredictorWeights::load(f);
}

inline std::vector<double> ref_context(const ContextEncoder& e, const Mat32& seq) {
  auto pooled = ref_bi_mean(ref_gru, e.gru.fwd, e.gru.bwd, to_rows(seq));
  auto h = ref_affine(e.lin1, pooled);
  for (auto& x : h) x = std::max(0.0, x);
  return ref_affine(e.lin2, h);
}

inline AggregationInput rand_input(Rng& g, std::size_t k, std::size_t d) {
  return {rand_mat(g, k, d), rand_mat(g, k, d), rand_vec(g, d), rand_vec(g, d), rand_vec(g, d)};
}

inline std::vector<double> loop_rs(const AggregationInput& in) {
  const std::size_t k = in.h_pt.rows(), d = in.h_pa.cols();
  std::vector<double> logit(k);
  double mx = -INFINITY;
  for (std::size_t i = 0; i < k; ++i) {
    double s = 0;
    for (std::size_t c = 0; c < d; ++c) s += double(in.h_pt.at(i, c)) * in.h_t_cur[c];
    logit[i] = s;
    mx = std::max(mx, s);
  }
  double z = 0;
  for (double& l : logit) z += (l = std::exp(l - mx));
  std::vector<double> rs(d, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t c = 0; c < d; ++c) rs[c] += logit[i] / z * in.h_pa.at(i, c);
  }
  return rs;
}

inline TrackEmbeddings bit_track(Rng& g, const EmbeddingBundle& b, std::size_t rows, std::uint32_t dd, std::uint32_t ds,
                          std::uint32_t dw) {
  const std::size_t nw = b.words_in_first(rows);
  return TrackEmbeddings{Vec32(rand_bit_floats(g, dd)), Mat32(rows, ds, rand_bit_floats(g, rows * ds)),
                         Mat32(nw, dw, rand_bit_floats(g, nw * dw))};
}

inline BundleFile rand_bundle_file(Rng& g) {
  BundleFile f;
  const int tracks = static_cast<int>(rng::below(g, 3));  // 0 both, 1 text only, 2 audio only
  auto dim = [&] { return static_cast<std::uint32_t>(1 + rng::below(g, 6)); };
  if (tracks != 2) {
    f.dims.d_text = dim();
    f.dims.s_text = dim();
    f.dims.w_text = dim();
    if (rng::below(g, 2)) f.dims.sem = f.dims.d_text;
  }
  if (tracks != 1) {
    f.dims.d_audio = dim();
    f.dims.s_audio = dim();
    f.dims.w_audio = dim();
    if (rng::below(g, 2)) f.dims.sty = f.dims.s_audio;
  }
  const std::size_t count = rng::below(g, 4);
  for (std::size_t i = 0; i < count; ++i) {
    EmbeddingBundle b;
    b.entry_id = "e" + std::to_string(i) + std::string(rng::below(g, 3), 'x');
    b.word_counts = rand_counts(g, 1 + rng::below(g, 10), 4);
    if (f.dims.has_text()) b.text = bit_track(g, b, b.n_sentences(), f.dims.d_text, f.dims.s_text, f.dims.w_text);
    if (f.dims.has_audio()) {
      const std::size_t rows = b.n_sentences() - rng::below(g, 2);
      b.audio = bit_track(g, b, rows, f.dims.d_audio, f.dims.s_audio, f.dims.w_audio);
    }
    f.bundles.push_back(std::move(b));
  }
  return f;
}

inline bool same_track_bits(const TrackEmbeddings& a, const TrackEmbeddings& b) {
  return same_bits(a.dialogue.values(), b.dialogue.values()) && a.sentences.rows() == b.sentences.rows() &&
         same_bits(a.sentences.values(), b.sentences.values()) && same_bits(a.words.values(), b.words.values());
}

inline bool same_file_bits(const BundleFile& a, const BundleFile& b) {
  if (!(a.dims == b.dims) || a.bundles.size() != b.bundles.size()) return false;
  for (std::size_t i = 0; i < a.bundles.size(); ++i) {
    const auto &x = a.bundles[i], &y = b.bundles[i];
    if (x.entry_id != y.entry_id || x.word_counts != y.word_counts) return false;
    if (x.text.has_value() != y.text.has_value() || x.audio.has_value() != y.audio.has_value()) return false;
    if (x.text && !same_track_bits(*x.text, *y.text)) return false;
    if (x.audio && !same_track_bits(*x.audio, *y.audio)) return false;
  }
  return true;
}

inline WeightSet rand_weight_set(Rng& g) {
  WeightSet ws;
  const std::size_t n = rng::below(g, 5);
  for (std::size_t i = 0; i < n; ++i) {
    Tensor t;
    const std::size_t rank = 1 + rng::below(g, 3);
    for (std::size_t k = 0; k < rank; ++k) t.dims.push_back(static_cast<std::uint32_t>(1 + rng::below(g, 4)));
    t.data = rand_bit_floats(g, t.numel());
    ws.put("t" + std::to_string(i) + ".w", std::move(t));
  }
  return ws;
}

inline SdssdStore rand_store(Rng& g, std::size_t entries, std::size_t sem, std::size_t sty, bool normalized) {
  std::map<std::string, Vec32> spk{{"a", Vec32(rand_floats(g, 3))}, {"b", Vec32(rand_floats(g, 3))}};
  SpeakerTable table = rng::below(g, 2) ? SpeakerTable(sty, 3, spk)
                                        : SpeakerTable::with_seeded_projection(sty, 3, spk, g());
  StoreBuilder b(static_cast<std::uint32_t>(sem), static_cast<std::uint32_t>(sty), table, normalized);
  for (std::size_t i = 0; i < entries; ++i) {
    std::vector<Utterance> u{Utterance::make(0, "a", "hello there"), Utterance::make(1, "b", "hi", "x.wav")};
    b.add(DialogueEntry{"id" + std::to_string(i), u, Vec32(rand_bit_floats(g, sem)), Vec32(rand_bit_floats(g, sty))});
  }
  return std::move(b).seal();
}

}  // namespace radka::testing
