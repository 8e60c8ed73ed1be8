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

// Style-vector predictor for the turn still to be synthesized. Two context
// encoders (text sentences, audio sentences) each run a bidirectional GRU,
// mean-pool the per-step [fwd; bwd] outputs over time and apply
// Linear -> ReLU -> Linear. The combiner maps the sum of both encoder outputs
// to the sentence-style dimension.

#include <string>

#include "radka/errors.hpp"
#include "radka/recurrent.hpp"
#include "radka/tensor.hpp"
#include "radka/weights.hpp"

namespace radka {

struct ContextEncoder {
  BiGru gru;
  Affine lin1;
  Affine lin2;

  std::size_t output_dim() const { return lin2.out_dim(); }

  Vec32 encode(const Mat32& seq) const {
    const Vec32 pooled = gru.pool(gru.run(seq), SequencePooling::Mean);
    Vec32 hidden = lin1.apply(pooled);
    std::vector<float> relu(hidden.values().begin(), hidden.values().end());
    for (auto& x : relu) x = x > 0.0f ? x : 0.0f;
    return lin2.apply(relu);
  }

  void check(const std::string& name) const {
    lin1.expect(lin1.out_dim(), gru.output_dim(), name + ".lin1");
    lin2.expect(lin2.out_dim(), lin1.out_dim(), name + ".lin2");
  }

  static ContextEncoder load(const WeightSet& ws, const std::string& prefix) {
    ContextEncoder e{BiGru::load(ws, prefix + ".gru"), Affine::load(ws, prefix + ".lin1"),
                     Affine::load(ws, prefix + ".lin2")};
    e.check(prefix);
    return e;
  }
  void store(WeightSet& ws, const std::string& prefix) const {
    gru.store(ws, prefix + ".gru");
    lin1.store(ws, prefix + ".lin1");
    lin2.store(ws, prefix + ".lin2");
  }
  static ContextEncoder zeros(std::size_t input, std::size_t hidden, std::size_t mid, std::size_t out) {
    return ContextEncoder{BiGru::zeros(input, hidden), Affine::zeros(mid, 2 * hidden), Affine::zeros(out, mid)};
  }
};

struct AnPredictorWeights {
  ContextEncoder text;
  ContextEncoder audio;
  Affine combiner;

  std::size_t text_dim() const { return text.gru.input_dim(); }
  std::size_t style_dim() const { return combiner.out_dim(); }

  void check() const {
    text.check("an.text");
    audio.check("an.audio");
    if (text.output_dim() != audio.output_dim()) throw WeightsError("an: encoder output dims differ");
    combiner.expect(combiner.out_dim(), text.output_dim(), "an.combiner");
    if (audio.gru.input_dim() != combiner.out_dim()) {
      throw WeightsError("an: audio encoder input dim must equal the predicted style dim");
    }
  }

  static AnPredictorWeights load(const WeightSet& ws, const std::string& prefix = "an") {
    AnPredictorWeights w{ContextEncoder::load(ws, prefix + ".text"), ContextEncoder::load(ws, prefix + ".audio"),
                         Affine::load(ws, prefix + ".combiner")};
    w.check();
    return w;
  }
  void store(WeightSet& ws, const std::string& prefix = "an") const {
    text.store(ws, prefix + ".text");
    audio.store(ws, prefix + ".audio");
    combiner.store(ws, prefix + ".combiner");
  }
  static AnPredictorWeights zeros(std::size_t text_dim, std::size_t style_dim, std::size_t hidden, std::size_t mid,
                                  std::size_t enc_out) {
    return AnPredictorWeights{ContextEncoder::zeros(text_dim, hidden, mid, enc_out),
                              ContextEncoder::zeros(style_dim, hidden, mid, enc_out),
                              Affine::zeros(style_dim, enc_out)};
  }
};

/// Predicts the style vector of turn N from text turns 1..N and audio turns
/// 1..N-1. An empty audio sequence contributes zero.
inline Vec32 predict_an_style(const Mat32& text_sents, const Mat32& audio_sents, const AnPredictorWeights& w) {
  if (text_sents.rows() == 0) throw DimError("predict_an_style needs at least one text sentence");
  if (audio_sents.rows() + 1 != text_sents.rows()) {
    throw DimError("predict_an_style expects N text rows and N-1 audio rows");
  }
  require_same_dim(text_sents.cols(), w.text_dim(), "predictor text input");
  require_same_dim(audio_sents.cols(), w.audio.gru.input_dim(), "predictor audio input");
  Vec32 combined = w.text.encode(text_sents);
  if (audio_sents.rows() > 0) combined = add(combined, w.audio.encode(audio_sents));
  return w.combiner.apply(combined);
}

}  // namespace radka
