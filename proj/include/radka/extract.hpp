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

// Boundary to the feature extractors. Pretrained models sit behind the
// embedder and aligner interfaces; everything here is model-free assembly of
// their outputs into bundles and speaker tables. The model-backed
// implementations live outside this library.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/log.hpp"
#include "radka/speakers.hpp"
#include "radka/tensor.hpp"

namespace radka::extract {

struct ModelIds {
  std::string summarizer;
  std::string sentence_embedder;
  std::string emotion_embedder;
  std::string speech_embedder;
  std::string speaker_embedder;
  std::string word_embedder;
};

struct ExtractorConfig {
  ModelIds models;
  std::string aligner_dir;
  std::string device = "cpu";
  /// Expected output dims; every produced row is checked against them.
  BundleDims dims;
  /// Which emotion-model representation is the sentence style vector.
  std::string pooling = "pooled";
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual std::string summarize(const std::string& prompt) = 0;
  virtual Vec32 sentence(const std::string& text) = 0;
  /// One row per word, in order.
  virtual Mat32 words(std::span<const std::string> words) = 0;
};

class SpeechEmbedder {
 public:
  virtual ~SpeechEmbedder() = default;
  virtual Vec32 emotion(const std::string& audio_ref) = 0;
  /// Frame features, one row per frame.
  virtual Mat32 frames(const std::string& audio_ref) = 0;
  virtual double frames_per_second() const = 0;
  virtual Vec32 speaker(const std::string& audio_ref) = 0;
};

struct WordSpan {
  double start = 0.0;  // seconds
  double end = 0.0;
};

class Aligner {
 public:
  virtual ~Aligner() = default;
  /// One entry per word; nullopt where the aligner found no span.
  virtual std::vector<std::optional<WordSpan>> align(const std::string& audio_ref,
                                                     std::span<const std::string> words) = 0;
};

/// Summarizer input: one "Speaker: text" line per turn.
inline std::string summary_prompt(const DialogueRecord& rec) {
  std::string out;
  for (const auto& u : rec.utterances) {
    if (!out.empty()) out += '\n';
    out += u.speaker + ": " + u.text;
  }
  return out;
}

/// Splits `n_frames` into `n_words` contiguous spans of near-equal length.
inline std::vector<std::pair<std::size_t, std::size_t>> uniform_frame_spans(std::size_t n_frames,
                                                                            std::size_t n_words) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < n_words; ++i) {
    std::size_t lo = i * n_frames / n_words, hi = (i + 1) * n_frames / n_words;
    if (hi <= lo) hi = std::min(lo + 1, n_frames);
    if (hi <= lo) lo = hi - 1;
    out.emplace_back(lo, hi);
  }
  return out;
}

/// Mean frame feature per word. A word with no span, or a span that covers
/// no frame, sends the whole utterance to the uniform split.
inline Mat32 pool_word_frames(const Mat32& frames, double fps, std::span<const std::optional<WordSpan>> spans) {
  const std::size_t n = spans.size();
  if (n == 0) throw BundleError("utterance has no words");
  if (frames.rows() == 0) throw DimError("utterance has no frames");
  if (!(fps > 0.0)) throw ConfigError("frame rate must be positive");
  std::vector<std::pair<std::size_t, std::size_t>> ranges;
  bool gap = false;
  for (const auto& s : spans) {
    if (!s || !(s->end > s->start)) {
      gap = true;
      break;
    }
    const auto lo = static_cast<std::size_t>(std::max(0.0, std::floor(s->start * fps)));
    const auto hi = std::min(frames.rows(), static_cast<std::size_t>(std::ceil(s->end * fps)));
    if (lo >= hi) {
      gap = true;
      break;
    }
    ranges.emplace_back(lo, hi);
  }
  if (gap) {
    log::warn("aligner gap; splitting the utterance's frames uniformly over its words");
    ranges = uniform_frame_spans(frames.rows(), n);
  }
  std::vector<float> out;
  out.reserve(n * frames.cols());
  for (const auto& [lo, hi] : ranges) {
    std::vector<double> acc(frames.cols(), 0.0);
    for (std::size_t r = lo; r < hi; ++r) {
      for (std::size_t c = 0; c < frames.cols(); ++c) acc[c] += frames.at(r, c);
    }
    for (double v : acc) out.push_back(static_cast<float>(v / static_cast<double>(hi - lo)));
  }
  return Mat32(n, frames.cols(), std::move(out));
}

namespace detail {

inline void expect_dim(std::size_t got, std::uint32_t want, const std::string& what) {
  if (got != want) {
    throw DimError(what + " has dim " + std::to_string(got) + ", config records " + std::to_string(want));
  }
}

inline Mat32 stack(const std::vector<Vec32>& rows, std::size_t cols) {
  if (rows.empty()) return Mat32(0, cols, {});
  return Mat32::from_rows(rows);
}

inline Mat32 stack_mats(const std::vector<Mat32>& parts, std::size_t cols) {
  std::vector<float> v;
  std::size_t rows = 0;
  for (const auto& p : parts) {
    v.insert(v.end(), p.values().begin(), p.values().end());
    rows += p.rows();
  }
  return Mat32(rows, cols, std::move(v));
}

}  // namespace detail

/// Builds one bundle. Turns without an audio_ref get no audio row; only the
/// last turn may lack audio.
inline EmbeddingBundle extract_dialogue_bundle(const DialogueRecord& rec, TextEmbedder& text, SpeechEmbedder& speech,
                                               Aligner& aligner, const ExtractorConfig& cfg) {
  const BundleDims& d = cfg.dims;
  d.validate();
  if (!d.has_text() || !d.has_audio()) throw ConfigError("extraction produces both tracks; set every dim");
  if (rec.utterances.empty()) throw BundleError("dialogue '" + rec.id + "' has no turns");

  EmbeddingBundle b;
  b.entry_id = rec.id;
  std::vector<Vec32> s_text, s_audio;
  std::vector<Mat32> w_text, w_audio;
  for (std::size_t i = 0; i < rec.utterances.size(); ++i) {
    const Utterance& u = rec.utterances[i];
    const auto words = tokenize_words(u.text);
    if (words.empty()) throw BundleError("dialogue '" + rec.id + "' turn " + std::to_string(i) + " has no words");
    b.word_counts.push_back(static_cast<std::uint32_t>(words.size()));

    s_text.push_back(text.sentence(u.text));
    detail::expect_dim(s_text.back().dim(), d.s_text, "sentence embedding");
    w_text.push_back(text.words(words));
    detail::expect_dim(w_text.back().cols(), d.w_text, "word embedding");
    if (w_text.back().rows() != words.size()) throw DimError("word embedder must return one row per word");

    if (!u.audio_ref) {
      if (i + 1 != rec.utterances.size()) {
        throw BundleError("dialogue '" + rec.id + "': only the last turn may lack audio");
      }
      continue;
    }
    s_audio.push_back(speech.emotion(*u.audio_ref));
    detail::expect_dim(s_audio.back().dim(), d.s_audio, "emotion embedding");
    const Mat32 frames = speech.frames(*u.audio_ref);
    detail::expect_dim(frames.cols(), d.w_audio, "frame embedding");
    const auto spans = aligner.align(*u.audio_ref, words);
    if (spans.size() != words.size()) throw AlignError("aligner must return one entry per word");
    w_audio.push_back(pool_word_frames(frames, speech.frames_per_second(), spans));
  }

  Vec32 d_text = text.sentence(text.summarize(summary_prompt(rec)));
  detail::expect_dim(d_text.dim(), d.d_text, "summary embedding");
  b.text = TrackEmbeddings{std::move(d_text), detail::stack(s_text, d.s_text), detail::stack_mats(w_text, d.w_text)};

  const Mat32 sa = detail::stack(s_audio, d.s_audio);
  detail::expect_dim(d.s_audio, d.d_audio, "dialogue audio node (mean of sentence rows)");
  Vec32 d_audio = sa.rows() ? mean_rows(sa) : Vec32::zeros(d.d_audio);
  b.audio = TrackEmbeddings{std::move(d_audio), sa, detail::stack_mats(w_audio, d.w_audio)};
  b.validate(d);
  return b;
}

/// One vector per speaker, the mean over that speaker's recordings; the
/// projection is identity with zero padding.
inline SpeakerTable extract_speaker_table(const std::map<std::string, std::vector<std::string>>& audio_by_speaker,
                                          SpeechEmbedder& speech, std::size_t style_dim) {
  if (audio_by_speaker.empty()) throw SpeakerError("no speakers given");
  std::map<std::string, Vec32> vecs;
  std::size_t dim = 0;
  for (const auto& [id, refs] : audio_by_speaker) {
    if (refs.empty()) throw SpeakerError("speaker '" + id + "' has no audio");
    std::vector<Vec32> rows;
    for (const auto& r : refs) rows.push_back(speech.speaker(r));
    const Vec32 mean = mean_rows(Mat32::from_rows(rows));
    if (dim == 0) dim = mean.dim();
    if (mean.dim() != dim) throw DimError("speaker '" + id + "' has a different embedding dim");
    vecs.emplace(id, mean);
  }
  return SpeakerTable(style_dim, dim, std::move(vecs));
}

}  // namespace radka::extract
