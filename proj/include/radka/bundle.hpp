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

// Dialogue-level domain types and the SDEB embedding-bundle file format.
//
// SDEB layout (little-endian):
//   "SDEB" | u32 version=1 | u32 dims[8] (sem, sty, dt, st, wt, da, sa, wa; 0 = absent)
//   | u32 bundle_count
//   per bundle:
//     u32 id_len | id bytes | u32 N | u32 word_counts[N]
//     [audio track present] presence bitmap, ceil(N/8) bytes, bit i = audio row i present (LSB first)
//     [text]  d_text[dt] | s_text[N x st] | w_text[sum q x wt]
//     [audio] d_audio[da] | s_audio[present x sa] | w_audio[sum q(present) x wa]
// Only the last audio row may be absent (the turn still to be synthesized).

#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "radka/binio.hpp"
#include "radka/errors.hpp"
#include "radka/tensor.hpp"

namespace radka {

/// Splits on ASCII whitespace, dropping empty tokens.
inline std::vector<std::string> tokenize_words(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream in(text);
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

struct Utterance {
  std::uint32_t index = 0;
  std::string speaker;
  std::string text;
  std::vector<std::string> words;
  std::optional<std::string> audio_ref;

  static Utterance make(std::uint32_t index, std::string speaker, std::string text,
                        std::optional<std::string> audio_ref = std::nullopt) {
    Utterance u{index, std::move(speaker), std::move(text), {}, std::move(audio_ref)};
    u.words = tokenize_words(u.text);
    return u;
  }

  friend bool operator==(const Utterance&, const Utterance&) = default;
};

/// Text/speaker metadata of a dialogue, before vectors are attached.
struct DialogueRecord {
  std::string id;
  std::vector<Utterance> utterances;

  friend bool operator==(const DialogueRecord&, const DialogueRecord&) = default;
};

/// One stored dialogue with its dialogue-level semantic and style vectors.
struct DialogueEntry {
  std::string id;
  std::vector<Utterance> utterances;
  Vec32 semantic_vec;
  Vec32 style_vec;

  friend bool operator==(const DialogueEntry&, const DialogueEntry&) = default;
};

struct BundleDims {
  std::uint32_t sem = 0, sty = 0;
  std::uint32_t d_text = 0, s_text = 0, w_text = 0;
  std::uint32_t d_audio = 0, s_audio = 0, w_audio = 0;

  bool has_text() const { return d_text != 0; }
  bool has_audio() const { return d_audio != 0; }

  void validate() const {
    auto all_or_none = [](std::uint32_t a, std::uint32_t b, std::uint32_t c) {
      return (a == 0) == (b == 0) && (b == 0) == (c == 0);
    };
    if (!all_or_none(d_text, s_text, w_text)) throw DimError("text track dims must be all zero or all non-zero");
    if (!all_or_none(d_audio, s_audio, w_audio)) throw DimError("audio track dims must be all zero or all non-zero");
    if (sem != 0 && sem != d_text) throw DimError("semantic dim must equal the dialogue text dim");
    if (sty != 0 && sty != s_audio) throw DimError("style dim must equal the sentence audio dim");
  }

  friend bool operator==(const BundleDims&, const BundleDims&) = default;
};

/// Node features of one modality at the three granularities.
struct TrackEmbeddings {
  Vec32 dialogue;   // dialogue-level node
  Mat32 sentences;  // one row per present sentence, turn order
  Mat32 words;      // word rows of the present sentences, reading order

  friend bool operator==(const TrackEmbeddings&, const TrackEmbeddings&) = default;
};

struct EmbeddingBundle {
  std::string entry_id;
  std::vector<std::uint32_t> word_counts;
  std::optional<TrackEmbeddings> text;
  std::optional<TrackEmbeddings> audio;

  std::size_t n_sentences() const { return word_counts.size(); }

  bool audio_complete() const { return audio && audio->sentences.rows() == n_sentences(); }

  /// Word count over the first `sentences` turns.
  std::size_t words_in_first(std::size_t sentences) const {
    return std::accumulate(word_counts.begin(), word_counts.begin() + static_cast<std::ptrdiff_t>(sentences),
                           std::size_t{0});
  }

  void validate(const BundleDims& dims) const {
    const std::string where = "bundle '" + entry_id + "': ";
    if (word_counts.empty()) throw BundleError(where + "no sentences");
    for (auto q : word_counts) {
      if (q == 0) throw BundleError(where + "sentence with zero words");
    }
    auto check_track = [&](const TrackEmbeddings& t, std::uint32_t dd, std::uint32_t ds, std::uint32_t dw,
                           const char* name) {
      const std::string w = where + name + " track ";
      if (t.dialogue.dim() != dd || t.sentences.cols() != ds || t.words.cols() != dw) {
        throw DimError(w + "dims disagree with the file dims");
      }
      if (t.words.rows() != words_in_first(t.sentences.rows())) throw DimError(w + "word rows != sum of word counts");
    };
    if (dims.has_text() != text.has_value()) throw BundleError(where + "text track presence disagrees with dims");
    if (dims.has_audio() != audio.has_value()) throw BundleError(where + "audio track presence disagrees with dims");
    if (text) {
      check_track(*text, dims.d_text, dims.s_text, dims.w_text, "text");
      if (text->sentences.rows() != n_sentences()) throw BundleError(where + "text track must cover every turn");
    }
    if (audio) {
      check_track(*audio, dims.d_audio, dims.s_audio, dims.w_audio, "audio");
      const std::size_t r = audio->sentences.rows();
      if (r != n_sentences() && r + 1 != n_sentences()) {
        throw BundleError(where + "only the last audio turn may be absent");
      }
    }
  }

  friend bool operator==(const EmbeddingBundle&, const EmbeddingBundle&) = default;
};

struct BundleFile {
  BundleDims dims;
  std::vector<EmbeddingBundle> bundles;

  friend bool operator==(const BundleFile&, const BundleFile&) = default;
};

namespace sdeb {

inline constexpr std::uint32_t kVersion = 1;

inline void write_dims(binio::ByteWriter& w, const BundleDims& d) {
  for (auto v : {d.sem, d.sty, d.d_text, d.s_text, d.w_text, d.d_audio, d.s_audio, d.w_audio}) w.u32(v);
}

inline BundleDims read_dims(binio::ByteReader& r) {
  const std::size_t at = r.offset();
  BundleDims d;
  d.sem = r.u32();
  d.sty = r.u32();
  d.d_text = r.u32();
  d.s_text = r.u32();
  d.w_text = r.u32();
  d.d_audio = r.u32();
  d.s_audio = r.u32();
  d.w_audio = r.u32();
  try {
    d.validate();
  } catch (const DimError& e) {
    throw FormatError(std::string("dim inconsistency: ") + e.what(), at);
  }
  return d;
}

inline binio::Bytes encode(const BundleFile& file) {
  file.dims.validate();
  binio::ByteWriter w;
  w.magic("SDEB");
  w.u32(kVersion);
  write_dims(w, file.dims);
  w.u32(static_cast<std::uint32_t>(file.bundles.size()));
  for (const auto& b : file.bundles) {
    b.validate(file.dims);
    w.str(b.entry_id);
    w.u32(static_cast<std::uint32_t>(b.n_sentences()));
    for (auto q : b.word_counts) w.u32(q);
    if (file.dims.has_audio()) {
      const std::size_t present = b.audio->sentences.rows();
      std::vector<std::uint8_t> bitmap((b.n_sentences() + 7) / 8, 0);
      for (std::size_t i = 0; i < present; ++i) bitmap[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
      w.raw(bitmap);
    }
    for (const auto* t : {&b.text, &b.audio}) {
      if (!t->has_value()) continue;
      w.f32s((*t)->dialogue.values());
      w.f32s((*t)->sentences.values());
      w.f32s((*t)->words.values());
    }
  }
  return w.take();
}

inline BundleFile decode(std::span<const std::uint8_t> bytes) {
  binio::ByteReader r(bytes);
  r.expect_magic("SDEB");
  r.expect_version(kVersion);
  BundleFile file;
  file.dims = read_dims(r);
  const std::uint32_t count = r.u32();
  for (std::uint32_t b = 0; b < count; ++b) {
    const std::size_t record_start = r.offset();
    EmbeddingBundle eb;
    eb.entry_id = r.str();
    const std::uint32_t n = r.u32();
    if (n == 0) throw FormatError("bundle with zero sentences", record_start);
    if (n > r.remaining() / 4) throw FormatError("truncated payload", bytes.size());
    eb.word_counts.resize(n);
    for (auto& q : eb.word_counts) {
      const std::size_t at = r.offset();
      q = r.u32();
      if (q == 0) throw FormatError("sentence with zero words", at);
    }
    std::size_t audio_rows = 0;
    if (file.dims.has_audio()) {
      const std::size_t at = r.offset();
      auto bitmap = r.raw((n + 7) / 8);
      auto bit = [&](std::size_t i) { return (bitmap[i / 8] >> (i % 8)) & 1u; };
      while (audio_rows < n && bit(audio_rows)) ++audio_rows;
      for (std::size_t i = audio_rows; i < bitmap.size() * 8; ++i) {
        if (bit(i)) throw FormatError("presence bitmap: absent rows must be a suffix", at);
      }
      if (audio_rows + 1 < n) throw FormatError("presence bitmap: only the last audio row may be absent", at);
    }
    auto read_track = [&](std::uint32_t dd, std::uint32_t ds, std::uint32_t dw, std::size_t rows) {
      auto d = r.f32s(dd);
      auto s = r.f32s(rows * ds);
      const std::size_t nw = eb.words_in_first(rows);
      auto wv = r.f32s(nw * dw);
      return TrackEmbeddings{Vec32(std::move(d)), Mat32(rows, ds, std::move(s)), Mat32(nw, dw, std::move(wv))};
    };
    if (file.dims.has_text()) eb.text = read_track(file.dims.d_text, file.dims.s_text, file.dims.w_text, n);
    if (file.dims.has_audio()) {
      eb.audio = read_track(file.dims.d_audio, file.dims.s_audio, file.dims.w_audio, audio_rows);
    }
    file.bundles.push_back(std::move(eb));
  }
  r.expect_end();
  return file;
}

}  // namespace sdeb

inline void write_bundle_file(const std::filesystem::path& path, const BundleFile& file) {
  binio::write_file(path, sdeb::encode(file));
}

inline BundleFile read_bundle_file(const std::filesystem::path& path) { return sdeb::decode(binio::read_file(path)); }

/// SDFV: "SDFV" | u32 version=1 | u32 dim | binary32[dim]. Single exported vector.
namespace sdfv {

inline binio::Bytes encode(const Vec32& v) {
  binio::ByteWriter w;
  w.magic("SDFV");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(v.dim()));
  w.f32s(v.values());
  return w.take();
}

inline Vec32 decode(std::span<const std::uint8_t> bytes) {
  binio::ByteReader r(bytes);
  r.expect_magic("SDFV");
  r.expect_version(1);
  const std::size_t at = r.offset();
  const std::uint32_t dim = r.u32();
  if (dim == 0) throw FormatError("zero-dimensional vector", at);
  auto v = r.f32s(dim);
  r.expect_end();
  return Vec32(std::move(v));
}

}  // namespace sdfv

inline void write_vector_file(const std::filesystem::path& path, const Vec32& v) {
  binio::write_file(path, sdfv::encode(v));
}

inline Vec32 read_vector_file(const std::filesystem::path& path) { return sdfv::decode(binio::read_file(path)); }

}  // namespace radka
