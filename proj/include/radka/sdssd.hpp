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

// Stored dialogue semantic-style database: build from records + bundles,
// exact cosine scan, and persistence.
//
// SDSS layout (little-endian):
//   "SDSS" | u32 version=1 | u32 sem_dim | u32 sty_dim | u32 flags (bit0 normalized,
//   bit1 seeded speaker projection) | u64 projection_seed | u32 entry_count
//   per entry: u32 id_len | id bytes | binary32[sem_dim] | binary32[sty_dim]
// Texts, speakers, audio refs and the speaker table live in the JSON sidecar
// <name>.meta.json next to <name>.sdss.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "radka/binio.hpp"
#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/meta.hpp"
#include "radka/speakers.hpp"
#include "radka/tensor.hpp"

namespace radka {

struct StoreManifest {
  std::uint32_t sem_dim = 0;
  std::uint32_t sty_dim = 0;
  std::uint32_t entry_count = 0;
  bool normalized = true;
  std::optional<std::uint64_t> projection_seed;

  friend bool operator==(const StoreManifest&, const StoreManifest&) = default;
};

struct StoreConfig {
  bool normalize = true;
};

class StoreBuilder;

/// Sealed, immutable store. Entries keep insertion order.
class SdssdStore {
 public:
  const StoreManifest& manifest() const { return manifest_; }
  std::span<const DialogueEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const SpeakerTable& speakers() const { return speakers_; }

  std::optional<std::size_t> index_of(const std::string& id) const {
    auto it = by_id_.find(id);
    if (it == by_id_.end()) return std::nullopt;
    return it->second;
  }

  const DialogueEntry& at(const std::string& id) const {
    auto idx = index_of(id);
    if (!idx) throw ConfigError("unknown entry id '" + id + "'");
    return entries_[*idx];
  }

  friend bool operator==(const SdssdStore& a, const SdssdStore& b) {
    return a.manifest_ == b.manifest_ && a.entries_ == b.entries_ && a.speakers_ == b.speakers_;
  }

 private:
  friend class StoreBuilder;
  SdssdStore(StoreManifest m, std::vector<DialogueEntry> e, SpeakerTable s)
      : manifest_(std::move(m)), entries_(std::move(e)), speakers_(std::move(s)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) by_id_.emplace(entries_[i].id, i);
  }

  StoreManifest manifest_;
  std::vector<DialogueEntry> entries_;
  SpeakerTable speakers_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

/// Append-only builder; `seal` yields the immutable store.
class StoreBuilder {
 public:
  StoreBuilder(std::uint32_t sem_dim, std::uint32_t sty_dim, SpeakerTable speakers, bool normalized)
      : speakers_(std::move(speakers)) {
    if (sem_dim == 0 || sty_dim == 0) throw DimError("store dims must be positive");
    if (speakers_.style_dim() != sty_dim) throw DimError("speaker table style dim != store style dim");
    manifest_.sem_dim = sem_dim;
    manifest_.sty_dim = sty_dim;
    manifest_.normalized = normalized;
    manifest_.projection_seed = speakers_.projection_seed();
  }

  void add(DialogueEntry e) {
    if (e.utterances.empty()) throw BuildError("entry '" + e.id + "' has no utterances");
    require_same_dim(e.semantic_vec.dim(), manifest_.sem_dim, "entry semantic vector");
    require_same_dim(e.style_vec.dim(), manifest_.sty_dim, "entry style vector");
    if (!ids_.insert(e.id).second) throw BuildError("duplicate entry id '" + e.id + "'");
    entries_.push_back(std::move(e));
  }

  SdssdStore seal() && {
    manifest_.entry_count = static_cast<std::uint32_t>(entries_.size());
    return SdssdStore(manifest_, std::move(entries_), std::move(speakers_));
  }

 private:
  StoreManifest manifest_;
  std::vector<DialogueEntry> entries_;
  SpeakerTable speakers_;
  std::set<std::string> ids_;
};

inline std::vector<std::string> speakers_of(const std::vector<Utterance>& utts, std::size_t count) {
  std::vector<std::string> s;
  for (std::size_t i = 0; i < count; ++i) s.push_back(utts[i].speaker);
  return s;
}

/// Builds the store. semantic_vec := bundle d_text; style_vec := dialogue
/// style over every audio sentence row with its speaker; both L2-normalized
/// when cfg.normalize.
inline SdssdStore build_store(std::span<const DialogueRecord> records, const BundleFile& bundles,
                              const SpeakerTable& table, const StoreConfig& cfg = {}) {
  if (!bundles.dims.has_text() || !bundles.dims.has_audio()) {
    throw BuildError("store bundles need both text and audio tracks");
  }
  std::map<std::string, const EmbeddingBundle*> by_id;
  for (const auto& b : bundles.bundles) by_id.emplace(b.entry_id, &b);

  StoreBuilder builder(bundles.dims.d_text, bundles.dims.s_audio, table, cfg.normalize);
  for (const auto& rec : records) {
    auto it = by_id.find(rec.id);
    if (it == by_id.end()) throw BuildError("missing bundle for entry '" + rec.id + "'");
    const EmbeddingBundle& b = *it->second;
    b.validate(bundles.dims);
    if (!b.audio_complete()) throw BuildError("entry '" + rec.id + "' lacks audio for some turn");
    if (rec.utterances.size() != b.n_sentences()) {
      throw BuildError("entry '" + rec.id + "': utterance count != bundle sentence count");
    }
    for (std::size_t i = 0; i < rec.utterances.size(); ++i) {
      if (rec.utterances[i].words.size() != b.word_counts[i]) {
        throw BuildError("entry '" + rec.id + "': word count mismatch at turn " + std::to_string(i));
      }
    }
    Vec32 sem = b.text->dialogue;
    Vec32 sty = dialogue_style_vec(b.audio->sentences, speakers_of(rec.utterances, rec.utterances.size()), table);
    if (cfg.normalize) {
      sem = l2_normalized(sem);
      sty = l2_normalized(sty);
    }
    builder.add(DialogueEntry{rec.id, rec.utterances, std::move(sem), std::move(sty)});
  }
  return std::move(builder).seal();
}

struct Similarity {
  double sem = 0.0;
  double sty = 0.0;

  friend bool operator==(const Similarity&, const Similarity&) = default;
};

/// Exact full scan in insertion order. Each entry's pair is computed
/// independently, so results do not depend on `threads`.
inline std::vector<Similarity> scan(const SdssdStore& store, const Vec32& query_sem, const Vec32& query_sty,
                                    unsigned threads = 1) {
  require_same_dim(query_sem.dim(), store.manifest().sem_dim, "scan semantic query");
  require_same_dim(query_sty.dim(), store.manifest().sty_dim, "scan style query");
  const auto entries = store.entries();
  std::vector<Similarity> out(entries.size());
  auto work = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      out[i] = Similarity{cosine(query_sem, entries[i].semantic_vec), cosine(query_sty, entries[i].style_vec)};
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, entries.size()))));
  if (threads == 1) {
    work(0, entries.size());
    return out;
  }
  std::vector<std::jthread> pool;
  const std::size_t chunk = (entries.size() + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(entries.size(), lo + chunk);
    if (lo < hi) pool.emplace_back(work, lo, hi);
  }
  pool.clear();
  return out;
}

namespace sdss {

inline binio::Bytes encode(const SdssdStore& store) {
  const auto& m = store.manifest();
  binio::ByteWriter w;
  w.magic("SDSS");
  w.u32(1);
  w.u32(m.sem_dim);
  w.u32(m.sty_dim);
  w.u32((m.normalized ? 1u : 0u) | (m.projection_seed ? 2u : 0u));
  w.u64(m.projection_seed.value_or(0));
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& e : store.entries()) {
    w.str(e.id);
    w.f32s(e.semantic_vec.values());
    w.f32s(e.style_vec.values());
  }
  return w.take();
}

struct DecodedVectors {
  StoreManifest manifest;
  std::vector<std::pair<std::string, std::pair<Vec32, Vec32>>> entries;
};

inline DecodedVectors decode(std::span<const std::uint8_t> bytes) {
  binio::ByteReader r(bytes);
  r.expect_magic("SDSS");
  r.expect_version(1);
  DecodedVectors d;
  const std::size_t dims_at = r.offset();
  d.manifest.sem_dim = r.u32();
  d.manifest.sty_dim = r.u32();
  if (d.manifest.sem_dim == 0 || d.manifest.sty_dim == 0) throw FormatError("zero store dims", dims_at);
  const std::size_t flags_at = r.offset();
  const std::uint32_t flags = r.u32();
  if (flags & ~3u) throw FormatError("unknown flag bits", flags_at);
  d.manifest.normalized = flags & 1u;
  const std::uint64_t seed = r.u64();
  if (flags & 2u) d.manifest.projection_seed = seed;
  d.manifest.entry_count = r.u32();
  for (std::uint32_t i = 0; i < d.manifest.entry_count; ++i) {
    std::string id = r.str();
    Vec32 sem(r.f32s(d.manifest.sem_dim));
    Vec32 sty(r.f32s(d.manifest.sty_dim));
    d.entries.emplace_back(std::move(id), std::make_pair(std::move(sem), std::move(sty)));
  }
  r.expect_end();
  return d;
}

inline meta::json sidecar(const SdssdStore& store) {
  const auto& m = store.manifest();
  meta::json j;
  j["format"] = "SDSS";
  j["version"] = 1;
  j["manifest"] = {{"sem_dim", m.sem_dim},
                   {"sty_dim", m.sty_dim},
                   {"entry_count", m.entry_count},
                   {"normalized", m.normalized}};
  if (m.projection_seed) j["manifest"]["projection_seed"] = *m.projection_seed;
  j["speaker_table"] = meta::to_json(store.speakers());
  j["entries"] = meta::json::array();
  for (const auto& e : store.entries()) j["entries"].push_back(meta::record_to_json(e.id, e.utterances));
  return j;
}

/// Joins the binary vectors with the sidecar metadata.
inline SdssdStore assemble(const DecodedVectors& d, const meta::json& side) {
  try {
    SpeakerTable table = meta::speaker_table_from_json(side.at("speaker_table"));
    const auto& entries = side.at("entries");
    if (entries.size() != d.entries.size()) throw FormatError("sidecar entry count disagrees with the store", 0);
    if (side.at("manifest").at("normalized").get<bool>() != d.manifest.normalized) {
      throw FormatError("sidecar manifest disagrees with the store", 0);
    }
    StoreBuilder b(d.manifest.sem_dim, d.manifest.sty_dim, std::move(table), d.manifest.normalized);
    for (std::size_t i = 0; i < d.entries.size(); ++i) {
      DialogueRecord rec = meta::record_from_json(entries[i]);
      if (rec.id != d.entries[i].first) throw FormatError("sidecar entry order disagrees with the store", 0);
      b.add(DialogueEntry{rec.id, std::move(rec.utterances), d.entries[i].second.first, d.entries[i].second.second});
    }
    return std::move(b).seal();
  } catch (const meta::json::exception& e) {
    throw FormatError(std::string("bad store sidecar: ") + e.what(), 0);
  }
}

}  // namespace sdss

inline std::filesystem::path sidecar_path(const std::filesystem::path& store_path) {
  std::filesystem::path p = store_path;
  p.replace_extension(".meta.json");
  return p;
}

inline void save_store(const SdssdStore& store, const std::filesystem::path& path) {
  binio::write_file(path, sdss::encode(store));
  meta::write_json(sidecar_path(path), sdss::sidecar(store));
}

inline SdssdStore load_store(const std::filesystem::path& path) {
  auto vectors = sdss::decode(binio::read_file(path));
  return sdss::assemble(vectors, meta::read_json(sidecar_path(path)));
}

}  // namespace radka
