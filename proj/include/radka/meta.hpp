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

// JSON metadata files: dialogue records (speakers, texts, audio refs) and the
// speaker table. Schema:
//
//   {
//     "speaker_table": {
//       "style_dim": 24, "speaker_dim": 8,
//       "speakers": {"A": [..8 floats..], ...},
//       "projection": {"rows": 24, "cols": 8, "values": [...]},   // optional
//       "projection_seed": 17                                      // optional
//     },
//     "entries": [
//       {"id": "d0001", "utterances": [{"speaker": "A", "text": "...", "audio_ref": "a.wav"}, ...]}
//     ]
//   }

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/speakers.hpp"

namespace radka::meta {

using nlohmann::json;

inline json floats_to_json(std::span<const float> xs) {
  json a = json::array();
  for (float x : xs) a.push_back(static_cast<double>(x));
  return a;
}

inline std::vector<float> floats_from_json(const json& a) {
  std::vector<float> out;
  for (const auto& x : a) out.push_back(static_cast<float>(x.get<double>()));
  return out;
}

inline json to_json(const SpeakerTable& t) {
  json j;
  j["style_dim"] = t.style_dim();
  j["speaker_dim"] = t.speaker_dim();
  j["speakers"] = json::object();
  for (const auto& [id, v] : t.speakers()) j["speakers"][id] = floats_to_json(v.values());
  j["projection"] = {{"rows", t.projection().rows()},
                     {"cols", t.projection().cols()},
                     {"values", floats_to_json(t.projection().values())}};
  if (t.projection_seed()) j["projection_seed"] = *t.projection_seed();
  return j;
}

inline SpeakerTable speaker_table_from_json(const json& j) {
  const auto style_dim = j.at("style_dim").get<std::size_t>();
  const auto speaker_dim = j.at("speaker_dim").get<std::size_t>();
  std::map<std::string, Vec32> speakers;
  for (const auto& [id, v] : j.at("speakers").items()) speakers.emplace(id, Vec32(floats_from_json(v)));
  std::optional<Mat32> proj;
  if (j.contains("projection")) {
    const auto& p = j["projection"];
    proj = Mat32(p.at("rows").get<std::size_t>(), p.at("cols").get<std::size_t>(), floats_from_json(p.at("values")));
  }
  std::optional<std::uint64_t> seed;
  if (j.contains("projection_seed")) seed = j["projection_seed"].get<std::uint64_t>();
  return SpeakerTable(style_dim, speaker_dim, std::move(speakers), std::move(proj), seed);
}

inline json to_json(const Utterance& u) {
  json j{{"speaker", u.speaker}, {"text", u.text}};
  if (u.audio_ref) j["audio_ref"] = *u.audio_ref;
  return j;
}

inline json record_to_json(const std::string& id, const std::vector<Utterance>& utts) {
  json j{{"id", id}, {"utterances", json::array()}};
  for (const auto& u : utts) j["utterances"].push_back(to_json(u));
  return j;
}

inline DialogueRecord record_from_json(const json& j) {
  DialogueRecord r;
  r.id = j.at("id").get<std::string>();
  std::uint32_t index = 0;
  for (const auto& u : j.at("utterances")) {
    std::optional<std::string> audio;
    if (u.contains("audio_ref") && !u["audio_ref"].is_null()) audio = u["audio_ref"].get<std::string>();
    r.utterances.push_back(Utterance::make(index++, u.at("speaker").get<std::string>(), u.at("text").get<std::string>(),
                                           std::move(audio)));
  }
  return r;
}

struct MetaFile {
  std::optional<SpeakerTable> speaker_table;
  std::vector<DialogueRecord> records;
};

inline json to_json(const MetaFile& m) {
  json j;
  if (m.speaker_table) j["speaker_table"] = to_json(*m.speaker_table);
  j["entries"] = json::array();
  for (const auto& r : m.records) j["entries"].push_back(record_to_json(r.id, r.utterances));
  return j;
}

inline json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what(), 0);
  }
}

inline void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out << j.dump(1) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

inline MetaFile read_meta_file(const std::filesystem::path& path) {
  const json j = read_json(path);
  MetaFile m;
  try {
    if (j.contains("speaker_table")) m.speaker_table = speaker_table_from_json(j["speaker_table"]);
    for (const auto& e : j.at("entries")) m.records.push_back(record_from_json(e));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad metadata: " + e.what(), 0);
  }
  return m;
}

inline void write_meta_file(const std::filesystem::path& path, const MetaFile& m) { write_json(path, to_json(m)); }

}  // namespace radka::meta
