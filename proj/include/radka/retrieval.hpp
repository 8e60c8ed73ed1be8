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

// Multi-attribute retrieval over a sealed store: CD query vectors, the seven
// retrieval schemes, and Recall@k.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "radka/bundle.hpp"
#include "radka/errors.hpp"
#include "radka/log.hpp"
#include "radka/predictor.hpp"
#include "radka/rng.hpp"
#include "radka/sdssd.hpp"
#include "radka/speakers.hpp"

namespace radka {

enum class Scheme { Rs1 = 1, Rs2, Rs3, Rs4, Rs5, Rs6, Rs7 };

inline Scheme parse_scheme(std::string_view s) {
  static const std::map<std::string_view, Scheme> names{{"rs1", Scheme::Rs1}, {"rs2", Scheme::Rs2}, {"rs3", Scheme::Rs3},
                                                        {"rs4", Scheme::Rs4}, {"rs5", Scheme::Rs5}, {"rs6", Scheme::Rs6},
                                                        {"rs7", Scheme::Rs7}};
  auto it = names.find(s);
  if (it == names.end()) throw ConfigError("unknown retrieval scheme '" + std::string(s) + "'");
  return it->second;
}

inline std::string scheme_name(Scheme s) { return "rs" + std::to_string(static_cast<int>(s)); }

struct RetrievalConfig {
  Scheme scheme = Scheme::Rs1;
  std::size_t k = 5;   // hits returned by retrieve()
  std::size_t z = 25;  // retrieval count used at inference (aggregation)
  std::optional<std::size_t> stage1_pool;  // two-stage pool size; default 4k
  std::set<std::string> exclude_ids;
  std::uint64_t seed = 0;                 // Rs6
  std::vector<std::string> ground_truth;  // Rs7

  std::size_t pool() const { return stage1_pool.value_or(4 * k); }

  void validate() const {
    if (k == 0) throw ConfigError("k must be positive");
    if (z == 0) throw ConfigError("z must be positive");
    if (pool() < k) throw ConfigError("stage1_pool must be >= k");
  }
};

struct RetrievalHit {
  std::string entry_id;
  double sem_sim = 0.0;
  double sty_sim = 0.0;
  double combined = 0.0;  // sem + sty
  std::size_t rank = 0;   // 1-based

  /// Mean of the two similarities; ranks identically to `combined`.
  double display_similarity() const { return combined / 2.0; }

  friend bool operator==(const RetrievalHit&, const RetrievalHit&) = default;
};

struct Candidate {
  std::string id;
  Similarity sim;
};

namespace detail {

/// Keeps the best `k` of `idx` under (key desc, id asc).
template <class Key>
std::vector<std::size_t> top_k(std::vector<std::size_t> idx, std::size_t k, const std::vector<Candidate>& c, Key key) {
  k = std::min(k, idx.size());
  auto better = [&](std::size_t a, std::size_t b) {
    const double ka = key(c[a].sim), kb = key(c[b].sim);
    if (ka != kb) return ka > kb;
    return c[a].id < c[b].id;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

inline double by_sum(const Similarity& s) { return s.sem + s.sty; }
inline double by_sem(const Similarity& s) { return s.sem; }
inline double by_sty(const Similarity& s) { return s.sty; }

}  // namespace detail

/// Ranks pre-scored candidates under `cfg`. Exclusions are dropped first;
/// ties always break by ascending id.
///   Rs1: Top-K by sem + sty.            Rs4: Top-K by sem.   Rs5: Top-K by sty.
///   Rs2: Top-pool by sty, then Top-K of the pool by sem.
///   Rs3: Top-pool by sem, then Top-K of the pool by sty.
///   Rs6: K drawn uniformly without replacement from `seed`.
///   Rs7: cfg.ground_truth verbatim.
inline std::vector<RetrievalHit> rank_candidates(const std::vector<Candidate>& cands, const RetrievalConfig& cfg) {
  cfg.validate();
  auto hit = [](const Candidate& c, std::size_t rank) {
    return RetrievalHit{c.id, c.sim.sem, c.sim.sty, c.sim.sem + c.sim.sty, rank};
  };
  std::vector<RetrievalHit> out;

  if (cfg.scheme == Scheme::Rs7) {
    if (cfg.ground_truth.empty()) throw ConfigError("rs7 needs a ground-truth id list");
    std::map<std::string_view, std::size_t> by_id;
    for (std::size_t i = 0; i < cands.size(); ++i) by_id.emplace(cands[i].id, i);
    for (const auto& id : cfg.ground_truth) {
      auto it = by_id.find(id);
      if (it == by_id.end()) throw ConfigError("ground-truth id '" + id + "' is not in the store");
      out.push_back(hit(cands[it->second], out.size() + 1));
    }
    return out;
  }

  std::vector<std::size_t> avail;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (!cfg.exclude_ids.count(cands[i].id)) avail.push_back(i);
  }
  if (cfg.k > avail.size()) {
    throw ConfigError("k=" + std::to_string(cfg.k) + " exceeds the " + std::to_string(avail.size()) +
                      " available entries");
  }

  std::vector<std::size_t> picked;
  switch (cfg.scheme) {
    case Scheme::Rs1: picked = detail::top_k(avail, cfg.k, cands, detail::by_sum); break;
    case Scheme::Rs4: picked = detail::top_k(avail, cfg.k, cands, detail::by_sem); break;
    case Scheme::Rs5: picked = detail::top_k(avail, cfg.k, cands, detail::by_sty); break;
    case Scheme::Rs2:
      picked = detail::top_k(detail::top_k(avail, cfg.pool(), cands, detail::by_sty), cfg.k, cands, detail::by_sem);
      break;
    case Scheme::Rs3:
      picked = detail::top_k(detail::top_k(avail, cfg.pool(), cands, detail::by_sem), cfg.k, cands, detail::by_sty);
      break;
    case Scheme::Rs6: {
      rng::Engine g(cfg.seed);
      for (std::size_t i = 0; i < cfg.k; ++i) {
        const std::size_t j = i + rng::below(g, avail.size() - i);
        std::swap(avail[i], avail[j]);
      }
      picked.assign(avail.begin(), avail.begin() + static_cast<std::ptrdiff_t>(cfg.k));
      break;
    }
    case Scheme::Rs7: break;
  }
  for (std::size_t i : picked) out.push_back(hit(cands[i], out.size() + 1));
  return out;
}

inline std::vector<Candidate> candidates(const SdssdStore& store, const std::vector<Similarity>& sims) {
  std::vector<Candidate> c;
  c.reserve(sims.size());
  for (std::size_t i = 0; i < sims.size(); ++i) c.push_back(Candidate{store.entries()[i].id, sims[i]});
  return c;
}

inline std::vector<RetrievalHit> retrieve(const SdssdStore& store, const Vec32& query_sem, const Vec32& query_sty,
                                          const RetrievalConfig& cfg, unsigned threads = 1) {
  return rank_candidates(candidates(store, scan(store, query_sem, query_sty, threads)), cfg);
}

struct CdQuery {
  Vec32 sem;
  Vec32 sty;
  std::optional<Vec32> v_an;
};

struct QueryOptions {
  /// Treat the predicted style of turn N as one more sentence row of the style
  /// query (off: the style query uses audio turns 1..N-1 only).
  bool fold_an_into_query = false;
};

/// Builds the CD's semantic and style query vectors (and the predicted turn-N
/// style when a predictor is given). `speakers` has one id per turn.
inline CdQuery query_cd_vectors(const EmbeddingBundle& cd, std::span<const std::string> speakers,
                                const SpeakerTable& table, const AnPredictorWeights* predictor = nullptr,
                                const QueryOptions& opts = {}) {
  if (!cd.text) throw BundleError("current dialogue '" + cd.entry_id + "' has no text track");
  if (!cd.audio) throw BundleError("current dialogue '" + cd.entry_id + "' has no audio track");
  const std::size_t n = cd.n_sentences();
  if (speakers.size() != n) throw BundleError("current dialogue needs one speaker id per turn");
  const std::size_t history = std::min(cd.audio->sentences.rows(), n - 1);
  const Mat32 audio_hist = cd.audio->sentences.slice_rows(0, history);

  std::optional<Vec32> v_an;
  if (predictor) v_an = predict_an_style(cd.text->sentences, audio_hist, *predictor);

  Mat32 style_rows = audio_hist;
  std::size_t style_turns = history;
  if (opts.fold_an_into_query) {
    if (!v_an) throw ConfigError("fold_an_into_query needs a predictor");
    std::vector<float> v(audio_hist.values().begin(), audio_hist.values().end());
    v.insert(v.end(), v_an->values().begin(), v_an->values().end());
    style_rows = Mat32(history + 1, audio_hist.cols(), std::move(v));
    style_turns = history + 1;
  }
  Vec32 sty = Vec32::zeros(table.style_dim());
  if (style_turns == 0) {
    log::warn("current dialogue '" + cd.entry_id + "' has no audio history; style query is the zero vector");
  } else {
    sty = dialogue_style_vec(style_rows, speakers.subspan(0, style_turns), table);
  }
  return CdQuery{cd.text->dialogue, std::move(sty), std::move(v_an)};
}

enum class RecallMode { Hit, Overlap };

inline RecallMode parse_recall_mode(std::string_view s) {
  if (s == "hit") return RecallMode::Hit;
  if (s == "overlap") return RecallMode::Overlap;
  throw ConfigError("unknown recall mode '" + std::string(s) + "'");
}

/// Recall@k per requested k.
///   Hit:     fraction of queries whose rank-1 ground-truth id is in the retrieved top-k.
///   Overlap: mean over queries of |gt top-k ∩ retrieved top-k| / k.
inline std::vector<double> recall_at(const std::vector<std::vector<std::string>>& results,
                                     const std::vector<std::vector<std::string>>& gt, std::span<const std::size_t> ks,
                                     RecallMode mode = RecallMode::Hit) {
  if (results.size() != gt.size()) throw EvalError("results and ground truth cover different query counts");
  if (gt.empty()) throw EvalError("no queries to evaluate");
  for (const auto& g : gt) {
    if (g.empty()) throw EvalError("query with empty ground truth");
  }
  std::vector<double> out;
  for (std::size_t k : ks) {
    if (k == 0) throw EvalError("k must be positive");
    double total = 0.0;
    for (std::size_t q = 0; q < gt.size(); ++q) {
      const auto& r = results[q];
      const std::size_t rk = std::min(k, r.size());
      if (mode == RecallMode::Hit) {
        total += std::find(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(rk), gt[q].front()) !=
                         r.begin() + static_cast<std::ptrdiff_t>(rk)
                     ? 1.0
                     : 0.0;
      } else {
        const std::set<std::string> top_gt(gt[q].begin(), gt[q].begin() + static_cast<std::ptrdiff_t>(std::min(k, gt[q].size())));
        const std::set<std::string> top_r(r.begin(), r.begin() + static_cast<std::ptrdiff_t>(rk));
        std::size_t inter = 0;
        for (const auto& id : top_r) inter += top_gt.count(id);
        total += static_cast<double>(inter) / static_cast<double>(k);
      }
    }
    out.push_back(total / static_cast<double>(gt.size()));
  }
  return out;
}

struct GroundTruth {
  std::string query_id;
  std::vector<std::string> gt;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

/// JSON Lines, one {"query_id": str, "gt": [entry_id, ...]} per line.
inline std::vector<GroundTruth> read_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<GroundTruth> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back(GroundTruth{j.at("query_id").get<std::string>(), j.at("gt").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what(), 0);
    }
  }
  return out;
}

inline void write_ground_truth(const std::filesystem::path& path, const std::vector<GroundTruth>& gts) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  for (const auto& g : gts) out << nlohmann::json{{"query_id", g.query_id}, {"gt", g.gt}}.dump() << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace radka
