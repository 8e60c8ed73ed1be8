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

#include <gtest/gtest.h>

#include "generators.hpp"

using namespace radka;
using namespace radka::testing;

namespace {

std::vector<Candidate> abc() {
  return {{"A", {0.9, 0.1}}, {"B", {0.5, 0.5}}, {"C", {0.1, 0.8}}};
}

std::vector<std::string> ids(const std::vector<RetrievalHit>& hits) {
  std::vector<std::string> out;
  for (const auto& h : hits) out.push_back(h.entry_id);
  return out;
}

RetrievalConfig config(Scheme s, std::size_t k, std::optional<std::size_t> pool = std::nullopt) {
  RetrievalConfig c;
  c.scheme = s;
  c.k = k;
  c.stage1_pool = pool;
  return c;
}

}  // namespace

TEST(Rank, HandExamples) {
  const auto c = abc();
  EXPECT_EQ(ids(rank_candidates(c, config(Scheme::Rs1, 1))), std::vector<std::string>{"A"});
  EXPECT_EQ(ids(rank_candidates(c, config(Scheme::Rs1, 3))), (std::vector<std::string>{"A", "B", "C"}));
  EXPECT_EQ(ids(rank_candidates(c, config(Scheme::Rs4, 1))), std::vector<std::string>{"A"});
  EXPECT_EQ(ids(rank_candidates(c, config(Scheme::Rs5, 1))), std::vector<std::string>{"C"});
  EXPECT_EQ(ids(rank_candidates(c, config(Scheme::Rs2, 1, 2))), std::vector<std::string>{"B"});
  EXPECT_EQ(ids(rank_candidates(c, config(Scheme::Rs3, 1, 2))), std::vector<std::string>{"B"});

  const auto hits = rank_candidates(c, config(Scheme::Rs1, 3));
  for (std::size_t i = 0; i < hits.size(); ++i) {
    EXPECT_EQ(hits[i].rank, i + 1);
    EXPECT_DOUBLE_EQ(hits[i].combined, hits[i].sem_sim + hits[i].sty_sim);
    EXPECT_DOUBLE_EQ(hits[i].display_similarity(), hits[i].combined / 2);
  }
}

TEST(Rank, Exclusions) {
  auto cfg = config(Scheme::Rs1, 2);
  cfg.exclude_ids = {"A"};
  EXPECT_EQ(ids(rank_candidates(abc(), cfg)), (std::vector<std::string>{"B", "C"}));
  cfg.k = 3;
  EXPECT_THROW(rank_candidates(abc(), cfg), ConfigError);
}

TEST(Rank, ConfigErrors) {
  EXPECT_THROW(rank_candidates(abc(), config(Scheme::Rs1, 0)), ConfigError);
  EXPECT_THROW(rank_candidates(abc(), config(Scheme::Rs1, 4)), ConfigError);
  EXPECT_THROW(rank_candidates(abc(), config(Scheme::Rs2, 2, 1)), ConfigError);
  auto z = config(Scheme::Rs1, 1);
  z.z = 0;
  EXPECT_THROW(rank_candidates(abc(), z), ConfigError);
  EXPECT_THROW(rank_candidates(abc(), config(Scheme::Rs7, 1)), ConfigError);
  auto gt = config(Scheme::Rs7, 1);
  gt.ground_truth = {"Q"};
  EXPECT_THROW(rank_candidates(abc(), gt), ConfigError);
  EXPECT_THROW(parse_scheme("rs8"), ConfigError);
  EXPECT_EQ(parse_scheme("rs3"), Scheme::Rs3);
  EXPECT_EQ(scheme_name(Scheme::Rs6), "rs6");
}

TEST(Rank, Rs7Verbatim) {
  auto cfg = config(Scheme::Rs7, 1);
  cfg.ground_truth = {"C", "A"};
  const auto hits = rank_candidates(abc(), cfg);
  EXPECT_EQ(ids(hits), (std::vector<std::string>{"C", "A"}));
  EXPECT_DOUBLE_EQ(hits[0].sty_sim, 0.8);
}

TEST(Rank, Rs6Reproducible) {
  Rng g(21);
  const auto c = rand_candidates(g, 200, false);
  auto cfg = config(Scheme::Rs6, 10);
  cfg.seed = 1234;
  const auto a = rank_candidates(c, cfg);
  EXPECT_EQ(a, rank_candidates(c, cfg));
  EXPECT_EQ(ids(a), oracle_rank(c, Scheme::Rs6, 10, 0, 1234));
  cfg.seed = 1235;
  EXPECT_NE(ids(a), ids(rank_candidates(c, cfg)));
  const auto all = ids(rank_candidates(c, [&] {
    auto f = cfg;
    f.k = 200;
    return f;
  }()));
  EXPECT_EQ(std::set<std::string>(all.begin(), all.end()).size(), 200u);
}

TEST(Rank, BruteForceOracle) {
  Rng g(22);
  for (int t = 0; t < 100; ++t) {
    const auto c = rand_candidates(g, 200, t % 2 == 0);
    const std::size_t k = 1 + rng::below(g, 20);
    const std::size_t pool = k + rng::below(g, 100);
    for (Scheme s : {Scheme::Rs1, Scheme::Rs2, Scheme::Rs3, Scheme::Rs4, Scheme::Rs5, Scheme::Rs6}) {
      auto cfg = config(s, k, pool);
      cfg.seed = static_cast<std::uint64_t>(t);
      ASSERT_EQ(ids(rank_candidates(c, cfg)), oracle_rank(c, s, k, pool, cfg.seed)) << scheme_name(s);
    }
  }
}

TEST(Rank, DegenerateTwoStage) {
  Rng g(23);
  for (int t = 0; t < 20; ++t) {
    const auto c = rand_candidates(g, 150, t % 2 == 1);
    const std::size_t k = 1 + rng::below(g, 30);
    EXPECT_EQ(rank_candidates(c, config(Scheme::Rs2, k, c.size())), rank_candidates(c, config(Scheme::Rs4, k)));
    EXPECT_EQ(rank_candidates(c, config(Scheme::Rs3, k, c.size())), rank_candidates(c, config(Scheme::Rs5, k)));
  }
}

TEST(Rank, SumSymmetry) {
  Rng g(24);
  for (int t = 0; t < 20; ++t) {
    auto c = rand_candidates(g, 100, t % 2 == 0);
    const auto a = ids(rank_candidates(c, config(Scheme::Rs1, 10)));
    for (auto& x : c) std::swap(x.sim.sem, x.sim.sty);
    EXPECT_EQ(ids(rank_candidates(c, config(Scheme::Rs1, 10))), a);
  }
}

TEST(Rank, CombinedNonIncreasing) {
  Rng g(25);
  const auto c = rand_candidates(g, 300, true);
  const auto hits = rank_candidates(c, config(Scheme::Rs1, 300));
  for (std::size_t i = 1; i < hits.size(); ++i) {
    ASSERT_GE(hits[i - 1].combined, hits[i].combined);
    if (hits[i - 1].combined == hits[i].combined) {
      ASSERT_LT(hits[i - 1].entry_id, hits[i].entry_id);
    }
  }
}

TEST(Retrieve, StoreScanMatchesOracle) {
  synthetic::Spec s;
  s.entries = 200;
  s.seed = 26;
  s.dims = {8, 6, 4, 5, 3, 4};
  const auto corpus = synthetic::generate(s);
  const SdssdStore store = build_store(corpus.meta.records, corpus.bundles, *corpus.meta.speaker_table);
  Rng g(27);
  const Vec32 qs = rand_vec(g, 8), qy = rand_vec(g, 5);
  const auto cands = candidates(store, scan(store, qs, qy));
  for (Scheme sc : {Scheme::Rs1, Scheme::Rs2, Scheme::Rs3, Scheme::Rs4, Scheme::Rs5, Scheme::Rs6}) {
    auto cfg = config(sc, 7);
    EXPECT_EQ(ids(retrieve(store, qs, qy, cfg, 4)), oracle_rank(cands, sc, 7, 28, 0));
  }
  const SdssdStore single = build_store(std::span(corpus.meta.records).first(1), corpus.bundles,
                                        *corpus.meta.speaker_table);
  const auto one = retrieve(single, qs, qy, config(Scheme::Rs1, 1));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].entry_id, "sd_00000");
  EXPECT_EQ(one[0].rank, 1u);
}

TEST(Recall, HandExamples) {
  const std::vector<std::vector<std::string>> gt{{"a", "x"}, {"b"}, {"c"}};
  const std::vector<std::vector<std::string>> res{{"a", "q", "r"}, {"q", "r", "b"}, {"q", "r", "s"}};
  const std::vector<std::size_t> ks{1, 3, 10};
  const auto r = recall_at(res, gt, ks);
  EXPECT_DOUBLE_EQ(r[0], 1.0 / 3);
  EXPECT_DOUBLE_EQ(r[1], 2.0 / 3);
  EXPECT_DOUBLE_EQ(r[2], 2.0 / 3);

  const std::vector<std::size_t> k2{1, 2};
  for (auto mode : {RecallMode::Hit, RecallMode::Overlap}) {
    const auto perfect = recall_at(gt, gt, std::vector<std::size_t>{1}, mode);
    EXPECT_DOUBLE_EQ(perfect[0], 1.0);
  }
  const std::vector<std::vector<std::string>> never{{"z"}, {"z"}, {"z"}};
  EXPECT_EQ(recall_at(never, gt, ks), (std::vector<double>{0, 0, 0}));
  // overlap: query 0 top-2 gt {a,x}, retrieved {a,q} -> 1/2
  const auto ov = recall_at({{"a", "q"}}, {{"a", "x"}}, k2, RecallMode::Overlap);
  EXPECT_DOUBLE_EQ(ov[0], 1.0);
  EXPECT_DOUBLE_EQ(ov[1], 0.5);

  EXPECT_THROW(recall_at({{"a"}}, {{}}, ks), EvalError);
  EXPECT_THROW(recall_at({}, {}, ks), EvalError);
  EXPECT_THROW(recall_at({{"a"}}, {{"a"}, {"b"}}, ks), EvalError);
  EXPECT_THROW(recall_at({{"a"}}, {{"a"}}, std::vector<std::size_t>{0}), EvalError);
  EXPECT_EQ(parse_recall_mode("overlap"), RecallMode::Overlap);
  EXPECT_THROW(parse_recall_mode("nope"), ConfigError);
}

TEST(Recall, HitNonDecreasingInK) {
  Rng g(28);
  std::vector<std::size_t> ks;
  for (std::size_t k = 1; k <= 12; ++k) ks.push_back(k);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t q = 1 + rng::below(g, 5);
    std::vector<std::vector<std::string>> res(q), gt(q);
    for (std::size_t i = 0; i < q; ++i) {
      for (std::size_t j = 0, n = rng::below(g, 10); j < n; ++j) res[i].push_back(std::to_string(rng::below(g, 12)));
      for (std::size_t j = 0, n = 1 + rng::below(g, 5); j < n; ++j) gt[i].push_back(std::to_string(rng::below(g, 12)));
    }
    const auto r = recall_at(res, gt, ks);
    for (std::size_t i = 1; i < r.size(); ++i) ASSERT_LE(r[i - 1], r[i]);
  }
}

TEST(GroundTruthFile, RoundTrip) {
  TempDir dir("gt");
  const std::vector<GroundTruth> gts{{"q1", {"a", "b"}}, {"q2", {"c"}}};
  write_ground_truth(dir / "gt.jsonl", gts);
  EXPECT_EQ(read_ground_truth(dir / "gt.jsonl"), gts);
  spit(dir / "bad.jsonl", "{\"query_id\": 1}\n");
  EXPECT_THROW(read_ground_truth(dir / "bad.jsonl"), FormatError);
  EXPECT_THROW(read_ground_truth(dir / "missing.jsonl"), IoError);
}

TEST(Predictor, ZeroWeightsGiveZero) {
  const auto w = AnPredictorWeights::zeros(3, 2, 4, 5, 6);
  Rng g(31);
  const Vec32 out = predict_an_style(rand_mat(g, 3, 3), rand_mat(g, 2, 2), w);
  EXPECT_EQ(out, Vec32::zeros(2));
}

TEST(Predictor, SingleTurnGivesFinalBias) {
  auto w = AnPredictorWeights::zeros(3, 2, 4, 5, 6);
  w.combiner.bias = Vec32({0.25f, -1.5f});
  Rng g(32);
  EXPECT_EQ(predict_an_style(rand_mat(g, 1, 3), Mat32(0, 2, {}), w), Vec32({0.25f, -1.5f}));
}

TEST(Predictor, MatchesScalarRecurrence) {
  Rng g(33);
  for (int t = 0; t < 200; ++t) {
    const auto w = rand_predictor(g, 1, 1, 1, 1, 1, 1.0);
    const std::size_t n = 1 + rng::below(g, 4);
    const Mat32 text = rand_mat(g, n, 1), audio = rand_mat(g, n - 1, 1);
    auto combined = ref_context(w.text, text);
    if (n > 1) combined[0] += ref_context(w.audio, audio)[0];
    const double want = ref_affine(w.combiner, combined)[0];
    ASSERT_NEAR(predict_an_style(text, audio, w)[0], want, 1e-6);
  }
}

TEST(Predictor, MatchesReferenceAtWidth) {
  Rng g(34);
  for (int t = 0; t < 50; ++t) {
    const auto w = rand_predictor(g, 5, 4, 3, 6, 2);
    const std::size_t n = 1 + rng::below(g, 6);
    const Mat32 text = rand_mat(g, n, 5), audio = rand_mat(g, n - 1, 4);
    auto combined = ref_context(w.text, text);
    if (n > 1) {
      const auto a = ref_context(w.audio, audio);
      for (std::size_t i = 0; i < a.size(); ++i) combined[i] += a[i];
    }
    const auto want = ref_affine(w.combiner, combined);
    const Vec32 got = predict_an_style(text, audio, w);
    for (std::size_t i = 0; i < want.size(); ++i) ASSERT_NEAR(got[i], want[i], 1e-5);
  }
}

TEST(Predictor, Errors) {
  const auto w = AnPredictorWeights::zeros(3, 2, 4, 5, 6);
  EXPECT_THROW(predict_an_style(Mat32(2, 3, std::vector<float>(6)), Mat32(2, 2, std::vector<float>(4)), w), DimError);
  EXPECT_THROW(predict_an_style(Mat32(1, 4, std::vector<float>(4)), Mat32(0, 2, {}), w), DimError);
  WeightSet ws;
  w.store(ws);
  Tensor bad = ws.get("an.combiner.bias");
  bad.data[0] = NAN;
  ws.put("an.combiner.bias", bad);
  EXPECT_THROW(AnPredictorWeights::load(ws), WeightsError);
}

TEST(GruCell, MatchesScalarOracle) {
  Rng g(35);
  for (int t = 0; t < 500; ++t) {
    GruCell c = GruCell::zeros(1, 1);
    c.p = {rand_mat(g, 3, 1, 2), rand_mat(g, 3, 1, 2), rand_vec(g, 3, 2), rand_vec(g, 3, 2)};
    const double x0 = rng::uniform(g, -2, 2), x1 = rng::uniform(g, -2, 2);
    // two hand-unrolled steps
    double h = 0;
    for (double x : {float(x0), float(x1)}) {
      const double r = sig(c.p.w_ih.at(0, 0) * x + c.p.b_ih[0] + c.p.w_hh.at(0, 0) * h + c.p.b_hh[0]);
      const double z = sig(c.p.w_ih.at(1, 0) * x + c.p.b_ih[1] + c.p.w_hh.at(1, 0) * h + c.p.b_hh[1]);
      const double nn = std::tanh(c.p.w_ih.at(2, 0) * x + c.p.b_ih[2] + r * (c.p.w_hh.at(2, 0) * h + c.p.b_hh[2]));
      h = (1 - z) * nn + z * h;
    }
    auto s = c.initial();
    const float xs[2] = {float(x0), float(x1)};
    c.step(std::span(xs, 1), s);
    c.step(std::span(xs + 1, 1), s);
    ASSERT_NEAR(s.h[0], h, 1e-6);
  }
}

TEST(QueryVectors, Examples) {
  const SpeakerTable zero_spk(2, 1, {{"a", Vec32({0})}, {"b", Vec32({0})}});
  EmbeddingBundle cd{"cd", {1, 1},
                     TrackEmbeddings{Vec32({1, 2, 3}), Mat32(2, 3, std::vector<float>(6, 1)),
                                     Mat32(2, 3, std::vector<float>(6, 1))},
                     TrackEmbeddings{Vec32({1, 1}), Mat32(1, 2, {0.5f, -2}), Mat32(1, 2, {1, 1})}};
  const std::vector<std::string> spk{"a", "b"};
  const CdQuery q = query_cd_vectors(cd, spk, zero_spk);
  EXPECT_EQ(q.sty, Vec32({0.5f, -2}));
  EXPECT_EQ(q.sem, Vec32({1, 2, 3}));
  EXPECT_FALSE(q.v_an.has_value());

  // a complete audio track: the last turn is still left out of the query
  cd.audio->sentences = Mat32(2, 2, {0.5f, -2, 9, 9});
  cd.audio->words = Mat32(2, 2, {1, 1, 1, 1});
  EXPECT_EQ(query_cd_vectors(cd, spk, zero_spk).sty, Vec32({0.5f, -2}));

  EmbeddingBundle three{"cd3", {1, 1, 1},
                        TrackEmbeddings{Vec32({1}), Mat32(3, 1, {1, 1, 1}), Mat32(3, 1, {1, 1, 1})},
                        TrackEmbeddings{Vec32({1, 1}), Mat32(2, 2, {3, 4, 3, 4}), Mat32(2, 2, {1, 1, 1, 1})}};
  const std::vector<std::string> spk3{"a", "b", "a"};
  EXPECT_EQ(query_cd_vectors(three, spk3, zero_spk).sty, Vec32({3, 4}));

  EXPECT_THROW(query_cd_vectors(three, spk, zero_spk), BundleError);
  EmbeddingBundle no_text = three;
  no_text.text.reset();
  EXPECT_THROW(query_cd_vectors(no_text, spk3, zero_spk), BundleError);
  QueryOptions fold;
  fold.fold_an_into_query = true;
  EXPECT_THROW(query_cd_vectors(three, spk3, zero_spk, nullptr, fold), ConfigError);
}

TEST(QueryVectors, FirstTurnIsZeroStyle) {
  const SpeakerTable t(2, 1, {{"a", Vec32({1})}});
  const EmbeddingBundle cd{"cd", {2},
                           TrackEmbeddings{Vec32({1}), Mat32(1, 1, {1}), Mat32(2, 1, {1, 1})},
                           TrackEmbeddings{Vec32({0, 0}), Mat32(0, 2, {}), Mat32(0, 2, {})}};
  const std::vector<std::string> spk{"a"};
  const auto w = AnPredictorWeights::zeros(1, 2, 2, 2, 2);
  const CdQuery q = query_cd_vectors(cd, spk, t, &w);
  EXPECT_EQ(q.sty, Vec32::zeros(2));
  ASSERT_TRUE(q.v_an.has_value());
  EXPECT_EQ(*q.v_an, Vec32::zeros(2));
}

TEST(QueryVectors, MatchesStraightLine) {
  synthetic::Spec s;
  s.entries = 1;
  s.turns_min = s.turns_max = 5;
  s.seed = 36;
  const auto c = synthetic::generate(s);
  const auto& cd = c.queries.bundles[0];
  const auto& rec = c.query_records[0];
  const auto spk = speakers_of(rec.utterances, 5);
  const SpeakerTable& t = *c.meta.speaker_table;
  const CdQuery q = query_cd_vectors(cd, spk, t);
  for (std::size_t col = 0; col < q.sty.dim(); ++col) {
    double acc = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      double p = 0;
      const Vec32& v = t.speaker(spk[r]);
      for (std::size_t k = 0; k < v.dim(); ++k) p += double(t.projection().at(col, k)) * v[k];
      acc += cd.audio->sentences.at(r, col) + p;
    }
    EXPECT_NEAR(q.sty[col], acc / 4, 1e-6);
  }
  EXPECT_EQ(q.sem, cd.text->dialogue);
}
