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

// Helpers shared by the unit tests and the acceptance runner: random data,
// independent reference implementations, temp dirs and CLI invocation.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "radka/radka.hpp"

namespace radka::testing {

using Rng = rng::Engine;

inline std::vector<float> rand_floats(Rng& g, std::size_t n, double scale = 1.0) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng::uniform(g, -scale, scale));
  return v;
}

inline Vec32 rand_vec(Rng& g, std::size_t n, double scale = 1.0) { return Vec32(rand_floats(g, n, scale)); }

inline Mat32 rand_mat(Rng& g, std::size_t r, std::size_t c, double scale = 1.0) {
  return Mat32(r, c, rand_floats(g, r * c, scale));
}

/// Any finite binary32 bit pattern, including subnormals and -0.
inline float rand_finite_bits(Rng& g) {
  for (;;) {
    const auto bits = static_cast<std::uint32_t>(g());
    if (((bits >> 23) & 0xffu) != 0xffu) return std::bit_cast<float>(bits);
  }
}

inline std::vector<float> rand_bit_floats(Rng& g, std::size_t n) {
  std::vector<float> v(n);
  for (auto& x : v) x = rand_finite_bits(g);
  return v;
}

inline bool same_bits(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint32_t>(a[i]) != std::bit_cast<std::uint32_t>(b[i])) return false;
  }
  return true;
}

inline double max_abs_diff(std::span<const float> a, std::span<const float> b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(double(a[i]) - double(b[i])));
  return m;
}

/// Fills every tensor of the given encoder shape with uniform(-scale, scale).
inline MghgEncoderWeights rand_encoder(Rng& g, const EncoderShape& shape, double scale = 0.5) {
  WeightSet zeros;
  MghgEncoderWeights::zeros(shape).store(zeros, "enc");
  WeightSet filled;
  for (const auto& [name, t] : zeros.tensors()) {
    Tensor x = t;
    for (auto& v : x.data) v = static_cast<float>(rng::uniform(g, -scale, scale));
    filled.put(name, std::move(x));
  }
  return MghgEncoderWeights::load(filled, "enc");
}

inline TrackEmbeddings rand_track(Rng& g, std::span<const std::uint32_t> q, std::size_t rows, std::size_t dd,
                                  std::size_t ds, std::size_t dw, double scale = 1.0) {
  std::size_t words = 0;
  for (std::size_t i = 0; i < rows; ++i) words += q[i];
  return TrackEmbeddings{rand_vec(g, dd, scale), rand_mat(g, rows, ds, scale), rand_mat(g, words, dw, scale)};
}

inline std::vector<std::uint32_t> rand_counts(Rng& g, std::size_t n, std::size_t qmax) {
  std::vector<std::uint32_t> q(n);
  for (auto& x : q) x = static_cast<std::uint32_t>(1 + rng::below(g, qmax));
  return q;
}

// ---- independent reference implementations --------------------------------

/// Dense-adjacency message passing: explicit per-relation adjacency matrices
/// derived from the word counts alone, row-normalized, binary64 throughout.
struct DenseStates {
  std::vector<std::vector<double>> dialogue, sentences, words;
};

inline std::vector<std::vector<double>> dense_project(const Affine& a, const Mat32& x) {
  std::vector<std::vector<double>> out(x.rows(), std::vector<double>(a.out_dim()));
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t o = 0; o < a.out_dim(); ++o) {
      double s = a.bias[o];
      for (std::size_t i = 0; i < a.in_dim(); ++i) s += double(a.weight.at(o, i)) * double(x.at(r, i));
      out[r][o] = s;
    }
  }
  return out;
}

inline DenseStates dense_message_pass(std::span<const std::uint32_t> q, const Mat32& dial, const Mat32& sent,
                                      const Mat32& words, const MghgEncoderWeights& w) {
  const std::size_t n = q.size();
  std::size_t nw = 0;
  for (auto x : q) nw += x;
  const std::size_t m = w.model_dim();

  std::vector<std::vector<std::vector<double>>> h{dense_project(w.proj_dialogue, dial),
                                                  dense_project(w.proj_sentence, sent),
                                                  dense_project(w.proj_word, words)};
  const std::array<std::size_t, 3> count{1, n, nw};
  std::vector<std::size_t> parent;
  std::vector<bool> last_in_sentence;
  for (std::size_t s = 0; s < n; ++s) {
    for (std::uint32_t j = 0; j < q[s]; ++j) {
      parent.push_back(s);
      last_in_sentence.push_back(j + 1 == q[s]);
    }
  }
  // adjacency[r][target][source] for the eight directed relations, in enum order
  auto make = [](std::size_t t, std::size_t s) { return std::vector<std::vector<double>>(t, std::vector<double>(s, 0.0)); };
  std::vector<std::vector<std::vector<double>>> A;
  std::array<std::pair<int, int>, 8> levels{};  // (source level, target level)
  // word -> sentence
  A.push_back(make(n, nw));
  levels[0] = {2, 1};
  for (std::size_t i = 0; i < nw; ++i) A[0][parent[i]][i] = 1;
  // sentence -> word
  A.push_back(make(nw, n));
  levels[1] = {1, 2};
  for (std::size_t i = 0; i < nw; ++i) A[1][i][parent[i]] = 1;
  // sentence -> dialogue
  A.push_back(make(1, n));
  levels[2] = {1, 0};
  for (std::size_t s = 0; s < n; ++s) A[2][0][s] = 1;
  // dialogue -> sentence
  A.push_back(make(n, 1));
  levels[3] = {0, 1};
  for (std::size_t s = 0; s < n; ++s) A[3][s][0] = 1;
  // word j -> word j+1 and back, same sentence only
  A.push_back(make(nw, nw));
  levels[4] = {2, 2};
  A.push_back(make(nw, nw));
  levels[5] = {2, 2};
  for (std::size_t i = 0; i + 1 < nw; ++i) {
    if (last_in_sentence[i]) continue;
    A[4][i + 1][i] = 1;
    A[5][i][i + 1] = 1;
  }
  // sentence i -> i+1 and back
  A.push_back(make(n, n));
  levels[6] = {1, 1};
  A.push_back(make(n, n));
  levels[7] = {1, 1};
  for (std::size_t s = 0; s + 1 < n; ++s) {
    A[6][s + 1][s] = 1;
    A[7][s][s + 1] = 1;
  }

  std::vector<std::vector<std::vector<double>>> cur = h;
  for (const auto& layer : w.layers) {
    std::vector<std::vector<std::vector<double>>> next;
    for (std::size_t l = 0; l < 3; ++l) next.emplace_back(count[l], std::vector<double>(m, 0.0));
    for (std::size_t r = 0; r < 8; ++r) {
      const auto [ls, lt] = levels[r];
      const auto& adj = A[r];
      for (std::size_t v = 0; v < count[lt]; ++v) {
        double deg = 0;
        for (double a : adj[v]) deg += a;
        if (deg == 0) continue;
        std::vector<double> mean(m, 0.0);
        for (std::size_t u = 0; u < count[ls]; ++u) {
          if (adj[v][u] == 0) continue;
          for (std::size_t c = 0; c < m; ++c) mean[c] += cur[ls][u][c] / deg;
        }
        for (std::size_t o = 0; o < m; ++o) {
          double s = layer[r].bias[o];
          for (std::size_t c = 0; c < m; ++c) {
            s += double(layer[r].w_self.at(o, c)) * cur[lt][v][c] + double(layer[r].w_neigh.at(o, c)) * mean[c];
          }
          next[lt][v][o] += s;
        }
      }
    }
    cur = std::move(next);
  }
  return DenseStates{cur[0], cur[1], cur[2]};
}

inline double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Straight-line LSTM over rows of `x` (binary64), PyTorch gate order.
inline std::vector<std::vector<double>> ref_lstm(const LstmCell& c, const std::vector<std::vector<double>>& x,
                                                 bool reverse) {
  const std::size_t H = c.hidden_dim(), T = x.size();
  std::vector<std::vector<double>> out(T);
  std::vector<double> h(H, 0.0), cell(H, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = reverse ? T - 1 - k : k;
    std::vector<double> gates(4 * H);
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double s = double(c.p.b_ih[r]) + double(c.p.b_hh[r]);
      for (std::size_t i = 0; i < x[t].size(); ++i) s += double(c.p.w_ih.at(r, i)) * x[t][i];
      for (std::size_t i = 0; i < H; ++i) s += double(c.p.w_hh.at(r, i)) * h[i];
      gates[r] = s;
    }
    for (std::size_t j = 0; j < H; ++j) {
      cell[j] = sig(gates[H + j]) * cell[j] + sig(gates[j]) * std::tanh(gates[2 * H + j]);
      h[j] = sig(gates[3 * H + j]) * std::tanh(cell[j]);
    }
    out[t] = h;
  }
  return out;
}

/// Straight-line GRU, PyTorch form.
inline std::vector<std::vector<double>> ref_gru(const GruCell& c, const std::vector<std::vector<double>>& x,
                                                bool reverse) {
  const std::size_t H = c.hidden_dim(), T = x.size();
  std::vector<std::vector<double>> out(T);
  std::vector<double> h(H, 0.0);
  for (std::size_t k = 0; k < T; ++k) {
    const std::size_t t = reverse ? T - 1 - k : k;
    std::vector<double> gi(3 * H), gh(3 * H);
    for (std::size_t r = 0; r < 3 * H; ++r) {
      gi[r] = c.p.b_ih[r];
      gh[r] = c.p.b_hh[r];
      for (std::size_t i = 0; i < x[t].size(); ++i) gi[r] += double(c.p.w_ih.at(r, i)) * x[t][i];
      for (std::size_t i = 0; i < H; ++i) gh[r] += double(c.p.w_hh.at(r, i)) * h[i];
    }
    std::vector<double> nh(H);
    for (std::size_t j = 0; j < H; ++j) {
      const double rg = sig(gi[j] + gh[j]);
      const double zg = sig(gi[H + j] + gh[H + j]);
      const double ng = std::tanh(gi[2 * H + j] + rg * gh[2 * H + j]);
      nh[j] = (1 - zg) * ng + zg * h[j];
    }
    h = nh;
    out[t] = h;
  }
  return out;
}

inline std::vector<std::vector<double>> to_rows(const Mat32& m) {
  std::vector<std::vector<double>> out(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[r][c] = m.at(r, c);
  }
  return out;
}

inline std::vector<double> mean_of(const std::vector<std::vector<double>>& rows) {
  std::vector<double> m(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < m.size(); ++c) m[c] += r[c] / double(rows.size());
  }
  return m;
}

inline std::vector<double> ref_affine(const Affine& a, const std::vector<double>& x) {
  std::vector<double> y(a.out_dim());
  for (std::size_t o = 0; o < y.size(); ++o) {
    y[o] = a.bias[o];
    for (std::size_t i = 0; i < x.size(); ++i) y[o] += double(a.weight.at(o, i)) * x[i];
  }
  return y;
}

/// Bidirectional mean-pooled summary of a sequence.
template <class Ref, class Cell>
std::vector<double> ref_bi_mean(Ref ref, const Cell& fwd, const Cell& bwd, const std::vector<std::vector<double>>& x) {
  const auto f = ref(fwd, x, false);
  const auto b = ref(bwd, x, true);
  std::vector<std::vector<double>> cat;
  for (std::size_t t = 0; t < x.size(); ++t) {
    auto row = f[t];
    row.insert(row.end(), b[t].begin(), b[t].end());
    cat.push_back(row);
  }
  return mean_of(cat);
}

/// Whole-encoder straight-line oracle (mean pooling, no post activation).
inline std::vector<double> ref_encode(std::span<const std::uint32_t> q, const TrackEmbeddings& t,
                                      const MghgEncoderWeights& w) {
  const Mat32 dial(1, t.dialogue.dim(), t.dialogue.vector());
  const DenseStates s = dense_message_pass(q, dial, t.sentences, t.words, w);
  auto out = s.dialogue[0];
  const auto sp = ref_bi_mean(ref_lstm, w.sentence_fuser.fwd, w.sentence_fuser.bwd, s.sentences);
  const auto wp = ref_bi_mean(ref_lstm, w.word_fuser.fwd, w.word_fuser.bwd, s.words);
  out.insert(out.end(), sp.begin(), sp.end());
  out.insert(out.end(), wp.begin(), wp.end());
  return ref_affine(w.fusion, out);
}

/// -log(pos / all) by direct enumeration of every term.
inline double ref_contrastive(const Mat32& pos, const Mat32& neg, std::size_t anchor, double tau, bool exclude_self) {
  auto cosd = [](std::span<const float> a, std::span<const float> b) {
    double ab = 0, aa = 0, bb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      ab += double(a[i]) * b[i];
      aa += double(a[i]) * a[i];
      bb += double(b[i]) * b[i];
    }
    if (std::sqrt(aa) < 1e-12 || std::sqrt(bb) < 1e-12) return 0.0;
    return ab / (std::sqrt(aa) * std::sqrt(bb));
  };
  double num = 0, den = 0;
  for (std::size_t i = 0; i < pos.rows(); ++i) {
    if (exclude_self && i == anchor) continue;
    const double e = std::exp(cosd(pos.row(anchor), pos.row(i)) / tau);
    num += e;
    den += e;
  }
  for (std::size_t i = 0; i < neg.rows(); ++i) den += std::exp(cosd(pos.row(anchor), neg.row(i)) / tau);
  return -std::log(num / den);
}

/// Brute-force ranking: stable sort of all candidates by one key.
inline std::vector<std::string> brute_rank(std::vector<Candidate> c, double (*key)(const Similarity&), std::size_t k) {
  std::stable_sort(c.begin(), c.end(), [](const Candidate& a, const Candidate& b) { return a.id < b.id; });
  std::stable_sort(c.begin(), c.end(), [key](const Candidate& a, const Candidate& b) { return key(a.sim) > key(b.sim); });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < std::min(k, c.size()); ++i) out.push_back(c[i].id);
  return out;
}

inline double key_sum(const Similarity& s) { return s.sem + s.sty; }
inline double key_sem(const Similarity& s) { return s.sem; }
inline double key_sty(const Similarity& s) { return s.sty; }

/// Independent oracle for every scheme over pre-scored candidates.
inline std::vector<std::string> oracle_rank(const std::vector<Candidate>& all, Scheme s, std::size_t k, std::size_t pool,
                                            std::uint64_t seed) {
  switch (s) {
    case Scheme::Rs1: return brute_rank(all, key_sum, k);
    case Scheme::Rs4: return brute_rank(all, key_sem, k);
    case Scheme::Rs5: return brute_rank(all, key_sty, k);
    case Scheme::Rs2:
    case Scheme::Rs3: {
      const auto first = brute_rank(all, s == Scheme::Rs2 ? key_sty : key_sem, pool);
      std::vector<Candidate> sub;
      for (const auto& id : first) {
        for (const auto& c : all) {
          if (c.id == id) sub.push_back(c);
        }
      }
      return brute_rank(sub, s == Scheme::Rs2 ? key_sem : key_sty, k);
    }
    case Scheme::Rs6: {
      // partial Fisher-Yates with unbiased bounded draws from mt19937_64
      std::vector<std::string> ids;
      for (const auto& c : all) ids.push_back(c.id);
      std::mt19937_64 g(seed);
      for (std::size_t i = 0; i < k; ++i) {
        const std::uint64_t n = ids.size() - i;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
          x = g();
        } while (x >= limit);
        std::swap(ids[i], ids[i + x % n]);
      }
      ids.resize(k);
      return ids;
    }
    case Scheme::Rs7: break;
  }
  return {};
}

// ---- files and processes ---------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("radka_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

struct RunResult {
  int code = -1;
  std::string out;
};

inline std::string shell_quote(const std::string& s) {
  std::string q = "'";
  for (char c : s) {
    if (c == '\'') q += "'\\''";
    else q += c;
  }
  return q + "'";
}

/// Runs the CLI with `args`; stdout is captured, stderr discarded.
inline RunResult run_cli(const std::vector<std::string>& args, const std::string& cli = RADKA_CLI_PATH) {
  std::string cmd = shell_quote(cli);
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " 2>/dev/null";
  RunResult r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void spit(const std::filesystem::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << s;
}

}  // namespace radka::testing
