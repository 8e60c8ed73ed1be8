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

// Gated recurrent cells (LSTM, GRU) in the PyTorch parameter layout and a
// bidirectional runner. Gate pre-activations accumulate in binary64; hidden
// and cell states are rounded to binary32 after every step.
//
// LSTM gate rows: [input | forget | cell | output], each H rows.
// GRU gate rows:  [reset | update | new], each H rows;
//   n = tanh(W_in x + b_in + r * (W_hn h + b_hn)),  h' = (1 - z) * n + z * h.

#include <cmath>
#include <string>
#include <vector>

#include "radka/errors.hpp"
#include "radka/tensor.hpp"
#include "radka/weights.hpp"

namespace radka {

namespace detail {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct CellParams {
  Mat32 w_ih;
  Mat32 w_hh;
  Vec32 b_ih;
  Vec32 b_hh;

  std::size_t input_dim() const { return w_ih.cols(); }
  std::size_t hidden_dim() const { return w_hh.cols(); }

  void check(std::size_t gates, const std::string& name) const {
    const std::size_t h = hidden_dim();
    if (w_hh.rows() != gates * h || w_ih.rows() != gates * h || b_ih.dim() != gates * h || b_hh.dim() != gates * h) {
      throw WeightsError(name + ": inconsistent recurrent cell shapes");
    }
  }

  static CellParams load(const WeightSet& ws, const std::string& prefix) {
    return CellParams{ws.matrix(prefix + ".w_ih"), ws.matrix(prefix + ".w_hh"), ws.vector(prefix + ".b_ih"),
                      ws.vector(prefix + ".b_hh")};
  }
  void store(WeightSet& ws, const std::string& prefix) const {
    ws.put(prefix + ".w_ih", w_ih);
    ws.put(prefix + ".w_hh", w_hh);
    ws.put(prefix + ".b_ih", b_ih);
    ws.put(prefix + ".b_hh", b_hh);
  }
  static CellParams zeros(std::size_t gates, std::size_t input, std::size_t hidden) {
    return CellParams{Mat32::zeros(gates * hidden, input), Mat32::zeros(gates * hidden, hidden),
                      Vec32::zeros(gates * hidden), Vec32::zeros(gates * hidden)};
  }
};

}  // namespace detail

struct LstmCell {
  static constexpr std::size_t kGates = 4;
  detail::CellParams p;

  std::size_t input_dim() const { return p.input_dim(); }
  std::size_t hidden_dim() const { return p.hidden_dim(); }

  struct State {
    std::vector<float> h, c;
  };
  State initial() const { return {std::vector<float>(hidden_dim(), 0.0f), std::vector<float>(hidden_dim(), 0.0f)}; }

  void step(std::span<const float> x, State& s) const {
    const std::size_t H = hidden_dim();
    std::vector<double> g(kGates * H);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = static_cast<double>(p.b_ih[i]) + static_cast<double>(p.b_hh[i]);
    kernel::matvec_acc(g, p.w_ih.values(), p.w_ih.cols(), x);
    kernel::matvec_acc(g, p.w_hh.values(), p.w_hh.cols(), s.h);
    for (std::size_t j = 0; j < H; ++j) {
      const double i_g = detail::sigmoid(g[j]);
      const double f_g = detail::sigmoid(g[H + j]);
      const double c_g = std::tanh(g[2 * H + j]);
      const double o_g = detail::sigmoid(g[3 * H + j]);
      const float c = static_cast<float>(f_g * s.c[j] + i_g * c_g);
      s.c[j] = c;
      s.h[j] = static_cast<float>(o_g * std::tanh(static_cast<double>(c)));
    }
  }

  static LstmCell load(const WeightSet& ws, const std::string& prefix) {
    LstmCell c{detail::CellParams::load(ws, prefix)};
    c.p.check(kGates, prefix);
    return c;
  }
  void store(WeightSet& ws, const std::string& prefix) const { p.store(ws, prefix); }
  static LstmCell zeros(std::size_t input, std::size_t hidden) {
    return LstmCell{detail::CellParams::zeros(kGates, input, hidden)};
  }
};

struct GruCell {
  static constexpr std::size_t kGates = 3;
  detail::CellParams p;

  std::size_t input_dim() const { return p.input_dim(); }
  std::size_t hidden_dim() const { return p.hidden_dim(); }

  struct State {
    std::vector<float> h;
  };
  State initial() const { return {std::vector<float>(hidden_dim(), 0.0f)}; }

  void step(std::span<const float> x, State& s) const {
    const std::size_t H = hidden_dim();
    std::vector<double> gi(kGates * H), gh(kGates * H);
    for (std::size_t i = 0; i < gi.size(); ++i) {
      gi[i] = p.b_ih[i];
      gh[i] = p.b_hh[i];
    }
    kernel::matvec_acc(gi, p.w_ih.values(), p.w_ih.cols(), x);
    kernel::matvec_acc(gh, p.w_hh.values(), p.w_hh.cols(), s.h);
    for (std::size_t j = 0; j < H; ++j) {
      const double r = detail::sigmoid(gi[j] + gh[j]);
      const double z = detail::sigmoid(gi[H + j] + gh[H + j]);
      const double n = std::tanh(gi[2 * H + j] + r * gh[2 * H + j]);
      s.h[j] = static_cast<float>((1.0 - z) * n + z * static_cast<double>(s.h[j]));
    }
  }

  static GruCell load(const WeightSet& ws, const std::string& prefix) {
    GruCell c{detail::CellParams::load(ws, prefix)};
    c.p.check(kGates, prefix);
    return c;
  }
  void store(WeightSet& ws, const std::string& prefix) const { p.store(ws, prefix); }
  static GruCell zeros(std::size_t input, std::size_t hidden) {
    return GruCell{detail::CellParams::zeros(kGates, input, hidden)};
  }
};

enum class SequencePooling { Mean, Final };

template <class Cell>
struct Bidirectional {
  Cell fwd;
  Cell bwd;

  std::size_t input_dim() const { return fwd.input_dim(); }
  std::size_t hidden_dim() const { return fwd.hidden_dim(); }
  std::size_t output_dim() const { return 2 * hidden_dim(); }

  /// Per-step outputs, row t = [forward h_t ; backward h_t]. A 0-row input
  /// gives a 0-row output.
  Mat32 run(const Mat32& seq) const {
    require_same_dim(seq.cols(), input_dim(), "recurrent input");
    const std::size_t T = seq.rows();
    const std::size_t H = hidden_dim();
    std::vector<float> out(T * 2 * H);
    auto sweep = [&](const Cell& cell, bool reverse, std::size_t col) {
      auto state = cell.initial();
      for (std::size_t k = 0; k < T; ++k) {
        const std::size_t t = reverse ? T - 1 - k : k;
        cell.step(seq.row(t), state);
        std::copy(state.h.begin(), state.h.end(), out.begin() + static_cast<std::ptrdiff_t>(t * 2 * H + col));
      }
    };
    sweep(fwd, false, 0);
    sweep(bwd, true, H);
    return Mat32(T, 2 * H, std::move(out));
  }

  /// Reduces per-step outputs to one vector: temporal mean, or the final
  /// state of each direction ([forward h_{T-1} ; backward h_0]).
  Vec32 pool(const Mat32& outputs, SequencePooling mode) const {
    if (outputs.rows() == 0) throw DimError("cannot pool an empty sequence");
    if (mode == SequencePooling::Mean) return mean_rows(outputs);
    const std::size_t H = hidden_dim();
    std::vector<float> v(2 * H);
    auto last = outputs.row(outputs.rows() - 1);
    auto first = outputs.row(0);
    std::copy(last.begin(), last.begin() + static_cast<std::ptrdiff_t>(H), v.begin());
    std::copy(first.begin() + static_cast<std::ptrdiff_t>(H), first.end(), v.begin() + static_cast<std::ptrdiff_t>(H));
    return Vec32(std::move(v));
  }

  static Bidirectional load(const WeightSet& ws, const std::string& prefix) {
    Bidirectional b{Cell::load(ws, prefix + ".fwd"), Cell::load(ws, prefix + ".bwd")};
    if (b.fwd.input_dim() != b.bwd.input_dim() || b.fwd.hidden_dim() != b.bwd.hidden_dim()) {
      throw WeightsError(prefix + ": forward/backward shapes differ");
    }
    return b;
  }
  void store(WeightSet& ws, const std::string& prefix) const {
    fwd.store(ws, prefix + ".fwd");
    bwd.store(ws, prefix + ".bwd");
  }
  static Bidirectional zeros(std::size_t input, std::size_t hidden) {
    return Bidirectional{Cell::zeros(input, hidden), Cell::zeros(input, hidden)};
  }
};

using BiLstm = Bidirectional<LstmCell>;
using BiGru = Bidirectional<GruCell>;

}  // namespace radka
