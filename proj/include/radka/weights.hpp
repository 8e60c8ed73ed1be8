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

// SDWT named-tensor weights file and the parameter blocks built from it.
//
// SDWT layout (little-endian):
//   "SDWT" | u32 version=1 | u32 tensor_count
//   per tensor: u32 name_len | name bytes | u32 rank | u32 dims[rank] | binary32[prod(dims)]
// Tensors are written in lexicographic name order; names are unique.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "radka/binio.hpp"
#include "radka/errors.hpp"
#include "radka/tensor.hpp"

namespace radka {

struct Tensor {
  std::vector<std::uint32_t> dims;
  std::vector<float> data;

  std::size_t numel() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

class WeightSet {
 public:
  void put(const std::string& name, Tensor t) {
    if (t.numel() != t.data.size()) throw WeightsError("tensor '" + name + "' payload does not match its dims");
    tensors_[name] = std::move(t);
  }
  void put(const std::string& name, const Mat32& m) {
    put(name, Tensor{{static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())},
                     std::vector<float>(m.values().begin(), m.values().end())});
  }
  void put(const std::string& name, const Vec32& v) {
    put(name, Tensor{{static_cast<std::uint32_t>(v.dim())}, v.vector()});
  }

  bool contains(const std::string& name) const { return tensors_.count(name) != 0; }

  /// True when any tensor name starts with `prefix`.
  bool has_prefix(const std::string& prefix) const {
    auto it = tensors_.lower_bound(prefix);
    return it != tensors_.end() && it->first.compare(0, prefix.size(), prefix) == 0;
  }

  const Tensor& get(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw WeightsError("missing tensor '" + name + "'");
    return it->second;
  }

  Mat32 matrix(const std::string& name) const {
    const Tensor& t = get(name);
    if (t.dims.size() != 2) throw WeightsError("tensor '" + name + "' is not rank 2");
    check_finite(name, t);
    return Mat32(t.dims[0], t.dims[1], t.data);
  }

  Vec32 vector(const std::string& name) const {
    const Tensor& t = get(name);
    if (t.dims.size() != 1) throw WeightsError("tensor '" + name + "' is not rank 1");
    check_finite(name, t);
    return Vec32(t.data);
  }

  const std::map<std::string, Tensor>& tensors() const { return tensors_; }

  friend bool operator==(const WeightSet&, const WeightSet&) = default;

 private:
  static void check_finite(const std::string& name, const Tensor& t) {
    for (float x : t.data) {
      if (!std::isfinite(x)) throw WeightsError("tensor '" + name + "' contains NaN/Inf");
    }
  }

  std::map<std::string, Tensor> tensors_;
};

namespace sdwt {

inline binio::Bytes encode(const WeightSet& ws) {
  binio::ByteWriter w;
  w.magic("SDWT");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(ws.tensors().size()));
  for (const auto& [name, t] : ws.tensors()) {
    w.str(name);
    w.u32(static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) w.u32(d);
    w.f32s(t.data);
  }
  return w.take();
}

/// Decodes an SDWT payload. NaN/Inf payloads are accepted here and rejected
/// when a tensor is bound into a parameter block (WeightsError).
inline WeightSet decode(std::span<const std::uint8_t> bytes) {
  binio::ByteReader r(bytes);
  r.expect_magic("SDWT");
  r.expect_version(1);
  const std::uint32_t count = r.u32();
  WeightSet ws;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t at = r.offset();
    std::string name = r.str();
    if (ws.contains(name)) throw FormatError("duplicate tensor name '" + name + "'", at);
    Tensor t;
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw FormatError("tensor rank must be 1..8", at);
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.dims.push_back(r.u32());
      if (t.dims.back() == 0) throw FormatError("zero-sized tensor dim", at);
      n *= t.dims.back();
      if (n > r.remaining()) throw FormatError("truncated payload", bytes.size());
    }
    auto raw = r.raw(n * 4);
    t.data.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::uint32_t u = 0;
      for (int b = 0; b < 4; ++b) u |= static_cast<std::uint32_t>(raw[k * 4 + b]) << (8 * b);
      t.data[k] = std::bit_cast<float>(u);
    }
    ws.put(name, std::move(t));
  }
  r.expect_end();
  return ws;
}

}  // namespace sdwt

inline void write_weights_file(const std::filesystem::path& path, const WeightSet& ws) {
  binio::write_file(path, sdwt::encode(ws));
}

inline WeightSet read_weights_file(const std::filesystem::path& path) { return sdwt::decode(binio::read_file(path)); }

/// y = W x + b.
struct Affine {
  Mat32 weight;  // out x in
  Vec32 bias;    // out

  std::size_t in_dim() const { return weight.cols(); }
  std::size_t out_dim() const { return weight.rows(); }

  Vec32 apply(std::span<const float> x) const {
    require_same_dim(weight.cols(), x.size(), "Affine");
    std::vector<float> out(weight.rows());
    for (std::size_t r = 0; r < out.size(); ++r) {
      out[r] = static_cast<float>(kernel::dot(weight.row(r), x) + static_cast<double>(bias[r]));
    }
    return Vec32(std::move(out));
  }
  Vec32 apply(const Vec32& x) const { return apply(x.values()); }

  static Affine load(const WeightSet& ws, const std::string& prefix) {
    Affine a{ws.matrix(prefix + ".weight"), ws.vector(prefix + ".bias")};
    if (a.bias.dim() != a.weight.rows()) throw WeightsError(prefix + ": bias dim != weight rows");
    return a;
  }
  void store(WeightSet& ws, const std::string& prefix) const {
    ws.put(prefix + ".weight", weight);
    ws.put(prefix + ".bias", bias);
  }

  static Affine zeros(std::size_t out, std::size_t in) { return Affine{Mat32::zeros(out, in), Vec32::zeros(out)}; }

  void expect(std::size_t out, std::size_t in, const std::string& name) const {
    if (out_dim() != out || in_dim() != in) {
      throw WeightsError(name + ": expected " + std::to_string(out) + "x" + std::to_string(in) + ", got " +
                         std::to_string(out_dim()) + "x" + std::to_string(in_dim()));
    }
  }
};

}  // namespace radka
