#pragma once

#include <string>
#include <vector>

#include "nfce/param_store.hpp"

namespace nfce::net {

using ad::ParamStore;
using ad::Shape;
using ad::Tensor;

/// Shared construction context: parameters are registered under `prefix.name`
/// and initialized from one sequential stream.
template <typename T>
struct Builder {
  ParamStore<T>& store;
  Rng& rng;

  std::string join(const std::string& prefix, const std::string& name) const {
    return prefix.empty() ? name : prefix + "." + name;
  }
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  Tensor<T>& uniform(const std::string& path, Shape shape, std::size_t fan_in);
  Tensor<T>& constant(const std::string& path, Shape shape, T value);
};

template <typename T>
struct Conv {
  Tensor<T> kernel;  // [k, k, Cin/groups, Cout]
  Tensor<T> bias;    // [Cout]
  int groups = 1;

  Conv() = default;
  Conv(Builder<T>& b, const std::string& path, int k, int cin, int cout, int groups = 1);
  Tensor<T> operator()(const Tensor<T>& x) const { return ad::conv2d(x, kernel, bias, 1, groups); }
};

template <typename T>
struct LayerNorm {
  Tensor<T> gain;
  Tensor<T> bias;

  LayerNorm() = default;
  LayerNorm(Builder<T>& b, const std::string& path, int features);
  Tensor<T> operator()(const Tensor<T>& x) const { return ad::layer_norm(x, gain, bias); }
};

/// Spatial multi-head attention over a [H, W, C] map with K heads.
template <typename T>
struct SpatialAttention {
  int heads = 1;
  Conv<T> q_pw, q_dw, k_pw, k_dw, v_pw, v_dw;
  std::vector<Tensor<T>> temperature;  // one scalar per head
  Conv<T> out;

  SpatialAttention() = default;
  SpatialAttention(Builder<T>& b, const std::string& path, int features, int heads);
  Tensor<T> operator()(const Tensor<T>& x) const;

  /// Per-head attention logits M = K^T Q, each [C/K, C/K]. For inspection.
  std::vector<Tensor<T>> logits(const Tensor<T>& x) const;
  Tensor<T> queries(const Tensor<T>& x) const { return q_dw(q_pw(x)); }
  Tensor<T> keys(const Tensor<T>& x) const { return k_dw(k_pw(x)); }
  Tensor<T> values(const Tensor<T>& x) const { return v_dw(v_pw(x)); }
};

/// Gated feed-forward: out(GELU(dw(pw_a(x))) * pw_b(x)).
template <typename T>
struct GatedFeedForward {
  Conv<T> pw_a, dw, pw_b, out;

  GatedFeedForward() = default;
  GatedFeedForward(Builder<T>& b, const std::string& path, int features);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

/// x + SMA(LN(x)), then + GSFN(LN(.)).
template <typename T>
struct AttentionBlock {
  LayerNorm<T> ln1;
  SpatialAttention<T> attention;
  LayerNorm<T> ln2;
  GatedFeedForward<T> ffn;

  AttentionBlock() = default;
  AttentionBlock(Builder<T>& b, const std::string& path, int features, int heads);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

template <typename T>
struct AttentionStage {
  std::vector<AttentionBlock<T>> blocks;

  AttentionStage() = default;
  AttentionStage(Builder<T>& b, const std::string& path, int features, int heads, int count);
  Tensor<T> operator()(const Tensor<T>& x) const;
};

/// 3x3 conv, then [H, W, C] -> [H/2, W, 2C].
template <typename T>
struct AntennaSplit {
  Conv<T> conv;

  AntennaSplit() = default;
  AntennaSplit(Builder<T>& b, const std::string& path, int features);
  Tensor<T> operator()(const Tensor<T>& x) const { return ad::rows_to_features(conv(x)); }
};

/// 3x3 conv, then [H, W, C] -> [2H, W, C/2].
template <typename T>
struct AntennaConcat {
  Conv<T> conv;

  AntennaConcat() = default;
  AntennaConcat(Builder<T>& b, const std::string& path, int features);
  Tensor<T> operator()(const Tensor<T>& x) const { return ad::features_to_rows(conv(x)); }
};

}  // namespace nfce::net
