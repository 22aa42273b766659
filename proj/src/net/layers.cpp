#include <cmath>
#include <stdexcept>

#include "nfce/layers.hpp"

namespace nfce::net {

template <typename T>
Tensor<T>& Builder<T>::uniform(const std::string& path, Shape shape, std::size_t fan_in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  std::vector<T> values(ad::shape_numel(shape));
  for (auto& v : values) v = static_cast<T>(u(rng));
  return store.add(path, Tensor<T>::from(std::move(shape), std::move(values)));
}

template <typename T>
Tensor<T>& Builder<T>::constant(const std::string& path, Shape shape, T value) {
  return store.add(path, Tensor<T>::full(std::move(shape), value));
}

template <typename T>
Conv<T>::Conv(Builder<T>& b, const std::string& path, int k, int cin, int cout, int groups_) : groups(groups_) {
  if (k < 1 || cin < 1 || cout < 1 || groups < 1 || cin % groups || cout % groups)
    throw std::invalid_argument(path + ": invalid convolution {" + std::to_string(k) + ", " + std::to_string(cin) +
                                " -> " + std::to_string(cout) + ", groups " + std::to_string(groups) + "}");
  const auto cig = static_cast<std::size_t>(cin / groups);
  const auto kk = static_cast<std::size_t>(k);
  kernel = b.uniform(b.join(path, "kernel"), {kk, kk, cig, static_cast<std::size_t>(cout)}, kk * kk * cig);
  bias = b.constant(b.join(path, "bias"), {static_cast<std::size_t>(cout)}, T(0));
}

template <typename T>
LayerNorm<T>::LayerNorm(Builder<T>& b, const std::string& path, int features) {
  const auto c = static_cast<std::size_t>(features);
  gain = b.constant(b.join(path, "gain"), {c}, T(1));
  bias = b.constant(b.join(path, "bias"), {c}, T(0));
}

template <typename T>
SpatialAttention<T>::SpatialAttention(Builder<T>& b, const std::string& path, int features, int heads_)
    : heads(heads_) {
  if (heads < 1 || features % heads)
    throw std::invalid_argument(path + ": " + std::to_string(features) + " features not divisible by " +
                                std::to_string(heads) + " heads");
  q_pw = Conv<T>(b, b.join(path, "q.pw"), 1, features, features, heads);
  q_dw = Conv<T>(b, b.join(path, "q.dw"), 3, features, features, features);
  k_pw = Conv<T>(b, b.join(path, "k.pw"), 1, features, features, heads);
  k_dw = Conv<T>(b, b.join(path, "k.dw"), 3, features, features, features);
  v_pw = Conv<T>(b, b.join(path, "v.pw"), 1, features, features, heads);
  v_dw = Conv<T>(b, b.join(path, "v.dw"), 3, features, features, features);
  for (int h = 0; h < heads; ++h)
    temperature.push_back(b.constant(b.join(path, "temperature" + std::to_string(h)), {1}, T(1)));
  out = Conv<T>(b, b.join(path, "out"), 1, features, features);
}

namespace {

// Head h of a [H, W, C] map as a [H*W, C/K] matrix.
template <typename T>
Tensor<T> head_matrix(const Tensor<T>& x, int heads, int h) {
  const std::size_t width = x.dim(2) / static_cast<std::size_t>(heads);
  const auto part = heads == 1 ? x : ad::slice_last(x, static_cast<std::size_t>(h) * width, width);
  return ad::reshape(part, {x.dim(0) * x.dim(1), width});
}

}  // namespace

template <typename T>
std::vector<Tensor<T>> SpatialAttention<T>::logits(const Tensor<T>& x) const {
  const auto q = queries(x);
  const auto k = keys(x);
  std::vector<Tensor<T>> out_logits;
  for (int h = 0; h < heads; ++h) out_logits.push_back(ad::matmul(head_matrix(k, heads, h), head_matrix(q, heads, h), true));
  return out_logits;
}

template <typename T>
Tensor<T> SpatialAttention<T>::operator()(const Tensor<T>& x) const {
  const auto q = queries(x);
  const auto k = keys(x);
  const auto v = values(x);
  std::vector<Tensor<T>> parts;
  for (int h = 0; h < heads; ++h) {
    const auto m = ad::matmul(head_matrix(k, heads, h), head_matrix(q, heads, h), true);
    const auto s = ad::softmax(ad::div_scalar(m, temperature[static_cast<std::size_t>(h)]), 0);
    parts.push_back(ad::matmul(head_matrix(v, heads, h), s));
  }
  const auto merged = heads == 1 ? parts.front() : ad::concat_last(parts);
  return out(ad::reshape(merged, x.shape()));
}

template <typename T>
GatedFeedForward<T>::GatedFeedForward(Builder<T>& b, const std::string& path, int features)
    : pw_a(b, b.join(path, "a.pw"), 1, features, features),
      dw(b, b.join(path, "a.dw"), 3, features, features, features),
      pw_b(b, b.join(path, "gate.pw"), 1, features, features),
      out(b, b.join(path, "out"), 1, features, features) {}

template <typename T>
Tensor<T> GatedFeedForward<T>::operator()(const Tensor<T>& x) const {
  return out(ad::mul(ad::gelu(dw(pw_a(x))), pw_b(x)));
}

template <typename T>
AttentionBlock<T>::AttentionBlock(Builder<T>& b, const std::string& path, int features, int heads)
    : ln1(b, b.join(path, "ln1"), features),
      attention(b, b.join(path, "sma"), features, heads),
      ln2(b, b.join(path, "ln2"), features),
      ffn(b, b.join(path, "gsfn"), features) {}

template <typename T>
Tensor<T> AttentionBlock<T>::operator()(const Tensor<T>& x) const {
  const auto y = ad::add(x, attention(ln1(x)));
  return ad::add(y, ffn(ln2(y)));
}

template <typename T>
AttentionStage<T>::AttentionStage(Builder<T>& b, const std::string& path, int features, int heads, int count) {
  if (count < 0) throw std::invalid_argument(path + ": negative block count");
  for (int i = 0; i < count; ++i)
    blocks.emplace_back(b, b.join(path, "block" + std::to_string(i)), features, heads);
}

template <typename T>
Tensor<T> AttentionStage<T>::operator()(const Tensor<T>& x) const {
  Tensor<T> y = x;
  for (const auto& block : blocks) y = block(y);
  return y;
}

template <typename T>
AntennaSplit<T>::AntennaSplit(Builder<T>& b, const std::string& path, int features)
    : conv(b, b.join(path, "conv"), 3, features, features) {}

template <typename T>
AntennaConcat<T>::AntennaConcat(Builder<T>& b, const std::string& path, int features)
    : conv(b, b.join(path, "conv"), 3, features, features) {}

#define NFCE_INSTANTIATE_LAYERS(T)     \
  template struct Builder<T>;          \
  template struct Conv<T>;             \
  template struct LayerNorm<T>;        \
  template struct SpatialAttention<T>; \
  template struct GatedFeedForward<T>; \
  template struct AttentionBlock<T>;   \
  template struct AttentionStage<T>;   \
  template struct AntennaSplit<T>;     \
  template struct AntennaConcat<T>;

NFCE_INSTANTIATE_LAYERS(float)
NFCE_INSTANTIATE_LAYERS(double)

}  // namespace nfce::net
