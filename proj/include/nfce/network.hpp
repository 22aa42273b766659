#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nfce/layers.hpp"

namespace nfce::net {

enum class Variant { MsSAN, SAN, CNN };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& name);

struct NetworkConfig {
  Variant variant = Variant::MsSAN;
  int nr = 256;
  int nt = 8;
  int embed_features = 32;
  std::array<int, 4> blocks{1, 1, 2, 1};  // B1, B2, B3, Br
  std::array<int, 4> heads{1, 2, 4, 1};   // K1, K2, K3, Kr
  // Single-scale ablation.
  int san_features = 48;
  int san_blocks = 10;
  int san_heads = 1;
  // Convolutional stand-in.
  int cnn_features = 32;
  int cnn_depth = 6;

  /// Throws std::invalid_argument naming the violated constraint.
  void validate() const;
};

struct StageShape {
  std::string stage;
  Shape shape;
};

/// Trainable estimator mapping [Nr, Nt, 2] to [Nr, Nt, 2].
template <typename T>
class Network {
 public:
  Network(const NetworkConfig& cfg, std::uint64_t seed);
  ~Network();
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  const NetworkConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return params_; }
  const ParamStore<T>& params() const { return params_; }

  /// Records stage boundaries into `trace` when non-null.
  Tensor<T> forward(const Tensor<T>& x, std::vector<StageShape>* trace = nullptr) const;

  struct Impl;

 private:
  NetworkConfig cfg_;
  ParamStore<T> params_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nfce::net
