#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "nfce/random.hpp"
#include "nfce/tensor.hpp"

namespace nfce::ad {

/// Named trainable tensors in registration order, plus momentum buffers.
template <typename T>
class ParamStore {
 public:
  /// Registers a leaf tensor (requires_grad forced on). Throws on a duplicate path.
  Tensor<T>& add(const std::string& path, Tensor<T> value);

  bool contains(const std::string& path) const { return index_.count(path) > 0; }
  Tensor<T>& at(const std::string& path);
  const Tensor<T>& at(const std::string& path) const;

  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  const std::vector<std::string>& paths() const { return paths_; }
  std::vector<Tensor<T>>& tensors() { return params_; }
  const std::vector<Tensor<T>>& tensors() const { return params_; }

  void zero_grad();
  /// Momentum buffers, created lazily as zeros by sgd_momentum_step.
  std::vector<std::vector<T>>& momentum() { return momentum_; }

 private:
  std::vector<std::string> paths_;
  std::vector<Tensor<T>> params_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<T>> momentum_;
};

/// g += weight_decay * w; v = momentum * v + g; w -= lr * v.
/// Throws std::logic_error if any parameter has no gradient buffer.
template <typename T>
void sgd_momentum_step(ParamStore<T>& store, T lr, T momentum, T weight_decay);

/// Checkpoint: "NFPT", u32 version, u32 scalar bytes, u64 record count, then
/// per record: u32 path length, path bytes, u32 rank, u64 extents, raw values.
template <typename T>
void save_checkpoint(const ParamStore<T>& store, const std::filesystem::path& file);

/// Loads values into an already-built store. Paths, shapes and scalar size must match.
template <typename T>
void load_checkpoint(ParamStore<T>& store, const std::filesystem::path& file);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  std::string worst;  // "input[i] coord j"
};

/// Central-difference check of backward() for a scalar function of `inputs`.
/// Checks up to `max_coords` coordinates per input, chosen with `rng` (all if 0).
/// Relative error uses max(|analytic|, |numeric|, 1e-3) as denominator.
GradCheckResult grad_check(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> inputs,
                           double eps = 1e-5, std::size_t max_coords = 0, Rng* rng = nullptr);

}  // namespace nfce::ad
