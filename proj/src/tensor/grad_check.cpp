#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "nfce/param_store.hpp"

namespace nfce::ad {

GradCheckResult grad_check(const std::function<Tensor<double>()>& f, std::vector<Tensor<double>> inputs, double eps,
                           std::size_t max_coords, Rng* rng) {
  if (!(eps > 0.0)) throw std::invalid_argument("grad_check: eps must be positive");
  if (max_coords > 0 && rng == nullptr) throw std::invalid_argument("grad_check: subset sampling needs an rng");

  for (auto& in : inputs) {
    in.node()->requires_grad = true;
    in.zero_grad();
  }
  backward(f());

  GradCheckResult result;
  for (std::size_t s = 0; s < inputs.size(); ++s) {
    auto& in = inputs[s];
    const std::vector<double> analytic(in.grad().begin(), in.grad().end());
    std::vector<std::size_t> coords(in.numel());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (max_coords > 0 && coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), *rng);
      coords.resize(max_coords);
    }
    for (std::size_t c : coords) {
      double& x = in.data()[c];
      const double saved = x;
      x = saved + eps;
      const double up = f().item();
      x = saved - eps;
      const double down = f().item();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(analytic[c]), std::abs(numeric), 1e-3});
      const double rel = std::abs(analytic[c] - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_rel_error || result.worst.empty()) {
        result.max_rel_error = rel;
        result.worst = "input[" + std::to_string(s) + "] coord " + std::to_string(c);
      }
    }
  }
  return result;
}

}  // namespace nfce::ad
