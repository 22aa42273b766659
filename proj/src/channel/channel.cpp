#include <cmath>
#include <stdexcept>

#include "nfce/channel.hpp"

namespace nfce {

ChannelRealization channel_matrix(const std::vector<PathComponent>& paths,
                                  const ArrayGeometry& rx, const ArrayGeometry& tx) {
  if (paths.empty()) throw std::invalid_argument("channel_matrix: at least one path required");
  const int nr = rx.num_elements;
  const int nt = tx.num_elements;
  const double prefactor = std::sqrt(static_cast<double>(nt) * nr / static_cast<double>(paths.size()));

  CMatrix h = CMatrix::Zero(nr, nt);
  for (const auto& p : paths) {
    const CVector ar = steering_vector(rx, std::sin(p.aoa), p.rx_distance);
    const CVector at = steering_vector(tx, std::sin(p.aod), p.tx_distance);
    h.noalias() += p.gain * (ar * at.adjoint());
  }
  h *= prefactor;
  return ChannelRealization{std::move(h), paths, rx, tx};
}

void DatasetConfig::validate() const {
  if (nr < 1 || nt < 1) throw std::invalid_argument("dataset: array sizes must be positive");
  if (!(carrier_freq > 0.0)) throw std::invalid_argument("dataset: carrier frequency must be positive");
  if (!(mean_paths > 0.0)) throw std::invalid_argument("dataset: mean_paths must be positive");
  if (!(angle_bound > 0.0) || angle_bound >= kPi / 2.0)
    throw std::invalid_argument("dataset: angle_bound must lie in (0, pi/2)");
  if (!(r_min > 0.0)) throw std::invalid_argument("dataset: r_min must be positive");
  if (r_max < r_min) throw std::invalid_argument("dataset: r_max must be >= r_min");
  if (snr_db.empty()) throw std::invalid_argument("dataset: snr set is empty");
  if (sample_count <= 0) throw std::invalid_argument("dataset: sample_count must be positive");
  if (split_train < 1 || split_test < 0) throw std::invalid_argument("dataset: invalid split ratio");
}

std::int64_t DatasetConfig::train_count() const {
  return sample_count * split_train / (split_train + split_test);
}

std::vector<PathComponent> sample_paths(const DatasetConfig& cfg, Rng& rng) {
  std::poisson_distribution<int> count_dist(cfg.mean_paths);
  std::uniform_real_distribution<double> angle(-cfg.angle_bound, cfg.angle_bound);
  std::uniform_real_distribution<double> dist(cfg.r_min, cfg.r_max);

  // Clamping L >= 1 biases the mean up by mean * P(L = 0).
  const int count = std::max(1, count_dist(rng));
  std::vector<PathComponent> paths(count);
  for (auto& p : paths) {
    p.gain = complex_normal(rng);
    p.aoa = angle(rng);
    p.aod = angle(rng);
    p.rx_distance = cfg.r_max > cfg.r_min ? dist(rng) : cfg.r_min;
    p.tx_distance = cfg.r_max > cfg.r_min ? dist(rng) : cfg.r_min;
  }
  return paths;
}

}  // namespace nfce
