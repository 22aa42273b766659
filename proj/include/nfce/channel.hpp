#pragma once

// Near-field spherical-wavefront channel model for parallel ULAs.

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "nfce/random.hpp"

namespace nfce {

using cd = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Rounded value; the published 174.25 m Rayleigh distance for 256x8 at 60 GHz uses it.
inline constexpr double kSpeedOfLight = 3.0e8;
inline constexpr double kPi = 3.14159265358979323846;

/// Uniform linear array. Element n sits at offset n*d from the reference
/// element n = 0.
struct ArrayGeometry {
  int num_elements = 1;
  double carrier_freq = 60e9;
  double element_spacing = 0.0;  // meters; 0 selects lambda/2

  /// Validates and fills the default spacing.
  static ArrayGeometry make(int num_elements, double carrier_freq, double element_spacing = 0.0);

  double wavelength() const { return kSpeedOfLight / carrier_freq; }
  double wavenumber() const { return 2.0 * kPi / wavelength(); }
  /// Aperture convention D = N*d.
  double aperture() const { return num_elements * element_spacing; }
};

struct PathComponent {
  cd gain{1.0, 0.0};
  double aoa = 0.0;  // physical angles, radians
  double aod = 0.0;
  double rx_distance = 1.0;  // meters, to the reference element
  double tx_distance = 1.0;
};

struct ChannelRealization {
  CMatrix matrix;  // Nr x Nt
  std::vector<PathComponent> paths;
  ArrayGeometry geometry_rx;
  ArrayGeometry geometry_tx;
};

/// 2 (D_r + D_t)^2 / lambda with D = N d. Uses the receive carrier.
double rayleigh_distance(const ArrayGeometry& rx, const ArrayGeometry& tx);

/// Quadratic (Fresnel) approximation r + (1 - theta^2) d^2 n^2 / (2r) - n d theta.
/// Throws std::domain_error for r <= 0 or |theta| > 1.
double element_distance(double r, double theta, double d, int n);

/// Exact law-of-cosines distance sqrt(r^2 + n^2 d^2 - 2 r n d theta).
double element_distance_exact(double r, double theta, double d, int n);

/// [a]_n = exp(-j k (r^(n) - r)) / sqrt(N) with r^(n) from element_distance.
/// An infinite r yields the far-field ramp exp(j k n d theta) / sqrt(N).
CVector steering_vector(const ArrayGeometry& geom, double theta, double r);

/// H = sqrt(Nt Nr / L) sum_l alpha_l a_R a_T^H. Throws on an empty path list.
ChannelRealization channel_matrix(const std::vector<PathComponent>& paths,
                                  const ArrayGeometry& rx, const ArrayGeometry& tx);

struct DatasetConfig {
  int nr = 256;
  int nt = 8;
  double carrier_freq = 60e9;
  double mean_paths = 6.0;
  double angle_bound = kPi / 3.0;
  double r_min = 3.0;
  double r_max = 174.24;
  std::vector<double> snr_db{-10.0, -5.0, 0.0, 5.0, 10.0};
  std::int64_t sample_count = 1000;
  int split_train = 4;
  int split_test = 1;
  std::uint64_t seed = 1;
  // Rescale each dataset channel to ||H||_F^2 = Nt Nr (unit average entry power).
  bool normalize_power = true;

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;
  ArrayGeometry rx_geometry() const { return ArrayGeometry::make(nr, carrier_freq); }
  ArrayGeometry tx_geometry() const { return ArrayGeometry::make(nt, carrier_freq); }
  std::int64_t train_count() const;
  std::int64_t test_count() const { return sample_count - train_count(); }
};

/// L ~ Poisson(mean_paths) clamped to >= 1; angles U(-bound, bound);
/// distances U(r_min, r_max); gains CN(0, 1).
std::vector<PathComponent> sample_paths(const DatasetConfig& cfg, Rng& rng);

}  // namespace nfce
