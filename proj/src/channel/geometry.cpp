#include <cmath>
#include <stdexcept>

#include "nfce/channel.hpp"

namespace nfce {

ArrayGeometry ArrayGeometry::make(int num_elements, double carrier_freq, double element_spacing) {
  if (num_elements < 1) throw std::invalid_argument("array needs at least one element");
  if (!(carrier_freq > 0.0)) throw std::invalid_argument("carrier frequency must be positive");
  if (element_spacing < 0.0) throw std::invalid_argument("element spacing must be positive");
  ArrayGeometry g;
  g.num_elements = num_elements;
  g.carrier_freq = carrier_freq;
  g.element_spacing = element_spacing > 0.0 ? element_spacing : g.wavelength() / 2.0;
  return g;
}

double rayleigh_distance(const ArrayGeometry& rx, const ArrayGeometry& tx) {
  const double sum = rx.aperture() + tx.aperture();
  return 2.0 * sum * sum / rx.wavelength();
}

double element_distance(double r, double theta, double d, int n) {
  if (!(r > 0.0)) throw std::domain_error("element_distance: r must be positive");
  if (std::abs(theta) > 1.0) throw std::domain_error("element_distance: |theta| must be <= 1");
  const double nd = n * d;
  return r + (1.0 - theta * theta) / (2.0 * r) * nd * nd - nd * theta;
}

double element_distance_exact(double r, double theta, double d, int n) {
  if (!(r > 0.0)) throw std::domain_error("element_distance_exact: r must be positive");
  const double nd = n * d;
  return std::sqrt(r * r + nd * nd - 2.0 * r * nd * theta);
}

CVector steering_vector(const ArrayGeometry& geom, double theta, double r) {
  if (!(r > 0.0)) throw std::domain_error("steering_vector: r must be positive");
  const int n_el = geom.num_elements;
  const double k = geom.wavenumber();
  const double d = geom.element_spacing;
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_el));
  CVector a(n_el);
  for (int n = 0; n < n_el; ++n) {
    // r^(n) - r, written without the cancelling r so large r stays exact.
    const double nd = n * d;
    double delta = -nd * theta;
    if (std::isfinite(r)) delta += (1.0 - theta * theta) / (2.0 * r) * nd * nd;
    a[n] = std::polar(scale, -k * delta);
  }
  return a;
}

}  // namespace nfce
