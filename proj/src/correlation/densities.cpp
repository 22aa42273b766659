#include <cmath>
#include <stdexcept>

#include "nfce/correlation.hpp"

namespace nfce::corr {
namespace {

void require_positive(double sigma, const char* what) {
  if (!(sigma > 0.0)) throw std::domain_error(std::string(what) + ": spread must be positive");
}

}  // namespace

double pas_pdf(double phi, double sigma_phi) {
  require_positive(sigma_phi, "pas_pdf");
  if (phi < -kPi || phi >= kPi) return 0.0;
  const double a = std::sqrt(2.0) / sigma_phi;
  const double beta = 1.0 / -std::expm1(-a * kPi);
  return beta / (std::sqrt(2.0) * sigma_phi) * std::exp(-std::abs(a * phi));
}

double pas_cdf(double phi, double sigma_phi) {
  require_positive(sigma_phi, "pas_cdf");
  if (phi <= -kPi) return 0.0;
  if (phi >= kPi) return 1.0;
  const double a = std::sqrt(2.0) / sigma_phi;
  const double beta = 1.0 / -std::expm1(-a * kPi);
  if (phi < 0.0) return 0.5 * beta * (std::exp(a * phi) - std::exp(-a * kPi));
  return 0.5 + 0.5 * beta * -std::expm1(-a * phi);
}

double sample_pas(Rng& rng, double sigma_phi) {
  require_positive(sigma_phi, "sample_pas");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  const double v = 2.0 * uni(rng) - 1.0;
  const double a = std::sqrt(2.0) / sigma_phi;
  // Inverse of the folded CDF: |phi| = -log(1 - |v| (1 - e^{-a pi})) / a.
  const double mag = -std::log1p(std::abs(v) * std::expm1(-a * kPi)) / a;
  return v < 0.0 ? -mag : mag;
}

double pdp_pdf(double psi, double sigma_psi) {
  require_positive(sigma_psi, "pdp_pdf");
  if (psi <= 0.0) return 0.0;
  return std::exp(-psi / sigma_psi) / sigma_psi;
}

double sample_pdp(Rng& rng, double sigma_psi) {
  require_positive(sigma_psi, "sample_pdp");
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  return -sigma_psi * std::log1p(-uni(rng));
}

}  // namespace nfce::corr
