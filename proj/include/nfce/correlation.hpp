#pragma once

// Spatial antenna correlation of near-field ULA channels.
//
// Angular domain: closed form B_theta (with the integration-by-parts result
// re-derived) and its quadrature counterpart. Distance domain: adaptive
// quadrature only, no closed form exists. Both are cross-checked against a
// Monte-Carlo estimate of E{a a^H}.

#include <string>

#include "nfce/channel.hpp"

namespace nfce::corr {

enum class Provenance { ClosedForm, Quadrature, MonteCarlo };
std::string to_string(Provenance p);

struct CorrelationMatrix {
  CMatrix values;
  Provenance provenance = Provenance::ClosedForm;
};

struct AngularSpreadModel {
  double mean_angle = 0.0;  // physical angle, radians
  double sigma_phi = 0.1;   // PAS standard deviation, radians
  double fixed_distance = 20.0;
};

struct DistanceSpreadModel {
  double mean_distance = 20.0;
  double sigma_psi = 10.0;  // offset standard deviation, meters
  double fixed_theta = 0.5;  // sine of the angle
};

/// Switches for reproducing the printed (uncorrected) formulas.
struct ClosedFormOptions {
  bool printed_denominator = false;  // 2 + sigma * omega^2 instead of 2 + sigma^2 * omega^2
  bool printed_omega_sign = false;   // minus sign on the curvature term of omega
};

/// Truncated Laplacian PAS on [-pi, pi). Throws std::domain_error for sigma <= 0.
double pas_pdf(double phi, double sigma_phi);
/// Its CDF, used by the inverse-CDF sampler.
double pas_cdf(double phi, double sigma_phi);
double sample_pas(Rng& rng, double sigma_phi);

/// Exponential PDP over distance offset; zero for psi <= 0.
double pdp_pdf(double psi, double sigma_psi);
double sample_pdp(Rng& rng, double sigma_psi);

/// Phase coefficient multiplying phi in the linearized angular correlation,
/// for half-wavelength spacing d (meters):
///   pi (m - n) cos(phi0) + pi d (m^2 - n^2) sin(2 phi0) / (2 r0).
double omega_coeff(int m, int n, double mean_angle, double r0, double d,
                   const ClosedFormOptions& opts = {});

/// Same coefficient for arbitrary spacing: k d (m-n) cos + k d^2 (m^2-n^2) sin2 / (2 r0).
double omega_coeff(int m, int n, double mean_angle, double r0, const ArrayGeometry& geom,
                   const ClosedFormOptions& opts = {});

/// Closed-form magnitude of the angular correlation (integration by parts).
double b_theta_closed(int m, int n, const AngularSpreadModel& model, double d,
                      const ClosedFormOptions& opts = {});
double b_theta_closed(int m, int n, const AngularSpreadModel& model, const ArrayGeometry& geom,
                      const ClosedFormOptions& opts = {});

/// (sqrt(2) beta / sigma) * integral_0^pi exp(-sqrt(2) phi / sigma) cos(omega phi) dphi,
/// by adaptive quadrature.
double b_theta_quadrature(double omega, double sigma_phi, double abs_tol = 1e-9);

/// [R_theta]_{m,n} = exp(j k [(m-n) d theta0 - d^2 (1 - theta0^2)(m^2-n^2)/(2 r0)]) B_theta.
CorrelationMatrix r_theta_closed(const AngularSpreadModel& model, const ArrayGeometry& geom,
                                 const ClosedFormOptions& opts = {});

/// Same phase factor, magnitude from b_theta_quadrature.
CorrelationMatrix r_theta_quadrature(const AngularSpreadModel& model, const ArrayGeometry& geom);

/// B_r = integral_0^{40 sigma} exp(-psi/sigma) exp(-j k d^2 (1-theta0^2)(m^2-n^2) / (2(r0+psi))) dpsi.
/// Throws std::runtime_error when the achieved error exceeds abs_tol.
cd b_r_quadrature(int m, int n, const DistanceSpreadModel& model, const ArrayGeometry& geom,
                  double abs_tol = 1e-8);

/// [R_r]_{m,n} = K_r exp(j k d (m-n) theta0) B_r.
CorrelationMatrix r_r(const DistanceSpreadModel& model, const ArrayGeometry& geom);

/// N * mean of a a^H over phi ~ PAS, psi ~ PDP with theta0 = sin(mean_angle - phi),
/// r0 = mean_distance + psi. sigma = 0 collapses the corresponding spread.
CorrelationMatrix corr_monte_carlo(double mean_angle, double sigma_phi, double mean_distance,
                                   double sigma_psi, const ArrayGeometry& geom, long long draws, Rng& rng);

}  // namespace nfce::corr
