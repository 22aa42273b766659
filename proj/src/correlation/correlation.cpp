#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "nfce/correlation.hpp"

namespace nfce::corr {
namespace {

using boost::math::quadrature::gauss_kronrod;

constexpr unsigned kMaxDepth = 30;
// Truncation point for the exponential PDP, in units of sigma_psi.
constexpr double kPdpSpan = 40.0;

// k d and k d^2 for a geometry; (pi, pi d) at half-wavelength spacing.
struct PhaseScale {
  double linear;
  double quadratic;
};

PhaseScale half_wavelength_scale(double d) { return {kPi, kPi * d}; }
PhaseScale geometry_scale(const ArrayGeometry& g) {
  const double k = g.wavenumber();
  return {k * g.element_spacing, k * g.element_spacing * g.element_spacing};
}

double omega_impl(int m, int n, double mean_angle, double r0, PhaseScale s, const ClosedFormOptions& opts) {
  const double dm = static_cast<double>(m) - n;
  const double dsq = static_cast<double>(m) * m - static_cast<double>(n) * n;
  const double far = s.linear * dm * std::cos(mean_angle);
  if (!std::isfinite(r0)) return far;
  const double near = s.quadratic * dsq * std::sin(2.0 * mean_angle) / (2.0 * r0);
  return opts.printed_omega_sign ? far - near : far + near;
}

double b_theta_impl(double omega, double sigma, const ClosedFormOptions& opts) {
  if (!(sigma > 0.0)) throw std::domain_error("b_theta_closed: sigma_phi must be positive");
  if (omega == 0.0) return 1.0;
  const double a = std::sqrt(2.0) / sigma;
  const double tail = std::exp(-a * kPi);
  const double beta = 1.0 / -std::expm1(-a * kPi);
  const double denom = opts.printed_denominator ? 2.0 + sigma * omega * omega : 2.0 + sigma * sigma * omega * omega;
  const double bracket = tail * (-a * std::cos(kPi * omega) + omega * std::sin(kPi * omega)) + a;
  return std::sqrt(2.0) * sigma * beta / denom * bracket;
}

// exp(j [(m-n) k d theta0 - k d^2 (1 - theta0^2)(m^2 - n^2) / (2 r0)]).
cd angular_phase(int m, int n, double theta0, double r0, PhaseScale s) {
  const double dm = static_cast<double>(m) - n;
  const double dsq = static_cast<double>(m) * m - static_cast<double>(n) * n;
  double phase = s.linear * dm * theta0;
  if (std::isfinite(r0)) phase -= s.quadratic * (1.0 - theta0 * theta0) * dsq / (2.0 * r0);
  return std::polar(1.0, phase);
}

template <typename F>
double integrate_checked(F f, double a, double b, double abs_tol, double l1_bound, const char* what) {
  double err = 0.0;
  // Refinement stops at error <= tol * L1; l1_bound caps the integrand's L1 norm.
  const double tol = std::max(0.25 * abs_tol / l1_bound, 1e-15);
  const double value = gauss_kronrod<double, 31>::integrate(f, a, b, kMaxDepth, tol, &err);
  if (!(err <= abs_tol)) {
    std::ostringstream msg;
    msg << what << ": quadrature did not converge (achieved error " << err << ", requested " << abs_tol << ")";
    throw std::runtime_error(msg.str());
  }
  return value;
}

}  // namespace

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::ClosedForm: return "closed-form";
    case Provenance::Quadrature: return "quadrature";
    case Provenance::MonteCarlo: return "monte-carlo";
  }
  return "unknown";
}

double omega_coeff(int m, int n, double mean_angle, double r0, double d, const ClosedFormOptions& opts) {
  if (!(r0 > 0.0)) throw std::domain_error("omega_coeff: r0 must be positive");
  return omega_impl(m, n, mean_angle, r0, half_wavelength_scale(d), opts);
}

double omega_coeff(int m, int n, double mean_angle, double r0, const ArrayGeometry& geom,
                   const ClosedFormOptions& opts) {
  if (!(r0 > 0.0)) throw std::domain_error("omega_coeff: r0 must be positive");
  return omega_impl(m, n, mean_angle, r0, geometry_scale(geom), opts);
}

double b_theta_closed(int m, int n, const AngularSpreadModel& model, double d, const ClosedFormOptions& opts) {
  const double w = omega_coeff(m, n, model.mean_angle, model.fixed_distance, d, opts);
  return b_theta_impl(w, model.sigma_phi, opts);
}

double b_theta_closed(int m, int n, const AngularSpreadModel& model, const ArrayGeometry& geom,
                      const ClosedFormOptions& opts) {
  const double w = omega_coeff(m, n, model.mean_angle, model.fixed_distance, geom, opts);
  return b_theta_impl(w, model.sigma_phi, opts);
}

double b_theta_quadrature(double omega, double sigma_phi, double abs_tol) {
  if (!(sigma_phi > 0.0)) throw std::domain_error("b_theta_quadrature: sigma_phi must be positive");
  const double a = std::sqrt(2.0) / sigma_phi;
  const double beta = 1.0 / -std::expm1(-a * kPi);
  auto f = [a, omega](double phi) { return std::exp(-a * phi) * std::cos(omega * phi); };
  const double scale = a * beta;  // sqrt(2) beta / sigma
  return scale * integrate_checked(f, 0.0, kPi, abs_tol / scale, 1.0 / a, "b_theta_quadrature");
}

CorrelationMatrix r_theta_closed(const AngularSpreadModel& model, const ArrayGeometry& geom,
                                 const ClosedFormOptions& opts) {
  const int n_el = geom.num_elements;
  const double theta0 = std::sin(model.mean_angle);
  const PhaseScale s = geometry_scale(geom);
  CorrelationMatrix out{CMatrix(n_el, n_el), Provenance::ClosedForm};
  for (int n = 0; n < n_el; ++n) {
    for (int m = 0; m <= n; ++m) {
      const double mag = m == n ? 1.0 : b_theta_closed(m, n, model, geom, opts);
      const cd v = mag * angular_phase(m, n, theta0, model.fixed_distance, s);
      out.values(m, n) = v;
      out.values(n, m) = std::conj(v);
    }
  }
  return out;
}

CorrelationMatrix r_theta_quadrature(const AngularSpreadModel& model, const ArrayGeometry& geom) {
  const int n_el = geom.num_elements;
  const double theta0 = std::sin(model.mean_angle);
  const PhaseScale s = geometry_scale(geom);
  CorrelationMatrix out{CMatrix(n_el, n_el), Provenance::Quadrature};
  for (int n = 0; n < n_el; ++n) {
    for (int m = 0; m <= n; ++m) {
      const double w = omega_coeff(m, n, model.mean_angle, model.fixed_distance, geom);
      const double mag = m == n ? 1.0 : b_theta_quadrature(w, model.sigma_phi);
      const cd v = mag * angular_phase(m, n, theta0, model.fixed_distance, s);
      out.values(m, n) = v;
      out.values(n, m) = std::conj(v);
    }
  }
  return out;
}

cd b_r_quadrature(int m, int n, const DistanceSpreadModel& model, const ArrayGeometry& geom, double abs_tol) {
  if (!(model.sigma_psi > 0.0)) throw std::domain_error("b_r_quadrature: sigma_psi must be positive");
  if (!(model.mean_distance > 0.0)) throw std::domain_error("b_r_quadrature: mean distance must be positive");
  const double sigma = model.sigma_psi;
  const double span = kPdpSpan * sigma;
  if (m == n) return {sigma * -std::expm1(-kPdpSpan), 0.0};

  const PhaseScale s = geometry_scale(geom);
  const double dsq = static_cast<double>(m) * m - static_cast<double>(n) * n;
  const double c = s.quadratic * (1.0 - model.fixed_theta * model.fixed_theta) * dsq / 2.0;
  const double r0 = model.mean_distance;
  auto re = [=](double psi) { return std::exp(-psi / sigma) * std::cos(c / (r0 + psi)); };
  auto im = [=](double psi) { return -std::exp(-psi / sigma) * std::sin(c / (r0 + psi)); };
  const double half_tol = abs_tol / 2.0;
  return {integrate_checked(re, 0.0, span, half_tol, sigma, "b_r_quadrature"),
          integrate_checked(im, 0.0, span, half_tol, sigma, "b_r_quadrature")};
}

CorrelationMatrix r_r(const DistanceSpreadModel& model, const ArrayGeometry& geom) {
  const int n_el = geom.num_elements;
  const PhaseScale s = geometry_scale(geom);
  const double k_r = 1.0 / model.sigma_psi;
  CorrelationMatrix out{CMatrix(n_el, n_el), Provenance::Quadrature};
  for (int n = 0; n < n_el; ++n) {
    for (int m = 0; m <= n; ++m) {
      cd v;
      if (m == n) {
        v = 1.0;
      } else {
        const cd prefactor = std::polar(1.0, s.linear * (static_cast<double>(m) - n) * model.fixed_theta);
        v = k_r * prefactor * b_r_quadrature(m, n, model, geom);
      }
      out.values(m, n) = v;
      out.values(n, m) = std::conj(v);
    }
  }
  return out;
}

CorrelationMatrix corr_monte_carlo(double mean_angle, double sigma_phi, double mean_distance, double sigma_psi,
                                   const ArrayGeometry& geom, long long draws, Rng& rng) {
  if (draws < 1) throw std::invalid_argument("corr_monte_carlo: draws must be >= 1");
  if (sigma_phi < 0.0 || sigma_psi < 0.0) throw std::domain_error("corr_monte_carlo: negative spread");
  const int n_el = geom.num_elements;
  const double k = geom.wavenumber();
  const double d = geom.element_spacing;
  constexpr long long kBatch = 4096;

  CMatrix acc = CMatrix::Zero(n_el, n_el);
  CMatrix block(n_el, kBatch);
  for (long long start = 0; start < draws; start += kBatch) {
    const long long count = std::min(kBatch, draws - start);
    for (long long b = 0; b < count; ++b) {
      const double phi = sigma_phi > 0.0 ? sample_pas(rng, sigma_phi) : 0.0;
      const double psi = sigma_psi > 0.0 ? sample_pdp(rng, sigma_psi) : 0.0;
      const double theta = std::sin(mean_angle - phi);
      const double r = mean_distance + psi;
      const double curv = std::isfinite(r) ? (1.0 - theta * theta) / (2.0 * r) : 0.0;
      for (int n = 0; n < n_el; ++n) {
        const double nd = n * d;
        block(n, b) = std::polar(1.0, -k * (curv * nd * nd - nd * theta));
      }
    }
    const auto used = block.leftCols(count);
    acc.noalias() += used * used.adjoint();
  }
  acc /= static_cast<double>(draws);
  CorrelationMatrix out{(acc + acc.adjoint()) / 2.0, Provenance::MonteCarlo};
  return out;
}

}  // namespace nfce::corr
