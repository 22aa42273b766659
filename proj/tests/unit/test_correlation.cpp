#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "nfce/correlation.hpp"

using namespace nfce;
using namespace nfce::corr;

namespace {

// Composite Simpson rule with n (even) panels.
template <typename F>
auto simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  auto total = f(a) + f(b);
  for (int i = 1; i < n; ++i) total += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return total * (h / 3.0);
}

double hermitian_gap(const CMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff(); }

// Kolmogorov-Smirnov statistic of a sample against a CDF.
double ks_statistic(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
  }
  return d;
}

}  // namespace

TEST_SUITE("correlation") {
  TEST_CASE("angular spread density") {
    for (double sigma : {0.05, 0.1, 0.3, 1.0}) {
      CAPTURE(sigma);
      // The support is half-open, so the last node sits just below pi.
      const double top = std::nextafter(kPi, 0.0);
      CHECK(simpson([&](double p) { return pas_pdf(p, sigma); }, -kPi, 0.0, 200000) +
                simpson([&](double p) { return pas_pdf(p, sigma); }, 0.0, top, 200000) ==
            doctest::Approx(1.0).epsilon(1e-8));
      const double beta = 1.0 / (1.0 - std::exp(-std::sqrt(2.0) * kPi / sigma));
      CHECK(pas_pdf(0.0, sigma) == doctest::Approx(beta / (std::sqrt(2.0) * sigma)).epsilon(1e-14));
    }
    const long double s = 0.1L;
    const long double beta = 1.0L / (1.0L - std::exp(-std::sqrt(2.0L) * 3.14159265358979323846264L / s));
    const long double ref = beta / (std::sqrt(2.0L) * s) * std::exp(-std::sqrt(2.0L) * 0.05L / s);
    CHECK(std::abs(pas_pdf(0.05, 0.1) - static_cast<double>(ref)) <= 1e-12);
    CHECK_THROWS_AS(pas_pdf(0.0, 0.0), std::domain_error);
  }

  TEST_CASE("distance spread density") {
    // Density is zero at psi = 0 by convention; start just inside the support.
    CHECK(simpson([](double p) { return pdp_pdf(p, 10.0); }, 1e-12, 400.0, 400000) ==
          doctest::Approx(1.0).epsilon(1e-8));
    CHECK(pdp_pdf(10.0, 10.0) == doctest::Approx(std::exp(-1.0) / 10.0).epsilon(1e-14));
    CHECK(std::abs(pdp_pdf(3.0, 10.0) - static_cast<double>(std::exp(-0.3L) / 10.0L)) <= 1e-15);
    CHECK(pdp_pdf(3.0, 10.0) == doctest::Approx(0.0740818).epsilon(1e-6));
    CHECK(pdp_pdf(0.0, 10.0) == 0.0);
    CHECK(pdp_pdf(-1.0, 10.0) == 0.0);
    CHECK_THROWS_AS(pdp_pdf(1.0, 0.0), std::domain_error);
  }

  TEST_CASE("phase coefficient") {
    CHECK(omega_coeff(5, 5, 0.4, 20.0, 0.0025) == 0.0);
    CHECK(omega_coeff(1, 0, kPi / 4.0, 1e300, 0.0025) == doctest::Approx(2.2214414690791831).epsilon(1e-12));
    CHECK(omega_coeff(7, 3, 0.3, 15.0, 0.0025) == -omega_coeff(3, 7, 0.3, 15.0, 0.0025));

    const long double pi = 3.14159265358979323846264L;
    const long double ref = pi * 144.0L * std::cos(pi / 4.0L) +
                            pi * 0.0025L * (40000.0L - 3136.0L) * std::sin(pi / 2.0L) / 40.0L;
    CHECK(std::abs(omega_coeff(200, 56, kPi / 4.0, 20.0, 0.0025) - static_cast<double>(ref)) <= 1e-11);

    ClosedFormOptions printed;
    printed.printed_omega_sign = true;
    const long double ref_printed = pi * 144.0L * std::cos(pi / 4.0L) - pi * 0.0025L * 36864.0L / 40.0L;
    CHECK(std::abs(omega_coeff(200, 56, kPi / 4.0, 20.0, 0.0025, printed) - static_cast<double>(ref_printed)) <= 1e-11);
  }

  TEST_CASE("closed-form angular magnitude") {
    AngularSpreadModel model;
    model.sigma_phi = 0.1;
    model.mean_angle = kPi / 6.0;
    model.fixed_distance = 30.0;
    CHECK(b_theta_closed(9, 9, model, 0.0025) == 1.0);

    // Independent oracle: Simpson on the defining integral.
    const double omega = omega_coeff(108, 100, model.mean_angle, model.fixed_distance, 0.0025);
    const double s = model.sigma_phi;
    const double beta = 1.0 / (1.0 - std::exp(-std::sqrt(2.0) * kPi / s));
    const double oracle = std::sqrt(2.0) * beta / s *
                          simpson([&](double p) { return std::exp(-std::sqrt(2.0) * p / s) * std::cos(omega * p); },
                                  0.0, kPi, 400000);
    CHECK(std::abs(b_theta_closed(108, 100, model, 0.0025) - oracle) <= 1e-6);
    CHECK(std::abs(b_theta_quadrature(omega, s) - oracle) <= 1e-6);

    // The printed denominator does not agree with the integral.
    ClosedFormOptions printed;
    printed.printed_denominator = true;
    CHECK(std::abs(b_theta_closed(108, 100, model, 0.0025, printed) - oracle) > 1e-3);

    model.sigma_phi = 1e-6;
    for (int m : {1, 20, 63}) CHECK(b_theta_closed(m, 0, model, 0.0025) == doctest::Approx(1.0).epsilon(1e-6));
  }

  TEST_CASE("angular correlation matrix") {
    AngularSpreadModel model;
    model.sigma_phi = 0.08;
    model.mean_angle = -0.4;
    model.fixed_distance = 12.0;
    const auto geom = ArrayGeometry::make(24, 60e9);
    const auto r = r_theta_closed(model, geom);
    CHECK(r.provenance == Provenance::ClosedForm);
    CHECK(hermitian_gap(r.values) <= 1e-10);
    for (int m = 0; m < 24; ++m) {
      CHECK(r.values(m, m) == cd(1.0, 0.0));
      for (int n = 0; n < 24; ++n)
        CHECK(std::abs(std::abs(r.values(m, n)) - b_theta_closed(m, n, model, geom)) <= 1e-14);
    }
    const auto q = r_theta_quadrature(model, geom);
    CHECK(q.provenance == Provenance::Quadrature);
    CHECK((q.values - r.values).cwiseAbs().maxCoeff() <= 1e-6);
  }

  TEST_CASE("far-field reduction") {
    const double mean = 0.5;
    for (int m : {3, 40, 127}) {
      const int n = 1;
      CHECK(std::abs(omega_coeff(m, n, mean, 1e9, 0.0025) - kPi * (m - n) * std::cos(mean)) <= 1e-6);
    }
    AngularSpreadModel model;
    model.mean_angle = mean;
    model.fixed_distance = 1e9;
    const auto geom = ArrayGeometry::make(128, 60e9);
    const auto r = r_theta_closed(model, geom);
    const double theta0 = std::sin(mean);
    for (int m : {0, 17, 127})
      for (int n : {0, 64, 100}) {
        const cd expected = std::polar(1.0, kPi * (m - n) * theta0);
        CHECK(std::abs(std::arg(r.values(m, n) * std::conj(expected))) <= 1e-6);
      }
  }

  TEST_CASE("distance-domain quadrature") {
    const auto geom = ArrayGeometry::make(256, 60e9);
    DistanceSpreadModel model;
    model.sigma_psi = 10.0;
    model.fixed_theta = 0.5;
    model.mean_distance = 20.0;
    CHECK(std::abs(b_r_quadrature(7, 7, model, geom) - cd(10.0, 0.0)) <= 1e-12);

    // Second integrator: Simpson on the truncated domain.
    const double k = geom.wavenumber();
    const double d = geom.element_spacing;
    const double curv = k * d * d * (1.0 - 0.25) * (160.0 * 160.0 - 96.0 * 96.0) / 2.0;
    const cd oracle = simpson(
        [&](double psi) { return std::exp(-psi / 10.0) * std::polar(1.0, -curv / (20.0 + psi)); }, 0.0, 400.0,
        2000000);
    const cd value = b_r_quadrature(160, 96, model, geom);
    CHECK(std::abs(value - oracle) <= 1e-6);
    CHECK(std::abs(value) / 10.0 <= 1.0);

    model.mean_distance = 1e7;
    CHECK(std::abs(std::abs(b_r_quadrature(160, 96, model, geom)) / 10.0 - 1.0) <= 1e-4);

    double previous = 0.0;
    for (double r0 : {1e1, 1e2, 1e3, 1e4, 1e5}) {
      model.mean_distance = r0;
      const double mag = std::abs(b_r_quadrature(160, 96, model, geom)) / 10.0;
      CHECK(mag > previous);
      CHECK(mag <= 1.0);
      previous = mag;
    }
  }

  TEST_CASE("distance correlation matrix") {
    const auto geom = ArrayGeometry::make(16, 60e9);
    DistanceSpreadModel model;
    model.mean_distance = 0.5;
    model.sigma_psi = 0.3;
    model.fixed_theta = 0.2;
    const auto r = r_r(model, geom);
    CHECK(hermitian_gap(r.values) <= 1e-10);
    for (int m = 0; m < 16; ++m) {
      CHECK(std::abs(std::abs(r.values(m, m)) - 1.0) <= 1e-10);
      for (int n = 0; n < 16; ++n)
        CHECK(std::abs(std::abs(r.values(m, n)) - std::abs(b_r_quadrature(m, n, model, geom)) / 0.3) <= 1e-10);
    }
  }

  TEST_CASE("Monte-Carlo correlation") {
    const auto geom = ArrayGeometry::make(12, 60e9);
    Rng rng(5);
    const auto one = corr_monte_carlo(0.2, 0.1, 5.0, 1.0, geom, 1, rng);
    CHECK(one.provenance == Provenance::MonteCarlo);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(one.values);
    CHECK(eig.eigenvalues().minCoeff() >= -1e-10);
    CHECK(eig.eigenvalues()(10) <= 1e-10);

    const auto point = corr_monte_carlo(0.2, 0.0, 5.0, 0.0, geom, 3, rng);
    const CVector a = steering_vector(geom, std::sin(0.2), 5.0);
    CHECK((point.values - 12.0 * a * a.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);

    const auto many = corr_monte_carlo(0.2, 0.1, 5.0, 1.0, geom, 2000, rng);
    CHECK(hermitian_gap(many.values) <= 1e-10);
    for (int m = 0; m < 12; ++m) CHECK(std::abs(many.values(m, m) - 1.0) <= 1e-12);
    Eigen::SelfAdjointEigenSolver<CMatrix> eig_many(many.values);
    CHECK(eig_many.eigenvalues().minCoeff() >= -1e-10);
  }

  TEST_CASE("Monte-Carlo agrees with the closed form for a fixed distance") {
    const auto geom = ArrayGeometry::make(32, 60e9);
    AngularSpreadModel model;
    model.sigma_phi = 0.05;
    model.mean_angle = kPi / 6.0;
    model.fixed_distance = 20.0;
    Rng rng(9);
    const auto mc = corr_monte_carlo(model.mean_angle, model.sigma_phi, model.fixed_distance, 0.0, geom, 200000, rng);
    const auto closed = r_theta_closed(model, geom);
    CHECK((mc.values - closed.values).norm() / closed.values.norm() <= 2e-2);
  }

  TEST_CASE("samplers match their densities") {
    const double sigma = 0.2;
    const double a = std::sqrt(2.0) / sigma;
    const double tail = std::exp(-a * kPi);
    const double beta = 1.0 / (1.0 - tail);
    auto laplace_cdf = [&](double x) {
      return x < 0.0 ? beta / 2.0 * (std::exp(a * x) - tail) : 1.0 - beta / 2.0 * (std::exp(-a * x) - tail);
    };
    const int n = 100000;
    Rng rng(17);
    std::vector<double> phis(n), psis(n);
    for (auto& p : phis) p = sample_pas(rng, sigma);
    for (auto& p : psis) p = sample_pdp(rng, 4.0);
    // Critical value at the 0.1% level.
    const double critical = 1.95 / std::sqrt(static_cast<double>(n));
    CHECK(ks_statistic(phis, laplace_cdf) < critical);
    CHECK(ks_statistic(psis, [](double x) { return 1.0 - std::exp(-x / 4.0); }) < critical);
    CHECK(*std::min_element(phis.begin(), phis.end()) >= -kPi);
    CHECK(*std::max_element(phis.begin(), phis.end()) < kPi);
  }
}
