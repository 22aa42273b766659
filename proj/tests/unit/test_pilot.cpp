#include <doctest.h>

#include <cmath>

#include "nfce/pilot.hpp"

using namespace nfce;
using namespace nfce::pilot;

namespace {

CMatrix random_matrix(int rows, int cols, Rng& rng, double variance = 1.0) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = complex_normal(rng, variance);
  return m;
}

double nmse(const CMatrix& h, const CMatrix& est) { return (h - est).squaredNorm() / h.squaredNorm(); }

double max_column_norm_gap(const CMatrix& m) {
  return (m.colwise().norm().array() - 1.0).abs().maxCoeff();
}

// Draws H = L z with a fixed Cholesky-style factor so the covariance is known exactly.
struct CorrelatedSource {
  CMatrix factor;
  CMatrix covariance;
  int nr, nt;

  CorrelatedSource(int nr_, int nt_, Rng& rng) : nr(nr_), nt(nt_) {
    const int n = nr * nt;
    factor = random_matrix(n, 2, rng) / std::sqrt(2.0);
    covariance = factor * factor.adjoint();
    const double scale = static_cast<double>(n) / covariance.trace().real();
    factor *= std::sqrt(scale);
    covariance *= scale;
    covariance.diagonal().array() += 1e-3;
  }
  CMatrix draw(Rng& rng) const {
    CVector h = factor * random_matrix(2, 1, rng);
    for (Eigen::Index i = 0; i < h.size(); ++i) h(i) += complex_normal(rng, 1e-3);
    return unvec(h, nr, nt);
  }
};

}  // namespace

TEST_SUITE("pilot") {
  TEST_CASE("beam construction") {
    const auto dft = make_beams(8, 4, 8, 4, 1.0, BeamKind::Dft);
    CHECK(max_column_norm_gap(dft.combiner) <= 1e-12);
    CHECK(max_column_norm_gap(dft.precoder) <= 1e-12);
    CHECK((dft.combiner.adjoint() * dft.combiner - CMatrix::Identity(8, 8)).cwiseAbs().maxCoeff() <= 1e-12);
    const auto id = make_beams(6, 3, 6, 3, 2.0, BeamKind::IdentitySubset);
    CHECK((id.combiner - CMatrix::Identity(6, 6)).norm() == 0.0);
    CHECK((id.precoder - CMatrix::Identity(3, 3)).norm() == 0.0);
    const auto sub = make_beams(8, 4, 5, 2, 1.0, BeamKind::Dft);
    CHECK(max_column_norm_gap(sub.combiner) <= 1e-12);
    CHECK_THROWS_AS(make_beams(4, 4, 5, 4, 1.0, BeamKind::Dft), std::invalid_argument);
  }

  TEST_CASE("observation model") {
    Rng rng(1);
    const CMatrix h = random_matrix(6, 3, rng);
    const auto id = make_beams(6, 3, 6, 3, 4.0, BeamKind::IdentitySubset);
    CHECK((observe(h, id, 0.0, rng).y - 2.0 * h).norm() <= 1e-14);

    // Kronecker identity on a subsampled DFT configuration.
    const auto beams = make_beams(6, 3, 6, 3, 2.5, BeamKind::Dft);
    const CVector direct = vec(observe(h, beams, 0.0, rng).y);
    const CMatrix q = beams.precoder.transpose().eval();
    CMatrix kron(q.rows() * beams.combiner.cols(), q.cols() * beams.combiner.rows());
    const CMatrix wh = beams.combiner.adjoint();
    for (Eigen::Index i = 0; i < q.rows(); ++i)
      for (Eigen::Index j = 0; j < q.cols(); ++j)
        kron.block(i * wh.rows(), j * wh.cols(), wh.rows(), wh.cols()) = q(i, j) * wh;
    CHECK((direct - std::sqrt(2.5) * kron * vec(h)).norm() <= 1e-10);
    CHECK((sensing_matrix(beams) - kron).norm() <= 1e-12);

    // Noise power through orthonormal combiners.
    const CMatrix zero = CMatrix::Zero(6, 3);
    double total = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) total += observe(zero, beams, 0.7, rng).y.squaredNorm();
    CHECK(std::abs(total / draws / (0.7 * 18.0) - 1.0) <= 0.02);
  }

  TEST_CASE("least squares") {
    Rng rng(2);
    const CMatrix h = random_matrix(8, 4, rng);
    const auto beams = make_beams(8, 4, 8, 4, 1.0, BeamKind::Dft);
    CHECK((ls_estimate(observe(h, beams, 0.0, rng)) - h).norm() / h.norm() <= 1e-10);

    const auto scaled = make_beams(8, 4, 8, 4, 3.0, BeamKind::IdentitySubset);
    CHECK((ls_estimate(observe(h, scaled, 0.0, rng)) - h).norm() / h.norm() <= 1e-10);

    const auto short_beams = make_beams(8, 4, 8, 3, 1.0, BeamKind::Dft);
    CHECK_THROWS_AS(ls_estimate(observe(h, short_beams, 0.0, rng)), std::invalid_argument);

    // Unbiasedness and the error floor at 10 dB.
    const CMatrix unit = h * std::sqrt(32.0 / h.squaredNorm());
    CMatrix mean = CMatrix::Zero(8, 4);
    double err = 0.0;
    const int trials = 10000;
    for (int i = 0; i < trials; ++i) {
      const CMatrix est = ls_estimate(observe(unit, beams, 0.1, rng));
      mean += est;
      err += nmse(unit, est);
    }
    mean /= trials;
    CHECK((mean - unit).norm() / unit.norm() <= 0.01);
    CHECK(10.0 * std::log10(err / trials) == doctest::Approx(-10.0).epsilon(0.05));
  }

  TEST_CASE("covariance fitting") {
    Rng rng(3);
    const CMatrix h = random_matrix(3, 2, rng);
    const CMatrix single = fit_channel_covariance({h});
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(single);
    CHECK(eig.eigenvalues()(4) <= 1e-10 * eig.eigenvalues()(5));
    CHECK_THROWS(fit_channel_covariance({}));

    std::vector<CMatrix> iid;
    for (int i = 0; i < 10000; ++i) iid.push_back(random_matrix(3, 2, rng));
    const CMatrix r = fit_channel_covariance(iid);
    CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((r - CMatrix::Identity(6, 6)).norm() / std::sqrt(6.0) <= 0.05);
  }

  TEST_CASE("LMMSE") {
    Rng rng(4);
    const auto beams = make_beams(4, 2, 4, 2, 2.0, BeamKind::Dft);
    const CMatrix h = random_matrix(4, 2, rng);
    const auto obs = observe(h, beams, 0.5, rng);
    const CMatrix ls = ls_estimate(obs);
    CHECK((lmmse_estimate(obs, CMatrix::Identity(8, 8)) - (2.0 / 2.5) * ls).norm() <= 1e-12);

    const auto quiet = observe(h, beams, 1e-12, rng);
    const CMatrix r = fit_channel_covariance({h, random_matrix(4, 2, rng), random_matrix(4, 2, rng)});
    CHECK((lmmse_estimate(quiet, CMatrix::Identity(8, 8) + r) - ls_estimate(quiet)).cwiseAbs().maxCoeff() <= 1e-8);

    const LmmseFilter filter(CMatrix::Identity(8, 8), 0.5, 2.0);
    CHECK((filter.apply(ls) - lmmse_estimate(obs, CMatrix::Identity(8, 8))).norm() <= 1e-12);
  }

  TEST_CASE("LMMSE with the exact covariance never loses to LS") {
    Rng rng(5);
    const CorrelatedSource source(4, 2, rng);
    const auto beams = make_beams(4, 2, 4, 2, 1.0, BeamKind::Dft);
    for (double snr : {-10.0, -5.0, 0.0, 5.0, 10.0}) {
      const double noise = std::pow(10.0, -snr / 10.0);
      const LmmseFilter filter(source.covariance, noise, 1.0);
      double ls_err = 0.0, lmmse_err = 0.0;
      for (int i = 0; i < 2000; ++i) {
        const CMatrix h = source.draw(rng);
        const CMatrix ls = ls_estimate(observe(h, beams, noise, rng));
        ls_err += (h - ls).squaredNorm();
        lmmse_err += (h - filter.apply(ls)).squaredNorm();
      }
      CAPTURE(snr);
      CHECK(lmmse_err <= ls_err + 1e-9);
    }
  }

  TEST_CASE("polar dictionary") {
    const auto geom = ArrayGeometry::make(64, 60e9);
    const double inf = std::numeric_limits<double>::infinity();
    const auto grid = default_distance_grid(40.0, 1.5);
    CHECK(grid == std::vector<double>{inf, 20.0, 10.0, 5.0, 2.5, 1.5});
    const auto dict = build_polar_dictionary(geom, 128, grid);
    CHECK(dict.size() == 128 * 6);
    CHECK(max_column_norm_gap(dict.atoms) <= 1e-10);
    for (int g = 0; g < 128; g += 31) {
      CHECK(std::isinf(dict.distances[g]));
      const CVector ramp = steering_vector(geom, dict.thetas[g], inf);
      CHECK((dict.atoms.col(g) - ramp).norm() <= 1e-12);
    }
    const double mu = mutual_coherence(dict);
    MESSAGE("mutual coherence of the 64x(128x6) dictionary: " << mu);
    CHECK(mu < 1.0);
    CHECK(mu > 0.0);
  }

  TEST_CASE("orthogonal matching pursuit") {
    const auto rx = ArrayGeometry::make(16, 60e9);
    const auto tx = ArrayGeometry::make(4, 60e9);
    const std::vector<double> grid{std::numeric_limits<double>::infinity(), 4.0, 2.0};
    const auto dict_rx = build_polar_dictionary(rx, 32, grid);
    const auto dict_tx = build_polar_dictionary(tx, 8, grid);
    const auto beams = make_beams(16, 4, 16, 4, 1.0, BeamKind::Dft);
    Rng rng(6);

    // One on-grid path.
    const CMatrix h = cd(0.7, -1.1) * dict_rx.atoms.col(40) * dict_tx.atoms.col(5).adjoint();
    OmpOptions opts;
    opts.max_paths = 4;
    opts.residual_tol = 1e-6;
    OmpTrace trace;
    const CMatrix est = omp_estimate(observe(h, beams, 0.0, rng), dict_rx, dict_tx, opts, &trace);
    CHECK(10.0 * std::log10(nmse(h, est)) <= -40.0);
    CHECK(trace.selected_rx.front() == 40);
    CHECK(trace.selected_tx.front() == 5);

    opts.max_paths = 0;
    CHECK(omp_estimate(observe(h, beams, 0.1, rng), dict_rx, dict_tx, opts).norm() == 0.0);

    // Residual orthogonality and monotone decrease on a noisy multi-path instance.
    CMatrix multi = CMatrix::Zero(16, 4);
    for (int p = 0; p < 3; ++p)
      multi += complex_normal(rng) * dict_rx.atoms.col(10 + 23 * p) * dict_tx.atoms.col(3 + 7 * p).adjoint();
    const auto obs = observe(multi, beams, 0.01, rng);
    opts.max_paths = 5;
    opts.residual_tol = 0.0;
    OmpTrace t;
    const CMatrix fit = omp_estimate(obs, dict_rx, dict_tx, opts, &t);
    REQUIRE(t.residual_norms.size() == 5);
    for (std::size_t i = 1; i < t.residual_norms.size(); ++i) CHECK(t.residual_norms[i] <= t.residual_norms[i - 1] + 1e-12);
    const CMatrix q = sensing_matrix(beams);
    const CVector residual = vec(obs.y) - q * vec(fit);
    CHECK(std::abs(residual.norm() - t.residual_norms.back()) <= 1e-8);
    for (std::size_t k = 0; k < t.selected_rx.size(); ++k) {
      const CVector atom = q * vec(dict_rx.atoms.col(t.selected_rx[k]) * dict_tx.atoms.col(t.selected_tx[k]).adjoint());
      CHECK(std::abs(atom.dot(residual)) <= 1e-8);
    }

    PolarDictionary empty;
    empty.atoms = CMatrix(16, 0);
    CHECK_THROWS(omp_estimate(obs, empty, dict_tx, opts));
  }
}
