#include <doctest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "nfce/dataset.hpp"
#include "nfce/pilot.hpp"

using namespace nfce;

namespace {

int numeric_rank(const CMatrix& h) {
  Eigen::JacobiSVD<CMatrix> svd(h);
  const auto& s = svd.singularValues();
  int rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > 1e-9 * s(0)) ++rank;
  return rank;
}

std::string slurp(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

DatasetConfig small_dataset(std::int64_t count) {
  DatasetConfig cfg;
  cfg.nr = 8;
  cfg.nt = 2;
  cfg.r_min = 1.0;
  cfg.r_max = 3.0;
  cfg.sample_count = count;
  return cfg;
}

}  // namespace

TEST_SUITE("channel") {
  TEST_CASE("rayleigh distance") {
    const auto rx = ArrayGeometry::make(256, 60e9);
    const auto tx = ArrayGeometry::make(8, 60e9);
    CHECK(rayleigh_distance(rx, tx) == doctest::Approx(174.24).epsilon(1e-12));
    CHECK(std::abs(rayleigh_distance(rx, tx) - 174.25) / 174.25 < 1e-3);

    // 2 (34 lambda)^2 / lambda = 2312 lambda at 28 GHz.
    const auto rx28 = ArrayGeometry::make(64, 28e9);
    const auto tx28 = ArrayGeometry::make(4, 28e9);
    CHECK(rayleigh_distance(rx28, tx28) == doctest::Approx(2312.0 * 3e8 / 28e9).epsilon(1e-12));
    CHECK(rayleigh_distance(rx28, tx28) == doctest::Approx(24.77).epsilon(1e-3));

    const auto point = ArrayGeometry::make(1, 60e9, 1e-300);
    CHECK(rayleigh_distance(point, point) < 1e-290);
  }

  TEST_CASE("element distance approximation") {
    CHECK(element_distance(7.0, 0.3, 0.0025, 0) == 7.0);
    CHECK(element_distance(10.0, 0.0, 0.0025, 100) == doctest::Approx(10.003125).epsilon(1e-14));
    CHECK(element_distance(10.0, 0.5, 0.0025, 100) == doctest::Approx(9.8773438).epsilon(1e-8));
    CHECK(element_distance_exact(10.0, 0.5, 0.0025, 100) == doctest::Approx(9.8773732).epsilon(1e-8));
    CHECK(std::abs(element_distance(10.0, 0.5, 0.0025, 100) - element_distance_exact(10.0, 0.5, 0.0025, 100)) <
          0.005 / 16.0);
    CHECK_THROWS_AS(element_distance(0.0, 0.1, 0.0025, 3), std::domain_error);
    CHECK_THROWS_AS(element_distance(-1.0, 0.1, 0.0025, 3), std::domain_error);
  }

  TEST_CASE("quadratic distance stays within a sixteenth wavelength beyond a tenth of the Rayleigh distance") {
    const auto geom = ArrayGeometry::make(256, 60e9);
    const double single = 2.0 * geom.aperture() * geom.aperture() / geom.wavelength();
    double worst = 0.0;
    for (double r : {single / 10.0, single / 5.0, single, 5.0 * single})
      for (double theta = -0.95; theta <= 0.951; theta += 0.05)
        for (int n = 0; n < geom.num_elements; ++n)
          worst = std::max(worst, std::abs(element_distance(r, theta, geom.element_spacing, n) -
                                           element_distance_exact(r, theta, geom.element_spacing, n)));
    CHECK(worst < geom.wavelength() / 16.0);
  }

  TEST_CASE("steering vectors") {
    const auto geom = ArrayGeometry::make(64, 60e9);
    for (double theta : {-0.9, -0.2, 0.0, 0.4, 0.8})
      for (double r : {2.0, 20.0, 500.0}) {
        const CVector a = steering_vector(geom, theta, r);
        CHECK(std::abs(a.norm() - 1.0) <= 1e-12);
        CHECK(a(0) == cd(1.0 / 8.0, 0.0));
      }
    CHECK_THROWS_AS(steering_vector(geom, 0.1, 0.0), std::domain_error);

    // Far-field limit: phase pi n theta for half-wavelength spacing.
    const double theta = 0.37;
    const CVector far = steering_vector(geom, theta, 1e6);
    const CVector ramp = steering_vector(geom, theta, std::numeric_limits<double>::infinity());
    for (int n = 0; n < 64; ++n) {
      const double expected = kPi * n * theta;
      CHECK(std::abs(std::arg(far(n) * std::polar(1.0, -expected))) <= 1e-3);
      CHECK(std::abs(std::arg(ramp(n) * std::polar(1.0, -expected))) <= 1e-12);
    }
  }

  TEST_CASE("channel matrix norms and ranks") {
    const auto rx = ArrayGeometry::make(16, 60e9);
    const auto tx = ArrayGeometry::make(4, 60e9);
    PathComponent p;
    p.aoa = 0.3;
    p.aod = -0.4;
    p.rx_distance = 5.0;
    p.tx_distance = 7.0;
    const auto one = channel_matrix({p}, rx, tx);
    CHECK(one.matrix.rows() == 16);
    CHECK(one.matrix.cols() == 4);
    CHECK(one.matrix.squaredNorm() == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(numeric_rank(one.matrix) == 1);
    CHECK(numeric_rank(channel_matrix({p, p}, rx, tx).matrix) == 1);

    PathComponent q = p;
    q.aoa = -0.5;
    q.aod = 0.2;
    CHECK(numeric_rank(channel_matrix({p, q}, rx, tx).matrix) == 2);
    CHECK_THROWS(channel_matrix({}, rx, tx));
  }

  TEST_CASE("average channel power with four random paths") {
    const auto rx = ArrayGeometry::make(8, 60e9);
    const auto tx = ArrayGeometry::make(4, 60e9);
    Rng rng(11);
    std::uniform_real_distribution<double> angle(-1.0, 1.0);
    std::uniform_real_distribution<double> dist(1.0, 10.0);
    double total = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) {
      std::vector<PathComponent> paths(4);
      for (auto& path : paths) {
        path.gain = complex_normal(rng);
        path.aoa = angle(rng);
        path.aod = angle(rng);
        path.rx_distance = dist(rng);
        path.tx_distance = dist(rng);
      }
      total += channel_matrix(paths, rx, tx).matrix.squaredNorm();
    }
    CHECK(std::abs(total / draws / 32.0 - 1.0) <= 0.02);
  }

  TEST_CASE("path sampler") {
    DatasetConfig cfg;
    Rng rng(3);
    double count = 0.0;
    double max_angle = 0.0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
      const auto paths = sample_paths(cfg, rng);
      REQUIRE(!paths.empty());
      count += static_cast<double>(paths.size());
      for (const auto& p : paths) {
        max_angle = std::max({max_angle, std::abs(p.aoa), std::abs(p.aod)});
        CHECK(p.rx_distance >= cfg.r_min);
        CHECK(p.rx_distance <= cfg.r_max);
      }
    }
    CHECK(count / draws >= 5.9);
    CHECK(count / draws <= 6.1);
    CHECK(max_angle <= kPi / 3.0);

    Rng a(42), b(42);
    for (int i = 0; i < 20; ++i) {
      const auto pa = sample_paths(cfg, a);
      const auto pb = sample_paths(cfg, b);
      REQUIRE(pa.size() == pb.size());
      for (std::size_t k = 0; k < pa.size(); ++k) {
        CHECK(pa[k].gain == pb[k].gain);
        CHECK(pa[k].aoa == pb[k].aoa);
        CHECK(pa[k].rx_distance == pb[k].rx_distance);
      }
    }
  }

  TEST_CASE("dataset split counts and power normalization") {
    const DatasetConfig cfg = small_dataset(1000);
    CHECK(cfg.train_count() == 800);
    CHECK(cfg.test_count() == 200);
    const Dataset data = generate_dataset(cfg);
    CHECK(data.train.size() == 800);
    CHECK(data.test.size() == 200);
    for (const auto& h : data.test.truth) CHECK(h.squaredNorm() == doctest::Approx(16.0).epsilon(1e-5));
    for (std::size_t i = 0; i < 10; ++i) CHECK(data.train.snr_db[i] == sample_snr_db(cfg, static_cast<std::int64_t>(i)));

    DatasetConfig bad = cfg;
    bad.r_min = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.r_max = 0.5;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = cfg;
    bad.sample_count = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  }

  TEST_CASE("noiseless dataset inputs equal the truth up to storage precision") {
    DatasetConfig cfg = small_dataset(20);
    cfg.snr_db = {400.0};
    const Dataset data = generate_dataset(cfg);
    for (std::size_t i = 0; i < data.train.size(); ++i)
      CHECK((data.train.ls_input[i] - data.train.truth[i]).norm() / data.train.truth[i].norm() <= 1e-6);

    // In double precision the LS identity holds to 1e-10.
    const auto beams = pilot::make_beams(8, 2, 8, 2, 1.0, pilot::BeamKind::Dft);
    Rng rng(1);
    const CMatrix h = generate_channel(cfg, 3).matrix;
    const CMatrix est = pilot::ls_estimate(pilot::observe(h, beams, 0.0, rng));
    CHECK((est - h).norm() / h.norm() <= 1e-10);
  }

  TEST_CASE("dataset files are bit-identical under the same seed") {
    const auto root = std::filesystem::temp_directory_path() / "nfce_channel_files";
    std::filesystem::remove_all(root);
    const DatasetConfig cfg = small_dataset(30);
    write_dataset(root / "a", cfg, generate_dataset(cfg));
    write_dataset(root / "b", cfg, generate_dataset(cfg));
    for (const char* name : {"train.nfcd", "test.nfcd", "manifest.json"})
      CHECK(slurp(root / "a" / name) == slurp(root / "b" / name));
    const std::string head = slurp(root / "a" / "train.nfcd").substr(0, 4);
    CHECK(head == "NFCD");

    DatasetConfig back;
    const Dataset loaded = read_dataset(root / "a", &back);
    CHECK(back.sample_count == 30);
    CHECK(loaded.train.size() == 24);
    const Dataset fresh = generate_dataset(cfg);
    CHECK((loaded.test.truth[2] - fresh.test.truth[2]).norm() == 0.0);
    CHECK((loaded.test.ls_input[2] - fresh.test.ls_input[2]).norm() == 0.0);
  }
}
