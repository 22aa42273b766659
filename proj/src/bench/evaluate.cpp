#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>

#include "nfce/bench.hpp"
#include "nfce/pilot.hpp"

namespace nfce::bench {
namespace {

// Runs fn(i) for i in [0, n) over `threads` workers. Each index is handled
// exactly once and results are written by index, so order never matters.
template <typename Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(threads), n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::optional<net::Variant> learned_variant(const std::string& method) {
  if (method == "mssan") return net::Variant::MsSAN;
  if (method == "san") return net::Variant::SAN;
  if (method == "cnn") return net::Variant::CNN;
  return std::nullopt;
}

}  // namespace

std::vector<MetricRecord> evaluate(const RunConfig& cfg) {
  DatasetConfig stored;
  const Dataset data = read_dataset(cfg.data_dir, &stored);
  RunConfig effective = cfg;
  effective.dataset = stored;
  return evaluate(effective, data);
}

std::vector<MetricRecord> evaluate(const RunConfig& cfg, const Dataset& data) {
  const EvalConfig& ec = cfg.eval;
  ec.validate();
  const DatasetSplit& test = data.test;
  if (test.size() == 0) throw std::invalid_argument("eval: test split is empty");
  const int nr = test.nr;
  const int nt = test.nt;
  const int threads = ec.threads > 0 ? ec.threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const auto beams = pilot::make_beams(nr, nt, nr, nt, 1.0, pilot::BeamKind::Dft);

  // Per-method state built once.
  std::optional<CMatrix> covariance;
  std::optional<pilot::PolarDictionary> dict_rx, dict_tx;
  std::vector<std::unique_ptr<net::Network<float>>> models(ec.methods.size());
  for (std::size_t m = 0; m < ec.methods.size(); ++m) {
    const auto& method = ec.methods[m];
    if (method == "lmmse" && !covariance) covariance = pilot::fit_channel_covariance(data.train.truth);
    if (method == "omp" && !dict_rx) {
      const auto rx = ArrayGeometry::make(nr, cfg.dataset.carrier_freq);
      const auto tx = ArrayGeometry::make(nt, cfg.dataset.carrier_freq);
      const auto grid = pilot::default_distance_grid(rayleigh_distance(rx, tx), cfg.dataset.r_min);
      dict_rx = pilot::build_polar_dictionary(rx, ec.omp_angle_oversampling * nr, grid);
      dict_tx = pilot::build_polar_dictionary(tx, ec.omp_angle_oversampling * nt, grid);
    }
    if (const auto variant = learned_variant(method)) {
      net::NetworkConfig nc = cfg.network;
      nc.variant = *variant;
      nc.nr = nr;
      nc.nt = nt;
      const auto ckpt = checkpoint_path(cfg, *variant);
      if (!std::filesystem::exists(ckpt))
        throw std::runtime_error("eval: missing checkpoint " + ckpt.string() + " for method '" + method +
                                 "' (run train --variant " + method + " first)");
      models[m] = std::make_unique<net::Network<float>>(nc, 0);
      ad::load_checkpoint(models[m]->params(), ckpt);
    }
  }

  std::vector<MetricRecord> records;
  const std::size_t count = test.size();
  for (std::size_t s = 0; s < ec.snr_db.size(); ++s) {
    const double snr = ec.snr_db[s];
    const double noise_power = std::pow(10.0, -snr / 10.0);
    std::vector<pilot::PilotObservation> obs(count);
    std::vector<CMatrix> ls(count);
    parallel_for(count, threads, [&](std::size_t i) {
      Rng rng = make_stream(ec.seed, stream::kEvalNoise, static_cast<std::uint64_t>(s * count + i));
      obs[i] = pilot::observe(test.truth[i], beams, noise_power, rng);
      ls[i] = pilot::ls_estimate(obs[i]);
    });
    std::optional<pilot::LmmseFilter> lmmse;
    if (covariance) lmmse.emplace(*covariance, noise_power, 1.0);

    for (std::size_t m = 0; m < ec.methods.size(); ++m) {
      const auto& method = ec.methods[m];
      std::vector<double> errs(count), rates(count);
      const auto started = std::chrono::steady_clock::now();
      parallel_for(count, threads, [&](std::size_t i) {
        CMatrix est;
        if (method == "ls") {
          est = ls[i];
        } else if (method == "lmmse") {
          est = lmmse->apply(ls[i]);
        } else if (method == "omp") {
          pilot::OmpOptions opts;
          opts.max_paths = ec.omp_max_paths;
          // Stop once the residual reaches the expected noise energy.
          const double y_norm = obs[i].y.norm();
          opts.residual_tol = y_norm > 0.0 ? std::min(1.0, std::sqrt(noise_power * obs[i].y.size()) / y_norm) : 1.0;
          est = pilot::omp_estimate(obs[i], *dict_rx, *dict_tx, opts);
        } else {
          ad::NoGradGuard no_grad;
          est = from_tensor(models[m]->forward(to_tensor<float>(ls[i])));
        }
        errs[i] = nmse(test.truth[i], est);
        rates[i] = est.squaredNorm() > 0.0 ? spectral_efficiency(test.truth[i], est, noise_power) : 0.0;
      });
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      MetricRecord rec;
      rec.method = method;
      rec.snr_db = snr;
      for (std::size_t i = 0; i < count; ++i) {
        rec.nmse_linear += errs[i];
        rec.se_bits += rates[i];
      }
      rec.nmse_linear /= static_cast<double>(count);
      rec.se_bits /= static_cast<double>(count);
      rec.nmse_db = to_db(rec.nmse_linear);
      rec.samples = count;
      rec.seconds = ec.timing ? elapsed : 0.0;
      rec.sample_nmse = std::move(errs);
      records.push_back(rec);
    }
  }
  return records;
}

void write_metrics_csv(const std::filesystem::path& file, const std::vector<MetricRecord>& records) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "method,snr_db,nmse_linear,nmse_db,se_bits,samples,seconds\n";
  char line[256];
  for (const auto& r : records) {
    std::snprintf(line, sizeof line, "%s,%g,%.10g,%.6f,%.6f,%zu,%.3f\n", r.method.c_str(), r.snr_db, r.nmse_linear,
                  r.nmse_db, r.se_bits, r.samples, r.seconds);
    out << line;
  }
}

}  // namespace nfce::bench
