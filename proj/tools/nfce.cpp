// Command-line front end: dataset generation, correlation tables, classical
// estimation, training, evaluation and network description.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>

#include <CLI11.hpp>

#include "nfce/bench.hpp"
#include "nfce/correlation.hpp"
#include "nfce/pilot.hpp"

namespace {

using namespace nfce;

struct Common {
  std::string config;
  std::string profile;
  std::string data_dir;
  std::string run_dir;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--profile", c.profile, "Base profile when no config is given (desk or paper)");
  app->add_option("--data", c.data_dir, "Dataset directory (overrides the config)");
  app->add_option("--run", c.run_dir, "Checkpoint and CSV directory (overrides the config)");
}

bench::RunConfig resolve(const Common& c, const std::string& fallback_profile = "desk") {
  bench::RunConfig cfg = c.config.empty() ? bench::profile_by_name(c.profile.empty() ? fallback_profile : c.profile)
                                          : bench::load_run_config(c.config);
  if (!c.config.empty() && !c.profile.empty())
    throw std::invalid_argument("--profile and --config are exclusive; set \"profile\" inside the config");
  if (!c.data_dir.empty()) cfg.data_dir = c.data_dir;
  if (!c.run_dir.empty()) cfg.run_dir = c.run_dir;
  return cfg;
}

double parse_distance(const std::string& s) {
  if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size() || !(v > 0.0)) throw std::invalid_argument("distance must be positive or 'inf': " + s);
  return v;
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- gen-data --------------------------------------------------------------

struct GenArgs {
  Common common;
  std::optional<std::int64_t> samples;
  std::optional<std::uint64_t> seed;
};

int run_gen_data(const GenArgs& a) {
  auto cfg = resolve(a.common);
  if (a.samples) cfg.dataset.sample_count = *a.samples;
  if (a.seed) cfg.dataset.seed = *a.seed;
  const auto data = generate_dataset(cfg.dataset);
  write_dataset(cfg.data_dir, cfg.dataset, data);
  std::cout << "wrote " << data.train.size() << " train / " << data.test.size() << " test samples ("
            << cfg.dataset.nr << "x" << cfg.dataset.nt << ") to " << cfg.data_dir.string() << "\n";
  return 0;
}

// ---- corr ------------------------------------------------------------------

struct CorrArgs {
  std::string kind = "closed";
  std::string sweep;
  int n = 64;
  double freq = 60e9;
  double mean_angle = 0.0;
  double sigma_phi = 0.1;
  std::string r0 = "20";
  double sigma_psi = 10.0;
  double theta = 0.5;
  long long draws = 100000;
  std::uint64_t seed = 1;
  int m_index = 160;
  int n_index = 96;
  std::vector<std::string> r0_list{"10", "100", "1000", "10000", "100000"};
  bool printed = false;
  std::string out;
};

int run_corr(const CorrArgs& a) {
  const auto geom = ArrayGeometry::make(a.n, a.freq);
  corr::ClosedFormOptions opts;
  opts.printed_denominator = a.printed;
  opts.printed_omega_sign = a.printed;
  std::string text;

  if (!a.sweep.empty()) {
    if (a.sweep == "distance") {
      text = "r0,magnitude\n";
      for (const auto& s : a.r0_list) {
        const double r0 = parse_distance(s);
        corr::DistanceSpreadModel model{r0, a.sigma_psi, a.theta};
        const double mag = std::abs(corr::b_r_quadrature(a.m_index, a.n_index, model, geom)) / a.sigma_psi;
        text += fmt("%g,%.12g\n", r0, mag);
      }
    } else if (a.sweep == "angle") {
      text = "r0,m,magnitude\n";
      for (const auto& s : a.r0_list) {
        const double r0 = parse_distance(s);
        corr::AngularSpreadModel model{a.mean_angle, a.sigma_phi, r0};
        for (int m = 0; m < a.n; ++m) {
          const double mag = m == a.n_index ? 1.0 : corr::b_theta_closed(m, a.n_index, model, geom, opts);
          text += fmt("%g,%d,%.12g\n", r0, m, std::abs(mag));
        }
      }
    } else {
      throw std::invalid_argument("unknown sweep '" + a.sweep + "' (expected distance or angle)");
    }
    emit(a.out, text);
    return 0;
  }

  const double r0 = parse_distance(a.r0);
  corr::CorrelationMatrix r;
  if (a.kind == "closed") {
    r = corr::r_theta_closed({a.mean_angle, a.sigma_phi, r0}, geom, opts);
  } else if (a.kind == "quadrature") {
    r = corr::r_theta_quadrature({a.mean_angle, a.sigma_phi, r0}, geom);
  } else if (a.kind == "distance") {
    r = corr::r_r({r0, a.sigma_psi, a.theta}, geom);
  } else if (a.kind == "monte-carlo") {
    Rng rng = make_stream(a.seed, stream::kCovariance);
    r = corr::corr_monte_carlo(a.mean_angle, a.sigma_phi, r0, a.sigma_psi, geom, a.draws, rng);
  } else {
    throw std::invalid_argument("unknown kind '" + a.kind + "' (expected closed, quadrature, distance, monte-carlo)");
  }
  text = "m,n,re,im,magnitude,provenance\n";
  const std::string prov = corr::to_string(r.provenance);
  for (Eigen::Index m = 0; m < r.values.rows(); ++m)
    for (Eigen::Index n = 0; n < r.values.cols(); ++n) {
      const cd v = r.values(m, n);
      text += fmt("%ld,%ld,%.12g,%.12g,%.12g,%s\n", static_cast<long>(m), static_cast<long>(n), v.real(), v.imag(),
                  std::abs(v), prov.c_str());
    }
  emit(a.out, text);
  return 0;
}

// ---- estimate --------------------------------------------------------------

struct EstimateArgs {
  Common common;
  std::string method = "ls";
  double snr = 5.0;
  std::string out;
};

int run_estimate(const EstimateArgs& a) {
  auto cfg = resolve(a.common);
  cfg.eval.methods = {a.method};
  cfg.eval.snr_db = {a.snr};
  if (a.method != "ls" && a.method != "lmmse" && a.method != "omp")
    throw std::invalid_argument("estimate: method must be ls, lmmse or omp");
  DatasetConfig stored;
  const auto data = read_dataset(cfg.data_dir, &stored);
  cfg.dataset = stored;

  const auto rec = bench::evaluate(cfg, data).front();
  std::string text = "index,method,snr_db,nmse_linear,nmse_db\n";
  for (std::size_t i = 0; i < rec.sample_nmse.size(); ++i)
    text += fmt("%zu,%s,%g,%.10g,%.6f\n", i, a.method.c_str(), a.snr, rec.sample_nmse[i],
                bench::to_db(rec.sample_nmse[i]));
  emit(a.out, text);
  return 0;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  Common common;
  std::string variant;
  std::optional<int> epochs;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  auto cfg = resolve(a.common);
  if (!a.variant.empty()) cfg.network.variant = net::variant_from_string(a.variant);
  if (a.epochs) cfg.train.epochs = *a.epochs;
  const auto result = bench::train(cfg, [&](const bench::EpochRecord& r) {
    if (!a.quiet)
      std::cerr << fmt("epoch %3d  lr %.5f  train %.6f  test %.6f\n", r.epoch, r.lr, r.train_loss, r.test_loss);
  });
  std::cout << "checkpoint " << result.checkpoint.string() << " (best epoch " << result.best_epoch << ")\n"
            << "loss curve " << result.loss_csv.string() << "\n";
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  Common common;
  std::vector<std::string> methods;
  std::vector<double> snrs;
  bool timing = false;
  std::string out;
};

int run_eval(const EvalArgs& a) {
  auto cfg = resolve(a.common);
  if (!a.methods.empty()) cfg.eval.methods = a.methods;
  if (!a.snrs.empty()) cfg.eval.snr_db = a.snrs;
  if (a.timing) cfg.eval.timing = true;
  const auto records = bench::evaluate(cfg);
  const std::filesystem::path out = a.out.empty() ? cfg.run_dir / "metrics.csv" : std::filesystem::path(a.out);
  if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
  bench::write_metrics_csv(out, records);
  for (const auto& r : records)
    std::cout << fmt("%-6s %6.1f dB  NMSE %8.3f dB  SE %7.3f bit/s/Hz\n", r.method.c_str(), r.snr_db, r.nmse_db,
                     r.se_bits);
  std::cout << "metrics " << out.string() << "\n";
  return 0;
}

// ---- describe --------------------------------------------------------------

struct DescribeArgs {
  Common common;
  std::string variant;
};

int run_describe(const DescribeArgs& a) {
  auto cfg = resolve(a.common, "paper");
  if (!a.variant.empty()) cfg.network.variant = net::variant_from_string(a.variant);
  const auto& n = cfg.network;
  std::cout << "profile " << cfg.profile << "\n"
            << "variant " << net::to_string(n.variant) << "\n"
            << "input   (" << n.nr << ", " << n.nt << ", 2)\n";
  switch (n.variant) {
    case net::Variant::MsSAN:
      std::cout << "embed features C = " << n.embed_features << "\n"
                << fmt("SA blocks {B1, B2, B3, Br} = {%d, %d, %d, %d}\n", n.blocks[0], n.blocks[1], n.blocks[2],
                       n.blocks[3])
                << fmt("heads     {K1, K2, K3, Kr} = {%d, %d, %d, %d}\n", n.heads[0], n.heads[1], n.heads[2],
                       n.heads[3]);
      break;
    case net::Variant::SAN:
      std::cout << "features " << n.san_features << ", SA blocks " << n.san_blocks << ", heads " << n.san_heads
                << "\n";
      break;
    case net::Variant::CNN:
      std::cout << "depth " << n.cnn_depth << ", features " << n.cnn_features << "\n";
      break;
  }
  std::cout << fmt("training  epochs %d, batch %d, lr %g, momentum %g, weight decay %g\n", cfg.train.epochs,
                   cfg.train.batch_size, cfg.train.base_lr, cfg.train.momentum, cfg.train.weight_decay);

  net::Network<float> model(n, cfg.train.seed);
  std::vector<net::StageShape> trace;
  {
    ad::NoGradGuard no_grad;
    model.forward(ad::Tensor<float>::zeros({static_cast<std::size_t>(n.nr), static_cast<std::size_t>(n.nt), 2}),
                  &trace);
  }
  std::cout << "\nstage       shape\n";
  for (const auto& s : trace) std::cout << fmt("%-11s %s\n", s.stage.c_str(), ad::shape_string(s.shape).c_str());
  std::cout << "\nparameters  " << model.params().scalar_count() << " in " << model.params().size() << " tensors\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field XL-MIMO channel estimation toolkit"};
  app.failure_message(CLI::FailureMessage::help);
  app.require_subcommand(1);

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-data", "Generate a train/test dataset");
  add_common(gen_cmd, gen.common);
  gen_cmd->add_option("--samples", gen.samples, "Total sample count");
  gen_cmd->add_option("--seed", gen.seed, "Dataset seed");

  CorrArgs corr;
  auto* corr_cmd = app.add_subcommand("corr", "Spatial correlation matrices and sweeps as CSV");
  corr_cmd->add_option("--kind", corr.kind, "closed | quadrature | distance | monte-carlo")->capture_default_str();
  corr_cmd->add_option("--sweep", corr.sweep, "distance: K_r|B_r| over --r0-list; angle: |B_theta| against m");
  corr_cmd->add_option("--elements", corr.n, "Array size N")->capture_default_str();
  corr_cmd->add_option("--freq", corr.freq, "Carrier frequency in Hz")->capture_default_str();
  corr_cmd->add_option("--mean-angle", corr.mean_angle, "Mean physical angle in radians")->capture_default_str();
  corr_cmd->add_option("--sigma-phi", corr.sigma_phi, "Angular spread in radians")->capture_default_str();
  corr_cmd->add_option("--r0", corr.r0, "Mean distance in meters, or inf")->capture_default_str();
  corr_cmd->add_option("--sigma-psi", corr.sigma_psi, "Distance spread in meters")->capture_default_str();
  corr_cmd->add_option("--theta", corr.theta, "Fixed spatial angle for the distance model")->capture_default_str();
  corr_cmd->add_option("--draws", corr.draws, "Monte-Carlo draws")->capture_default_str();
  corr_cmd->add_option("--seed", corr.seed, "Monte-Carlo seed")->capture_default_str();
  corr_cmd->add_option("--m", corr.m_index, "Row element for the distance sweep")->capture_default_str();
  corr_cmd->add_option("--n", corr.n_index, "Column (reference) element for sweeps")->capture_default_str();
  corr_cmd->add_option("--r0-list", corr.r0_list, "Distances for sweeps")->delimiter(',');
  corr_cmd->add_flag("--printed-form", corr.printed, "Use the closed form exactly as printed");
  corr_cmd->add_option("--out", corr.out, "Output CSV (stdout when omitted)");

  EstimateArgs est;
  auto* est_cmd = app.add_subcommand("estimate", "Per-sample NMSE of a classical estimator on the test split");
  add_common(est_cmd, est.common);
  est_cmd->add_option("--method", est.method, "ls | lmmse | omp")->capture_default_str();
  est_cmd->add_option("--snr", est.snr, "SNR in dB")->capture_default_str();
  est_cmd->add_option("--out", est.out, "Output CSV (stdout when omitted)");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a network and keep the best-test checkpoint");
  add_common(train_cmd, tr.common);
  train_cmd->add_option("--variant", tr.variant, "mssan | san | cnn");
  train_cmd->add_option("--epochs", tr.epochs, "Override the epoch count");
  train_cmd->add_flag("--quiet", tr.quiet, "No per-epoch log");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "NMSE and spectral efficiency per method and SNR");
  add_common(eval_cmd, ev.common);
  eval_cmd->add_option("--methods", ev.methods, "Comma-separated methods")->delimiter(',');
  eval_cmd->add_option("--snr", ev.snrs, "Comma-separated SNRs in dB")->delimiter(',');
  eval_cmd->add_flag("--timing", ev.timing, "Record wall time (makes the CSV run-dependent)");
  eval_cmd->add_option("--out", ev.out, "Metrics CSV (default <run>/metrics.csv)");

  DescribeArgs desc;
  auto* desc_cmd = app.add_subcommand("describe", "Print a network's configuration, stage shapes and size");
  add_common(desc_cmd, desc.common);
  desc_cmd->add_option("--variant", desc.variant, "mssan | san | cnn");

  CLI11_PARSE(app, argc, argv);
  try {
    if (gen_cmd->parsed()) return run_gen_data(gen);
    if (corr_cmd->parsed()) return run_corr(corr);
    if (est_cmd->parsed()) return run_estimate(est);
    if (train_cmd->parsed()) return run_train(tr);
    if (eval_cmd->parsed()) return run_eval(ev);
    if (desc_cmd->parsed()) return run_describe(desc);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
