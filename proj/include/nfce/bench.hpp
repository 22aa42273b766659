#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "nfce/dataset.hpp"
#include "nfce/network.hpp"

namespace nfce::bench {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 8;
  double base_lr = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::uint64_t seed = 1;
  std::vector<double> snr_set;  // training samples kept by SNR; empty keeps all

  void validate() const;
};

struct EvalConfig {
  std::vector<std::string> methods{"ls", "lmmse", "omp", "mssan", "cnn"};
  std::vector<double> snr_db{-10.0, -5.0, 0.0, 5.0, 10.0};
  std::uint64_t seed = 7;
  int omp_angle_oversampling = 2;  // angle grid = oversampling * N
  int omp_max_paths = 12;
  bool timing = false;  // wall time column; zero keeps the CSV reproducible
  int threads = 0;      // 0 = hardware concurrency

  void validate() const;
};

/// Every setting one CLI run needs.
struct RunConfig {
  std::string profile = "desk";
  DatasetConfig dataset;
  net::NetworkConfig network;
  TrainConfig train;
  EvalConfig eval;
  std::filesystem::path data_dir = "data";
  std::filesystem::path run_dir = "run";
};

/// Nr=32, Nt=4, 2000 samples, 30 epochs, C=16, blocks {1,1,2,1}.
RunConfig desk_profile();
/// Nr=256, Nt=8, 120 epochs, batch 32, C=32.
RunConfig paper_profile();
RunConfig profile_by_name(const std::string& name);

/// Starts from the named "profile" (default desk) and overrides every key present.
/// Unknown keys are rejected.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& file);
nlohmann::json to_json(const RunConfig& cfg);

/// gamma0/(6-t) for t <= 5, (gamma0/2)(1 + cos((t-5) pi/(T-4))) afterwards.
/// Runs shorter than 6 epochs stop inside the warmup.
double lr_schedule(int epoch, double base_lr, int total_epochs);

/// ||H - H_est||_F^2 / ||H||_F^2. Throws std::domain_error for a zero H.
double nmse(const CMatrix& truth, const CMatrix& estimate);
double to_db(double linear);

/// log2(1 + tr(H_est H^H H H_est^H) / (noise_power tr(H_est H_est^H))), MRT with the estimate.
/// Throws std::domain_error for a zero estimate or non-positive noise power.
double spectral_efficiency(const CMatrix& truth, const CMatrix& estimate, double noise_power);

/// [Nr, Nt, 2] real view of a complex matrix, and back.
template <typename T>
ad::Tensor<T> to_tensor(const CMatrix& m);
template <typename T>
CMatrix from_tensor(const ad::Tensor<T>& t);

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double test_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  int best_epoch = 0;  // 0 when no epoch ran
  double best_test_loss = 0.0;
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
};

using ProgressFn = std::function<void(const EpochRecord&)>;

std::filesystem::path checkpoint_path(const RunConfig& cfg, net::Variant variant);
std::filesystem::path loss_curve_path(const RunConfig& cfg, net::Variant variant);

/// Trains cfg.network.variant on the dataset in cfg.data_dir in 32-bit
/// precision. Writes the best-test checkpoint and the loss curve CSV.
TrainResult train(const RunConfig& cfg, const ProgressFn& progress = nullptr);
/// Same, on an in-memory dataset.
TrainResult train(const RunConfig& cfg, const Dataset& data, const ProgressFn& progress = nullptr);

struct MetricRecord {
  std::string method;
  double snr_db = 0.0;
  double nmse_linear = 0.0;
  double nmse_db = 0.0;
  double se_bits = 0.0;
  std::size_t samples = 0;
  double seconds = 0.0;
  std::vector<double> sample_nmse;  // per test sample, in dataset order; not written to CSV
};

/// Noisy observations are regenerated from the test truth at each SNR with
/// unitary DFT pilots; one record per (method, SNR).
std::vector<MetricRecord> evaluate(const RunConfig& cfg, const Dataset& data);
std::vector<MetricRecord> evaluate(const RunConfig& cfg);

void write_metrics_csv(const std::filesystem::path& file, const std::vector<MetricRecord>& records);
void write_loss_csv(const std::filesystem::path& file, const std::vector<EpochRecord>& history);

}  // namespace nfce::bench
