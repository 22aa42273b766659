#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "nfce/bench.hpp"

namespace nfce::bench {
namespace {

using Tensor = ad::Tensor<float>;

struct Pairs {
  std::vector<Tensor> inputs;
  std::vector<Tensor> targets;
};

Pairs to_pairs(const DatasetSplit& split, const std::vector<double>& snr_set) {
  Pairs p;
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (!snr_set.empty() && std::find(snr_set.begin(), snr_set.end(), split.snr_db[i]) == snr_set.end()) continue;
    p.inputs.push_back(to_tensor<float>(split.ls_input[i]));
    p.targets.push_back(to_tensor<float>(split.truth[i]));
  }
  return p;
}

double mean_loss(const net::Network<float>& model, const Pairs& data) {
  ad::NoGradGuard no_grad;
  double total = 0.0;
  for (std::size_t i = 0; i < data.inputs.size(); ++i)
    total += ad::mse_loss(model.forward(data.inputs[i]), data.targets[i]).item();
  return data.inputs.empty() ? 0.0 : total / static_cast<double>(data.inputs.size());
}

}  // namespace

std::filesystem::path checkpoint_path(const RunConfig& cfg, net::Variant variant) {
  return cfg.run_dir / (net::to_string(variant) + ".nfpt");
}

std::filesystem::path loss_curve_path(const RunConfig& cfg, net::Variant variant) {
  return cfg.run_dir / (net::to_string(variant) + "_loss.csv");
}

void write_loss_csv(const std::filesystem::path& file, const std::vector<EpochRecord>& history) {
  std::ofstream out(file, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + file.string());
  out << "epoch,lr,train_loss,test_loss\n";
  char line[160];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.10g,%.10g,%.10g\n", r.epoch, r.lr, r.train_loss, r.test_loss);
    out << line;
  }
}

TrainResult train(const RunConfig& cfg, const ProgressFn& progress) {
  DatasetConfig stored;
  const Dataset data = read_dataset(cfg.data_dir, &stored);
  if (stored.nr != cfg.network.nr || stored.nt != cfg.network.nt)
    throw std::invalid_argument("dataset in " + cfg.data_dir.string() + " is " + std::to_string(stored.nr) + "x" +
                                std::to_string(stored.nt) + ", network expects " + std::to_string(cfg.network.nr) +
                                "x" + std::to_string(cfg.network.nt));
  return train(cfg, data, progress);
}

TrainResult train(const RunConfig& cfg, const Dataset& data, const ProgressFn& progress) {
  const TrainConfig& tc = cfg.train;
  tc.validate();
  const Pairs train_set = to_pairs(data.train, tc.snr_set);
  const Pairs test_set = to_pairs(data.test, {});
  if (tc.epochs > 0 && train_set.inputs.empty()) throw std::invalid_argument("train: no training samples selected");

  net::Network<float> model(cfg.network, tc.seed);
  auto& params = model.params();
  std::filesystem::create_directories(cfg.run_dir);

  TrainResult result;
  result.checkpoint = checkpoint_path(cfg, cfg.network.variant);
  result.loss_csv = loss_curve_path(cfg, cfg.network.variant);
  if (tc.epochs == 0) ad::save_checkpoint(params, result.checkpoint);

  std::vector<std::size_t> order(train_set.inputs.size());
  for (int epoch = 1; epoch <= tc.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, tc.base_lr, tc.epochs);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle = make_stream(tc.seed, stream::kShuffle, static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle);

    double train_total = 0.0;
    const auto batch = static_cast<std::size_t>(tc.batch_size);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const float weight = 1.0f / static_cast<float>(stop - start);
      params.zero_grad();
      for (std::size_t b = start; b < stop; ++b) {
        const std::size_t i = order[b];
        const auto loss = ad::mse_loss(model.forward(train_set.inputs[i]), train_set.targets[i]);
        train_total += loss.item();
        ad::backward(ad::scale(loss, weight));
      }
      ad::sgd_momentum_step(params, static_cast<float>(lr), static_cast<float>(tc.momentum),
                            static_cast<float>(tc.weight_decay));
    }

    EpochRecord rec{epoch, lr, train_total / static_cast<double>(order.size()), mean_loss(model, test_set)};
    result.history.push_back(rec);
    if (result.best_epoch == 0 || rec.test_loss < result.best_test_loss) {
      result.best_epoch = epoch;
      result.best_test_loss = rec.test_loss;
      ad::save_checkpoint(params, result.checkpoint);
    }
    if (progress) progress(rec);
  }
  write_loss_csv(result.loss_csv, result.history);
  return result;
}

}  // namespace nfce::bench
