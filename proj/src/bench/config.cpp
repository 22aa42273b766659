#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "nfce/bench.hpp"

namespace nfce::bench {
namespace {

using nlohmann::json;

void reject_unknown(const json& given, const json& known, const std::string& section) {
  if (!given.is_object()) throw std::invalid_argument("config: section '" + section + "' must be an object");
  for (const auto& [key, value] : given.items())
    if (!known.contains(key)) throw std::invalid_argument("config: unknown key '" + section + "." + key + "'");
}

// Shallow merge of `overrides` onto the serialized defaults.
json merged(const json& defaults, const json& j, const std::string& section) {
  if (!j.contains(section)) return defaults;
  reject_unknown(j.at(section), defaults, section);
  json out = defaults;
  out.update(j.at(section));
  return out;
}

json to_json(const net::NetworkConfig& n) {
  return json{{"variant", net::to_string(n.variant)},
              {"embed_features", n.embed_features},
              {"blocks", n.blocks},
              {"heads", n.heads},
              {"san_features", n.san_features},
              {"san_blocks", n.san_blocks},
              {"san_heads", n.san_heads},
              {"cnn_features", n.cnn_features},
              {"cnn_depth", n.cnn_depth}};
}

net::NetworkConfig network_from_json(const json& j) {
  net::NetworkConfig n;
  n.variant = net::variant_from_string(j.at("variant").get<std::string>());
  n.embed_features = j.at("embed_features").get<int>();
  n.blocks = j.at("blocks").get<std::array<int, 4>>();
  n.heads = j.at("heads").get<std::array<int, 4>>();
  n.san_features = j.at("san_features").get<int>();
  n.san_blocks = j.at("san_blocks").get<int>();
  n.san_heads = j.at("san_heads").get<int>();
  n.cnn_features = j.at("cnn_features").get<int>();
  n.cnn_depth = j.at("cnn_depth").get<int>();
  return n;
}

json to_json(const TrainConfig& t) {
  return json{{"epochs", t.epochs},     {"batch_size", t.batch_size},     {"base_lr", t.base_lr},
              {"momentum", t.momentum}, {"weight_decay", t.weight_decay}, {"seed", t.seed},
              {"snr_set", t.snr_set}};
}

TrainConfig train_from_json(const json& j) {
  TrainConfig t;
  t.epochs = j.at("epochs").get<int>();
  t.batch_size = j.at("batch_size").get<int>();
  t.base_lr = j.at("base_lr").get<double>();
  t.momentum = j.at("momentum").get<double>();
  t.weight_decay = j.at("weight_decay").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.snr_set = j.at("snr_set").get<std::vector<double>>();
  return t;
}

json to_json(const EvalConfig& e) {
  return json{{"methods", e.methods},
              {"snr_db", e.snr_db},
              {"seed", e.seed},
              {"omp_angle_oversampling", e.omp_angle_oversampling},
              {"omp_max_paths", e.omp_max_paths},
              {"timing", e.timing},
              {"threads", e.threads}};
}

EvalConfig eval_from_json(const json& j) {
  EvalConfig e;
  e.methods = j.at("methods").get<std::vector<std::string>>();
  e.snr_db = j.at("snr_db").get<std::vector<double>>();
  e.seed = j.at("seed").get<std::uint64_t>();
  e.omp_angle_oversampling = j.at("omp_angle_oversampling").get<int>();
  e.omp_max_paths = j.at("omp_max_paths").get<int>();
  e.timing = j.at("timing").get<bool>();
  e.threads = j.at("threads").get<int>();
  return e;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(base_lr > 0.0)) throw std::invalid_argument("train: base_lr must be positive");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("train: momentum must lie in [0, 1)");
  if (weight_decay < 0.0) throw std::invalid_argument("train: weight_decay must be >= 0");
}

void EvalConfig::validate() const {
  static const std::vector<std::string> known{"ls", "lmmse", "omp", "mssan", "san", "cnn"};
  if (methods.empty()) throw std::invalid_argument("eval: no methods");
  for (const auto& m : methods)
    if (std::find(known.begin(), known.end(), m) == known.end())
      throw std::invalid_argument("eval: unknown method '" + m + "'");
  if (snr_db.empty()) throw std::invalid_argument("eval: snr_db is empty");
  if (omp_angle_oversampling < 1) throw std::invalid_argument("eval: omp_angle_oversampling must be >= 1");
  if (omp_max_paths < 1) throw std::invalid_argument("eval: omp_max_paths must be >= 1");
  if (threads < 0) throw std::invalid_argument("eval: threads must be >= 0");
}

RunConfig desk_profile() {
  RunConfig c;
  c.profile = "desk";
  c.dataset.nr = 32;
  c.dataset.nt = 4;
  c.dataset.sample_count = 2000;
  // Near-field region of the smaller array: Rayleigh distance 3.24 m.
  c.dataset.r_min = 1.0;
  c.dataset.r_max = 3.0;
  c.dataset.snr_db = {5.0};
  c.network.nr = 32;
  c.network.nt = 4;
  c.network.embed_features = 16;
  c.network.san_features = 16;
  c.network.cnn_features = 16;
  c.train.epochs = 30;
  c.train.batch_size = 8;
  return c;
}

RunConfig paper_profile() {
  RunConfig c;
  c.profile = "paper";
  c.dataset.nr = 256;
  c.dataset.nt = 8;
  c.dataset.r_min = 3.0;
  c.dataset.r_max = 174.24;
  c.network.nr = 256;
  c.network.nt = 8;
  c.train.epochs = 120;
  c.train.batch_size = 32;
  return c;
}

RunConfig profile_by_name(const std::string& name) {
  if (name == "desk") return desk_profile();
  if (name == "paper") return paper_profile();
  throw std::invalid_argument("unknown profile '" + name + "' (expected desk or paper)");
}

RunConfig run_config_from_json(const json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  const json top_keys{{"profile", 0}, {"dataset", 0}, {"network", 0}, {"train", 0},
                      {"eval", 0},    {"data_dir", 0}, {"run_dir", 0}};
  reject_unknown(j, top_keys, "config");
  RunConfig base = profile_by_name(j.value("profile", std::string("desk")));
  RunConfig c = base;
  c.dataset = dataset_config_from_json(merged(nfce::to_json(base.dataset), j, "dataset"));
  c.network = network_from_json(merged(to_json(base.network), j, "network"));
  c.train = train_from_json(merged(to_json(base.train), j, "train"));
  c.eval = eval_from_json(merged(to_json(base.eval), j, "eval"));
  c.network.nr = c.dataset.nr;
  c.network.nt = c.dataset.nt;
  if (j.contains("data_dir")) c.data_dir = j.at("data_dir").get<std::string>();
  if (j.contains("run_dir")) c.run_dir = j.at("run_dir").get<std::string>();
  c.network.validate();
  c.train.validate();
  c.eval.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot open config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + file.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

nlohmann::json to_json(const RunConfig& cfg) {
  return json{{"profile", cfg.profile},
              {"dataset", nfce::to_json(cfg.dataset)},
              {"network", to_json(cfg.network)},
              {"train", to_json(cfg.train)},
              {"eval", to_json(cfg.eval)},
              {"data_dir", cfg.data_dir.string()},
              {"run_dir", cfg.run_dir.string()}};
}

double lr_schedule(int epoch, double base_lr, int total_epochs) {
  if (epoch < 1 || epoch > total_epochs)
    throw std::out_of_range("lr_schedule: epoch " + std::to_string(epoch) + " outside [1, " +
                            std::to_string(total_epochs) + "]");
  if (epoch <= 5) return base_lr / (6.0 - epoch);
  return base_lr / 2.0 * (1.0 + std::cos((epoch - 5) * kPi / (total_epochs - 4)));
}

}  // namespace nfce::bench
