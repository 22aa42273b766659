#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "nfce/dataset.hpp"
#include "nfce/pilot.hpp"

namespace nfce {
namespace {

constexpr std::array<char, 4> kMagic{'N', 'F', 'C', 'D'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "dataset I/O assumes a little-endian host");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("dataset: truncated file");
  return value;
}

CMatrix round_to_f32(const CMatrix& m) {
  return m.unaryExpr([](const cd& z) {
    return cd(static_cast<float>(z.real()), static_cast<float>(z.imag()));
  });
}

void write_matrix(std::ostream& out, const CMatrix& m) {
  std::vector<float> buf;
  buf.reserve(static_cast<std::size_t>(m.size()) * 2);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      buf.push_back(static_cast<float>(m(r, c).real()));
      buf.push_back(static_cast<float>(m(r, c).imag()));
    }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

CMatrix read_matrix(std::istream& in, int nr, int nt) {
  std::vector<float> buf(static_cast<std::size_t>(nr) * nt * 2);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (!in) throw std::runtime_error("dataset: truncated sample");
  CMatrix m(nr, nt);
  std::size_t k = 0;
  for (int r = 0; r < nr; ++r)
    for (int c = 0; c < nt; ++c, k += 2) m(r, c) = cd(buf[k], buf[k + 1]);
  return m;
}

}  // namespace

double sample_snr_db(const DatasetConfig& cfg, std::int64_t index) {
  return cfg.snr_db[static_cast<std::size_t>(index) % cfg.snr_db.size()];
}

ChannelRealization generate_channel(const DatasetConfig& cfg, std::int64_t index) {
  Rng rng = make_stream(cfg.seed, stream::kPaths, static_cast<std::uint64_t>(index));
  auto paths = sample_paths(cfg, rng);
  ChannelRealization ch = channel_matrix(paths, cfg.rx_geometry(), cfg.tx_geometry());
  if (cfg.normalize_power) {
    const double norm = ch.matrix.norm();
    if (norm > 0.0) ch.matrix *= std::sqrt(static_cast<double>(cfg.nr) * cfg.nt) / norm;
  }
  return ch;
}

Dataset generate_dataset(const DatasetConfig& cfg) {
  cfg.validate();
  const auto beams = pilot::make_beams(cfg.nr, cfg.nt, cfg.nr, cfg.nt, 1.0, pilot::BeamKind::Dft);
  const std::int64_t n_train = cfg.train_count();

  Dataset data;
  for (DatasetSplit* s : {&data.train, &data.test}) {
    s->nr = cfg.nr;
    s->nt = cfg.nt;
  }
  for (std::int64_t i = 0; i < cfg.sample_count; ++i) {
    const ChannelRealization ch = generate_channel(cfg, i);
    const double snr = sample_snr_db(cfg, i);
    const double noise_power = std::pow(10.0, -snr / 10.0);
    Rng noise = make_stream(cfg.seed, stream::kNoise, static_cast<std::uint64_t>(i));
    const auto obs = pilot::observe(ch.matrix, beams, noise_power, noise);
    DatasetSplit& split = i < n_train ? data.train : data.test;
    split.truth.push_back(round_to_f32(ch.matrix));
    split.ls_input.push_back(round_to_f32(pilot::ls_estimate(obs)));
    split.snr_db.push_back(snr);
  }
  return data;
}

void write_split(const std::filesystem::path& file, const DatasetSplit& split) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("dataset: cannot open " + file.string() + " for writing");
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(split.nr));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(split.nt));
  put<std::uint64_t>(out, split.size());
  for (std::size_t i = 0; i < split.size(); ++i) {
    write_matrix(out, split.truth[i]);
    write_matrix(out, split.ls_input[i]);
  }
  if (!out) throw std::runtime_error("dataset: write failed for " + file.string());
}

DatasetSplit read_split(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("dataset: cannot open " + file.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw std::runtime_error("dataset: bad magic in " + file.string());
  const auto version = get<std::uint32_t>(in);
  if (version != kVersion) throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
  DatasetSplit split;
  split.nr = static_cast<int>(get<std::uint32_t>(in));
  split.nt = static_cast<int>(get<std::uint32_t>(in));
  const auto count = get<std::uint64_t>(in);
  split.truth.reserve(count);
  split.ls_input.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    split.truth.push_back(read_matrix(in, split.nr, split.nt));
    split.ls_input.push_back(read_matrix(in, split.nr, split.nt));
  }
  return split;
}

void write_dataset(const std::filesystem::path& dir, const DatasetConfig& cfg, const Dataset& data) {
  std::filesystem::create_directories(dir);
  write_split(dir / "train.nfcd", data.train);
  write_split(dir / "test.nfcd", data.test);
  nlohmann::json manifest;
  manifest["format"] = "NFCD";
  manifest["version"] = kVersion;
  manifest["config"] = to_json(cfg);
  manifest["seed"] = cfg.seed;
  manifest["train_file"] = "train.nfcd";
  manifest["test_file"] = "test.nfcd";
  manifest["train_count"] = data.train.size();
  manifest["test_count"] = data.test.size();
  manifest["snr_rule"] = "sample i (global index, train first) uses snr_db[i % len(snr_db)]";
  manifest["input"] = "LS estimate, DFT combiner/precoder with Mr=Nr, Mt=Nt, P_t=1, sigma^2=10^(-snr/10)";
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw std::runtime_error("dataset: cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

Dataset read_dataset(const std::filesystem::path& dir, DatasetConfig* cfg_out) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("dataset: missing manifest.json in " + dir.string());
  const auto manifest = nlohmann::json::parse(in);
  const DatasetConfig cfg = dataset_config_from_json(manifest.at("config"));

  Dataset data;
  data.train = read_split(dir / manifest.value("train_file", "train.nfcd"));
  data.test = read_split(dir / manifest.value("test_file", "test.nfcd"));
  if (data.train.nr != cfg.nr || data.train.nt != cfg.nt || data.test.nr != cfg.nr || data.test.nt != cfg.nt)
    throw std::runtime_error("dataset: file dimensions disagree with the manifest");
  const auto n_train = static_cast<std::int64_t>(data.train.size());
  for (std::int64_t i = 0; i < n_train; ++i) data.train.snr_db.push_back(sample_snr_db(cfg, i));
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(data.test.size()); ++i)
    data.test.snr_db.push_back(sample_snr_db(cfg, n_train + i));
  if (cfg_out) *cfg_out = cfg;
  return data;
}

nlohmann::json to_json(const DatasetConfig& cfg) {
  return nlohmann::json{{"nr", cfg.nr},
                        {"nt", cfg.nt},
                        {"carrier_freq", cfg.carrier_freq},
                        {"mean_paths", cfg.mean_paths},
                        {"angle_bound", cfg.angle_bound},
                        {"distance_range", {cfg.r_min, cfg.r_max}},
                        {"snr_db", cfg.snr_db},
                        {"sample_count", cfg.sample_count},
                        {"split_ratio", {cfg.split_train, cfg.split_test}},
                        {"seed", cfg.seed},
                        {"normalize_power", cfg.normalize_power}};
}

DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  DatasetConfig cfg;
  cfg.nr = j.value("nr", cfg.nr);
  cfg.nt = j.value("nt", cfg.nt);
  cfg.carrier_freq = j.value("carrier_freq", cfg.carrier_freq);
  cfg.mean_paths = j.value("mean_paths", cfg.mean_paths);
  cfg.angle_bound = j.value("angle_bound", cfg.angle_bound);
  if (j.contains("distance_range")) {
    const auto& r = j.at("distance_range");
    if (!r.is_array() || r.size() != 2) throw std::invalid_argument("config: distance_range must be [r_min, r_max]");
    cfg.r_min = r[0].get<double>();
    cfg.r_max = r[1].get<double>();
  }
  cfg.snr_db = j.value("snr_db", cfg.snr_db);
  cfg.sample_count = j.value("sample_count", cfg.sample_count);
  if (j.contains("split_ratio")) {
    const auto& s = j.at("split_ratio");
    if (!s.is_array() || s.size() != 2) throw std::invalid_argument("config: split_ratio must be [train, test]");
    cfg.split_train = s[0].get<int>();
    cfg.split_test = s[1].get<int>();
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.normalize_power = j.value("normalize_power", cfg.normalize_power);
  cfg.validate();
  return cfg;
}

}  // namespace nfce
