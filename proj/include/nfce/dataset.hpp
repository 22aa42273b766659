#pragma once

// Training/test pair generation and the binary dataset format.
//
// File layout (little-endian):
//   char[4] "NFCD", u32 version = 1, u32 Nr, u32 Nt, u64 count,
//   then per sample: H_gt, X_in, each Nr*Nt complex values in row-major
//   (receive-major) order as interleaved f32 (re, im).

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "nfce/channel.hpp"

namespace nfce {

struct DatasetSplit {
  int nr = 0;
  int nt = 0;
  std::vector<CMatrix> truth;     // H_gt
  std::vector<CMatrix> ls_input;  // LS estimate of the noisy observation
  std::vector<double> snr_db;     // not stored in the file; follows the manifest rule

  std::size_t size() const { return truth.size(); }
};

struct Dataset {
  DatasetSplit train;
  DatasetSplit test;
};

/// SNR assigned to sample i: snr_db[i % |snr_db|].
double sample_snr_db(const DatasetConfig& cfg, std::int64_t index);

/// One channel realization for global sample index i, scaled to
/// ||H||_F^2 = Nt Nr when cfg.normalize_power is set.
ChannelRealization generate_channel(const DatasetConfig& cfg, std::int64_t index);

/// Builds both splits in memory. Values are rounded to f32 so the in-memory
/// copy equals what read_dataset returns.
Dataset generate_dataset(const DatasetConfig& cfg);

/// Writes <dir>/train.nfcd, <dir>/test.nfcd and <dir>/manifest.json.
void write_dataset(const std::filesystem::path& dir, const DatasetConfig& cfg, const Dataset& data);
void write_split(const std::filesystem::path& file, const DatasetSplit& split);
DatasetSplit read_split(const std::filesystem::path& file);

/// Reads both splits and the manifest's config.
Dataset read_dataset(const std::filesystem::path& dir, DatasetConfig* cfg_out = nullptr);

nlohmann::json to_json(const DatasetConfig& cfg);
DatasetConfig dataset_config_from_json(const nlohmann::json& j);

}  // namespace nfce
