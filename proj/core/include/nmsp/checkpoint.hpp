#pragma once

#include <filesystem>
#include <string>

#include "nmsp/model.hpp"

namespace nmsp {

inline constexpr char kCheckpointMagic[4] = {'N', 'M', 'S', 'P'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

// Binary layout, all integers and floats little-endian:
//   "NMSP" | u32 version | u32 len, model config text | u32 len, run config text
//   | u32 count | count × (u32 len, name | u32 rank | rank × u64 dim | f64 data...)
// Written to a sibling temporary file and renamed into place.
void save_checkpoint(const std::filesystem::path& path, SpellerModel& model, const std::string& run_config);

struct LoadedCheckpoint {
  ModelConfig config;
  std::string run_config;
};

// Reads the header only.
LoadedCheckpoint read_checkpoint_header(const std::filesystem::path& path);

// Builds a model from the stored config and fills every parameter. Missing,
// extra or mis-shaped tensors are errors.
SpellerModel load_checkpoint(const std::filesystem::path& path, std::string* run_config = nullptr);

// Parameter section only, for comparing parameter values bit for bit.
std::string serialize_parameters(SpellerModel& model);

}  // namespace nmsp
