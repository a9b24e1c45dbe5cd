#pragma once

#include "net.hpp"
#include "run_config.hpp"

#include <filesystem>

namespace mtra {

/// Checkpoint archive layout (little-endian):
///   "MTRA1\n"
///   u32 config_len, config text (RunConfig::to_text)
///   u64 seed
///   u32 entry_count, then per entry:
///     u32 name_len, name, u8 kind (0 parameter, 1 buffer), u8 dtype (0 f32, 1 f64, 2 i64),
///     u32 ndim, i64 dims[ndim], raw data
inline constexpr char kCheckpointMagic[] = "MTRA1\n";

struct Checkpoint {
    RunConfig config;
    net::MtraUnet model{nullptr};
};

void save_checkpoint(const std::filesystem::path& path, const RunConfig& config, net::MtraUnet& model);

/// Throws RuntimeError for unreadable files and ValidationError for a bad
/// magic string or a tensor that does not fit the echoed configuration.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mtra
