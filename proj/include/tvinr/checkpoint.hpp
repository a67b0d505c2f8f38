#pragma once

#include <cstdint>
#include <string>

#include "tvinr/model.hpp"

namespace tvinr {

// Checkpoint file: magic line `TVINR1`, a structured-text header (dims,
// epoch, rng state, the config echo, and one `tensor <name> <rows> <cols>
// <byte-offset>` line per parameter), then `payload <nbytes>` followed by the
// little-endian float64 payload.

struct CheckpointMeta {
  long epoch = 0;
  double best_val = 0.0;
  std::string rng_state;
};

void save_checkpoint(const std::string& path, const TvInrModel& model,
                     const CheckpointMeta& meta);
TvInrModel load_checkpoint(const std::string& path, CheckpointMeta* meta = nullptr);

/// FNV-1a 64-bit content hash, used for dataset fingerprints in manifests.
std::uint64_t fnv1a_file(const std::string& path);

/// Write text to path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& text);

}  // namespace tvinr
