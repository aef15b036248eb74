#pragma once

#include <string>

#include "specpipe/spectrogram.hpp"

namespace specpipe {

// Raw little-endian float32 values at `path` plus a JSON sidecar at
// `path + ".json"` holding {mode, shape, db_floor, db_ceil}.
void write_tensor(const std::string& path, const SpectrogramTensor& t);
SpectrogramTensor read_tensor(const std::string& path);

}  // namespace specpipe
