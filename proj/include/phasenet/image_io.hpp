#pragma once

#include <filesystem>

#include "phasenet/image.hpp"

namespace phasenet {

/// Reads an 8- or 16-bit grayscale or RGB PNG (alpha dropped, palettes
/// expanded) into [0, 1]. Sample values are taken as stored, without gamma
/// conversion. Throws std::runtime_error on IO or decode errors.
Image read_png(const std::filesystem::path& path);

/// Writes 1- or 3-channel images, clamped to [0, 1] and quantized to
/// `bit_depth` (8 or 16) bits. The file is replaced atomically.
void write_png(const std::filesystem::path& path, const Image& image, int bit_depth = 8);

}  // namespace phasenet
