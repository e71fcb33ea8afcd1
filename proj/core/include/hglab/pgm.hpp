#pragma once

#include <string>

#include "hglab/raster.hpp"

namespace hglab {

// Binary PGM (P5, maxval 255); intensities scaled to 0..255.
void write_pgm(const std::string& path, const GlyphBitmap& b);

// Reads a P5 file back into a bitmap (render provenance fields are left
// at their defaults).
GlyphBitmap read_pgm(const std::string& path);

}  // namespace hglab
